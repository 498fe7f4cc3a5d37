//! In-memory session and trial records.
//!
//! These are the validated forms; the JSON wire representation and its
//! parser live in `io::schema`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::trajectory::{Point, Trajectory};

/// Wire-format version written by this crate.
pub const SCHEMA_VERSION: u32 = 1;
/// Response-window cap for stop-signal trials (ms).
pub const RESPONSE_CAP_MS: f64 = 3000.0;
/// Stop-signal delays used by the task (ms).
pub const SSD_SET_MS: [u32; 6] = [100, 200, 300, 400, 500, 600];
/// Dot-motion coherence levels (percent).
pub const COHERENCE_SET: [u32; 3] = [10, 50, 80];
/// Response button centers.
pub const LEFT_BUTTON: Point = Point { x: -0.8, y: 0.8 };
pub const RIGHT_BUTTON: Point = Point { x: 0.8, y: 0.8 };

macro_rules! wire_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $s:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $s)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self { $($name::$variant => $s),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($s => Ok($name::$variant),)+
                    other => Err(format!(
                        "unknown {} `{}` (expected one of: {})",
                        stringify!($name),
                        other,
                        [$($s),+].join(", ")
                    )),
                }
            }
        }
    };
}

wire_enum!(Task { Sst => "sst", Ddt => "ddt" });
wire_enum!(Condition { Pleasant => "pleasant", Unpleasant => "unpleasant", Neutral => "neutral" });
wire_enum!(TrialKind { Go => "go", Stop => "stop" });
wire_enum!(Choice { SoonerSmaller => "sooner_smaller", LargerLater => "larger_later" });
wire_enum!(Side { Left => "left", Right => "right" });
wire_enum!(SessionKind { Emotional => "emotional", Neutral => "neutral", Synthetic => "synthetic" });
wire_enum!(Device { Mouse => "mouse", Trackpad => "trackpad", Other => "other" });

impl Side {
    pub fn button(self) -> Point {
        match self {
            Side::Left => LEFT_BUTTON,
            Side::Right => RIGHT_BUTTON,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// The two options of a delay-discounting trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdtOffer {
    pub amount_ss: f64,
    pub delay_ss: f64,
    pub amount_ll: f64,
    pub delay_ll: f64,
    pub is_control: bool,
    pub ll_side: Option<Side>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_id: u32,
    pub task: Task,
    pub condition: Condition,
    pub kind: Option<TrialKind>,
    pub coherence: Option<u32>,
    pub ssd_ms: Option<f64>,
    pub responded: bool,
    pub rt_ms: Option<f64>,
    pub correct: Option<bool>,
    pub choice: Option<Choice>,
    pub offer: Option<DdtOffer>,
    pub valence: Option<f64>,
    pub arousal: Option<f64>,
    pub trajectory: Trajectory,
    /// Fields this version does not interpret, kept for round-tripping.
    pub extra: BTreeMap<String, Value>,
}

impl TrialRecord {
    pub fn is_stop(&self) -> bool {
        self.task == Task::Sst && self.kind == Some(TrialKind::Stop)
    }

    pub fn is_go(&self) -> bool {
        self.task == Task::Sst && self.kind == Some(TrialKind::Go)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub schema_version: u32,
    pub subject_id: String,
    pub session: SessionKind,
    pub device: Device,
    pub created_at: DateTime<Utc>,
    pub trials: Vec<TrialRecord>,
    pub scale_scores: BTreeMap<String, f64>,
    pub extra: BTreeMap<String, Value>,
}

impl SessionLog {
    pub fn trials_for(&self, task: Task) -> impl Iterator<Item = &TrialRecord> {
        self.trials.iter().filter(move |t| t.task == task)
    }

    /// Conditions present in the session, in sorted order.
    pub fn conditions(&self) -> Vec<Condition> {
        let mut c: Vec<_> = self.trials.iter().map(|t| t.condition).collect();
        c.sort();
        c.dedup();
        c
    }
}
