//! Pointer trajectories in the normalized screen frame and the motion
//! features computed from them.
//!
//! The frame has `(0, 0)` at the screen center and `(1, 1)` at the top-right
//! corner. Every trial starts with the cursor parked at [`DEFAULT_START`].

mod features;

pub use features::{
    area_under_curve, max_acceleration, max_velocity, stopping_distance, total_distance,
    AccelerationMode, FeatureVector,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Cursor start position for every trial.
pub const DEFAULT_START: Point = Point { x: 0.0, y: -0.8 };

/// Chord endpoints closer than this are treated as coincident.
pub const DEGENERATE_CHORD_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("trajectory has {found} samples, at least {required} required")]
    TooFewSamples { required: usize, found: usize },
    #[error("non-positive sample interval at index {index} ({dt} ms)")]
    NonPositiveInterval { index: usize, dt: f64 },
    #[error("chord endpoints coincide")]
    DegenerateChord,
    #[error("sample {index} has non-finite or negative timestamp or coordinate")]
    InvalidSample { index: usize },
    #[error("stopping distance requested for a go trial")]
    NotAStopTrial,
    #[error("stop onset must be finite and non-negative, got {0}")]
    InvalidStopOnset(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }
}

/// One cursor sample: `t` in milliseconds since trial onset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl PointerSample {
    pub const fn new(t: f64, x: f64, y: f64) -> Self {
        Self { t, x, y }
    }

    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// A validated trial trajectory.
///
/// Construction enforces finite values, `t ≥ 0` and strictly increasing
/// timestamps, so every feature can assume positive sample intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<PointerSample>,
    start: Point,
    target: Option<Point>,
}

impl Trajectory {
    pub fn new(samples: Vec<PointerSample>) -> Result<Self, TrajectoryError> {
        Self::with_endpoints(samples, DEFAULT_START, None)
    }

    pub fn with_endpoints(
        samples: Vec<PointerSample>,
        start: Point,
        target: Option<Point>,
    ) -> Result<Self, TrajectoryError> {
        for (i, s) in samples.iter().enumerate() {
            if !(s.t.is_finite() && s.x.is_finite() && s.y.is_finite()) || s.t < 0.0 {
                return Err(TrajectoryError::InvalidSample { index: i });
            }
            if i > 0 && s.t <= samples[i - 1].t {
                return Err(TrajectoryError::NonMonotonic {
                    index: i,
                    previous_ms: samples[i - 1].t,
                    current_ms: s.t,
                });
            }
        }
        if !(start.x.is_finite() && start.y.is_finite()) {
            return Err(TrajectoryError::InvalidEndpoint("start"));
        }
        if let Some(p) = target {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(TrajectoryError::InvalidEndpoint("target"));
            }
        }
        Ok(Self { samples, start, target })
    }

    pub fn samples(&self) -> &[PointerSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start(&self) -> Point {
        self.start
    }

    pub fn target(&self) -> Option<Point> {
        self.target
    }

    /// End of the AUC chord: the clicked button, or the last sample when
    /// there was no click. The flag is `true` for the fallback.
    pub fn chord_end(&self) -> Option<(Point, bool)> {
        match self.target {
            Some(t) => Some((t, false)),
            None => self.samples.last().map(|s| (s.point(), true)),
        }
    }

    /// Computes every feature. `stop_onset` is the stop-signal delay for stop
    /// trials and `None` for go trials.
    pub fn features(
        &self,
        stop_onset: Option<f64>,
        mode: AccelerationMode,
    ) -> Result<FeatureVector, FeatureError> {
        FeatureVector::compute(self, stop_onset, mode)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("sample {index}: timestamp {current_ms} ms does not increase past {previous_ms} ms")]
    NonMonotonic { index: usize, previous_ms: f64, current_ms: f64 },
    #[error("sample {index} has a negative timestamp or a non-finite value")]
    InvalidSample { index: usize },
    #[error("{0} point is not finite")]
    InvalidEndpoint(&'static str),
}
