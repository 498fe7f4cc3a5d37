//! Seeded synthetic participants with known ground truth.
//!
//! Go responses follow an ex-Gaussian finishing-time distribution and race
//! an independent stop process that starts at the stop-signal delay.
//! Cursor paths follow a minimum-jerk profile along a half-sine bump from
//! the start position to the clicked button.
//!
//! Seeding: every subject gets `subject_seed(master, index)`, and each task
//! within a subject draws from its own ChaCha8 stream derived from that seed,
//! so subjects can be generated in any order with identical output.

mod cohort;
mod kinematics;
mod tasks;

pub use cohort::{simulate_cohort, simulate_subject, subject_label, Cohort, Dist, GroundTruth, ParamDistributions};
pub use kinematics::{min_jerk_peak_velocity, MovementPlan};
pub use tasks::{simulate_ddt_session, simulate_session, simulate_sst_session};

use std::collections::BTreeMap;

use chrono::{DateTime, TimeZone, Utc};
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discounting::ModelVariant;
use crate::session::{Condition, COHERENCE_SET, SSD_SET_MS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid subject parameters: {0}")]
    InvalidParams(String),
    #[error("invalid cohort spec: {0}")]
    InvalidSpec(String),
}

/// Ex-Gaussian finishing time in ms: Normal(mu, sigma) + Exponential(mean tau).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExGaussian {
    pub mu: f64,
    pub sigma: f64,
    pub tau: f64,
}

impl ExGaussian {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let normal = Normal::new(self.mu, self.sigma).expect("validated sigma");
        let tail = if self.tau > 0.0 { Exp::new(1.0 / self.tau).expect("tau > 0").sample(rng) } else { 0.0 };
        normal.sample(rng) + tail
    }

    pub fn mean(&self) -> f64 {
        self.mu + self.tau
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectParams {
    /// Click time on go trials.
    pub go_rt: ExGaussian,
    /// Mean stop latency in ms; `None` disables the stop process.
    pub ssrt_true: Option<f64>,
    /// SD of stop latency across trials (0 = constant).
    pub ssrt_sd: f64,
    /// Time the cursor keeps moving after the stop process finishes.
    pub motor_lag: f64,
    /// Nominal start-to-button movement duration in ms.
    pub movement_time: f64,
    /// Time to click on delay-discounting trials.
    pub ddt_rt: ExGaussian,
    pub k_true: f64,
    pub beta_true: f64,
    /// Half-sine bump amplitude (normalized units), bending towards the other button.
    pub curvature: f64,
    /// Multiplicative SD of movement speed across trials.
    pub velocity_jitter: f64,
    /// Probability of a random button instead of the intended one.
    pub lapse_rate: f64,
    #[serde(default)]
    pub scale_scores: BTreeMap<String, f64>,
}

impl Default for SubjectParams {
    fn default() -> Self {
        Self {
            go_rt: ExGaussian { mu: 520.0, sigma: 120.0, tau: 100.0 },
            ssrt_true: Some(250.0),
            ssrt_sd: 0.0,
            motor_lag: 60.0,
            movement_time: 350.0,
            ddt_rt: ExGaussian { mu: 1200.0, sigma: 250.0, tau: 300.0 },
            k_true: 0.01,
            beta_true: 1.0,
            curvature: 0.1,
            velocity_jitter: 0.1,
            lapse_rate: 0.02,
            scale_scores: BTreeMap::new(),
        }
    }
}

impl SubjectParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidParams(m.to_string()));
        for (name, g) in [("go_rt", &self.go_rt), ("ddt_rt", &self.ddt_rt)] {
            if !(g.mu.is_finite() && g.sigma.is_finite() && g.tau.is_finite()) || g.sigma < 0.0 || g.tau < 0.0 {
                return bad(&format!("{name} needs finite mu and non-negative sigma, tau"));
            }
        }
        if let Some(s) = self.ssrt_true {
            if !(s.is_finite() && s >= 0.0) {
                return bad("ssrt_true must be finite and non-negative (use null to disable)");
            }
        }
        for (name, v) in [
            ("ssrt_sd", self.ssrt_sd),
            ("motor_lag", self.motor_lag),
            ("velocity_jitter", self.velocity_jitter),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(&format!("{name} must be finite and non-negative"));
            }
        }
        if !(self.movement_time.is_finite() && self.movement_time > 0.0) {
            return bad("movement_time must be positive");
        }
        if !self.curvature.is_finite() {
            return bad("curvature must be finite");
        }
        if !(self.k_true > 0.0 && self.k_true.is_finite() && self.beta_true > 0.0 && self.beta_true.is_finite()) {
            return bad("k_true and beta_true must be positive");
        }
        if !(0.0..=1.0).contains(&self.lapse_rate) {
            return bad("lapse_rate must be in [0, 1]");
        }
        Ok(())
    }
}

/// Per-condition adjustments applied on top of a subject's parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConditionEffect {
    pub ssrt_shift_ms: f64,
    pub motor_lag_shift_ms: f64,
    pub jitter_scale: f64,
}

impl Default for ConditionEffect {
    fn default() -> Self {
        Self { ssrt_shift_ms: 0.0, motor_lag_shift_ms: 0.0, jitter_scale: 1.0 }
    }
}

impl ConditionEffect {
    pub fn apply(&self, p: &SubjectParams) -> SubjectParams {
        SubjectParams {
            ssrt_true: p.ssrt_true.map(|s| (s + self.ssrt_shift_ms).max(0.0)),
            motor_lag: (p.motor_lag + self.motor_lag_shift_ms).max(0.0),
            velocity_jitter: p.velocity_jitter * self.jitter_scale,
            ..p.clone()
        }
    }
}

fn default_created_at() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortSpec {
    pub n_subjects: usize,
    /// Stop-signal trials per condition block.
    pub trials_per_task: usize,
    pub stop_fraction: f64,
    pub ssd_set: Vec<f64>,
    pub coherence_set: Vec<u32>,
    /// One stop-signal block (and one discounting block, if enabled) per entry.
    pub condition_schedule: Vec<Condition>,
    pub include_sst: bool,
    pub include_ddt: bool,
    pub seed: u64,
    pub sample_interval_ms: u32,
    pub ddt_variant: ModelVariant,
    pub created_at: DateTime<Utc>,
    pub condition_effects: BTreeMap<Condition, ConditionEffect>,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self::study1()
    }
}

impl CohortSpec {
    /// 200 stop-signal trials with 25 % stop trials, one neutral block.
    pub fn study1() -> Self {
        Self {
            n_subjects: 1,
            trials_per_task: 200,
            stop_fraction: 0.25,
            ssd_set: SSD_SET_MS.iter().map(|&s| s as f64).collect(),
            coherence_set: COHERENCE_SET.to_vec(),
            condition_schedule: vec![Condition::Neutral],
            include_sst: true,
            include_ddt: true,
            seed: 0,
            sample_interval_ms: 16,
            ddt_variant: ModelVariant::SoftmaxHyperbolic,
            created_at: default_created_at(),
            condition_effects: BTreeMap::new(),
        }
    }

    /// 20 % stop trials in unpleasant, neutral and pleasant blocks.
    pub fn study2() -> Self {
        Self {
            trials_per_task: 100,
            stop_fraction: 0.20,
            condition_schedule: vec![Condition::Unpleasant, Condition::Neutral, Condition::Pleasant],
            ..Self::study1()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidSpec(m.to_string()));
        if !(self.stop_fraction > 0.0 && self.stop_fraction < 1.0) {
            return bad("stop_fraction must be in (0, 1)");
        }
        if self.ssd_set.is_empty() || self.ssd_set.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("ssd_set must be non-empty with non-negative delays");
        }
        if self.coherence_set.is_empty() {
            return bad("coherence_set must be non-empty");
        }
        if self.condition_schedule.is_empty() {
            return bad("condition_schedule must be non-empty");
        }
        if self.sample_interval_ms == 0 {
            return bad("sample_interval_ms must be positive");
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(master ⊕ splitmix64(index))`.
pub fn subject_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

pub(crate) fn stream_seed(subject_seed: u64, tag: u64) -> u64 {
    splitmix64(subject_seed ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}
