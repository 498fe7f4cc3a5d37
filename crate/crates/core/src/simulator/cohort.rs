use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{stream_seed, subject_seed, tasks::simulate_session, CohortSpec, SimError, SubjectParams};
use crate::session::SessionLog;

/// A scalar parameter distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum Dist {
    Fixed { value: f64 },
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
    /// `10^N(mean, sd)`.
    Log10Normal { mean: f64, sd: f64 },
}

impl Dist {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = match *self {
            Dist::Fixed { value } => value.is_finite(),
            Dist::Normal { mean, sd } | Dist::Log10Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd >= 0.0,
            Dist::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
        };
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidSpec(format!("bad distribution {self:?}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Dist::Fixed { value } => value,
            Dist::Normal { mean, sd } => Normal::new(mean, sd).expect("validated").sample(rng),
            Dist::Uniform { low, high } => {
                if low == high {
                    low
                } else {
                    rng.random_range(low..high)
                }
            }
            Dist::Log10Normal { mean, sd } => 10f64.powf(Normal::new(mean, sd).expect("validated").sample(rng)),
        }
    }
}

/// Between-subject variation. Unset fields keep the `base` value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ParamDistributions {
    pub base: SubjectParams,
    pub go_mu: Option<Dist>,
    pub go_sigma: Option<Dist>,
    pub go_tau: Option<Dist>,
    pub ssrt_true: Option<Dist>,
    pub ssrt_sd: Option<Dist>,
    pub motor_lag: Option<Dist>,
    pub k_true: Option<Dist>,
    pub beta_true: Option<Dist>,
    pub velocity_jitter: Option<Dist>,
    pub lapse_rate: Option<Dist>,
    pub scale_scores: BTreeMap<String, Dist>,
}

impl ParamDistributions {
    fn dists(&self) -> impl Iterator<Item = &Dist> {
        [
            &self.go_mu,
            &self.go_sigma,
            &self.go_tau,
            &self.ssrt_true,
            &self.ssrt_sd,
            &self.motor_lag,
            &self.k_true,
            &self.beta_true,
            &self.velocity_jitter,
            &self.lapse_rate,
        ]
        .into_iter()
        .flatten()
        .chain(self.scale_scores.values())
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.base.validate()?;
        self.dists().try_for_each(Dist::validate)
    }

    /// Draws one subject. Draw order is fixed so results only depend on the seed.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> SubjectParams {
        let mut p = self.base.clone();
        fn set<R: Rng + ?Sized>(rng: &mut R, d: &Option<Dist>, slot: &mut f64, lo: f64, hi: f64) {
            if let Some(d) = d {
                *slot = d.sample(rng).clamp(lo, hi);
            }
        }
        set(rng, &self.go_mu, &mut p.go_rt.mu, f64::MIN, f64::MAX);
        set(rng, &self.go_sigma, &mut p.go_rt.sigma, 0.0, f64::MAX);
        set(rng, &self.go_tau, &mut p.go_rt.tau, 0.0, f64::MAX);
        if let Some(d) = &self.ssrt_true {
            p.ssrt_true = Some(d.sample(rng).max(0.0));
        }
        set(rng, &self.ssrt_sd, &mut p.ssrt_sd, 0.0, f64::MAX);
        set(rng, &self.motor_lag, &mut p.motor_lag, 0.0, f64::MAX);
        set(rng, &self.k_true, &mut p.k_true, 1e-12, f64::MAX);
        set(rng, &self.beta_true, &mut p.beta_true, 1e-12, f64::MAX);
        set(rng, &self.velocity_jitter, &mut p.velocity_jitter, 0.0, f64::MAX);
        set(rng, &self.lapse_rate, &mut p.lapse_rate, 0.0, 1.0);
        for (name, d) in &self.scale_scores {
            p.scale_scores.insert(name.clone(), d.sample(rng));
        }
        p
    }
}

/// The generating parameters of one simulated subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub subject_id: String,
    pub subject_seed: u64,
    pub ssrt_true: Option<f64>,
    pub ssrt_sd: f64,
    pub go_mu: f64,
    pub go_sigma: f64,
    pub go_tau: f64,
    pub motor_lag: f64,
    pub k_true: f64,
    pub beta_true: f64,
    pub curvature: f64,
    pub velocity_jitter: f64,
    pub lapse_rate: f64,
}

impl GroundTruth {
    fn new(subject_id: &str, seed: u64, p: &SubjectParams) -> Self {
        Self {
            subject_id: subject_id.to_string(),
            subject_seed: seed,
            ssrt_true: p.ssrt_true,
            ssrt_sd: p.ssrt_sd,
            go_mu: p.go_rt.mu,
            go_sigma: p.go_rt.sigma,
            go_tau: p.go_rt.tau,
            motor_lag: p.motor_lag,
            k_true: p.k_true,
            beta_true: p.beta_true,
            curvature: p.curvature,
            velocity_jitter: p.velocity_jitter,
            lapse_rate: p.lapse_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Cohort {
    pub sessions: Vec<SessionLog>,
    pub truth: Vec<GroundTruth>,
}

pub fn subject_label(index: usize) -> String {
    format!("sub-{:04}", index + 1)
}

pub fn simulate_cohort(spec: &CohortSpec, dists: &ParamDistributions) -> Result<Cohort, SimError> {
    if spec.n_subjects == 0 {
        return Ok(Cohort::default());
    }
    spec.validate()?;
    dists.validate()?;
    let mut cohort = Cohort::default();
    for i in 0..spec.n_subjects {
        let (session, truth) = simulate_subject(spec, dists, i)?;
        cohort.sessions.push(session);
        cohort.truth.push(truth);
    }
    Ok(cohort)
}

/// Subject `index` of the cohort described by `spec`; independent of every
/// other subject, so cohorts can be generated in any order or in parallel.
pub fn simulate_subject(
    spec: &CohortSpec,
    dists: &ParamDistributions,
    index: usize,
) -> Result<(SessionLog, GroundTruth), SimError> {
    let seed = subject_seed(spec.seed, index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, 0));
    let params = dists.draw(&mut rng);
    let id = subject_label(index);
    let session = simulate_session(&params, spec, &id, seed)?;
    Ok((session, GroundTruth::new(&id, seed, &params)))
}
