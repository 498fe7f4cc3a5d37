//! Statistical procedures used on subject-level metrics.
//!
//! All functions are pure and operate on immutable inputs.

mod anova;
mod contrast;
pub mod dist;
mod moderation;
mod sem;
mod transform;

pub use anova::{rm_anova_one_way, rm_anova_two_factor, AnovaTable, EffectRow, OneWayRm, TwoFactorData};
pub use contrast::{within_subject_contrast, ContrastPreset, ContrastResult, SubjectScoreTest};
pub use moderation::{
    ols, parallel_moderation, CoefRow, ConditionalEffect, InteractionTest, ModerationResult, OlsFit,
};
pub use sem::within_subject_sem;
pub use transform::{average_ranks, rank_inverse_normal, BLOM_OFFSET};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("contrast weights sum to {0}, not 0")]
    WeightsNotCentered(f64),
    #[error("unbalanced design: {0}")]
    UnbalancedDesign(String),
    #[error("design matrix is singular (collinear predictors)")]
    SingularDesign,
    #[error("predictor `{0}` is constant")]
    ConstantPredictor(String),
    #[error("need n > {required}, got {found}")]
    InsufficientN { required: usize, found: usize },
}

/// Complete subjects × conditions table of one measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionMatrix {
    subjects: Vec<String>,
    conditions: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl ConditionMatrix {
    pub fn new(subjects: Vec<String>, conditions: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        if subjects.len() < 2 || conditions.len() < 2 {
            return Err(StatsError::ShapeMismatch(format!(
                "need at least 2 subjects and 2 conditions, got {}×{}",
                subjects.len(),
                conditions.len()
            )));
        }
        if values.len() != subjects.len() || values.iter().any(|r| r.len() != conditions.len()) {
            return Err(StatsError::ShapeMismatch("values must be subjects × conditions".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        Ok(Self { subjects, conditions, values })
    }

    /// Labels default to `s0…`, `c0…`.
    pub fn from_rows(values: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        let n = values.len();
        let k = values.first().map_or(0, Vec::len);
        Self::new(
            (0..n).map(|i| format!("s{i}")).collect(),
            (0..k).map(|j| format!("c{j}")).collect(),
            values,
        )
    }

    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn n_conditions(&self) -> usize {
        self.conditions.len()
    }

    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn conditions(&self) -> &[String] {
        &self.conditions
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn condition_means(&self) -> Vec<f64> {
        let n = self.n_subjects() as f64;
        (0..self.n_conditions())
            .map(|j| self.values.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect()
    }
}
