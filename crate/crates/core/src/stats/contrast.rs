use serde::{Deserialize, Serialize};

use super::anova::{ratio, rm_anova_one_way};
use super::{dist, ConditionMatrix, StatsError};

/// Named weight vectors over (unpleasant, neutral, pleasant).
///
/// These are reconstructions of the hypothesized trend shapes, not
/// published weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContrastPreset {
    /// Both emotional conditions differ from neutral in the same direction.
    VShape,
    /// Only the unpleasant condition stands out.
    LShapeNegative,
}

impl ContrastPreset {
    pub fn weights(self) -> [f64; 3] {
        match self {
            ContrastPreset::VShape => [1.0, -2.0, 1.0],
            ContrastPreset::LShapeNegative => [2.0, -1.0, -1.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ContrastPreset::VShape => "V_shape",
            ContrastPreset::LShapeNegative => "L_shape_negative",
        }
    }
}

/// One-sample t test on per-subject contrast scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubjectScoreTest {
    pub mean: f64,
    pub se: f64,
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastResult {
    pub weights: Vec<f64>,
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub df: f64,
    pub p: f64,
    /// Subject × condition interaction mean square used as the error term.
    pub ms_error: f64,
    pub ss_contrast: f64,
    pub alt_subject_scores: SubjectScoreTest,
}

/// Planned within-subject contrast tested against the pooled
/// subject × condition error term, with the subject-score t test alongside.
pub fn within_subject_contrast(data: &ConditionMatrix, weights: &[f64]) -> Result<ContrastResult, StatsError> {
    let k = data.n_conditions();
    if weights.len() != k {
        return Err(StatsError::ShapeMismatch(format!("{} weights for {k} conditions", weights.len())));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let sum: f64 = weights.iter().sum();
    if sum.abs() > 1e-10 {
        return Err(StatsError::WeightsNotCentered(sum));
    }
    let n = data.n_subjects() as f64;
    let means = data.condition_means();
    let estimate: f64 = weights.iter().zip(&means).map(|(w, m)| w * m).sum();
    let w2: f64 = weights.iter().map(|w| w * w).sum();
    let anova = rm_anova_one_way(data);
    let se = (anova.ms_error * w2 / n).sqrt();
    let t = ratio(estimate, se);
    let df = anova.df_error;

    let scores: Vec<f64> = data
        .rows()
        .iter()
        .map(|r| r.iter().zip(weights).map(|(y, w)| y * w).sum())
        .collect();
    let mean = scores.iter().sum::<f64>() / n;
    let sd = (scores.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let alt_se = sd / n.sqrt();
    let alt_t = ratio(mean, alt_se);

    Ok(ContrastResult {
        weights: weights.to_vec(),
        estimate,
        se,
        t,
        df,
        p: dist::t_two_sided_p(t, df),
        ms_error: anova.ms_error,
        ss_contrast: ratio(n * estimate * estimate, w2),
        alt_subject_scores: SubjectScoreTest {
            mean,
            se: alt_se,
            t: alt_t,
            df: n - 1.0,
            p: dist::t_two_sided_p(alt_t, n - 1.0),
        },
    })
}
