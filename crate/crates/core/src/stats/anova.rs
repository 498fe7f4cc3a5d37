use serde::{Deserialize, Serialize};

use super::{dist, ConditionMatrix, StatsError};

/// One-way repeated-measures partition of a [`ConditionMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneWayRm {
    pub ss_conditions: f64,
    pub ss_subjects: f64,
    pub ss_error: f64,
    pub ss_total: f64,
    pub df_conditions: f64,
    pub df_error: f64,
    pub ms_error: f64,
    pub f: f64,
    pub p: f64,
}

pub fn rm_anova_one_way(data: &ConditionMatrix) -> OneWayRm {
    let n = data.n_subjects() as f64;
    let k = data.n_conditions() as f64;
    let rows = data.rows();
    let grand = rows.iter().flatten().sum::<f64>() / (n * k);
    let ss_total: f64 = rows.iter().flatten().map(|v| (v - grand).powi(2)).sum();
    let ss_conditions = n * data.condition_means().iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_subjects = k * rows
        .iter()
        .map(|r| (r.iter().sum::<f64>() / k - grand).powi(2))
        .sum::<f64>();
    let ss_error = (ss_total - ss_conditions - ss_subjects).max(0.0);
    let df_conditions = k - 1.0;
    let df_error = (n - 1.0) * (k - 1.0);
    let ms_error = ss_error / df_error;
    let f = ratio(ss_conditions / df_conditions, ms_error);
    OneWayRm {
        ss_conditions,
        ss_subjects,
        ss_error,
        ss_total,
        df_conditions,
        df_error,
        ms_error,
        f,
        p: dist::f_upper_p(f, df_conditions, df_error),
    }
}

/// `num/den` with `0/0 = 0`.
pub(crate) fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Balanced subjects × A × B within-subject data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoFactorData {
    pub factor_a: String,
    pub factor_b: String,
    pub a_levels: Vec<String>,
    pub b_levels: Vec<String>,
    pub subjects: Vec<String>,
    /// `values[subject][a][b]`
    pub values: Vec<Vec<Vec<f64>>>,
}

impl TwoFactorData {
    pub fn validate(&self) -> Result<(), StatsError> {
        let (a, b) = (self.a_levels.len(), self.b_levels.len());
        if a < 2 || b < 2 {
            return Err(StatsError::UnbalancedDesign("each factor needs at least 2 levels".into()));
        }
        if self.subjects.len() < 2 || self.values.len() != self.subjects.len() {
            return Err(StatsError::UnbalancedDesign("need at least 2 subjects with one row each".into()));
        }
        for (s, grid) in self.subjects.iter().zip(&self.values) {
            if grid.len() != a || grid.iter().any(|row| row.len() != b) {
                return Err(StatsError::UnbalancedDesign(format!("subject {s} lacks a full {a}×{b} grid")));
            }
            if grid.iter().flatten().any(|v| !v.is_finite()) {
                return Err(StatsError::NonFinite);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRow {
    pub effect: String,
    pub ss: f64,
    pub df: f64,
    pub ms: f64,
    pub ss_error: f64,
    pub df_error: f64,
    /// Mean square of the effect's own subject-interaction error term.
    pub mse: f64,
    pub f: f64,
    pub p: f64,
    /// SS_effect / SS_total.
    pub eta_sq: f64,
    /// SS_effect / (SS_effect + SS_error).
    pub partial_eta_sq: f64,
    /// SS_effect / (SS_effect + SS_subjects + all error SS).
    pub generalized_eta_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    pub n_subjects: usize,
    pub effects: Vec<EffectRow>,
    pub ss_subjects: f64,
    pub ss_total: f64,
    pub effect_size_convention: String,
}

/// Two-factor fully within-subject ANOVA. Each effect is tested against its
/// own effect × subject interaction.
pub fn rm_anova_two_factor(data: &TwoFactorData) -> Result<AnovaTable, StatsError> {
    data.validate()?;
    let n = data.subjects.len();
    let a = data.a_levels.len();
    let b = data.b_levels.len();
    let (nf, af, bf) = (n as f64, a as f64, b as f64);
    let v = &data.values;

    let grand = v.iter().flatten().flatten().sum::<f64>() / (nf * af * bf);
    let subj: Vec<f64> = v.iter().map(|g| g.iter().flatten().sum::<f64>() / (af * bf)).collect();
    let a_mean: Vec<f64> = (0..a)
        .map(|j| v.iter().map(|g| g[j].iter().sum::<f64>()).sum::<f64>() / (nf * bf))
        .collect();
    let b_mean: Vec<f64> = (0..b)
        .map(|k| v.iter().map(|g| g.iter().map(|r| r[k]).sum::<f64>()).sum::<f64>() / (nf * af))
        .collect();
    let cell = |j: usize, k: usize| v.iter().map(|g| g[j][k]).sum::<f64>() / nf;
    let sa = |i: usize, j: usize| v[i][j].iter().sum::<f64>() / bf;
    let sb = |i: usize, k: usize| v[i].iter().map(|r| r[k]).sum::<f64>() / af;

    let ss_total: f64 = v.iter().flatten().flatten().map(|x| (x - grand).powi(2)).sum();
    let ss_s = af * bf * subj.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_a = nf * bf * a_mean.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_b = nf * af * b_mean.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let mut ss_ab = 0.0;
    for j in 0..a {
        for k in 0..b {
            ss_ab += (cell(j, k) - a_mean[j] - b_mean[k] + grand).powi(2);
        }
    }
    ss_ab *= nf;
    let mut ss_as = 0.0;
    let mut ss_bs = 0.0;
    for i in 0..n {
        for j in 0..a {
            ss_as += (sa(i, j) - subj[i] - a_mean[j] + grand).powi(2);
        }
        for k in 0..b {
            ss_bs += (sb(i, k) - subj[i] - b_mean[k] + grand).powi(2);
        }
    }
    ss_as *= bf;
    ss_bs *= af;
    let ss_abs = (ss_total - ss_s - ss_a - ss_b - ss_ab - ss_as - ss_bs).max(0.0);
    let error_pool = ss_s + ss_as + ss_bs + ss_abs;

    let row = |name: String, ss: f64, df: f64, ss_err: f64, df_err: f64| {
        let ms = ss / df;
        let mse = ss_err / df_err;
        let f = ratio(ms, mse);
        EffectRow {
            effect: name,
            ss,
            df,
            ms,
            ss_error: ss_err,
            df_error: df_err,
            mse,
            f,
            p: dist::f_upper_p(f, df, df_err),
            eta_sq: ratio(ss, ss_total),
            partial_eta_sq: ratio(ss, ss + ss_err),
            generalized_eta_sq: ratio(ss, ss + error_pool),
        }
    };
    let dfs = nf - 1.0;
    let effects = vec![
        row(data.factor_a.clone(), ss_a, af - 1.0, ss_as, (af - 1.0) * dfs),
        row(data.factor_b.clone(), ss_b, bf - 1.0, ss_bs, (bf - 1.0) * dfs),
        row(
            format!("{}:{}", data.factor_a, data.factor_b),
            ss_ab,
            (af - 1.0) * (bf - 1.0),
            ss_abs,
            (af - 1.0) * (bf - 1.0) * dfs,
        ),
    ];
    Ok(AnovaTable {
        n_subjects: n,
        effects,
        ss_subjects: ss_s,
        ss_total,
        effect_size_convention: "eta_sq=SS_effect/SS_total; partial and generalized also reported".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(n: usize, f: impl Fn(usize, usize, usize) -> f64) -> TwoFactorData {
        TwoFactorData {
            factor_a: "task".into(),
            factor_b: "condition".into(),
            a_levels: vec!["sst".into(), "ddt".into()],
            b_levels: vec!["u".into(), "n".into(), "p".into()],
            subjects: (0..n).map(|i| format!("s{i}")).collect(),
            values: (0..n).map(|i| (0..2).map(|j| (0..3).map(|k| f(i, j, k)).collect()).collect()).collect(),
        }
    }

    #[test]
    fn degrees_of_freedom_for_61_subjects() {
        let d = design(61, |i, j, k| ((i * 7 + j * 3 + k * 5) % 11) as f64);
        let t = rm_anova_two_factor(&d).unwrap();
        let b = &t.effects[1];
        assert_eq!((b.df, b.df_error), (2.0, 120.0));
        assert_eq!((t.effects[0].df, t.effects[0].df_error), (1.0, 60.0));
        assert_eq!((t.effects[2].df, t.effects[2].df_error), (2.0, 120.0));
    }

    #[test]
    fn zero_b_effect() {
        let d = design(6, |i, j, _| i as f64 * 2.0 + j as f64 + ((i * j) % 3) as f64);
        let t = rm_anova_two_factor(&d).unwrap();
        assert!(t.effects[1].f.abs() < 1e-12);
    }

    #[test]
    fn unbalanced_rejected() {
        let mut d = design(4, |i, j, k| (i + j + k) as f64);
        d.values[2][1].pop();
        assert!(matches!(rm_anova_two_factor(&d), Err(StatsError::UnbalancedDesign(_))));
    }
}
