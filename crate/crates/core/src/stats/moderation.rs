use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::anova::ratio;
use super::{dist, StatsError};

/// Ordinary least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coef: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub sse: f64,
    pub r2: f64,
    pub df_resid: f64,
}

/// OLS via Householder QR. `x` must include the intercept column.
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit, StatsError> {
    let (n, p) = x.shape();
    if n <= p {
        return Err(StatsError::InsufficientN { required: p, found: n });
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let max_diag = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..p).any(|i| r[(i, i)].abs() <= 1e-10 * max_diag.max(f64::MIN_POSITIVE)) {
        return Err(StatsError::SingularDesign);
    }
    let qty = qr.q().transpose() * y;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or(StatsError::SingularDesign)?;
    let resid = y - x * &coef;
    let sse = resid.dot(&resid);
    let ybar = y.mean();
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let df_resid = (n - p) as f64;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(StatsError::SingularDesign)?;
    let cov = (&r_inv * r_inv.transpose()) * (sse / df_resid);
    Ok(OlsFit { coef, cov, sse, r2: if sst > 0.0 { 1.0 - sse / sst } else { 0.0 }, df_resid })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefRow {
    pub term: String,
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
}

/// R² change from adding one interaction term last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionTest {
    pub term: String,
    pub delta_r2: f64,
    pub f_change: f64,
    pub df1: f64,
    pub df2: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalEffect {
    pub m1_label: String,
    pub m2_label: String,
    pub m1_value: f64,
    pub m2_value: f64,
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModerationResult {
    pub n: usize,
    pub centered: bool,
    /// Sample means of x, m1, m2 before centering.
    pub means: [f64; 3],
    /// Sample SDs of x, m1, m2.
    pub sds: [f64; 3],
    pub coefficients: Vec<CoefRow>,
    pub r2: f64,
    pub f: f64,
    pub df1: f64,
    pub df2: f64,
    pub p: f64,
    pub mse: f64,
    pub interactions: Vec<InteractionTest>,
    /// Effect of x at the 3 × 3 grid of moderator values, m1 outermost.
    pub conditional_effects: Vec<ConditionalEffect>,
    pub se_method: String,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

fn design(cols: &[&[f64]]) -> DMatrix<f64> {
    let n = cols[0].len();
    DMatrix::from_fn(n, cols.len() + 1, |i, j| if j == 0 { 1.0 } else { cols[j - 1][i] })
}

/// Regression of `y` on `x`, two moderators and both `x × m` products, with
/// pick-a-point conditional effects of `x` at mean and ±1 SD of each moderator.
pub fn parallel_moderation(
    y: &[f64],
    x: &[f64],
    m1: &[f64],
    m2: &[f64],
    center: bool,
) -> Result<ModerationResult, StatsError> {
    let n = y.len();
    if x.len() != n || m1.len() != n || m2.len() != n {
        return Err(StatsError::ShapeMismatch("y, x, m1, m2 must have equal length".into()));
    }
    if n <= 6 {
        return Err(StatsError::InsufficientN { required: 6, found: n });
    }
    if [y, x, m1, m2].iter().any(|v| v.iter().any(|a| !a.is_finite())) {
        return Err(StatsError::NonFinite);
    }
    let stats = [mean_sd(x), mean_sd(m1), mean_sd(m2)];
    for ((_, sd), name) in stats.iter().zip(["x", "m1", "m2"]) {
        if *sd == 0.0 {
            return Err(StatsError::ConstantPredictor(name.into()));
        }
    }
    let shift = |v: &[f64], m: f64| -> Vec<f64> { v.iter().map(|a| if center { a - m } else { *a }).collect() };
    let xc = shift(x, stats[0].0);
    let m1c = shift(m1, stats[1].0);
    let m2c = shift(m2, stats[2].0);
    let xm1: Vec<f64> = xc.iter().zip(&m1c).map(|(a, b)| a * b).collect();
    let xm2: Vec<f64> = xc.iter().zip(&m2c).map(|(a, b)| a * b).collect();
    let yv = DVector::from_column_slice(y);

    let full = ols(&design(&[&xc, &m1c, &m2c, &xm1, &xm2]), &yv)?;
    let df2 = full.df_resid;
    let mse = full.sse / df2;
    let names = ["intercept", "x", "m1", "m2", "x:m1", "x:m2"];
    let coefficients = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let est = full.coef[i];
            let se = full.cov[(i, i)].sqrt();
            let t = ratio(est, se);
            CoefRow { term: name.to_string(), estimate: est, se, t, p: dist::t_two_sided_p(t, df2) }
        })
        .collect();

    let reduced = [
        ("x:m1", ols(&design(&[&xc, &m1c, &m2c, &xm2]), &yv)?),
        ("x:m2", ols(&design(&[&xc, &m1c, &m2c, &xm1]), &yv)?),
    ];
    let interactions = reduced
        .into_iter()
        .map(|(term, fit)| {
            let delta_r2 = full.r2 - fit.r2;
            let f_change = ratio(fit.sse - full.sse, mse);
            InteractionTest {
                term: term.into(),
                delta_r2,
                f_change,
                df1: 1.0,
                df2,
                p: dist::f_upper_p(f_change, 1.0, df2),
            }
        })
        .collect();

    let f = ratio(full.r2 / 5.0, (1.0 - full.r2) / df2);
    let t_crit = dist::t_critical(0.025, df2);
    let points = |(m, sd): (f64, f64)| {
        let mid = if center { 0.0 } else { m };
        [("mean-1sd", mid - sd), ("mean", mid), ("mean+1sd", mid + sd)]
    };
    let mut conditional_effects = Vec::with_capacity(9);
    for (l1, v1) in points(stats[1]) {
        for (l2, v2) in points(stats[2]) {
            // gradient of b1 + b4·m1 + b5·m2 with respect to the coefficients
            let g = DVector::from_column_slice(&[0.0, 1.0, 0.0, 0.0, v1, v2]);
            let estimate = g.dot(&full.coef);
            let se = (g.transpose() * &full.cov * &g)[(0, 0)].max(0.0).sqrt();
            let t = ratio(estimate, se);
            conditional_effects.push(ConditionalEffect {
                m1_label: l1.into(),
                m2_label: l2.into(),
                m1_value: v1,
                m2_value: v2,
                estimate,
                se,
                t,
                df: df2,
                p: dist::t_two_sided_p(t, df2),
                ci_low: estimate - t_crit * se,
                ci_high: estimate + t_crit * se,
            });
        }
    }

    Ok(ModerationResult {
        n,
        centered: center,
        means: [stats[0].0, stats[1].0, stats[2].0],
        sds: [stats[0].1, stats[1].1, stats[2].1],
        coefficients,
        r2: full.r2,
        f,
        df1: 5.0,
        df2,
        p: dist::f_upper_p(f, 5.0, df2),
        mse,
        interactions,
        conditional_effects,
        se_method: "ols".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let x = (0..n).map(|i| ((i * 37) % 17) as f64 / 3.0).collect();
        let m1 = (0..n).map(|i| ((i * 11) % 13) as f64 - 4.0).collect();
        let m2 = (0..n).map(|i| ((i * i + 3) % 19) as f64 / 5.0).collect();
        (x, m1, m2)
    }

    #[test]
    fn exact_recovery_without_noise() {
        let (x, m1, m2) = vars(40);
        let (mx, _) = mean_sd(&x);
        let (mm1, sd1) = mean_sd(&m1);
        let y: Vec<f64> = (0..40).map(|i| 1.5 + 0.7 * (x[i] - mx) + 0.4 * (x[i] - mx) * (m1[i] - mm1)).collect();
        let r = parallel_moderation(&y, &x, &m1, &m2, true).unwrap();
        let b: Vec<f64> = r.coefficients.iter().map(|c| c.estimate).collect();
        for (got, want) in b.iter().zip([1.5, 0.7, 0.0, 0.0, 0.4, 0.0]) {
            assert!((got - want).abs() < 1e-8, "{b:?}");
        }
        // (mean+1sd, mean) row
        let ce = &r.conditional_effects[7];
        assert_eq!((ce.m1_label.as_str(), ce.m2_label.as_str()), ("mean+1sd", "mean"));
        assert!((ce.estimate - (0.7 + 0.4 * sd1)).abs() < 1e-8);
    }

    #[test]
    fn centered_midpoint_equals_b1() {
        let (x, m1, m2) = vars(30);
        let y: Vec<f64> = (0..30).map(|i| ((i * 7) % 5) as f64 + x[i] * 0.2).collect();
        let r = parallel_moderation(&y, &x, &m1, &m2, true).unwrap();
        assert_eq!(r.conditional_effects.len(), 9);
        let mid = &r.conditional_effects[4];
        assert_eq!(mid.estimate, r.coefficients[1].estimate);
        assert!((mid.se - r.coefficients[1].se).abs() < 1e-12);
        assert!(((mid.ci_high - mid.estimate) - dist::t_critical(0.025, 24.0) * mid.se).abs() < 1e-12);
    }

    #[test]
    fn df_for_61() {
        let (x, m1, m2) = vars(61);
        let y: Vec<f64> = (0..61).map(|i| ((i * 13) % 7) as f64).collect();
        let r = parallel_moderation(&y, &x, &m1, &m2, true).unwrap();
        assert_eq!(r.df2, 55.0);
        assert!(r.conditional_effects.iter().all(|c| c.df == 55.0));
    }

    #[test]
    fn error_paths() {
        let (x, m1, m2) = vars(20);
        let y = vec![1.0; 20];
        assert!(matches!(parallel_moderation(&y[..5], &x[..5], &m1[..5], &m2[..5], true), Err(StatsError::InsufficientN { .. })));
        assert!(matches!(parallel_moderation(&y, &vec![2.0; 20], &m1, &m2, true), Err(StatsError::ConstantPredictor(_))));
        assert!(matches!(parallel_moderation(&y, &x, &m1, &m1, true), Err(StatsError::SingularDesign)));
        assert!(matches!(parallel_moderation(&y, &x, &m1, &m2[..19], true), Err(StatsError::ShapeMismatch(_))));
    }
}
