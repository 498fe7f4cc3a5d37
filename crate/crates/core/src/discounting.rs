//! Hyperbolic delay discounting: subjective value, a logistic choice rule
//! and per-subject maximum-likelihood fitting of the discount rate `k` and
//! the consistency parameter `β`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::session::{Choice, Task, TrialRecord};

pub const K_MIN: f64 = 1e-5;
pub const K_MAX: f64 = 10.0;
pub const BETA_MIN: f64 = 0.01;
pub const BETA_MAX: f64 = 100.0;
/// Probabilities are clamped to `[P_CLAMP, 1 − P_CLAMP]` before taking logs.
pub const P_CLAMP: f64 = 1e-12;

const GRID_STEP: f64 = 0.05;
const LOG_K_RANGE: (f64, f64) = (-5.0, 1.0);
const LOG_BETA_RANGE: (f64, f64) = (-2.0, 2.0);
/// Width of the final golden-section bracket in log10 units; a relative
/// parameter tolerance of 1e-6.
const LOG_TOL: f64 = 1e-6 / std::f64::consts::LN_10;
const FIT_METHOD: &str = "grid+golden_section_mle";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscountError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no non-control choice trials to fit")]
    NoInformativeTrials,
    #[error("no control trials")]
    NoControlTrials,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// `V = A/(1 + kD)`, choice `P(LL) = σ(β·(V_LL − V_SS))`.
    #[default]
    SoftmaxHyperbolic,
    /// `V = A/(1 + kD)^β`, choice `P(LL) = σ(V_LL − V_SS)`.
    LiteralExponent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiceTrial {
    pub amount_ss: f64,
    pub delay_ss: f64,
    pub amount_ll: f64,
    pub delay_ll: f64,
    pub chosen: Choice,
    pub is_control: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountFit {
    pub k: f64,
    pub beta: f64,
    pub log_likelihood: f64,
    pub converged: bool,
    pub at_bound: bool,
    /// All non-control choices were identical; the fit is clamped to the bounds.
    pub degenerate_choices: bool,
    pub model_variant: ModelVariant,
    pub n_trials: usize,
    pub method: String,
}

fn validate(k: f64, beta: f64) -> Result<(), DiscountError> {
    if !(k.is_finite() && k > 0.0) {
        return Err(DiscountError::InvalidParameter(format!("k must be positive, got {k}")));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(DiscountError::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

#[inline]
fn value_unchecked(amount: f64, delay: f64, k: f64, beta: f64, variant: ModelVariant) -> f64 {
    match variant {
        ModelVariant::SoftmaxHyperbolic => amount / (1.0 + k * delay),
        ModelVariant::LiteralExponent => amount / (1.0 + k * delay).powf(beta),
    }
}

pub fn subjective_value(
    amount: f64,
    delay: f64,
    k: f64,
    beta: f64,
    variant: ModelVariant,
) -> Result<f64, DiscountError> {
    validate(k, beta)?;
    if !(amount >= 0.0 && delay >= 0.0) {
        return Err(DiscountError::InvalidParameter(format!(
            "amount and delay must be non-negative, got {amount} and {delay}"
        )));
    }
    Ok(value_unchecked(amount, delay, k, beta, variant))
}

#[inline]
fn p_ll_unchecked(t: &ChoiceTrial, k: f64, beta: f64, variant: ModelVariant) -> f64 {
    let dv = value_unchecked(t.amount_ll, t.delay_ll, k, beta, variant)
        - value_unchecked(t.amount_ss, t.delay_ss, k, beta, variant);
    let z = match variant {
        ModelVariant::SoftmaxHyperbolic => beta * dv,
        ModelVariant::LiteralExponent => dv,
    };
    (1.0 / (1.0 + (-z).exp())).clamp(P_CLAMP, 1.0 - P_CLAMP)
}

/// Probability of choosing the larger-later option.
pub fn choice_probability(
    trial: &ChoiceTrial,
    k: f64,
    beta: f64,
    variant: ModelVariant,
) -> Result<f64, DiscountError> {
    validate(k, beta)?;
    Ok(p_ll_unchecked(trial, k, beta, variant))
}

/// Beyond this |z| the clamp decides the result and the logistic need not be evaluated.
const SATURATED_Z: f64 = 40.0;

#[inline]
fn logit_ll(t: &ChoiceTrial, k: f64, beta: f64, variant: ModelVariant) -> f64 {
    let dv = value_unchecked(t.amount_ll, t.delay_ll, k, beta, variant)
        - value_unchecked(t.amount_ss, t.delay_ss, k, beta, variant);
    match variant {
        ModelVariant::SoftmaxHyperbolic => beta * dv,
        ModelVariant::LiteralExponent => dv,
    }
}

/// `ln σ(z)` and `ln σ(−z)`, each clamped to `[ln P_CLAMP, ln(1 − P_CLAMP)]`.
#[inline]
fn ln_probs(z: f64, ln_lo: f64, ln_hi: f64) -> (f64, f64) {
    if z > SATURATED_Z {
        (ln_hi, ln_lo)
    } else if z < -SATURATED_Z {
        (ln_lo, ln_hi)
    } else {
        // stable on both sides; ln σ(−z) = ln σ(z) − z
        let ln_ll = if z >= 0.0 { -(-z).exp().ln_1p() } else { z - z.exp().ln_1p() };
        (ln_ll.clamp(ln_lo, ln_hi), (ln_ll - z).clamp(ln_lo, ln_hi))
    }
}

fn ln_bounds() -> (f64, f64) {
    (P_CLAMP.ln(), (-P_CLAMP).ln_1p())
}

fn ll_unchecked(choices: &[ChoiceTrial], k: f64, beta: f64, variant: ModelVariant) -> f64 {
    let (ln_lo, ln_hi) = ln_bounds();
    choices
        .iter()
        .map(|t| {
            let (a, b) = ln_probs(logit_ll(t, k, beta, variant), ln_lo, ln_hi);
            match t.chosen {
                Choice::LargerLater => a,
                Choice::SoonerSmaller => b,
            }
        })
        .sum()
}

/// Identical offers merged, with their larger-later and sooner-smaller counts.
fn aggregate(choices: &[ChoiceTrial]) -> Vec<(ChoiceTrial, f64, f64)> {
    let mut out: Vec<(ChoiceTrial, f64, f64)> = Vec::new();
    for c in choices {
        let same = |o: &ChoiceTrial| {
            o.amount_ss == c.amount_ss && o.delay_ss == c.delay_ss && o.amount_ll == c.amount_ll && o.delay_ll == c.delay_ll
        };
        let (n_ll, n_ss) = match c.chosen {
            Choice::LargerLater => (1.0, 0.0),
            Choice::SoonerSmaller => (0.0, 1.0),
        };
        match out.iter_mut().find(|(o, _, _)| same(o)) {
            Some(e) => {
                e.1 += n_ll;
                e.2 += n_ss;
            }
            None => out.push((*c, n_ll, n_ss)),
        }
    }
    out
}

fn ll_from_logits(data: &[(ChoiceTrial, f64, f64)], z: impl Iterator<Item = f64>) -> f64 {
    let (ln_lo, ln_hi) = ln_bounds();
    data.iter()
        .zip(z)
        .map(|((_, n_ll, n_ss), z)| {
            let (a, b) = ln_probs(z, ln_lo, ln_hi);
            let mut s = 0.0;
            if *n_ll > 0.0 {
                s += n_ll * a;
            }
            if *n_ss > 0.0 {
                s += n_ss * b;
            }
            s
        })
        .sum()
}

fn ll_aggregated(data: &[(ChoiceTrial, f64, f64)], k: f64, beta: f64, variant: ModelVariant) -> f64 {
    ll_from_logits(data, data.iter().map(|(t, _, _)| logit_ll(t, k, beta, variant)))
}

/// Log-likelihood over the whole grid, row per log k.
fn grid_surface(data: &[(ChoiceTrial, f64, f64)], ks: &[f64], bs: &[f64], variant: ModelVariant) -> Vec<Vec<f64>> {
    ks.iter()
        .map(|&lk| {
            let k = 10f64.powf(lk);
            match variant {
                // the value difference does not depend on beta here
                ModelVariant::SoftmaxHyperbolic => {
                    let dv: Vec<f64> = data.iter().map(|(t, _, _)| logit_ll(t, k, 1.0, variant)).collect();
                    bs.iter()
                        .map(|&lb| {
                            let beta = 10f64.powf(lb);
                            ll_from_logits(data, dv.iter().map(|d| beta * d))
                        })
                        .collect()
                }
                ModelVariant::LiteralExponent => {
                    bs.iter().map(|&lb| ll_aggregated(data, k, 10f64.powf(lb), variant)).collect()
                }
            }
        })
        .collect()
}

/// Σ log P(chosen) over the given trials.
pub fn log_likelihood(
    choices: &[ChoiceTrial],
    k: f64,
    beta: f64,
    variant: ModelVariant,
) -> Result<f64, DiscountError> {
    validate(k, beta)?;
    Ok(ll_unchecked(choices, k, beta, variant))
}

fn grid(range: (f64, f64)) -> Vec<f64> {
    let n = ((range.1 - range.0) / GRID_STEP).round() as usize;
    (0..=n).map(|i| range.0 + i as f64 * GRID_STEP).collect()
}

/// Maximizes `f` over `[lo, hi]` by golden-section search. Returns the best
/// point visited, tie-breaking towards the smaller coordinate.
fn golden_max(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut best = if f(lo) >= f(hi) { (lo, f(lo)) } else { (hi, f(hi)) };
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > LOG_TOL {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
        for (x, fx) in [(c, fc), (d, fd)] {
            if fx > best.1 || (fx == best.1 && x < best.0) {
                best = (x, fx);
            }
        }
    }
    best
}

fn better(a: (f64, f64, f64), b: (f64, f64, f64)) -> bool {
    // (ll, log_k, log_beta): larger ll, then smaller k, then smaller beta
    a.0 > b.0 || (a.0 == b.0 && (a.1 < b.1 || (a.1 == b.1 && a.2 < b.2)))
}

/// Fits `(k, β)` by maximum likelihood over the non-control trials.
///
/// A log-spaced grid search is followed by coordinate-wise golden-section
/// refinement started from the strongest grid peaks. The result is a
/// deterministic function of the input.
pub fn fit_discounting(choices: &[ChoiceTrial], variant: ModelVariant) -> Result<DiscountFit, DiscountError> {
    let data: Vec<ChoiceTrial> = choices.iter().filter(|c| !c.is_control).copied().collect();
    if data.is_empty() {
        return Err(DiscountError::NoInformativeTrials);
    }
    let all_ll = data.iter().all(|c| c.chosen == Choice::LargerLater);
    let all_ss = data.iter().all(|c| c.chosen == Choice::SoonerSmaller);
    if all_ll || all_ss {
        // under the literal variant a small exponent means weak discounting
        let (k, beta) = match (all_ll, variant) {
            (true, ModelVariant::LiteralExponent) => (K_MIN, BETA_MIN),
            (true, ModelVariant::SoftmaxHyperbolic) => (K_MIN, BETA_MAX),
            (false, _) => (K_MAX, BETA_MAX),
        };
        return Ok(DiscountFit {
            k,
            beta,
            log_likelihood: ll_unchecked(&data, k, beta, variant),
            converged: false,
            at_bound: true,
            degenerate_choices: true,
            model_variant: variant,
            n_trials: data.len(),
            method: FIT_METHOD.into(),
        });
    }

    let merged = aggregate(&data);
    let f = |lk: f64, lb: f64| ll_aggregated(&merged, 10f64.powf(lk), 10f64.powf(lb), variant);
    let ks = grid(LOG_K_RANGE);
    let bs = grid(LOG_BETA_RANGE);
    let surface = grid_surface(&merged, &ks, &bs, variant);

    // grid local maxima, strongest first
    let mut peaks: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..ks.len() {
        for j in 0..bs.len() {
            let v = surface[i][j];
            let neighbours = [
                (i.wrapping_sub(1), j),
                (i + 1, j),
                (i, j.wrapping_sub(1)),
                (i, j + 1),
            ];
            let is_peak = neighbours.iter().all(|&(a, b)| {
                surface.get(a).and_then(|row| row.get(b)).is_none_or(|&w| v >= w)
            });
            if is_peak {
                peaks.push((v, i, j));
            }
        }
    }
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    peaks.truncate(3);

    let mut best: Option<(f64, f64, f64, bool)> = None;
    for &(v, i, j) in &peaks {
        let (mut lk, mut lb, mut cur) = (ks[i], bs[j], v);
        let mut converged = false;
        for _ in 0..100 {
            let (nk, fk) = golden_max(
                (lk - GRID_STEP).max(LOG_K_RANGE.0),
                (lk + GRID_STEP).min(LOG_K_RANGE.1),
                |x| f(x, lb),
            );
            let (nk, fk) = if fk > cur { (nk, fk) } else { (lk, cur) };
            let (nb, fb) = golden_max(
                (lb - GRID_STEP).max(LOG_BETA_RANGE.0),
                (lb + GRID_STEP).min(LOG_BETA_RANGE.1),
                |x| f(nk, x),
            );
            let (nb, fb) = if fb > fk { (nb, fb) } else { (lb, fk) };
            let moved = (nk - lk).abs().max((nb - lb).abs());
            lk = nk;
            lb = nb;
            cur = fb;
            if moved <= LOG_TOL {
                converged = true;
                break;
            }
        }
        let cand = (cur, lk, lb, converged);
        if best.is_none_or(|b| better((cand.0, cand.1, cand.2), (b.0, b.1, b.2))) {
            best = Some(cand);
        }
    }
    let (_, lk, lb, converged) = best.expect("grid has at least one peak");
    let ll = ll_unchecked(&data, 10f64.powf(lk), 10f64.powf(lb), variant);
    let near = |x: f64, bound: f64| (x - bound).abs() <= 2.0 * LOG_TOL;
    Ok(DiscountFit {
        k: 10f64.powf(lk),
        beta: 10f64.powf(lb),
        log_likelihood: ll,
        converged,
        at_bound: near(lk, LOG_K_RANGE.0)
            || near(lk, LOG_K_RANGE.1)
            || near(lb, LOG_BETA_RANGE.0)
            || near(lb, LOG_BETA_RANGE.1),
        degenerate_choices: false,
        model_variant: variant,
        n_trials: data.len(),
        method: FIT_METHOD.into(),
    })
}

/// Fraction of control trials on which the larger amount was chosen.
pub fn control_consistency(choices: &[ChoiceTrial]) -> Result<f64, DiscountError> {
    let controls: Vec<&ChoiceTrial> = choices.iter().filter(|c| c.is_control).collect();
    if controls.is_empty() {
        return Err(DiscountError::NoControlTrials);
    }
    let larger = controls
        .iter()
        .filter(|c| match c.chosen {
            Choice::LargerLater => c.amount_ll >= c.amount_ss,
            Choice::SoonerSmaller => c.amount_ss > c.amount_ll,
        })
        .count();
    Ok(larger as f64 / controls.len() as f64)
}

/// Choice trials from answered delay-discounting trial records.
pub fn choices_from_trials(trials: &[TrialRecord]) -> Vec<ChoiceTrial> {
    trials
        .iter()
        .filter(|t| t.task == Task::Ddt)
        .filter_map(|t| {
            let o = t.offer?;
            Some(ChoiceTrial {
                amount_ss: o.amount_ss,
                delay_ss: o.delay_ss,
                amount_ll: o.amount_ll,
                delay_ll: o.delay_ll,
                chosen: t.choice?,
                is_control: o.is_control,
            })
        })
        .collect()
}

/// The task's 10 × 8 grid of sooner-smaller amounts and larger-later delays
/// against an immediate sooner option and a $100 later option, followed by
/// ten both-immediate control pairs. `chosen` is a placeholder.
pub fn task_design() -> Vec<ChoiceTrial> {
    const AMOUNTS: [f64; 10] = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 99.0];
    const DELAYS: [f64; 8] = [1.0, 7.0, 14.0, 30.0, 60.0, 90.0, 180.0, 365.0];
    let mut out = Vec::with_capacity(90);
    for &a in &AMOUNTS {
        for &d in &DELAYS {
            out.push(ChoiceTrial {
                amount_ss: a,
                delay_ss: 0.0,
                amount_ll: 100.0,
                delay_ll: d,
                chosen: Choice::LargerLater,
                is_control: false,
            });
        }
    }
    for &a in &AMOUNTS {
        out.push(ChoiceTrial {
            amount_ss: a,
            delay_ss: 0.0,
            amount_ll: 100.0,
            delay_ll: 0.0,
            chosen: Choice::LargerLater,
            is_control: true,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const V: ModelVariant = ModelVariant::SoftmaxHyperbolic;
    const L: ModelVariant = ModelVariant::LiteralExponent;

    fn trial(a_ss: f64, d_ss: f64, a_ll: f64, d_ll: f64) -> ChoiceTrial {
        ChoiceTrial { amount_ss: a_ss, delay_ss: d_ss, amount_ll: a_ll, delay_ll: d_ll, chosen: Choice::LargerLater, is_control: false }
    }

    #[test]
    fn value_examples() {
        assert_eq!(subjective_value(80.0, 0.0, 0.3, 2.0, V).unwrap(), 80.0);
        assert_eq!(subjective_value(80.0, 0.0, 0.3, 2.0, L).unwrap(), 80.0);
        assert!((subjective_value(100.0, 100.0, 0.01, 1.0, V).unwrap() - 50.0).abs() < 1e-12);
        assert!((subjective_value(100.0, 100.0, 0.01, 2.0, L).unwrap() - 25.0).abs() < 1e-12);
        assert!(subjective_value(100.0, 1.0, 0.0, 1.0, V).is_err());
        assert!(subjective_value(100.0, 1.0, 0.1, -1.0, L).is_err());
    }

    #[test]
    fn probability_examples() {
        let p = choice_probability(&trial(50.0, 0.0, 50.0, 0.0), 0.1, 3.0, V).unwrap();
        assert_eq!(p, 0.5);
        let p = choice_probability(&trial(50.0, 0.0, 60.0, 10.0), 0.01, 1e6, V).unwrap();
        assert_eq!(p, 1.0 - P_CLAMP);
        // 1/(1+exp(−(100/1.3 − 50))) is within the clamp
        let p = choice_probability(&trial(50.0, 0.0, 100.0, 30.0), 0.01, 1.0, V).unwrap();
        let exact = 1.0 / (1.0 + (-(100.0 / 1.3 - 50.0f64)).exp());
        assert_eq!(p, exact);
        let tail = (-(100.0 / 1.3 - 50.0f64)).exp();
        assert!(((1.0 - p) - tail).abs() / tail < 1e-3);
        assert!(1.0 - p > P_CLAMP);
    }

    #[test]
    fn all_ll_chooser_hits_lower_bound() {
        let d = task_design();
        let fit = fit_discounting(&d, V).unwrap();
        assert_eq!(fit.k, K_MIN);
        assert!(fit.at_bound && fit.degenerate_choices);
        let ss: Vec<_> = d.iter().map(|c| ChoiceTrial { chosen: Choice::SoonerSmaller, ..*c }).collect();
        let fit = fit_discounting(&ss, V).unwrap();
        assert_eq!(fit.k, K_MAX);
        assert!(fit.at_bound);
    }

    #[test]
    fn deterministic_chooser_is_fit() {
        // chooses LL iff V_LL > V_SS at k = 0.02
        let d: Vec<_> = task_design()
            .into_iter()
            .map(|c| {
                let vl = c.amount_ll / (1.0 + 0.02 * c.delay_ll);
                ChoiceTrial { chosen: if vl > c.amount_ss { Choice::LargerLater } else { Choice::SoonerSmaller }, ..c }
            })
            .collect();
        let fit = fit_discounting(&d, V).unwrap();
        assert!((fit.k.log10() - 0.02f64.log10()).abs() < 0.3, "{fit:?}");
        assert_eq!(fit.n_trials, 80);
        let again = fit_discounting(&d, V).unwrap();
        assert_eq!(fit, again);
    }

    #[test]
    fn control_consistency_counts_larger() {
        let mut d = task_design();
        assert_eq!(control_consistency(&d).unwrap(), 1.0);
        for c in d.iter_mut().filter(|c| c.is_control).take(5) {
            c.chosen = Choice::SoonerSmaller;
        }
        assert_eq!(control_consistency(&d).unwrap(), 0.5);
        assert_eq!(control_consistency(&d[..80]), Err(DiscountError::NoControlTrials));
    }

    #[test]
    fn design_shape() {
        let d = task_design();
        assert_eq!(d.len(), 90);
        assert_eq!(d.iter().filter(|c| c.is_control).count(), 10);
        let mut cells: Vec<(u64, u64)> = d.iter().filter(|c| !c.is_control).map(|c| (c.amount_ss as u64, c.delay_ll as u64)).collect();
        cells.sort();
        cells.dedup();
        assert_eq!(cells.len(), 80);
    }

    proptest! {
        #[test]
        fn value_monotone(a in 1.0f64..200.0, d in 0.0f64..400.0, lk in -5.0f64..1.0, lb in -2.0f64..2.0) {
            let (k, b) = (10f64.powf(lk), 10f64.powf(lb));
            for var in [V, L] {
                let v = subjective_value(a, d, k, b, var).unwrap();
                prop_assert!(subjective_value(a, d + 1.0, k, b, var).unwrap() < v);
                prop_assert!(subjective_value(a + 1.0, d, k, b, var).unwrap() > v);
            }
        }

        #[test]
        fn immediate_larger_preferred(small in 0.0f64..99.0, gap in 0.01f64..50.0, lk in -5.0f64..1.0, lb in -2.0f64..2.0) {
            let t = trial(small, 0.0, small + gap, 0.0);
            for var in [V, L] {
                prop_assert!(choice_probability(&t, 10f64.powf(lk), 10f64.powf(lb), var).unwrap() > 0.5);
            }
        }

        #[test]
        fn likelihood_finite_on_grid(mask in proptest::collection::vec(any::<bool>(), 90), i in 0usize..121, j in 0usize..81) {
            let d: Vec<_> = task_design().into_iter().zip(mask).map(|(c, m)| ChoiceTrial {
                chosen: if m { Choice::LargerLater } else { Choice::SoonerSmaller }, ..c
            }).collect();
            let (k, b) = (10f64.powf(-5.0 + 0.05 * i as f64), 10f64.powf(-2.0 + 0.05 * j as f64));
            for var in [V, L] {
                prop_assert!(log_likelihood(&d, k, b, var).unwrap().is_finite());
            }
        }
    }
}
