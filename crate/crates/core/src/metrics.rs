//! Per-subject stop-signal metrics: stop-failure rate, SSRT by the
//! integration method, RT summaries, go-trial velocity variability and the
//! participant quality filters.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discounting::{self, DiscountFit, ModelVariant};
use crate::session::{Condition, SessionLog, Task, TrialRecord, RESPONSE_CAP_MS};
use crate::trajectory::{AccelerationMode, FeatureVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no stop trials")]
    NoStopTrials,
    #[error("no go trials")]
    NoGoTrials,
    #[error("no usable go RTs")]
    NoGoRts,
    #[error("stop-failure rate is {0}; SSRT is undefined at 0 and 1")]
    DegenerateStopRate(f64),
    #[error("need at least {required} trials, found {found}")]
    TooFewTrials { required: usize, found: usize },
    #[error("summary field `{0}` is required by the quality policy but missing")]
    MissingField(&'static str),
}

/// Treatment of go trials without a response when building the go-RT distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmissionPolicy {
    #[default]
    Exclude,
    /// Omissions enter the distribution at the response cap.
    AssignMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileRule {
    /// The n-th sorted RT with n = ceil(p·N).
    #[default]
    Nth,
    /// Linear interpolation between order statistics at h = (N − 1)·p.
    Interpolated,
}

/// Which quantity the reported "commission error" column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommissionConvention {
    /// Proportion of stop trials with a response (higher = more impulsive).
    #[default]
    ResponseRate,
    /// One minus the response proportion.
    InhibitionRate,
}

impl CommissionConvention {
    pub fn report(self, stop_failure_rate: f64) -> f64 {
        match self {
            CommissionConvention::ResponseRate => stop_failure_rate,
            CommissionConvention::InhibitionRate => 1.0 - stop_failure_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsrtOptions {
    pub omission: OmissionPolicy,
    pub quantile: QuantileRule,
    pub cap_ms: f64,
}

impl Default for SsrtOptions {
    fn default() -> Self {
        Self { omission: OmissionPolicy::Exclude, quantile: QuantileRule::Nth, cap_ms: RESPONSE_CAP_MS }
    }
}

/// What happened on one stop trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopOutcome {
    pub ssd_ms: f64,
    pub responded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsrtEstimate {
    pub ssrt: f64,
    pub quantile_rt: f64,
    pub mean_ssd: f64,
    pub p_respond: f64,
    pub n_go_used: usize,
    pub n_stop: usize,
    pub options: SsrtOptions,
}

/// Fraction of stop trials (among `trials`) on which a response was made.
pub fn stop_failure_rate(trials: &[TrialRecord]) -> Result<f64, MetricsError> {
    let (n, failed) = trials
        .iter()
        .filter(|t| t.is_stop())
        .fold((0usize, 0usize), |(n, f), t| (n + 1, f + usize::from(t.responded)));
    if n == 0 {
        return Err(MetricsError::NoStopTrials);
    }
    Ok(failed as f64 / n as f64)
}

/// SSRT by the integration method.
///
/// `go_rts` holds one entry per go trial, `None` for an omission. The
/// estimate is the p-quantile of the go-RT distribution minus the mean SSD,
/// where p is the probability of responding on stop trials.
pub fn ssrt_integration(
    go_rts: &[Option<f64>],
    stops: &[StopOutcome],
    opts: SsrtOptions,
) -> Result<SsrtEstimate, MetricsError> {
    if stops.is_empty() {
        return Err(MetricsError::NoStopTrials);
    }
    let mut rts: Vec<f64> = match opts.omission {
        OmissionPolicy::Exclude => go_rts.iter().flatten().copied().collect(),
        OmissionPolicy::AssignMax => go_rts.iter().map(|rt| rt.unwrap_or(opts.cap_ms)).collect(),
    };
    if rts.is_empty() {
        return Err(MetricsError::NoGoRts);
    }
    let n_stop = stops.len();
    let failed = stops.iter().filter(|s| s.responded).count();
    let p = failed as f64 / n_stop as f64;
    if failed == 0 || failed == n_stop {
        return Err(MetricsError::DegenerateStopRate(p));
    }
    rts.sort_by(f64::total_cmp);
    let n = rts.len();
    let quantile_rt = match opts.quantile {
        QuantileRule::Nth => {
            // ceil(failed·N / n_stop) in exact integer arithmetic
            let nth = (failed * n).div_ceil(n_stop).max(1);
            rts[nth - 1]
        }
        QuantileRule::Interpolated => {
            let h = (n - 1) as f64 * p;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            rts[lo] + (h - lo as f64) * (rts[hi] - rts[lo])
        }
    };
    let mean_ssd = stops.iter().map(|s| s.ssd_ms).sum::<f64>() / n_stop as f64;
    Ok(SsrtEstimate {
        ssrt: quantile_rt - mean_ssd,
        quantile_rt,
        mean_ssd,
        p_respond: p,
        n_go_used: n,
        n_stop,
        options: opts,
    })
}

/// SSRT straight from trial records; non-SST trials are ignored.
pub fn ssrt_from_trials(trials: &[TrialRecord], opts: SsrtOptions) -> Result<SsrtEstimate, MetricsError> {
    let go: Vec<Option<f64>> = trials
        .iter()
        .filter(|t| t.is_go())
        .map(|t| if t.responded { t.rt_ms } else { None })
        .collect();
    let stops: Vec<StopOutcome> = trials
        .iter()
        .filter(|t| t.is_stop())
        .map(|t| StopOutcome { ssd_ms: t.ssd_ms.unwrap_or(0.0), responded: t.responded })
        .collect();
    ssrt_integration(&go, &stops, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoStats {
    pub n_go: usize,
    pub go_rt_mean: Option<f64>,
    pub go_rt_sd: Option<f64>,
    pub stop_rt_mean: Option<f64>,
    pub stop_rt_sd: Option<f64>,
    pub go_accuracy: f64,
}

pub(crate) fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample standard deviation (n − 1 denominator).
pub(crate) fn sample_sd(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// RT means and SDs for go trials and failed stops, and go-trial accuracy.
pub fn go_stats(trials: &[TrialRecord]) -> Result<GoStats, MetricsError> {
    let go: Vec<&TrialRecord> = trials.iter().filter(|t| t.is_go()).collect();
    if go.is_empty() {
        return Err(MetricsError::NoGoTrials);
    }
    let go_rts: Vec<f64> = go.iter().filter(|t| t.responded).filter_map(|t| t.rt_ms).collect();
    let stop_rts: Vec<f64> = trials
        .iter()
        .filter(|t| t.is_stop() && t.responded)
        .filter_map(|t| t.rt_ms)
        .collect();
    let correct = go.iter().filter(|t| t.correct == Some(true)).count();
    Ok(GoStats {
        n_go: go.len(),
        go_rt_mean: mean(&go_rts),
        go_rt_sd: sample_sd(&go_rts),
        stop_rt_mean: mean(&stop_rts),
        stop_rt_sd: sample_sd(&stop_rts),
        go_accuracy: correct as f64 / go.len() as f64,
    })
}

/// SD of per-trial maximum velocity across go trials.
pub fn go_max_velocity_sd(features: &[FeatureVector]) -> Result<f64, MetricsError> {
    let v: Vec<f64> = features.iter().map(|f| f.max_velocity).collect();
    sample_sd(&v).ok_or(MetricsError::TooFewTrials { required: 2, found: v.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SsrtStatus {
    Estimated,
    DegenerateStopRate,
    NoGoRts,
    NoStopTrials,
}

/// Stop-signal figures for one condition, used by per-condition filters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionStats {
    pub stop_failure_rate: Option<f64>,
    pub go_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectSummary {
    pub subject_id: String,
    /// `None` for the whole session, otherwise the condition the summary is restricted to.
    pub condition: Option<Condition>,
    pub n_go: usize,
    pub n_stop: usize,
    pub stop_failure_rate: Option<f64>,
    pub commission_error_reported: Option<f64>,
    pub ssrt: Option<f64>,
    pub ssrt_status: SsrtStatus,
    pub go_rt_mean: Option<f64>,
    pub go_rt_sd: Option<f64>,
    pub stop_rt_mean: Option<f64>,
    pub stop_rt_sd: Option<f64>,
    pub go_accuracy: Option<f64>,
    pub go_max_velocity_sd: Option<f64>,
    pub mean_stopping_distance: Option<f64>,
    pub discount_fit: Option<DiscountFit>,
    pub control_consistency: Option<f64>,
    pub condition_stats: BTreeMap<Condition, ConditionStats>,
    pub scale_scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsOptions {
    pub ssrt: SsrtOptions,
    pub commission: CommissionConvention,
    pub acceleration: AccelerationMode,
    pub variant: ModelVariant,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        Self {
            ssrt: SsrtOptions::default(),
            commission: CommissionConvention::default(),
            acceleration: AccelerationMode::default(),
            variant: ModelVariant::default(),
        }
    }
}

fn condition_stats(trials: &[TrialRecord]) -> ConditionStats {
    ConditionStats {
        stop_failure_rate: stop_failure_rate(trials).ok(),
        go_accuracy: go_stats(trials).ok().map(|g| g.go_accuracy),
    }
}

/// Builds the subject summary over `trials` (typically all trials of one
/// session, or the subset for one condition).
pub fn summarize(
    subject_id: &str,
    condition: Option<Condition>,
    trials: &[TrialRecord],
    scale_scores: &BTreeMap<String, f64>,
    opts: &MetricsOptions,
) -> SubjectSummary {
    let sfr = stop_failure_rate(trials).ok();
    let (ssrt, ssrt_status) = match ssrt_from_trials(trials, opts.ssrt) {
        Ok(e) => (Some(e.ssrt), SsrtStatus::Estimated),
        Err(MetricsError::NoStopTrials) => (None, SsrtStatus::NoStopTrials),
        Err(MetricsError::NoGoRts) => (None, SsrtStatus::NoGoRts),
        Err(_) => (None, SsrtStatus::DegenerateStopRate),
    };
    let gs = go_stats(trials).ok();
    let go_features: Vec<FeatureVector> = trials
        .iter()
        .filter(|t| t.is_go())
        .filter_map(|t| t.trajectory.features(None, opts.acceleration).ok())
        .collect();
    let stopping: Vec<f64> = trials
        .iter()
        .filter(|t| t.is_stop())
        .filter_map(|t| {
            let ssd = t.ssd_ms?;
            crate::trajectory::stopping_distance(t.trajectory.samples(), ssd).ok()
        })
        .collect();
    let ddt: Vec<TrialRecord> = trials.iter().filter(|t| t.task == Task::Ddt).cloned().collect();
    let choices = discounting::choices_from_trials(&ddt);
    let discount_fit = (!choices.iter().all(|c| c.is_control))
        .then(|| discounting::fit_discounting(&choices, opts.variant).ok())
        .flatten();
    let control_consistency = discounting::control_consistency(&choices).ok();

    let mut per_condition = BTreeMap::new();
    let mut conds: Vec<Condition> = trials.iter().map(|t| t.condition).collect();
    conds.sort();
    conds.dedup();
    for c in conds {
        let sub: Vec<TrialRecord> = trials.iter().filter(|t| t.condition == c).cloned().collect();
        per_condition.insert(c, condition_stats(&sub));
    }

    SubjectSummary {
        subject_id: subject_id.to_string(),
        condition,
        n_go: trials.iter().filter(|t| t.is_go()).count(),
        n_stop: trials.iter().filter(|t| t.is_stop()).count(),
        stop_failure_rate: sfr,
        commission_error_reported: sfr.map(|p| opts.commission.report(p)),
        ssrt,
        ssrt_status,
        go_rt_mean: gs.and_then(|g| g.go_rt_mean),
        go_rt_sd: gs.and_then(|g| g.go_rt_sd),
        stop_rt_mean: gs.and_then(|g| g.stop_rt_mean),
        stop_rt_sd: gs.and_then(|g| g.stop_rt_sd),
        go_accuracy: gs.map(|g| g.go_accuracy),
        go_max_velocity_sd: go_max_velocity_sd(&go_features).ok(),
        mean_stopping_distance: mean(&stopping),
        discount_fit,
        control_consistency,
        condition_stats: per_condition,
        scale_scores: scale_scores.clone(),
    }
}

/// Whole-session summary followed by one summary per condition present.
pub fn summarize_session(log: &SessionLog, opts: &MetricsOptions) -> Vec<SubjectSummary> {
    let mut out = vec![summarize(&log.subject_id, None, &log.trials, &log.scale_scores, opts)];
    for c in log.conditions() {
        let sub: Vec<TrialRecord> = log.trials.iter().filter(|t| t.condition == c).cloned().collect();
        out.push(summarize(&log.subject_id, Some(c), &sub, &log.scale_scores, opts));
    }
    out
}

/// Participant inclusion thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityPolicy {
    pub name: String,
    pub min_go_accuracy: f64,
    /// Minimum fraction of successfully inhibited stop trials.
    pub min_stop_success: Option<f64>,
    /// Maximum stop-failure (commission) rate.
    pub max_stop_failure: Option<f64>,
    /// Apply thresholds within every condition instead of the whole session.
    pub per_condition: bool,
}

impl QualityPolicy {
    pub fn study1() -> Self {
        Self {
            name: "study1".into(),
            min_go_accuracy: 0.05,
            min_stop_success: Some(0.05),
            max_stop_failure: None,
            per_condition: false,
        }
    }

    pub fn study2() -> Self {
        Self {
            name: "study2".into(),
            min_go_accuracy: 0.05,
            min_stop_success: None,
            max_stop_failure: Some(0.95),
            per_condition: true,
        }
    }

    pub fn strict(threshold: f64) -> Self {
        Self {
            name: format!("strict{}", (threshold * 100.0).round()),
            min_go_accuracy: threshold,
            min_stop_success: Some(threshold),
            max_stop_failure: None,
            per_condition: false,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "study1" => Some(Self::study1()),
            "study2" => Some(Self::study2()),
            "strict20" => Some(Self::strict(0.20)),
            "strict40" => Some(Self::strict(0.40)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectCode {
    PrimaryAccuracy,
    StopSuccess,
    Commission,
}

impl fmt::Display for RejectCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectCode::PrimaryAccuracy => "primary_accuracy",
            RejectCode::StopSuccess => "stop_success",
            RejectCode::Commission => "commission",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectReason {
    pub code: RejectCode,
    pub condition: Option<Condition>,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reasons", rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject(Vec<RejectReason>),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }

    /// `accept`, or `reject:` followed by the distinct reason codes.
    pub fn label(&self) -> String {
        match self {
            Verdict::Accept => "accept".into(),
            Verdict::Reject(r) => {
                let mut codes: Vec<String> = r.iter().map(|x| x.code.to_string()).collect();
                codes.dedup();
                format!("reject:{}", codes.join("+"))
            }
        }
    }
}

fn check(
    stats: ConditionStats,
    condition: Option<Condition>,
    policy: &QualityPolicy,
    reasons: &mut Vec<RejectReason>,
) -> Result<(), MetricsError> {
    let acc = stats.go_accuracy.ok_or(MetricsError::MissingField("go_accuracy"))?;
    if acc < policy.min_go_accuracy {
        reasons.push(RejectReason {
            code: RejectCode::PrimaryAccuracy,
            condition,
            value: acc,
            threshold: policy.min_go_accuracy,
        });
    }
    if policy.min_stop_success.is_some() || policy.max_stop_failure.is_some() {
        let sfr = stats.stop_failure_rate.ok_or(MetricsError::MissingField("stop_failure_rate"))?;
        if let Some(min) = policy.min_stop_success {
            if 1.0 - sfr < min {
                reasons.push(RejectReason { code: RejectCode::StopSuccess, condition, value: 1.0 - sfr, threshold: min });
            }
        }
        if let Some(max) = policy.max_stop_failure {
            if sfr > max {
                reasons.push(RejectReason { code: RejectCode::Commission, condition, value: sfr, threshold: max });
            }
        }
    }
    Ok(())
}

/// Accept/reject a subject under `policy`.
pub fn quality_filter(summary: &SubjectSummary, policy: &QualityPolicy) -> Result<Verdict, MetricsError> {
    let mut reasons = Vec::new();
    let overall = ConditionStats {
        stop_failure_rate: summary.stop_failure_rate,
        go_accuracy: summary.go_accuracy,
    };
    if policy.per_condition && !summary.condition_stats.is_empty() {
        for (c, stats) in &summary.condition_stats {
            check(*stats, Some(*c), policy, &mut reasons)?;
        }
    } else {
        check(overall, None, policy, &mut reasons)?;
    }
    Ok(if reasons.is_empty() { Verdict::Accept } else { Verdict::Reject(reasons) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::{TrialKind};
    use crate::trajectory::{PointerSample, Trajectory};

    fn traj() -> Trajectory {
        Trajectory::new(vec![PointerSample::new(0.0, 0.0, -0.8), PointerSample::new(16.0, 0.0, -0.7)]).unwrap()
    }

    fn trial(id: u32, kind: TrialKind, responded: bool, rt: Option<f64>, ssd: Option<f64>) -> TrialRecord {
        TrialRecord {
            trial_id: id,
            task: Task::Sst,
            condition: Condition::Neutral,
            kind: Some(kind),
            coherence: Some(50),
            ssd_ms: ssd,
            responded,
            rt_ms: rt,
            correct: responded.then_some(true),
            choice: None,
            offer: None,
            valence: None,
            arousal: None,
            trajectory: traj(),
            extra: BTreeMap::new(),
        }
    }

    fn stops(n: usize, failed: usize, ssd: f64) -> Vec<StopOutcome> {
        (0..n).map(|i| StopOutcome { ssd_ms: ssd, responded: i < failed }).collect()
    }

    #[test]
    fn failure_rate_counts() {
        let mut t: Vec<_> = (0..50).map(|i| trial(i, TrialKind::Stop, false, None, Some(200.0))).collect();
        assert_eq!(stop_failure_rate(&t).unwrap(), 0.0);
        for x in t.iter_mut().take(20) {
            x.responded = true;
            x.rt_ms = Some(500.0);
        }
        assert_eq!(stop_failure_rate(&t).unwrap(), 0.4);
        let go = vec![trial(0, TrialKind::Go, true, Some(400.0), None)];
        assert_eq!(stop_failure_rate(&go), Err(MetricsError::NoStopTrials));
    }

    #[test]
    fn ssrt_hand_example() {
        let go: Vec<_> = [300.0, 350.0, 400.0, 450.0, 500.0].iter().map(|&x| Some(x)).collect();
        let e = ssrt_integration(&go, &stops(5, 2, 200.0), SsrtOptions::default()).unwrap();
        assert_eq!(e.quantile_rt, 350.0);
        assert_eq!(e.ssrt, 150.0);
        assert_eq!(e.p_respond, 0.4);
    }

    #[test]
    fn ssrt_interpolated_quantile() {
        let go: Vec<_> = [300.0, 350.0, 400.0, 450.0, 500.0].iter().map(|&x| Some(x)).collect();
        let opts = SsrtOptions { quantile: QuantileRule::Interpolated, ..Default::default() };
        let e = ssrt_integration(&go, &stops(5, 2, 200.0), opts).unwrap();
        // h = 4·0.4 = 1.6 → 350 + 0.6·50
        assert!((e.quantile_rt - 380.0).abs() < 1e-9);
    }

    #[test]
    fn ssrt_degenerate_and_missing() {
        let go = vec![Some(400.0); 5];
        assert_eq!(
            ssrt_integration(&go, &stops(4, 4, 200.0), SsrtOptions::default()),
            Err(MetricsError::DegenerateStopRate(1.0))
        );
        assert_eq!(
            ssrt_integration(&go, &stops(4, 0, 200.0), SsrtOptions::default()),
            Err(MetricsError::DegenerateStopRate(0.0))
        );
        assert_eq!(
            ssrt_integration(&[None, None], &stops(4, 2, 200.0), SsrtOptions::default()),
            Err(MetricsError::NoGoRts)
        );
    }

    #[test]
    fn omission_policy_changes_distribution() {
        let go = vec![Some(300.0), Some(400.0), None, None];
        let ex = ssrt_integration(&go, &stops(4, 3, 100.0), SsrtOptions::default()).unwrap();
        let am = ssrt_integration(
            &go,
            &stops(4, 3, 100.0),
            SsrtOptions { omission: OmissionPolicy::AssignMax, ..Default::default() },
        )
        .unwrap();
        assert_eq!(ex.n_go_used, 2);
        assert_eq!(am.n_go_used, 4);
        assert_eq!(ex.quantile_rt, 400.0);
        assert_eq!(am.quantile_rt, 3000.0);
    }

    #[test]
    fn go_stats_two_point() {
        let t = vec![
            trial(0, TrialKind::Go, true, Some(400.0), None),
            trial(1, TrialKind::Go, true, Some(600.0), None),
            trial(2, TrialKind::Go, false, None, None),
        ];
        let g = go_stats(&t).unwrap();
        assert_eq!(g.go_rt_mean, Some(500.0));
        assert!((g.go_rt_sd.unwrap() - 141.421_356_237_309_5).abs() < 1e-9);
        assert!((g.go_accuracy - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(g.stop_rt_mean, None);
        let same = vec![trial(0, TrialKind::Go, true, Some(400.0), None); 3];
        assert_eq!(go_stats(&same).unwrap().go_rt_sd, Some(0.0));
        let stop_only = vec![trial(0, TrialKind::Stop, false, None, Some(100.0))];
        assert_eq!(go_stats(&stop_only), Err(MetricsError::NoGoTrials));
    }

    #[test]
    fn velocity_sd() {
        let f = |v| FeatureVector {
            total_distance: 1.0,
            max_velocity: v,
            max_acceleration: 0.0,
            auc: Some(0.0),
            stopping_distance: None,
            chord_fallback: false,
        };
        assert!((go_max_velocity_sd(&[f(1.0), f(2.0), f(3.0)]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(go_max_velocity_sd(&[f(2.0), f(2.0)]).unwrap(), 0.0);
        assert!(matches!(go_max_velocity_sd(&[f(1.0)]), Err(MetricsError::TooFewTrials { .. })));
    }

    fn summary(acc: f64, sfr: f64) -> SubjectSummary {
        let mut s = summarize("s", None, &[], &BTreeMap::new(), &MetricsOptions::default());
        s.go_accuracy = Some(acc);
        s.stop_failure_rate = Some(sfr);
        s
    }

    #[test]
    fn quality_presets() {
        let v = quality_filter(&summary(0.04, 0.5), &QualityPolicy::study1()).unwrap();
        assert_eq!(v.label(), "reject:primary_accuracy");
        let v = quality_filter(&summary(0.9, 1.0), &QualityPolicy::study2()).unwrap();
        assert_eq!(v.label(), "reject:commission");
        assert!(quality_filter(&summary(1.0, 0.5), &QualityPolicy::study1()).unwrap().is_accept());
        assert!(quality_filter(&summary(1.0, 0.5), &QualityPolicy::study2()).unwrap().is_accept());
        assert_eq!(
            quality_filter(&summary(0.3, 0.7), &QualityPolicy::strict(0.4)).unwrap().label(),
            "reject:primary_accuracy+stop_success"
        );
        let mut s = summary(1.0, 0.5);
        s.go_accuracy = None;
        assert_eq!(
            quality_filter(&s, &QualityPolicy::study1()),
            Err(MetricsError::MissingField("go_accuracy"))
        );
    }

    #[test]
    fn study2_checks_every_condition() {
        let mut s = summary(0.9, 0.5);
        s.condition_stats.insert(Condition::Neutral, ConditionStats { stop_failure_rate: Some(0.5), go_accuracy: Some(0.9) });
        s.condition_stats.insert(Condition::Pleasant, ConditionStats { stop_failure_rate: Some(0.97), go_accuracy: Some(0.9) });
        match quality_filter(&s, &QualityPolicy::study2()).unwrap() {
            Verdict::Reject(r) => {
                assert_eq!(r.len(), 1);
                assert_eq!(r[0].condition, Some(Condition::Pleasant));
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn commission_conventions_complement() {
        for p in [0.0, 0.25, 0.8] {
            let a = CommissionConvention::ResponseRate.report(p);
            let b = CommissionConvention::InhibitionRate.report(p);
            assert!((a + b - 1.0).abs() < 1e-15);
        }
    }
}
