use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::kinematics::{bump_towards, MovementPlan};
use super::{stream_seed, CohortSpec, SimError, SubjectParams};
use crate::discounting::{choice_probability, task_design};
use crate::session::{
    Choice, Condition, DdtOffer, Device, SessionKind, SessionLog, Side, Task, TrialKind, TrialRecord,
    RESPONSE_CAP_MS, SCHEMA_VERSION,
};
use crate::trajectory::{Trajectory, DEFAULT_START};

fn random_side<R: Rng>(rng: &mut R) -> Side {
    if rng.random::<bool>() {
        Side::Left
    } else {
        Side::Right
    }
}

fn speed_factor<R: Rng>(p: &SubjectParams, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    (1.0 + p.velocity_jitter * z).max(0.2)
}

fn reach(p: &SubjectParams, side: Side, click_ms: f64, speed: f64) -> MovementPlan {
    let end = side.button();
    let duration = (p.movement_time / speed).min(click_ms).max(1.0);
    MovementPlan {
        start: DEFAULT_START,
        end,
        onset_ms: click_ms - duration,
        duration_ms: duration,
        bump: bump_towards(DEFAULT_START, end, side.opposite().button(), p.curvature),
        freeze_at: None,
    }
}

fn record(
    id: u32,
    task: Task,
    condition: Condition,
    samples: Vec<crate::trajectory::PointerSample>,
    target: Option<crate::trajectory::Point>,
) -> TrialRecord {
    TrialRecord {
        trial_id: id,
        task,
        condition,
        kind: None,
        coherence: None,
        ssd_ms: None,
        responded: false,
        rt_ms: None,
        correct: None,
        choice: None,
        offer: None,
        valence: None,
        arousal: None,
        trajectory: Trajectory::with_endpoints(samples, DEFAULT_START, target)
            .expect("generated samples are strictly increasing"),
        extra: BTreeMap::new(),
    }
}

pub(crate) fn sst_block<R: Rng>(
    p: &SubjectParams,
    spec: &CohortSpec,
    condition: Condition,
    first_id: u32,
    rng: &mut R,
) -> Vec<TrialRecord> {
    let n = spec.trials_per_task;
    let n_stop = ((n as f64) * spec.stop_fraction).round() as usize;
    let mut kinds = vec![TrialKind::Stop; n_stop];
    kinds.resize(n, TrialKind::Go);
    kinds.shuffle(rng);

    let stop_latency = Normal::new(0.0, p.ssrt_sd).expect("validated ssrt_sd");
    let mut out = Vec::with_capacity(n);
    for (i, kind) in kinds.into_iter().enumerate() {
        let coherence = *spec.coherence_set.choose(rng).expect("non-empty");
        let direction = random_side(rng);
        let go_finish = p.go_rt.sample(rng).max(1.0);
        let speed = speed_factor(p, rng);
        let lapse = rng.random::<f64>() < p.lapse_rate;
        let side = if lapse { random_side(rng) } else { direction };

        let (ssd, stop_finish) = match kind {
            TrialKind::Go => (None, None),
            TrialKind::Stop => {
                let ssd = *spec.ssd_set.choose(rng).expect("non-empty");
                let noise = stop_latency.sample(rng);
                (Some(ssd), p.ssrt_true.map(|m| ssd + (m + noise).max(0.0)))
            }
        };
        let in_window = go_finish <= RESPONSE_CAP_MS;
        let responded = in_window && stop_finish.is_none_or(|s| go_finish < s);

        let mut plan = reach(p, side, go_finish, speed);
        if !responded {
            plan.freeze_at = stop_finish.map(|s| s + p.motor_lag);
        }
        let rt = responded.then(|| go_finish.round().clamp(1.0, RESPONSE_CAP_MS));
        let end_ms = rt.unwrap_or(RESPONSE_CAP_MS);
        let samples = plan.sample(spec.sample_interval_ms, end_ms);

        let mut t = record(first_id + i as u32, Task::Sst, condition, samples, responded.then(|| side.button()));
        t.kind = Some(kind);
        t.coherence = Some(coherence);
        t.ssd_ms = ssd;
        t.responded = responded;
        t.rt_ms = rt;
        t.correct = responded.then_some(side == direction);
        out.push(t);
    }
    out
}

pub(crate) fn ddt_block<R: Rng>(
    p: &SubjectParams,
    spec: &CohortSpec,
    condition: Condition,
    first_id: u32,
    rng: &mut R,
) -> Vec<TrialRecord> {
    let mut design = task_design();
    design.shuffle(rng);
    design
        .into_iter()
        .enumerate()
        .map(|(i, offer)| {
            let ll_side = random_side(rng);
            let p_ll = choice_probability(&offer, p.k_true, p.beta_true, spec.ddt_variant).expect("validated params");
            let lapse = rng.random::<f64>() < p.lapse_rate;
            let u: f64 = rng.random();
            let takes_ll = if lapse { u < 0.5 } else { u < p_ll };
            let choice = if takes_ll { Choice::LargerLater } else { Choice::SoonerSmaller };
            let side = if takes_ll { ll_side } else { ll_side.opposite() };
            let click = p.ddt_rt.sample(rng).max(200.0).round();
            let speed = speed_factor(p, rng);
            let samples = reach(p, side, click, speed).sample(spec.sample_interval_ms, click);

            let mut t = record(first_id + i as u32, Task::Ddt, condition, samples, Some(side.button()));
            t.responded = true;
            t.rt_ms = Some(click);
            t.choice = Some(choice);
            t.offer = Some(DdtOffer {
                amount_ss: offer.amount_ss,
                delay_ss: offer.delay_ss,
                amount_ll: offer.amount_ll,
                delay_ll: offer.delay_ll,
                is_control: offer.is_control,
                ll_side: Some(ll_side),
            });
            t
        })
        .collect()
}

fn build(
    params: &SubjectParams,
    spec: &CohortSpec,
    subject_id: &str,
    subject_seed: u64,
    sst: bool,
    ddt: bool,
) -> Result<SessionLog, SimError> {
    params.validate()?;
    spec.validate()?;
    let mut trials = Vec::new();
    for (b, &condition) in spec.condition_schedule.iter().enumerate() {
        let eff = spec.condition_effects.get(&condition).copied().unwrap_or_default();
        let p = eff.apply(params);
        if sst {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(subject_seed, 2 * b as u64 + 1));
            let id = trials.len() as u32;
            trials.extend(sst_block(&p, spec, condition, id, &mut rng));
        }
        if ddt {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(subject_seed, 2 * b as u64 + 2));
            let id = trials.len() as u32;
            trials.extend(ddt_block(&p, spec, condition, id, &mut rng));
        }
    }
    Ok(SessionLog {
        schema_version: SCHEMA_VERSION,
        subject_id: subject_id.to_string(),
        session: SessionKind::Synthetic,
        device: Device::Mouse,
        created_at: spec.created_at,
        trials,
        scale_scores: params.scale_scores.clone(),
        extra: BTreeMap::new(),
    })
}

fn default_id(seed: u64) -> String {
    format!("sim-{seed:016x}")
}

/// Stop-signal blocks only, one per scheduled condition.
pub fn simulate_sst_session(params: &SubjectParams, spec: &CohortSpec, subject_seed: u64) -> Result<SessionLog, SimError> {
    build(params, spec, &default_id(subject_seed), subject_seed, true, false)
}

/// Delay-discounting blocks only: the 80-cell grid plus 10 controls per condition.
pub fn simulate_ddt_session(params: &SubjectParams, spec: &CohortSpec, subject_seed: u64) -> Result<SessionLog, SimError> {
    build(params, spec, &default_id(subject_seed), subject_seed, false, true)
}

/// Full session: per scheduled condition a stop-signal block followed by a
/// discounting block, as enabled in `spec`.
pub fn simulate_session(
    params: &SubjectParams,
    spec: &CohortSpec,
    subject_id: &str,
    subject_seed: u64,
) -> Result<SessionLog, SimError> {
    build(params, spec, subject_id, subject_seed, spec.include_sst, spec.include_ddt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{ssrt_from_trials, stop_failure_rate, SsrtOptions};
    use crate::trajectory::{stopping_distance, total_distance};

    fn spec(n: usize) -> CohortSpec {
        CohortSpec { trials_per_task: n, ..CohortSpec::study1() }
    }

    #[test]
    fn instantaneous_stop_always_wins() {
        let p = SubjectParams {
            ssrt_true: Some(0.0),
            go_rt: super::super::ExGaussian { mu: 800.0, sigma: 20.0, tau: 10.0 },
            ..Default::default()
        };
        let s = simulate_sst_session(&p, &spec(400), 1).unwrap();
        assert_eq!(stop_failure_rate(&s.trials).unwrap(), 0.0);
    }

    #[test]
    fn disabled_stop_always_fails() {
        let p = SubjectParams { ssrt_true: None, ..Default::default() };
        let s = simulate_sst_session(&p, &spec(400), 2).unwrap();
        assert_eq!(stop_failure_rate(&s.trials).unwrap(), 1.0);
    }

    #[test]
    fn stop_trial_counts_and_ssd() {
        let s = simulate_sst_session(&SubjectParams::default(), &spec(200), 3).unwrap();
        let stops: Vec<_> = s.trials.iter().filter(|t| t.is_stop()).collect();
        assert_eq!(stops.len(), 50);
        assert!(stops.iter().all(|t| t.ssd_ms.is_some()));
        assert!(s.trials.iter().filter(|t| t.is_go()).all(|t| t.ssd_ms.is_none()));
    }

    #[test]
    fn successful_stops_have_no_click() {
        let s = simulate_sst_session(&SubjectParams::default(), &spec(400), 4).unwrap();
        for t in s.trials.iter().filter(|t| t.is_stop()) {
            let sd = stopping_distance(t.trajectory.samples(), t.ssd_ms.unwrap()).unwrap();
            assert!(sd <= total_distance(t.trajectory.samples()).unwrap() + 1e-12);
            if !t.responded {
                assert!(t.trajectory.target().is_none() && t.rt_ms.is_none());
            }
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let a = simulate_session(&SubjectParams::default(), &spec(50), "x", 9).unwrap();
        let b = simulate_session(&SubjectParams::default(), &spec(50), "x", 9).unwrap();
        assert_eq!(a, b);
        let c = simulate_session(&SubjectParams::default(), &spec(50), "x", 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn constant_ssrt_is_recovered_with_many_trials() {
        let s = simulate_sst_session(&SubjectParams::default(), &spec(10_000), 11).unwrap();
        let e = ssrt_from_trials(&s.trials, SsrtOptions::default()).unwrap();
        assert!((e.ssrt - 250.0).abs() < 5.0, "{}", e.ssrt);
    }

    #[test]
    fn ddt_block_shape() {
        let s = simulate_ddt_session(&SubjectParams::default(), &spec(10), 5).unwrap();
        assert_eq!(s.trials.len(), 90);
        assert_eq!(s.trials.iter().filter(|t| t.offer.unwrap().is_control).count(), 10);
        assert!(s.trials.iter().all(|t| t.choice.is_some() && t.trajectory.target().is_some()));
    }

    #[test]
    fn deterministic_chooser_maximizes_value() {
        let p = SubjectParams { beta_true: 1e6, lapse_rate: 0.0, ..Default::default() };
        let s = simulate_ddt_session(&p, &spec(10), 6).unwrap();
        for t in &s.trials {
            let o = t.offer.unwrap();
            let v_ll = o.amount_ll / (1.0 + p.k_true * o.delay_ll);
            let want = if v_ll > o.amount_ss { Choice::LargerLater } else { Choice::SoonerSmaller };
            assert_eq!(t.choice, Some(want));
        }
    }

    #[test]
    fn patient_chooser_takes_later() {
        let p = SubjectParams { k_true: 1e-5, beta_true: 5.0, lapse_rate: 0.0, ..Default::default() };
        let s = simulate_ddt_session(&p, &spec(10), 7).unwrap();
        let ll = s.trials.iter().filter(|t| !t.offer.unwrap().is_control && t.choice == Some(Choice::LargerLater)).count();
        assert_eq!(ll, 80);
    }
}
