use serde::{Deserialize, Serialize};

use super::{FeatureError, Point, PointerSample, Trajectory, DEGENERATE_CHORD_EPS};

/// How [`max_acceleration`] turns adjacent-segment velocity changes into a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccelerationMode {
    /// Velocity change divided by the time between segment midpoints (units/s²).
    #[default]
    TimeNormalized,
    /// Raw velocity difference between adjacent segments (units/s per step).
    PerStep,
}

/// Per-trial motion features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub total_distance: f64,
    pub max_velocity: f64,
    pub max_acceleration: f64,
    /// `None` only when no button was clicked and the cursor ended where it started.
    pub auc: Option<f64>,
    pub stopping_distance: Option<f64>,
    /// Set when the AUC chord ended at the last sample because no button was clicked.
    pub chord_fallback: bool,
}

impl FeatureVector {
    pub fn compute(
        traj: &Trajectory,
        stop_onset: Option<f64>,
        mode: AccelerationMode,
    ) -> Result<Self, FeatureError> {
        let samples = traj.samples();
        let (end, chord_fallback) = traj.chord_end().ok_or(FeatureError::TooFewSamples {
            required: 2,
            found: 0,
        })?;
        Ok(Self {
            total_distance: total_distance(samples)?,
            max_velocity: max_velocity(samples)?,
            max_acceleration: max_acceleration(samples, mode)?,
            auc: match area_under_curve(samples, traj.start(), end) {
                Err(FeatureError::DegenerateChord) if chord_fallback => None,
                r => Some(r?),
            },
            stopping_distance: stop_onset.map(|t| stopping_distance(samples, t)).transpose()?,
            chord_fallback,
        })
    }
}

fn require(samples: &[PointerSample], n: usize) -> Result<(), FeatureError> {
    if samples.len() < n {
        Err(FeatureError::TooFewSamples { required: n, found: samples.len() })
    } else {
        Ok(())
    }
}

fn segment_length(a: &PointerSample, b: &PointerSample) -> f64 {
    (b.x - a.x).hypot(b.y - a.y)
}

/// Segment speeds in units/second.
fn segment_velocities(samples: &[PointerSample]) -> Result<Vec<f64>, FeatureError> {
    samples
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let dt = w[1].t - w[0].t;
            if dt <= 0.0 {
                return Err(FeatureError::NonPositiveInterval { index: i + 1, dt });
            }
            Ok(segment_length(&w[0], &w[1]) / (dt / 1000.0))
        })
        .collect()
}

/// Path length: the sum of distances between consecutive samples.
pub fn total_distance(samples: &[PointerSample]) -> Result<f64, FeatureError> {
    require(samples, 2)?;
    Ok(samples.windows(2).map(|w| segment_length(&w[0], &w[1])).sum())
}

/// Largest segment speed, using the actual inter-sample interval.
pub fn max_velocity(samples: &[PointerSample]) -> Result<f64, FeatureError> {
    require(samples, 2)?;
    Ok(segment_velocities(samples)?.into_iter().fold(0.0, f64::max))
}

/// Largest increase in speed between two adjacent segments.
pub fn max_acceleration(
    samples: &[PointerSample],
    mode: AccelerationMode,
) -> Result<f64, FeatureError> {
    require(samples, 3)?;
    let v = segment_velocities(samples)?;
    let best = v
        .windows(2)
        .enumerate()
        .map(|(i, pair)| {
            let dv = pair[1] - pair[0];
            match mode {
                AccelerationMode::PerStep => dv,
                AccelerationMode::TimeNormalized => {
                    // midpoint spacing of segments i and i+1
                    let span_s = (samples[i + 2].t - samples[i].t) / 2.0 / 1000.0;
                    dv / span_s
                }
            }
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(best)
}

/// Signed area between the path and the chord `chord_start → chord_end`.
///
/// Samples are expressed in a frame where the chord lies on the positive
/// horizontal axis. Deviation to the left of the chord direction counts as
/// positive, so the result is area above minus area below.
pub fn area_under_curve(
    samples: &[PointerSample],
    chord_start: Point,
    chord_end: Point,
) -> Result<f64, FeatureError> {
    require(samples, 2)?;
    let dx = chord_end.x - chord_start.x;
    let dy = chord_end.y - chord_start.y;
    let len = dx.hypot(dy);
    if len <= DEGENERATE_CHORD_EPS {
        return Err(FeatureError::DegenerateChord);
    }
    let (ux, uy) = (dx / len, dy / len);
    let to_chord_frame = |s: &PointerSample| {
        let (px, py) = (s.x - chord_start.x, s.y - chord_start.y);
        (px * ux + py * uy, -px * uy + py * ux)
    };
    let mut area = 0.0;
    let mut prev = to_chord_frame(&samples[0]);
    for s in &samples[1..] {
        let cur = to_chord_frame(s);
        area += (cur.0 - prev.0) * (cur.1 + prev.1) / 2.0;
        prev = cur;
    }
    Ok(area)
}

/// Path length travelled at or after `stop_onset` (ms).
///
/// A segment straddling the onset contributes the fraction of its length
/// proportional to the time remaining after the onset.
pub fn stopping_distance(samples: &[PointerSample], stop_onset: f64) -> Result<f64, FeatureError> {
    if !stop_onset.is_finite() || stop_onset < 0.0 {
        return Err(FeatureError::InvalidStopOnset(stop_onset));
    }
    require(samples, 2)?;
    let mut dist = 0.0;
    for w in samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if b.t <= stop_onset {
            continue;
        }
        let len = segment_length(a, b);
        if a.t >= stop_onset {
            dist += len;
        } else {
            dist += len * (b.t - stop_onset) / (b.t - a.t);
        }
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line(n: usize, step_ms: f64, from: Point, to: Point) -> Vec<PointerSample> {
        (0..n)
            .map(|i| {
                let f = i as f64 / (n - 1) as f64;
                PointerSample::new(
                    i as f64 * step_ms,
                    from.x + f * (to.x - from.x),
                    from.y + f * (to.y - from.y),
                )
            })
            .collect()
    }

    #[test]
    fn stationary_cursor_has_zero_motion() {
        let s: Vec<_> = (0..10).map(|i| PointerSample::new(16.0 * i as f64, 0.0, -0.8)).collect();
        assert_eq!(total_distance(&s).unwrap(), 0.0);
        assert_eq!(max_velocity(&s).unwrap(), 0.0);
        assert_eq!(max_acceleration(&s, AccelerationMode::TimeNormalized).unwrap(), 0.0);
    }

    #[test]
    fn straight_path_length() {
        let s = line(51, 16.0, Point::new(0.0, -0.8), Point::new(0.0, 0.2));
        assert_relative_eq!(total_distance(&s).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_speed_velocity() {
        // 0.02 units per 16 ms
        let s: Vec<_> = (0..20).map(|i| PointerSample::new(16.0 * i as f64, 0.02 * i as f64, 0.0)).collect();
        assert_relative_eq!(max_velocity(&s).unwrap(), 1.25, epsilon = 1e-9);
        for mode in [AccelerationMode::TimeNormalized, AccelerationMode::PerStep] {
            assert!(max_acceleration(&s, mode).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn two_segment_acceleration() {
        // v1 = 0.5 units/s, v2 = 1.5 units/s at 16 ms cadence
        let s = vec![
            PointerSample::new(0.0, 0.0, 0.0),
            PointerSample::new(16.0, 0.008, 0.0),
            PointerSample::new(32.0, 0.008 + 0.024, 0.0),
        ];
        assert_relative_eq!(
            max_acceleration(&s, AccelerationMode::PerStep).unwrap(),
            1.0,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            max_acceleration(&s, AccelerationMode::TimeNormalized).unwrap(),
            62.5,
            epsilon = 1e-7
        );
    }

    #[test]
    fn too_few_samples() {
        let s = vec![PointerSample::new(0.0, 0.0, 0.0)];
        assert_eq!(
            total_distance(&s),
            Err(FeatureError::TooFewSamples { required: 2, found: 1 })
        );
        let s = vec![PointerSample::new(0.0, 0.0, 0.0), PointerSample::new(16.0, 0.0, 0.0)];
        assert!(matches!(
            max_acceleration(&s, AccelerationMode::default()),
            Err(FeatureError::TooFewSamples { required: 3, .. })
        ));
    }

    #[test]
    fn non_positive_interval_is_reported() {
        let s = vec![PointerSample::new(0.0, 0.0, 0.0), PointerSample::new(0.0, 1.0, 0.0)];
        assert!(matches!(max_velocity(&s), Err(FeatureError::NonPositiveInterval { .. })));
    }

    #[test]
    fn auc_on_chord_is_zero() {
        let a = Point::new(0.0, -0.8);
        let b = Point::new(0.8, 0.8);
        let s = line(30, 16.0, a, b);
        assert!(area_under_curve(&s, a, b).unwrap().abs() < 1e-12);
    }

    #[test]
    fn auc_degenerate_chord() {
        let s = line(3, 16.0, Point::new(0.0, 0.0), Point::new(1.0, 0.0));
        let p = Point::new(0.3, 0.3);
        assert_eq!(area_under_curve(&s, p, p), Err(FeatureError::DegenerateChord));
    }

    #[test]
    fn auc_half_sine_bump() {
        // 0.2·sin(πs) over a unit chord, 1 unit per second sampled at 16 ms
        let n = 1000.0 / 16.0;
        let mut s: Vec<_> = (0..=62)
            .map(|i| {
                let u = i as f64 / n;
                PointerSample::new(16.0 * i as f64, u, 0.2 * (std::f64::consts::PI * u).sin())
            })
            .collect();
        s.push(PointerSample::new(1000.0, 1.0, 0.0));
        let auc = area_under_curve(&s, Point::new(0.0, 0.0), Point::new(1.0, 0.0)).unwrap();
        let exact = 0.4 / std::f64::consts::PI;
        assert!((auc - exact).abs() / exact < 0.01, "{auc}");
    }

    #[test]
    fn auc_s_curve_cancels() {
        let s: Vec<_> = (0..=100)
            .map(|i| {
                let u = i as f64 / 100.0;
                PointerSample::new(10.0 * i as f64, u, 0.1 * (2.0 * std::f64::consts::PI * u).sin())
            })
            .collect();
        let auc = area_under_curve(&s, Point::new(0.0, 0.0), Point::new(1.0, 0.0)).unwrap();
        assert!(auc.abs() < 1e-6);
    }

    #[test]
    fn stopping_distance_proration() {
        // 1.0 units over 1000 ms at constant speed
        let s: Vec<_> = (0..=10).map(|i| PointerSample::new(100.0 * i as f64, 0.1 * i as f64, 0.0)).collect();
        assert_relative_eq!(stopping_distance(&s, 400.0).unwrap(), 0.6, epsilon = 1e-12);
        assert_relative_eq!(stopping_distance(&s, 450.0).unwrap(), 0.55, epsilon = 1e-12);
        assert_relative_eq!(stopping_distance(&s, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(stopping_distance(&s, 1000.0).unwrap(), 0.0);
        assert_eq!(stopping_distance(&s, 5000.0).unwrap(), 0.0);
        assert!(stopping_distance(&s, -1.0).is_err());
    }

    #[test]
    fn frozen_after_stop_onset() {
        let mut s: Vec<_> = (0..10).map(|i| PointerSample::new(16.0 * i as f64, 0.01 * i as f64, 0.0)).collect();
        let last = *s.last().unwrap();
        for i in 10..30 {
            s.push(PointerSample::new(16.0 * i as f64, last.x, last.y));
        }
        assert_eq!(stopping_distance(&s, 16.0 * 9.0).unwrap(), 0.0);
    }

    #[test]
    fn trial_level_features() {
        let s = line(20, 16.0, Point::new(0.0, -0.8), Point::new(0.8, 0.8));
        let t = Trajectory::with_endpoints(s, Point::new(0.0, -0.8), Some(Point::new(0.8, 0.8))).unwrap();
        let f = t.features(Some(100.0), AccelerationMode::default()).unwrap();
        assert!(!f.chord_fallback);
        let sd = f.stopping_distance.unwrap();
        assert!(sd >= 0.0 && sd <= f.total_distance);
        assert!(t.features(None, AccelerationMode::default()).unwrap().stopping_distance.is_none());
    }
}
