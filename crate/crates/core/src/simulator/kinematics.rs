use crate::trajectory::{Point, PointerSample};

/// Minimum-jerk position fraction at normalized time `tau ∈ [0, 1]`.
fn min_jerk(tau: f64) -> f64 {
    let t = tau.clamp(0.0, 1.0);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

/// Peak speed (units/s) of a straight minimum-jerk reach of length `length`
/// lasting `duration_ms`.
pub fn min_jerk_peak_velocity(length: f64, duration_ms: f64) -> f64 {
    1.875 * length / (duration_ms / 1000.0)
}

/// A single reach from `start` to `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovementPlan {
    pub start: Point,
    pub end: Point,
    pub onset_ms: f64,
    pub duration_ms: f64,
    /// Signed half-sine deviation; positive bends left of the start→end direction.
    pub bump: f64,
    /// The cursor freezes from this time on (successful stops).
    pub freeze_at: Option<f64>,
}

impl MovementPlan {
    pub fn position(&self, t: f64) -> Point {
        let t = self.freeze_at.map_or(t, |f| t.min(f));
        let s = min_jerk((t - self.onset_ms) / self.duration_ms);
        let dx = self.end.x - self.start.x;
        let dy = self.end.y - self.start.y;
        let len = dx.hypot(dy);
        let (nx, ny) = if len > 0.0 { (-dy / len, dx / len) } else { (0.0, 0.0) };
        let off = self.bump * (std::f64::consts::PI * s).sin();
        Point::new(self.start.x + s * dx + off * nx, self.start.y + s * dy + off * ny)
    }

    /// Samples every `interval_ms` from 0 up to `end_ms`, plus a final sample
    /// at `end_ms` when it falls between ticks.
    pub fn sample(&self, interval_ms: u32, end_ms: f64) -> Vec<PointerSample> {
        let step = interval_ms as f64;
        let mut out = Vec::with_capacity((end_ms / step) as usize + 2);
        let mut t = 0.0;
        while t <= end_ms {
            let p = self.position(t);
            out.push(PointerSample::new(t, p.x, p.y));
            t += step;
        }
        if out.last().is_none_or(|s| s.t < end_ms) {
            let p = self.position(end_ms);
            out.push(PointerSample::new(end_ms, p.x, p.y));
        }
        out
    }
}

/// Bump amplitude sign that bends the path towards `other`.
pub(crate) fn bump_towards(start: Point, end: Point, other: Point, amplitude: f64) -> f64 {
    let (dx, dy) = (end.x - start.x, end.y - start.y);
    let (ox, oy) = (other.x - start.x, other.y - start.y);
    // left normal is (-dy, dx)
    let side = -dy * ox + dx * oy;
    if side >= 0.0 {
        amplitude
    } else {
        -amplitude
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{area_under_curve, max_velocity, total_distance};

    #[test]
    fn endpoints_and_freeze() {
        let plan = MovementPlan {
            start: Point::new(0.0, -0.8),
            end: Point::new(0.8, 0.8),
            onset_ms: 100.0,
            duration_ms: 400.0,
            bump: 0.1,
            freeze_at: None,
        };
        assert_eq!(plan.position(0.0), plan.start);
        let e = plan.position(500.0);
        assert!((e.x - 0.8).abs() < 1e-12 && (e.y - 0.8).abs() < 1e-12);
        let frozen = MovementPlan { freeze_at: Some(250.0), ..plan };
        assert_eq!(frozen.position(260.0), frozen.position(900.0));
    }

    #[test]
    fn straight_reach_peak_velocity() {
        let plan = MovementPlan {
            start: Point::new(0.0, -0.8),
            end: Point::new(0.0, 0.2),
            onset_ms: 37.0,
            duration_ms: 400.0,
            bump: 0.0,
            freeze_at: None,
        };
        let s = plan.sample(16, 437.0);
        let v = max_velocity(&s).unwrap();
        let peak = min_jerk_peak_velocity(1.0, 400.0);
        assert!((v - peak).abs() / peak < 0.01, "{v} vs {peak}");
        assert!((total_distance(&s).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bump_produces_analytic_area() {
        // chord progress is min-jerk, deviation 0.2·sin(π s): area = 0.4/π
        let plan = MovementPlan {
            start: Point::new(0.0, 0.0),
            end: Point::new(1.0, 0.0),
            onset_ms: 0.0,
            duration_ms: 1000.0,
            bump: 0.2,
            freeze_at: None,
        };
        let s = plan.sample(16, 1000.0);
        let auc = area_under_curve(&s, plan.start, plan.end).unwrap();
        let exact = 0.4 / std::f64::consts::PI;
        assert!((auc - exact).abs() / exact < 0.01, "{auc}");
    }

    #[test]
    fn bump_sign_points_to_other_button() {
        let start = Point::new(0.0, -0.8);
        let right = Point::new(0.8, 0.8);
        let left = Point::new(-0.8, 0.8);
        let b = bump_towards(start, right, left, 0.1);
        let plan = MovementPlan { start, end: right, onset_ms: 0.0, duration_ms: 100.0, bump: b, freeze_at: None };
        let mid = plan.position(50.0);
        // straight-line x at the same progress is 0.4; bending left lowers it
        assert!(mid.x < 0.4);
    }
}
