//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the estimators it is used to check.

#![allow(dead_code)]

use impulsekit::trajectory::{Point, PointerSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Random cursor path: integer-ms timestamps with irregular gaps, random-walk positions.
pub struct RandomPath {
    pub samples: Vec<PointerSample>,
    pub start: Point,
    pub target: Point,
    pub stop_onset: f64,
}

pub fn random_path<R: Rng>(rng: &mut R) -> RandomPath {
    let n = rng.random_range(3..120);
    let mut t = rng.random_range(0..20) as f64;
    let (mut x, mut y) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        samples.push(PointerSample { t, x, y });
        t += rng.random_range(1..40) as f64;
        x += rng.random_range(-0.1..0.1);
        y += rng.random_range(-0.1..0.1);
    }
    let start = Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let target = loop {
        let p = Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if (p.x - start.x).hypot(p.y - start.y) > 0.1 {
            break p;
        }
    };
    let (t0, t1) = (samples[0].t, samples[n - 1].t);
    let stop_onset = rng.random_range(t0..=t1).round();
    RandomPath { samples, start, target, stop_onset }
}

pub fn oracle_total_distance(s: &[PointerSample]) -> f64 {
    let mut d = 0.0;
    for i in 1..s.len() {
        d += ((s[i].x - s[i - 1].x).powi(2) + (s[i].y - s[i - 1].y).powi(2)).sqrt();
    }
    d
}

fn oracle_speeds(s: &[PointerSample]) -> Vec<f64> {
    (1..s.len())
        .map(|i| {
            let d = ((s[i].x - s[i - 1].x).powi(2) + (s[i].y - s[i - 1].y).powi(2)).sqrt();
            d * 1000.0 / (s[i].t - s[i - 1].t)
        })
        .collect()
}

pub fn oracle_max_velocity(s: &[PointerSample]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for v in oracle_speeds(s) {
        if v > best {
            best = v;
        }
    }
    best
}

/// Largest change between consecutive segment speeds; per second² when
/// `per_time` is set (divided by the spacing of the segment midpoints).
pub fn oracle_max_acceleration(s: &[PointerSample], per_time: bool) -> f64 {
    let v = oracle_speeds(s);
    let mut best = f64::NEG_INFINITY;
    for i in 1..v.len() {
        let mid_prev = (s[i - 1].t + s[i].t) / 2.0;
        let mid_next = (s[i].t + s[i + 1].t) / 2.0;
        let a = if per_time { (v[i] - v[i - 1]) / ((mid_next - mid_prev) / 1000.0) } else { v[i] - v[i - 1] };
        if a > best {
            best = a;
        }
    }
    best
}

/// Signed area by the shoelace formula on the polygon formed by the path
/// and the feet of its endpoints on the chord line, in the original frame.
pub fn oracle_auc(s: &[PointerSample], a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let l2 = dx * dx + dy * dy;
    let foot = |p: &PointerSample| {
        let u = ((p.x - a.x) * dx + (p.y - a.y) * dy) / l2;
        (a.x + u * dx, a.y + u * dy)
    };
    let mut poly = vec![foot(&s[0])];
    poly.extend(s.iter().map(|p| (p.x, p.y)));
    poly.push(foot(&s[s.len() - 1]));
    let mut twice = 0.0;
    for i in 0..poly.len() {
        let (x0, y0) = poly[i];
        let (x1, y1) = poly[(i + 1) % poly.len()];
        twice += x0 * y1 - x1 * y0;
    }
    // a path above a left-to-right chord traces the polygon clockwise
    -twice / 2.0
}

/// Path length after `onset`; a straddling segment counts in proportion to
/// its time after the onset.
pub fn oracle_stopping_distance(s: &[PointerSample], onset: f64) -> f64 {
    let mut d = 0.0;
    for i in 1..s.len() {
        let (t0, t1) = (s[i - 1].t, s[i].t);
        let len = ((s[i].x - s[i - 1].x).powi(2) + (s[i].y - s[i - 1].y).powi(2)).sqrt();
        if t0 >= onset {
            d += len;
        } else if t1 > onset {
            d += len * (t1 - onset) / (t1 - t0);
        }
    }
    d
}

/// Same quantity, by linear resampling on a 1 ms grid and summing the pieces.
pub fn dense_stopping_distance(s: &[PointerSample], onset: f64) -> f64 {
    let at = |t: f64| -> (f64, f64) {
        let i = s.partition_point(|p| p.t <= t).clamp(1, s.len() - 1);
        let (p, q) = (&s[i - 1], &s[i]);
        let f = ((t - p.t) / (q.t - p.t)).clamp(0.0, 1.0);
        (p.x + f * (q.x - p.x), p.y + f * (q.y - p.y))
    };
    let end = s[s.len() - 1].t;
    let mut t = onset.max(s[0].t);
    let mut d = 0.0;
    let mut prev = at(t);
    while t < end {
        let next_t = (t + 1.0).min(end);
        let cur = at(next_t);
        d += ((cur.0 - prev.0).powi(2) + (cur.1 - prev.1).powi(2)).sqrt();
        prev = cur;
        t = next_t;
    }
    d
}

/// Sum-of-squares partition of a subjects × conditions matrix.
pub struct Partition {
    pub ss_conditions: f64,
    pub ss_subjects: f64,
    pub ss_error: f64,
    pub ss_total: f64,
    pub df_error: f64,
}

pub fn partition(y: &[Vec<f64>]) -> Partition {
    let n = y.len();
    let k = y[0].len();
    let grand = y.iter().flatten().sum::<f64>() / (n * k) as f64;
    let mut ss_total = 0.0;
    for row in y {
        for v in row {
            ss_total += (v - grand).powi(2);
        }
    }
    let mut ss_subjects = 0.0;
    for row in y {
        let m = row.iter().sum::<f64>() / k as f64;
        ss_subjects += k as f64 * (m - grand).powi(2);
    }
    let mut ss_conditions = 0.0;
    for j in 0..k {
        let m = y.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        ss_conditions += n as f64 * (m - grand).powi(2);
    }
    Partition {
        ss_conditions,
        ss_subjects,
        ss_error: ss_total - ss_subjects - ss_conditions,
        ss_total,
        df_error: ((n - 1) * (k - 1)) as f64,
    }
}

/// Contrast t from the partition: ψ̂ / sqrt(MSE · Σw²/n).
pub fn contrast_from_partition(y: &[Vec<f64>], w: &[f64]) -> (f64, f64, f64) {
    let n = y.len() as f64;
    let p = partition(y);
    let mse = p.ss_error / p.df_error;
    let psi: f64 = w
        .iter()
        .enumerate()
        .map(|(j, wj)| wj * y.iter().map(|r| r[j]).sum::<f64>() / n)
        .sum();
    let sw2: f64 = w.iter().map(|x| x * x).sum();
    (psi / (mse * sw2 / n).sqrt(), p.df_error, mse)
}

/// Least squares by the normal equations, solved with Gauss-Jordan elimination.
pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, yi) in x.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += row[i] * row[j];
            }
            a[i][p] += row[i] * yi;
        }
    }
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        let d = a[c][c];
        for v in a[c].iter_mut() {
            *v /= d;
        }
        for r in 0..p {
            if r != c {
                let f = a[r][c];
                let pivot_row = a[c].clone();
                for (v, pv) in a[r].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    a.iter().map(|r| r[p]).collect()
}

/// Blom scores `Φ⁻¹((r − 3/8)/(n + 1/4))` computed at 40 digits, as `(n, rank, z)`.
pub const BLOM_REFERENCE: &[(usize, usize, f64)] = &[
    (3, 1, -0.869_423_773_288_885_976_83),
    (3, 2, 0.0),
    (3, 3, 0.869_423_773_288_885_976_83),
    (10, 1, -1.546_635_271_399_230_253),
    (10, 2, -1.000_490_545_619_315_373_5),
    (10, 3, -0.655_423_505_234_426_600_33),
    (10, 4, -0.375_461_770_235_518_367_39),
    (10, 5, -0.122_580_843_888_802_434_03),
    (10, 6, 0.122_580_843_888_802_434_03),
    (10, 7, 0.375_461_770_235_518_367_39),
    (10, 8, 0.655_423_505_234_426_600_33),
    (10, 9, 1.000_490_545_619_315_373_5),
    (10, 10, 1.546_635_271_399_230_253),
    (200, 1, -2.734_780_042_461_305_778_5),
    (200, 2, -2.403_708_412_785_582_339_5),
    (200, 10, -1.663_912_894_971_236_548),
    (200, 50, -0.681_380_968_545_839_538_82),
    (200, 100, -0.006_258_788_114_260_246_206_6),
    (200, 101, 0.006_258_788_114_260_246_206_6),
    (200, 150, 0.665_676_374_615_524_625_38),
    (200, 199, 2.403_708_412_785_582_339_5),
    (200, 200, 2.734_780_042_461_305_778_5),
];
