use super::ConditionMatrix;

/// Within-subject standard error per condition.
///
/// Each row is centered on the grand mean (subject mean removed), then the
/// per-condition SEM is inflated by `sqrt(k/(k − 1))`.
pub fn within_subject_sem(data: &ConditionMatrix) -> Vec<f64> {
    let n = data.n_subjects() as f64;
    let k = data.n_conditions() as f64;
    let rows = data.rows();
    let grand = rows.iter().flatten().sum::<f64>() / (n * k);
    let normalized: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let m = r.iter().sum::<f64>() / k;
            r.iter().map(|y| y - m + grand).collect()
        })
        .collect();
    let correction = (k / (k - 1.0)).sqrt();
    (0..data.n_conditions())
        .map(|j| {
            let col: Vec<f64> = normalized.iter().map(|r| r[j]).collect();
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt() * correction
        })
        .collect()
}
