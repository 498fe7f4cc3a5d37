use super::{dist, StatsError};

/// Rank offset of Blom scores: `Φ⁻¹((r − c)/(n − 2c + 1))` with c = 3/8.
pub const BLOM_OFFSET: f64 = 0.375;

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Rank-based inverse normal transform with Blom scores.
///
/// The output is aligned with the input. Callers that pool several
/// conditions should pass the pooled vector.
pub fn rank_inverse_normal(values: &[f64]) -> Result<Vec<f64>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = values.len() as f64;
    Ok(average_ranks(values)
        .into_iter()
        .map(|r| dist::normal_quantile((r - BLOM_OFFSET) / (n - 2.0 * BLOM_OFFSET + 1.0)))
        .collect())
}
