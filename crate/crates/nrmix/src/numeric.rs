//! Small numerical helpers shared across modules.

use rand::Rng;

/// `log(sum(exp(x_i)))` with max subtraction; `-inf` for an empty slice or a
/// slice of `-inf` values.
pub(crate) fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Draws an index proportional to `exp(log_w[i])`. At least one weight must
/// be finite.
pub(crate) fn sample_log_categorical<R: Rng + ?Sized>(log_w: &[f64], rng: &mut R) -> usize {
    let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    debug_assert!(m.is_finite(), "all categorical log-weights are -inf");
    let weights: Vec<f64> = log_w.iter().map(|&x| (x - m).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut target = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        target -= w;
        if target <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}
