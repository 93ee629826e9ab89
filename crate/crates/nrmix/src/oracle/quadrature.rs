//! Log-domain quadrature for peaked one-dimensional integrands.
//!
//! The reference computations in this crate repeatedly need
//! `log integral exp(g(v)) dv` where `g` is unimodal with fast-decaying
//! tails (for example the conditional density of `log U`). The scheme here
//! locates the mode, brackets a window in which the integrand falls far
//! below its peak, and applies a composite Simpson rule with node doubling
//! until successive estimates agree.

use crate::numeric::logsumexp;

/// Locates the maximizer of a unimodal function by expanding a bracket
/// uphill from `guess` and then shrinking it by ternary search.
/// Returns `(mode, f(mode))`.
pub fn find_mode<F: Fn(f64) -> f64>(f: &F, guess: f64) -> (f64, f64) {
    let mut a = guess - 1.0;
    let mut m = guess;
    let mut b = guess + 1.0;
    let (mut fa, mut fm, mut fb) = (f(a), f(m), f(b));
    let mut step = 1.0;
    for _ in 0..300 {
        if fm >= fa && fm >= fb {
            break;
        }
        step *= 2.0;
        if fb >= fa {
            a = m;
            fa = fm;
            m = b;
            fm = fb;
            b = m + step;
            fb = f(b);
        } else {
            b = m;
            fb = fm;
            m = a;
            fm = fa;
            a = m - step;
            fa = f(a);
        }
    }
    let mut iter = 0;
    while b - a > 1e-10 * (1.0 + a.abs() + b.abs()) && iter < 400 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if f(m1) < f(m2) {
            a = m1;
        } else {
            b = m2;
        }
        iter += 1;
    }
    let mode = 0.5 * (a + b);
    (mode, f(mode))
}

/// Expands outward from the mode until the function has dropped at least
/// `drop` below `f_mode` on both sides; returns the window `(lo, hi)`.
pub fn tail_window<F: Fn(f64) -> f64>(f: &F, mode: f64, f_mode: f64, drop: f64) -> (f64, f64) {
    let target = f_mode - drop;
    let mut step = 1.0;
    let mut lo = mode - step;
    while f(lo) > target && step < 1e12 {
        step *= 2.0;
        lo = mode - step;
    }
    let mut step = 1.0;
    let mut hi = mode + step;
    while f(hi) > target && step < 1e12 {
        step *= 2.0;
        hi = mode + step;
    }
    (lo, hi)
}

/// Composite Simpson rule on `[lo, hi]` with `n` subintervals (`n` even),
/// evaluated entirely in log space: returns `log integral exp(log_f)`.
pub fn log_simpson<F: Fn(f64) -> f64>(log_f: &F, lo: f64, hi: f64, n: usize) -> f64 {
    assert!(n >= 2 && n % 2 == 0, "Simpson rule needs an even node count >= 2");
    let h = (hi - lo) / n as f64;
    let mut terms = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let w: f64 = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        terms.push(log_f(lo + h * i as f64) + w.ln());
    }
    logsumexp(&terms) + (h / 3.0).ln()
}

/// `log integral exp(log_f(v)) dv` over the real line for a peaked unimodal
/// integrand. The mode is located from `guess`, the window extends until the
/// integrand is 60 nats below the peak, and Simpson nodes are doubled until
/// the log estimate changes by less than `rel_tol`.
pub fn log_integrate_peaked<F: Fn(f64) -> f64>(log_f: &F, guess: f64, rel_tol: f64) -> f64 {
    let (mode, f_mode) = find_mode(log_f, guess);
    let (lo, hi) = tail_window(log_f, mode, f_mode, 60.0);
    log_integrate_window(log_f, lo, hi, rel_tol)
}

/// `log integral exp(log_f)` over `[lo, hi]` with node doubling to `rel_tol`.
pub fn log_integrate_window<F: Fn(f64) -> f64>(
    log_f: &F,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> f64 {
    let mut n = 512;
    let mut prev = log_simpson(log_f, lo, hi, n);
    loop {
        n *= 2;
        let next = log_simpson(log_f, lo, hi, n);
        if (next - prev).abs() < rel_tol || n >= (1 << 21) {
            return next;
        }
        prev = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_integral_is_sqrt_two_pi() {
        let log_f = |v: f64| -0.5 * v * v;
        let got = log_integrate_peaked(&log_f, 3.0, 1e-12);
        let expect = 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((got - expect).abs() < 1e-10, "got {got}, expect {expect}");
    }

    #[test]
    fn shifted_scaled_gaussian() {
        // N(mu, s^2) kernel integrates to s * sqrt(2 pi) regardless of the
        // starting guess.
        let (mu, s) = (-20.0, 0.05);
        let log_f = move |v: f64| -0.5 * ((v - mu) / s).powi(2);
        let got = log_integrate_peaked(&log_f, 5.0, 1e-12);
        let expect = (s * (2.0 * std::f64::consts::PI).sqrt()).ln();
        assert!((got - expect).abs() < 1e-9, "got {got}, expect {expect}");
    }

    #[test]
    fn gamma_normalizer_recovered() {
        // integral over v of exp(k v - e^v) = Gamma(k) (density of log of a
        // Gamma(k, 1) variable).
        use statrs::function::gamma::ln_gamma;
        for k in [0.5, 1.0, 4.2, 30.0] {
            let log_f = move |v: f64| k * v - v.exp();
            let got = log_integrate_peaked(&log_f, 0.0, 1e-12);
            assert!(
                (got - ln_gamma(k)).abs() < 1e-9,
                "k={k}: got {got}, expect {}",
                ln_gamma(k)
            );
        }
    }

    #[test]
    fn mode_location_is_accurate() {
        let log_f = |v: f64| -(v - 7.25).powi(2);
        let (mode, _) = find_mode(&log_f, -100.0);
        assert!((mode - 7.25).abs() < 1e-7);
    }
}
