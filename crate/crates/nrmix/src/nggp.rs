//! Levy calculus of the normalized generalized Gamma process (NGGP).
//!
//! The NGGP with parameters `(a, sigma, tau)` is the normalization of a
//! completely random measure whose Levy intensity is
//! `a / Gamma(1 - sigma) * s^(-1 - sigma) * exp(-tau * s) ds`.
//! Everything a sampler needs reduces to a handful of scalar functions of the
//! parameters, an auxiliary variable `U > 0`, and the shape of the current
//! partition: the Laplace exponent [`psi`], the tilted moments [`log_kappa`],
//! the joint density [`log_joint_partition_u`] of the partition and `U`, the
//! conditional density [`log_cond_density_v`] of `V = log U`, and the
//! one-step [`predictive_weights`].
//!
//! All densities are computed in log space. `sigma = 0` is the Dirichlet
//! process and is handled by explicit closed-form branches rather than a
//! numerical limit.

use crate::{Error, Result};
use statrs::function::gamma::ln_gamma;

/// Parameters of a normalized generalized Gamma process.
///
/// Invariants enforced at construction: `a > 0`, `0 <= sigma < 1`,
/// `tau > 0`. `sigma = 0` selects the Dirichlet-process branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NggpParams {
    a: f64,
    sigma: f64,
    tau: f64,
}

impl NggpParams {
    pub fn new(a: f64, sigma: f64, tau: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::invalid_parameter(format!("mass a must be > 0, got {a}")));
        }
        if !(sigma.is_finite() && (0.0..1.0).contains(&sigma)) {
            return Err(Error::invalid_parameter(format!(
                "stability index sigma must lie in [0, 1), got {sigma}"
            )));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid_parameter(format!("tilt tau must be > 0, got {tau}")));
        }
        Ok(Self { a, sigma, tau })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Returns a copy with a different mass parameter.
    pub fn with_a(&self, a: f64) -> Result<Self> {
        Self::new(a, self.sigma, self.tau)
    }

    /// Returns a copy with a different stability index.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.a, sigma, self.tau)
    }

    /// Returns a copy with a different tilt.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.a, self.sigma, tau)
    }
}

/// The positive auxiliary variable `U`, stored as `V = log U`.
///
/// Working in the log domain keeps Metropolis proposals unconstrained and
/// avoids overflow for the large `U` values typical of large samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxiliaryU {
    v: f64,
}

impl AuxiliaryU {
    /// Construct from `V = log U`; `v` must be finite.
    pub fn from_log(v: f64) -> Result<Self> {
        if !v.is_finite() {
            return Err(Error::invalid_parameter(format!("log U must be finite, got {v}")));
        }
        Ok(Self { v })
    }

    /// Construct from `U > 0`.
    pub fn from_u(u: f64) -> Result<Self> {
        if !(u.is_finite() && u > 0.0) {
            return Err(Error::invalid_parameter(format!("U must be finite and > 0, got {u}")));
        }
        Ok(Self { v: u.ln() })
    }

    /// `V = log U`.
    pub fn v(&self) -> f64 {
        self.v
    }

    /// `U = exp(V)`.
    pub fn u(&self) -> f64 {
        self.v.exp()
    }
}

/// Shape of a partition: the number of observations and the multiset of
/// cluster sizes. Exchangeability means every density here depends on the
/// partition only through this shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionShape {
    n: usize,
    sizes: Vec<usize>,
}

impl PartitionShape {
    /// Builds a shape from cluster sizes; every size must be >= 1.
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::invalid_parameter("cluster sizes must be >= 1"));
        }
        let n = sizes.iter().sum();
        Ok(Self { n, sizes })
    }

    /// The empty shape (no observations).
    pub fn empty() -> Self {
        Self { n: 0, sizes: Vec::new() }
    }

    /// Total number of observations.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of clusters.
    pub fn num_clusters(&self) -> usize {
        self.sizes.len()
    }

    /// Cluster sizes in deterministic (insertion) order.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }
}

/// `log(exp(v) + tau)` without overflow for any finite `v`.
pub(crate) fn log_exp_plus(v: f64, tau: f64) -> f64 {
    let lt = tau.ln();
    let m = v.max(lt);
    m + ((v - m).exp() + (lt - m).exp()).ln()
}

/// Laplace exponent evaluated from `L = log(u + tau)`.
fn psi_from_log(log_u_plus_tau: f64, p: &NggpParams) -> f64 {
    let lt = p.tau.ln();
    if p.sigma == 0.0 {
        p.a * (log_u_plus_tau - lt)
    } else {
        // (a/sigma) * ((u+tau)^sigma - tau^sigma), written with expm1 so the
        // difference stays accurate for small sigma and small u.
        p.a * ((p.sigma * log_u_plus_tau).exp_m1() - (p.sigma * lt).exp_m1()) / p.sigma
    }
}

/// Laplace exponent of the underlying tilted CRM:
/// `psi(u) = (a/sigma) * ((u + tau)^sigma - tau^sigma)`, with the
/// `sigma = 0` limit `a * log(1 + u/tau)`.
///
/// `psi(0) = 0`, and `psi` is increasing and finite for all finite `u >= 0`.
pub fn psi(u: f64, p: &NggpParams) -> f64 {
    debug_assert!(u >= 0.0);
    psi_from_log((u + p.tau).ln(), p)
}

/// Log of the `m`-th moment of the exponentially tilted Levy measure:
/// `log kappa_m(u) = log a - (m - sigma) log(u + tau)
///                   + log Gamma(m - sigma) - log Gamma(1 - sigma)`.
///
/// `kappa_m` is decreasing in `u` for every `m >= 1`.
pub fn log_kappa(m: u32, u: f64, p: &NggpParams) -> f64 {
    debug_assert!(m >= 1);
    debug_assert!(u >= 0.0);
    let md = f64::from(m);
    p.a.ln() - (md - p.sigma) * (u + p.tau).ln() + ln_gamma(md - p.sigma)
        - ln_gamma(1.0 - p.sigma)
}

/// One-step predictive probabilities given a partition shape and `U`.
///
/// Returns `(new_cluster, per_cluster)` probabilities summing to 1:
/// the next observation opens a new cluster with probability proportional to
/// `a (U + tau)^sigma` and joins an existing cluster `c` with probability
/// proportional to `|c| - sigma`. At `sigma = 0` the weights reduce to the
/// `U`-independent closed form `a / (a + n)` and `|c| / (a + n)`.
pub fn predictive_weights(
    shape: &PartitionShape,
    u: &AuxiliaryU,
    p: &NggpParams,
) -> (f64, Vec<f64>) {
    let n = shape.n as f64;
    if p.sigma == 0.0 {
        let z = p.a + n;
        let per = shape.sizes.iter().map(|&s| s as f64 / z).collect();
        return (p.a / z, per);
    }
    let k = shape.num_clusters() as f64;
    let log_q = p.a.ln() + p.sigma * log_exp_plus(u.v(), p.tau);
    let q = log_q.exp();
    let z = q + n - p.sigma * k;
    let per = shape.sizes.iter().map(|&s| (s as f64 - p.sigma) / z).collect();
    (q / z, per)
}

/// Log joint density of the partition and the auxiliary variable at `u > 0`:
///
/// ```text
/// (n-1) log u - log Gamma(n) + |pi| log a - (n - sigma |pi|) log(u + tau)
///   - psi(u) + sum_c [log Gamma(|c| - sigma) - log Gamma(1 - sigma)]
/// ```
///
/// Integrating over `u` and summing over partitions of `[n]` gives 1.
pub fn log_joint_partition_u(shape: &PartitionShape, u: f64, p: &NggpParams) -> f64 {
    debug_assert!(shape.n >= 1);
    debug_assert!(u > 0.0);
    let n = shape.n as f64;
    let k = shape.num_clusters() as f64;
    let log_u_plus_tau = (u + p.tau).ln();
    let mut lp = (n - 1.0) * u.ln() - ln_gamma(n) + k * p.a.ln()
        - (n - p.sigma * k) * log_u_plus_tau
        - psi_from_log(log_u_plus_tau, p);
    let lg1ms = ln_gamma(1.0 - p.sigma);
    for &s in &shape.sizes {
        lp += ln_gamma(s as f64 - p.sigma) - lg1ms;
    }
    lp
}

/// Log of the unnormalized conditional density of `V = log U` given the
/// partition shape:
///
/// ```text
/// n v - (n - sigma |pi|) log(e^v + tau) - psi(e^v)
/// ```
///
/// This function is concave in `v`, which the Metropolis update for `U`
/// relies on for geometric tail decay.
pub fn log_cond_density_v(v: f64, shape: &PartitionShape, p: &NggpParams) -> f64 {
    debug_assert!(shape.n >= 1);
    let n = shape.n as f64;
    let k = shape.num_clusters() as f64;
    let le = log_exp_plus(v, p.tau);
    n * v - (n - p.sigma * k) * le - psi_from_log(le, p)
}

/// Log Dirichlet-process partition probability
/// `log [ Gamma(a) a^|pi| / Gamma(a + n) * prod_c Gamma(|c|) ]`.
pub fn log_dp_eppf(shape: &PartitionShape, a: f64) -> f64 {
    let n = shape.n as f64;
    let k = shape.num_clusters() as f64;
    let mut lp = ln_gamma(a) + k * a.ln() - ln_gamma(a + n);
    for &s in &shape.sizes {
        lp += ln_gamma(s as f64);
    }
    lp
}

/// Dirichlet-process partition probability (the `sigma = 0` marginal law of
/// the partition), computed in log space.
pub fn dp_eppf(shape: &PartitionShape, a: f64) -> f64 {
    log_dp_eppf(shape, a).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: f64, sigma: f64, tau: f64) -> NggpParams {
        NggpParams::new(a, sigma, tau).unwrap()
    }

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "expected {expected}, got {actual} (tol {tol})"
        );
    }

    #[test]
    fn params_rejects_out_of_domain() {
        assert!(NggpParams::new(0.0, 0.5, 1.0).is_err());
        assert!(NggpParams::new(1.0, 1.0, 1.0).is_err());
        assert!(NggpParams::new(1.0, -0.1, 1.0).is_err());
        assert!(NggpParams::new(1.0, 0.5, 0.0).is_err());
        assert!(NggpParams::new(1.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn psi_closed_forms() {
        assert_eq!(psi(0.0, &params(1.0, 0.5, 1.0)), 0.0);
        assert_eq!(psi(0.0, &params(2.0, 0.0, 3.0)), 0.0);
        // (a/sigma)((u+tau)^sigma - tau^sigma) = 2 (sqrt(4) - 1) = 2.
        assert_close(psi(3.0, &params(1.0, 0.5, 1.0)), 2.0, 1e-12);
        // Dirichlet branch a log(1 + u/tau) at u = e - 1.
        assert_close(psi(std::f64::consts::E - 1.0, &params(2.0, 0.0, 1.0)), 2.0, 1e-12);
    }

    #[test]
    fn psi_monotone_in_u() {
        for p in [params(1.0, 0.0, 1.0), params(2.0, 0.3, 0.5), params(0.5, 0.9, 2.0)] {
            let mut prev = psi(0.0, &p);
            for i in 1..200 {
                let u = 0.1 * f64::from(i);
                let next = psi(u, &p);
                assert!(next > prev, "psi not increasing at u={u} for {p:?}");
                prev = next;
            }
        }
    }

    #[test]
    fn psi_continuous_at_small_sigma() {
        // The general branch must approach the Dirichlet branch as sigma -> 0.
        let dp = psi(2.0, &params(1.5, 0.0, 0.7));
        let near = psi(2.0, &params(1.5, 1e-12, 0.7));
        assert_close(near, dp, 1e-9);
    }

    #[test]
    fn log_kappa_closed_forms() {
        assert_close(log_kappa(1, 0.0, &params(1.0, 0.5, 1.0)), 0.0, 1e-12);
        // Gamma(1.5) = 0.5 Gamma(0.5).
        assert_close(log_kappa(2, 0.0, &params(1.0, 0.5, 1.0)), 0.5_f64.ln(), 1e-12);
        // Dirichlet case kappa_1(u) = a / (u + tau).
        assert_close(log_kappa(1, 0.0, &params(3.0, 0.0, 1.0)), 3.0_f64.ln(), 1e-12);
    }

    #[test]
    fn log_kappa_decreasing_in_u() {
        let p = params(1.3, 0.4, 0.8);
        for m in [1u32, 2, 5] {
            let mut prev = log_kappa(m, 0.0, &p);
            for i in 1..100 {
                let u = 0.2 * f64::from(i);
                let next = log_kappa(m, u, &p);
                assert!(next < prev, "kappa_{m} not decreasing at u={u}");
                prev = next;
            }
        }
    }

    #[test]
    fn predictive_weights_hand_values() {
        let shape = PartitionShape::new(vec![2, 1]).unwrap();
        let u = AuxiliaryU::from_u(1e-300).unwrap(); // effectively U = 0
        let (newp, per) = predictive_weights(&shape, &u, &params(1.0, 0.5, 1.0));
        assert_close(newp, 1.0 / 3.0, 1e-12);
        assert_close(per[0], 0.5, 1e-12);
        assert_close(per[1], 1.0 / 6.0, 1e-12);
    }

    #[test]
    fn predictive_weights_dp_branch_ignores_u() {
        let shape = PartitionShape::new(vec![3, 2]).unwrap();
        let p = params(1.5, 0.0, 1.0);
        for u in [0.01, 1.0, 100.0] {
            let (newp, per) = predictive_weights(&shape, &AuxiliaryU::from_u(u).unwrap(), &p);
            assert_eq!(newp, 1.5 / 6.5);
            assert_eq!(per, vec![3.0 / 6.5, 2.0 / 6.5]);
        }
    }

    #[test]
    fn predictive_weights_empty_shape_opens_cluster() {
        let (newp, per) =
            predictive_weights(&PartitionShape::empty(), &AuxiliaryU::from_u(2.0).unwrap(), &params(1.0, 0.5, 1.0));
        assert_close(newp, 1.0, 1e-12);
        assert!(per.is_empty());
    }

    #[test]
    fn predictive_weights_sum_to_one() {
        let p = params(2.0, 0.7, 0.5);
        let shape = PartitionShape::new(vec![4, 1, 2]).unwrap();
        for v in [-5.0, 0.0, 5.0, 50.0] {
            let (newp, per) = predictive_weights(&shape, &AuxiliaryU::from_log(v).unwrap(), &p);
            let total: f64 = newp + per.iter().sum::<f64>();
            assert_close(total, 1.0, 1e-12);
            assert!(newp > 0.0 && per.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn joint_matches_dp_two_observations() {
        // n = 2, sigma = 0, a = 1: P[{1,2} together] = 1/(a+1) = 1/2, which the
        // closed-form Dirichlet law gives directly.
        let together = PartitionShape::new(vec![2]).unwrap();
        let apart = PartitionShape::new(vec![1, 1]).unwrap();
        assert_close(dp_eppf(&together, 1.0), 0.5, 1e-12);
        assert_close(dp_eppf(&apart, 1.0), 0.5, 1e-12);
    }

    #[test]
    fn joint_scaling_identity() {
        // Under (a, sigma, tau, u) -> (a c^sigma, sigma, tau/c, u/c) the joint
        // changes exactly by the log-Jacobian of the u substitution.
        let shape = PartitionShape::new(vec![3, 1, 2]).unwrap();
        let p = params(1.4, 0.6, 0.9);
        for c in [0.1_f64, 2.0, 10.0] {
            let scaled = params(1.4 * c.powf(0.6), 0.6, 0.9 / c);
            for u in [0.3, 1.0, 7.5] {
                let lhs = log_joint_partition_u(&shape, u, &p);
                let rhs = log_joint_partition_u(&shape, u / c, &scaled) - c.ln();
                assert_close(lhs, rhs, 1e-10);
            }
        }
    }

    #[test]
    fn cond_density_v_concave_on_grid() {
        let p = params(1.0, 0.5, 1.0);
        let shape = PartitionShape::new(vec![4, 3, 3]).unwrap();
        let h = 0.05;
        for i in 0..400 {
            let v = -10.0 + h * f64::from(i);
            let second = log_cond_density_v(v + h, &shape, &p)
                - 2.0 * log_cond_density_v(v, &shape, &p)
                + log_cond_density_v(v - h, &shape, &p);
            assert!(second <= 1e-9, "second difference {second} > 0 at v={v}");
        }
    }

    #[test]
    fn cond_density_v_matches_joint_up_to_constant() {
        // The v-density equals the joint at u = e^v plus the Jacobian v, up to
        // terms constant in u.
        let p = params(2.0, 0.3, 1.5);
        let shape = PartitionShape::new(vec![2, 2, 1]).unwrap();
        let offset = |v: f64| {
            log_cond_density_v(v, &shape, &p) - log_joint_partition_u(&shape, v.exp(), &p) - v
        };
        let base = offset(0.0);
        for v in [-3.0, -1.0, 0.5, 2.0, 4.0] {
            assert_close(offset(v), base, 1e-9);
        }
    }

    #[test]
    fn cond_density_v_mode_solves_stationarity() {
        // For n = 1, |pi| = 1, sigma = 0 the maximizer in the u domain solves
        // n/u - n/(u+tau) - a/(u+tau) = 0, i.e. u* = tau / a.
        let p = params(0.7, 0.0, 1.3);
        let shape = PartitionShape::new(vec![1]).unwrap();
        let (mut lo, mut hi) = (-20.0, 20.0);
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if log_cond_density_v(m1, &shape, &p) < log_cond_density_v(m2, &shape, &p) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        let u_star = ((lo + hi) / 2.0).exp();
        assert_close(u_star, 1.3 / 0.7, 1e-6);
    }

    #[test]
    fn dp_eppf_hand_values() {
        assert_close(dp_eppf(&PartitionShape::new(vec![2]).unwrap(), 1.0), 0.5, 1e-12);
        assert_close(dp_eppf(&PartitionShape::new(vec![1, 1]).unwrap(), 1.0), 0.5, 1e-12);
    }
}
