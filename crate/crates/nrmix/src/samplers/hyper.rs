//! Hyperparameter updates shared by all samplers.
//!
//! Each update conditions only on the partition shape (plus, for the scale
//! hyperparameter, the instantiated components), so the same functions serve
//! the marginal and conditional algorithms alike. One update per
//! hyperparameter is performed per sweep.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

use super::ChainState;
use crate::nggp::{log_cond_density_v, psi, AuxiliaryU, NggpParams};
use crate::{Error, Result};

/// Priors and inference switches for the process hyperparameters.
///
/// Defaults follow the weakly informative choices used throughout the test
/// suite: `a ~ Gamma(1, 1)`, `sigma ~ Beta(1, 2)`, `tau` fixed at its
/// configured value, and the kernel scale `Sigma0` inferred.
#[derive(Debug, Clone)]
pub struct HyperPriors {
    /// Shape of the gamma prior on the mass parameter `a`.
    pub a_shape: f64,
    /// Rate of the gamma prior on `a`.
    pub a_rate: f64,
    /// First shape of the beta prior on the stability index `sigma`.
    pub sigma_shape1: f64,
    /// Second shape of the beta prior on `sigma`.
    pub sigma_shape2: f64,
    /// Shape of the gamma prior on the tilt `tau` (used when inferred).
    pub tau_shape: f64,
    /// Rate of the gamma prior on `tau`.
    pub tau_rate: f64,
    pub infer_a: bool,
    pub infer_sigma: bool,
    pub infer_tau: bool,
    pub infer_sigma0: bool,
}

impl Default for HyperPriors {
    fn default() -> Self {
        Self {
            a_shape: 1.0,
            a_rate: 1.0,
            sigma_shape1: 1.0,
            sigma_shape2: 2.0,
            tau_shape: 1.0,
            tau_rate: 1.0,
            infer_a: true,
            infer_sigma: true,
            infer_tau: false,
            infer_sigma0: true,
        }
    }
}

impl HyperPriors {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a_shape", self.a_shape),
            ("a_rate", self.a_rate),
            ("sigma_shape1", self.sigma_shape1),
            ("sigma_shape2", self.sigma_shape2),
            ("tau_shape", self.tau_shape),
            ("tau_rate", self.tau_rate),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid_config(format!(
                    "hyperprior parameter {name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Standard deviation of the Gaussian random-walk proposals for `log U` and
/// `log tau` (variance 1/4).
const LOG_WALK_SD: f64 = 0.5;

/// One Metropolis step on `V = log U` targeting the conditional density of
/// `V` given the partition shape.
pub fn update_u(state: &mut ChainState, rng: &mut dyn rand::RngCore) {
    let shape = state.partition.shape();
    let v = state.u.v();
    let proposal = v + LOG_WALK_SD * rng.sample::<f64, _>(StandardNormal);
    let log_accept = log_cond_density_v(proposal, &shape, &state.params)
        - log_cond_density_v(v, &shape, &state.params);
    if log_accept >= 0.0 || rng.gen::<f64>().ln() < log_accept {
        state.u = AuxiliaryU::from_log(proposal).expect("proposal is finite");
    }
}

/// Exact gamma full-conditional draw for the mass parameter `a`: the shape
/// grows by the number of clusters and the rate by `psi(U) / a`, which does
/// not depend on `a`.
pub fn update_a(state: &mut ChainState, priors: &HyperPriors, rng: &mut dyn rand::RngCore) {
    let k = state.partition.num_clusters() as f64;
    let p = &state.params;
    let unit = NggpParams::new(1.0, p.sigma(), p.tau()).expect("parameter domain preserved");
    let rate = priors.a_rate + psi(state.u.u(), &unit);
    let shape = priors.a_shape + k;
    let draw = Gamma::new(shape, 1.0 / rate)
        .expect("gamma parameters positive")
        .sample(rng)
        .max(f64::MIN_POSITIVE);
    state.params = state.params.with_a(draw).expect("positive draw");
}

/// One Metropolis step on `log tau` targeting the conditional of `tau` given
/// the partition shape and `U`, with a gamma prior on `tau`.
pub fn update_tau(state: &mut ChainState, priors: &HyperPriors, rng: &mut dyn rand::RngCore) {
    let shape = state.partition.shape();
    let n = shape.n() as f64;
    let k = shape.num_clusters() as f64;
    let (a, sigma) = (state.params.a(), state.params.sigma());
    let u = state.u.u();
    // Log conditional of w = log tau, including the prior's Jacobian term.
    let log_target = |w: f64| -> f64 {
        let tau = w.exp();
        let p = NggpParams::new(a, sigma, tau).expect("tau > 0");
        priors.tau_shape * w - priors.tau_rate * tau - (n - sigma * k) * (u + tau).ln()
            - psi(u, &p)
    };
    let w = state.params.tau().ln();
    let proposal = w + LOG_WALK_SD * rng.sample::<f64, _>(StandardNormal);
    let log_accept = log_target(proposal) - log_target(w);
    if log_accept >= 0.0 || rng.gen::<f64>().ln() < log_accept {
        state.params = state.params.with_tau(proposal.exp()).expect("positive tau");
    }
}

/// One slice-sampling update of the stability index `sigma` on `(0, 1)` with
/// a beta prior, conditioning on the partition shape and `U`.
///
/// Stepping out uses initial width 0.1 clamped to the support; shrinkage is
/// unlimited.
pub fn update_sigma(state: &mut ChainState, priors: &HyperPriors, rng: &mut dyn rand::RngCore) {
    let shape = state.partition.shape();
    let sizes: Vec<usize> = shape.sizes().to_vec();
    let k = sizes.len() as f64;
    let (a, tau) = (state.params.a(), state.params.tau());
    let u = state.u.u();
    let log_u_plus_tau = (u + tau).ln();

    let log_target = |s: f64| -> f64 {
        if !(0.0..1.0).contains(&s) {
            return f64::NEG_INFINITY;
        }
        let p = NggpParams::new(a, s, tau).expect("sigma in [0, 1)");
        let prior1 = if priors.sigma_shape1 == 1.0 { 0.0 } else { (priors.sigma_shape1 - 1.0) * s.ln() };
        let prior2 = if priors.sigma_shape2 == 1.0 {
            0.0
        } else {
            (priors.sigma_shape2 - 1.0) * (-s).ln_1p()
        };
        let mut lp = prior1 + prior2 + s * k * log_u_plus_tau - psi(u, &p);
        let lg1ms = ln_gamma(1.0 - s);
        for &size in &sizes {
            if size > 1 {
                lp += ln_gamma(size as f64 - s) - lg1ms;
            }
        }
        lp
    };

    let current = state.params.sigma();
    let height = log_target(current) - rng.sample::<f64, _>(rand_distr::Exp1);
    // Stepping out with width 0.1, clamped to the support.
    let width = 0.1;
    let mut lo = (current - width * rng.gen::<f64>()).max(0.0);
    let mut hi = (lo + width).min(1.0);
    while lo > 0.0 && log_target(lo) > height {
        lo = (lo - width).max(0.0);
    }
    while hi < 1.0 && log_target(hi) > height {
        hi = (hi + width).min(1.0);
    }
    // Shrinkage until a point under the curve is found.
    loop {
        let candidate = lo + (hi - lo) * rng.gen::<f64>();
        if log_target(candidate) > height {
            state.params = state.params.with_sigma(candidate).expect("sigma in [0, 1)");
            return;
        }
        if candidate < current {
            lo = candidate;
        } else {
            hi = candidate;
        }
    }
}

/// Gibbs update of the kernel scale `Sigma0` using the instantiated
/// parameters of every occupied cluster.
pub fn update_sigma0_from_params(state: &mut ChainState, rng: &mut dyn rand::RngCore) {
    let comps = state.partition.params_in_order();
    state.base.update_sigma0(&comps, rng);
}

/// Gibbs update of `Sigma0` for the marginal sampler: component parameters
/// are drawn from their exact conditionals given the clusters, used for the
/// scale update, and discarded.
pub fn update_sigma0_with_instantiation(state: &mut ChainState, rng: &mut dyn rand::RngCore) {
    let comps: Vec<_> = state
        .partition
        .cluster_ids()
        .to_vec()
        .into_iter()
        .map(|id| state.base.sample_component_posterior(None, state.partition.stats(id), rng))
        .collect();
    state.base.update_sigma0(&comps, rng);
}

/// The shared tail of every sweep: `a`, `tau`, and `sigma` updates in a
/// fixed order, honoring the inference switches. The `U` update and the
/// `Sigma0` update are invoked separately because samplers differ in when
/// and how they perform them.
pub fn update_process_hypers(
    state: &mut ChainState,
    priors: &HyperPriors,
    rng: &mut dyn rand::RngCore,
) {
    if priors.infer_a {
        update_a(state, priors, rng);
    }
    if priors.infer_tau {
        update_tau(state, priors, rng);
    }
    if priors.infer_sigma {
        update_sigma(state, priors, rng);
    }
}
