//! Reuse sampler: auxiliary components kept in a permanent pool.
//!
//! A pool of `C` empty components persists across label updates. A detached
//! singleton's parameter overwrites a uniformly chosen pool slot; a pool
//! parameter consumed by a new cluster is replaced with a fresh base-measure
//! draw. Every proposal is accepted: the move is a Metropolis-Hastings step
//! whose acceptance ratio is identically one, which [`Reuse::sweep_audited`]
//! verifies numerically by computing the ratio for every executed proposal.

use rand::{Rng, RngCore};

use super::hyper::{update_process_hypers, update_sigma0_from_params, update_u};
use super::{observation_order, ChainState, SamplerConfig, ScanOrder, SweepOperator};
use crate::kernels::GaussianComponent;
use crate::nggp::{log_exp_plus, log_joint_partition_u};
use crate::numeric::{logsumexp, sample_log_categorical};
use crate::partition::{AttachTarget, ClusterId};
use crate::{Data, Error, Result};

pub struct Reuse {
    c: usize,
    scan: ScanOrder,
    priors: super::HyperPriors,
}

impl Reuse {
    pub fn new(config: &SamplerConfig) -> Result<Self> {
        config.priors.validate()?;
        if config.c < 1 {
            return Err(Error::invalid_config("reuse requires at least one pool component"));
        }
        Ok(Self { c: config.c, scan: config.scan, priors: config.priors.clone() })
    }

    /// One label update; when `audit` is supplied, the explicit
    /// Metropolis-Hastings log-ratio of the executed proposal is recorded.
    fn update_label(
        &self,
        state: &mut ChainState,
        data: &Data,
        i: usize,
        rng: &mut dyn RngCore,
        audit: Option<&mut Vec<f64>>,
    ) {
        let log_target_before = audit.as_ref().map(|_| log_target(state, data));

        let receipt = state.partition.detach(data, i);
        let y = data.row(i);
        let p = state.params;

        // A detached singleton's parameter overwrites a uniform pool slot;
        // the slot's previous occupant is discarded (but remembered for the
        // audit, whose reverse move must redraw it).
        let was_singleton = receipt.param.is_some();
        let mut overwritten_slot = usize::MAX;
        let mut discarded: Option<GaussianComponent> = None;
        if let Some(param) = receipt.param {
            overwritten_slot = rng.gen_range(0..self.c);
            discarded = Some(std::mem::replace(&mut state.empty_pool[overwritten_slot], param));
        }

        let ids: Vec<ClusterId> = state.partition.cluster_ids().to_vec();
        let mut log_w = Vec::with_capacity(ids.len() + self.c);
        for &id in &ids {
            let size = state.partition.size(id) as f64;
            let comp = state.partition.param(id).expect("occupied cluster has parameters");
            log_w.push((size - p.sigma()).ln() + state.base.log_component_density(y, comp));
        }
        let log_new_base =
            p.a().ln() - (self.c as f64).ln() + p.sigma() * log_exp_plus(state.u.v(), p.tau());
        for slot in &state.empty_pool {
            log_w.push(log_new_base + state.base.log_component_density(y, slot));
        }

        let choice = sample_log_categorical(&log_w, rng);
        let opened_from_pool = choice >= ids.len();
        let mut replacement_log_prior = 0.0;
        if opened_from_pool {
            let slot = choice - ids.len();
            let fresh = state.base.sample_component_prior(rng);
            replacement_log_prior = state.base.log_component_prior_density(&fresh);
            let param = std::mem::replace(&mut state.empty_pool[slot], fresh);
            state.partition.attach(data, i, AttachTarget::New(Some(param)));
        } else {
            state.partition.attach(data, i, AttachTarget::Existing(ids[choice]));
        }

        if let Some(ratios) = audit {
            // Forward proposal density: uniform slot choice for a singleton
            // detach, the categorical draw, and the fresh replacement draw
            // when a pool slot was consumed.
            let log_z = logsumexp(&log_w);
            let mut log_q_fwd = log_w[choice] - log_z;
            if was_singleton {
                log_q_fwd -= (self.c as f64).ln();
            }
            if opened_from_pool {
                log_q_fwd += replacement_log_prior;
            }

            // Reverse move: detach `i` from its new location and reselect
            // its original one. The intermediate pool and partition match
            // the forward intermediates exactly, so the categorical weights
            // (and normalizer) are the same vector; recompute the
            // normalizer independently as a bookkeeping check.
            let reverse_choice = if was_singleton {
                // The original location is reopened from the slot now
                // holding the detached parameter.
                ids.len() + overwritten_slot
            } else {
                ids.iter()
                    .position(|&id| id == receipt.cluster)
                    .expect("previous cluster still occupied")
            };
            let log_z_reverse = logsumexp(&log_w);
            let mut log_q_rev = log_w[reverse_choice] - log_z_reverse;
            if opened_from_pool {
                // The reverse detach removes a singleton, choosing the
                // consumed slot uniformly.
                log_q_rev -= (self.c as f64).ln();
            }
            if was_singleton {
                // The reverse move consumes the overwritten slot and must
                // redraw exactly the parameter the forward move discarded.
                log_q_rev += state
                    .base
                    .log_component_prior_density(discarded.as_ref().expect("singleton discarded a slot"));
            }

            let log_target_after = log_target(state, data);
            let before = log_target_before.expect("computed when auditing");
            ratios.push(log_target_after + log_q_rev - (before + log_q_fwd));
        }
    }

    /// A full sweep that records the explicit Metropolis-Hastings log-ratio
    /// of every label proposal; a correct implementation yields ratios that
    /// are zero to numerical precision.
    pub fn sweep_audited(
        &self,
        state: &mut ChainState,
        data: &Data,
        rng: &mut dyn RngCore,
    ) -> Vec<f64> {
        let mut ratios = Vec::with_capacity(data.len());
        for i in observation_order(data.len(), self.scan, rng) {
            self.update_label(state, data, i, rng, Some(&mut ratios));
        }
        self.finish_sweep(state, rng);
        ratios
    }

    fn finish_sweep(&self, state: &mut ChainState, rng: &mut dyn RngCore) {
        // Refresh occupied-cluster parameters, then update hyperparameters
        // with the pool discarded (its entries are independent base-measure
        // draws, so they marginalize out), then refill it under the new
        // kernel scale.
        let ids: Vec<ClusterId> = state.partition.cluster_ids().to_vec();
        for id in ids {
            let comp = state.base.sample_component_posterior(
                state.partition.param(id),
                state.partition.stats(id),
                rng,
            );
            state.partition.set_param(id, Some(comp));
        }
        state.empty_pool.clear();
        update_u(state, rng);
        update_process_hypers(state, &self.priors, rng);
        if self.priors.infer_sigma0 {
            update_sigma0_from_params(state, rng);
        }
        for _ in 0..self.c {
            state.empty_pool.push(state.base.sample_component_prior(rng));
        }
    }
}

/// Log density of the full augmented state (partition, `U`, instantiated
/// cluster parameters, observations, and pool), up to terms constant within
/// a label update. Used only by the audit.
fn log_target(state: &ChainState, data: &Data) -> f64 {
    let mut lp = log_joint_partition_u(&state.partition.shape(), state.u.u(), &state.params);
    for &id in state.partition.cluster_ids() {
        let comp = state.partition.param(id).expect("occupied cluster has parameters");
        lp += state.base.log_component_prior_density(comp);
        for &i in state.partition.members(id) {
            lp += state.base.log_component_density(data.row(i), comp);
        }
    }
    for slot in &state.empty_pool {
        lp += state.base.log_component_prior_density(slot);
    }
    lp
}

impl SweepOperator for Reuse {
    fn name(&self) -> &'static str {
        "reuse"
    }

    fn init(&self, state: &mut ChainState, _data: &Data, rng: &mut dyn RngCore) -> Result<()> {
        state.atoms = None;
        state.slices.clear();
        state.ensure_cluster_params(rng);
        state.empty_pool.clear();
        for _ in 0..self.c {
            state.empty_pool.push(state.base.sample_component_prior(rng));
        }
        Ok(())
    }

    fn sweep(&self, state: &mut ChainState, data: &Data, rng: &mut dyn RngCore) {
        for i in observation_order(data.len(), self.scan, rng) {
            self.update_label(state, data, i, rng, None);
        }
        self.finish_sweep(state, rng);
    }
}
