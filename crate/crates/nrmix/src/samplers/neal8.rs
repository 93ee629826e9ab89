//! Auxiliary-component Gibbs sampler with `C` temporaries per label update.
//!
//! Works with any kernel: instead of integrating component parameters out,
//! each label update draws `C` temporary components from the base measure
//! (reusing a detached singleton's parameter as the first temporary), makes
//! one categorical draw over existing clusters plus temporaries, and then
//! discards the unused temporaries.

use rand::RngCore;

use super::hyper::{update_process_hypers, update_sigma0_from_params, update_u};
use super::{observation_order, ChainState, SamplerConfig, ScanOrder, SweepOperator};
use crate::kernels::GaussianComponent;
use crate::nggp::log_exp_plus;
use crate::numeric::sample_log_categorical;
use crate::partition::{AttachTarget, ClusterId};
use crate::{Data, Error, Result};

pub struct Neal8 {
    c: usize,
    scan: ScanOrder,
    priors: super::HyperPriors,
}

impl Neal8 {
    pub fn new(config: &SamplerConfig) -> Result<Self> {
        config.priors.validate()?;
        if config.c < 1 {
            return Err(Error::invalid_config("neal8 requires at least one auxiliary component"));
        }
        Ok(Self { c: config.c, scan: config.scan, priors: config.priors.clone() })
    }

    fn update_label(&self, state: &mut ChainState, data: &Data, i: usize, rng: &mut dyn RngCore) {
        let receipt = state.partition.detach(data, i);
        let y = data.row(i);
        let p = state.params;

        // Temporary components: a detached singleton's parameter occupies
        // the first slot, the rest are fresh base-measure draws.
        let mut temps: Vec<GaussianComponent> = Vec::with_capacity(self.c);
        if let Some(param) = receipt.param {
            temps.push(param);
        }
        while temps.len() < self.c {
            temps.push(state.base.sample_component_prior(rng));
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
        for temp in &temps {
            log_w.push(log_new_base + state.base.log_component_density(y, temp));
        }

        let choice = sample_log_categorical(&log_w, rng);
        if choice < ids.len() {
            state.partition.attach(data, i, AttachTarget::Existing(ids[choice]));
        } else {
            let comp = temps.swap_remove(choice - ids.len());
            state.partition.attach(data, i, AttachTarget::New(Some(comp)));
        }
    }
}

impl SweepOperator for Neal8 {
    fn name(&self) -> &'static str {
        "neal8"
    }

    fn init(&self, state: &mut ChainState, _data: &Data, rng: &mut dyn RngCore) -> Result<()> {
        state.atoms = None;
        state.slices.clear();
        state.empty_pool.clear();
        state.ensure_cluster_params(rng);
        Ok(())
    }

    fn sweep(&self, state: &mut ChainState, data: &Data, rng: &mut dyn RngCore) {
        for i in observation_order(data.len(), self.scan, rng) {
            self.update_label(state, data, i, rng);
        }
        // Refresh occupied-cluster parameters from their conditionals.
        let ids: Vec<ClusterId> = state.partition.cluster_ids().to_vec();
        for id in ids {
            let comp = state.base.sample_component_posterior(
                state.partition.param(id),
                state.partition.stats(id),
                rng,
            );
            state.partition.set_param(id, Some(comp));
        }
        update_u(state, rng);
        update_process_hypers(state, &self.priors, rng);
        if self.priors.infer_sigma0 {
            update_sigma0_from_params(state, rng);
        }
    }
}
