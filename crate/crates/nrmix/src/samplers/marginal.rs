//! Marginal Gibbs sampler for conjugate kernels.
//!
//! Component parameters are integrated out analytically: each observation is
//! reassigned by a categorical draw whose weights combine the partition
//! predictive weights with the kernel's closed-form cluster predictives.

use rand::RngCore;

use super::hyper::{update_process_hypers, update_sigma0_with_instantiation, update_u};
use super::{observation_order, ChainState, SamplerConfig, ScanOrder, SweepOperator};
use crate::kernels::ClusterStats;
use crate::nggp::log_exp_plus;
use crate::numeric::sample_log_categorical;
use crate::partition::{AttachTarget, ClusterId};
use crate::{Data, Error, Result};

pub struct MarginalConjugate {
    scan: ScanOrder,
    priors: super::HyperPriors,
    update_u_enabled: bool,
}

impl MarginalConjugate {
    pub fn new(config: &SamplerConfig) -> Result<Self> {
        config.priors.validate()?;
        Ok(Self { scan: config.scan, priors: config.priors.clone(), update_u_enabled: true })
    }

    /// Disables the `U` update, leaving `log U` frozen. This deliberately
    /// breaks the transition kernel and exists so validation harnesses can
    /// confirm they detect a broken sampler.
    pub fn with_u_update_disabled(mut self) -> Self {
        self.update_u_enabled = false;
        self
    }

    /// One label update for observation `i`.
    fn update_label(&self, state: &mut ChainState, data: &Data, i: usize, rng: &mut dyn RngCore) {
        state.partition.detach(data, i);
        let y = data.row(i);
        let p = &state.params;
        let ids: Vec<ClusterId> = state.partition.cluster_ids().to_vec();
        let mut log_w = Vec::with_capacity(ids.len() + 1);
        for &id in &ids {
            let size = state.partition.size(id) as f64;
            log_w.push((size - p.sigma()).ln() + state.base.log_predictive(y, state.partition.stats(id)));
        }
        let empty = ClusterStats::zero(data.dim());
        log_w.push(
            p.a().ln()
                + p.sigma() * log_exp_plus(state.u.v(), p.tau())
                + state.base.log_predictive(y, &empty),
        );
        let choice = sample_log_categorical(&log_w, rng);
        let target = if choice < ids.len() {
            AttachTarget::Existing(ids[choice])
        } else {
            AttachTarget::New(None)
        };
        state.partition.attach(data, i, target);
    }
}

impl SweepOperator for MarginalConjugate {
    fn name(&self) -> &'static str {
        "marg-conj"
    }

    fn init(&self, state: &mut ChainState, _data: &Data, _rng: &mut dyn RngCore) -> Result<()> {
        if !state.base.is_conjugate() {
            return Err(Error::invalid_config(
                "the marginal sampler requires a conjugate kernel; \
                 use neal8, reuse, or slice for nonconjugate models",
            ));
        }
        state.atoms = None;
        state.slices.clear();
        state.empty_pool.clear();
        Ok(())
    }

    fn sweep(&self, state: &mut ChainState, data: &Data, rng: &mut dyn RngCore) {
        for i in observation_order(data.len(), self.scan, rng) {
            self.update_label(state, data, i, rng);
        }
        if self.update_u_enabled {
            update_u(state, rng);
        }
        update_process_hypers(state, &self.priors, rng);
        if self.priors.infer_sigma0 {
            update_sigma0_with_instantiation(state, rng);
        }
    }
}
