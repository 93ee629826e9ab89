//! The four posterior samplers and their shared chain state.
//!
//! Every algorithm is exposed as a [`SweepOperator`]: one call advances the
//! chain by a full sweep (all observation labels, then every enabled
//! hyperparameter). Operators are registered by name in [`registry`] and
//! built through [`build_sampler`], so front ends select the algorithm at
//! run time and treat all four interchangeably.
//!
//! * `marg-conj` integrates component parameters out analytically and only
//!   works with a conjugate kernel.
//! * `neal8` augments each label update with `C` temporary components drawn
//!   from the base measure.
//! * `reuse` keeps a permanent pool of `C` empty components, recycling
//!   discarded parameters instead of redrawing them every step.
//! * `slice` instantiates the random measure down to an adaptive mass
//!   threshold and updates labels by slice sampling.

mod hyper;
mod marginal;
mod neal8;
mod reuse;
mod slice;
mod thinning;

pub use hyper::{
    update_a, update_process_hypers, update_sigma, update_sigma0_from_params,
    update_sigma0_with_instantiation, update_tau, update_u, HyperPriors,
};
pub use marginal::MarginalConjugate;
pub use neal8::Neal8;
pub use reuse::Reuse;
pub use slice::SliceSampler;
pub use thinning::{adaptive_thinning, prior_partition_simulate, ATOM_CAP, MIN_ATOM_THRESHOLD};

use rand::seq::SliceRandom;
use rand::RngCore;

use crate::kernels::{GaussianComponent, MixtureKernel};
use crate::nggp::{AuxiliaryU, NggpParams};
use crate::partition::{AttachTarget, ClusterId, PartitionState};
use crate::{Data, Error, Result};

/// Full state of one chain. Sampler-specific fields (`atoms`, `slices`,
/// `empty_pool`) stay empty unless the owning operator uses them.
#[derive(Clone)]
pub struct ChainState {
    pub partition: PartitionState,
    pub u: AuxiliaryU,
    pub params: NggpParams,
    pub base: Box<dyn MixtureKernel>,
    pub atoms: Option<AtomSet>,
    pub slices: Vec<f64>,
    pub empty_pool: Vec<GaussianComponent>,
}

impl ChainState {
    /// Fresh state with every observation in a single cluster (component
    /// parameters not yet instantiated) and `U = 1`.
    pub fn new(data: &Data, base: Box<dyn MixtureKernel>, params: NggpParams) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::invalid_data("cannot sample an empty dataset"));
        }
        if base.dim() != data.dim() {
            return Err(Error::invalid_config(format!(
                "kernel dimension {} does not match data dimension {}",
                base.dim(),
                data.dim()
            )));
        }
        let mut partition = PartitionState::new(data.len(), data.dim());
        let first = partition.attach(data, 0, AttachTarget::New(None));
        for i in 1..data.len() {
            partition.attach(data, i, AttachTarget::Existing(first));
        }
        Ok(Self {
            partition,
            u: AuxiliaryU::from_u(1.0).expect("1 is a valid U"),
            params,
            base,
            atoms: None,
            slices: Vec::new(),
            empty_pool: Vec::new(),
        })
    }

    /// Draws instantiated parameters for any occupied cluster missing them.
    pub fn ensure_cluster_params(&mut self, rng: &mut dyn RngCore) {
        let ids: Vec<ClusterId> = self.partition.cluster_ids().to_vec();
        for id in ids {
            if self.partition.param(id).is_none() {
                let comp =
                    self.base.sample_component_posterior(None, self.partition.stats(id), rng);
                self.partition.set_param(id, Some(comp));
            }
        }
    }
}

/// Instantiated atoms of the mixing measure, used by the slice sampler.
#[derive(Debug, Clone, Default)]
pub struct AtomSet {
    /// One atom per occupied cluster; the location is the cluster parameter.
    pub fixed: Vec<FixedAtom>,
    /// Unoccupied atoms above the current mass threshold, largest first.
    pub random: Vec<RandomAtom>,
}

#[derive(Debug, Clone, Copy)]
pub struct FixedAtom {
    pub cluster: ClusterId,
    pub mass: f64,
}

#[derive(Debug, Clone)]
pub struct RandomAtom {
    pub mass: f64,
    pub location: GaussianComponent,
}

/// Order in which observation labels are visited within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScanOrder {
    /// Fixed ascending index order (deterministic under a fixed seed).
    #[default]
    Ascending,
    /// A fresh uniform permutation every sweep.
    Shuffled,
}

pub(crate) fn observation_order(n: usize, scan: ScanOrder, rng: &mut dyn RngCore) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if scan == ScanOrder::Shuffled {
        order.shuffle(rng);
    }
    order
}

/// One sweep of a posterior sampler over the chain state.
pub trait SweepOperator {
    /// Registry name of the algorithm.
    fn name(&self) -> &'static str;

    /// Validates kernel compatibility and instantiates sampler-specific
    /// state; must be called once before the first sweep.
    fn init(&self, state: &mut ChainState, data: &Data, rng: &mut dyn RngCore) -> Result<()>;

    /// Advances the state by one full sweep.
    fn sweep(&self, state: &mut ChainState, data: &Data, rng: &mut dyn RngCore);
}

/// Options shared by every sampler constructor. `c` is the number of
/// auxiliary (empty) components and is ignored by `marg-conj` and `slice`.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub c: usize,
    pub scan: ScanOrder,
    pub priors: HyperPriors,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { c: 2, scan: ScanOrder::Ascending, priors: HyperPriors::default() }
    }
}

type SamplerConstructor = fn(&SamplerConfig) -> Result<Box<dyn SweepOperator>>;

/// The sampler registry: `(name, constructor)` pairs in a stable order.
pub fn registry() -> Vec<(&'static str, SamplerConstructor)> {
    vec![
        ("marg-conj", |cfg| Ok(Box::new(MarginalConjugate::new(cfg)?))),
        ("neal8", |cfg| Ok(Box::new(Neal8::new(cfg)?))),
        ("reuse", |cfg| Ok(Box::new(Reuse::new(cfg)?))),
        ("slice", |cfg| Ok(Box::new(SliceSampler::new(cfg)?))),
    ]
}

/// Registered sampler names in registry order.
pub fn sampler_names() -> Vec<&'static str> {
    registry().into_iter().map(|(name, _)| name).collect()
}

/// Builds a sampler by registry name.
pub fn build_sampler(name: &str, config: &SamplerConfig) -> Result<Box<dyn SweepOperator>> {
    for (registered, construct) in registry() {
        if registered == name {
            return construct(config);
        }
    }
    Err(Error::invalid_config(format!(
        "unknown sampler '{name}'; available: {}",
        sampler_names().join(", ")
    )))
}
