//! Mutable partition bookkeeping for samplers: observation-to-cluster
//! assignment, per-cluster membership, cached sufficient statistics, and
//! optional per-cluster component parameters.
//!
//! Cluster identifiers are opaque slot indices recycled through a free list;
//! membership uses swap-remove so detach and attach are O(1) amortized (plus
//! the O(D^2) statistics update). Identifiers are stable while a cluster is
//! occupied, and the reported [`PartitionShape`] lists sizes in cluster
//! creation order.

use crate::kernels::{ClusterStats, GaussianComponent};
use crate::nggp::PartitionShape;
use crate::Data;

/// Opaque identifier of an occupied cluster. Identifiers may be recycled
/// after a cluster empties; diagnostics must depend on membership only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClusterId(usize);

/// What to do with a detached observation.
pub enum AttachTarget {
    /// Join an existing cluster.
    Existing(ClusterId),
    /// Open a new cluster, optionally carrying instantiated component
    /// parameters.
    New(Option<GaussianComponent>),
}

/// Outcome of a detach: which cluster the observation left, whether that
/// cluster became empty (and was removed), and its parameter if so.
#[derive(Debug)]
pub struct DetachReceipt {
    pub cluster: ClusterId,
    pub emptied: bool,
    pub param: Option<GaussianComponent>,
}

#[derive(Debug, Clone)]
struct Cluster {
    members: Vec<usize>,
    stats: ClusterStats,
    param: Option<GaussianComponent>,
}

/// Assignment of observations to clusters with cached per-cluster state.
#[derive(Debug, Clone)]
pub struct PartitionState {
    d: usize,
    assignment: Vec<Option<ClusterId>>,
    member_pos: Vec<usize>,
    slots: Vec<Option<Cluster>>,
    free: Vec<usize>,
    order: Vec<ClusterId>,
}

impl PartitionState {
    /// A partition over `n` observations of dimension `d`, all unassigned.
    pub fn new(n: usize, d: usize) -> Self {
        Self {
            d,
            assignment: vec![None; n],
            member_pos: vec![0; n],
            slots: Vec::new(),
            free: Vec::new(),
            order: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_assigned(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_some()).count()
    }

    pub fn num_clusters(&self) -> usize {
        self.order.len()
    }

    pub fn cluster_of(&self, i: usize) -> Option<ClusterId> {
        self.assignment[i]
    }

    /// Occupied cluster ids in creation order; aligned with `shape()`.
    pub fn cluster_ids(&self) -> &[ClusterId] {
        &self.order
    }

    pub fn size(&self, id: ClusterId) -> usize {
        self.cluster(id).members.len()
    }

    pub fn members(&self, id: ClusterId) -> &[usize] {
        &self.cluster(id).members
    }

    pub fn stats(&self, id: ClusterId) -> &ClusterStats {
        &self.cluster(id).stats
    }

    pub fn param(&self, id: ClusterId) -> Option<&GaussianComponent> {
        self.cluster(id).param.as_ref()
    }

    pub fn set_param(&mut self, id: ClusterId, param: Option<GaussianComponent>) {
        self.cluster_mut(id).param = param;
    }

    /// Instantiated parameters of all occupied clusters in creation order;
    /// panics if any cluster lacks parameters.
    pub fn params_in_order(&self) -> Vec<GaussianComponent> {
        self.order
            .iter()
            .map(|&id| {
                self.cluster(id)
                    .param
                    .clone()
                    .expect("cluster parameters requested but not instantiated")
            })
            .collect()
    }

    /// Cluster sizes in creation order.
    pub fn shape(&self) -> PartitionShape {
        let sizes: Vec<usize> = self.order.iter().map(|&id| self.size(id)).collect();
        if sizes.is_empty() {
            PartitionShape::empty()
        } else {
            PartitionShape::new(sizes).expect("occupied clusters are nonempty")
        }
    }

    /// Per-observation labels numbered by cluster creation order; panics on
    /// unassigned observations.
    pub fn labels(&self) -> Vec<usize> {
        let mut index_of = vec![usize::MAX; self.slots.len()];
        for (pos, id) in self.order.iter().enumerate() {
            index_of[id.0] = pos;
        }
        self.assignment
            .iter()
            .map(|a| index_of[a.expect("labels requested with unassigned observations").0])
            .collect()
    }

    /// Removes observation `i` from its cluster, updating statistics; the
    /// cluster is deleted if it empties, surfacing its parameter.
    pub fn detach(&mut self, data: &Data, i: usize) -> DetachReceipt {
        let id = self.assignment[i].expect("detach of an unassigned observation");
        let y = data.row(i);
        let pos = self.member_pos[i];
        let cluster = self.cluster_mut(id);
        cluster.stats.remove(y);
        cluster.members.swap_remove(pos);
        let moved = cluster.members.get(pos).copied();
        if let Some(moved) = moved {
            self.member_pos[moved] = pos;
        }
        self.assignment[i] = None;
        if self.cluster(id).members.is_empty() {
            let param = self.slots[id.0].take().expect("slot occupied").param;
            self.free.push(id.0);
            let order_pos = self
                .order
                .iter()
                .position(|&o| o == id)
                .expect("emptied cluster present in order");
            self.order.remove(order_pos);
            DetachReceipt { cluster: id, emptied: true, param }
        } else {
            DetachReceipt { cluster: id, emptied: false, param: None }
        }
    }

    /// Assigns observation `i` to an existing cluster or a new one,
    /// returning the cluster id.
    pub fn attach(&mut self, data: &Data, i: usize, target: AttachTarget) -> ClusterId {
        assert!(self.assignment[i].is_none(), "attach of an already assigned observation");
        let y = data.row(i);
        let id = match target {
            AttachTarget::Existing(id) => {
                assert!(
                    self.slots.get(id.0).map_or(false, Option::is_some),
                    "attach to a nonexistent cluster"
                );
                id
            }
            AttachTarget::New(param) => {
                let cluster = Cluster {
                    members: Vec::with_capacity(4),
                    stats: ClusterStats::zero(self.d),
                    param,
                };
                let slot = match self.free.pop() {
                    Some(s) => {
                        self.slots[s] = Some(cluster);
                        s
                    }
                    None => {
                        self.slots.push(Some(cluster));
                        self.slots.len() - 1
                    }
                };
                let id = ClusterId(slot);
                self.order.push(id);
                id
            }
        };
        let cluster = self.cluster_mut(id);
        cluster.stats.add(y);
        cluster.members.push(i);
        let pos = cluster.members.len() - 1;
        self.member_pos[i] = pos;
        self.assignment[i] = Some(id);
        id
    }

    /// Recomputes every cluster's sufficient statistics from scratch. Used
    /// after the underlying data change (for example when a validation
    /// harness redraws observations) and to shed accumulated round-off.
    pub fn rebuild_stats(&mut self, data: &Data) {
        for slot in self.slots.iter_mut().flatten() {
            let mut stats = ClusterStats::zero(self.d);
            for &i in &slot.members {
                stats.add(data.row(i));
            }
            slot.stats = stats;
        }
    }

    fn cluster(&self, id: ClusterId) -> &Cluster {
        self.slots[id.0].as_ref().expect("cluster id refers to an empty slot")
    }

    fn cluster_mut(&mut self, id: ClusterId) -> &mut Cluster {
        self.slots[id.0].as_mut().expect("cluster id refers to an empty slot")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data_1d(values: &[f64]) -> Data {
        Data::from_column(values.to_vec()).unwrap()
    }

    #[test]
    fn attach_detach_round_trip_restores_shape() {
        let data = data_1d(&[1.0, 2.0, 3.0]);
        let mut p = PartitionState::new(3, 1);
        let c0 = p.attach(&data, 0, AttachTarget::New(None));
        p.attach(&data, 1, AttachTarget::Existing(c0));
        p.attach(&data, 2, AttachTarget::New(None));
        assert_eq!(p.shape().sizes(), &[2, 1]);

        let before = p.shape();
        let receipt = p.detach(&data, 1);
        assert_eq!(receipt.cluster, c0);
        assert!(!receipt.emptied);
        assert_eq!(p.shape().sizes(), &[1, 1]);
        p.attach(&data, 1, AttachTarget::Existing(c0));
        assert_eq!(p.shape(), before);
    }

    #[test]
    fn detach_of_singleton_surfaces_parameter() {
        let data = data_1d(&[1.0, 2.0]);
        let mut p = PartitionState::new(2, 1);
        p.attach(&data, 0, AttachTarget::New(None));
        let comp = GaussianComponent::scalar(0.0, 1.0).unwrap();
        p.attach(&data, 1, AttachTarget::New(Some(comp)));
        let receipt = p.detach(&data, 1);
        assert!(receipt.emptied);
        assert!(receipt.param.is_some());
        assert_eq!(p.shape().sizes(), &[1]);
    }

    #[test]
    fn stats_track_membership() {
        let data = data_1d(&[1.5, -2.0, 4.0]);
        let mut p = PartitionState::new(3, 1);
        let c = p.attach(&data, 0, AttachTarget::New(None));
        p.attach(&data, 1, AttachTarget::Existing(c));
        p.attach(&data, 2, AttachTarget::Existing(c));
        assert_eq!(p.stats(c).n(), 3);
        assert!((p.stats(c).sum()[0] - 3.5).abs() < 1e-12);
        p.detach(&data, 1);
        assert_eq!(p.stats(c).n(), 2);
        assert!((p.stats(c).sum()[0] - 5.5).abs() < 1e-12);
        assert_eq!(p.members(c), &[0, 2]);
    }

    #[test]
    fn successive_new_clusters_make_singletons() {
        let data = data_1d(&[0.0, 1.0, 2.0, 3.0]);
        let mut p = PartitionState::new(4, 1);
        for i in 0..4 {
            p.attach(&data, i, AttachTarget::New(None));
        }
        assert_eq!(p.shape().sizes(), &[1, 1, 1, 1]);
        assert_eq!(p.labels(), vec![0, 1, 2, 3]);
        assert_eq!(p.num_assigned(), 4);
    }

    #[test]
    fn ids_recycled_but_membership_consistent() {
        let data = data_1d(&[0.0, 1.0, 2.0]);
        let mut p = PartitionState::new(3, 1);
        let a = p.attach(&data, 0, AttachTarget::New(None));
        let b = p.attach(&data, 1, AttachTarget::New(None));
        p.detach(&data, 0);
        // Slot of `a` may be recycled for the next new cluster.
        let c = p.attach(&data, 2, AttachTarget::New(None));
        assert_eq!(p.shape().sizes(), &[1, 1]);
        assert_eq!(p.size(b), 1);
        assert_eq!(p.size(c), 1);
        assert_eq!(c, a, "slot should be recycled from the free list");
        // Creation order: b was created before c.
        assert_eq!(p.cluster_ids(), &[b, c]);
    }

    #[test]
    fn labels_follow_creation_order() {
        let data = data_1d(&[0.0, 1.0, 2.0, 3.0]);
        let mut p = PartitionState::new(4, 1);
        let a = p.attach(&data, 0, AttachTarget::New(None));
        let b = p.attach(&data, 1, AttachTarget::New(None));
        p.attach(&data, 2, AttachTarget::Existing(a));
        p.attach(&data, 3, AttachTarget::Existing(b));
        assert_eq!(p.labels(), vec![0, 1, 0, 1]);
    }

    #[test]
    fn rebuild_stats_matches_incremental() {
        let data = data_1d(&[1.0, 2.0, 3.0, 4.0]);
        let mut p = PartitionState::new(4, 1);
        let a = p.attach(&data, 0, AttachTarget::New(None));
        p.attach(&data, 1, AttachTarget::Existing(a));
        p.attach(&data, 2, AttachTarget::Existing(a));
        p.attach(&data, 3, AttachTarget::Existing(a));
        let before = p.stats(a).clone();
        p.rebuild_stats(&data);
        assert_eq!(p.stats(a), &before);
    }
}
