//! Physical and cognitive graph snapshots for one time step.
//!
//! Physical: one node per vehicle (id-sorted), features (x, y, v, a)
//! standardized by a dataset-level affine normalizer, symmetric adjacency
//! with weight e^{−d} for pairs closer than `d_close` and 0 otherwise.
//! Self-loops are the neural core's business, not the graph builder's.
//!
//! Cognitive: one node per cognitive factor in the fixed node order,
//! one-hot features zero-padded to the widest cardinality, and a directed
//! adjacency where entry (child, parent) along a DBN edge is the fitted
//! conditional probability of the child's observed state given the
//! parent's observed state, the child's remaining parents weighted by
//! their model marginals.

use crate::cognition::NodeSpace;
use crate::dbn::{node_marginals, DbnError, DbnModel};
use crate::discretize::CognitiveFrame;
use crate::mat::Mat;
use crate::traj::VehicleState;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("non-finite position for vehicle '{0}'")]
    BadPosition(String),
    #[error("physical graph needs at least one vehicle")]
    NoVehicles,
    #[error("frame state outside the model's node space: {0}")]
    BadFrame(#[from] DbnError),
    #[error("model does not cover the cognitive node space ({0})")]
    SpaceMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Physical,
    Cognitive,
}

/// Node features and weighted adjacency for one time step.
#[derive(Debug, Clone)]
pub struct GraphSnapshot {
    pub kind: GraphKind,
    pub node_ids: Vec<String>,
    /// n_nodes × feature_dim.
    pub features: Mat,
    /// n_nodes × n_nodes, entries in [0, 1], zero where no edge.
    pub adjacency: Mat,
}

impl GraphSnapshot {
    pub fn n_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_ids.iter().position(|n| n == id)
    }

    /// Row-major matrix dump at 9 significant digits, for debugging.
    pub fn dump(&self) -> String {
        let fmt_mat = |m: &Mat| {
            let mut s = String::new();
            for i in 0..m.rows {
                let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.8e}")).collect();
                s.push_str(&row.join(" "));
                s.push('\n');
            }
            s
        };
        format!(
            "kind {}\nnodes {}\nfeatures {}x{}\n{}adjacency {}x{}\n{}",
            match self.kind {
                GraphKind::Physical => "physical",
                GraphKind::Cognitive => "cognitive",
            },
            self.node_ids.join(" "),
            self.features.rows,
            self.features.cols,
            fmt_mat(&self.features),
            self.adjacency.rows,
            self.adjacency.cols,
            fmt_mat(&self.adjacency),
        )
    }
}

/// Dataset-level affine standardizer for the physical features (x, y, v, a).
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: [f64; 4],
    pub std: [f64; 4],
}

impl Normalizer {
    pub fn identity() -> Self {
        Normalizer { mean: [0.0; 4], std: [1.0; 4] }
    }

    /// Zero mean, unit variance over the given states (the training split);
    /// fixed thereafter.
    pub fn fit<'a>(states: impl Iterator<Item = &'a VehicleState>) -> Self {
        let mut n = 0.0f64;
        let mut sum = [0.0f64; 4];
        let mut sq = [0.0f64; 4];
        for s in states {
            let f = [s.x, s.y, s.v, s.a];
            n += 1.0;
            for i in 0..4 {
                sum[i] += f[i];
                sq[i] += f[i] * f[i];
            }
        }
        if n == 0.0 {
            return Normalizer::identity();
        }
        let mut mean = [0.0; 4];
        let mut std = [1.0; 4];
        for i in 0..4 {
            mean[i] = sum[i] / n;
            let var = (sq[i] / n - mean[i] * mean[i]).max(0.0);
            std[i] = if var.sqrt() > 1e-9 { var.sqrt() } else { 1.0 };
        }
        Normalizer { mean, std }
    }

    pub fn apply(&self, s: &VehicleState) -> [f64; 4] {
        let f = [s.x, s.y, s.v, s.a];
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = (f[i] - self.mean[i]) / self.std[i];
        }
        out
    }
}

/// Builds the per-step physical interaction graph. Vehicles are ordered by
/// id; an edge joins every pair with Euclidean distance below `d_close`,
/// weighted e^{−d}; the diagonal stays zero.
pub fn build_physical_graph(
    states: &[&VehicleState],
    normalizer: &Normalizer,
    d_close: f64,
) -> Result<GraphSnapshot, GraphError> {
    if states.is_empty() {
        return Err(GraphError::NoVehicles);
    }
    for s in states {
        if !(s.x.is_finite() && s.y.is_finite()) {
            return Err(GraphError::BadPosition(s.vehicle_id.clone()));
        }
    }
    let mut order: Vec<usize> = (0..states.len()).collect();
    order.sort_by(|&i, &j| states[i].vehicle_id.cmp(&states[j].vehicle_id));
    let n = states.len();
    let node_ids: Vec<String> = order.iter().map(|&i| states[i].vehicle_id.clone()).collect();
    let mut features = Mat::zeros(n, 4);
    for (row, &i) in order.iter().enumerate() {
        features.row_mut(row).copy_from_slice(&normalizer.apply(states[i]));
    }
    let mut adjacency = Mat::zeros(n, n);
    for a in 0..n {
        for b in (a + 1)..n {
            let (sa, sb) = (states[order[a]], states[order[b]]);
            let d = ((sa.x - sb.x).powi(2) + (sa.y - sb.y).powi(2)).sqrt();
            if d < d_close {
                let w = (-d).exp();
                adjacency[(a, b)] = w;
                adjacency[(b, a)] = w;
            }
        }
    }
    Ok(GraphSnapshot { kind: GraphKind::Physical, node_ids, features, adjacency })
}

/// Precomputed cognitive-edge weighting context for one fitted model.
///
/// The model marginals cost one exact enumeration, so batch callers build
/// the weighter once and reuse it across frames.
#[derive(Debug)]
pub struct CognitiveWeighter<'a> {
    model: &'a DbnModel,
    space: NodeSpace,
    marginals: &'a Vec<Vec<f64>>,
    feature_dim: usize,
}

impl<'a> CognitiveWeighter<'a> {
    pub fn new(model: &'a DbnModel, space: &NodeSpace) -> Result<Self, GraphError> {
        let defs = space.node_defs();
        if model.n_nodes() != defs.len() {
            return Err(GraphError::SpaceMismatch(format!(
                "model has {} nodes, space has {}",
                model.n_nodes(),
                defs.len()
            )));
        }
        for (got, want) in model.structure.nodes.iter().zip(&defs) {
            if got.name != want.name || got.cardinality != want.cardinality {
                return Err(GraphError::SpaceMismatch(format!(
                    "node {} ({} states) vs {} ({} states)",
                    got.name, got.cardinality, want.name, want.cardinality
                )));
            }
        }
        let feature_dim = defs.iter().map(|d| d.cardinality).max().unwrap_or(1);
        Ok(CognitiveWeighter {
            model,
            space: *space,
            marginals: node_marginals(model),
            feature_dim,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Builds the cognitive snapshot for one frame: one-hot node features
    /// and, for every DBN edge parent → child, adjacency entry
    /// (child, parent) = P(child state | parent state) with the child's
    /// other parents marginalized under the model.
    pub fn build(&self, frame: &CognitiveFrame) -> Result<GraphSnapshot, GraphError> {
        let states = self.space.encode(frame);
        self.model.check_frame(&states)?;
        let st = &self.model.structure;
        let n = st.n_nodes();

        let mut features = Mat::zeros(n, self.feature_dim);
        for (node, &state) in states.iter().enumerate() {
            features[(node, state)] = 1.0;
        }

        let mut adjacency = Mat::zeros(n, n);
        for (parent, child) in st.intra_edges() {
            let w = self.edge_weight(child, parent, &states);
            adjacency[(child, parent)] = w;
        }

        let node_ids = st.nodes.iter().map(|d| d.name.clone()).collect();
        Ok(GraphSnapshot { kind: GraphKind::Cognitive, node_ids, features, adjacency })
    }

    /// P(child = observed | parent = observed), other parents weighted by
    /// their marginals. With a single parent this is exactly the fitted CPT
    /// entry.
    fn edge_weight(&self, child: usize, parent: usize, states: &[usize]) -> f64 {
        let cpt = &self.model.intra_cpts[child];
        let others: Vec<usize> = cpt.parents.iter().copied().filter(|&p| p != parent).collect();
        let mut scratch = states.to_vec();
        let mut weight = 0.0;
        let mut combo = vec![0usize; others.len()];
        loop {
            let mut prior = 1.0;
            for (slot, &p) in others.iter().enumerate() {
                scratch[p] = combo[slot];
                prior *= self.marginals[p][combo[slot]];
            }
            weight += prior * cpt.prob(&scratch);
            // Odometer over the other parents' states.
            let mut slot = 0;
            loop {
                if slot == others.len() {
                    return weight;
                }
                combo[slot] += 1;
                if combo[slot] < self.model.structure.cardinality(others[slot]) {
                    break;
                }
                combo[slot] = 0;
                slot += 1;
            }
        }
    }
}

/// One-shot convenience over [`CognitiveWeighter`].
pub fn build_cognitive_graph(
    frame: &CognitiveFrame,
    model: &DbnModel,
    space: &NodeSpace,
) -> Result<GraphSnapshot, GraphError> {
    CognitiveWeighter::new(model, space)?.build(frame)
}
