//! Discrete dynamic Bayesian network engine.
//!
//! A model is a within-slice Bayesian network (one CPT per node over its
//! intra-slice parents) plus per-node transition CPTs along dashed
//! self-edges from slice t−1 to slice t (the delayed effect of each
//! cognitive state). The data likelihood is the sum of the within-slice
//! log-probabilities for every frame and the transition log-probabilities
//! for every consecutive frame pair.
//!
//! Structure search runs over the intra-slice edge set; the self
//! transition edges are part of the dynamic model for every node and are
//! not searched. Under the SOR prior, intra edges are restricted to
//! stimulus → organism, organism → organism, organism → response and
//! response → response.
//!
//! Models are immutable after fitting; scoring, inference and sampling are
//! pure and may run concurrently.

use std::collections::BTreeSet;
use std::sync::OnceLock;
use thiserror::Error;

mod fit;
mod infer;
mod io;
mod sample;
mod search;

pub use fit::{bic_score, log_likelihood, mle_fit, total_frames, PenaltyMode};
pub use infer::{infer_conditional, node_marginals, transition_query};
pub use io::{deserialize, serialize};
pub use sample::{sample, sample_next_frame};
pub use search::{hill_climb, SearchConfig};

/// Row-sum tolerance for conditional probability tables.
pub const CPT_ROW_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DbnError {
    #[error("empty training data")]
    EmptyData,
    #[error("state {state} out of range for node {node} (cardinality {cardinality})")]
    StateOutOfRange { node: String, state: usize, cardinality: usize },
    #[error("frame has {got} states, model has {expected} nodes")]
    FrameWidth { got: usize, expected: usize },
    #[error("intra edges contain a cycle")]
    Cycle,
    #[error("edge {from} -> {to} violates the SOR layer constraint")]
    IllegalEdge { from: String, to: String },
    #[error("node {node} has no transition edge")]
    NoInterEdge { node: String },
    #[error("inconsistent evidence: observed configuration has zero probability")]
    InconsistentEvidence,
    #[error("{0}")]
    BadQuery(String),
    #[error("document line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Shape(String),
}

/// Stimulus-organism-response layer of a cognitive node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    S,
    O,
    R,
}

impl Layer {
    pub fn as_str(&self) -> &'static str {
        match self {
            Layer::S => "S",
            Layer::O => "O",
            Layer::R => "R",
        }
    }

    pub fn parse_str(s: &str) -> Option<Layer> {
        match s {
            "S" => Some(Layer::S),
            "O" => Some(Layer::O),
            "R" => Some(Layer::R),
            _ => None,
        }
    }
}

/// Whether an intra-slice edge `from -> to` is admissible under the SOR
/// prior. Stimulus nodes accept no intra parents; responses never feed
/// back into the organism or the stimulus.
pub fn sor_allows(from: Layer, to: Layer) -> bool {
    matches!(
        (from, to),
        (Layer::S, Layer::O) | (Layer::O, Layer::O) | (Layer::O, Layer::R) | (Layer::R, Layer::R)
    )
}

/// Structure-search prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prior {
    /// Intra edges restricted by [`sor_allows`].
    Sor,
    /// Acyclicity is the only constraint (the "ordinary DBN" search space).
    Unconstrained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeDef {
    pub name: String,
    pub cardinality: usize,
    pub layer: Layer,
}

impl NodeDef {
    pub fn new(name: &str, cardinality: usize, layer: Layer) -> Self {
        NodeDef { name: name.to_string(), cardinality, layer }
    }
}

/// DAG over cognitive nodes plus per-node transition self-edges.
#[derive(Debug, Clone, PartialEq)]
pub struct DbnStructure {
    pub nodes: Vec<NodeDef>,
    intra: BTreeSet<(usize, usize)>,
    inter_self: Vec<bool>,
}

impl DbnStructure {
    /// Empty intra edge set; every node starts with its transition edge.
    pub fn new(nodes: Vec<NodeDef>) -> Self {
        let n = nodes.len();
        DbnStructure { nodes, intra: BTreeSet::new(), inter_self: vec![true; n] }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn cardinality(&self, node: usize) -> usize {
        self.nodes[node].cardinality
    }

    pub fn intra_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.intra.iter().copied()
    }

    pub fn n_intra_edges(&self) -> usize {
        self.intra.len()
    }

    pub fn has_intra(&self, parent: usize, child: usize) -> bool {
        self.intra.contains(&(parent, child))
    }

    pub fn add_intra(&mut self, parent: usize, child: usize) {
        assert!(parent != child, "self loops are transition edges, not intra edges");
        self.intra.insert((parent, child));
    }

    pub fn remove_intra(&mut self, parent: usize, child: usize) {
        self.intra.remove(&(parent, child));
    }

    pub fn has_inter_self(&self, node: usize) -> bool {
        self.inter_self[node]
    }

    pub fn set_inter_self(&mut self, node: usize, enabled: bool) {
        self.inter_self[node] = enabled;
    }

    /// Intra parents of `child`, ascending.
    pub fn parents(&self, child: usize) -> Vec<usize> {
        self.intra
            .iter()
            .filter(|&&(_, c)| c == child)
            .map(|&(p, _)| p)
            .collect()
    }

    /// Topological order of the intra DAG, or a cycle error.
    pub fn topo_order(&self) -> Result<Vec<usize>, DbnError> {
        let n = self.n_nodes();
        let mut indegree = vec![0usize; n];
        for &(_, c) in &self.intra {
            indegree[c] += 1;
        }
        let mut queue: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            order.push(u);
            for &(p, c) in &self.intra {
                if p == u {
                    indegree[c] -= 1;
                    if indegree[c] == 0 {
                        queue.push(c);
                    }
                }
            }
        }
        if order.len() == n {
            Ok(order)
        } else {
            Err(DbnError::Cycle)
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.topo_order().is_ok()
    }

    /// Validates the DAG property and, under the SOR prior, every layer rule.
    pub fn validate(&self, prior: Prior) -> Result<(), DbnError> {
        self.topo_order()?;
        if prior == Prior::Sor {
            for &(p, c) in &self.intra {
                if !sor_allows(self.nodes[p].layer, self.nodes[c].layer) {
                    return Err(DbnError::IllegalEdge {
                        from: self.nodes[p].name.clone(),
                        to: self.nodes[c].name.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Free CPT parameters implied by this structure: every intra table
    /// contributes rows·(cardinality−1), every transition table
    /// cardinality·(cardinality−1).
    pub fn free_parameters(&self) -> usize {
        let mut total = 0;
        for child in 0..self.n_nodes() {
            let rows: usize = self
                .parents(child)
                .iter()
                .map(|&p| self.cardinality(p))
                .product();
            total += rows * (self.cardinality(child) - 1);
        }
        for node in 0..self.n_nodes() {
            if self.inter_self[node] {
                let c = self.cardinality(node);
                total += c * (c - 1);
            }
        }
        total
    }

    /// Number of intra edges by which two structures differ (symmetric
    /// difference of the directed edge sets).
    pub fn structural_hamming_distance(&self, other: &DbnStructure) -> usize {
        self.intra.symmetric_difference(&other.intra).count()
    }
}

/// Conditional probability table of one node given its intra parents (or
/// given its own previous state, for transition tables).
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub child: usize,
    /// Ascending node indices. Empty for a root prior.
    pub parents: Vec<usize>,
    pub parent_cards: Vec<usize>,
    pub child_card: usize,
    /// Row-major: one row of `child_card` probabilities per parent
    /// configuration; the first parent is the most significant digit.
    pub table: Vec<f64>,
}

impl Cpt {
    pub fn uniform(child: usize, parents: Vec<usize>, parent_cards: Vec<usize>, child_card: usize) -> Self {
        let rows: usize = parent_cards.iter().product();
        Cpt {
            child,
            parents,
            parent_cards,
            child_card,
            table: vec![1.0 / child_card as f64; rows * child_card],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.parent_cards.iter().product()
    }

    /// Row index for a full-frame assignment (one state per model node).
    pub fn row_index_of(&self, assignment: &[usize]) -> usize {
        let mut idx = 0;
        for (&p, &card) in self.parents.iter().zip(&self.parent_cards) {
            idx = idx * card + assignment[p];
        }
        idx
    }

    pub fn row(&self, row_index: usize) -> &[f64] {
        &self.table[row_index * self.child_card..(row_index + 1) * self.child_card]
    }

    pub fn row_mut(&mut self, row_index: usize) -> &mut [f64] {
        &mut self.table[row_index * self.child_card..(row_index + 1) * self.child_card]
    }

    /// Probability of the child state in `assignment` given the parent
    /// states in `assignment`.
    pub fn prob(&self, assignment: &[usize]) -> f64 {
        self.row(self.row_index_of(assignment))[assignment[self.child]]
    }

    pub fn validate(&self) -> Result<(), DbnError> {
        if self.table.len() != self.n_rows() * self.child_card {
            return Err(DbnError::Shape(format!(
                "CPT for node {} has {} entries, expected {}",
                self.child,
                self.table.len(),
                self.n_rows() * self.child_card
            )));
        }
        for r in 0..self.n_rows() {
            let row = self.row(r);
            if row.iter().any(|&p| !(0.0..=1.0 + CPT_ROW_TOL).contains(&p)) {
                return Err(DbnError::Shape(format!(
                    "CPT row {r} for node {} has entries outside [0, 1]",
                    self.child
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > CPT_ROW_TOL {
                return Err(DbnError::Shape(format!(
                    "CPT row {r} for node {} sums to {sum}",
                    self.child
                )));
            }
        }
        Ok(())
    }
}

/// A fitted dynamic Bayesian network.
#[derive(Debug)]
pub struct DbnModel {
    pub structure: DbnStructure,
    /// One CPT per node, indexed by node.
    pub intra_cpts: Vec<Cpt>,
    /// Transition CPT per node with a self-edge.
    pub inter_cpts: Vec<Option<Cpt>>,
    /// Number of training frames behind the fit.
    pub sample_count: usize,
    marginals_cache: OnceLock<Vec<Vec<f64>>>,
}

impl PartialEq for DbnModel {
    fn eq(&self, other: &Self) -> bool {
        self.structure == other.structure
            && self.intra_cpts == other.intra_cpts
            && self.inter_cpts == other.inter_cpts
            && self.sample_count == other.sample_count
    }
}

impl Clone for DbnModel {
    fn clone(&self) -> Self {
        DbnModel {
            structure: self.structure.clone(),
            intra_cpts: self.intra_cpts.clone(),
            inter_cpts: self.inter_cpts.clone(),
            sample_count: self.sample_count,
            marginals_cache: OnceLock::new(),
        }
    }
}

impl DbnModel {
    pub fn new(
        structure: DbnStructure,
        intra_cpts: Vec<Cpt>,
        inter_cpts: Vec<Option<Cpt>>,
        sample_count: usize,
    ) -> Self {
        DbnModel { structure, intra_cpts, inter_cpts, sample_count, marginals_cache: OnceLock::new() }
    }

    pub fn n_nodes(&self) -> usize {
        self.structure.n_nodes()
    }

    pub fn validate(&self) -> Result<(), DbnError> {
        self.structure.topo_order()?;
        if self.intra_cpts.len() != self.n_nodes() || self.inter_cpts.len() != self.n_nodes() {
            return Err(DbnError::Shape("CPT count does not match node count".into()));
        }
        for (node, cpt) in self.intra_cpts.iter().enumerate() {
            if cpt.child != node
                || cpt.parents != self.structure.parents(node)
                || cpt.child_card != self.structure.cardinality(node)
            {
                return Err(DbnError::Shape(format!(
                    "intra CPT for node {node} does not match the structure"
                )));
            }
            cpt.validate()?;
        }
        for (node, cpt) in self.inter_cpts.iter().enumerate() {
            match cpt {
                Some(c) => {
                    if !self.structure.has_inter_self(node) {
                        return Err(DbnError::Shape(format!(
                            "node {node} has a transition CPT but no transition edge"
                        )));
                    }
                    if c.child != node
                        || c.child_card != self.structure.cardinality(node)
                        || c.parent_cards != vec![self.structure.cardinality(node)]
                    {
                        return Err(DbnError::Shape(format!(
                            "transition CPT for node {node} does not match the structure"
                        )));
                    }
                    c.validate()?;
                }
                None => {
                    if self.structure.has_inter_self(node) {
                        return Err(DbnError::Shape(format!(
                            "node {node} has a transition edge but no transition CPT"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub(crate) fn marginals_cache(&self) -> &OnceLock<Vec<Vec<f64>>> {
        &self.marginals_cache
    }

    /// Checks that a frame assigns an in-range state to every node.
    pub fn check_frame(&self, frame: &[usize]) -> Result<(), DbnError> {
        check_frame(&self.structure, frame)
    }
}

/// One time slice of discrete states, index-aligned with the node list.
pub type Frame = Vec<usize>;
/// A contiguous recording; transition statistics pair consecutive frames.
pub type FrameSeq = Vec<Frame>;

pub fn check_frame(structure: &DbnStructure, frame: &[usize]) -> Result<(), DbnError> {
    if frame.len() != structure.n_nodes() {
        return Err(DbnError::FrameWidth { got: frame.len(), expected: structure.n_nodes() });
    }
    for (node, &state) in frame.iter().enumerate() {
        if state >= structure.cardinality(node) {
            return Err(DbnError::StateOutOfRange {
                node: structure.nodes[node].name.clone(),
                state,
                cardinality: structure.cardinality(node),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    /// S → O → R chain over three 2-state nodes with hand-set CPTs:
    /// P(O=1|S=s) = 0.7, P(R=1|O=0) = 0.1, P(R=1|O=1) = 0.9.
    pub fn chain_sor_model() -> DbnModel {
        let nodes = vec![
            NodeDef::new("S", 2, Layer::S),
            NodeDef::new("O", 2, Layer::O),
            NodeDef::new("R", 2, Layer::R),
        ];
        let mut st = DbnStructure::new(nodes);
        st.add_intra(0, 1);
        st.add_intra(1, 2);
        for n in 0..3 {
            st.set_inter_self(n, false);
        }
        let intra = vec![
            Cpt { child: 0, parents: vec![], parent_cards: vec![], child_card: 2, table: vec![0.4, 0.6] },
            Cpt {
                child: 1,
                parents: vec![0],
                parent_cards: vec![2],
                child_card: 2,
                table: vec![0.3, 0.7, 0.3, 0.7],
            },
            Cpt {
                child: 2,
                parents: vec![1],
                parent_cards: vec![2],
                child_card: 2,
                table: vec![0.9, 0.1, 0.1, 0.9],
            },
        ];
        let model = DbnModel::new(st, intra, vec![None, None, None], 0);
        model.validate().unwrap();
        model
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc_nodes() -> Vec<NodeDef> {
        vec![
            NodeDef::new("A", 2, Layer::S),
            NodeDef::new("B", 3, Layer::O),
            NodeDef::new("C", 2, Layer::R),
        ]
    }

    #[test]
    fn sor_rule_table() {
        assert!(sor_allows(Layer::S, Layer::O));
        assert!(sor_allows(Layer::O, Layer::O));
        assert!(sor_allows(Layer::O, Layer::R));
        assert!(sor_allows(Layer::R, Layer::R));
        assert!(!sor_allows(Layer::S, Layer::S));
        assert!(!sor_allows(Layer::S, Layer::R));
        assert!(!sor_allows(Layer::O, Layer::S));
        assert!(!sor_allows(Layer::R, Layer::O));
        assert!(!sor_allows(Layer::R, Layer::S));
    }

    #[test]
    fn cycle_detected() {
        let mut st = DbnStructure::new(abc_nodes());
        st.add_intra(0, 1);
        st.add_intra(1, 2);
        assert!(st.is_acyclic());
        st.add_intra(2, 0);
        assert!(!st.is_acyclic());
        assert!(matches!(st.validate(Prior::Unconstrained), Err(DbnError::Cycle)));
    }

    #[test]
    fn sor_validation_rejects_illegal_edge() {
        let mut st = DbnStructure::new(abc_nodes());
        st.add_intra(0, 2); // S -> R
        let err = st.validate(Prior::Sor).unwrap_err();
        assert!(matches!(err, DbnError::IllegalEdge { .. }));
        assert!(st.validate(Prior::Unconstrained).is_ok());
    }

    #[test]
    fn free_parameter_count() {
        let mut st = DbnStructure::new(abc_nodes());
        for n in 0..3 {
            st.set_inter_self(n, false);
        }
        // No edges: (2-1) + (3-1) + (2-1) = 4.
        assert_eq!(st.free_parameters(), 4);
        st.add_intra(0, 1); // B now has 2 rows of (3-1)
        assert_eq!(st.free_parameters(), 1 + 2 * 2 + 1);
        st.set_inter_self(2, true); // + 2·1
        assert_eq!(st.free_parameters(), 1 + 4 + 1 + 2);
    }

    #[test]
    fn row_index_is_mixed_radix() {
        let cpt = Cpt::uniform(2, vec![0, 1], vec![2, 3], 2);
        // assignment [a, b, c]: row = a*3 + b
        assert_eq!(cpt.row_index_of(&[0, 0, 0]), 0);
        assert_eq!(cpt.row_index_of(&[0, 2, 1]), 2);
        assert_eq!(cpt.row_index_of(&[1, 1, 0]), 4);
        assert_eq!(cpt.n_rows(), 6);
    }

    #[test]
    fn cpt_row_sum_enforced() {
        let mut cpt = Cpt::uniform(0, vec![], vec![], 3);
        cpt.validate().unwrap();
        cpt.table[0] = 0.5; // row now sums to ~1.17
        assert!(cpt.validate().is_err());
    }

    #[test]
    fn shd_counts_directed_differences() {
        let mut a = DbnStructure::new(abc_nodes());
        a.add_intra(0, 1);
        a.add_intra(1, 2);
        let mut b = a.clone();
        assert_eq!(a.structural_hamming_distance(&b), 0);
        b.remove_intra(1, 2);
        b.add_intra(0, 2);
        assert_eq!(a.structural_hamming_distance(&b), 2);
    }
}
