//! Exact within-slice inference by enumeration.
//!
//! A time slice is small enough that the joint (the product of all
//! row-normalized intra CPTs) can be enumerated directly; no approximate
//! inference is needed or wanted here.

use super::{DbnError, DbnModel};
use std::collections::BTreeMap;

/// Exact P(query | evidence) within one time slice.
///
/// Enumerates every configuration of the non-evidence nodes, accumulating
/// the joint probability into the query distribution, then normalizes.
pub fn infer_conditional(
    model: &DbnModel,
    query: usize,
    evidence: &BTreeMap<usize, usize>,
) -> Result<Vec<f64>, DbnError> {
    let n = model.n_nodes();
    if query >= n {
        return Err(DbnError::BadQuery(format!("query node {query} out of range")));
    }
    if evidence.contains_key(&query) {
        return Err(DbnError::BadQuery(format!(
            "query node {} is already observed",
            model.structure.nodes[query].name
        )));
    }
    for (&node, &state) in evidence {
        if node >= n {
            return Err(DbnError::BadQuery(format!("evidence node {node} out of range")));
        }
        if state >= model.structure.cardinality(node) {
            return Err(DbnError::StateOutOfRange {
                node: model.structure.nodes[node].name.clone(),
                state,
                cardinality: model.structure.cardinality(node),
            });
        }
    }

    let free: Vec<usize> = (0..n).filter(|i| !evidence.contains_key(i)).collect();
    let mut assignment = vec![0usize; n];
    for (&node, &state) in evidence {
        assignment[node] = state;
    }
    let mut dist = vec![0.0f64; model.structure.cardinality(query)];
    enumerate_free(model, &free, 0, &mut assignment, &mut |a, p| {
        dist[a[query]] += p;
    });
    let total: f64 = dist.iter().sum();
    if total <= 0.0 {
        return Err(DbnError::InconsistentEvidence);
    }
    for d in &mut dist {
        *d /= total;
    }
    Ok(dist)
}

/// Exact marginal distribution of every node under the within-slice joint.
/// Computed once per model and cached.
pub fn node_marginals(model: &DbnModel) -> &Vec<Vec<f64>> {
    model.marginals_cache().get_or_init(|| {
        let n = model.n_nodes();
        let free: Vec<usize> = (0..n).collect();
        let mut assignment = vec![0usize; n];
        let mut dists: Vec<Vec<f64>> =
            (0..n).map(|i| vec![0.0; model.structure.cardinality(i)]).collect();
        enumerate_free(model, &free, 0, &mut assignment, &mut |a, p| {
            for (node, &state) in a.iter().enumerate() {
                dists[node][state] += p;
            }
        });
        for dist in &mut dists {
            let total: f64 = dist.iter().sum();
            if total > 0.0 {
                for d in dist.iter_mut() {
                    *d /= total;
                }
            }
        }
        dists
    })
}

/// One row of a node's transition table.
pub fn transition_query(
    model: &DbnModel,
    node: usize,
    prev_state: usize,
) -> Result<&[f64], DbnError> {
    let cpt = model.inter_cpts.get(node).and_then(|c| c.as_ref()).ok_or_else(|| {
        DbnError::NoInterEdge {
            node: model
                .structure
                .nodes
                .get(node)
                .map_or_else(|| format!("#{node}"), |n| n.name.clone()),
        }
    })?;
    if prev_state >= cpt.child_card {
        return Err(DbnError::StateOutOfRange {
            node: model.structure.nodes[node].name.clone(),
            state: prev_state,
            cardinality: cpt.child_card,
        });
    }
    Ok(cpt.row(prev_state))
}

fn enumerate_free(
    model: &DbnModel,
    free: &[usize],
    depth: usize,
    assignment: &mut [usize],
    visit: &mut impl FnMut(&[usize], f64),
) {
    if depth == free.len() {
        let mut p = 1.0;
        for cpt in &model.intra_cpts {
            p *= cpt.prob(assignment);
            if p == 0.0 {
                break;
            }
        }
        visit(assignment, p);
        return;
    }
    let node = free[depth];
    for state in 0..model.structure.cardinality(node) {
        assignment[node] = state;
        enumerate_free(model, free, depth + 1, assignment, visit);
    }
}
