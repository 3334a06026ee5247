//! SOR vs ordinary DBN comparison: per-scenario BIC in both penalty
//! conventions, plus the inferred and empirical P(Ego_a | Npc_a) curves.

use super::EvalError;
use crate::dbn::{bic_score, infer_conditional, DbnModel, FrameSeq, PenaltyMode};
use crate::traj::fmt_f64;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioBicRow {
    pub scenario_id: u8,
    pub n_frames: usize,
    pub sor_bic_params: f64,
    pub sor_bic_nodes: f64,
    pub ordinary_bic_params: f64,
    pub ordinary_bic_nodes: f64,
}

/// One point of the conditional curve P(Ego_a = ego_state | Npc_a = npc_state).
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub npc_state: usize,
    pub ego_state: usize,
    /// Empirical frequency of this npc state (curve weight).
    pub npc_weight: f64,
    pub sor_p: f64,
    pub ordinary_p: f64,
    pub empirical_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DbnComparison {
    pub rows: Vec<ScenarioBicRow>,
    pub curves: Vec<CurvePoint>,
}

/// Scores both models per scenario and reconstructs the acceleration
/// response curves on the pooled data. Both models must share the node
/// space and contain `Npc_a` and `Ego_a` nodes.
pub fn compare_dbn(
    frames_by_scenario: &[(u8, Vec<FrameSeq>)],
    sor: &DbnModel,
    ordinary: &DbnModel,
) -> Result<DbnComparison, EvalError> {
    let nodes_match = sor.structure.nodes.len() == ordinary.structure.nodes.len()
        && sor
            .structure
            .nodes
            .iter()
            .zip(&ordinary.structure.nodes)
            .all(|(a, b)| a.name == b.name && a.cardinality == b.cardinality);
    if !nodes_match {
        return Err(EvalError::Config("models disagree on the node space".into()));
    }
    let npc = sor
        .structure
        .node_index("Npc_a")
        .ok_or_else(|| EvalError::Config("model lacks an Npc_a node".into()))?;
    let ego = sor
        .structure
        .node_index("Ego_a")
        .ok_or_else(|| EvalError::Config("model lacks an Ego_a node".into()))?;

    let mut rows = Vec::with_capacity(frames_by_scenario.len());
    for (scenario_id, seqs) in frames_by_scenario {
        rows.push(ScenarioBicRow {
            scenario_id: *scenario_id,
            n_frames: seqs.iter().map(|s| s.len()).sum(),
            sor_bic_params: bic_score(sor, seqs, PenaltyMode::Params)?,
            sor_bic_nodes: bic_score(sor, seqs, PenaltyMode::Nodes)?,
            ordinary_bic_params: bic_score(ordinary, seqs, PenaltyMode::Params)?,
            ordinary_bic_nodes: bic_score(ordinary, seqs, PenaltyMode::Nodes)?,
        });
    }

    // Empirical joint counts over the pooled data.
    let npc_card = sor.structure.cardinality(npc);
    let ego_card = sor.structure.cardinality(ego);
    let mut counts = vec![0.0f64; npc_card * ego_card];
    let mut total = 0.0f64;
    for (_, seqs) in frames_by_scenario {
        for seq in seqs {
            for frame in seq {
                counts[frame[npc] * ego_card + frame[ego]] += 1.0;
                total += 1.0;
            }
        }
    }

    let mut curves = Vec::new();
    for q in 0..npc_card {
        let row_total: f64 = counts[q * ego_card..(q + 1) * ego_card].iter().sum();
        if row_total == 0.0 {
            continue; // npc state never observed: no empirical curve
        }
        let evidence = BTreeMap::from([(npc, q)]);
        let sor_curve = infer_conditional(sor, ego, &evidence)?;
        let ord_curve = infer_conditional(ordinary, ego, &evidence)?;
        for e in 0..ego_card {
            curves.push(CurvePoint {
                npc_state: q,
                ego_state: e,
                npc_weight: row_total / total,
                sor_p: sor_curve[e],
                ordinary_p: ord_curve[e],
                empirical_p: counts[q * ego_card + e] / row_total,
            });
        }
    }
    Ok(DbnComparison { rows, curves })
}

/// Weighted total-variation distance between one model's conditional
/// curves and the empirical curves: Σ_q w_q · ½ Σ_e |p − p̂|.
pub fn curve_tv_distance(curves: &[CurvePoint], use_sor: bool) -> f64 {
    let mut by_npc: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for c in curves {
        let p = if use_sor { c.sor_p } else { c.ordinary_p };
        let entry = by_npc.entry(c.npc_state).or_insert((c.npc_weight, 0.0));
        entry.1 += 0.5 * (p - c.empirical_p).abs();
    }
    by_npc.values().map(|(w, tv)| w * tv).sum()
}

pub fn curve_csv(comparison: &DbnComparison) -> String {
    let mut out = String::from("npc_state,ego_state,npc_weight,sor_p,ordinary_p,empirical_p\n");
    for c in &comparison.curves {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.npc_state,
            c.ego_state,
            fmt_f64(c.npc_weight),
            fmt_f64(c.sor_p),
            fmt_f64(c.ordinary_p),
            fmt_f64(c.empirical_p),
        ));
    }
    out.push_str("scenario,n_frames,sor_bic_params,sor_bic_nodes,ordinary_bic_params,ordinary_bic_nodes\n");
    for r in &comparison.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.scenario_id,
            r.n_frames,
            fmt_f64(r.sor_bic_params),
            fmt_f64(r.sor_bic_nodes),
            fmt_f64(r.ordinary_bic_params),
            fmt_f64(r.ordinary_bic_nodes),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cognition::{ordinary_structure, true_sor_dbn, NodeSpace};
    use crate::dbn::{hill_climb, mle_fit, sample, Prior, SearchConfig};

    fn generated_scenario_data(space: &NodeSpace, frames: usize) -> Vec<(u8, Vec<FrameSeq>)> {
        let truth = true_sor_dbn(space, false);
        (1..=2u8)
            .map(|s| (s, vec![sample(&truth, frames, s as u64 * 31).unwrap()]))
            .collect()
    }

    #[test]
    fn identical_models_give_identical_report() {
        let space = NodeSpace::default();
        let data = generated_scenario_data(&space, 500);
        let seqs: Vec<FrameSeq> = data.iter().flat_map(|(_, s)| s.clone()).collect();
        let model = mle_fit(&ordinary_structure(&space), &seqs, 1.0).unwrap();
        let cmp = compare_dbn(&data, &model, &model).unwrap();
        for r in &cmp.rows {
            assert_eq!(r.sor_bic_params, r.ordinary_bic_params);
            assert_eq!(r.sor_bic_nodes, r.ordinary_bic_nodes);
        }
        for c in &cmp.curves {
            assert_eq!(c.sor_p, c.ordinary_p);
        }
        assert!(
            (curve_tv_distance(&cmp.curves, true) - curve_tv_distance(&cmp.curves, false)).abs()
                < 1e-15
        );
    }

    #[test]
    fn sor_search_beats_hand_coded_ordinary_on_sor_data() {
        let space = NodeSpace::default();
        let data = generated_scenario_data(&space, 3000);
        let seqs: Vec<FrameSeq> = data.iter().flat_map(|(_, s)| s.clone()).collect();
        let mut search = SearchConfig::new(Prior::Sor, 3);
        search.restarts = 2;
        let sor = hill_climb(&space.node_defs(), &seqs, &search).unwrap();
        let sor = mle_fit(&sor.structure, &seqs, 0.0).unwrap();
        let ordinary = mle_fit(&ordinary_structure(&space), &seqs, 0.0).unwrap();
        let cmp = compare_dbn(&data, &sor, &ordinary).unwrap();
        for r in &cmp.rows {
            assert!(
                r.sor_bic_params >= r.ordinary_bic_params,
                "scenario {}: SOR {} vs ordinary {}",
                r.scenario_id,
                r.sor_bic_params,
                r.ordinary_bic_params
            );
        }
        // And the SOR model's response curve tracks the data at least as
        // closely in total variation.
        let tv_sor = curve_tv_distance(&cmp.curves, true);
        let tv_ord = curve_tv_distance(&cmp.curves, false);
        assert!(tv_sor <= tv_ord + 1e-9, "TV sor {tv_sor} vs ordinary {tv_ord}");
    }

    #[test]
    fn tv_distance_matches_hand_computation() {
        let curves = vec![
            CurvePoint { npc_state: 0, ego_state: 0, npc_weight: 0.25, sor_p: 0.6, ordinary_p: 0.5, empirical_p: 0.7 },
            CurvePoint { npc_state: 0, ego_state: 1, npc_weight: 0.25, sor_p: 0.4, ordinary_p: 0.5, empirical_p: 0.3 },
            CurvePoint { npc_state: 2, ego_state: 0, npc_weight: 0.75, sor_p: 0.9, ordinary_p: 0.2, empirical_p: 1.0 },
            CurvePoint { npc_state: 2, ego_state: 1, npc_weight: 0.75, sor_p: 0.1, ordinary_p: 0.8, empirical_p: 0.0 },
        ];
        // Direct route: TV per npc state, then weight.
        let sor = 0.25 * 0.5 * (0.1 + 0.1) + 0.75 * 0.5 * (0.1 + 0.1);
        let ord = 0.25 * 0.5 * (0.2 + 0.2) + 0.75 * 0.5 * (0.8 + 0.8);
        assert!((curve_tv_distance(&curves, true) - sor).abs() < 1e-12);
        assert!((curve_tv_distance(&curves, false) - ord).abs() < 1e-12);
    }

    #[test]
    fn node_mismatch_rejected() {
        let space = NodeSpace::default();
        let small = NodeSpace { behavior_node: false, ..space };
        let data = generated_scenario_data(&space, 200);
        let seqs: Vec<FrameSeq> = data.iter().flat_map(|(_, s)| s.clone()).collect();
        let big = mle_fit(&ordinary_structure(&space), &seqs, 1.0).unwrap();
        let small_seqs: Vec<FrameSeq> = seqs
            .iter()
            .map(|s| s.iter().map(|f| f[..8].to_vec()).collect())
            .collect();
        let little = mle_fit(&ordinary_structure(&small), &small_seqs, 1.0).unwrap();
        assert!(compare_dbn(&data, &big, &little).is_err());
    }
}
