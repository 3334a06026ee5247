//! Ground-truth cognitive annotation from a known model.
//!
//! The stimulus layer (interacting-vehicle acceleration bin and TTC risk
//! grade) is computed from the episode kinematics with the same functions
//! the discretizer uses; organism and response states are then sampled
//! from the given model conditioned on the stimulus and the previous
//! slice. This is the oracle channel for structure-recovery tests: the
//! frames really do come from the model.

use super::{compute_ttc, SimError};
use crate::cognition::{NodeSpace, NPC_A, RISK_GRADE};
use crate::dbn::{sample_next_frame, DbnModel};
use crate::discretize::{bin_acceleration, ttc_risk_grade, CognitiveFrame, ACCEL_BIN_WIDTH};
use crate::rng::Rng;
use crate::traj::Episode;

pub fn annotate_ground_truth(
    episode: &Episode,
    true_dbn: &DbnModel,
    space: &NodeSpace,
    seed: u64,
) -> Result<Vec<CognitiveFrame>, SimError> {
    if true_dbn.n_nodes() != space.n_nodes() {
        return Err(SimError::Config(format!(
            "model has {} nodes, the cognitive space has {}",
            true_dbn.n_nodes(),
            space.n_nodes()
        )));
    }
    let topo = true_dbn.structure.topo_order()?;
    let ego = episode.ego_track();
    let npc_id = episode
        .npc_ids
        .first()
        .ok_or_else(|| SimError::Config("episode has no interacting vehicle".into()))?;
    let npc = episode
        .track(npc_id)
        .ok_or_else(|| SimError::Config(format!("missing track for '{npc_id}'")))?;

    let mut rng = Rng::new(seed);
    let mut frames = Vec::with_capacity(episode.n_steps());
    let mut prev: Option<Vec<usize>> = None;
    for step in 0..episode.n_steps() {
        let ttc = compute_ttc(&ego.states[step], &npc.states[step]).max(1e-9);
        let risk = ttc_risk_grade(ttc).map_err(|e| SimError::Domain(e.to_string()))?;
        let npc_bin = bin_acceleration(npc.states[step].a, ACCEL_BIN_WIDTH)
            .map_err(|e| SimError::Domain(e.to_string()))?;
        let mut fixed = vec![None; space.n_nodes()];
        fixed[NPC_A] = Some(space.accel_state(npc_bin));
        fixed[RISK_GRADE] = Some(risk as usize);
        let states = sample_next_frame(true_dbn, &topo, prev.as_ref(), &fixed, &mut rng);
        frames.push(space.decode(&states));
        prev = Some(states);
    }
    Ok(frames)
}
