//! Ancestral sampling from a fitted model.

use super::{DbnError, DbnModel, Frame, FrameSeq};
use crate::rng::Rng;

/// Draws one frame. Nodes are sampled in topological order of the intra
/// DAG; at t > 0 a node with a transition edge draws from the renormalized
/// product of its intra row and its transition row (falling back to the
/// intra row alone when the two have disjoint support). `fixed` pins
/// selected nodes to evidence states instead of sampling them.
pub fn sample_next_frame(
    model: &DbnModel,
    topo: &[usize],
    prev: Option<&Frame>,
    fixed: &[Option<usize>],
    rng: &mut Rng,
) -> Frame {
    let n = model.n_nodes();
    debug_assert_eq!(fixed.len(), n);
    let mut frame = vec![0usize; n];
    for &node in topo {
        if let Some(state) = fixed[node] {
            frame[node] = state;
            continue;
        }
        let cpt = &model.intra_cpts[node];
        let row = cpt.row(cpt.row_index_of(&frame));
        let mut dist: Vec<f64> = row.to_vec();
        if let (Some(prev_frame), Some(trans)) = (prev, model.inter_cpts[node].as_ref()) {
            let trow = trans.row(prev_frame[node]);
            let mut any = false;
            for (d, &t) in dist.iter_mut().zip(trow) {
                *d *= t;
                any |= *d > 0.0;
            }
            if !any {
                dist = row.to_vec();
            }
        }
        frame[node] = draw(&dist, rng);
    }
    frame
}

/// Samples a sequence of `horizon` frames, deterministic per seed.
pub fn sample(model: &DbnModel, horizon: usize, seed: u64) -> Result<FrameSeq, DbnError> {
    let topo = model.structure.topo_order()?;
    let fixed = vec![None; model.n_nodes()];
    let mut rng = Rng::new(seed);
    let mut out: FrameSeq = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let prev = if t == 0 { None } else { out.last() };
        let frame = sample_next_frame(model, &topo, prev, &fixed, &mut rng);
        out.push(frame);
    }
    Ok(out)
}

fn draw(dist: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = dist.iter().sum();
    let mut target = rng.next_f64() * total;
    for (i, &p) in dist.iter().enumerate() {
        target -= p;
        if target <= 0.0 {
            return i;
        }
    }
    dist.len() - 1
}
