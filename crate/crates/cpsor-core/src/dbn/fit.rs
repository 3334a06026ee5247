//! Maximum-likelihood parameter estimation and BIC scoring.

use super::{check_frame, Cpt, DbnError, DbnModel, DbnStructure, FrameSeq};

/// BIC complexity penalty flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyMode {
    /// Free CPT parameter count — the standard definition, and the only one
    /// that can discriminate candidate structures during search.
    Params,
    /// Node count. Constant across structures; kept as a fidelity mode so
    /// reports can quote the score in this convention as well.
    Nodes,
}

pub fn total_frames(data: &[FrameSeq]) -> usize {
    data.iter().map(|seq| seq.len()).sum()
}

/// Fits every CPT by (smoothed) maximum likelihood.
///
/// Each intra row is (count + alpha) / (total + alpha·cardinality);
/// transition tables are estimated the same way from consecutive-frame
/// pairs. With alpha = 0 an entirely unseen parent configuration falls
/// back to a uniform row.
pub fn mle_fit(
    structure: &DbnStructure,
    data: &[FrameSeq],
    alpha: f64,
) -> Result<DbnModel, DbnError> {
    if total_frames(data) == 0 {
        return Err(DbnError::EmptyData);
    }
    if alpha < 0.0 {
        return Err(DbnError::Shape(format!("negative smoothing count {alpha}")));
    }
    for seq in data {
        for frame in seq {
            check_frame(structure, frame)?;
        }
    }

    let n = structure.n_nodes();
    let mut intra_cpts = Vec::with_capacity(n);
    for child in 0..n {
        let parents = structure.parents(child);
        let parent_cards: Vec<usize> = parents.iter().map(|&p| structure.cardinality(p)).collect();
        let card = structure.cardinality(child);
        let mut cpt = Cpt::uniform(child, parents, parent_cards, card);
        let mut counts = vec![0.0f64; cpt.n_rows() * card];
        for seq in data {
            for frame in seq {
                let row = cpt.row_index_of(frame);
                counts[row * card + frame[child]] += 1.0;
            }
        }
        fill_rows(&mut cpt, &counts, alpha);
        intra_cpts.push(cpt);
    }

    let mut inter_cpts = Vec::with_capacity(n);
    for node in 0..n {
        if !structure.has_inter_self(node) {
            inter_cpts.push(None);
            continue;
        }
        let card = structure.cardinality(node);
        // Transition table: rows indexed by the previous state. Parent
        // index refers to the node itself in the previous slice.
        let mut cpt = Cpt::uniform(node, vec![node], vec![card], card);
        let mut counts = vec![0.0f64; card * card];
        for seq in data {
            for pair in seq.windows(2) {
                counts[pair[0][node] * card + pair[1][node]] += 1.0;
            }
        }
        fill_rows(&mut cpt, &counts, alpha);
        inter_cpts.push(Some(cpt));
    }

    let model = DbnModel::new(structure.clone(), intra_cpts, inter_cpts, total_frames(data));
    debug_assert!(model.validate().is_ok());
    Ok(model)
}

fn fill_rows(cpt: &mut Cpt, counts: &[f64], alpha: f64) {
    let card = cpt.child_card;
    for r in 0..cpt.n_rows() {
        let row_counts = &counts[r * card..(r + 1) * card];
        let total: f64 = row_counts.iter().sum();
        let row = cpt.row_mut(r);
        if total == 0.0 && alpha == 0.0 {
            for p in row.iter_mut() {
                *p = 1.0 / card as f64;
            }
        } else {
            let denom = total + alpha * card as f64;
            for (p, &c) in row.iter_mut().zip(row_counts) {
                *p = (c + alpha) / denom;
            }
        }
    }
}

/// Natural-log likelihood of the data under the model: within-slice CPT
/// terms for every frame plus transition terms for every consecutive pair.
/// A zero-probability event yields −infinity.
pub fn log_likelihood(model: &DbnModel, data: &[FrameSeq]) -> Result<f64, DbnError> {
    if total_frames(data) == 0 {
        return Err(DbnError::EmptyData);
    }
    let mut total = 0.0f64;
    for seq in data {
        for frame in seq {
            model.check_frame(frame)?;
            for cpt in &model.intra_cpts {
                total += cpt.prob(frame).ln();
            }
        }
        for pair in seq.windows(2) {
            for cpt in model.inter_cpts.iter().flatten() {
                let row = cpt.row(pair[0][cpt.child]);
                total += row[pair[1][cpt.child]].ln();
            }
        }
    }
    Ok(total)
}

/// BIC = logL − 0.5 · penalty · ln(m), m = training frame count. Higher is
/// better.
pub fn bic_score(model: &DbnModel, data: &[FrameSeq], mode: PenaltyMode) -> Result<f64, DbnError> {
    let m = total_frames(data);
    if m == 0 {
        return Err(DbnError::EmptyData);
    }
    let penalty = match mode {
        PenaltyMode::Params => model.structure.free_parameters() as f64,
        PenaltyMode::Nodes => model.n_nodes() as f64,
    };
    Ok(log_likelihood(model, data)? - 0.5 * penalty * (m as f64).ln())
}
