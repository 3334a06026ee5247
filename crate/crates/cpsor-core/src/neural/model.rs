//! Forward pass, reverse-mode gradients, and the encoded-sample input form.

use super::gcn::normalize_adjacency;
use super::{NetDims, NeuralError, PredictorParams};
use crate::graph::GraphSnapshot;
use crate::mat::Mat;

/// Cognitive branch input for one step: normalized adjacency and the
/// pre-propagated feature product A_norm · H0 (constant per sample, so it
/// is computed once at encode time).
#[derive(Debug, Clone)]
pub struct CogInput {
    pub anorm: Mat,
    pub prop0: Mat,
}

/// One history step, ready for the network.
#[derive(Debug, Clone)]
pub struct StepInput {
    pub phys_anorm: Mat,
    pub phys_prop0: Mat,
    pub ego_row: usize,
    pub cog: Option<CogInput>,
}

impl StepInput {
    pub fn from_snapshots(
        phys: &GraphSnapshot,
        ego_id: &str,
        cog: Option<&GraphSnapshot>,
    ) -> Result<Self, NeuralError> {
        let ego_row = phys
            .node_index(ego_id)
            .ok_or_else(|| NeuralError::EgoMissing(ego_id.to_string()))?;
        let phys_anorm = normalize_adjacency(&phys.adjacency)?;
        let phys_prop0 = phys_anorm.matmul(&phys.features);
        let cog = match cog {
            Some(snapshot) => {
                let anorm = normalize_adjacency(&snapshot.adjacency)?;
                let prop0 = anorm.matmul(&snapshot.features);
                Some(CogInput { anorm, prop0 })
            }
            None => None,
        };
        Ok(StepInput { phys_anorm, phys_prop0, ego_row, cog })
    }
}

/// A windowed sample in network form: per-step graphs, the raw ego
/// history for reporting, the anchor position and the future positions to
/// hit.
#[derive(Debug, Clone)]
pub struct EncodedSample {
    pub steps: Vec<StepInput>,
    /// Raw ego positions over the history window (plotting only; the
    /// network sees the standardized graph features).
    pub ego_history: Vec<(f64, f64)>,
    pub last_pos: (f64, f64),
    pub target: Vec<(f64, f64)>,
    pub scenario_id: u8,
}

#[derive(Debug, Clone)]
pub struct StepTrace {
    pub h1_phys: Mat,
    pub h2_phys: Mat,
    pub h1_cog: Option<Mat>,
    pub h2_cog: Option<Mat>,
}

#[derive(Debug, Clone)]
pub struct LstmStep {
    pub gate_i: Vec<f64>,
    pub gate_f: Vec<f64>,
    pub gate_g: Vec<f64>,
    pub gate_o: Vec<f64>,
    pub cell: Vec<f64>,
    pub cell_tanh: Vec<f64>,
    pub hidden: Vec<f64>,
}

/// Activations retained for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub steps: Vec<StepTrace>,
    pub step_embeddings: Vec<Vec<f64>>,
    pub lstm: Vec<LstmStep>,
    /// Attention weights over the history steps; they sum to 1.
    pub attention: Vec<f64>,
    pub attn_u: Vec<Vec<f64>>,
    pub context: Vec<f64>,
    pub head_out: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn check_step_shapes(dims: &NetDims, step: &StepInput) -> Result<(), NeuralError> {
    if step.phys_prop0.cols != dims.phys_in {
        return Err(NeuralError::Shape(format!(
            "physical features have width {}, dims say {}",
            step.phys_prop0.cols, dims.phys_in
        )));
    }
    if step.ego_row >= step.phys_prop0.rows {
        return Err(NeuralError::Shape("ego row outside the physical graph".into()));
    }
    if let Some(cog) = &step.cog {
        if cog.prop0.cols != dims.cog_in || cog.prop0.rows != dims.cog_nodes {
            return Err(NeuralError::Shape(format!(
                "cognitive features are {}x{}, dims say {}x{}",
                cog.prop0.rows, cog.prop0.cols, dims.cog_nodes, dims.cog_in
            )));
        }
    }
    Ok(())
}

/// Runs both GCN branches for one step. The embedding is the ego node's
/// physical embedding concatenated with the mean-pooled cognitive
/// embedding; an absent cognitive branch contributes zeros of fixed width.
fn step_forward(
    params: &PredictorParams,
    step: &StepInput,
) -> Result<(Vec<f64>, StepTrace), NeuralError> {
    let dims = &params.dims;
    check_step_shapes(dims, step)?;
    let relu = |m: Mat| m.map(|x| x.max(0.0));

    let h1_phys = relu(step.phys_prop0.matmul(&params.w1_phys));
    let h2_phys = relu(step.phys_anorm.matmul(&h1_phys).matmul(&params.w2_phys));
    let mut embedding = Vec::with_capacity(dims.lstm_in());
    embedding.extend_from_slice(h2_phys.row(step.ego_row));

    let (h1_cog, h2_cog) = match &step.cog {
        Some(cog) => {
            let h1 = relu(cog.prop0.matmul(&params.w1_cog));
            let h2 = relu(cog.anorm.matmul(&h1).matmul(&params.w2_cog));
            let n = h2.rows as f64;
            for col in 0..h2.cols {
                embedding.push((0..h2.rows).map(|r| h2[(r, col)]).sum::<f64>() / n);
            }
            (Some(h1), Some(h2))
        }
        None => {
            embedding.extend(std::iter::repeat_n(0.0, dims.gcn_out));
            (None, None)
        }
    };
    Ok((embedding, StepTrace { h1_phys, h2_phys, h1_cog, h2_cog }))
}

/// One step embedding from raw graph snapshots (the contract-level entry
/// point; batch paths pre-encode via [`StepInput::from_snapshots`]).
pub fn encode_step(
    phys: &GraphSnapshot,
    ego_id: &str,
    cog: Option<&GraphSnapshot>,
    params: &PredictorParams,
) -> Result<Vec<f64>, NeuralError> {
    let step = StepInput::from_snapshots(phys, ego_id, cog)?;
    Ok(step_forward(params, &step)?.0)
}

/// Full forward pass: per-step GCN embeddings, LSTM, attention pooling,
/// and the offsets-from-last-position head.
pub fn forward(
    sample: &EncodedSample,
    params: &PredictorParams,
) -> Result<(Vec<(f64, f64)>, ForwardTrace), NeuralError> {
    let dims = &params.dims;
    if sample.steps.len() != dims.t_p {
        return Err(NeuralError::Shape(format!(
            "sample has {} history steps, dims say {}",
            sample.steps.len(),
            dims.t_p
        )));
    }
    if sample.target.len() != dims.t_f {
        return Err(NeuralError::Shape(format!(
            "sample has {} future steps, dims say {}",
            sample.target.len(),
            dims.t_f
        )));
    }
    let h = dims.lstm_hidden;

    let mut steps = Vec::with_capacity(dims.t_p);
    let mut embeddings = Vec::with_capacity(dims.t_p);
    for step in &sample.steps {
        let (x, trace) = step_forward(params, step)?;
        embeddings.push(x);
        steps.push(trace);
    }

    let mut lstm = Vec::with_capacity(dims.t_p);
    let mut h_prev = vec![0.0; h];
    let mut c_prev = vec![0.0; h];
    for x in &embeddings {
        let mut z = params.lstm_wx.matvec(x);
        let rec = params.lstm_wh.matvec(&h_prev);
        for (zi, (ri, bi)) in z.iter_mut().zip(rec.iter().zip(&params.lstm_b)) {
            *zi += ri + bi;
        }
        let gate_i: Vec<f64> = z[0..h].iter().map(|&v| sigmoid(v)).collect();
        let gate_f: Vec<f64> = z[h..2 * h].iter().map(|&v| sigmoid(v)).collect();
        let gate_g: Vec<f64> = z[2 * h..3 * h].iter().map(|&v| v.tanh()).collect();
        let gate_o: Vec<f64> = z[3 * h..4 * h].iter().map(|&v| sigmoid(v)).collect();
        let cell: Vec<f64> = (0..h)
            .map(|k| gate_f[k] * c_prev[k] + gate_i[k] * gate_g[k])
            .collect();
        let cell_tanh: Vec<f64> = cell.iter().map(|&v| v.tanh()).collect();
        let hidden: Vec<f64> = (0..h).map(|k| gate_o[k] * cell_tanh[k]).collect();
        h_prev = hidden.clone();
        c_prev = cell.clone();
        lstm.push(LstmStep { gate_i, gate_f, gate_g, gate_o, cell, cell_tanh, hidden });
    }

    // Attention over time: scores v·tanh(P h_t), softmax, weighted sum.
    let mut scores = Vec::with_capacity(dims.t_p);
    let mut attn_u = Vec::with_capacity(dims.t_p);
    for step in &lstm {
        let u: Vec<f64> = params
            .attn_proj
            .matvec(&step.hidden)
            .into_iter()
            .map(|v| v.tanh())
            .collect();
        scores.push(u.iter().zip(&params.attn_vec).map(|(a, b)| a * b).sum::<f64>());
        attn_u.push(u);
    }
    let max_score = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max_score).exp()).collect();
    let total: f64 = exps.iter().sum();
    let attention: Vec<f64> = exps.iter().map(|e| e / total).collect();
    let mut context = vec![0.0; h];
    for (w, step) in attention.iter().zip(&lstm) {
        for (c, &hv) in context.iter_mut().zip(&step.hidden) {
            *c += w * hv;
        }
    }

    let mut head_out = params.head_w.matvec(&context);
    for (y, b) in head_out.iter_mut().zip(&params.head_b) {
        *y += b;
    }
    let preds: Vec<(f64, f64)> = (0..dims.t_f)
        .map(|k| (sample.last_pos.0 + head_out[2 * k], sample.last_pos.1 + head_out[2 * k + 1]))
        .collect();

    Ok((
        preds,
        ForwardTrace {
            steps,
            step_embeddings: embeddings,
            lstm,
            attention,
            attn_u,
            context,
            head_out,
        },
    ))
}

/// Mean squared Euclidean error over all predicted points of the batch.
pub fn loss_only(batch: &[EncodedSample], params: &PredictorParams) -> Result<f64, NeuralError> {
    if batch.is_empty() {
        return Err(NeuralError::Config("empty batch".into()));
    }
    let mut total = 0.0;
    for (idx, sample) in batch.iter().enumerate() {
        let (preds, _) = forward(sample, params)?;
        let mut acc = 0.0;
        for (p, t) in preds.iter().zip(&sample.target) {
            acc += (p.0 - t.0).powi(2) + (p.1 - t.1).powi(2);
        }
        let sample_loss = acc / sample.target.len() as f64;
        if !sample_loss.is_finite() {
            return Err(NeuralError::NonFinite { sample: idx });
        }
        total += sample_loss;
    }
    Ok(total / batch.len() as f64)
}

/// Batch loss plus analytic gradients aligned with the flat parameter view.
pub fn loss_and_gradients(
    batch: &[EncodedSample],
    params: &PredictorParams,
) -> Result<(f64, PredictorParams), NeuralError> {
    if batch.is_empty() {
        return Err(NeuralError::Config("empty batch".into()));
    }
    let mut grads = PredictorParams::zeros(params.dims);
    let mut total = 0.0;
    for (idx, sample) in batch.iter().enumerate() {
        let (preds, trace) = forward(sample, params)?;
        let mut acc = 0.0;
        for (p, t) in preds.iter().zip(&sample.target) {
            acc += (p.0 - t.0).powi(2) + (p.1 - t.1).powi(2);
        }
        let sample_loss = acc / sample.target.len() as f64;
        if !sample_loss.is_finite() {
            return Err(NeuralError::NonFinite { sample: idx });
        }
        total += sample_loss;
        backward(sample, params, &trace, &preds, batch.len(), &mut grads);
    }
    Ok((total / batch.len() as f64, grads))
}

fn add_outer(target: &mut Mat, u: &[f64], v: &[f64]) {
    debug_assert_eq!(target.rows, u.len());
    debug_assert_eq!(target.cols, v.len());
    for (i, &ui) in u.iter().enumerate() {
        if ui == 0.0 {
            continue;
        }
        let row = target.row_mut(i);
        for (t, &vj) in row.iter_mut().zip(v) {
            *t += ui * vj;
        }
    }
}

#[allow(clippy::needless_range_loop)]
fn backward(
    sample: &EncodedSample,
    params: &PredictorParams,
    trace: &ForwardTrace,
    preds: &[(f64, f64)],
    batch_size: usize,
    grads: &mut PredictorParams,
) {
    let dims = &params.dims;
    let h = dims.lstm_hidden;
    let t_p = dims.t_p;
    let scale = 2.0 / (batch_size as f64 * dims.t_f as f64);

    // Head.
    let mut d_y = vec![0.0; dims.head_out()];
    for (k, (p, t)) in preds.iter().zip(&sample.target).enumerate() {
        d_y[2 * k] = scale * (p.0 - t.0);
        d_y[2 * k + 1] = scale * (p.1 - t.1);
    }
    add_outer(&mut grads.head_w, &d_y, &trace.context);
    for (g, d) in grads.head_b.iter_mut().zip(&d_y) {
        *g += d;
    }
    let d_context = params.head_w.t_matvec(&d_y);

    // Attention: softmax over scores s_t = v · tanh(P h_t).
    let d_alpha: Vec<f64> = trace
        .lstm
        .iter()
        .map(|step| step.hidden.iter().zip(&d_context).map(|(a, b)| a * b).sum())
        .collect();
    let weighted: f64 = trace.attention.iter().zip(&d_alpha).map(|(a, b)| a * b).sum();
    let d_scores: Vec<f64> = trace
        .attention
        .iter()
        .zip(&d_alpha)
        .map(|(&a, &da)| a * (da - weighted))
        .collect();
    let mut d_hidden: Vec<Vec<f64>> = vec![vec![0.0; h]; t_p];
    for t in 0..t_p {
        for (dh, &dc) in d_hidden[t].iter_mut().zip(&d_context) {
            *dh += trace.attention[t] * dc;
        }
        let u = &trace.attn_u[t];
        for (g, &uv) in grads.attn_vec.iter_mut().zip(u) {
            *g += d_scores[t] * uv;
        }
        let d_pre: Vec<f64> = u
            .iter()
            .zip(&params.attn_vec)
            .map(|(&uv, &vv)| d_scores[t] * vv * (1.0 - uv * uv))
            .collect();
        add_outer(&mut grads.attn_proj, &d_pre, &trace.lstm[t].hidden);
        let back = params.attn_proj.t_matvec(&d_pre);
        for (dh, b) in d_hidden[t].iter_mut().zip(back) {
            *dh += b;
        }
    }

    // LSTM backward through time.
    let mut d_embeddings: Vec<Vec<f64>> = vec![vec![0.0; dims.lstm_in()]; t_p];
    let mut d_cell_next = vec![0.0; h];
    for t in (0..t_p).rev() {
        let step = &trace.lstm[t];
        let dh = &d_hidden[t];
        let mut d_z = vec![0.0; 4 * h];
        let mut d_cell = vec![0.0; h];
        for k in 0..h {
            let d_o = dh[k] * step.cell_tanh[k];
            let d_tc = dh[k] * step.gate_o[k];
            d_cell[k] = d_cell_next[k] + d_tc * (1.0 - step.cell_tanh[k] * step.cell_tanh[k]);
            let c_prev = if t == 0 { 0.0 } else { trace.lstm[t - 1].cell[k] };
            let d_i = d_cell[k] * step.gate_g[k];
            let d_f = d_cell[k] * c_prev;
            let d_g = d_cell[k] * step.gate_i[k];
            d_z[k] = d_i * step.gate_i[k] * (1.0 - step.gate_i[k]);
            d_z[h + k] = d_f * step.gate_f[k] * (1.0 - step.gate_f[k]);
            d_z[2 * h + k] = d_g * (1.0 - step.gate_g[k] * step.gate_g[k]);
            d_z[3 * h + k] = d_o * step.gate_o[k] * (1.0 - step.gate_o[k]);
        }
        add_outer(&mut grads.lstm_wx, &d_z, &trace.step_embeddings[t]);
        if t > 0 {
            add_outer(&mut grads.lstm_wh, &d_z, &trace.lstm[t - 1].hidden);
        }
        for (g, d) in grads.lstm_b.iter_mut().zip(&d_z) {
            *g += d;
        }
        d_embeddings[t] = params.lstm_wx.t_matvec(&d_z);
        if t > 0 {
            let back = params.lstm_wh.t_matvec(&d_z);
            for (dh_prev, b) in d_hidden[t - 1].iter_mut().zip(back) {
                *dh_prev += b;
            }
        }
        for k in 0..h {
            d_cell_next[k] = d_cell[k] * step.gate_f[k];
        }
    }

    // GCN branches per step.
    for t in 0..t_p {
        let step = &sample.steps[t];
        let strace = &trace.steps[t];
        let d_x = &d_embeddings[t];

        // Physical branch: only the ego row receives gradient.
        let n = strace.h2_phys.rows;
        let mut d_h2 = Mat::zeros(n, dims.gcn_out);
        d_h2.row_mut(step.ego_row).copy_from_slice(&d_x[..dims.gcn_out]);
        backward_branch(
            &mut grads.w1_phys,
            &mut grads.w2_phys,
            &params.w2_phys,
            &step.phys_anorm,
            &step.phys_prop0,
            &strace.h1_phys,
            &strace.h2_phys,
            d_h2,
        );

        // Cognitive branch: mean pooling spreads 1/n to every node row.
        if let (Some(cog), Some(h1), Some(h2)) = (&step.cog, &strace.h1_cog, &strace.h2_cog) {
            let n = h2.rows;
            let mut d_h2 = Mat::zeros(n, dims.gcn_out);
            for r in 0..n {
                for (col, d) in d_h2.row_mut(r).iter_mut().enumerate() {
                    *d = d_x[dims.gcn_out + col] / n as f64;
                }
            }
            backward_branch(
                &mut grads.w1_cog,
                &mut grads.w2_cog,
                &params.w2_cog,
                &cog.anorm,
                &cog.prop0,
                h1,
                h2,
                d_h2,
            );
        }
    }
}

/// Reverse pass through ReLU(A · ReLU(P0 · W1) · W2) given d(output).
#[allow(clippy::too_many_arguments)]
fn backward_branch(
    d_w1: &mut Mat,
    d_w2: &mut Mat,
    w2: &Mat,
    anorm: &Mat,
    prop0: &Mat,
    h1: &Mat,
    h2: &Mat,
    mut d_h2: Mat,
) {
    // ReLU mask of layer 2.
    for (d, &act) in d_h2.data.iter_mut().zip(&h2.data) {
        if act <= 0.0 {
            *d = 0.0;
        }
    }
    let q1 = anorm.matmul(h1);
    d_w2.add_scaled(&q1.t_matmul(&d_h2), 1.0);
    let d_q1 = d_h2.matmul_t(w2);
    let mut d_h1 = anorm.t_matmul(&d_q1);
    for (d, &act) in d_h1.data.iter_mut().zip(&h1.data) {
        if act <= 0.0 {
            *d = 0.0;
        }
    }
    d_w1.add_scaled(&prop0.t_matmul(&d_h1), 1.0);
}
