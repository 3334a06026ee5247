//! Small differentiable predictor: two GCN branches (physical and
//! cognitive), a single-layer LSTM over the history window, temporal
//! attention, and a linear head emitting future position offsets.
//!
//! Everything is handwritten f64 with analytic reverse-mode gradients so
//! the whole stack can be verified against central finite differences.
//! Forward and gradient evaluation are pure; batch gradients accumulate in
//! a fixed order, keeping training runs bit-reproducible.

use crate::mat::Mat;
use crate::rng::Rng;
use thiserror::Error;

mod gcn;
mod model;
mod train;

pub use gcn::{gcn_layer, normalize_adjacency};
pub use model::{
    encode_step, forward, loss_and_gradients, loss_only, CogInput, EncodedSample, ForwardTrace,
    StepInput,
};
pub use train::{fit, load_weights, loss_curve_csv, save_weights, EpochStats, TrainConfig};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("ego vehicle '{0}' missing from the physical snapshot")]
    EgoMissing(String),
    #[error("non-finite loss at sample {sample}")]
    NonFinite { sample: usize },
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("weights document line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Config(String),
}

/// Ablation variant: which cognitive weighting feeds the second branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Physical branch only; the cognitive half of each step embedding is
    /// zero.
    P,
    /// Cognitive graphs weighted by the ordinary (exogenous-emotion) DBN.
    Cp,
    /// Cognitive graphs weighted by the SOR-constrained DBN.
    Cpsor,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::P => "p",
            Variant::Cp => "cp",
            Variant::Cpsor => "cpsor",
        }
    }

    pub fn parse_str(s: &str) -> Option<Variant> {
        match s.to_ascii_lowercase().as_str() {
            "p" => Some(Variant::P),
            "cp" => Some(Variant::Cp),
            "cpsor" => Some(Variant::Cpsor),
            _ => None,
        }
    }

    pub fn uses_cognition(&self) -> bool {
        !matches!(self, Variant::P)
    }
}

/// Network dimensions. Both GCN branches share hidden/output widths; the
/// LSTM consumes the concatenation of the two branch embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetDims {
    pub phys_in: usize,
    pub cog_in: usize,
    pub cog_nodes: usize,
    pub gcn_hidden: usize,
    pub gcn_out: usize,
    pub lstm_hidden: usize,
    pub attn_dim: usize,
    pub t_p: usize,
    pub t_f: usize,
}

impl NetDims {
    pub fn lstm_in(&self) -> usize {
        2 * self.gcn_out
    }

    pub fn head_out(&self) -> usize {
        2 * self.t_f
    }

    pub fn param_count(&self) -> usize {
        let h = self.lstm_hidden;
        self.phys_in * self.gcn_hidden
            + self.gcn_hidden * self.gcn_out
            + self.cog_in * self.gcn_hidden
            + self.gcn_hidden * self.gcn_out
            + 4 * h * self.lstm_in()
            + 4 * h * h
            + 4 * h
            + self.attn_dim * h
            + self.attn_dim
            + self.head_out() * h
            + self.head_out()
    }
}

/// All learnable weights, with a flat-vector view for optimizer updates and
/// finite-difference checks.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorParams {
    pub dims: NetDims,
    pub w1_phys: Mat,
    pub w2_phys: Mat,
    pub w1_cog: Mat,
    pub w2_cog: Mat,
    /// LSTM input weights, gate blocks stacked (input, forget, cell, output).
    pub lstm_wx: Mat,
    /// LSTM recurrent weights, same gate stacking.
    pub lstm_wh: Mat,
    pub lstm_b: Vec<f64>,
    pub attn_proj: Mat,
    pub attn_vec: Vec<f64>,
    pub head_w: Mat,
    pub head_b: Vec<f64>,
}

impl PredictorParams {
    pub fn zeros(dims: NetDims) -> Self {
        let h = dims.lstm_hidden;
        PredictorParams {
            dims,
            w1_phys: Mat::zeros(dims.phys_in, dims.gcn_hidden),
            w2_phys: Mat::zeros(dims.gcn_hidden, dims.gcn_out),
            w1_cog: Mat::zeros(dims.cog_in, dims.gcn_hidden),
            w2_cog: Mat::zeros(dims.gcn_hidden, dims.gcn_out),
            lstm_wx: Mat::zeros(4 * h, dims.lstm_in()),
            lstm_wh: Mat::zeros(4 * h, h),
            lstm_b: vec![0.0; 4 * h],
            attn_proj: Mat::zeros(dims.attn_dim, h),
            attn_vec: vec![0.0; dims.attn_dim],
            head_w: Mat::zeros(dims.head_out(), h),
            head_b: vec![0.0; dims.head_out()],
        }
    }

    /// Uniform Xavier init for the weight matrices, zero biases except a +1
    /// forget-gate bias.
    pub fn init(dims: NetDims, seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let mut p = PredictorParams::zeros(dims);
        let fill = |m: &mut Mat, fan_in: usize, fan_out: usize, rng: &mut Rng| {
            let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in &mut m.data {
                *v = rng.uniform(-s, s);
            }
        };
        fill(&mut p.w1_phys, dims.phys_in, dims.gcn_hidden, &mut rng);
        fill(&mut p.w2_phys, dims.gcn_hidden, dims.gcn_out, &mut rng);
        fill(&mut p.w1_cog, dims.cog_in, dims.gcn_hidden, &mut rng);
        fill(&mut p.w2_cog, dims.gcn_hidden, dims.gcn_out, &mut rng);
        let h = dims.lstm_hidden;
        fill(&mut p.lstm_wx, dims.lstm_in(), h, &mut rng);
        fill(&mut p.lstm_wh, h, h, &mut rng);
        for b in &mut p.lstm_b[h..2 * h] {
            *b = 1.0;
        }
        fill(&mut p.attn_proj, h, dims.attn_dim, &mut rng);
        let s = (1.0 / dims.attn_dim as f64).sqrt();
        for v in &mut p.attn_vec {
            *v = rng.uniform(-s, s);
        }
        fill(&mut p.head_w, h, dims.head_out(), &mut rng);
        p
    }

    fn segments(&self) -> [&[f64]; 11] {
        [
            &self.w1_phys.data,
            &self.w2_phys.data,
            &self.w1_cog.data,
            &self.w2_cog.data,
            &self.lstm_wx.data,
            &self.lstm_wh.data,
            &self.lstm_b,
            &self.attn_proj.data,
            &self.attn_vec,
            &self.head_w.data,
            &self.head_b,
        ]
    }

    fn segments_mut(&mut self) -> [&mut Vec<f64>; 11] {
        [
            &mut self.w1_phys.data,
            &mut self.w2_phys.data,
            &mut self.w1_cog.data,
            &mut self.w2_cog.data,
            &mut self.lstm_wx.data,
            &mut self.lstm_wh.data,
            &mut self.lstm_b,
            &mut self.attn_proj.data,
            &mut self.attn_vec,
            &mut self.head_w.data,
            &mut self.head_b,
        ]
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dims.param_count());
        for seg in self.segments() {
            out.extend_from_slice(seg);
        }
        out
    }

    pub fn from_flat(dims: NetDims, flat: &[f64]) -> Result<Self, NeuralError> {
        if flat.len() != dims.param_count() {
            return Err(NeuralError::Shape(format!(
                "flat vector has {} entries, dims need {}",
                flat.len(),
                dims.param_count()
            )));
        }
        let mut p = PredictorParams::zeros(dims);
        let mut offset = 0;
        for seg in p.segments_mut() {
            let len = seg.len();
            seg.copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
        Ok(p)
    }

    /// self += scale · other, segment by segment.
    pub fn add_scaled(&mut self, other: &PredictorParams, scale: f64) {
        let other_segs: Vec<Vec<f64>> = other.segments().iter().map(|s| s.to_vec()).collect();
        for (seg, oseg) in self.segments_mut().into_iter().zip(other_segs) {
            for (a, b) in seg.iter_mut().zip(oseg) {
                *a += scale * b;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for seg in self.segments_mut() {
            for v in seg.iter_mut() {
                *v *= s;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.segments().iter().all(|seg| seg.iter().all(|v| v.is_finite()))
    }
}
