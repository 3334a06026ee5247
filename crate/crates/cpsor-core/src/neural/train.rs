//! Deterministic minibatch training and the weights file format.

use super::model::{loss_and_gradients, loss_only, EncodedSample};
use super::{NetDims, NeuralError, PredictorParams, Variant};
use crate::rng::Rng;
use crate::traj::fmt_f64;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 30, batch_size: 16, learning_rate: 5e-3, momentum: 0.9, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_loss: f64,
}

/// Momentum gradient descent with a fixed step size and a seeded shuffling
/// stream. Returns the parameters with the best validation loss and the
/// per-epoch loss curve. Identical config and data give identical curves.
pub fn fit(
    train: &[EncodedSample],
    valid: &[EncodedSample],
    params0: &PredictorParams,
    cfg: &TrainConfig,
) -> Result<(PredictorParams, Vec<EpochStats>), NeuralError> {
    if train.is_empty() || valid.is_empty() {
        return Err(NeuralError::Config("empty training or validation split".into()));
    }
    if cfg.batch_size == 0 {
        return Err(NeuralError::Config("batch size must be at least 1".into()));
    }
    let mut params = params0.clone();
    let mut velocity = PredictorParams::zeros(params.dims);
    let mut rng = Rng::new(cfg.seed);
    let mut best = params.clone();
    let mut best_valid = loss_only(valid, &params)?;
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut batch: Vec<EncodedSample> = Vec::with_capacity(cfg.batch_size);

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train[i].clone()));
            let (loss, grads) = loss_and_gradients(&batch, &params)?;
            if !loss.is_finite() {
                return Err(NeuralError::Diverged { epoch });
            }
            epoch_loss += loss * chunk.len() as f64;
            seen += chunk.len();
            velocity.scale(cfg.momentum);
            velocity.add_scaled(&grads, -cfg.learning_rate);
            params.add_scaled(&velocity, 1.0);
            if !params.is_finite() {
                return Err(NeuralError::Diverged { epoch });
            }
        }
        let train_loss = epoch_loss / seen as f64;
        let valid_loss = loss_only(valid, &params)?;
        if !valid_loss.is_finite() {
            return Err(NeuralError::Diverged { epoch });
        }
        if valid_loss < best_valid {
            best_valid = valid_loss;
            best = params.clone();
        }
        curve.push(EpochStats { epoch, train_loss, valid_loss });
    }
    Ok((best, curve))
}

pub fn loss_curve_csv(curve: &[EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,valid_loss\n");
    for s in curve {
        out.push_str(&format!("{},{},{}\n", s.epoch, fmt_f64(s.train_loss), fmt_f64(s.valid_loss)));
    }
    out
}

pub const WEIGHTS_VERSION: u32 = 1;

/// Versioned text document holding the variant, dimensions and the flat
/// parameter vector in shortest exact decimal form.
pub fn save_weights(params: &PredictorParams, variant: Variant) -> String {
    let d = params.dims;
    let mut out = format!(
        "predictor_weights {WEIGHTS_VERSION}\nvariant {}\ndims {} {} {} {} {} {} {} {} {}\n",
        variant.as_str(),
        d.phys_in,
        d.cog_in,
        d.cog_nodes,
        d.gcn_hidden,
        d.gcn_out,
        d.lstm_hidden,
        d.attn_dim,
        d.t_p,
        d.t_f
    );
    let flat = params.flatten();
    out.push_str(&format!("params {}\n", flat.len()));
    for v in flat {
        out.push_str(&fmt_f64(v));
        out.push('\n');
    }
    out.push_str("end\n");
    out
}

pub fn load_weights(text: &str) -> Result<(PredictorParams, Variant), NeuralError> {
    let mut lines = text.lines().enumerate();
    let perr = |line: usize, msg: String| NeuralError::Parse { line: line + 1, msg };
    let (ln, header) = lines.next().ok_or_else(|| perr(0, "empty document".into()))?;
    let version: u32 = header
        .strip_prefix("predictor_weights ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| perr(ln, "expected 'predictor_weights <version>'".into()))?;
    if version != WEIGHTS_VERSION {
        return Err(perr(ln, format!("unsupported schema version {version}")));
    }
    let (ln, vline) = lines.next().ok_or_else(|| perr(1, "missing variant".into()))?;
    let variant = vline
        .strip_prefix("variant ")
        .and_then(Variant::parse_str)
        .ok_or_else(|| perr(ln, "expected 'variant p|cp|cpsor'".into()))?;
    let (ln, dline) = lines.next().ok_or_else(|| perr(2, "missing dims".into()))?;
    let nums: Vec<usize> = dline
        .strip_prefix("dims ")
        .map(|rest| rest.split_whitespace().filter_map(|v| v.parse().ok()).collect())
        .unwrap_or_default();
    if nums.len() != 9 {
        return Err(perr(ln, "expected 'dims' with 9 integers".into()));
    }
    let dims = NetDims {
        phys_in: nums[0],
        cog_in: nums[1],
        cog_nodes: nums[2],
        gcn_hidden: nums[3],
        gcn_out: nums[4],
        lstm_hidden: nums[5],
        attn_dim: nums[6],
        t_p: nums[7],
        t_f: nums[8],
    };
    let (ln, pline) = lines.next().ok_or_else(|| perr(3, "missing params count".into()))?;
    let count: usize = pline
        .strip_prefix("params ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| perr(ln, "expected 'params <count>'".into()))?;
    if count != dims.param_count() {
        return Err(perr(ln, format!(
            "params count {count} does not match dims ({})",
            dims.param_count()
        )));
    }
    let mut flat = Vec::with_capacity(count);
    for _ in 0..count {
        let (ln, line) =
            lines.next().ok_or_else(|| perr(0, "document ends inside the parameter vector".into()))?;
        let v: f64 = line
            .trim()
            .parse()
            .map_err(|_| perr(ln, format!("invalid parameter value '{line}'")))?;
        if !v.is_finite() {
            return Err(perr(ln, "non-finite parameter".into()));
        }
        flat.push(v);
    }
    match lines.next() {
        Some((_, "end")) => {}
        other => {
            return Err(perr(other.map_or(0, |(l, _)| l), "expected 'end'".into()));
        }
    }
    Ok((PredictorParams::from_flat(dims, &flat)?, variant))
}

#[cfg(test)]
mod tests {
    use super::super::model::tests::random_sample;
    use super::super::tests::tiny_dims;
    use super::*;

    #[test]
    fn zero_epochs_returns_initial_params() {
        let dims = tiny_dims();
        let params = PredictorParams::init(dims, 1);
        let data = vec![random_sample(&dims, 2, true, 2)];
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        let (out, curve) = fit(&data, &data, &params, &cfg).unwrap();
        assert_eq!(out, params);
        assert!(curve.is_empty());
    }

    #[test]
    fn memorizes_a_single_repeated_sample() {
        let dims = tiny_dims();
        let params = PredictorParams::init(dims, 3);
        let sample = random_sample(&dims, 2, true, 5);
        let train = vec![sample.clone(); 4];
        let cfg = TrainConfig {
            epochs: 500,
            batch_size: 4,
            learning_rate: 2e-2,
            momentum: 0.9,
            seed: 1,
        };
        let (best, curve) = fit(&train, &train, &params, &cfg).unwrap();
        let final_loss = loss_only(&[sample], &best).unwrap();
        assert!(
            final_loss < 1e-3,
            "single-sample memorization stalled at {final_loss} (last epochs: {:?})",
            &curve[curve.len().saturating_sub(3)..]
        );
    }

    #[test]
    fn identical_seeds_identical_curves() {
        let dims = tiny_dims();
        let params = PredictorParams::init(dims, 4);
        let train: Vec<EncodedSample> =
            (0..6).map(|i| random_sample(&dims, 2, true, 100 + i)).collect();
        let valid: Vec<EncodedSample> =
            (0..2).map(|i| random_sample(&dims, 2, true, 200 + i)).collect();
        let cfg = TrainConfig { epochs: 5, batch_size: 2, ..TrainConfig::default() };
        let (a_params, a_curve) = fit(&train, &valid, &params, &cfg).unwrap();
        let (b_params, b_curve) = fit(&train, &valid, &params, &cfg).unwrap();
        assert_eq!(a_curve, b_curve);
        assert_eq!(a_params, b_params);
    }

    #[test]
    fn weights_round_trip_bitwise() {
        let dims = tiny_dims();
        let params = PredictorParams::init(dims, 9);
        let text = save_weights(&params, Variant::Cpsor);
        let (back, variant) = load_weights(&text).unwrap();
        assert_eq!(variant, Variant::Cpsor);
        assert_eq!(back, params);
        assert_eq!(save_weights(&back, variant), text);
    }

    #[test]
    fn weights_parse_errors() {
        let dims = tiny_dims();
        let params = PredictorParams::init(dims, 9);
        let text = save_weights(&params, Variant::P);
        let tampered = text.replace("predictor_weights 1", "predictor_weights 2");
        assert!(load_weights(&tampered).is_err());
        let truncated: String =
            text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(load_weights(&truncated).is_err());
    }

    #[test]
    fn curve_csv_shape() {
        let curve = vec![
            EpochStats { epoch: 0, train_loss: 1.5, valid_loss: 2.0 },
            EpochStats { epoch: 1, train_loss: 1.0, valid_loss: 1.25 },
        ];
        let csv = loss_curve_csv(&curve);
        assert_eq!(csv, "epoch,train_loss,valid_loss\n0,1.5,2\n1,1,1.25\n");
    }
}
