//! Prediction metrics, the ablation harness and the DBN comparison report.

use crate::traj::fmt_f64;
use thiserror::Error;

mod ablation;
mod compare;

pub use ablation::{
    encode_dataset_samples, fit_seed_dbns, run_ablation, run_ablation_with_frames,
    variant_weighter, AblationConfig, AblationOutcome, AblationRow,
};
pub use compare::{compare_dbn, curve_csv, curve_tv_distance, DbnComparison, ScenarioBicRow};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Traj(#[from] crate::traj::TrajError),
    #[error(transparent)]
    Discretize(#[from] crate::discretize::DiscretizeError),
    #[error(transparent)]
    Dbn(#[from] crate::dbn::DbnError),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Neural(#[from] crate::neural::NeuralError),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
}

pub type Trajectory = Vec<(f64, f64)>;

fn check_shapes(preds: &[Trajectory], truths: &[Trajectory]) -> Result<usize, EvalError> {
    if preds.len() != truths.len() {
        return Err(EvalError::Shape(format!(
            "{} predictions vs {} truths",
            preds.len(),
            truths.len()
        )));
    }
    if preds.is_empty() {
        return Err(EvalError::Shape("no samples".into()));
    }
    let t = preds[0].len();
    if t == 0 {
        return Err(EvalError::Shape("empty trajectories".into()));
    }
    for (p, q) in preds.iter().zip(truths) {
        if p.len() != t || q.len() != t {
            return Err(EvalError::Shape("ragged trajectory lengths".into()));
        }
    }
    Ok(t)
}

/// Per-step root mean squared error: RMSE_t = sqrt(mean_i ‖pred − truth‖²),
/// Euclidean norm over (x, y).
pub fn rmse_per_step(preds: &[Trajectory], truths: &[Trajectory]) -> Result<Vec<f64>, EvalError> {
    let t_len = check_shapes(preds, truths)?;
    let n = preds.len() as f64;
    let mut out = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let mut acc = 0.0;
        for (p, q) in preds.iter().zip(truths) {
            let (dx, dy) = (p[t].0 - q[t].0, p[t].1 - q[t].1);
            acc += dx * dx + dy * dy;
        }
        out.push((acc / n).sqrt());
    }
    Ok(out)
}

/// Mean absolute error: mean over all (sample, step) of the Euclidean
/// position error.
pub fn mae(preds: &[Trajectory], truths: &[Trajectory]) -> Result<f64, EvalError> {
    let t_len = check_shapes(preds, truths)?;
    let mut acc = 0.0;
    for (p, q) in preds.iter().zip(truths) {
        for t in 0..t_len {
            let (dx, dy) = (p[t].0 - q[t].0, p[t].1 - q[t].1);
            acc += (dx * dx + dy * dy).sqrt();
        }
    }
    Ok(acc / (preds.len() * t_len) as f64)
}

/// Average displacement error: the mean of the per-step RMSE values.
pub fn ade(rmse_per_step: &[f64]) -> Result<f64, EvalError> {
    if rmse_per_step.is_empty() {
        return Err(EvalError::Shape("empty RMSE vector".into()));
    }
    Ok(rmse_per_step.iter().sum::<f64>() / rmse_per_step.len() as f64)
}

/// Final displacement error: the last per-step RMSE value.
pub fn fde(rmse_per_step: &[f64]) -> Result<f64, EvalError> {
    rmse_per_step
        .last()
        .copied()
        .ok_or_else(|| EvalError::Shape("empty RMSE vector".into()))
}

/// Metrics for one (variant, scenario, horizon) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub variant: String,
    /// None for the all-scenarios pool.
    pub scenario_id: Option<u8>,
    pub horizon_s: f64,
    pub n_samples: usize,
    pub rmse_per_step: Vec<f64>,
    pub mae: f64,
    pub ade: f64,
    pub fde: f64,
}

impl MetricReport {
    pub fn compute(
        variant: &str,
        scenario_id: Option<u8>,
        horizon_s: f64,
        preds: &[Trajectory],
        truths: &[Trajectory],
    ) -> Result<Self, EvalError> {
        let rmse = rmse_per_step(preds, truths)?;
        let report = MetricReport {
            variant: variant.to_string(),
            scenario_id,
            horizon_s,
            n_samples: preds.len(),
            mae: mae(preds, truths)?,
            ade: ade(&rmse)?,
            fde: fde(&rmse)?,
            rmse_per_step: rmse,
        };
        debug_assert!((report.ade - report.rmse_per_step.iter().sum::<f64>()
            / report.rmse_per_step.len() as f64)
            .abs()
            < 1e-12);
        Ok(report)
    }

    fn scenario_label(&self) -> String {
        self.scenario_id.map_or_else(|| "all".to_string(), |s| s.to_string())
    }
}

/// CSV with one row per report: variant, scenario, horizon, n, MAE, ADE, FDE.
pub fn report_csv(reports: &[MetricReport]) -> String {
    let mut out = String::from("variant,scenario,horizon_s,n_samples,mae,ade,fde\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.variant,
            r.scenario_label(),
            fmt_f64(r.horizon_s),
            r.n_samples,
            fmt_f64(r.mae),
            fmt_f64(r.ade),
            fmt_f64(r.fde),
        ));
    }
    out
}

/// Markdown summary in the scenario × (ADE, FDE) layout, one table per
/// horizon, one row per variant.
pub fn report_markdown(reports: &[MetricReport]) -> String {
    let mut horizons: Vec<u64> = reports.iter().map(|r| r.horizon_s.to_bits()).collect();
    horizons.sort_unstable();
    horizons.dedup();
    let mut scenarios: Vec<u8> = reports.iter().filter_map(|r| r.scenario_id).collect();
    scenarios.sort_unstable();
    scenarios.dedup();
    let mut variants: Vec<&str> = reports.iter().map(|r| r.variant.as_str()).collect();
    variants.sort_unstable();
    variants.dedup();

    let mut out = String::new();
    for h_bits in horizons {
        let horizon = f64::from_bits(h_bits);
        out.push_str(&format!("## Horizon {horizon} s\n\n"));
        out.push_str("| model |");
        for s in &scenarios {
            out.push_str(&format!(" scenario {s} ADE | scenario {s} FDE |"));
        }
        out.push_str(" overall ADE | overall FDE |\n");
        out.push_str("|---|");
        out.push_str(&"---|".repeat(scenarios.len() * 2 + 2));
        out.push('\n');
        for v in &variants {
            out.push_str(&format!("| {v} |"));
            for s in &scenarios {
                let cell = reports.iter().find(|r| {
                    r.variant == *v && r.scenario_id == Some(*s) && r.horizon_s == horizon
                });
                match cell {
                    Some(r) => out.push_str(&format!(" {:.2} | {:.2} |", r.ade, r.fde)),
                    None => out.push_str(" - | - |"),
                }
            }
            let pooled = reports
                .iter()
                .find(|r| r.variant == *v && r.scenario_id.is_none() && r.horizon_s == horizon);
            match pooled {
                Some(r) => out.push_str(&format!(" {:.2} | {:.2} |\n", r.ade, r.fde)),
                None => out.push_str(" - | - |\n"),
            }
        }
        out.push('\n');
    }
    out
}
