//! Desk-scale laboratory for emotion-aware vehicle trajectory prediction.
//!
//! The crate covers the full pipeline:
//!
//! * [`traj`] — canonical episode data model, the CSV + JSON dataset
//!   format, validation, and sliding-window sample extraction.
//! * [`sim`] — deterministic synthetic generator for four pre-crash
//!   scenarios (lead braking, cut-in, cyclist dart-out, unprotected left
//!   turn) with an emotion-modulated driver and PAD annotation.
//! * [`discretize`] — cognitive-node state calculus: TTC risk grading,
//!   acceleration binning, maneuver thresholds, autocorrelation windowing
//!   and k-means clustering of emotion and control signals.
//! * [`dbn`] — discrete dynamic Bayesian network engine: smoothed
//!   maximum-likelihood estimation, BIC scoring, hill-climbing structure
//!   search with an optional stimulus-organism-response layer prior, exact
//!   within-slice inference, ancestral sampling, and a text document
//!   format.
//! * [`cognition`] — the fixed cognitive node space bridging the
//!   discretizer and the DBN engine, the bundled exogenous-emotion
//!   baseline structure, and a synthetic ground-truth model.
//! * [`graph`] — per-step physical and cognitive graph snapshots (node
//!   features plus weighted adjacency) feeding the neural core.
//! * [`neural`] — a small differentiable GCN + LSTM + attention stack
//!   with handwritten analytic gradients and a deterministic trainer.
//! * [`eval`] — RMSE/MAE/ADE/FDE metrics, the P / CP / CPSOR ablation
//!   harness, and the SOR-vs-ordinary DBN comparison report.
//! * [`dataset`] — dataset-level orchestration shared by the CLI and the
//!   harnesses.

pub mod cognition;
pub mod dataset;
pub mod dbn;
pub mod discretize;
pub mod eval;
pub mod graph;
pub mod mat;
pub mod neural;
pub mod rng;
pub mod sim;
pub mod traj;
