//! P / CP / CPSOR ablation: identical seeds, splits and initial weights
//! across the three variants; only the cognitive branch's input differs.

use super::{report_csv, EvalError, MetricReport, Trajectory};
use crate::cognition::{ordinary_structure, NodeSpace};
use crate::dataset::{discretize_dataset, CognitiveDataset, DiscretizeConfig};
use crate::dbn::{hill_climb, mle_fit, DbnModel, PenaltyMode, Prior, SearchConfig};
use crate::graph::{build_physical_graph, CognitiveWeighter, Normalizer};
use crate::neural::{
    fit, forward, EncodedSample, NetDims, PredictorParams, StepInput, TrainConfig, Variant,
};
use crate::rng::Rng;
use crate::traj::{window_samples, Episode, WindowSpec};

#[derive(Debug, Clone)]
pub struct AblationConfig {
    pub horizons_s: Vec<f64>,
    pub history_s: f64,
    pub stride: usize,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub gcn_hidden: usize,
    pub gcn_out: usize,
    pub lstm_hidden: usize,
    pub attn_dim: usize,
    pub d_close: f64,
    /// Smoothing for the weight-model CPTs.
    pub dbn_alpha: f64,
    pub search_restarts: usize,
    pub train_frac: f64,
    pub valid_frac: f64,
    pub discretize: DiscretizeConfig,
}

impl Default for AblationConfig {
    fn default() -> Self {
        // The weight models run on the 8-node space: the coupled behavior
        // node is a deterministic function of three other nodes, so it adds
        // nothing to the cognitive graph while making structure search
        // multimodal (every orientation of the coupling scores alike).
        let discretize = DiscretizeConfig {
            space: crate::cognition::NodeSpace { behavior_node: false, ..Default::default() },
            ..DiscretizeConfig::default()
        };
        AblationConfig {
            horizons_s: vec![1.0, 2.0, 3.0],
            history_s: 3.0,
            stride: 35,
            seeds: vec![0, 1, 2, 3, 4],
            epochs: 55,
            batch_size: 16,
            learning_rate: 2.5e-3,
            momentum: 0.9,
            gcn_hidden: 12,
            gcn_out: 12,
            lstm_hidden: 24,
            attn_dim: 12,
            d_close: 50.0,
            dbn_alpha: 1.0,
            search_restarts: 8,
            train_frac: 0.70,
            valid_frac: 0.15,
            discretize,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub seed: u64,
    pub variant: Variant,
    pub report: MetricReport,
}

#[derive(Debug, Clone)]
pub struct AblationOutcome {
    pub rows: Vec<AblationRow>,
}

impl AblationOutcome {
    pub fn csv(&self) -> String {
        let mut out = String::from("seed,");
        let body = report_csv(&self.rows.iter().map(|r| r.report.clone()).collect::<Vec<_>>());
        let mut lines = body.lines();
        out.push_str(lines.next().unwrap_or(""));
        out.push('\n');
        for (row, line) in self.rows.iter().zip(lines) {
            out.push_str(&format!("{},{line}\n", row.seed));
        }
        out
    }

    /// Mean over seeds of the pooled ADE (mean per-step RMSE).
    pub fn mean_ade(&self, variant: Variant, horizon_s: f64, scenario: Option<u8>) -> Option<f64> {
        let vals: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| {
                r.variant == variant
                    && r.report.horizon_s == horizon_s
                    && r.report.scenario_id == scenario
            })
            .map(|r| r.report.ade)
            .collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }

    /// Relative-improvement lines per horizon, in "decreased by X%" form.
    pub fn improvement_summary(&self) -> String {
        let mut horizons: Vec<u64> =
            self.rows.iter().map(|r| r.report.horizon_s.to_bits()).collect();
        horizons.sort_unstable();
        horizons.dedup();
        let mut out = String::new();
        for bits in horizons {
            let h = f64::from_bits(bits);
            let (p, cp, cpsor) = (
                self.mean_ade(Variant::P, h, None),
                self.mean_ade(Variant::Cp, h, None),
                self.mean_ade(Variant::Cpsor, h, None),
            );
            if let (Some(p), Some(cp), Some(cpsor)) = (p, cp, cpsor) {
                out.push_str(&format!(
                    "horizon {h} s: cp vs p mean RMSE decreased by {:.2}%\n",
                    100.0 * (p - cp) / p
                ));
                out.push_str(&format!(
                    "horizon {h} s: cpsor vs cp mean RMSE decreased by {:.2}%\n",
                    100.0 * (cp - cpsor) / cp
                ));
                out.push_str(&format!(
                    "horizon {h} s: cpsor vs p mean RMSE decreased by {:.2}%\n",
                    100.0 * (p - cpsor) / p
                ));
            }
        }
        out
    }
}

/// Encodes the windowed samples of the selected episodes for one variant.
/// The cognitive branch is present when a weighter is given, which then
/// requires discretized frames.
pub fn encode_dataset_samples(
    episodes: &[Episode],
    frames: Option<&CognitiveDataset>,
    indices: &[usize],
    window: &WindowSpec,
    normalizer: &Normalizer,
    weighter: Option<&CognitiveWeighter>,
    d_close: f64,
) -> Result<Vec<EncodedSample>, EvalError> {
    if weighter.is_some() && frames.is_none() {
        return Err(EvalError::Config(
            "cognitive variants need a discretized dataset".into(),
        ));
    }
    let mut out = Vec::new();
    for &idx in indices {
        let episode = &episodes[idx];
        let samples = window_samples(episode, frames.map(|f| f.frames[idx].as_slice()), window)?;
        for sample in samples {
            let mut steps = Vec::with_capacity(sample.history.len());
            for hist in &sample.history {
                let refs: Vec<&crate::traj::VehicleState> = hist.vehicles.iter().collect();
                let phys = build_physical_graph(&refs, normalizer, d_close)?;
                let cog = match weighter {
                    Some(w) => {
                        let frame = hist
                            .ego_frame
                            .as_ref()
                            .ok_or_else(|| EvalError::Config("sample lacks cognitive frames".into()))?;
                        Some(w.build(frame)?)
                    }
                    None => None,
                };
                steps.push(StepInput::from_snapshots(&phys, &sample.ego_id, cog.as_ref())?);
            }
            let ego_history = sample
                .history
                .iter()
                .map(|h| {
                    let s = &h.vehicles[sample.ego_index];
                    (s.x, s.y)
                })
                .collect();
            out.push(EncodedSample {
                steps,
                ego_history,
                last_pos: sample.last_observed_pos(),
                target: sample.future.clone(),
                scenario_id: sample.scenario_id,
            });
        }
    }
    Ok(out)
}

/// Resolves the weighter a variant needs, erroring when the required DBN is
/// absent.
pub fn variant_weighter<'a>(
    variant: Variant,
    ordinary: Option<&'a CognitiveWeighter<'a>>,
    sor: Option<&'a CognitiveWeighter<'a>>,
) -> Result<Option<&'a CognitiveWeighter<'a>>, EvalError> {
    match variant {
        Variant::P => Ok(None),
        Variant::Cp => ordinary
            .map(Some)
            .ok_or_else(|| EvalError::Config("variant cp needs a fitted ordinary DBN".into())),
        Variant::Cpsor => sor
            .map(Some)
            .ok_or_else(|| EvalError::Config("variant cpsor needs a fitted SOR DBN".into())),
    }
}

/// Episode-level split, stratified by scenario so that every scenario is
/// represented in every bucket, over a canonical (stem-sorted) order so the
/// result is invariant to dataset file ordering.
fn split_indices(
    episodes: &[Episode],
    cfg: &AblationConfig,
    seed: u64,
) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut scenarios: Vec<u8> = episodes.iter().map(|e| e.scenario_id).collect();
    scenarios.sort_unstable();
    scenarios.dedup();
    let mut rng = Rng::stream(seed, 0xA11);
    let (mut train, mut valid, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for sc in scenarios {
        let mut idx: Vec<usize> =
            (0..episodes.len()).filter(|&i| episodes[i].scenario_id == sc).collect();
        idx.sort_by_key(|&i| crate::dataset::episode_stem(&episodes[i]));
        rng.shuffle(&mut idx);
        let n = idx.len();
        let n_train = ((n as f64 * cfg.train_frac).round() as usize).clamp(1, n.saturating_sub(2).max(1));
        let rest = n - n_train;
        let n_valid = ((n as f64 * cfg.valid_frac).round() as usize).clamp(1, rest.saturating_sub(1).max(1));
        train.extend(&idx[..n_train]);
        valid.extend(&idx[n_train..n_train + n_valid]);
        test.extend(&idx[n_train + n_valid..]);
    }
    (train, valid, test)
}

/// Fits the per-seed DBNs: SOR-constrained search plus the hand-wired
/// exogenous-emotion baseline, both refit with the weight-model smoothing.
pub fn fit_seed_dbns(
    cog: &CognitiveDataset,
    train_idx: &[usize],
    cfg: &AblationConfig,
    seed: u64,
) -> Result<(DbnModel, DbnModel), EvalError> {
    let space = cog.space;
    let train_seqs = cog.sequences_for(train_idx);
    let mut search = SearchConfig::new(Prior::Sor, seed);
    search.restarts = cfg.search_restarts;
    search.penalty = PenaltyMode::Params;
    // Two parents keep the acceleration-node CPT rows well populated; the
    // weight model feeds graph convolutions, and thin rows make noisy
    // edge weights.
    search.max_parents = 2;
    let searched = hill_climb(&space.node_defs(), &train_seqs, &search)?;
    let sor = mle_fit(&searched.structure, &train_seqs, cfg.dbn_alpha)?;
    let ordinary = mle_fit(&ordinary_structure(&space), &train_seqs, cfg.dbn_alpha)?;
    Ok((sor, ordinary))
}

/// Trains and evaluates all three variants over the config's seed list and
/// horizons. Reports cover each scenario plus the pooled test set.
pub fn run_ablation(episodes: &[Episode], cfg: &AblationConfig) -> Result<AblationOutcome, EvalError> {
    if episodes.len() < 5 {
        return Err(EvalError::Config("ablation needs at least five episodes".into()));
    }
    {
        let mut scenarios: Vec<u8> = episodes.iter().map(|e| e.scenario_id).collect();
        scenarios.sort_unstable();
        scenarios.dedup();
        for sc in scenarios {
            let count = episodes.iter().filter(|e| e.scenario_id == sc).count();
            if count < 3 {
                return Err(EvalError::Config(format!(
                    "scenario {sc} has only {count} episodes; the stratified split needs at least 3"
                )));
            }
        }
    }
    let cog = discretize_dataset(episodes, &cfg.discretize)?;
    run_ablation_with_frames(episodes, &cog, cfg)
}

/// [`run_ablation`] over externally supplied frames (used e.g. to probe a
/// null dataset whose cognition has been decoupled from the kinematics).
pub fn run_ablation_with_frames(
    episodes: &[Episode],
    cog: &CognitiveDataset,
    cfg: &AblationConfig,
) -> Result<AblationOutcome, EvalError> {
    if cog.frames.len() != episodes.len() {
        return Err(EvalError::Config("frames do not align with the episodes".into()));
    }
    let space: NodeSpace = cog.space;
    let mut rows = Vec::new();

    for &seed in &cfg.seeds {
        let (train_idx, valid_idx, test_idx) = split_indices(episodes, cfg, seed);
        let (sor_model, ord_model) = fit_seed_dbns(cog, &train_idx, cfg, seed)?;
        let sor_w = CognitiveWeighter::new(&sor_model, &space)?;
        let ord_w = CognitiveWeighter::new(&ord_model, &space)?;
        let normalizer = Normalizer::fit(
            train_idx
                .iter()
                .flat_map(|&i| episodes[i].tracks.iter())
                .flat_map(|t| t.states.iter()),
        );

        for &horizon in &cfg.horizons_s {
            let window = WindowSpec { history_s: cfg.history_s, future_s: horizon, stride: cfg.stride };
            let dims = NetDims {
                phys_in: 4,
                cog_in: sor_w.feature_dim(),
                cog_nodes: space.n_nodes(),
                gcn_hidden: cfg.gcn_hidden,
                gcn_out: cfg.gcn_out,
                lstm_hidden: cfg.lstm_hidden,
                attn_dim: cfg.attn_dim,
                t_p: window.history_steps(),
                t_f: window.future_steps(),
            };
            let params0 = PredictorParams::init(dims, seed);

            for variant in [Variant::P, Variant::Cp, Variant::Cpsor] {
                let weighter = variant_weighter(variant, Some(&ord_w), Some(&sor_w))?;
                let encode = |indices: &[usize]| {
                    encode_dataset_samples(
                        episodes, Some(cog), indices, &window, &normalizer, weighter, cfg.d_close,
                    )
                };
                let enc_train = encode(&train_idx)?;
                let enc_valid = encode(&valid_idx)?;
                let enc_test = encode(&test_idx)?;
                if enc_train.is_empty() || enc_valid.is_empty() || enc_test.is_empty() {
                    return Err(EvalError::Config(format!(
                        "empty split at horizon {horizon}s (episodes too short for the window?)"
                    )));
                }
                let train_cfg = TrainConfig {
                    epochs: cfg.epochs,
                    batch_size: cfg.batch_size,
                    learning_rate: cfg.learning_rate,
                    momentum: cfg.momentum,
                    seed,
                };
                let (best, _) = fit(&enc_train, &enc_valid, &params0, &train_cfg)?;

                let mut preds: Vec<Trajectory> = Vec::with_capacity(enc_test.len());
                let mut truths: Vec<Trajectory> = Vec::with_capacity(enc_test.len());
                let mut scenarios: Vec<u8> = Vec::with_capacity(enc_test.len());
                for sample in &enc_test {
                    let (p, _) = forward(sample, &best)?;
                    preds.push(p);
                    truths.push(sample.target.clone());
                    scenarios.push(sample.scenario_id);
                }

                let mut present: Vec<u8> = scenarios.clone();
                present.sort_unstable();
                present.dedup();
                for &sc in &present {
                    let sel: Vec<usize> =
                        (0..preds.len()).filter(|&i| scenarios[i] == sc).collect();
                    let p: Vec<Trajectory> = sel.iter().map(|&i| preds[i].clone()).collect();
                    let t: Vec<Trajectory> = sel.iter().map(|&i| truths[i].clone()).collect();
                    rows.push(AblationRow {
                        seed,
                        variant,
                        report: MetricReport::compute(variant.as_str(), Some(sc), horizon, &p, &t)?,
                    });
                }
                rows.push(AblationRow {
                    seed,
                    variant,
                    report: MetricReport::compute(variant.as_str(), None, horizon, &preds, &truths)?,
                });
            }
        }
    }
    Ok(AblationOutcome { rows })
}
