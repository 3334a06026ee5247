//! Pipeline driver: generate synthetic pre-crash datasets, discretize them
//! into cognitive frames, learn DBNs, train and evaluate the predictor
//! variants, run the ablation, compare DBN structures, and render plots.
//!
//! Every command is reproducible: identical arguments and input files give
//! byte-identical outputs. Exit codes: 0 success, 1 usage error, 2 missing
//! prerequisite artifact.

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cpsor_core::cognition::{ordinary_structure, NodeSpace};
use cpsor_core::dataset::{
    discretize_dataset, episode_stem, frames_csv, generate_dataset, write_dataset,
    CognitiveDataset, DatasetSpec, DiscretizeConfig,
};
use cpsor_core::dbn;
use cpsor_core::dbn::{PenaltyMode, Prior, SearchConfig};
use cpsor_core::discretize::EmoCluster;
use cpsor_core::eval::{
    compare_dbn, curve_csv, encode_dataset_samples, report_csv, report_markdown, run_ablation,
    variant_weighter, AblationConfig, MetricReport, Trajectory,
};
use cpsor_core::graph::{CognitiveWeighter, Normalizer};
use cpsor_core::neural::{
    fit, forward, load_weights, loss_curve_csv, save_weights, NetDims, PredictorParams,
    TrainConfig, Variant,
};
use cpsor_core::traj::{load_dataset, Episode, WindowSpec};

mod config;
mod plot;

use config::FileConfig;

enum CliError {
    Usage(String),
    MissingArtifact(String),
    Run(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::MissingArtifact(_) => 2,
            CliError::Run(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::MissingArtifact(m) | CliError::Run(m) => m,
        }
    }
}

fn run_err(e: impl std::fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

#[derive(Parser)]
#[command(
    name = "cpsor",
    version,
    about = "Emotion-aware trajectory prediction pipeline",
    disable_help_subcommand = true
)]
struct Cli {
    /// Optional JSON config file; explicit flags win over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset over the scenario × emotion grid.
    Generate(GenerateArgs),
    /// Export per-episode cognitive frame CSVs.
    Discretize(DiscretizeArgs),
    /// Learn a DBN structure from a discretized dataset.
    LearnDbn(LearnDbnArgs),
    /// Train one predictor variant.
    Train(TrainArgs),
    /// Evaluate trained weights on a dataset.
    Eval(EvalArgs),
    /// Run the P / CP / CPSOR ablation.
    Ablate(AblateArgs),
    /// Compare a SOR DBN against the ordinary baseline.
    CompareDbn(CompareDbnArgs),
    /// Render metric bars or trajectory overlays.
    Plot(plot::PlotArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    /// Episodes per (scenario, emotion) cell [default: 20].
    #[arg(long)]
    episodes: Option<usize>,
    /// Comma-separated scenario ids [default: 1,2,3,4].
    #[arg(long, value_delimiter = ',')]
    scenarios: Option<Vec<u8>>,
    /// Comma-separated emotion profiles [default: anger,neutral,fright].
    #[arg(long, value_delimiter = ',')]
    emotions: Option<Vec<String>>,
    /// Base RNG seed; episode k uses seed + k [default: 1].
    #[arg(long)]
    seed: Option<u64>,
    /// Episode length in seconds [default: 12].
    #[arg(long)]
    duration: Option<f64>,
    /// Scripted trigger time in seconds [default: 4].
    #[arg(long)]
    trigger: Option<f64>,
}

#[derive(Args)]
struct DiscretizeArgs {
    /// Input dataset directory.
    #[arg(long)]
    data: PathBuf,
    /// Output directory for frame CSVs.
    #[arg(long)]
    out: PathBuf,
    /// Clustering seed [default: 7].
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct LearnDbnArgs {
    /// Input dataset directory.
    #[arg(long)]
    data: PathBuf,
    /// Output DBN document path.
    #[arg(long)]
    out: PathBuf,
    /// Structure prior: sor | none [default: sor].
    #[arg(long)]
    prior: Option<String>,
    /// BIC penalty driving the search: params | nodes [default: params].
    #[arg(long)]
    penalty: Option<String>,
    /// Search seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Hill-climbing restarts [default: 8].
    #[arg(long)]
    restarts: Option<usize>,
    /// CPT smoothing count for the emitted model [default: 1].
    #[arg(long)]
    alpha: Option<f64>,
    /// BIC log path; defaults to the DBN path plus `.bic.txt`.
    #[arg(long)]
    bic_log: Option<PathBuf>,
    /// Skip the search and fit the bundled exogenous-emotion baseline.
    #[arg(long, default_value_t = false)]
    baseline: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Input dataset directory.
    #[arg(long)]
    data: PathBuf,
    /// Variant: p | cp | cpsor.
    #[arg(long)]
    variant: String,
    /// DBN document supplying cognitive edge weights (cp, cpsor).
    #[arg(long)]
    dbn: Option<PathBuf>,
    /// Output weights path.
    #[arg(long)]
    out: PathBuf,
    /// Loss-curve CSV path; defaults to the weights path plus `.curve.csv`.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Prediction horizon in seconds [default: 1].
    #[arg(long)]
    horizon: Option<f64>,
    /// History window in seconds [default: 3].
    #[arg(long)]
    history: Option<f64>,
    /// Window stride in steps [default: 50].
    #[arg(long)]
    stride: Option<usize>,
    /// Training epochs [default: 18].
    #[arg(long)]
    epochs: Option<usize>,
    /// Seed for split, init and shuffling [default: 0].
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    /// Input dataset directory.
    #[arg(long)]
    data: PathBuf,
    /// Trained weights document.
    #[arg(long)]
    weights: PathBuf,
    /// DBN document for cognitive variants.
    #[arg(long)]
    dbn: Option<PathBuf>,
    /// Metrics CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Optional markdown summary path.
    #[arg(long)]
    markdown: Option<PathBuf>,
    /// Optional prediction dump (for `plot trajectory`).
    #[arg(long)]
    dump_predictions: Option<PathBuf>,
    /// Sample index for the prediction dump [default: 0].
    #[arg(long, default_value_t = 0)]
    sample_index: usize,
    /// Window stride in steps [default: 50].
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Args)]
struct AblateArgs {
    /// Input dataset directory.
    #[arg(long)]
    data: PathBuf,
    /// Output directory for the ablation table and summary.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated horizons in seconds [default: 1,2,3].
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<f64>>,
    /// Comma-separated training seeds [default: 0,1,2,3,4].
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Training epochs per run [default: 18].
    #[arg(long)]
    epochs: Option<usize>,
    /// Window stride in steps [default: 50].
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Args)]
struct CompareDbnArgs {
    /// Input dataset directory.
    #[arg(long)]
    data: PathBuf,
    /// SOR DBN document.
    #[arg(long)]
    sor: PathBuf,
    /// Ordinary DBN document.
    #[arg(long)]
    ordinary: PathBuf,
    /// Report CSV output path.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful outcomes; everything else is
            // a usage error (exit code 1).
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let file_config = match cli.config.as_deref().map(FileConfig::load).transpose() {
        Ok(cfg) => cfg.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args, &file_config),
        Command::Discretize(args) => cmd_discretize(args, &file_config),
        Command::LearnDbn(args) => cmd_learn_dbn(args, &file_config),
        Command::Train(args) => cmd_train(args, &file_config),
        Command::Eval(args) => cmd_eval(args),
        Command::Ablate(args) => cmd_ablate(args, &file_config),
        Command::CompareDbn(args) => cmd_compare_dbn(args),
        Command::Plot(args) => plot::cmd_plot(args).map_err(CliError::Run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn parse_emotion(s: &str) -> Result<EmoCluster, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "anger" => Ok(EmoCluster::Anger),
        "neutral" => Ok(EmoCluster::Neutral),
        "fright" => Ok(EmoCluster::Fright),
        other => Err(CliError::Usage(format!("unknown emotion '{other}'"))),
    }
}

fn load_episodes(dir: &Path) -> Result<Vec<Episode>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::MissingArtifact(format!(
            "dataset directory '{}' does not exist",
            dir.display()
        )));
    }
    let episodes = load_dataset(dir).map_err(run_err)?;
    if episodes.is_empty() {
        return Err(CliError::MissingArtifact(format!(
            "dataset directory '{}' contains no episodes",
            dir.display()
        )));
    }
    Ok(episodes)
}

fn write_text(path: &Path, body: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Run(format!("{}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, body).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))
}

fn load_dbn_document(path: &Path) -> Result<dbn::DbnModel, CliError> {
    if !path.is_file() {
        return Err(CliError::MissingArtifact(format!(
            "DBN document '{}' does not exist",
            path.display()
        )));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Run(format!("{}: {e}", path.display())))?;
    dbn::deserialize(&text).map_err(run_err)
}

fn cmd_generate(args: GenerateArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let g = &cfg.generate;
    let emotions = match args.emotions.or_else(|| g.emotions.clone()) {
        Some(names) => names
            .iter()
            .map(|n| parse_emotion(n))
            .collect::<Result<Vec<_>, _>>()?,
        None => vec![EmoCluster::Anger, EmoCluster::Neutral, EmoCluster::Fright],
    };
    let scenarios = args.scenarios.or_else(|| g.scenarios.clone()).unwrap_or(vec![1, 2, 3, 4]);
    if scenarios.iter().any(|s| !(1..=4).contains(s)) {
        return Err(CliError::Usage(format!("invalid scenario in {scenarios:?}")));
    }
    let spec = DatasetSpec {
        episodes_per_cell: args.episodes.or(g.episodes).unwrap_or(20),
        scenarios,
        emotions,
        base_seed: args.seed.or(g.seed).unwrap_or(1),
        duration: args.duration.or(g.duration).unwrap_or(12.0),
        trigger_time: args.trigger.or(g.trigger).unwrap_or(4.0),
        ..DatasetSpec::default()
    };
    let episodes = generate_dataset(&spec).map_err(run_err)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Run(format!("{}: {e}", args.out.display())))?;
    let manifest = write_dataset(&args.out, &episodes).map_err(run_err)?;
    println!("wrote {} episodes to {}", manifest.episodes.len(), args.out.display());
    Ok(())
}

fn cmd_discretize(args: DiscretizeArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let episodes = load_episodes(&args.data)?;
    let dcfg = DiscretizeConfig {
        seed: args.seed.or(cfg.discretize.seed).unwrap_or(7),
        ..DiscretizeConfig::default()
    };
    let dataset = discretize_dataset(&episodes, &dcfg).map_err(run_err)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Run(format!("{}: {e}", args.out.display())))?;
    for (ep, frames) in episodes.iter().zip(&dataset.frames) {
        let path = args.out.join(format!("{}.frames.csv", episode_stem(ep)));
        write_text(&path, &frames_csv(frames))?;
    }
    println!("discretized {} episodes into {}", episodes.len(), args.out.display());
    Ok(())
}

fn cmd_learn_dbn(args: LearnDbnArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let l = &cfg.learn_dbn;
    let episodes = load_episodes(&args.data)?;
    let dcfg = DiscretizeConfig::default();
    let dataset = discretize_dataset(&episodes, &dcfg).map_err(run_err)?;
    let space = dataset.space;
    let all: Vec<usize> = (0..episodes.len()).collect();
    let seqs = dataset.sequences_for(&all);
    let alpha = args.alpha.or(l.alpha).unwrap_or(1.0);

    let prior = match args.prior.or_else(|| l.prior.clone()).as_deref().unwrap_or("sor") {
        "sor" => Prior::Sor,
        "none" => Prior::Unconstrained,
        other => return Err(CliError::Usage(format!("unknown prior '{other}'"))),
    };
    let penalty = match args.penalty.or_else(|| l.penalty.clone()).as_deref().unwrap_or("params") {
        "params" => PenaltyMode::Params,
        "nodes" => PenaltyMode::Nodes,
        other => return Err(CliError::Usage(format!("unknown penalty '{other}'"))),
    };

    let model = if args.baseline {
        dbn::mle_fit(&ordinary_structure(&space), &seqs, alpha).map_err(run_err)?
    } else {
        let mut search = SearchConfig::new(prior, args.seed.or(l.seed).unwrap_or(0));
        search.penalty = penalty;
        search.restarts = args.restarts.or(l.restarts).unwrap_or(8);
        let searched = dbn::hill_climb(&space.node_defs(), &seqs, &search).map_err(run_err)?;
        dbn::mle_fit(&searched.structure, &seqs, alpha).map_err(run_err)?
    };

    write_text(&args.out, &dbn::serialize(&model))?;

    let mut log = String::new();
    log.push_str(&format!("frames {}\n", dbn::total_frames(&seqs)));
    log.push_str(&format!("intra_edges {}\n", model.structure.n_intra_edges()));
    for (p, c) in model.structure.intra_edges() {
        log.push_str(&format!(
            "edge {} {}\n",
            model.structure.nodes[p].name, model.structure.nodes[c].name
        ));
    }
    let bic_params = dbn::bic_score(&model, &seqs, PenaltyMode::Params).map_err(run_err)?;
    let bic_nodes = dbn::bic_score(&model, &seqs, PenaltyMode::Nodes).map_err(run_err)?;
    log.push_str(&format!("bic_params {bic_params}\n"));
    log.push_str(&format!("bic_nodes {bic_nodes}\n"));
    let log_path = args
        .bic_log
        .unwrap_or_else(|| PathBuf::from(format!("{}.bic.txt", args.out.display())));
    write_text(&log_path, &log)?;
    println!(
        "learned {} edges, BIC(params) {bic_params:.1}, wrote {}",
        model.structure.n_intra_edges(),
        args.out.display()
    );
    Ok(())
}

fn resolve_variant(name: &str) -> Result<Variant, CliError> {
    Variant::parse_str(name)
        .ok_or_else(|| CliError::Usage(format!("unknown variant '{name}' (use p, cp or cpsor)")))
}

fn dims_for(
    space: &NodeSpace,
    gcn: (usize, usize),
    lstm: usize,
    attn: usize,
    window: &WindowSpec,
) -> NetDims {
    let defs = space.node_defs();
    NetDims {
        phys_in: 4,
        cog_in: defs.iter().map(|d| d.cardinality).max().unwrap_or(1),
        cog_nodes: defs.len(),
        gcn_hidden: gcn.0,
        gcn_out: gcn.1,
        lstm_hidden: lstm,
        attn_dim: attn,
        t_p: window.history_steps(),
        t_f: window.future_steps(),
    }
}

/// Loaded dataset plus (for cognitive variants) its discretization.
struct Pipeline {
    episodes: Vec<Episode>,
    dataset: Option<CognitiveDataset>,
    space: NodeSpace,
}

impl Pipeline {
    fn prepare(data: &Path, needs_cognition: bool, space: NodeSpace) -> Result<Self, CliError> {
        let episodes = load_episodes(data)?;
        let dataset = if needs_cognition {
            let dcfg = DiscretizeConfig { space, ..DiscretizeConfig::default() };
            Some(discretize_dataset(&episodes, &dcfg).map_err(run_err)?)
        } else {
            None
        };
        Ok(Pipeline { episodes, dataset, space })
    }
}

fn cmd_train(args: TrainArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let t = &cfg.train;
    let variant = resolve_variant(&args.variant)?;
    let model = match (&args.dbn, variant.uses_cognition()) {
        (Some(path), true) => Some(load_dbn_document(path)?),
        (None, true) => {
            return Err(CliError::MissingArtifact(format!(
                "variant {} needs --dbn pointing at a fitted DBN document",
                variant.as_str()
            )))
        }
        (_, false) => None,
    };
    let space = match &model {
        Some(m) => NodeSpace::infer(m).map_err(run_err)?,
        None => NodeSpace::default(),
    };
    let pipe = Pipeline::prepare(&args.data, variant.uses_cognition(), space)?;

    let window = WindowSpec {
        history_s: args.history.or(t.history).unwrap_or(3.0),
        future_s: args.horizon.or(t.horizon).unwrap_or(1.0),
        stride: args.stride.or(t.stride).unwrap_or(50),
    };
    let seed = args.seed.or(t.seed).unwrap_or(0);
    let weighter = match &model {
        Some(m) => Some(CognitiveWeighter::new(m, &pipe.space).map_err(run_err)?),
        None => None,
    };
    let weighter =
        variant_weighter(variant, weighter.as_ref(), weighter.as_ref()).map_err(run_err)?;

    // Episode-level 70/15 split in canonical stem order.
    let n = pipe.episodes.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| episode_stem(&pipe.episodes[i]));
    cpsor_core::rng::Rng::stream(seed, 0xA11).shuffle(&mut order);
    let n_train = ((n as f64 * 0.70).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    let (train_idx, rest) = order.split_at(n_train.min(n - 1).max(1));
    let n_valid = ((n as f64 * 0.15).round() as usize).clamp(1, rest.len());
    let valid_idx = &rest[..n_valid];

    let normalizer = Normalizer::fit(
        train_idx
            .iter()
            .flat_map(|&i| pipe.episodes[i].tracks.iter())
            .flat_map(|tr| tr.states.iter()),
    );
    let encode = |indices: &[usize]| {
        encode_dataset_samples(
            &pipe.episodes,
            pipe.dataset.as_ref(),
            indices,
            &window,
            &normalizer,
            weighter,
            t.d_close.unwrap_or(50.0),
        )
        .map_err(run_err)
    };
    let enc_train = encode(train_idx)?;
    let enc_valid = encode(valid_idx)?;
    if enc_train.is_empty() || enc_valid.is_empty() {
        return Err(CliError::Run("episodes are too short for the requested window".into()));
    }

    let dims = dims_for(
        &pipe.space,
        (t.gcn_hidden.unwrap_or(16), t.gcn_out.unwrap_or(16)),
        t.lstm_hidden.unwrap_or(32),
        t.attn_dim.unwrap_or(16),
        &window,
    );
    let params0 = PredictorParams::init(dims, seed);
    let train_cfg = TrainConfig {
        epochs: args.epochs.or(t.epochs).unwrap_or(18),
        batch_size: t.batch_size.unwrap_or(16),
        learning_rate: t.learning_rate.unwrap_or(4e-3),
        momentum: t.momentum.unwrap_or(0.9),
        seed,
    };
    let (best, curve) = fit(&enc_train, &enc_valid, &params0, &train_cfg).map_err(run_err)?;

    write_text(&args.out, &save_weights(&best, variant))?;
    let curve_path = args
        .curve
        .unwrap_or_else(|| PathBuf::from(format!("{}.curve.csv", args.out.display())));
    write_text(&curve_path, &loss_curve_csv(&curve))?;
    let last = curve.last().map(|s| s.valid_loss).unwrap_or(f64::NAN);
    println!(
        "trained variant {} for {} epochs (final valid loss {last:.4}), wrote {}",
        variant.as_str(),
        curve.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    if !args.weights.is_file() {
        return Err(CliError::MissingArtifact(format!(
            "weights document '{}' does not exist",
            args.weights.display()
        )));
    }
    let text = std::fs::read_to_string(&args.weights)
        .map_err(|e| CliError::Run(format!("{}: {e}", args.weights.display())))?;
    let (params, variant) = load_weights(&text).map_err(run_err)?;

    let model = match (&args.dbn, variant.uses_cognition()) {
        (Some(path), true) => Some(load_dbn_document(path)?),
        (None, true) => {
            return Err(CliError::MissingArtifact(format!(
                "weights are variant {}, which needs --dbn",
                variant.as_str()
            )))
        }
        (_, false) => None,
    };
    let space = match &model {
        Some(m) => NodeSpace::infer(m).map_err(run_err)?,
        None => NodeSpace::default(),
    };
    let pipe = Pipeline::prepare(&args.data, variant.uses_cognition(), space)?;
    let window = WindowSpec {
        history_s: params.dims.t_p as f64 * cpsor_core::traj::DT,
        future_s: params.dims.t_f as f64 * cpsor_core::traj::DT,
        stride: args.stride.unwrap_or(50),
    };
    let weighter = match &model {
        Some(m) => Some(CognitiveWeighter::new(m, &pipe.space).map_err(run_err)?),
        None => None,
    };
    let weighter =
        variant_weighter(variant, weighter.as_ref(), weighter.as_ref()).map_err(run_err)?;
    let all: Vec<usize> = (0..pipe.episodes.len()).collect();
    let normalizer = Normalizer::fit(
        pipe.episodes.iter().flat_map(|e| e.tracks.iter()).flat_map(|tr| tr.states.iter()),
    );
    let samples = encode_dataset_samples(
        &pipe.episodes,
        pipe.dataset.as_ref(),
        &all,
        &window,
        &normalizer,
        weighter,
        50.0,
    )
    .map_err(run_err)?;
    if samples.is_empty() {
        return Err(CliError::Run("no windows fit the dataset".into()));
    }

    let mut preds: Vec<Trajectory> = Vec::with_capacity(samples.len());
    let mut truths: Vec<Trajectory> = Vec::with_capacity(samples.len());
    let mut scenarios: Vec<u8> = Vec::with_capacity(samples.len());
    for s in &samples {
        let (p, _) = forward(s, &params).map_err(run_err)?;
        preds.push(p);
        truths.push(s.target.clone());
        scenarios.push(s.scenario_id);
    }
    let horizon = params.dims.t_f as f64 * cpsor_core::traj::DT;
    let mut reports = Vec::new();
    let mut present = scenarios.clone();
    present.sort_unstable();
    present.dedup();
    for sc in present {
        let sel: Vec<usize> = (0..preds.len()).filter(|&i| scenarios[i] == sc).collect();
        let p: Vec<Trajectory> = sel.iter().map(|&i| preds[i].clone()).collect();
        let q: Vec<Trajectory> = sel.iter().map(|&i| truths[i].clone()).collect();
        reports.push(
            MetricReport::compute(variant.as_str(), Some(sc), horizon, &p, &q).map_err(run_err)?,
        );
    }
    reports.push(
        MetricReport::compute(variant.as_str(), None, horizon, &preds, &truths)
            .map_err(run_err)?,
    );
    write_text(&args.out, &report_csv(&reports))?;
    if let Some(md) = &args.markdown {
        write_text(md, &report_markdown(&reports))?;
    }
    if let Some(dump) = &args.dump_predictions {
        if args.sample_index >= samples.len() {
            return Err(CliError::Usage(format!(
                "sample index {} out of range ({} samples)",
                args.sample_index,
                samples.len()
            )));
        }
        let body = plot::prediction_dump(
            &samples[args.sample_index],
            &preds[args.sample_index],
            variant,
        );
        write_text(dump, &body)?;
    }
    let pooled = reports.last().expect("pooled report exists");
    println!(
        "evaluated {} samples: ADE {:.3}, FDE {:.3}, wrote {}",
        pooled.n_samples,
        pooled.ade,
        pooled.fde,
        args.out.display()
    );
    Ok(())
}

fn cmd_ablate(args: AblateArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let a = &cfg.ablate;
    let episodes = load_episodes(&args.data)?;
    let mut ab = AblationConfig::default();
    if let Some(h) = args.horizons.or_else(|| a.horizons.clone()) {
        ab.horizons_s = h;
    }
    if let Some(s) = args.seeds.or_else(|| a.seeds.clone()) {
        ab.seeds = s;
    }
    if let Some(e) = args.epochs.or(a.epochs) {
        ab.epochs = e;
    }
    if let Some(s) = args.stride.or(a.stride) {
        ab.stride = s;
    }
    if let Some(g) = a.gcn_hidden {
        ab.gcn_hidden = g;
        ab.gcn_out = g;
    }
    if let Some(l) = a.lstm_hidden {
        ab.lstm_hidden = l;
    }
    if let Some(at) = a.attn_dim {
        ab.attn_dim = at;
    }
    let outcome = run_ablation(&episodes, &ab).map_err(run_err)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Run(format!("{}: {e}", args.out.display())))?;
    write_text(&args.out.join("ablation.csv"), &outcome.csv())?;
    let reports: Vec<MetricReport> = outcome.rows.iter().map(|r| r.report.clone()).collect();
    let mut summary = report_markdown(&reports);
    summary.push_str("## Relative improvements\n\n```\n");
    summary.push_str(&outcome.improvement_summary());
    summary.push_str("```\n");
    write_text(&args.out.join("summary.md"), &summary)?;
    print!("{}", outcome.improvement_summary());
    println!("wrote {}", args.out.join("ablation.csv").display());
    Ok(())
}

fn cmd_compare_dbn(args: CompareDbnArgs) -> Result<(), CliError> {
    let episodes = load_episodes(&args.data)?;
    let sor = load_dbn_document(&args.sor)?;
    let ordinary = load_dbn_document(&args.ordinary)?;
    let space = NodeSpace::infer(&sor).map_err(run_err)?;
    let dcfg = DiscretizeConfig { space, ..DiscretizeConfig::default() };
    let dataset = discretize_dataset(&episodes, &dcfg).map_err(run_err)?;
    let mut scenarios: Vec<u8> = episodes.iter().map(|e| e.scenario_id).collect();
    scenarios.sort_unstable();
    scenarios.dedup();
    let frames_by_scenario: Vec<(u8, Vec<Vec<Vec<usize>>>)> = scenarios
        .iter()
        .map(|&sc| {
            let indices: Vec<usize> = (0..episodes.len())
                .filter(|&i| episodes[i].scenario_id == sc)
                .collect();
            (sc, dataset.sequences_for(&indices))
        })
        .collect();
    let comparison = compare_dbn(&frames_by_scenario, &sor, &ordinary).map_err(run_err)?;
    write_text(&args.out, &curve_csv(&comparison))?;
    for row in &comparison.rows {
        println!(
            "scenario {}: BIC(params) sor {:.1} vs ordinary {:.1}",
            row.scenario_id, row.sor_bic_params, row.ordinary_bic_params
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}
