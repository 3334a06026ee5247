//! Deterministic figure rendering: metric bar charts and trajectory
//! overlays, as SVG or as the plotted points in CSV form. Identical inputs
//! produce byte-identical files.

use clap::{Args, Subcommand};
use cpsor_core::neural::{EncodedSample, Variant};
use std::path::{Path, PathBuf};

#[derive(Args)]
pub struct PlotArgs {
    #[command(subcommand)]
    pub kind: PlotKind,
}

#[derive(Subcommand)]
pub enum PlotKind {
    /// Bar chart of the ADE column of a metrics CSV.
    Metrics {
        /// Metrics CSV produced by `eval` or `ablate`.
        #[arg(long)]
        input: PathBuf,
        /// Output format: svg | csv.
        #[arg(long)]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Overlay of history, ground truth and per-variant predictions.
    Trajectory {
        /// One or more prediction dumps from `eval --dump-predictions`.
        #[arg(long, required = true, num_args = 1..)]
        pred: Vec<PathBuf>,
        /// Output format: svg | csv.
        #[arg(long)]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn cmd_plot(args: PlotArgs) -> Result<(), String> {
    match args.kind {
        PlotKind::Metrics { input, format, out } => {
            let bars = read_metric_bars(&input)?;
            let body = match format.as_str() {
                "csv" => bars_csv(&bars),
                "svg" => bars_svg(&bars),
                other => return Err(format!("unknown format '{other}' (use svg or csv)")),
            };
            write(&out, &body)
        }
        PlotKind::Trajectory { pred, format, out } => {
            let series = read_prediction_series(&pred)?;
            let body = match format.as_str() {
                "csv" => series_csv(&series),
                "svg" => series_svg(&series),
                other => return Err(format!("unknown format '{other}' (use svg or csv)")),
            };
            write(&out, &body)
        }
    }
}

fn write(path: &Path, body: &str) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
        }
    }
    std::fs::write(path, body).map_err(|e| format!("{}: {e}", path.display()))
}

// ── Prediction dumps ────────────────────────────────────────────────

/// One-sample dump consumed by `plot trajectory`: the ego history, the
/// ground-truth future and this variant's prediction.
pub fn prediction_dump(sample: &EncodedSample, preds: &[(f64, f64)], variant: Variant) -> String {
    let mut out = String::from("series,step,x,y\n");
    for (step, (x, y)) in sample.ego_history.iter().enumerate() {
        out.push_str(&format!("history,{step},{x},{y}\n"));
    }
    for (step, (x, y)) in sample.target.iter().enumerate() {
        out.push_str(&format!("truth,{step},{x},{y}\n"));
    }
    for (step, (x, y)) in preds.iter().enumerate() {
        out.push_str(&format!("predicted:{},{step},{x},{y}\n", variant.as_str()));
    }
    out
}

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

/// Merges dump files: history and truth come from the first file, plus one
/// predicted polyline per file.
fn read_prediction_series(paths: &[PathBuf]) -> Result<Vec<Series>, String> {
    let mut series: Vec<Series> = Vec::new();
    for (file_idx, path) in paths.iter().enumerate() {
        let body =
            std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut per_name: Vec<Series> = Vec::new();
        for (ln, line) in body.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(format!("{} line {}: expected 4 columns", path.display(), ln + 1));
            }
            let x: f64 = fields[2]
                .parse()
                .map_err(|_| format!("{} line {}: bad x", path.display(), ln + 1))?;
            let y: f64 = fields[3]
                .parse()
                .map_err(|_| format!("{} line {}: bad y", path.display(), ln + 1))?;
            match per_name.iter_mut().find(|s| s.name == fields[0]) {
                Some(s) => s.points.push((x, y)),
                None => per_name
                    .push(Series { name: fields[0].to_string(), points: vec![(x, y)] }),
            }
        }
        for s in per_name {
            let keep = if file_idx == 0 {
                true
            } else {
                s.name.starts_with("predicted:")
            };
            if keep && !series.iter().any(|existing| existing.name == s.name) {
                series.push(s);
            }
        }
    }
    if series.is_empty() {
        return Err("prediction dumps contain no points".into());
    }
    Ok(series)
}

fn series_csv(series: &[Series]) -> String {
    let mut out = String::from("series,step,x,y\n");
    for s in series {
        for (step, (x, y)) in s.points.iter().enumerate() {
            out.push_str(&format!("{},{step},{x},{y}\n", s.name));
        }
    }
    out
}

const PALETTE: &[(&str, &str)] = &[
    ("history", "#8a8a8a"),
    ("truth", "#111111"),
    ("predicted:p", "#d95f02"),
    ("predicted:cp", "#7570b3"),
    ("predicted:cpsor", "#1b9e77"),
];

fn color_for(name: &str, index: usize) -> &'static str {
    PALETTE
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, c)| *c)
        .unwrap_or(["#e7298a", "#66a61e", "#e6ab02"][index % 3])
}

fn series_svg(series: &[Series]) -> String {
    const W: f64 = 800.0;
    const H: f64 = 500.0;
    const M: f64 = 50.0;
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in &all {
        min_x = min_x.min(*x);
        max_x = max_x.max(*x);
        min_y = min_y.min(*y);
        max_y = max_y.max(*y);
    }
    let span_x = (max_x - min_x).max(1e-6);
    let span_y = (max_y - min_y).max(1e-6);
    let sx = |x: f64| M + (x - min_x) / span_x * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - min_y) / span_y * (H - 2.0 * M);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> =
            s.points.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n",
            color_for(&s.name, i),
            pts.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"{}\">{}</text>\n",
            W - M - 150.0,
            M + 16.0 * i as f64,
            color_for(&s.name, i),
            s.name
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

// ── Metric bars ─────────────────────────────────────────────────────

struct Bar {
    label: String,
    value: f64,
}

fn read_metric_bars(path: &Path) -> Result<Vec<Bar>, String> {
    let body = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = body.lines();
    let header = lines.next().ok_or("empty metrics CSV")?;
    let columns: Vec<&str> = header.split(',').collect();
    let ade_col = columns
        .iter()
        .position(|c| *c == "ade")
        .ok_or("metrics CSV lacks an 'ade' column")?;
    let label_cols: Vec<usize> = columns
        .iter()
        .enumerate()
        .filter(|(_, c)| ["seed", "variant", "scenario", "horizon_s"].contains(c))
        .map(|(i, _)| i)
        .collect();
    let mut bars = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            continue; // trailing sections of combined reports
        }
        let value: f64 = fields[ade_col].parse().map_err(|_| "bad ade value".to_string())?;
        let label: Vec<String> =
            label_cols.iter().map(|&i| fields[i].to_string()).collect();
        bars.push(Bar { label: label.join("/"), value });
    }
    if bars.is_empty() {
        return Err("metrics CSV has no data rows".into());
    }
    bars.sort_by(|a, b| a.label.cmp(&b.label));
    Ok(bars)
}

fn bars_csv(bars: &[Bar]) -> String {
    let mut out = String::from("label,ade\n");
    for b in bars {
        out.push_str(&format!("{},{}\n", b.label, b.value));
    }
    out
}

fn bars_svg(bars: &[Bar]) -> String {
    const W: f64 = 800.0;
    const H: f64 = 500.0;
    const M: f64 = 60.0;
    let max = bars.iter().map(|b| b.value).fold(0.0f64, f64::max).max(1e-9);
    let slot = (W - 2.0 * M) / bars.len() as f64;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (i, b) in bars.iter().enumerate() {
        let h = b.value / max * (H - 2.0 * M);
        let x = M + i as f64 * slot;
        svg.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#1b9e77\"/>\n",
            x + slot * 0.1,
            H - M - h,
            slot * 0.8,
            h
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" fill=\"#111\" transform=\"rotate(45 {:.2} {:.2})\">{}</text>\n",
            x + slot * 0.5,
            H - M + 12.0,
            x + slot * 0.5,
            H - M + 12.0,
            b.label
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" fill=\"#111\">{:.3}</text>\n",
            x + slot * 0.2,
            H - M - h - 4.0,
            b.value
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
