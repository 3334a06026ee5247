//! Episode file format: one CSV of states + one JSON sidecar per episode.
//!
//! CSV columns, in exact order:
//! `t, vehicle_id, x, y, v, a, steer_deg, throttle, brake, heading_rad,
//! pad_p, pad_a, pad_d` — the PAD columns are populated only on ego rows
//! and left empty otherwise. Rows are written time-major (all vehicles of
//! step 0, then step 1, ...), vehicles id-sorted within a step.
//!
//! Floats are written in Rust's shortest exact decimal form, so
//! serialize → parse reproduces every numeric field bit-for-bit. The
//! scenario generator additionally quantizes its output to 9 significant
//! digits ([`round_sig9`]) so the files stay human-readable.

use super::{Episode, PadSample, TrajError, VehicleState, VehicleTrack, SCHEMA_VERSION};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

pub const CSV_HEADER: &str =
    "t,vehicle_id,x,y,v,a,steer_deg,throttle,brake,heading_rad,pad_p,pad_a,pad_d";

/// Rounds to 9 significant decimal digits.
pub fn round_sig9(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    format!("{x:.8e}").parse().expect("9-sig-digit round trip")
}

/// Shortest decimal form that parses back to exactly the same f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    scenario_id: u8,
    ego_id: String,
    npc_ids: Vec<String>,
    sub_style_score: f64,
    seed: u64,
    schema_version: u32,
    #[serde(default)]
    meta: BTreeMap<String, String>,
}

fn io_err(path: &Path, source: std::io::Error) -> TrajError {
    TrajError::Io { path: path.display().to_string(), source }
}

/// Writes `<stem>.csv` and `<stem>.json` under `dir`.
pub fn write_episode(ep: &Episode, dir: &Path, stem: &str) -> Result<(), TrajError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut csv = String::with_capacity(64 * ep.n_steps() * ep.tracks.len());
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for step in 0..ep.n_steps() {
        for track in &ep.tracks {
            let s = &track.states[step];
            let pad = if track.id == ep.ego_id {
                let p = &ep.ego_pad[step];
                format!("{},{},{}", fmt_f64(p.pleased), fmt_f64(p.aroused), fmt_f64(p.dominant))
            } else {
                ",,".to_string()
            };
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                fmt_f64(s.t),
                s.vehicle_id,
                fmt_f64(s.x),
                fmt_f64(s.y),
                fmt_f64(s.v),
                fmt_f64(s.a),
                fmt_f64(s.steer_deg),
                fmt_f64(s.throttle),
                fmt_f64(s.brake),
                fmt_f64(s.heading_rad),
                pad,
            ));
        }
    }
    let csv_path = dir.join(format!("{stem}.csv"));
    fs::write(&csv_path, csv).map_err(|e| io_err(&csv_path, e))?;

    let sidecar = Sidecar {
        scenario_id: ep.scenario_id,
        ego_id: ep.ego_id.clone(),
        npc_ids: ep.npc_ids.clone(),
        sub_style_score: ep.sub_style_score,
        seed: ep.seed,
        schema_version: SCHEMA_VERSION,
        meta: ep.meta.clone(),
    };
    let json_path = dir.join(format!("{stem}.json"));
    let mut body = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    body.push('\n');
    fs::write(&json_path, body).map_err(|e| io_err(&json_path, e))?;
    Ok(())
}

/// Loads and validates the `<stem>.csv` / `<stem>.json` pair under `dir`.
pub fn load_episode(dir: &Path, stem: &str) -> Result<Episode, TrajError> {
    let json_path = dir.join(format!("{stem}.json"));
    let json_body = fs::read_to_string(&json_path).map_err(|e| io_err(&json_path, e))?;
    let sidecar: Sidecar = serde_json::from_str(&json_body).map_err(|e| TrajError::File {
        file: json_path.display().to_string(),
        msg: format!("invalid sidecar: {e}"),
    })?;
    if sidecar.schema_version != SCHEMA_VERSION {
        return Err(TrajError::File {
            file: json_path.display().to_string(),
            msg: format!(
                "schema_version {} not supported (expected {SCHEMA_VERSION})",
                sidecar.schema_version
            ),
        });
    }

    let csv_path = dir.join(format!("{stem}.csv"));
    let body = fs::read_to_string(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    let file = csv_path.display().to_string();
    let mut lines = body.lines();
    match lines.next() {
        Some(h) if h.trim_end() == CSV_HEADER => {}
        _ => {
            return Err(TrajError::File { file, msg: format!("missing columns, header must be '{CSV_HEADER}'") });
        }
    }

    let mut by_vehicle: BTreeMap<String, Vec<VehicleState>> = BTreeMap::new();
    let mut pad_rows: Vec<(f64, PadSample)> = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 1; // 1-based data-row index, header excluded
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(TrajError::Row {
                file: file.clone(),
                row,
                msg: format!("expected 13 columns, found {}", fields.len()),
            });
        }
        let num = |idx: usize, name: &str| -> Result<f64, TrajError> {
            fields[idx].trim().parse::<f64>().map_err(|_| TrajError::Row {
                file: file.clone(),
                row,
                msg: format!("invalid {name} '{}'", fields[idx]),
            })
        };
        let rowerr = |msg: String| TrajError::Row { file: file.clone(), row, msg };
        let state = VehicleState {
            t: num(0, "t")?,
            vehicle_id: fields[1].trim().to_string(),
            x: num(2, "x")?,
            y: num(3, "y")?,
            v: num(4, "v")?,
            a: num(5, "a")?,
            steer_deg: num(6, "steer_deg")?,
            throttle: num(7, "throttle")?,
            brake: num(8, "brake")?,
            heading_rad: num(9, "heading_rad")?,
        };
        for (name, v) in [
            ("t", state.t),
            ("x", state.x),
            ("y", state.y),
            ("v", state.v),
            ("a", state.a),
            ("steer_deg", state.steer_deg),
            ("heading_rad", state.heading_rad),
        ] {
            if !v.is_finite() {
                return Err(rowerr(format!("non-finite {name}")));
            }
        }
        if state.v < 0.0 {
            return Err(rowerr("negative speed".into()));
        }
        if !(0.0..=1.0).contains(&state.throttle) {
            return Err(rowerr("throttle out of range".into()));
        }
        if !(0.0..=1.0).contains(&state.brake) {
            return Err(rowerr("brake out of range".into()));
        }
        let is_ego = state.vehicle_id == sidecar.ego_id;
        let pad_fields = [fields[10].trim(), fields[11].trim(), fields[12].trim()];
        if is_ego {
            let mut vals = [0.0; 3];
            for (k, (f, name)) in pad_fields.iter().zip(["pad_p", "pad_a", "pad_d"]).enumerate() {
                let v: f64 = f
                    .parse()
                    .map_err(|_| rowerr(format!("missing or invalid {name} on ego row")))?;
                if !v.is_finite() || !(-1.0..=1.0).contains(&v) {
                    return Err(rowerr(format!("{name} out of range")));
                }
                vals[k] = v;
            }
            pad_rows.push((state.t, PadSample::new(vals[0], vals[1], vals[2])));
        } else if pad_fields.iter().any(|f| !f.is_empty()) {
            return Err(rowerr("PAD columns must be empty on non-ego rows".into()));
        }
        by_vehicle.entry(state.vehicle_id.clone()).or_default().push(state);
    }

    pad_rows.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite t"));
    let ego_pad: Vec<PadSample> = pad_rows.into_iter().map(|(_, p)| p).collect();

    let tracks: Vec<VehicleTrack> = by_vehicle
        .into_iter()
        .map(|(id, mut states)| {
            states.sort_by(|a, b| a.t.partial_cmp(&b.t).expect("finite t"));
            VehicleTrack { id, states }
        })
        .collect();

    let ep = Episode {
        scenario_id: sidecar.scenario_id,
        ego_id: sidecar.ego_id,
        npc_ids: sidecar.npc_ids,
        tracks,
        ego_pad,
        sub_style_score: sidecar.sub_style_score,
        seed: sidecar.seed,
        meta: sidecar.meta,
    };
    ep.validate().map_err(|e| TrajError::File { file, msg: e.to_string() })?;
    Ok(ep)
}

/// Loads every `<stem>.csv` + `<stem>.json` pair under `dir`, stem-sorted.
pub fn load_dataset(dir: &Path) -> Result<Vec<Episode>, TrajError> {
    let entries = fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
    let mut stems: Vec<String> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| io_err(dir, e))?;
        let path: PathBuf = entry.path();
        if path.extension().is_some_and(|e| e == "json") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                if stem != "manifest" && dir.join(format!("{stem}.csv")).exists() {
                    stems.push(stem.to_string());
                }
            }
        }
    }
    stems.sort_unstable();
    stems.iter().map(|stem| load_episode(dir, stem)).collect()
}

#[cfg(test)]
mod tests {
    use super::super::tests::toy_episode;
    use super::*;

    #[test]
    fn round_sig9_examples() {
        assert_eq!(round_sig9(0.0), 0.0);
        assert_eq!(round_sig9(1.0 / 3.0), 0.333333333);
        assert_eq!(round_sig9(123456789.123), 123456789.0);
        assert_eq!(round_sig9(-0.04), -0.04);
    }

    #[test]
    fn episode_round_trip_is_bitwise() {
        let dir = std::env::temp_dir().join("cpsor_traj_roundtrip");
        let _ = fs::remove_dir_all(&dir);
        let mut ep = toy_episode(200);
        // Exercise awkward values: exact decimals, tiny magnitudes, negatives.
        ep.tracks[0].states[3].x = 1.0 / 3.0;
        ep.tracks[1].states[7].a = -2.25e-7;
        ep.ego_pad[5] = PadSample::new(-0.848, 0.462, 0.382);
        ep.meta.insert("label".into(), "fixture".into());
        write_episode(&ep, &dir, "ep_test").unwrap();
        let back = load_episode(&dir, "ep_test").unwrap();
        assert_eq!(ep, back);
    }

    #[test]
    fn load_dataset_finds_single_episode() {
        let dir = std::env::temp_dir().join("cpsor_traj_dataset");
        let _ = fs::remove_dir_all(&dir);
        let ep = toy_episode(200);
        write_episode(&ep, &dir, "only").unwrap();
        let eps = load_dataset(&dir).unwrap();
        assert_eq!(eps.len(), 1);
        assert_eq!(eps[0].n_steps(), 200);
    }

    #[test]
    fn throttle_error_names_row() {
        let dir = std::env::temp_dir().join("cpsor_traj_badrow");
        let _ = fs::remove_dir_all(&dir);
        let ep = toy_episode(20);
        write_episode(&ep, &dir, "bad").unwrap();
        // Corrupt throttle on data row 17 (1-based, header excluded).
        let path = dir.join("bad.csv");
        let body = fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = body.lines().map(|l| l.to_string()).collect();
        let fields: Vec<&str> = lines[17].split(',').collect();
        let mut fields: Vec<String> = fields.iter().map(|s| s.to_string()).collect();
        fields[7] = "1.3".into();
        lines[17] = fields.join(",");
        fs::write(&path, lines.join("\n")).unwrap();
        let err = load_episode(&dir, "bad").unwrap_err().to_string();
        assert!(err.contains("throttle out of range"), "{err}");
        assert!(err.contains("row 17"), "{err}");
    }

    #[test]
    fn missing_columns_rejected() {
        let dir = std::env::temp_dir().join("cpsor_traj_badheader");
        let _ = fs::remove_dir_all(&dir);
        let ep = toy_episode(5);
        write_episode(&ep, &dir, "hdr").unwrap();
        let path = dir.join("hdr.csv");
        let body = fs::read_to_string(&path).unwrap();
        fs::write(&path, body.replace(",heading_rad", "")).unwrap();
        let err = load_episode(&dir, "hdr").unwrap_err().to_string();
        assert!(err.contains("missing columns"), "{err}");
    }
}
