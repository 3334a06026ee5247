//! Canonical trajectory data model and dataset format.
//!
//! An episode is a multi-vehicle kinematic recording on a uniform 25 Hz time
//! grid (Δt = 0.04 s), with a per-step PAD emotion annotation for the ego
//! driver. On disk an episode is one CSV of vehicle states plus one JSON
//! sidecar of scalar metadata; the io module documents the exact layout.
//!
//! Episodes are immutable after load. Loading distinct files may proceed
//! concurrently; nothing here holds shared mutable state.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

mod io;
mod window;

pub use io::{fmt_f64, load_dataset, load_episode, round_sig9, write_episode};
pub use window::{window_samples, HistoryStep, Sample, WindowSpec};

/// Canonical sampling interval: 25 Hz.
pub const DT: f64 = 0.04;

/// Version tag written into every episode sidecar.
pub const SCHEMA_VERSION: u32 = 1;

/// Tolerance for time-grid comparisons.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TrajError {
    #[error("{file}: {msg}, row {row}")]
    Row { file: String, row: usize, msg: String },
    #[error("{file}: {msg}")]
    File { file: String, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

/// One vehicle's kinematic record at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub t: f64,
    pub vehicle_id: String,
    /// Longitudinal position along the road centerline, meters.
    pub x: f64,
    /// Lateral position, meters (positive = left of the centerline).
    pub y: f64,
    /// Speed, m/s. Never negative.
    pub v: f64,
    /// Realized longitudinal acceleration, m/s².
    pub a: f64,
    /// Steering wheel angle, degrees. Positive steers right.
    pub steer_deg: f64,
    /// Throttle pedal, normalized [0, 1].
    pub throttle: f64,
    /// Brake pedal, normalized [0, 1].
    pub brake: f64,
    /// Heading, radians, relative to the +x axis.
    pub heading_rad: f64,
}

impl VehicleState {
    pub fn pos(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

/// Three-axis self-reported emotion sample, each component in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PadSample {
    pub pleased: f64,
    pub aroused: f64,
    pub dominant: f64,
}

impl PadSample {
    pub fn new(pleased: f64, aroused: f64, dominant: f64) -> Self {
        PadSample { pleased, aroused, dominant }
    }

    pub fn as_vec(&self) -> Vec<f64> {
        vec![self.pleased, self.aroused, self.dominant]
    }
}

/// All states of one vehicle over an episode, in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleTrack {
    pub id: String,
    pub states: Vec<VehicleState>,
}

/// One recorded scenario run: every vehicle's track on a shared time grid,
/// plus the ego driver's PAD series and per-episode metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub scenario_id: u8,
    pub ego_id: String,
    pub npc_ids: Vec<String>,
    /// All tracks (ego included), sorted by vehicle id.
    pub tracks: Vec<VehicleTrack>,
    /// Ego PAD annotation, one sample per time step.
    pub ego_pad: Vec<PadSample>,
    /// Driving-style-scale score for the ego driver.
    pub sub_style_score: f64,
    pub seed: u64,
    pub meta: BTreeMap<String, String>,
}

impl Episode {
    pub fn n_steps(&self) -> usize {
        self.tracks.first().map_or(0, |t| t.states.len())
    }

    pub fn track(&self, id: &str) -> Option<&VehicleTrack> {
        self.tracks.iter().find(|t| t.id == id)
    }

    pub fn ego_track(&self) -> &VehicleTrack {
        self.track(&self.ego_id).expect("validated episode has an ego track")
    }

    /// Index of the ego track within `tracks`.
    pub fn ego_index(&self) -> usize {
        self.tracks
            .iter()
            .position(|t| t.id == self.ego_id)
            .expect("validated episode has an ego track")
    }

    /// All vehicle states at one step, in track (id-sorted) order.
    pub fn states_at(&self, step: usize) -> Vec<&VehicleState> {
        self.tracks.iter().map(|t| &t.states[step]).collect()
    }

    /// Checks every structural invariant. Loaded episodes are always
    /// validated; in-memory constructors should call this before use.
    pub fn validate(&self) -> Result<(), TrajError> {
        let fail = |msg: String| Err(TrajError::Invalid(msg));
        if !(1..=4).contains(&self.scenario_id) {
            return fail(format!("unknown scenario_id {}", self.scenario_id));
        }
        if self.tracks.is_empty() {
            return fail("episode has no tracks".into());
        }
        if self.track(&self.ego_id).is_none() {
            return fail(format!("ego vehicle '{}' has no track", self.ego_id));
        }
        let mut expected: Vec<&str> = std::iter::once(self.ego_id.as_str())
            .chain(self.npc_ids.iter().map(|s| s.as_str()))
            .collect();
        expected.sort_unstable();
        let actual: Vec<&str> = self.tracks.iter().map(|t| t.id.as_str()).collect();
        if expected != actual {
            return fail(format!(
                "track ids {actual:?} do not match ego + npc ids {expected:?} (tracks must be id-sorted)"
            ));
        }
        let n = self.n_steps();
        if n == 0 {
            return fail("episode has zero steps".into());
        }
        let grid: Vec<f64> = self.tracks[0].states.iter().map(|s| s.t).collect();
        for (i, w) in grid.windows(2).enumerate() {
            if (w[1] - w[0] - DT).abs() > TIME_EPS {
                return fail(format!(
                    "non-uniform time grid at step {}: dt = {}",
                    i + 1,
                    w[1] - w[0]
                ));
            }
        }
        for track in &self.tracks {
            if track.states.len() != n {
                return fail(format!(
                    "vehicle '{}' has {} steps, expected {n}",
                    track.id,
                    track.states.len()
                ));
            }
            for (i, s) in track.states.iter().enumerate() {
                if s.vehicle_id != track.id {
                    return fail(format!(
                        "vehicle id mismatch in track '{}' at step {i}",
                        track.id
                    ));
                }
                if (s.t - grid[i]).abs() > TIME_EPS {
                    return fail(format!(
                        "vehicle '{}' off the shared time grid at step {i}",
                        track.id
                    ));
                }
                for (name, v) in [
                    ("x", s.x),
                    ("y", s.y),
                    ("v", s.v),
                    ("a", s.a),
                    ("steer_deg", s.steer_deg),
                    ("heading_rad", s.heading_rad),
                ] {
                    if !v.is_finite() {
                        return fail(format!(
                            "non-finite {name} for vehicle '{}' at step {i}",
                            track.id
                        ));
                    }
                }
                if s.v < 0.0 {
                    return fail(format!("negative speed for vehicle '{}' at step {i}", track.id));
                }
                if !(0.0..=1.0).contains(&s.throttle) {
                    return fail(format!(
                        "throttle out of range for vehicle '{}' at step {i}",
                        track.id
                    ));
                }
                if !(0.0..=1.0).contains(&s.brake) {
                    return fail(format!(
                        "brake out of range for vehicle '{}' at step {i}",
                        track.id
                    ));
                }
            }
        }
        if self.ego_pad.len() != n {
            return fail(format!(
                "ego PAD series has {} samples, expected {n}",
                self.ego_pad.len()
            ));
        }
        for (i, p) in self.ego_pad.iter().enumerate() {
            for (name, v) in [("pad_p", p.pleased), ("pad_a", p.aroused), ("pad_d", p.dominant)] {
                if !v.is_finite() || !(-1.0..=1.0).contains(&v) {
                    return fail(format!("{name} out of range at step {i}"));
                }
            }
        }
        if !self.sub_style_score.is_finite() {
            return fail("non-finite sub_style_score".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy_episode(n: usize) -> Episode {
        let mk_track = |id: &str, x0: f64, y: f64| VehicleTrack {
            id: id.to_string(),
            states: (0..n)
                .map(|i| VehicleState {
                    t: i as f64 * DT,
                    vehicle_id: id.to_string(),
                    x: x0 + 10.0 * i as f64 * DT,
                    y,
                    v: 10.0,
                    a: 0.0,
                    steer_deg: 0.0,
                    throttle: 0.3,
                    brake: 0.0,
                    heading_rad: 0.0,
                })
                .collect(),
        };
        Episode {
            scenario_id: 1,
            ego_id: "ego".into(),
            npc_ids: vec!["npc1".into()],
            tracks: vec![mk_track("ego", 0.0, 0.0), mk_track("npc1", 25.0, 0.0)],
            ego_pad: vec![PadSample::new(0.0, 0.0, 0.0); n],
            sub_style_score: 50.0,
            seed: 1,
            meta: BTreeMap::new(),
        }
    }

    #[test]
    fn valid_episode_passes() {
        toy_episode(10).validate().unwrap();
    }

    #[test]
    fn bad_scenario_rejected() {
        let mut ep = toy_episode(5);
        ep.scenario_id = 7;
        let err = ep.validate().unwrap_err().to_string();
        assert!(err.contains("unknown scenario_id 7"), "{err}");
    }

    #[test]
    fn throttle_out_of_range_rejected() {
        let mut ep = toy_episode(5);
        ep.tracks[0].states[2].throttle = 1.3;
        let err = ep.validate().unwrap_err().to_string();
        assert!(err.contains("throttle out of range"), "{err}");
    }

    #[test]
    fn broken_grid_rejected() {
        let mut ep = toy_episode(5);
        ep.tracks[1].states[3].t += 0.01;
        assert!(ep.validate().is_err());
    }

    #[test]
    fn pad_out_of_range_rejected() {
        let mut ep = toy_episode(5);
        ep.ego_pad[4].aroused = 1.2;
        let err = ep.validate().unwrap_err().to_string();
        assert!(err.contains("pad_a out of range at step 4"), "{err}");
    }
}
