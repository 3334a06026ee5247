//! Discrete cognitive-node states computed from raw episode data.
//!
//! All functions here are pure: RNG state is caller-supplied and inputs are
//! immutable, so everything may be called concurrently.

use thiserror::Error;

mod emotion;
mod kmeans;
mod rules;

pub use emotion::{emotion_states, EmotionClusters, ANGER_PAD, FRIGHT_PAD, NEUTRAL_PAD};
pub use kmeans::{kmeans, nearest_centroid, ClusterModel, KmeansFit, KMEANS_MAX_ITERS};
pub use rules::{
    autocorrelation, bin_acceleration, lateral_maneuver, select_window, select_window_with,
    sub_style, ttc_risk_grade, WindowSelection, AC_THRESHOLD, ACCEL_BIN_WIDTH, WINDOW_CAP,
};

#[derive(Debug, Error)]
pub enum DiscretizeError {
    #[error("{0}")]
    Domain(String),
    #[error("degenerate series: {0}")]
    Degenerate(String),
    #[error("clustering failed: {0}")]
    Clustering(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RiskGrade {
    Safe,
    Moderate,
    Danger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmoCluster {
    Anger,
    Neutral,
    Fright,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubStyle {
    Aggressive,
    Neutral,
    Conservative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjStyle {
    Gentle,
    Moderate,
    Hasty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManLongi {
    Accelerate,
    Maintain,
    Decelerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManLateral {
    LeftTurn,
    Straight,
    RightTurn,
}

macro_rules! impl_state_strings {
    ($ty:ty { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(&self) -> &'static str {
                match self {
                    $(Self::$variant => $name),+
                }
            }

            pub fn parse_str(s: &str) -> Option<Self> {
                match s {
                    $($name => Some(Self::$variant),)+
                    _ => None,
                }
            }
        }
    };
}

impl_state_strings!(RiskGrade { Safe => "Safe", Moderate => "Moderate", Danger => "Danger" });
impl_state_strings!(EmoCluster { Anger => "Anger", Neutral => "Neutral", Fright => "Fright" });
impl_state_strings!(SubStyle {
    Aggressive => "Aggressive",
    Neutral => "Neutral",
    Conservative => "Conservative",
});
impl_state_strings!(ObjStyle { Gentle => "Gentle", Moderate => "Moderate", Hasty => "Hasty" });
impl_state_strings!(ManLongi {
    Accelerate => "Accelerate",
    Maintain => "Maintain",
    Decelerate => "Decelerate",
});
impl_state_strings!(ManLateral {
    LeftTurn => "LeftTurn",
    Straight => "Straight",
    RightTurn => "RightTurn",
});

/// Deterministic coupling of objective style and the two maneuver states
/// into a single behavior label. Injective over its 27 inputs.
pub fn behavior_index(obj: ObjStyle, longi: ManLongi, lateral: ManLateral) -> u8 {
    (obj as u8) * 9 + (longi as u8) * 3 + (lateral as u8)
}

/// Inverse of [`behavior_index`].
pub fn behavior_parts(index: u8) -> (ObjStyle, ManLongi, ManLateral) {
    assert!(index < 27, "behavior index out of range");
    let obj = match index / 9 {
        0 => ObjStyle::Gentle,
        1 => ObjStyle::Moderate,
        _ => ObjStyle::Hasty,
    };
    let longi = match (index / 3) % 3 {
        0 => ManLongi::Accelerate,
        1 => ManLongi::Maintain,
        _ => ManLongi::Decelerate,
    };
    let lateral = match index % 3 {
        0 => ManLateral::LeftTurn,
        1 => ManLateral::Straight,
        _ => ManLateral::RightTurn,
    };
    (obj, longi, lateral)
}

/// Discrete states of all cognitive nodes at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct CognitiveFrame {
    pub npc_a_bin: i32,
    pub risk_grade: RiskGrade,
    pub emo_cluster: EmoCluster,
    pub ego_a_bin: i32,
    pub sub_style: SubStyle,
    pub obj_style: ObjStyle,
    pub man_longi: ManLongi,
    pub man_lateral: ManLateral,
    /// Coupled (obj_style, man_longi, man_lateral) label, 0..27.
    pub behavior: u8,
}

impl CognitiveFrame {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        npc_a_bin: i32,
        risk_grade: RiskGrade,
        emo_cluster: EmoCluster,
        ego_a_bin: i32,
        sub_style: SubStyle,
        obj_style: ObjStyle,
        man_longi: ManLongi,
        man_lateral: ManLateral,
    ) -> Self {
        CognitiveFrame {
            npc_a_bin,
            risk_grade,
            emo_cluster,
            ego_a_bin,
            sub_style,
            obj_style,
            man_longi,
            man_lateral,
            behavior: behavior_index(obj_style, man_longi, man_lateral),
        }
    }
}

/// Per-window feature vector for maneuver / objective-style clustering:
/// means then standard deviations of (brake, throttle, steer_deg) over a
/// 20-step window.
pub type ControlFeatures = [f64; 6];

/// Splits control channels into consecutive `window`-step windows and
/// computes the 6-vector features. A trailing partial window is dropped.
pub fn control_window_features(
    brake: &[f64],
    throttle: &[f64],
    steer_deg: &[f64],
    window: usize,
) -> Vec<ControlFeatures> {
    assert!(window > 0);
    assert_eq!(brake.len(), throttle.len());
    assert_eq!(brake.len(), steer_deg.len());
    let n_windows = brake.len() / window;
    let mut out = Vec::with_capacity(n_windows);
    for w in 0..n_windows {
        let lo = w * window;
        let hi = lo + window;
        let mut feats = [0.0; 6];
        for (k, chan) in [brake, throttle, steer_deg].iter().enumerate() {
            let slice = &chan[lo..hi];
            let mean = slice.iter().sum::<f64>() / window as f64;
            let var = slice.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / window as f64;
            feats[k] = mean;
            feats[3 + k] = var.sqrt();
        }
        out.push(feats);
    }
    out
}

/// Joint k=3 clustering of control windows. Each cluster receives a
/// longitudinal-maneuver label from the ordering of its (throttle − brake)
/// centroid mean and an objective-style label from the magnitude of its
/// std components.
pub struct ManeuverClusters {
    pub model: ClusterModel<(ManLongi, ObjStyle)>,
    pub per_window: Vec<(ManLongi, ObjStyle)>,
}

pub fn maneuver_and_style(
    windows: &[ControlFeatures],
    seed: u64,
) -> Result<ManeuverClusters, DiscretizeError> {
    let points: Vec<Vec<f64>> = windows.iter().map(|w| w.to_vec()).collect();
    let fit = kmeans(&points, 3, seed)?;

    // Longitudinal label: order clusters by centroid (throttle - brake) mean.
    let mut by_drive: Vec<(usize, f64)> = fit
        .centroids
        .iter()
        .enumerate()
        .map(|(i, c)| (i, c[1] - c[0]))
        .collect();
    by_drive.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite centroid"));
    let mut longi = [ManLongi::Maintain; 3];
    longi[by_drive[0].0] = ManLongi::Decelerate;
    longi[by_drive[1].0] = ManLongi::Maintain;
    longi[by_drive[2].0] = ManLongi::Accelerate;

    // Style label: order clusters by the norm of their std components.
    let mut by_std: Vec<(usize, f64)> = fit
        .centroids
        .iter()
        .enumerate()
        .map(|(i, c)| (i, (c[3] * c[3] + c[4] * c[4] + c[5] * c[5]).sqrt()))
        .collect();
    by_std.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite centroid"));
    let mut style = [ObjStyle::Moderate; 3];
    style[by_std[0].0] = ObjStyle::Gentle;
    style[by_std[1].0] = ObjStyle::Moderate;
    style[by_std[2].0] = ObjStyle::Hasty;

    let labels: Vec<(ManLongi, ObjStyle)> =
        (0..3).map(|i| (longi[i], style[i])).collect();
    let per_window = fit.assignments.iter().map(|&a| labels[a]).collect();
    Ok(ManeuverClusters {
        model: ClusterModel { centroids: fit.centroids, labels },
        per_window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn behavior_coupling_is_injective() {
        let mut seen = HashSet::new();
        for obj in [ObjStyle::Gentle, ObjStyle::Moderate, ObjStyle::Hasty] {
            for longi in [ManLongi::Accelerate, ManLongi::Maintain, ManLongi::Decelerate] {
                for lat in [ManLateral::LeftTurn, ManLateral::Straight, ManLateral::RightTurn] {
                    let b = behavior_index(obj, longi, lat);
                    assert!(b < 27);
                    assert!(seen.insert(b), "duplicate behavior index {b}");
                    assert_eq!(behavior_parts(b), (obj, longi, lat));
                }
            }
        }
        assert_eq!(seen.len(), 27);
    }

    #[test]
    fn control_features_drop_partial_window() {
        let n = 47; // two full 20-step windows, 7 steps dropped
        let brake = vec![0.5; n];
        let throttle = vec![0.1; n];
        let steer = vec![0.0; n];
        let feats = control_window_features(&brake, &throttle, &steer, 20);
        assert_eq!(feats.len(), 2);
        assert!((feats[0][0] - 0.5).abs() < 1e-12);
        assert!(feats[0][3].abs() < 1e-12); // constant channel has zero std
    }

    #[test]
    fn hard_braking_window_labeled_decelerate() {
        // Three well-separated window populations: hard braking, coasting,
        // strong throttle with busy steering.
        let mut windows = Vec::new();
        for i in 0..10 {
            let j = i as f64 * 0.001;
            windows.push([0.9 + j, 0.0, 0.0, 0.05, 0.01, 0.2]); // braking
            windows.push([0.0, 0.02 + j, 0.0, 0.001, 0.001, 0.01]); // coasting
            windows.push([0.0, 0.85 + j, 1.0, 0.1, 0.15, 2.0]); // hasty accel
        }
        let got = maneuver_and_style(&windows, 9).unwrap();
        assert_eq!(got.per_window[0].0, ManLongi::Decelerate);
        assert_eq!(got.per_window[1].0, ManLongi::Maintain);
        assert_eq!(got.per_window[1].1, ObjStyle::Gentle);
        assert_eq!(got.per_window[2].0, ManLongi::Accelerate);
        assert_eq!(got.per_window[2].1, ObjStyle::Hasty);
    }
}
