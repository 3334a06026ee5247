//! Sliding-window extraction of (history, future) training samples.

use super::{Episode, TrajError, VehicleState, DT};
use crate::discretize::CognitiveFrame;

/// Window geometry. History and future lengths are given in seconds and
/// resolved onto the 25 Hz grid by rounding.
#[derive(Debug, Clone, Copy)]
pub struct WindowSpec {
    pub history_s: f64,
    pub future_s: f64,
    pub stride: usize,
}

impl WindowSpec {
    pub fn history_steps(&self) -> usize {
        (self.history_s / DT).round() as usize
    }

    pub fn future_steps(&self) -> usize {
        (self.future_s / DT).round() as usize
    }
}

/// One history time step: every vehicle's state plus the ego's cognitive
/// frame when the episode has been discretized.
#[derive(Debug, Clone)]
pub struct HistoryStep {
    pub t: f64,
    /// Vehicle states in the episode's track (id-sorted) order.
    pub vehicles: Vec<VehicleState>,
    pub ego_frame: Option<CognitiveFrame>,
}

/// A single prediction sample: H history steps and F future ego positions.
#[derive(Debug, Clone)]
pub struct Sample {
    pub scenario_id: u8,
    pub ego_id: String,
    /// Index of the ego vehicle within each history step's `vehicles`.
    pub ego_index: usize,
    /// Episode step index where the history window starts.
    pub start_step: usize,
    pub history: Vec<HistoryStep>,
    /// Future ego positions (x, y).
    pub future: Vec<(f64, f64)>,
    /// Time of the first future step.
    pub future_start_t: f64,
}

impl Sample {
    pub fn last_observed_pos(&self) -> (f64, f64) {
        let s = &self.history.last().expect("non-empty history").vehicles[self.ego_index];
        (s.x, s.y)
    }
}

/// Extracts all maximal windows from an episode.
///
/// Returns `floor((N - H - F) / stride) + 1` samples (none when the episode
/// is shorter than one window). Sample `i` starts at step `i * stride`, so
/// windowing is deterministic and order-preserving.
///
/// `frames`, when provided, must contain one cognitive frame per episode
/// step; each history step then carries the ego frame for its step.
pub fn window_samples(
    episode: &Episode,
    frames: Option<&[CognitiveFrame]>,
    spec: &WindowSpec,
) -> Result<Vec<Sample>, TrajError> {
    if spec.stride == 0 {
        return Err(TrajError::Invalid("stride must be at least 1".into()));
    }
    let h = spec.history_steps();
    let f = spec.future_steps();
    if h == 0 || f == 0 {
        return Err(TrajError::Invalid("history and future must span at least one step".into()));
    }
    let n = episode.n_steps();
    if let Some(fr) = frames {
        if fr.len() != n {
            return Err(TrajError::Invalid(format!(
                "frame series has {} entries, episode has {n} steps",
                fr.len()
            )));
        }
    }
    if n < h + f {
        return Ok(Vec::new());
    }
    let ego_index = episode.ego_index();
    let ego_track = &episode.tracks[ego_index];
    let count = (n - h - f) / spec.stride + 1;
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let start = i * spec.stride;
        let history = (start..start + h)
            .map(|step| HistoryStep {
                t: episode.tracks[0].states[step].t,
                vehicles: episode.tracks.iter().map(|tr| tr.states[step].clone()).collect(),
                ego_frame: frames.map(|fr| fr[step].clone()),
            })
            .collect();
        let future = (start + h..start + h + f)
            .map(|step| {
                let s = &ego_track.states[step];
                (s.x, s.y)
            })
            .collect();
        samples.push(Sample {
            scenario_id: episode.scenario_id,
            ego_id: episode.ego_id.clone(),
            ego_index,
            start_step: start,
            history,
            future,
            future_start_t: ego_track.states[start + h].t,
        });
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::super::tests::toy_episode;
    use super::*;

    fn spec(stride: usize) -> WindowSpec {
        WindowSpec { history_s: 3.0, future_s: 1.0, stride }
    }

    #[test]
    fn window_counts_match_formula() {
        let ep = toy_episode(150);
        assert_eq!(spec(1).history_steps(), 75);
        assert_eq!(spec(1).future_steps(), 25);
        let samples = window_samples(&ep, None, &spec(1)).unwrap();
        assert_eq!(samples.len(), 51); // 150 - 75 - 25 + 1

        let strided = window_samples(&ep, None, &spec(10)).unwrap();
        assert_eq!(strided.len(), 6); // floor(50 / 10) + 1
    }

    #[test]
    fn short_episode_yields_no_samples() {
        let ep = toy_episode(99);
        assert!(window_samples(&ep, None, &spec(1)).unwrap().is_empty());
    }

    #[test]
    fn history_and_future_are_contiguous() {
        let ep = toy_episode(150);
        for s in window_samples(&ep, None, &spec(7)).unwrap() {
            let last_t = s.history.last().unwrap().t;
            assert!((last_t + DT - s.future_start_t).abs() < 1e-9);
            assert_eq!(s.history.len(), 75);
            assert_eq!(s.future.len(), 25);
        }
    }

    #[test]
    fn start_steps_follow_stride() {
        let ep = toy_episode(150);
        for (i, s) in window_samples(&ep, None, &spec(10)).unwrap().iter().enumerate() {
            assert_eq!(s.start_step, i * 10);
        }
    }

    #[test]
    fn zero_stride_rejected() {
        let ep = toy_episode(150);
        assert!(window_samples(&ep, None, &spec(0)).is_err());
    }
}
