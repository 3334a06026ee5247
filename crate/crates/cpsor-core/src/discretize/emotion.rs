//! Emotion state clustering over PAD self-report samples.

use super::{kmeans, ClusterModel, DiscretizeError, EmoCluster};
use crate::traj::PadSample;

/// Reference PAD coordinates of a clearly angry report.
pub const ANGER_PAD: [f64; 3] = [-0.848, 0.462, 0.382];

/// Reference PAD coordinates of a slightly frightened report.
pub const FRIGHT_PAD: [f64; 3] = [-0.257, -0.985, -0.322];

/// Calm-driving anchor. Unlike the anger/fright anchors this is our own
/// convention: the origin of the PAD cube.
pub const NEUTRAL_PAD: [f64; 3] = [0.0, 0.0, 0.0];

pub struct EmotionClusters {
    pub model: ClusterModel<EmoCluster>,
    pub per_step: Vec<EmoCluster>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Clusters a PAD series into three emotion states.
///
/// k-means with k = 3 on (pleased, aroused, dominant); the two centroids
/// nearest the anger and fright anchors take those labels by exclusive
/// greedy assignment on distance, the remaining centroid is Neutral. An
/// exact distance tie in the greedy competition is an error.
pub fn emotion_states(
    pads: &[PadSample],
    seed: u64,
) -> Result<EmotionClusters, DiscretizeError> {
    let points: Vec<Vec<f64>> = pads.iter().map(|p| p.as_vec()).collect();
    let fit = kmeans(&points, 3, seed)?;

    let anchors = [(EmoCluster::Anger, ANGER_PAD), (EmoCluster::Fright, FRIGHT_PAD)];
    let mut labels: [Option<EmoCluster>; 3] = [None; 3];
    let mut anchor_taken = [false; 2];
    for _ in 0..anchors.len() {
        let mut best: Option<(f64, usize, usize)> = None;
        let mut tie = false;
        for (ai, (_, anchor)) in anchors.iter().enumerate() {
            if anchor_taken[ai] {
                continue;
            }
            for (ci, centroid) in fit.centroids.iter().enumerate() {
                if labels[ci].is_some() {
                    continue;
                }
                let d = dist2(centroid, anchor);
                match best {
                    Some((bd, bai, bci)) if d == bd && (ai, ci) != (bai, bci) => tie = true,
                    Some((bd, _, _)) if d < bd => {
                        best = Some((d, ai, ci));
                        tie = false;
                    }
                    None => best = Some((d, ai, ci)),
                    _ => {}
                }
            }
        }
        let (_, ai, ci) = best.expect("two anchors over three centroids always leave a pair");
        if tie {
            return Err(DiscretizeError::Clustering(
                "ambiguous emotion labels: two centroid/anchor pairs at equal distance".into(),
            ));
        }
        anchor_taken[ai] = true;
        labels[ci] = Some(anchors[ai].0);
    }
    let labels: Vec<EmoCluster> = labels
        .into_iter()
        .map(|l| l.unwrap_or(EmoCluster::Neutral))
        .collect();

    let per_step = fit.assignments.iter().map(|&a| labels[a]).collect();
    Ok(EmotionClusters {
        model: ClusterModel { centroids: fit.centroids, labels },
        per_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn clouds_around_anchors(n: usize, sigma: f64, seed: u64) -> Vec<PadSample> {
        let mut rng = Rng::new(seed);
        let mut pads = Vec::new();
        for anchor in [ANGER_PAD, NEUTRAL_PAD, FRIGHT_PAD] {
            for _ in 0..n {
                pads.push(PadSample::new(
                    (anchor[0] + sigma * rng.gauss()).clamp(-1.0, 1.0),
                    (anchor[1] + sigma * rng.gauss()).clamp(-1.0, 1.0),
                    (anchor[2] + sigma * rng.gauss()).clamp(-1.0, 1.0),
                ));
            }
        }
        pads
    }

    #[test]
    fn anchor_points_take_their_labels() {
        let mut pads = clouds_around_anchors(30, 0.05, 1);
        pads.push(PadSample::new(ANGER_PAD[0], ANGER_PAD[1], ANGER_PAD[2]));
        pads.push(PadSample::new(FRIGHT_PAD[0], FRIGHT_PAD[1], FRIGHT_PAD[2]));
        let got = emotion_states(&pads, 3).unwrap();
        let n = got.per_step.len();
        assert_eq!(got.per_step[n - 2], EmoCluster::Anger);
        assert_eq!(got.per_step[n - 1], EmoCluster::Fright);
    }

    #[test]
    fn each_label_appears_exactly_once() {
        let pads = clouds_around_anchors(30, 0.05, 2);
        let got = emotion_states(&pads, 4).unwrap();
        let mut counts = [0; 3];
        for l in &got.model.labels {
            counts[*l as usize] += 1;
        }
        assert_eq!(counts, [1, 1, 1], "labels = {:?}", got.model.labels);
    }

    #[test]
    fn off_axis_point_is_neutral() {
        // (0.9, 0, 0) sits nearest the neutral cloud once clouds are formed.
        let mut pads = clouds_around_anchors(30, 0.05, 5);
        pads.push(PadSample::new(0.9, 0.0, 0.0));
        let got = emotion_states(&pads, 6).unwrap();
        // Oracle: nearest centroid by direct scan.
        let point = [0.9, 0.0, 0.0];
        let mut best = (f64::INFINITY, 0);
        for (i, c) in got.model.centroids.iter().enumerate() {
            let d = dist2(c, &point);
            if d < best.0 {
                best = (d, i);
            }
        }
        assert_eq!(got.model.labels[best.1], EmoCluster::Neutral);
        assert_eq!(*got.per_step.last().unwrap(), EmoCluster::Neutral);
    }
}
