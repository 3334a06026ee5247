//! Null-dataset control: when the cognitive frames are decoupled from the
//! kinematics, the cognitive variants must not show a systematic edge over
//! the physical-only model.

use cpsor_core::dataset::{discretize_dataset, generate_dataset, DatasetSpec};
use cpsor_core::discretize::CognitiveFrame;
use cpsor_core::eval::{run_ablation_with_frames, AblationConfig};
use cpsor_core::neural::Variant;
use cpsor_core::rng::Rng;

#[test]
fn null_cognition_gives_no_systematic_improvement() {
    let spec = DatasetSpec {
        episodes_per_cell: 4,
        base_seed: 60,
        duration: 10.0,
        ..DatasetSpec::default()
    };
    let episodes = generate_dataset(&spec).unwrap();
    let cfg = AblationConfig {
        horizons_s: vec![1.0],
        stride: 100,
        epochs: 8,
        seeds: vec![0, 1, 2, 3, 4],
        gcn_hidden: 8,
        gcn_out: 8,
        lstm_hidden: 16,
        attn_dim: 8,
        search_restarts: 3,
        ..AblationConfig::default()
    };

    // Discretize normally, then shuffle every frame across the whole
    // dataset so the cognition at a step says nothing about that step.
    let mut cog = discretize_dataset(&episodes, &cfg.discretize).unwrap();
    let mut pool: Vec<CognitiveFrame> = cog.frames.iter().flatten().cloned().collect();
    Rng::new(99).shuffle(&mut pool);
    let mut cursor = 0;
    for series in &mut cog.frames {
        for frame in series.iter_mut() {
            *frame = pool[cursor].clone();
            cursor += 1;
        }
    }

    let outcome = run_ablation_with_frames(&episodes, &cog, &cfg).unwrap();
    let p = outcome.mean_ade(Variant::P, 1.0, None).unwrap();
    let cp = outcome.mean_ade(Variant::Cp, 1.0, None).unwrap();
    let cpsor = outcome.mean_ade(Variant::Cpsor, 1.0, None).unwrap();
    let rel_cp = (p - cp) / p;
    let rel_cpsor = (p - cpsor) / p;
    println!("null dataset: p {p:.3}, cp {cp:.3} ({rel_cp:+.2}), cpsor {cpsor:.3} ({rel_cpsor:+.2})");
    assert!(
        rel_cp.abs() < 0.15 && rel_cpsor.abs() < 0.15,
        "shuffled cognition should not move mean RMSE materially: cp {rel_cp:+.3}, cpsor {rel_cpsor:+.3}"
    );
}
