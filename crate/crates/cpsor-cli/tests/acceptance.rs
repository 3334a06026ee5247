//! Pipeline determinism: the generate → learn-dbn → train → eval chain with
//! fixed seeds must produce byte-identical artifacts across two runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

fn run_chain(root: &Path) {
    let data = root.join("data");
    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_cpsor"))
            .args(args)
            .output()
            .expect("binary runs");
        assert!(
            out.status.success(),
            "command {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    let s = |p: PathBuf| p.display().to_string();
    run(&[
        "generate", "--out", &s(data.clone()),
        "--episodes", "2", "--scenarios", "1,2", "--emotions", "anger,neutral",
        "--seed", "5", "--duration", "8",
    ]);
    run(&[
        "learn-dbn", "--data", &s(data.clone()), "--out", &s(root.join("sor.dbn")),
        "--prior", "sor", "--seed", "3", "--restarts", "2",
    ]);
    run(&[
        "train", "--data", &s(data.clone()), "--variant", "cpsor",
        "--dbn", &s(root.join("sor.dbn")), "--out", &s(root.join("weights.txt")),
        "--epochs", "3", "--stride", "80", "--seed", "1",
    ]);
    run(&[
        "eval", "--data", &s(data.clone()), "--weights", &s(root.join("weights.txt")),
        "--dbn", &s(root.join("sor.dbn")), "--out", &s(root.join("metrics.csv")),
        "--markdown", &s(root.join("metrics.md")),
        "--dump-predictions", &s(root.join("pred.csv")),
    ]);
}

fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                files.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    files
}

#[test]
fn pipeline_is_byte_identical_across_runs() {
    let base = std::env::temp_dir().join("cpsor_determinism");
    let _ = std::fs::remove_dir_all(&base);
    let (a, b) = (base.join("a"), base.join("b"));
    std::fs::create_dir_all(&a).unwrap();
    std::fs::create_dir_all(&b).unwrap();
    run_chain(&a);
    run_chain(&b);
    let fa = snapshot(&a);
    let fb = snapshot(&b);
    assert_eq!(
        fa.keys().collect::<Vec<_>>(),
        fb.keys().collect::<Vec<_>>(),
        "both runs must produce the same artifact set"
    );
    let mut checked = 0;
    for (name, bytes) in &fa {
        assert_eq!(bytes, &fb[name], "artifact '{name}' differs between runs");
        checked += 1;
    }
    assert!(checked >= 10, "expected a non-trivial artifact set, saw {checked}");
    println!("[PASS] determinism: generate → learn-dbn → train → eval, {checked} artifacts byte-identical across two runs");
}
