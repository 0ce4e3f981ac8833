#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Writes `per_class · k` single-row CSV samples drawn around `k` random
/// prototypes, plus a manifest listing them. Returns the manifest path.
pub fn clustered_matrix_dataset(dir: &Path, k: usize, per_class: usize, dim: usize, seed: u64) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let protos: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..dim).map(|_| rng.random_range(0.0..4.0)).collect())
        .collect();
    let mut samples = Vec::new();
    for i in 0..per_class {
        for (c, proto) in protos.iter().enumerate() {
            let name = format!("s{c}_{i}.csv");
            let row: Vec<String> = proto
                .iter()
                .map(|v| format!("{}", (v + rng.random_range(-0.2..0.2)).max(0.0)))
                .collect();
            fs::write(dir.join(&name), row.join(",") + "\n").unwrap();
            samples.push(serde_json::json!({ "path": name, "label": format!("c{c}") }));
        }
    }
    let manifest = dir.join("manifest.json");
    fs::write(
        &manifest,
        serde_json::to_string_pretty(&serde_json::json!({ "kind": "matrix", "samples": samples })).unwrap(),
    )
    .unwrap();
    manifest
}

pub fn write_config(dir: &Path, name: &str, body: serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    path
}
