//! Optional JSON config file. Each section mirrors one command's flags;
//! explicit command-line flags always win. Unknown keys are rejected.

use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Declared for forward compatibility; version 1 is the only schema.
    #[serde(default, rename = "schema_version")]
    pub _schema_version: Option<u32>,
    #[serde(default)]
    pub generate: GenerateSection,
    #[serde(default)]
    pub discretize: DiscretizeSection,
    #[serde(default)]
    pub learn_dbn: LearnDbnSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub ablate: AblateSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSection {
    pub episodes: Option<usize>,
    pub scenarios: Option<Vec<u8>>,
    pub emotions: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub duration: Option<f64>,
    pub trigger: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizeSection {
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnDbnSection {
    pub prior: Option<String>,
    pub penalty: Option<String>,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub horizon: Option<f64>,
    pub history: Option<f64>,
    pub stride: Option<usize>,
    pub epochs: Option<usize>,
    pub seed: Option<u64>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub momentum: Option<f64>,
    pub gcn_hidden: Option<usize>,
    pub gcn_out: Option<usize>,
    pub lstm_hidden: Option<usize>,
    pub attn_dim: Option<usize>,
    pub d_close: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblateSection {
    pub horizons: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
    pub epochs: Option<usize>,
    pub stride: Option<usize>,
    pub gcn_hidden: Option<usize>,
    pub lstm_hidden: Option<usize>,
    pub attn_dim: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, String> {
        let body = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&body).map_err(|e| format!("{}: {e}", path.display()))
    }
}
