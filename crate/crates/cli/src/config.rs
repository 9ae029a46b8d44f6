//! The JSON run configuration: fit hyperparameters plus module thresholds.

use std::path::Path;

use anyhow::{Context, Result};
use protodsl::metrics::AlignParams;
use protodsl::HyperParams;
use serde::Deserialize;

/// Hyperparameter keys sit at the top level next to the thresholds. Absent
/// keys take the library defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct Config {
    #[serde(flatten)]
    pub hyper: HyperParams,
    pub synonym_threshold: Option<f64>,
    pub property_support: Option<f64>,
    pub k: Option<usize>,
    pub max_iters: Option<usize>,
    pub max_rounds: Option<usize>,
    pub align: Option<AlignParams>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}
