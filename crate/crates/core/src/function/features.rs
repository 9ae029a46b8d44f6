//! Per-opcode encoding of instance actions into clustering features.

use std::collections::BTreeMap;

use crate::model::{HyperParams, InstanceAction};

/// Categorical features, in the order precond, postcond, device, config keys.
pub const CATEGORICAL_FEATURES: usize = 4;

const NO_DEVICE: &str = "<none>";

pub(crate) fn precond_token(a: &InstanceAction) -> String {
    type_token(a.precond.iter().map(|s| s.component_type))
}

pub(crate) fn postcond_token(a: &InstanceAction) -> String {
    type_token(a.postcond.iter().map(|s| s.component_type))
}

fn type_token(types: impl Iterator<Item = Option<crate::model::ComponentType>>) -> String {
    let parts: Vec<&str> = types.map(|t| t.map_or("None", |t| t.as_str())).collect();
    format!("{}:{}", parts.len(), parts.join("|"))
}

pub(crate) fn device_token(a: &InstanceAction) -> String {
    a.device.clone().unwrap_or_else(|| NO_DEVICE.to_string())
}

pub(crate) fn key_token(a: &InstanceAction) -> String {
    a.config.keys().cloned().collect::<Vec<_>>().join("|")
}

/// One action's encoded features.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionFeatures {
    /// Level index per categorical feature.
    pub levels: [usize; CATEGORICAL_FEATURES],
    /// Standardized numeric values as `(channel, z)`.
    pub values: Vec<(usize, f64)>,
}

/// Encoded features of all actions of one opcode.
#[derive(Debug, Clone, PartialEq)]
pub struct OpcodeFeatures {
    pub actions: Vec<ActionFeatures>,
    /// Number of observed levels per categorical feature.
    pub level_counts: [usize; CATEGORICAL_FEATURES],
    /// Symmetric Dirichlet pseudo-count per categorical feature.
    pub betas: [f64; CATEGORICAL_FEATURES],
    /// Number of continuous channels, one per (config key, unit).
    pub channels: usize,
}

fn index_levels(tokens: &[String]) -> (Vec<usize>, usize) {
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    for t in tokens {
        let next = ids.len();
        ids.entry(t.as_str()).or_insert(next);
    }
    // renumber in sorted order so encoding does not depend on action order
    let sorted: BTreeMap<&str, usize> = ids.keys().enumerate().map(|(i, k)| (*k, i)).collect();
    (tokens.iter().map(|t| sorted[t.as_str()]).collect(), sorted.len())
}

/// Encodes the actions of one opcode.
///
/// Numeric config values are grouped into channels by `(key, unit)` and
/// standardized as `(x - m) / s` with `m` the configured GP mean (else the
/// channel mean) and `s` the kernel lengthscale (else the channel standard
/// deviation, or 1 when that is 0). Text values are not scored.
pub fn encode(actions: &[&InstanceAction], hyper: &HyperParams) -> OpcodeFeatures {
    let columns: [Vec<String>; CATEGORICAL_FEATURES] = [
        actions.iter().map(|a| precond_token(a)).collect(),
        actions.iter().map(|a| postcond_token(a)).collect(),
        actions.iter().map(|a| device_token(a)).collect(),
        actions.iter().map(|a| key_token(a)).collect(),
    ];
    let mut level_counts = [0; CATEGORICAL_FEATURES];
    let mut level_ids: Vec<Vec<usize>> = Vec::with_capacity(CATEGORICAL_FEATURES);
    for (f, column) in columns.iter().enumerate() {
        let (ids, count) = index_levels(column);
        level_counts[f] = count;
        level_ids.push(ids);
    }

    let mut channel_values: BTreeMap<(String, String), Vec<(usize, f64)>> = BTreeMap::new();
    for (i, a) in actions.iter().enumerate() {
        for (key, q) in &a.config {
            if let Some(x) = q.numeric() {
                channel_values.entry((key.clone(), q.unit().to_string())).or_default().push((i, x));
            }
        }
    }
    let mut values: Vec<Vec<(usize, f64)>> = vec![Vec::new(); actions.len()];
    for (c, xs) in channel_values.values().enumerate() {
        let n = xs.len() as f64;
        let mean = xs.iter().map(|(_, x)| x).sum::<f64>() / n;
        let std = (xs.iter().map(|(_, x)| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
        let m = hyper.gp_mean.unwrap_or(mean);
        let s = hyper.gp_kernel.lengthscale.unwrap_or(if std > 0.0 { std } else { 1.0 });
        for &(i, x) in xs {
            values[i].push((c, (x - m) / s));
        }
    }

    let bm = &hyper.base_measure;
    OpcodeFeatures {
        actions: values
            .into_iter()
            .enumerate()
            .map(|(i, values)| ActionFeatures {
                levels: [level_ids[0][i], level_ids[1][i], level_ids[2][i], level_ids[3][i]],
                values,
            })
            .collect(),
        level_counts,
        betas: [bm.precond, bm.postcond, bm.device, bm.config_keys],
        channels: channel_values.len(),
    }
}
