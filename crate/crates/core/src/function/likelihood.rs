//! Collapsed marginal likelihoods of the per-opcode mixture.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use super::features::{encode, ActionFeatures, OpcodeFeatures, CATEGORICAL_FEATURES};
use crate::ingest::Corpus;
use crate::model::HyperParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("fit state does not match corpus: {0}")]
    Integrity(String),
}

/// Normal-inverse-gamma prior over one standardized value channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NigPrior {
    pub mu0: f64,
    pub kappa0: f64,
    pub a0: f64,
    pub b0: f64,
}

impl NigPrior {
    /// Prior used for standardized config values; `b0` scales with the
    /// kernel variance.
    pub fn from_hyper(hyper: &HyperParams) -> Self {
        Self { mu0: 0.0, kappa0: 0.05, a0: 2.0, b0: 0.1 * hyper.gp_kernel.variance }
    }

    /// Log marginal density of values with sufficient statistics `s`.
    pub fn log_marginal(&self, s: &ChannelStats) -> f64 {
        if s.n == 0 {
            return 0.0;
        }
        let n = s.n as f64;
        let mean = s.sum / n;
        let ss = (s.sumsq - n * mean * mean).max(0.0);
        let kn = self.kappa0 + n;
        let an = self.a0 + 0.5 * n;
        let d = mean - self.mu0;
        let bn = self.b0 + 0.5 * ss + self.kappa0 * n * d * d / (2.0 * kn);
        -0.5 * n * (2.0 * std::f64::consts::PI).ln() + 0.5 * (self.kappa0 / kn).ln() + self.a0 * self.b0.ln()
            - an * bn.ln()
            + ln_gamma(an)
            - ln_gamma(self.a0)
    }
}

/// Count, sum and sum of squares of one channel's values.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChannelStats {
    pub n: usize,
    pub sum: f64,
    pub sumsq: f64,
}

impl ChannelStats {
    fn add(&mut self, x: f64, sign: f64) {
        if sign > 0.0 {
            self.n += 1;
        } else {
            self.n -= 1;
        }
        self.sum += sign * x;
        self.sumsq += sign * x * x;
        if self.n == 0 {
            self.sum = 0.0;
            self.sumsq = 0.0;
        }
    }
}

/// Sufficient statistics of one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    pub size: usize,
    pub counts: [Vec<usize>; CATEGORICAL_FEATURES],
    pub channels: Vec<ChannelStats>,
}

impl ClusterStats {
    pub fn empty(f: &OpcodeFeatures) -> Self {
        Self {
            size: 0,
            counts: std::array::from_fn(|k| vec![0; f.level_counts[k]]),
            channels: vec![ChannelStats::default(); f.channels],
        }
    }

    pub fn add(&mut self, a: &ActionFeatures) {
        self.size += 1;
        for (k, &l) in a.levels.iter().enumerate() {
            self.counts[k][l] += 1;
        }
        for &(c, z) in &a.values {
            self.channels[c].add(z, 1.0);
        }
    }

    pub fn remove(&mut self, a: &ActionFeatures) {
        self.size -= 1;
        for (k, &l) in a.levels.iter().enumerate() {
            self.counts[k][l] -= 1;
        }
        for &(c, z) in &a.values {
            self.channels[c].add(z, -1.0);
        }
    }
}

/// Dirichlet-multinomial log marginal of a count vector under a symmetric
/// prior with pseudo-count `beta` per level.
pub fn dirichlet_multinomial(counts: &[usize], beta: f64) -> f64 {
    let levels = counts.len() as f64;
    let n: usize = counts.iter().sum();
    let mut out = ln_gamma(levels * beta) - ln_gamma(levels * beta + n as f64);
    for &c in counts.iter().filter(|&&c| c > 0) {
        out += ln_gamma(beta + c as f64) - ln_gamma(beta);
    }
    out
}

/// Log marginal likelihood of all data in one cluster.
pub fn cluster_log_marginal(stats: &ClusterStats, f: &OpcodeFeatures, prior: &NigPrior) -> f64 {
    let cat: f64 = (0..CATEGORICAL_FEATURES).map(|k| dirichlet_multinomial(&stats.counts[k], f.betas[k])).sum();
    cat + stats.channels.iter().map(|s| prior.log_marginal(s)).sum::<f64>()
}

/// Log predictive of adding `a` to a cluster with statistics `stats`.
pub fn log_predictive(a: &ActionFeatures, stats: &ClusterStats, f: &OpcodeFeatures, prior: &NigPrior) -> f64 {
    let mut out = 0.0;
    for (k, &l) in a.levels.iter().enumerate() {
        let beta = f.betas[k];
        out += ((stats.counts[k][l] as f64 + beta) / (stats.size as f64 + f.level_counts[k] as f64 * beta)).ln();
    }
    for &(c, z) in &a.values {
        let before = &stats.channels[c];
        let mut after = *before;
        after.add(z, 1.0);
        out += prior.log_marginal(&after) - prior.log_marginal(before);
    }
    out
}

/// Log probability of a partition with the given cluster sizes under the
/// Chinese restaurant process with concentration `alpha`.
pub fn crp_log_prior(sizes: &[usize], alpha: f64) -> f64 {
    let sizes: Vec<usize> = sizes.iter().copied().filter(|&n| n > 0).collect();
    let total: usize = sizes.iter().sum();
    sizes.len() as f64 * alpha.ln() + sizes.iter().map(|&n| ln_gamma(n as f64)).sum::<f64>() + ln_gamma(alpha)
        - ln_gamma(alpha + total as f64)
}

/// Assignment of one opcode's actions to clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OpcodeAssignment {
    pub opcode: String,
    /// Indices into `corpus.actions`.
    pub action_ids: Vec<usize>,
    /// Cluster id per entry of `action_ids`.
    pub clusters: Vec<usize>,
}

/// Sampler state over all opcodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitState {
    pub opcodes: Vec<OpcodeAssignment>,
    pub log_lik: f64,
    pub iteration: usize,
    pub rng_seed: u64,
}

impl FitState {
    /// Cluster id of a corpus action, if assigned.
    pub fn cluster_of(&self, action_id: usize) -> Option<(&str, usize)> {
        self.opcodes.iter().find_map(|o| {
            o.action_ids.iter().position(|&i| i == action_id).map(|p| (o.opcode.as_str(), o.clusters[p]))
        })
    }

    pub fn cluster_count(&self) -> usize {
        self.opcodes
            .iter()
            .map(|o| {
                let mut c = o.clusters.clone();
                c.sort_unstable();
                c.dedup();
                c.len()
            })
            .sum()
    }
}

/// Joint log probability of one opcode's partition and data.
pub(crate) fn opcode_log_lik(f: &OpcodeFeatures, clusters: &[usize], hyper: &HyperParams) -> f64 {
    let prior = NigPrior::from_hyper(hyper);
    let mut stats: BTreeMap<usize, ClusterStats> = BTreeMap::new();
    for (a, &c) in f.actions.iter().zip(clusters) {
        stats.entry(c).or_insert_with(|| ClusterStats::empty(f)).add(a);
    }
    let sizes: Vec<usize> = stats.values().map(|s| s.size).collect();
    crp_log_prior(&sizes, hyper.alpha) + stats.values().map(|s| cluster_log_marginal(s, f, &prior)).sum::<f64>()
}

/// Complete-data log joint of a fit state, recomputed from scratch.
///
/// Every corpus action must be assigned exactly once, under its own opcode.
pub fn log_likelihood(state: &FitState, corpus: &Corpus, hyper: &HyperParams) -> Result<f64, FitError> {
    hyper.validate().map_err(|e| FitError::Config(e.to_string()))?;
    let mut seen = vec![false; corpus.actions.len()];
    let mut total = 0.0;
    for o in &state.opcodes {
        if o.action_ids.len() != o.clusters.len() {
            return Err(FitError::Integrity(format!("{}: {} actions but {} assignments", o.opcode, o.action_ids.len(), o.clusters.len())));
        }
        let mut actions = Vec::with_capacity(o.action_ids.len());
        for &id in &o.action_ids {
            let a = corpus.actions.get(id).ok_or_else(|| FitError::Integrity(format!("action id {id} out of range")))?;
            if a.opcode != o.opcode {
                return Err(FitError::Integrity(format!("action {id} has opcode {} not {}", a.opcode, o.opcode)));
            }
            if std::mem::replace(&mut seen[id], true) {
                return Err(FitError::Integrity(format!("action {id} assigned twice")));
            }
            actions.push(a);
        }
        total += opcode_log_lik(&encode(&actions, hyper), &o.clusters, hyper);
    }
    if let Some(id) = seen.iter().position(|s| !s) {
        return Err(FitError::Integrity(format!("action {id} is unassigned")));
    }
    Ok(total)
}
