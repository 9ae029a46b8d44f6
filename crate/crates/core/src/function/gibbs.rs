//! Collapsed Gibbs sampling of the per-opcode Dirichlet-process mixture.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{encode, OpcodeFeatures};
use super::likelihood::{cluster_log_marginal, crp_log_prior, log_predictive, ClusterStats, FitError, FitState, NigPrior, OpcodeAssignment};
use super::pattern::materialize;
use super::unify::unify_interfaces;
use crate::ingest::Corpus;
use crate::model::{HyperParams, InstanceAction, OperationInterface};

/// Early stop fires when the windowed mean log-likelihood moves less than
/// this between consecutive windows.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-4;

/// One row of the fit trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TracePoint {
    pub iteration: usize,
    pub log_lik: f64,
    pub clusters: usize,
}

/// Result of function abstraction.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionFit {
    /// One interface per opcode, in opcode order, after unification.
    pub operations: Vec<OperationInterface>,
    pub state: FitState,
    /// Summed over opcodes; iteration 0 is the initial draw.
    pub history: Vec<TracePoint>,
}

struct Chain {
    clusters: Vec<usize>,
    trace: Vec<(f64, usize)>,
}

struct Sampler<'a> {
    f: &'a OpcodeFeatures,
    prior: NigPrior,
    alpha: f64,
    stats: Vec<Option<ClusterStats>>,
    assign: Vec<usize>,
}

impl Sampler<'_> {
    fn live(&self) -> impl Iterator<Item = (usize, &ClusterStats)> {
        self.stats.iter().enumerate().filter_map(|(k, s)| s.as_ref().map(|s| (k, s)))
    }

    fn open_slot(&mut self) -> usize {
        match self.stats.iter().position(Option::is_none) {
            Some(k) => {
                self.stats[k] = Some(ClusterStats::empty(self.f));
                k
            }
            None => {
                self.stats.push(Some(ClusterStats::empty(self.f)));
                self.stats.len() - 1
            }
        }
    }

    fn place(&mut self, i: usize, k: usize) {
        self.stats[k].as_mut().expect("live cluster").add(&self.f.actions[i]);
        self.assign[i] = k;
    }

    /// Draws cluster `i` joins given weights over the live clusters plus a
    /// new one. `data` controls whether the likelihood enters the weights.
    fn draw(&mut self, i: usize, rng: &mut ChaCha8Rng, data: bool) -> usize {
        let a = &self.f.actions[i];
        let empty = ClusterStats::empty(self.f);
        let mut options: Vec<(Option<usize>, f64)> = self
            .live()
            .map(|(k, s)| {
                let lik = if data { log_predictive(a, s, self.f, &self.prior) } else { 0.0 };
                (Some(k), (s.size as f64).ln() + lik)
            })
            .collect();
        let lik = if data { log_predictive(a, &empty, self.f, &self.prior) } else { 0.0 };
        options.push((None, self.alpha.ln() + lik));
        let max = options.iter().map(|o| o.1).fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = options.iter().map(|o| (o.1 - max).exp()).sum();
        let mut u = rng.random::<f64>() * total;
        let mut chosen = options[options.len() - 1].0;
        for (k, w) in &options {
            u -= (w - max).exp();
            if u <= 0.0 {
                chosen = *k;
                break;
            }
        }
        match chosen {
            Some(k) => k,
            None => self.open_slot(),
        }
    }

    fn sweep(&mut self, rng: &mut ChaCha8Rng) {
        for i in 0..self.f.actions.len() {
            let k = self.assign[i];
            let s = self.stats[k].as_mut().expect("live cluster");
            s.remove(&self.f.actions[i]);
            if s.size == 0 {
                self.stats[k] = None;
            }
            let k = self.draw(i, rng, true);
            self.place(i, k);
        }
    }

    fn log_lik(&self) -> f64 {
        let sizes: Vec<usize> = self.live().map(|(_, s)| s.size).collect();
        crp_log_prior(&sizes, self.alpha) + self.live().map(|(_, s)| cluster_log_marginal(s, self.f, &self.prior)).sum::<f64>()
    }

    fn cluster_count(&self) -> usize {
        self.live().count()
    }
}

fn windowed_change(trace: &[(f64, usize)], window: usize) -> Option<f64> {
    if window == 0 || trace.len() < 2 * window {
        return None;
    }
    let n = trace.len();
    let mean = |s: &[(f64, usize)]| s.iter().map(|t| t.0).sum::<f64>() / window as f64;
    Some((mean(&trace[n - window..]) - mean(&trace[n - 2 * window..n - window])).abs())
}

/// Relabels clusters in order of first appearance.
fn relabel(assign: &[usize]) -> Vec<usize> {
    let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
    assign
        .iter()
        .map(|k| {
            let next = ids.len();
            *ids.entry(*k).or_insert(next)
        })
        .collect()
}

fn run_chain(f: &OpcodeFeatures, hyper: &HyperParams, stream: u64) -> Chain {
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    rng.set_stream(stream);
    let mut s = Sampler { f, prior: NigPrior::from_hyper(hyper), alpha: hyper.alpha, stats: Vec::new(), assign: vec![0; f.actions.len()] };
    for i in 0..f.actions.len() {
        let k = s.draw(i, &mut rng, false);
        s.place(i, k);
    }
    let mut trace = vec![(s.log_lik(), s.cluster_count())];
    for _ in 0..hyper.iterations {
        s.sweep(&mut rng);
        trace.push((s.log_lik(), s.cluster_count()));
        if windowed_change(&trace, hyper.convergence_window).is_some_and(|d| d < CONVERGENCE_TOLERANCE) {
            break;
        }
    }
    Chain { clusters: relabel(&s.assign), trace }
}

/// Groups corpus action indices by opcode, in opcode order.
pub(crate) fn group_by_opcode(actions: &[InstanceAction]) -> BTreeMap<&str, Vec<usize>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, a) in actions.iter().enumerate() {
        groups.entry(a.opcode.as_str()).or_default().push(i);
    }
    groups
}

/// Fits a Dirichlet-process mixture over the execution contexts of each
/// opcode and materializes the clusters as unified patterns.
///
/// Each opcode runs its own chain seeded from `hyper.seed` with the opcode's
/// position as stream id, so results do not depend on thread scheduling.
pub fn fit_function_abstraction(corpus: &Corpus, hyper: &HyperParams) -> Result<FunctionFit, FitError> {
    hyper.validate().map_err(|e| FitError::Config(e.to_string()))?;
    let groups: Vec<(&str, Vec<usize>)> = group_by_opcode(&corpus.actions).into_iter().collect();
    let chains: Vec<Chain> = groups
        .par_iter()
        .enumerate()
        .map(|(stream, (_, ids))| {
            let actions: Vec<&InstanceAction> = ids.iter().map(|&i| &corpus.actions[i]).collect();
            run_chain(&encode(&actions, hyper), hyper, stream as u64)
        })
        .collect();

    let length = chains.iter().map(|c| c.trace.len()).max().unwrap_or(1);
    let history: Vec<TracePoint> = (0..length)
        .map(|it| {
            let (mut log_lik, mut clusters) = (0.0, 0);
            for c in &chains {
                let (l, k) = c.trace[it.min(c.trace.len() - 1)];
                log_lik += l;
                clusters += k;
            }
            TracePoint { iteration: it, log_lik, clusters }
        })
        .collect();

    let mut operations = Vec::with_capacity(groups.len());
    let mut opcodes = Vec::with_capacity(groups.len());
    for ((opcode, ids), chain) in groups.iter().zip(&chains) {
        let k = chain.clusters.iter().max().map_or(0, |m| m + 1);
        let mut members: Vec<Vec<&InstanceAction>> = vec![Vec::new(); k];
        for (&id, &c) in ids.iter().zip(&chain.clusters) {
            members[c].push(&corpus.actions[id]);
        }
        let patterns = members.iter().map(|m| materialize(m, hyper)).collect();
        operations.push(OperationInterface { unique_name: opcode.to_string(), patterns: unify_interfaces(patterns) });
        opcodes.push(OpcodeAssignment { opcode: opcode.to_string(), action_ids: ids.clone(), clusters: chain.clusters.clone() });
    }
    let last = history.last().copied().unwrap_or(TracePoint { iteration: 0, log_lik: 0.0, clusters: 0 });
    Ok(FunctionFit {
        operations,
        state: FitState { opcodes, log_lik: last.log_lik, iteration: last.iteration, rng_seed: hyper.seed },
        history,
    })
}
