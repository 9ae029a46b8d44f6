//! Novelty indicators of a protocol against a corpus and the resulting
//! task kind.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::align::{iou_set, sim_exec, AlignParams};
use super::serialize::text_tokens;
use super::vector::{sim_vector, TfIdf};
use crate::ingest::{split_sentences, Corpus, ExtractionClient, OpcodeLexicon, RuleBasedClient};
use crate::model::{canonicalize, ProtocolDoc, TaskKind};

/// Fewer corpus protocols than this cannot rank a candidate.
pub const MIN_CORPUS_PROTOCOLS: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("corpus has {0} protocols, at least {MIN_CORPUS_PROTOCOLS} are needed")]
    InsufficientCorpus(usize),
}

/// Percentile cut-offs for the task classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskBands {
    pub planning: f64,
    pub modification: f64,
    pub adjustment: f64,
}

impl Default for TaskBands {
    fn default() -> Self {
        Self { planning: 20.0, modification: 40.0, adjustment: 60.0 }
    }
}

/// What the indicators need to know about a protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProtocolProfile {
    pub id: String,
    pub objective: String,
    pub opcodes: Vec<String>,
}

/// Indicator values and their percentiles within the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NoveltyIndicators {
    /// Objective similarity, opcode IoU and sequence similarity.
    pub values: [f64; 3],
    pub percentiles: [f64; 3],
}

/// Profiles a raw protocol by extracting the opcode of every sentence.
pub fn profile_doc(doc: &ProtocolDoc, client: &dyn ExtractionClient, lexicon: &OpcodeLexicon) -> ProtocolProfile {
    let opcodes = doc
        .steps
        .iter()
        .flat_map(|s| split_sentences(s, lexicon))
        .filter_map(|s| client.classify_opcode(&s).ok().flatten())
        .filter_map(|o| canonicalize(&o).ok())
        .collect();
    ProtocolProfile { id: doc.id.clone(), objective: doc.description.clone(), opcodes }
}

/// Profiles of the corpus protocols from their extracted actions.
pub fn corpus_profiles(corpus: &Corpus) -> Vec<ProtocolProfile> {
    corpus
        .docs
        .iter()
        .map(|d| ProtocolProfile {
            id: d.id.clone(),
            objective: d.description.clone(),
            opcodes: corpus.actions_of(&d.id).map(|a| a.opcode.clone()).collect(),
        })
        .collect()
}

struct Scorer {
    tfidf: TfIdf,
    params: AlignParams,
}

impl Scorer {
    fn pair(&self, a: &ProtocolProfile, b: &ProtocolProfile) -> [f64; 3] {
        let goal = sim_vector(&self.tfidf.transform(text_tokens(&a.objective)), &self.tfidf.transform(text_tokens(&b.objective)));
        let sa: BTreeSet<&String> = a.opcodes.iter().collect();
        let sb: BTreeSet<&String> = b.opcodes.iter().collect();
        [goal, iou_set(&sa, &sb), sim_exec(&a.opcodes, &b.opcodes, &self.params)]
    }

    /// Per-indicator maximum of `p` against every pool member with another id.
    fn maxima(&self, p: &ProtocolProfile, pool: &[ProtocolProfile]) -> [f64; 3] {
        let mut best = [0.0f64; 3];
        for q in pool.iter().filter(|q| q.id != p.id) {
            let s = self.pair(p, q);
            for k in 0..3 {
                best[k] = best[k].max(s[k]);
            }
        }
        best
    }
}

/// Values closer than this are ranked as ties, so rounding noise in the
/// similarity scores cannot move a task across a band.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Mid-rank percentile of `x` in `pool`: values below count fully, ties
/// count half.
pub fn percentile_rank(x: f64, pool: &[f64]) -> f64 {
    let tie = |v: f64| (v - x).abs() <= TIE_TOLERANCE;
    let below = pool.iter().filter(|&&v| v < x && !tie(v)).count() as f64;
    let ties = pool.iter().filter(|&&v| tie(v)).count() as f64;
    100.0 * (below + 0.5 * ties) / pool.len() as f64
}

/// Indicator values of `candidate` against `pool`, ranked among the pool's
/// own leave-one-out maxima.
pub fn novelty_indicators(candidate: &ProtocolProfile, pool: &[ProtocolProfile]) -> Result<NoveltyIndicators, MetricsError> {
    if pool.len() < MIN_CORPUS_PROTOCOLS {
        return Err(MetricsError::InsufficientCorpus(pool.len()));
    }
    let docs: Vec<Vec<String>> =
        pool.iter().chain(std::iter::once(candidate)).map(|p| text_tokens(&p.objective)).collect();
    let scorer = Scorer { tfidf: TfIdf::fit(&docs), params: AlignParams::default() };
    let reference: Vec<[f64; 3]> = pool.iter().map(|p| scorer.maxima(p, pool)).collect();
    let values = scorer.maxima(candidate, pool);
    let percentiles = std::array::from_fn(|k| {
        let column: Vec<f64> = reference.iter().map(|r| r[k]).collect();
        percentile_rank(values[k], &column)
    });
    Ok(NoveltyIndicators { values, percentiles })
}

/// Maps percentiles to a task kind.
pub fn task_kind(percentiles: [f64; 3], bands: &TaskBands) -> Option<TaskKind> {
    let [goal, ops, exec] = percentiles;
    if goal <= bands.planning && ops <= bands.planning {
        Some(TaskKind::Planning)
    } else if goal <= bands.modification && ops <= bands.modification && exec <= bands.modification {
        Some(TaskKind::Modification)
    } else if percentiles.iter().all(|&p| p >= bands.adjustment) {
        Some(TaskKind::Adjustment)
    } else {
        None
    }
}

/// Classifies a candidate protocol against a corpus, extracting its
/// opcodes with the rule-based extractor.
pub fn classify_task(candidate: &ProtocolDoc, corpus: &Corpus) -> Result<Option<TaskKind>, MetricsError> {
    let profile = profile_doc(candidate, &RuleBasedClient::default(), &OpcodeLexicon::default());
    let indicators = novelty_indicators(&profile, &corpus_profiles(corpus))?;
    Ok(task_kind(indicators.percentiles, &TaskBands::default()))
}
