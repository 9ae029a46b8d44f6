//! Synonym merging for device and component names.

use std::collections::{BTreeMap, BTreeSet};

use super::client::{ClientError, ExtractionClient};
use crate::metrics::{sim_vector, SparseVector, TfIdf};

/// Default cosine threshold for submitting a pair to the client.
pub const DEFAULT_SYNONYM_THRESHOLD: f64 = 0.85;

/// Embeds a batch of names into comparable vectors.
pub trait Embedder: Send + Sync {
    fn embed(&self, names: &[String]) -> Vec<SparseVector>;
}

/// Character-trigram TF-IDF vectors fitted on the batch itself. Names are
/// padded with `#` so prefixes and suffixes count.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrigramEmbedder;

pub(crate) fn trigrams(name: &str) -> Vec<String> {
    let chars: Vec<char> = format!("#{name}#").chars().collect();
    chars.windows(3).map(|w| w.iter().collect()).collect()
}

impl Embedder for TrigramEmbedder {
    fn embed(&self, names: &[String]) -> Vec<SparseVector> {
        let grams: Vec<Vec<String>> = names.iter().map(|n| trigrams(n)).collect();
        let tfidf = TfIdf::fit(&grams);
        grams.iter().map(|g| tfidf.transform(g)).collect()
    }
}

/// Fixed vectors per name, for plugging in precomputed embeddings. Unknown
/// names get the zero vector.
#[derive(Debug, Clone, Default)]
pub struct TableEmbedder {
    pub vectors: BTreeMap<String, Vec<f64>>,
}

impl Embedder for TableEmbedder {
    fn embed(&self, names: &[String]) -> Vec<SparseVector> {
        names
            .iter()
            .map(|n| self.vectors.get(n).map(|v| SparseVector::from_dense(v)).unwrap_or_default())
            .collect()
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Merges synonymous names.
///
/// Pairs whose embedding cosine reaches `threshold` are sent to
/// `client.confirm_synonym`; confirmed pairs are joined transitively and
/// every member maps to the lexicographically smallest name of its group.
/// Every input name appears as a key.
pub fn merge_synonyms(
    names: &BTreeSet<String>,
    client: &dyn ExtractionClient,
    embedder: &dyn Embedder,
    threshold: f64,
) -> Result<BTreeMap<String, String>, ClientError> {
    let names: Vec<String> = names.iter().cloned().collect();
    let vectors = embedder.embed(&names);
    let mut parent: Vec<usize> = (0..names.len()).collect();
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            if find(&mut parent, i) == find(&mut parent, j) {
                continue;
            }
            if sim_vector(&vectors[i], &vectors[j]) >= threshold && client.confirm_synonym(&names[i], &names[j])? {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                // names are sorted, so the smaller index is the smaller name
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    Ok((0..names.len()).map(|i| (names[i].clone(), names[find(&mut parent, i)].clone())).collect())
}

/// Looks a name up in an alias map, leaving unknown names unchanged.
pub fn apply_alias<'a>(map: &'a BTreeMap<String, String>, name: &'a str) -> &'a str {
    map.get(name).map_or(name, String::as_str)
}
