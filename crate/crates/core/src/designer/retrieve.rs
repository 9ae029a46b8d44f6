//! Nearest protocols to a design objective.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::client::{LmClient, LmError};
use crate::ingest::Corpus;
use crate::metrics::{serialize_for_similarity, sim_vector, Serializable, SparseVector, TfIdf};

/// Ranked protocol ids. `truncated` is set when fewer than the requested
/// number of protocols were available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Retrieval {
    pub ids: Vec<String>,
    pub scores: Vec<f64>,
    pub truncated: bool,
}

fn rank(mut scored: Vec<(String, f64)>, k: usize) -> Retrieval {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let truncated = scored.len() < k;
    scored.truncate(k);
    let (ids, scores) = scored.into_iter().unzip();
    Retrieval { ids, scores, truncated }
}

fn dense_cosine(a: &[f64], b: &[f64]) -> f64 {
    sim_vector(&SparseVector::from_dense(a), &SparseVector::from_dense(b))
}

/// Top `k` protocols by TF-IDF cosine between the query and each protocol's
/// objective, ties broken by id. Protocols in `exclude` are skipped.
pub fn retrieve_similar(corpus: &Corpus, query: &str, k: usize, exclude: &BTreeSet<String>) -> Retrieval {
    let pool: Vec<_> = corpus.docs.iter().filter(|d| !exclude.contains(&d.id)).collect();
    let docs: Vec<Vec<String>> = pool
        .iter()
        .map(|d| serialize_for_similarity(Serializable::Text(&d.description)))
        .chain(std::iter::once(serialize_for_similarity(Serializable::Text(query))))
        .collect();
    let tfidf = TfIdf::fit(&docs);
    let q = tfidf.transform(&docs[pool.len()]);
    let scored = pool.iter().zip(&docs).map(|(d, tokens)| (d.id.clone(), sim_vector(&q, &tfidf.transform(tokens)))).collect();
    rank(scored, k)
}

/// Like [`retrieve_similar`], but uses the client's embeddings when it
/// provides them.
pub fn retrieve_similar_with(
    corpus: &Corpus,
    query: &str,
    k: usize,
    exclude: &BTreeSet<String>,
    client: &dyn LmClient,
) -> Result<Retrieval, LmError> {
    let Some(q) = client.embed(query)? else {
        return Ok(retrieve_similar(corpus, query, k, exclude));
    };
    let mut scored = Vec::new();
    for d in corpus.docs.iter().filter(|d| !exclude.contains(&d.id)) {
        match client.embed(&d.description)? {
            Some(v) => scored.push((d.id.clone(), dense_cosine(&q, &v))),
            None => return Ok(retrieve_similar(corpus, query, k, exclude)),
        }
    }
    Ok(rank(scored, k))
}

/// Slots of the retrieval prompt, listing candidates as `id: title` lines.
pub fn rerank_slots(corpus: &Corpus, title: &str, candidates: &[String]) -> BTreeMap<&'static str, String> {
    let context = candidates
        .iter()
        .filter_map(|id| corpus.doc(id))
        .map(|d| format!("{}: {}", d.id, d.title))
        .collect::<Vec<_>>()
        .join("\n");
    BTreeMap::from([("title", title.to_string()), ("context", context)])
}

/// Ids from a comma-separated answer that name a candidate, in answer order.
/// Falls back to the candidate order when none do.
pub fn parse_rerank(answer: &str, candidates: &[String], k: usize) -> Vec<String> {
    let mut picked: Vec<String> = Vec::new();
    for id in answer.split([',', '\n']).map(str::trim) {
        if candidates.iter().any(|c| c == id) && !picked.iter().any(|p| p == id) {
            picked.push(id.to_string());
        }
    }
    if picked.is_empty() {
        picked = candidates.to_vec();
    }
    picked.truncate(k);
    picked
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rerank_parsing() {
        let c: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        assert_eq!(parse_rerank("c, a, zz, c", &c, 3), vec!["c", "a"]);
        assert_eq!(parse_rerank("nothing useful", &c, 3), vec!["a", "b", "c"]);
    }
}
