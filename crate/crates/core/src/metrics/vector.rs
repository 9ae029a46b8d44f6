//! Sparse vectors, TF-IDF weighting and cosine similarity.

use std::collections::BTreeMap;

/// A sparse vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds from unsorted entries; duplicate indices are summed and zeros
    /// dropped.
    pub fn from_entries(entries: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, v) in entries {
            *acc.entry(i).or_insert(0.0) += v;
        }
        Self { entries: acc.into_iter().filter(|(_, v)| *v != 0.0).collect() }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        Self::from_entries(values.iter().copied().enumerate())
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut sum) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }
}

/// Cosine similarity clipped to `[0, 1]`; a zero vector scores 0 against
/// anything.
pub fn sim_vector(u: &SparseVector, v: &SparseVector) -> f64 {
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    if u == v {
        return 1.0;
    }
    (u.dot(v) / (nu * nv)).clamp(0.0, 1.0)
}

/// TF-IDF weighting fitted on a token corpus.
///
/// Term frequency is the raw count; idf is the smoothed
/// `ln((1 + n) / (1 + df)) + 1`. Tokens outside the vocabulary are ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TfIdf {
    vocab: BTreeMap<String, usize>,
    idf: Vec<f64>,
}

impl TfIdf {
    pub fn fit<D, T>(docs: D) -> Self
    where
        D: IntoIterator<Item = T>,
        T: IntoIterator,
        T::Item: AsRef<str>,
    {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        let mut n = 0usize;
        for doc in docs {
            n += 1;
            let mut seen: Vec<String> = doc.into_iter().map(|t| t.as_ref().to_string()).collect();
            seen.sort();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let mut vocab = BTreeMap::new();
        let mut idf = Vec::with_capacity(df.len());
        for (k, (term, count)) in df.into_iter().enumerate() {
            vocab.insert(term, k);
            idf.push(((1.0 + n as f64) / (1.0 + count as f64)).ln() + 1.0);
        }
        Self { vocab, idf }
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    pub fn transform<T: AsRef<str>>(&self, tokens: impl IntoIterator<Item = T>) -> SparseVector {
        SparseVector::from_entries(
            tokens.into_iter().filter_map(|t| self.vocab.get(t.as_ref()).map(|&i| (i, self.idf[i]))),
        )
    }
}
