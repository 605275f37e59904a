//! Word embeddings and query-to-concept similarity.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result, Warning};
use crate::math::{dot, norm};
use crate::stream::ConceptLexicon;

/// Token to dense vector map with a fixed dimension. Insertion order is kept
/// so tables serialize back in the order they were read.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    tokens: Vec<String>,
    data: Vec<f64>,
    index: BTreeMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(EmbeddingTable {
            dim,
            tokens: Vec::new(),
            data: Vec::new(),
            index: BTreeMap::new(),
        })
    }

    /// Adds `token`. Returns `Ok(false)` and leaves the table unchanged when
    /// the token is already present: the first occurrence wins.
    pub fn insert(&mut self, token: &str, vector: &[f64]) -> Result<bool> {
        if token.is_empty() {
            return Err(Error::EmptyToken);
        }
        if vector.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if self.index.contains_key(token) {
            return Ok(false);
        }
        self.index.insert(token.to_string(), self.tokens.len());
        self.tokens.push(token.to_string());
        self.data.extend_from_slice(vector);
        Ok(true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Entries in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> + '_ {
        self.tokens
            .iter()
            .zip(self.data.chunks_exact(self.dim))
            .map(|(t, v)| (t.as_str(), v))
    }
}

/// Cosine similarity, clamped to [-1, 1]. Zero when either vector has zero norm.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let denom = norm(u) * norm(v);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((dot(u, v) / denom).clamp(-1.0, 1.0))
}

fn split_words(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| c.is_whitespace() || c == '_')
        .filter(|w| !w.is_empty())
}

/// Embedding of a possibly multi-word concept name: the mean of the vectors
/// of its in-vocabulary words, or `None` when no word is known.
pub fn concept_vector(table: &EmbeddingTable, concept_name: &str) -> Option<Vec<f64>> {
    let mut acc = vec![0.0; table.dim()];
    let mut found = 0usize;
    for word in split_words(concept_name) {
        let word = word.to_lowercase();
        if let Some(v) = table.get(&word) {
            for (a, x) in acc.iter_mut().zip(v) {
                *a += x;
            }
            found += 1;
        }
    }
    if found == 0 {
        return None;
    }
    let n = found as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Some(acc)
}

/// A text query split into lowercase terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub raw: String,
    pub terms: Vec<String>,
}

impl Query {
    pub fn parse(raw: &str) -> Result<Self> {
        let terms: Vec<String> = raw.split_whitespace().map(str::to_lowercase).collect();
        if terms.is_empty() {
            return Err(Error::EmptyQuery);
        }
        Ok(Query {
            raw: raw.to_string(),
            terms,
        })
    }

    /// Terms joined by single spaces. Used as the ground-truth label.
    pub fn normalized(&self) -> String {
        self.terms.join(" ")
    }
}

/// Per-concept cosine similarities of a query, one entry per concept.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SimilarityVector(Vec<f64>);

impl SimilarityVector {
    /// Wraps raw values. Every value must be finite and lie in [-1, 1].
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = values
            .iter()
            .find(|v| !v.is_finite() || v.abs() > 1.0)
        {
            return Err(Error::InvalidParameter(alloc::format!(
                "similarity {bad} outside [-1, 1]"
            )));
        }
        Ok(SimilarityVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Multiplies every component by `c`. The result is no longer bounded
    /// by 1, which is why this is the only way to obtain such a vector.
    pub fn scaled(&self, c: f64) -> SimilarityVector {
        SimilarityVector(self.0.iter().map(|v| v * c).collect())
    }
}

impl AsRef<[f64]> for SimilarityVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Concept vectors of a lexicon, resolved once so that many queries can be
/// encoded without repeating the lookups.
#[derive(Debug, Clone)]
pub struct ConceptEmbeddings<'a> {
    table: &'a EmbeddingTable,
    concepts: Vec<Option<(Vec<f64>, f64)>>,
}

impl<'a> ConceptEmbeddings<'a> {
    pub fn new(table: &'a EmbeddingTable, lexicon: &ConceptLexicon) -> Self {
        let concepts = lexicon
            .names()
            .iter()
            .map(|name| {
                concept_vector(table, name).map(|v| {
                    let n = norm(&v);
                    (v, n)
                })
            })
            .collect();
        ConceptEmbeddings { table, concepts }
    }

    /// Concepts without any in-vocabulary word.
    pub fn missing(&self) -> impl Iterator<Item = usize> + '_ {
        self.concepts
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_none())
            .map(|(i, _)| i)
    }

    fn term_similarities(&self, term: &[f64], out: &mut [f64]) {
        let term_norm = norm(term);
        for (o, concept) in out.iter_mut().zip(&self.concepts) {
            *o += match concept {
                Some((v, n)) if term_norm > 0.0 && *n > 0.0 => {
                    (dot(term, v) / (term_norm * n)).clamp(-1.0, 1.0)
                }
                _ => 0.0,
            };
        }
    }

    /// Mean over in-vocabulary terms of the per-term concept similarities.
    pub fn similarity(&self, query: &Query) -> Result<(SimilarityVector, Vec<Warning>)> {
        let mut acc = vec![0.0; self.concepts.len()];
        let mut used = 0usize;
        let mut warnings = Vec::new();
        for term in &query.terms {
            match self.table.get(term) {
                Some(v) => {
                    self.term_similarities(v, &mut acc);
                    used += 1;
                }
                None => warnings.push(Warning::OutOfVocabulary { term: term.clone() }),
            }
        }
        if used == 0 {
            return Err(Error::QueryNotRepresentable {
                query: query.raw.clone(),
            });
        }
        let n = used as f64;
        for a in &mut acc {
            *a = (*a / n).clamp(-1.0, 1.0);
        }
        Ok((SimilarityVector(acc), warnings))
    }
}

/// One-shot form of [`ConceptEmbeddings::similarity`].
pub fn similarity_vector(
    table: &EmbeddingTable,
    lexicon: &ConceptLexicon,
    query: &Query,
) -> Result<(SimilarityVector, Vec<Warning>)> {
    ConceptEmbeddings::new(table, lexicon).similarity(query)
}
