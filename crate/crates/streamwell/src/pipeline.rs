//! Glue between loaded files and the core retrieval engine.

use std::collections::BTreeSet;

use streamwell_core::embedding::ConceptEmbeddings;
use streamwell_core::{ConceptLexicon, EmbeddingTable, Error, PreparedQuery, Query};

/// Queries ready to run, plus the ones that could not be encoded.
#[derive(Debug, Clone, Default)]
pub struct QueryPlan {
    pub prepared: Vec<PreparedQuery>,
    pub failed: Vec<(String, Error)>,
    pub warnings: Vec<String>,
}

/// Encodes each raw query against the lexicon. Repeated queries (after
/// normalization) are kept once.
pub fn prepare_queries(table: &EmbeddingTable, lexicon: &ConceptLexicon, raw: &[String]) -> QueryPlan {
    let concepts = ConceptEmbeddings::new(table, lexicon);
    let mut plan = QueryPlan::default();
    let missing: Vec<&str> = concepts
        .missing()
        .filter_map(|i| lexicon.name(i))
        .collect();
    if !missing.is_empty() {
        plan.warnings.push(format!(
            "{} concept(s) have no embedding and get zero similarity: {}",
            missing.len(),
            missing.join(", ")
        ));
    }
    let mut seen = BTreeSet::new();
    for text in raw {
        let query = match Query::parse(text) {
            Ok(q) => q,
            Err(e) => {
                plan.failed.push((text.clone(), e));
                continue;
            }
        };
        let label = query.normalized();
        if !seen.insert(label.clone()) {
            plan.warnings.push(format!("duplicate query {label:?} ignored"));
            continue;
        }
        match concepts.similarity(&query) {
            Ok((similarity, warnings)) => {
                plan.warnings
                    .extend(warnings.iter().map(|w| format!("query {label:?}: {w}")));
                plan.prepared.push(PreparedQuery::new(label, similarity));
            }
            Err(e) => plan.failed.push((text.clone(), e)),
        }
    }
    plan
}
