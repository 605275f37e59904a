//! Query-against-stream scoring and deterministic ranking.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::embedding::SimilarityVector;
use crate::error::{Error, Result};
use crate::math::{dot, unit_interval, KeyHasher};
use crate::memory::{top_k_sparsify_into, PoolMode, PoolWindow, WellState};

/// Default number of pooled concepts kept by top-k sparsification.
pub const DEFAULT_TOP_K: usize = 10;

/// Inner product of a query's similarity vector with a stream representation.
pub fn score_instant(similarity: &SimilarityVector, repr: &[f64]) -> Result<f64> {
    if similarity.len() != repr.len() {
        return Err(Error::LengthMismatch {
            expected: similarity.len(),
            found: repr.len(),
        });
    }
    Ok(dot(similarity.values(), repr))
}

/// Running maximum of well scores over time.
pub fn score_max_well(prev_best: Option<f64>, similarity: &SimilarityVector, w: &[f64]) -> Result<f64> {
    let now = score_instant(similarity, w)?;
    Ok(match prev_best {
        Some(best) if best >= now => best,
        _ => now,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoredStream {
    pub stream: String,
    pub score: f64,
}

impl ScoredStream {
    pub fn new(stream: impl Into<String>, score: f64) -> Self {
        ScoredStream {
            stream: stream.into(),
            score,
        }
    }
}

fn by_score_then_id(a: &ScoredStream, b: &ScoredStream) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.stream.cmp(&b.stream))
}

/// Sorts by descending score; exact ties go to the smaller stream id.
pub fn rank_streams(mut scores: Vec<ScoredStream>) -> Result<Vec<ScoredStream>> {
    let mut ids = BTreeSet::new();
    for s in &scores {
        if !s.score.is_finite() {
            return Err(Error::NonFiniteScore {
                stream: s.stream.clone(),
            });
        }
        if !ids.insert(s.stream.as_str()) {
            return Err(Error::DuplicateStream {
                stream: s.stream.clone(),
            });
        }
    }
    scores.sort_by(by_score_then_id);
    Ok(scores)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MethodKind {
    /// Current frame only.
    Frame,
    MpMean,
    MpMax,
    Well,
    MaxWell,
    /// Mean over the whole history.
    FullMean,
    /// Max over the whole history.
    FullMax,
    Random,
}

impl MethodKind {
    pub const ALL: [MethodKind; 8] = [
        MethodKind::Frame,
        MethodKind::MpMean,
        MethodKind::MpMax,
        MethodKind::Well,
        MethodKind::MaxWell,
        MethodKind::FullMean,
        MethodKind::FullMax,
        MethodKind::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodKind::Frame => "frame",
            MethodKind::MpMean => "mp_mean",
            MethodKind::MpMax => "mp_max",
            MethodKind::Well => "well",
            MethodKind::MaxWell => "max_well",
            MethodKind::FullMean => "full_mean",
            MethodKind::FullMax => "full_max",
            MethodKind::Random => "random",
        }
    }

    /// Whether the kind reads the memory length `m`.
    pub fn uses_m(self) -> bool {
        matches!(
            self,
            MethodKind::MpMean | MethodKind::MpMax | MethodKind::Well | MethodKind::MaxWell
        )
    }

    /// Whether the kind sparsifies a pooled representation.
    pub fn is_pooled(self) -> bool {
        matches!(
            self,
            MethodKind::MpMean | MethodKind::MpMax | MethodKind::FullMean | MethodKind::FullMax
        )
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        MethodKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("unknown method {s:?}")))
    }
}

/// A retrieval method and its parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RetrievalMethod {
    pub kind: MethodKind,
    pub m: usize,
    pub k: usize,
    /// Leak override for wells; `None` means `1 / C`.
    pub beta: Option<f64>,
    pub seed: u64,
}

impl RetrievalMethod {
    pub fn new(kind: MethodKind) -> Self {
        RetrievalMethod {
            kind,
            m: 1,
            k: DEFAULT_TOP_K,
            beta: None,
            seed: 0,
        }
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_beta(mut self, beta: Option<f64>) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind.uses_m() && self.m == 0 {
            return Err(Error::InvalidParameter("m must be >= 1".into()));
        }
        if self.kind.is_pooled() && self.k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if let Some(beta) = self.beta {
            if !(beta.is_finite() && beta > 0.0) {
                return Err(Error::InvalidParameter("beta must be > 0".into()));
            }
        }
        Ok(())
    }
}

/// Seeded uniform draw in [0, 1) keyed by (seed, stream, t, query).
pub fn random_score(seed: u64, stream_id: &str, t: usize, query: &str) -> f64 {
    let mut h = KeyHasher::new();
    h.write(&seed.to_le_bytes());
    h.write(stream_id.as_bytes());
    h.write(&[0xff]);
    h.write(&(t as u64).to_le_bytes());
    h.write(query.as_bytes());
    unit_interval(h.finish())
}

/// A query encoded once and reused for every stream and timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedQuery {
    /// Normalized query text; also the ground-truth label it is judged against.
    pub text: String,
    pub similarity: SimilarityVector,
}

impl PreparedQuery {
    pub fn new(text: impl Into<String>, similarity: SimilarityVector) -> Self {
        PreparedQuery {
            text: text.into(),
            similarity,
        }
    }
}

/// A stream index and its score at one timestep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ranked {
    pub stream: usize,
    pub score: f64,
}

#[derive(Debug, Clone)]
enum StreamMemory {
    Frame(Vec<f64>),
    Pooled {
        window: PoolWindow,
        sparse: Vec<f64>,
    },
    Well(WellState),
    Stateless,
}

/// Memory and scoring state for a fixed set of streams and queries.
///
/// Feed every live stream's frame for timestep `t` through [`observe`],
/// then call [`rank`] for each query.
///
/// [`observe`]: Retriever::observe
/// [`rank`]: Retriever::rank
#[derive(Debug, Clone)]
pub struct Retriever {
    method: RetrievalMethod,
    concepts: usize,
    ids: Vec<String>,
    tie_rank: Vec<usize>,
    memories: Vec<StreamMemory>,
    queries: Vec<PreparedQuery>,
    // [query][stream] running maxima for max welling.
    running_max: Vec<Vec<Option<f64>>>,
    last_t: Vec<Option<usize>>,
    scratch: Vec<usize>,
}

impl Retriever {
    pub fn new(
        method: RetrievalMethod,
        concepts: usize,
        stream_ids: &[&str],
        queries: Vec<PreparedQuery>,
    ) -> Result<Self> {
        method.validate()?;
        if concepts == 0 {
            return Err(Error::EmptyLexicon);
        }
        for q in &queries {
            if q.similarity.len() != concepts {
                return Err(Error::LengthMismatch {
                    expected: concepts,
                    found: q.similarity.len(),
                });
            }
        }
        let mut seen = BTreeSet::new();
        for id in stream_ids {
            if !seen.insert(*id) {
                return Err(Error::DuplicateStream {
                    stream: id.to_string(),
                });
            }
        }
        let mut order: Vec<usize> = (0..stream_ids.len()).collect();
        order.sort_by(|&a, &b| stream_ids[a].cmp(stream_ids[b]));
        let mut tie_rank = vec![0; stream_ids.len()];
        for (pos, &i) in order.iter().enumerate() {
            tie_rank[i] = pos;
        }
        let memories = stream_ids
            .iter()
            .map(|_| Self::fresh_memory(&method, concepts))
            .collect::<Result<Vec<_>>>()?;
        let running_max = if method.kind == MethodKind::MaxWell {
            vec![vec![None; stream_ids.len()]; queries.len()]
        } else {
            Vec::new()
        };
        Ok(Retriever {
            method,
            concepts,
            ids: stream_ids.iter().map(|s| s.to_string()).collect(),
            tie_rank,
            memories,
            queries,
            running_max,
            last_t: vec![None; stream_ids.len()],
            scratch: Vec::new(),
        })
    }

    fn fresh_memory(method: &RetrievalMethod, concepts: usize) -> Result<StreamMemory> {
        let pooled = |window: PoolWindow| StreamMemory::Pooled {
            window,
            sparse: vec![0.0; concepts],
        };
        Ok(match method.kind {
            MethodKind::Frame => StreamMemory::Frame(vec![0.0; concepts]),
            MethodKind::MpMean => pooled(PoolWindow::bounded(method.m, PoolMode::Mean, concepts)?),
            MethodKind::MpMax => pooled(PoolWindow::bounded(method.m, PoolMode::Max, concepts)?),
            MethodKind::FullMean => pooled(PoolWindow::unbounded(PoolMode::Mean, concepts)),
            MethodKind::FullMax => pooled(PoolWindow::unbounded(PoolMode::Max, concepts)),
            MethodKind::Well | MethodKind::MaxWell => StreamMemory::Well(match method.beta {
                Some(beta) => WellState::new(method.m, beta, concepts)?,
                None => WellState::with_default_beta(method.m, concepts)?,
            }),
            MethodKind::Random => StreamMemory::Stateless,
        })
    }

    pub fn method(&self) -> &RetrievalMethod {
        &self.method
    }

    pub fn stream_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn queries(&self) -> &[PreparedQuery] {
        &self.queries
    }

    pub fn concepts(&self) -> usize {
        self.concepts
    }

    /// Folds frame `t` of `stream` into its memory.
    pub fn observe(&mut self, stream: usize, t: usize, frame: &[f64]) -> Result<()> {
        if frame.len() != self.concepts {
            return Err(Error::LengthMismatch {
                expected: self.concepts,
                found: frame.len(),
            });
        }
        match &mut self.memories[stream] {
            StreamMemory::Frame(last) => last.copy_from_slice(frame),
            StreamMemory::Pooled { window, sparse } => {
                let pooled = window.update(frame)?;
                top_k_sparsify_into(pooled, self.method.k, sparse, &mut self.scratch);
            }
            StreamMemory::Well(w) => {
                w.update(frame)?;
                if self.method.kind == MethodKind::MaxWell {
                    for (q, best) in self.queries.iter().zip(&mut self.running_max) {
                        let now = dot(q.similarity.values(), w.w());
                        let slot = &mut best[stream];
                        if slot.is_none_or(|b| now > b) {
                            *slot = Some(now);
                        }
                    }
                }
            }
            StreamMemory::Stateless => {}
        }
        self.last_t[stream] = Some(t);
        Ok(())
    }

    /// The query-independent representation a query is scored against.
    /// `None` for max welling's running maxima and for the random baseline.
    pub fn representation(&self, stream: usize) -> Option<&[f64]> {
        match &self.memories[stream] {
            StreamMemory::Frame(x) => Some(x),
            StreamMemory::Pooled { sparse, .. } => Some(sparse),
            StreamMemory::Well(w) => Some(w.w()),
            StreamMemory::Stateless => None,
        }
    }

    /// Score of `stream` for query `query` at the stream's latest timestep.
    pub fn score(&self, stream: usize, query: usize) -> Result<f64> {
        let t = self.last_t[stream].ok_or(Error::TimeOutOfRange {
            t: 0,
            frame_count: 0,
        })?;
        let q = &self.queries[query];
        Ok(match self.method.kind {
            MethodKind::MaxWell => self.running_max[query][stream].unwrap_or(0.0),
            MethodKind::Random => random_score(self.method.seed, &self.ids[stream], t, &q.text),
            _ => dot(
                q.similarity.values(),
                self.representation(stream).unwrap_or(&[]),
            ),
        })
    }

    /// Ranks `live` streams for `query`, best first, into `out`.
    pub fn rank(&self, query: usize, live: &[usize], out: &mut Vec<Ranked>) -> Result<()> {
        out.clear();
        for &stream in live {
            out.push(Ranked {
                stream,
                score: self.score(stream, query)?,
            });
        }
        out.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.tie_rank[a.stream].cmp(&self.tie_rank[b.stream]))
        });
        Ok(())
    }

    /// Well state of `stream`, for snapshots.
    pub fn well(&self, stream: usize) -> Option<&WellState> {
        match &self.memories[stream] {
            StreamMemory::Well(w) => Some(w),
            _ => None,
        }
    }

    /// Replaces the well of `stream` with a previously saved one.
    pub fn restore_well(&mut self, stream: usize, state: WellState) -> Result<()> {
        if state.w().len() != self.concepts {
            return Err(Error::LengthMismatch {
                expected: self.concepts,
                found: state.w().len(),
            });
        }
        match &mut self.memories[stream] {
            StreamMemory::Well(w) => {
                *w = state;
                Ok(())
            }
            _ => Err(Error::InvalidParameter(
                "well snapshots apply to well methods only".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(v: &[f64]) -> SimilarityVector {
        SimilarityVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn instant_scores() {
        assert_eq!(score_instant(&sv(&[1.0, 0.0]), &[0.5, 0.5]).unwrap(), 0.5);
        assert_eq!(score_instant(&sv(&[0.0, 0.0]), &[0.3, 0.9]).unwrap(), 0.0);
        let s = score_instant(&sv(&[0.2, -0.1]), &[0.3, 0.7]).unwrap();
        assert!((s - -0.01).abs() < 1e-12);
        assert!(score_instant(&sv(&[1.0]), &[0.5, 0.5]).is_err());
    }

    #[test]
    fn max_well_keeps_best() {
        let s = sv(&[1.0]);
        assert_eq!(score_max_well(None, &s, &[0.3]).unwrap(), 0.3);
        assert_eq!(score_max_well(Some(0.5), &s, &[0.3]).unwrap(), 0.5);
        let mut best = None;
        for x in [0.1, 0.4, 0.2] {
            best = Some(score_max_well(best, &s, &[x]).unwrap());
        }
        assert_eq!(best, Some(0.4));
    }

    #[test]
    fn ranking_and_ties() {
        let r = rank_streams(vec![ScoredStream::new("a", 0.2), ScoredStream::new("b", 0.5)]).unwrap();
        assert_eq!(r[0].stream, "b");
        let r = rank_streams(vec![ScoredStream::new("b", 0.5), ScoredStream::new("a", 0.5)]).unwrap();
        assert_eq!(r[0].stream, "a");
        assert!(matches!(
            rank_streams(vec![ScoredStream::new("a", 0.1), ScoredStream::new("a", 0.2)]),
            Err(Error::DuplicateStream { .. })
        ));
        assert!(rank_streams(vec![ScoredStream::new("a", f64::NAN)]).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for k in MethodKind::ALL {
            assert_eq!(k.as_str().parse::<MethodKind>().unwrap(), k);
        }
        assert_eq!("MP-MEAN".parse::<MethodKind>().unwrap(), MethodKind::MpMean);
        assert!("bogus".parse::<MethodKind>().is_err());
    }

    fn retriever(kind: MethodKind, m: usize) -> Retriever {
        let q = PreparedQuery::new("dog", sv(&[1.0, 0.0]));
        Retriever::new(RetrievalMethod::new(kind).with_m(m), 2, &["b", "a"], vec![q]).unwrap()
    }

    #[test]
    fn frame_kind_scores_raw_frame() {
        let mut r = retriever(MethodKind::Frame, 1);
        r.observe(0, 0, &[0.25, 0.75]).unwrap();
        r.observe(1, 0, &[0.75, 0.25]).unwrap();
        assert_eq!(r.score(0, 0).unwrap(), 0.25);
        let mut out = Vec::new();
        r.rank(0, &[0, 1], &mut out).unwrap();
        assert_eq!(out[0].stream, 1);
    }

    #[test]
    fn well_kind_on_uniform_input_scores_zero() {
        let mut r = retriever(MethodKind::Well, 5);
        for t in 0..20 {
            r.observe(0, t, &[0.5, 0.5]).unwrap();
            assert_eq!(r.score(0, 0).unwrap(), 0.0);
        }
    }

    #[test]
    fn random_is_reproducible_and_in_range() {
        let a = random_score(7, "s1", 3, "dog");
        assert_eq!(a, random_score(7, "s1", 3, "dog"));
        assert_ne!(a, random_score(8, "s1", 3, "dog"));
        assert_ne!(a, random_score(7, "s1", 4, "dog"));
        assert!((0.0..1.0).contains(&a));
    }

    #[test]
    fn ties_go_to_smaller_id() {
        let mut r = retriever(MethodKind::Frame, 1);
        r.observe(0, 0, &[0.5, 0.5]).unwrap();
        r.observe(1, 0, &[0.5, 0.5]).unwrap();
        let mut out = Vec::new();
        r.rank(0, &[0, 1], &mut out).unwrap();
        // stream 1 is "a"
        assert_eq!(out[0].stream, 1);
    }

    #[test]
    fn rejects_invalid_methods() {
        let q = PreparedQuery::new("dog", sv(&[1.0, 0.0]));
        let bad_m = RetrievalMethod::new(MethodKind::MpMean).with_m(0);
        assert!(Retriever::new(bad_m, 2, &["a"], vec![q.clone()]).is_err());
        let bad_k = RetrievalMethod::new(MethodKind::MpMax).with_m(3).with_k(0);
        assert!(Retriever::new(bad_k, 2, &["a"], vec![q.clone()]).is_err());
        let dup = RetrievalMethod::new(MethodKind::Frame);
        assert!(Retriever::new(dup, 2, &["a", "a"], vec![q]).is_err());
    }
}
