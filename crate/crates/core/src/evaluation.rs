//! Temporal retrieval metrics.
//!
//! Instantaneous retrieval is scored with temporal average precision (TAP):
//! the mean of the per-timestep average precision over the timesteps at
//! which at least one stream is relevant. Continuous retrieval follows one
//! watched stream and counts zaps, i.e. changes of the watched stream or of
//! its relevance. Zap precision (ZP) is `(good zaps + steps that stay on a
//! relevant stream) / (timesteps with a relevant stream)`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scoring::{MethodKind, PreparedQuery, Ranked, RetrievalMethod, Retriever};
use crate::stream::StreamSet;

/// Non-interpolated average precision of `ranking` against `relevant`.
/// `None` when nothing is relevant.
pub fn ap_at_t<T: PartialEq>(ranking: &[T], relevant: &[T]) -> Result<Option<f64>> {
    if relevant.iter().any(|r| !ranking.contains(r)) {
        return Err(Error::RelevantNotRanked);
    }
    Ok(average_precision(ranking.iter().map(|s| relevant.contains(s))))
}

/// Average precision from relevance flags listed in rank order.
pub fn average_precision<I: IntoIterator<Item = bool>>(flags_in_rank_order: I) -> Option<f64> {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, relevant) in flags_in_rank_order.into_iter().enumerate() {
        if relevant {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    (hits > 0).then(|| sum / hits as f64)
}

/// Mean AP over the timesteps with at least one relevant stream.
pub fn tap(ap_trace: &[Option<f64>], y_any: &[bool]) -> Result<f64> {
    if ap_trace.len() != y_any.len() {
        return Err(Error::LengthMismatch {
            expected: y_any.len(),
            found: ap_trace.len(),
        });
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (t, (ap, &any)) in ap_trace.iter().zip(y_any).enumerate() {
        if any {
            sum += ap.ok_or(Error::UndefinedAp { t })?;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoRelevantTime);
    }
    Ok(sum / n as f64)
}

/// Chooses the watched stream from each timestep's ranking.
pub trait WatchPolicy {
    fn watch(&mut self, t: usize, ranking: &[usize]) -> Result<usize>;
}

/// Watches whatever is ranked first.
#[derive(Debug, Clone, Copy, Default)]
pub struct TopRanked;

impl WatchPolicy for TopRanked {
    fn watch(&mut self, t: usize, ranking: &[usize]) -> Result<usize> {
        ranking.first().copied().ok_or(Error::EmptyRanking { t })
    }
}

/// Top-ranked stream at every timestep.
pub fn watch_policy<T: Clone>(rankings: &[Vec<T>]) -> Result<Vec<T>> {
    rankings
        .iter()
        .enumerate()
        .map(|(t, r)| r.first().cloned().ok_or(Error::EmptyRanking { t }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum ZapEvent {
    GoodZap,
    BadZap,
    RemainRelevant,
    RemainIrrelevant,
}

impl ZapEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            ZapEvent::GoodZap => "GOOD_ZAP",
            ZapEvent::BadZap => "BAD_ZAP",
            ZapEvent::RemainRelevant => "REMAIN_RELEVANT",
            ZapEvent::RemainIrrelevant => "REMAIN_IRRELEVANT",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ZapTrace {
    pub events: Vec<ZapEvent>,
    pub z_plus: usize,
    pub z_minus: usize,
    pub r_plus: usize,
}

impl ZapTrace {
    fn record(&mut self, event: ZapEvent) {
        match event {
            ZapEvent::GoodZap => self.z_plus += 1,
            ZapEvent::BadZap => self.z_minus += 1,
            ZapEvent::RemainRelevant => self.r_plus += 1,
            ZapEvent::RemainIrrelevant => {}
        }
        self.events.push(event);
    }
}

/// Incremental zap accounting. Before the first step the viewer watches
/// nothing, which counts as irrelevant.
#[derive(Debug, Clone)]
pub struct ZapTracker<T> {
    previous: Option<(T, bool)>,
    trace: ZapTrace,
}

impl<T: PartialEq> Default for ZapTracker<T> {
    fn default() -> Self {
        ZapTracker {
            previous: None,
            trace: ZapTrace::default(),
        }
    }
}

impl<T: PartialEq> ZapTracker<T> {
    pub fn push(&mut self, watched: T, relevant: bool) -> ZapEvent {
        let (changed, was_relevant) = match &self.previous {
            None => (true, false),
            Some((prev, prev_rel)) => (*prev != watched, *prev_rel),
        };
        let event = if changed || relevant != was_relevant {
            if !was_relevant && relevant {
                ZapEvent::GoodZap
            } else {
                ZapEvent::BadZap
            }
        } else if relevant {
            ZapEvent::RemainRelevant
        } else {
            ZapEvent::RemainIrrelevant
        };
        self.trace.record(event);
        self.previous = Some((watched, relevant));
        event
    }

    pub fn trace(&self) -> &ZapTrace {
        &self.trace
    }

    pub fn finish(self) -> ZapTrace {
        self.trace
    }
}

/// Zap trace of a watched sequence given the relevance of the watched
/// stream at each step.
pub fn zap_events<T: PartialEq + Clone>(watched: &[T], watched_relevant: &[bool]) -> Result<ZapTrace> {
    if watched.len() != watched_relevant.len() {
        return Err(Error::LengthMismatch {
            expected: watched.len(),
            found: watched_relevant.len(),
        });
    }
    let mut tracker = ZapTracker::default();
    for (w, &r) in watched.iter().zip(watched_relevant) {
        tracker.push(w.clone(), r);
    }
    Ok(tracker.finish())
}

/// [`zap_events`] with relevance looked up in a matrix.
pub fn zap_events_in(watched: &[usize], y: &RelevanceMatrix) -> Result<ZapTrace> {
    if watched.len() != y.horizon() {
        return Err(Error::LengthMismatch {
            expected: y.horizon(),
            found: watched.len(),
        });
    }
    let flags: Vec<bool> = watched
        .iter()
        .enumerate()
        .map(|(t, &s)| y.get(s, t))
        .collect();
    zap_events(watched, &flags)
}

pub fn zap_precision(trace: &ZapTrace, y_any: &[bool]) -> Result<f64> {
    let relevant_steps = y_any.iter().filter(|&&y| y).count();
    if relevant_steps == 0 {
        return Err(Error::NoRelevantTime);
    }
    Ok((trace.z_plus + trace.r_plus) as f64 / relevant_steps as f64)
}

/// Ground-truth relevance of every stream at every timestep for one label.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceMatrix {
    y: Vec<Vec<bool>>,
    y_any: Vec<bool>,
}

impl RelevanceMatrix {
    /// Builds from per-stream flags; streams shorter than the horizon are
    /// irrelevant past their end.
    pub fn new(mut y: Vec<Vec<bool>>) -> Self {
        let horizon = y.iter().map(Vec::len).max().unwrap_or(0);
        let mut y_any = vec![false; horizon];
        for row in &mut y {
            row.resize(horizon, false);
            for (a, &r) in y_any.iter_mut().zip(row.iter()) {
                *a |= r;
            }
        }
        RelevanceMatrix { y, y_any }
    }

    pub fn from_set(set: &StreamSet, label: &str) -> Self {
        let horizon = set.horizon();
        let y = set
            .streams()
            .iter()
            .map(|s| {
                let mut row = vec![false; horizon];
                for a in s.annotations.iter().filter(|a| a.label == label) {
                    row[a.start_frame..a.end_frame].iter_mut().for_each(|r| *r = true);
                }
                row
            })
            .collect();
        Self::new(y)
    }

    pub fn get(&self, stream: usize, t: usize) -> bool {
        self.y
            .get(stream)
            .and_then(|row| row.get(t))
            .copied()
            .unwrap_or(false)
    }

    pub fn y_any(&self) -> &[bool] {
        &self.y_any
    }

    pub fn horizon(&self) -> usize {
        self.y_any.len()
    }

    pub fn streams(&self) -> usize {
        self.y.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum EvalMode {
    Instant,
    Continuous,
    Both,
}

impl EvalMode {
    pub fn instant(self) -> bool {
        matches!(self, EvalMode::Instant | EvalMode::Both)
    }

    pub fn continuous(self) -> bool {
        matches!(self, EvalMode::Continuous | EvalMode::Both)
    }
}

/// Metrics of one query.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct QueryEvaluation {
    pub query: String,
    /// Timesteps with at least one relevant stream.
    pub relevant_steps: usize,
    pub tap: Option<f64>,
    pub zp: Option<f64>,
    pub ap_trace: Vec<Option<f64>>,
    pub zaps: Option<ZapTrace>,
}

impl QueryEvaluation {
    /// Queries without any relevant timestep have undefined metrics.
    pub fn excluded(&self) -> bool {
        self.relevant_steps == 0
    }
}

/// Consumes one query's rankings timestep by timestep.
#[derive(Debug, Clone)]
pub struct QueryAccumulator<P = TopRanked> {
    y: RelevanceMatrix,
    mode: EvalMode,
    policy: P,
    next_t: usize,
    ap_trace: Vec<Option<f64>>,
    zaps: ZapTracker<usize>,
    flags: Vec<bool>,
}

impl QueryAccumulator<TopRanked> {
    pub fn new(y: RelevanceMatrix, mode: EvalMode) -> Self {
        Self::with_policy(y, mode, TopRanked)
    }
}

impl<P: WatchPolicy> QueryAccumulator<P> {
    pub fn with_policy(y: RelevanceMatrix, mode: EvalMode, policy: P) -> Self {
        QueryAccumulator {
            ap_trace: Vec::with_capacity(y.horizon()),
            y,
            mode,
            policy,
            next_t: 0,
            zaps: ZapTracker::default(),
            flags: Vec::new(),
        }
    }

    /// Feeds the ranking (stream indices, best first) of the next timestep.
    pub fn push(&mut self, ranking: &[usize]) -> Result<()> {
        let t = self.next_t;
        if t >= self.y.horizon() {
            return Err(Error::TimeOutOfRange {
                t,
                frame_count: self.y.horizon(),
            });
        }
        if ranking.is_empty() {
            return Err(Error::EmptyRanking { t });
        }
        if self.mode.instant() {
            self.flags.clear();
            self.flags.extend(ranking.iter().map(|&s| self.y.get(s, t)));
            let found = self.flags.iter().filter(|&&f| f).count();
            let expected = (0..self.y.streams()).filter(|&s| self.y.get(s, t)).count();
            if found != expected {
                return Err(Error::RelevantNotRanked);
            }
            self.ap_trace.push(average_precision(self.flags.iter().copied()));
        }
        if self.mode.continuous() {
            let watched = self.policy.watch(t, ranking)?;
            self.zaps.push(watched, self.y.get(watched, t));
        }
        self.next_t += 1;
        Ok(())
    }

    pub fn push_ranked(&mut self, ranking: &[Ranked], scratch: &mut Vec<usize>) -> Result<()> {
        scratch.clear();
        scratch.extend(ranking.iter().map(|r| r.stream));
        self.push(scratch)
    }

    pub fn finish(self, query: impl Into<String>) -> Result<QueryEvaluation> {
        if self.next_t != self.y.horizon() {
            return Err(Error::LengthMismatch {
                expected: self.y.horizon(),
                found: self.next_t,
            });
        }
        let y_any = self.y.y_any();
        let relevant_steps = y_any.iter().filter(|&&y| y).count();
        let defined = relevant_steps > 0;
        let tap = if self.mode.instant() && defined {
            Some(tap(&self.ap_trace, y_any)?)
        } else {
            None
        };
        let (zp, zaps) = if self.mode.continuous() {
            let trace = self.zaps.finish();
            let zp = if defined {
                Some(zap_precision(&trace, y_any)?)
            } else {
                None
            };
            (zp, Some(trace))
        } else {
            (None, None)
        };
        Ok(QueryEvaluation {
            query: query.into(),
            relevant_steps,
            tap,
            zp,
            ap_trace: self.ap_trace,
            zaps,
        })
    }
}

/// Per-query metrics and their unweighted means.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EvalReport {
    pub method: Option<RetrievalMethod>,
    pub mode: EvalMode,
    pub mean_tap: Option<f64>,
    pub mean_zp: Option<f64>,
    /// Queries without any relevant timestep, left out of the means.
    pub excluded: Vec<String>,
    pub queries: Vec<QueryEvaluation>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn aggregate(
    method: Option<RetrievalMethod>,
    mode: EvalMode,
    queries: Vec<QueryEvaluation>,
) -> Result<EvalReport> {
    if queries.is_empty() {
        return Err(Error::NoQueries);
    }
    let included = || queries.iter().filter(|q| !q.excluded());
    Ok(EvalReport {
        method,
        mode,
        mean_tap: mean(included().filter_map(|q| q.tap)),
        mean_zp: mean(included().filter_map(|q| q.zp)),
        excluded: queries
            .iter()
            .filter(|q| q.excluded())
            .map(|q| q.query.clone())
            .collect(),
        queries,
    })
}

/// Replays `set` frame by frame. At each timestep every live stream is
/// updated first, then `sink` receives the ranking of each query.
pub fn run_retrieval<F>(retriever: &mut Retriever, set: &StreamSet, mut sink: F) -> Result<()>
where
    F: FnMut(usize, usize, &[Ranked]) -> Result<()>,
{
    let mut live = Vec::with_capacity(set.len());
    let mut ranked = Vec::with_capacity(set.len());
    for t in 0..set.horizon() {
        live.clear();
        for (i, s) in set.streams().iter().enumerate() {
            if let Some(frame) = s.frames.get(t) {
                retriever.observe(i, t, frame.values())?;
                live.push(i);
            }
        }
        for q in 0..retriever.queries().len() {
            retriever.rank(q, &live, &mut ranked)?;
            sink(t, q, &ranked)?;
        }
    }
    Ok(())
}

pub fn new_retriever(
    set: &StreamSet,
    method: &RetrievalMethod,
    queries: &[PreparedQuery],
) -> Result<Retriever> {
    let ids: Vec<&str> = set.streams().iter().map(|s| s.id()).collect();
    Retriever::new(method.clone(), set.lexicon().len(), &ids, queries.to_vec())
}

/// Runs `method` over `set` for every query and scores the result.
pub fn evaluate(
    set: &StreamSet,
    method: &RetrievalMethod,
    queries: &[PreparedQuery],
    mode: EvalMode,
) -> Result<EvalReport> {
    let mut retriever = new_retriever(set, method, queries)?;
    let mut accs: Vec<QueryAccumulator> = queries
        .iter()
        .map(|q| QueryAccumulator::new(RelevanceMatrix::from_set(set, &q.text), mode))
        .collect();
    let mut scratch = Vec::new();
    run_retrieval(&mut retriever, set, |_, q, ranked| {
        accs[q].push_ranked(ranked, &mut scratch)
    })?;
    let per_query = accs
        .into_iter()
        .zip(queries)
        .map(|(acc, q)| acc.finish(q.text.clone()))
        .collect::<Result<Vec<_>>>()?;
    aggregate(Some(method.clone()), mode, per_query)
}

/// A memory length to try in a sweep. `Full` pools over the whole history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum MemoryCandidate {
    Frames(usize),
    Full,
}

impl core::fmt::Display for MemoryCandidate {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MemoryCandidate::Frames(m) => write!(f, "{m}"),
            MemoryCandidate::Full => f.write_str("full"),
        }
    }
}

/// `method` with its memory length set to `candidate`. For pooling,
/// `Full` switches to the unbounded variant; for wells it becomes the
/// longest stream length in frames.
pub fn method_for(method: &RetrievalMethod, candidate: MemoryCandidate, horizon: usize) -> RetrievalMethod {
    let mut out = method.clone();
    match (candidate, method.kind) {
        (MemoryCandidate::Full, MethodKind::MpMean) => out.kind = MethodKind::FullMean,
        (MemoryCandidate::Full, MethodKind::MpMax) => out.kind = MethodKind::FullMax,
        (MemoryCandidate::Full, _) => out.m = horizon.max(1),
        (MemoryCandidate::Frames(m), MethodKind::FullMean) => {
            out.kind = MethodKind::MpMean;
            out.m = m;
        }
        (MemoryCandidate::Frames(m), MethodKind::FullMax) => {
            out.kind = MethodKind::MpMax;
            out.m = m;
        }
        (MemoryCandidate::Frames(m), _) => out.m = m,
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SweepRow {
    pub candidate: MemoryCandidate,
    pub mean_tap: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub m_star: MemoryCandidate,
}

/// Picks the memory length with the best mean TAP on validation queries.
/// Ties go to the smaller memory.
pub fn sweep_memory(
    set: &StreamSet,
    queries: &[PreparedQuery],
    method: &RetrievalMethod,
    candidates: &[MemoryCandidate],
) -> Result<SweepResult> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no memory candidates".into()));
    }
    let mut ordered = candidates.to_vec();
    ordered.sort();
    ordered.dedup();
    let horizon = set.horizon();
    let mut rows = Vec::with_capacity(ordered.len());
    let mut best: Option<(MemoryCandidate, f64)> = None;
    for candidate in ordered {
        let m = method_for(method, candidate, horizon);
        let report = evaluate(set, &m, queries, EvalMode::Instant)?;
        let mean_tap = report.mean_tap.ok_or(Error::NoRelevantTime)?;
        if best.is_none_or(|(_, b)| mean_tap > b) {
            best = Some((candidate, mean_tap));
        }
        rows.push(SweepRow {
            candidate,
            mean_tap,
        });
    }
    let (m_star, _) = best.ok_or(Error::NoRelevantTime)?;
    Ok(SweepResult { rows, m_star })
}
