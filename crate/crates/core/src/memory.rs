//! Per-stream recency memories.
//!
//! [`PoolWindow`] pools the last `m` frames (or every frame seen, when
//! unbounded) by component-wise mean or max. [`WellState`] is a leaky
//! accumulator that keeps a single vector per stream:
//!
//! ```text
//! w_t = max((m - 1)/m * w_{t-1} + x_t/m - beta, 0)
//! ```

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PoolMode {
    Mean,
    Max,
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::LengthMismatch { expected, found });
    }
    Ok(())
}

/// Sliding-window pooling over frame vectors.
///
/// Bounded windows keep the last `m` frames in a ring buffer, evicted FIFO.
/// Before `m` frames have arrived, the pool covers the frames seen so far.
#[derive(Debug, Clone)]
pub struct PoolWindow {
    mode: PoolMode,
    window: Option<usize>,
    concepts: usize,
    // Ring buffer of `window * concepts` values; unused when unbounded.
    ring: Vec<f64>,
    filled: usize,
    seen: u64,
    sum: Vec<f64>,
    // Per-concept monotonic queues of (arrival, value) for bounded max.
    queues: Vec<VecDeque<(u64, f64)>>,
    pooled: Vec<f64>,
}

impl PoolWindow {
    /// Window over the last `m` frames.
    pub fn bounded(m: usize, mode: PoolMode, concepts: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("pool window m must be >= 1".into()));
        }
        Ok(Self::build(Some(m), mode, concepts))
    }

    /// Pools over every frame since the start of the stream.
    pub fn unbounded(mode: PoolMode, concepts: usize) -> Self {
        Self::build(None, mode, concepts)
    }

    fn build(window: Option<usize>, mode: PoolMode, concepts: usize) -> Self {
        let bounded_max = window.is_some() && mode == PoolMode::Max;
        PoolWindow {
            mode,
            window,
            concepts,
            ring: match window {
                Some(m) => vec![0.0; m * concepts],
                None => Vec::new(),
            },
            filled: 0,
            seen: 0,
            sum: vec![0.0; concepts],
            queues: if bounded_max {
                (0..concepts).map(|_| VecDeque::new()).collect()
            } else {
                Vec::new()
            },
            pooled: vec![0.0; concepts],
        }
    }

    pub fn mode(&self) -> PoolMode {
        self.mode
    }

    /// `None` for an unbounded window.
    pub fn window(&self) -> Option<usize> {
        self.window
    }

    /// Number of frames currently held: `min(m, frames_seen)`. Unbounded
    /// windows hold no frames.
    pub fn buffer_len(&self) -> usize {
        self.filled
    }

    pub fn frames_seen(&self) -> u64 {
        self.seen
    }

    /// The pool after the last update; all zeros before the first one.
    pub fn pooled(&self) -> &[f64] {
        &self.pooled
    }

    /// Appends `frame` and returns the pool over the current window.
    pub fn update(&mut self, frame: &[f64]) -> Result<&[f64]> {
        check_len(self.concepts, frame.len())?;
        match self.window {
            Some(m) => self.update_bounded(m, frame),
            None => self.update_unbounded(frame),
        }
        Ok(&self.pooled)
    }

    fn update_bounded(&mut self, m: usize, frame: &[f64]) {
        let c = self.concepts;
        let slot = (self.seen % m as u64) as usize;
        let evicting = self.filled == m;
        let cell = &mut self.ring[slot * c..(slot + 1) * c];
        match self.mode {
            PoolMode::Mean => {
                for ((s, old), &x) in self.sum.iter_mut().zip(cell.iter()).zip(frame) {
                    if evicting {
                        *s -= old;
                    }
                    *s += x;
                }
            }
            PoolMode::Max => {
                let arrival = self.seen;
                for (q, &x) in self.queues.iter_mut().zip(frame) {
                    while q.back().is_some_and(|&(_, v)| v <= x) {
                        q.pop_back();
                    }
                    q.push_back((arrival, x));
                    while q.front().is_some_and(|&(i, _)| i + m as u64 <= arrival) {
                        q.pop_front();
                    }
                }
            }
        }
        cell.copy_from_slice(frame);
        self.seen += 1;
        if !evicting {
            self.filled += 1;
        }
        match self.mode {
            PoolMode::Mean => {
                // Resynchronize the running sum once per lap to cancel drift.
                if self.seen.is_multiple_of(m as u64) {
                    self.sum.iter_mut().for_each(|s| *s = 0.0);
                    for row in self.ring.chunks_exact(c) {
                        for (s, x) in self.sum.iter_mut().zip(row) {
                            *s += x;
                        }
                    }
                }
                let n = self.filled as f64;
                for (p, s) in self.pooled.iter_mut().zip(&self.sum) {
                    *p = s / n;
                }
            }
            PoolMode::Max => {
                for (p, q) in self.pooled.iter_mut().zip(&self.queues) {
                    *p = q.front().map_or(0.0, |&(_, v)| v);
                }
            }
        }
    }

    fn update_unbounded(&mut self, frame: &[f64]) {
        let first = self.seen == 0;
        self.seen += 1;
        match self.mode {
            PoolMode::Mean => {
                let n = self.seen as f64;
                for ((s, p), &x) in self.sum.iter_mut().zip(&mut self.pooled).zip(frame) {
                    *s += x;
                    *p = *s / n;
                }
            }
            PoolMode::Max => {
                for (p, &x) in self.pooled.iter_mut().zip(frame) {
                    if first || x > *p {
                        *p = x;
                    }
                }
            }
        }
    }
}

/// Keeps the `k` largest components and zeroes the rest. Ties at the k-th
/// value keep the lowest concept index.
pub fn top_k_sparsify(values: &[f64], k: usize) -> Vec<f64> {
    let mut out = values.to_vec();
    let mut scratch = Vec::new();
    top_k_sparsify_into(values, k, &mut out, &mut scratch);
    out
}

/// Allocation-free form of [`top_k_sparsify`]: writes into `out`, which
/// must have the same length as `values`.
pub fn top_k_sparsify_into(values: &[f64], k: usize, out: &mut [f64], scratch: &mut Vec<usize>) {
    debug_assert_eq!(values.len(), out.len());
    if k >= values.len() {
        out.copy_from_slice(values);
        return;
    }
    out.iter_mut().for_each(|o| *o = 0.0);
    if k == 0 {
        return;
    }
    scratch.clear();
    scratch.extend(0..values.len());
    let by_rank = |a: &usize, b: &usize| values[*b].total_cmp(&values[*a]).then(a.cmp(b));
    scratch.select_nth_unstable_by(k - 1, by_rank);
    for &i in &scratch[..k] {
        out[i] = values[i];
    }
}

/// Leaky memory well of one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct WellState {
    m: usize,
    beta: f64,
    keep: f64,
    inflow: f64,
    w: Vec<f64>,
}

impl WellState {
    pub fn new(m: usize, beta: f64, concepts: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("well memory m must be >= 1".into()));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter("well leak beta must be > 0".into()));
        }
        Ok(WellState {
            m,
            beta,
            keep: (m - 1) as f64 / m as f64,
            inflow: 1.0 / m as f64,
            w: vec![0.0; concepts],
        })
    }

    /// Well with the default leak `beta = 1 / concepts`.
    pub fn with_default_beta(m: usize, concepts: usize) -> Result<Self> {
        if concepts == 0 {
            return Err(Error::EmptyLexicon);
        }
        Self::new(m, 1.0 / concepts as f64, concepts)
    }

    /// Restores a well from a snapshot. Components must be finite and >= 0.
    pub fn from_parts(m: usize, beta: f64, w: Vec<f64>) -> Result<Self> {
        if let Some((i, &v)) = w.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidScore { concept: i, value: v });
        }
        let mut state = Self::new(m, beta, 0)?;
        state.w = w;
        Ok(state)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn update(&mut self, frame: &[f64]) -> Result<()> {
        check_len(self.w.len(), frame.len())?;
        for (w, &x) in self.w.iter_mut().zip(frame) {
            let next = self.keep * *w + self.inflow * x - self.beta;
            *w = if next > 0.0 { next } else { 0.0 };
        }
        Ok(())
    }

    pub fn reset(&mut self) {
        self.w.iter_mut().for_each(|w| *w = 0.0);
    }
}
