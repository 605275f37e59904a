//! Concept lexicons, per-frame concept scores, stream metadata and
//! ground-truth annotations.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Allowed deviation of a softmax frame's sum from 1.
pub const SOFTMAX_TOLERANCE: f64 = 1e-3;

/// Ordered list of concept names. A concept's position is its id.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptLexicon {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl ConceptLexicon {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::EmptyLexicon);
        }
        let mut index = BTreeMap::new();
        for (i, name) in names.iter().enumerate() {
            if name.trim().is_empty() {
                return Err(Error::EmptyConceptName { index: i });
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateConcept { name: name.clone() });
            }
        }
        Ok(ConceptLexicon { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }
}

/// Where a stream's concept scores come from. Softmax scores must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Provenance {
    Softmax,
    Raw,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Softmax => "softmax",
            Provenance::Raw => "raw",
        }
    }
}

/// Concept confidences of a single frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameScores(Vec<f64>);

impl FrameScores {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        for (concept, &value) in values.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidScore { concept, value });
            }
        }
        if provenance == Provenance::Softmax {
            let sum: f64 = values.iter().sum();
            if (sum - 1.0).abs() > SOFTMAX_TOLERANCE {
                return Err(Error::SoftmaxSum { sum });
            }
        }
        Ok(FrameScores(values))
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

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for FrameScores {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamMeta {
    pub stream_id: String,
    pub fps: f64,
    pub frame_count: usize,
}

/// A labeled half-open frame range `[start_frame, end_frame)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnnotationInterval {
    pub label: String,
    pub start_frame: usize,
    pub end_frame: usize,
}

impl AnnotationInterval {
    pub fn new(label: impl Into<String>, start_frame: usize, end_frame: usize) -> Result<Self> {
        if end_frame <= start_frame {
            return Err(Error::InvalidInterval {
                start: start_frame,
                end: end_frame,
            });
        }
        Ok(AnnotationInterval {
            label: label.into(),
            start_frame,
            end_frame,
        })
    }

    pub fn contains(&self, t: usize) -> bool {
        self.start_frame <= t && t < self.end_frame
    }

    pub fn len(&self) -> usize {
        self.end_frame - self.start_frame
    }

    pub fn is_empty(&self) -> bool {
        self.end_frame <= self.start_frame
    }

    pub fn shifted(&self, offset: usize) -> Self {
        AnnotationInterval {
            label: self.label.clone(),
            start_frame: self.start_frame + offset,
            end_frame: self.end_frame + offset,
        }
    }
}

pub(crate) fn check_intervals(
    owner: &str,
    intervals: &[AnnotationInterval],
    frame_count: usize,
) -> Result<()> {
    for a in intervals {
        if a.end_frame <= a.start_frame {
            return Err(Error::InvalidInterval {
                start: a.start_frame,
                end: a.end_frame,
            });
        }
        if a.end_frame > frame_count {
            return Err(Error::IntervalOutOfRange {
                owner: owner.to_string(),
                start: a.start_frame,
                end: a.end_frame,
                frame_count,
            });
        }
    }
    Ok(())
}

/// Anything carrying annotation intervals over a known number of frames.
pub trait Annotated {
    fn frame_count(&self) -> usize;
    fn annotations(&self) -> &[AnnotationInterval];

    /// True iff some interval with `label` contains frame `t`.
    fn relevant(&self, label: &str, t: usize) -> Result<bool> {
        let frame_count = self.frame_count();
        if t >= frame_count {
            return Err(Error::TimeOutOfRange { t, frame_count });
        }
        Ok(self
            .annotations()
            .iter()
            .any(|a| a.label == label && a.contains(t)))
    }
}

/// One stream: metadata, its frames in time order and its annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    pub meta: StreamMeta,
    pub provenance: Provenance,
    pub frames: Vec<FrameScores>,
    pub annotations: Vec<AnnotationInterval>,
}

impl Stream {
    pub fn new(
        stream_id: impl Into<String>,
        fps: f64,
        provenance: Provenance,
        frames: Vec<FrameScores>,
        annotations: Vec<AnnotationInterval>,
    ) -> Result<Self> {
        let stream_id = stream_id.into();
        if stream_id.is_empty() {
            return Err(Error::EmptyStreamId);
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::InvalidFps { stream: stream_id });
        }
        check_intervals(&stream_id, &annotations, frames.len())?;
        Ok(Stream {
            meta: StreamMeta {
                stream_id,
                fps,
                frame_count: frames.len(),
            },
            provenance,
            frames,
            annotations,
        })
    }

    pub fn id(&self) -> &str {
        &self.meta.stream_id
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

impl Annotated for Stream {
    fn frame_count(&self) -> usize {
        self.frames.len()
    }

    fn annotations(&self) -> &[AnnotationInterval] {
        &self.annotations
    }
}

/// Concurrent streams sharing one concept lexicon.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSet {
    lexicon: ConceptLexicon,
    streams: Vec<Stream>,
}

impl StreamSet {
    pub fn new(lexicon: ConceptLexicon, streams: Vec<Stream>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for s in &streams {
            if !ids.insert(s.id()) {
                return Err(Error::DuplicateStream {
                    stream: s.id().to_string(),
                });
            }
            for f in &s.frames {
                if f.len() != lexicon.len() {
                    return Err(Error::LengthMismatch {
                        expected: lexicon.len(),
                        found: f.len(),
                    });
                }
            }
            if s.meta.frame_count != s.frames.len() {
                return Err(Error::LengthMismatch {
                    expected: s.meta.frame_count,
                    found: s.frames.len(),
                });
            }
            check_intervals(s.id(), &s.annotations, s.frames.len())?;
        }
        Ok(StreamSet { lexicon, streams })
    }

    pub fn lexicon(&self) -> &ConceptLexicon {
        &self.lexicon
    }

    pub fn streams(&self) -> &[Stream] {
        &self.streams
    }

    pub fn len(&self) -> usize {
        self.streams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }

    /// Number of timesteps until the longest stream ends.
    pub fn horizon(&self) -> usize {
        self.streams.iter().map(Stream::len).max().unwrap_or(0)
    }

    pub fn stream_index(&self, id: &str) -> Option<usize> {
        self.streams.iter().position(|s| s.id() == id)
    }

    /// Distinct annotation labels in first-seen order.
    pub fn labels(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for s in &self.streams {
            for a in &s.annotations {
                if seen.insert(a.label.as_str()) {
                    out.push(a.label.clone());
                }
            }
        }
        out
    }
}
