//! Long-stream construction from short labeled clips, and a synthetic
//! drifting-topic generator with planted ground truth.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::stream::{
    check_intervals, Annotated, AnnotationInterval, ConceptLexicon, FrameScores, Provenance,
    Stream, StreamSet,
};

/// Generator for stream `index` of a run seeded with `seed`.
fn stream_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// A short labeled video.
#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    pub clip_id: String,
    pub frames: Vec<FrameScores>,
    pub labels: Vec<AnnotationInterval>,
}

impl Clip {
    pub fn new(
        clip_id: impl Into<String>,
        frames: Vec<FrameScores>,
        labels: Vec<AnnotationInterval>,
    ) -> Result<Self> {
        let clip_id = clip_id.into();
        check_intervals(&clip_id, &labels, frames.len())?;
        Ok(Clip {
            clip_id,
            frames,
            labels,
        })
    }
}

impl From<Stream> for Clip {
    fn from(s: Stream) -> Self {
        Clip {
            clip_id: s.meta.stream_id,
            frames: s.frames,
            labels: s.annotations,
        }
    }
}

impl Annotated for Clip {
    fn frame_count(&self) -> usize {
        self.frames.len()
    }

    fn annotations(&self) -> &[AnnotationInterval] {
        &self.labels
    }
}

/// Where a segment of a simulated stream came from.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Segment {
    pub clip_id: String,
    /// Index of the source clip in the input list.
    pub clip_index: usize,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedStream {
    pub stream_id: String,
    pub segments: Vec<Segment>,
    pub frames: Vec<FrameScores>,
    pub annotations: Vec<AnnotationInterval>,
}

impl SimulatedStream {
    pub fn into_stream(self, fps: f64, provenance: Provenance) -> Result<Stream> {
        Stream::new(self.stream_id, fps, provenance, self.frames, self.annotations)
    }
}

impl Annotated for SimulatedStream {
    fn frame_count(&self) -> usize {
        self.frames.len()
    }

    fn annotations(&self) -> &[AnnotationInterval] {
        &self.annotations
    }
}

/// True iff some annotation of `stream` labeled `label` covers frame `t`.
pub fn relevance<A: Annotated + ?Sized>(stream: &A, label: &str, t: usize) -> Result<bool> {
    stream.relevant(label, t)
}

/// Concatenates randomly drawn clips (with replacement) into `count` streams
/// until each holds at least `min_duration_s * fps` frames. Whole clips are
/// appended, so the last one may overshoot the minimum.
pub fn build_long_streams(
    clips: &[Clip],
    count: usize,
    min_duration_s: f64,
    fps: f64,
    seed: u64,
) -> Result<Vec<SimulatedStream>> {
    if clips.is_empty() {
        return Err(Error::EmptyClips);
    }
    if let Some(c) = clips.iter().find(|c| c.frames.is_empty()) {
        return Err(Error::EmptyClip {
            clip: c.clip_id.clone(),
        });
    }
    if count == 0 {
        return Err(Error::InvalidParameter("stream count must be >= 1".into()));
    }
    if !(min_duration_s.is_finite() && min_duration_s > 0.0) {
        return Err(Error::InvalidParameter("minimum duration must be > 0".into()));
    }
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::InvalidParameter("fps must be > 0".into()));
    }
    let min_frames = min_duration_s * fps;
    let width = count.to_string().len().max(3);
    (0..count)
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let mut out = SimulatedStream {
                stream_id: format!("long{i:0width$}"),
                segments: Vec::new(),
                frames: Vec::new(),
                annotations: Vec::new(),
            };
            while (out.frames.len() as f64) < min_frames {
                let clip_index = rng.gen_range(0..clips.len());
                let clip = &clips[clip_index];
                let offset = out.frames.len();
                out.segments.push(Segment {
                    clip_id: clip.clip_id.clone(),
                    clip_index,
                    offset,
                    len: clip.frames.len(),
                });
                out.frames.extend(clip.frames.iter().cloned());
                out.annotations
                    .extend(clip.labels.iter().map(|a| a.shifted(offset)));
            }
            Ok(out)
        })
        .collect()
}

/// Words used to name synthetic concepts. Beyond the list, names get a
/// numeric suffix.
const CONCEPT_WORDS: &[&str] = &[
    "dog", "cat", "horse", "bicycle", "guitar", "piano", "soccer", "tennis", "surfing", "skiing",
    "cooking", "dancing", "painting", "swimming", "running", "climbing", "boxing", "fishing",
    "kayaking", "skating", "juggling", "knitting", "welding", "drumming", "singing", "archery",
    "bowling", "golf", "hockey", "rugby", "cricket", "baseball", "volleyball", "basketball",
    "snowboarding", "sailing", "rowing", "diving", "yoga", "karate", "fencing", "wrestling",
    "gardening", "baking", "camping", "hiking", "parade", "concert", "wedding", "fireworks",
    "traffic", "beach", "forest", "desert", "mountain", "river", "kitchen", "stadium", "church",
    "market", "airport", "harbor", "bridge", "tractor",
];

/// Name of synthetic concept `i`.
pub fn concept_name(i: usize) -> String {
    let n = CONCEPT_WORDS.len();
    if i < n {
        CONCEPT_WORDS[i].to_string()
    } else {
        format!("{}{}", CONCEPT_WORDS[i % n], i / n)
    }
}

/// Parameters of the synthetic drifting-topic generator.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthSpec {
    pub streams: usize,
    pub concepts: usize,
    pub frames: usize,
    pub topic_min: usize,
    pub topic_max: usize,
    /// Softmax mass given to the signal concept of a frame, in (0, 1].
    pub strength: f64,
    /// Per-frame probability that the signal lands on a random other
    /// concept, and relative jitter of the background mass. In [0, 1].
    pub noise: f64,
    pub fps: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            streams: 10,
            concepts: 20,
            frames: 600,
            topic_min: 50,
            topic_max: 150,
            strength: 0.6,
            noise: 0.1,
            fps: 2.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if self.streams == 0 {
            return bad("streams must be >= 1");
        }
        if self.concepts == 0 {
            return bad("concepts must be >= 1");
        }
        if self.frames == 0 {
            return bad("frames must be >= 1");
        }
        if self.topic_min == 0 || self.topic_min > self.topic_max {
            return bad("topic length range must satisfy 1 <= min <= max");
        }
        if self.topic_min > self.frames {
            return bad("minimum topic length exceeds stream length");
        }
        if !(self.strength > 0.0 && self.strength <= 1.0) {
            return bad("strength must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return bad("noise must lie in [0, 1]");
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return bad("fps must be > 0");
        }
        Ok(())
    }

    pub fn lexicon(&self) -> Result<ConceptLexicon> {
        ConceptLexicon::new((0..self.concepts).map(concept_name))
    }
}

fn synth_frame(spec: &SynthSpec, planted: usize, rng: &mut ChaCha8Rng) -> Result<FrameScores> {
    let c = spec.concepts;
    let mut signal = planted;
    if c > 1 && spec.noise > 0.0 && rng.gen_bool(spec.noise) {
        signal = rng.gen_range(0..c - 1);
        if signal >= planted {
            signal += 1;
        }
    }
    let background = 1.0 - spec.strength;
    let mut x: Vec<f64> = (0..c)
        .map(|_| {
            if spec.noise > 0.0 {
                1.0 + spec.noise * rng.gen::<f64>()
            } else {
                1.0
            }
        })
        .collect();
    let jitter_total: f64 = x.iter().sum();
    for v in &mut x {
        *v *= background / jitter_total;
    }
    x[signal] += spec.strength;
    let total: f64 = x.iter().sum();
    for v in &mut x {
        *v /= total;
    }
    FrameScores::new(x, Provenance::Softmax)
}

/// Generates drifting-topic streams. Each stream is cut into random-length
/// topic segments; inside a segment one planted concept carries `strength`
/// of the softmax mass and the segment is annotated with that concept name.
pub fn synth_generate(spec: &SynthSpec) -> Result<StreamSet> {
    spec.validate()?;
    let lexicon = spec.lexicon()?;
    let width = spec.streams.to_string().len().max(3);
    let mut streams = Vec::with_capacity(spec.streams);
    for i in 0..spec.streams {
        let mut rng = stream_rng(spec.seed, i);
        let mut frames = Vec::with_capacity(spec.frames);
        let mut annotations = Vec::new();
        let mut previous: Option<usize> = None;
        while frames.len() < spec.frames {
            let len = rng
                .gen_range(spec.topic_min..=spec.topic_max)
                .min(spec.frames - frames.len());
            let planted = match previous {
                Some(p) if spec.concepts > 1 => {
                    let c = rng.gen_range(0..spec.concepts - 1);
                    if c >= p {
                        c + 1
                    } else {
                        c
                    }
                }
                _ => rng.gen_range(0..spec.concepts),
            };
            previous = Some(planted);
            let start = frames.len();
            for _ in 0..len {
                frames.push(synth_frame(spec, planted, &mut rng)?);
            }
            annotations.push(AnnotationInterval::new(
                lexicon.name(planted).unwrap_or_default(),
                start,
                start + len,
            )?);
        }
        streams.push(Stream::new(
            format!("syn{i:0width$}"),
            spec.fps,
            Provenance::Softmax,
            frames,
            annotations,
        )?);
    }
    StreamSet::new(lexicon, streams)
}

/// Embedding that gives every concept name its own basis vector, so each
/// concept name used as a query selects exactly that concept.
pub fn synthetic_embedding(lexicon: &ConceptLexicon) -> Result<EmbeddingTable> {
    let dim = lexicon.len();
    let mut table = EmbeddingTable::new(dim)?;
    let mut v = vec![0.0; dim];
    for (i, name) in lexicon.names().iter().enumerate() {
        v[i] = 1.0;
        table.insert(&name.to_lowercase(), &v)?;
        v[i] = 0.0;
    }
    Ok(table)
}
