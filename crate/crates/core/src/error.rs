use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("vector length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("embedding dimension must be positive")]
    ZeroDimension,
    #[error("empty token")]
    EmptyToken,
    #[error("query has no terms")]
    EmptyQuery,
    #[error("no term of query {query:?} is in the embedding vocabulary")]
    QueryNotRepresentable { query: String },
    #[error("concept lexicon is empty")]
    EmptyLexicon,
    #[error("empty concept name at index {index}")]
    EmptyConceptName { index: usize },
    #[error("duplicate concept name {name:?}")]
    DuplicateConcept { name: String },
    #[error("score {value} of concept {concept} is negative or not finite")]
    InvalidScore { concept: usize, value: f64 },
    #[error("softmax frame sums to {sum}, outside 1 +/- 1e-3")]
    SoftmaxSum { sum: f64 },
    #[error("stream {stream:?}: fps must be positive and finite")]
    InvalidFps { stream: String },
    #[error("empty stream id")]
    EmptyStreamId,
    #[error("duplicate stream id {stream:?}")]
    DuplicateStream { stream: String },
    #[error("unknown stream {stream:?}")]
    UnknownStream { stream: String },
    #[error("interval [{start}, {end}) is empty or inverted")]
    InvalidInterval { start: usize, end: usize },
    #[error("interval [{start}, {end}) of {owner:?} exceeds frame count {frame_count}")]
    IntervalOutOfRange {
        owner: String,
        start: usize,
        end: usize,
        frame_count: usize,
    },
    #[error("frame index {t} out of range for {frame_count} frames")]
    TimeOutOfRange { t: usize, frame_count: usize },
    #[error("score is not finite for stream {stream:?}")]
    NonFiniteScore { stream: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("clip list is empty")]
    EmptyClips,
    #[error("clip {clip:?} has no frames")]
    EmptyClip { clip: String },
    #[error("no timestep has a relevant stream")]
    NoRelevantTime,
    #[error("relevant stream is missing from the ranking")]
    RelevantNotRanked,
    #[error("AP undefined at t={t} although a relevant stream exists")]
    UndefinedAp { t: usize },
    #[error("empty ranking at t={t}")]
    EmptyRanking { t: usize },
    #[error("no queries to aggregate")]
    NoQueries,
}

/// Non-fatal conditions recorded while processing.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Warning {
    /// A query term with no embedding was dropped from the mean.
    OutOfVocabulary { term: String },
}

impl core::fmt::Display for Warning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Warning::OutOfVocabulary { term } => {
                write!(f, "query term {term:?} is out of vocabulary and was dropped")
            }
        }
    }
}
