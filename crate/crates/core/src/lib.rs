//! Zero-shot retrieval over concurrent live video streams.
//!
//! Every frame of every stream is described by a vector of concept
//! confidences. A free-text query is mapped into the same concept space
//! through a word embedding, and each stream is scored by the inner product
//! of the query's concept similarities with a recency-weighted memory of the
//! stream: a sliding pooling window or a leaky memory well.
//!
//! The crate is `no_std` (it needs `alloc`). Parsing, file formats and the
//! command line live in the `streamwell` crate.

#![no_std]

extern crate alloc;

pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod memory;
pub mod scoring;
pub mod simulation;
pub mod stream;

mod math;

pub use embedding::{cosine, ConceptEmbeddings, EmbeddingTable, Query, SimilarityVector};
pub use error::{Error, Result, Warning};
pub use evaluation::{EvalMode, EvalReport, MemoryCandidate, QueryEvaluation, RelevanceMatrix};
pub use memory::{PoolMode, PoolWindow, WellState};
pub use scoring::{MethodKind, PreparedQuery, Ranked, RetrievalMethod, Retriever, ScoredStream};
pub use simulation::{Clip, SimulatedStream, SynthSpec};
pub use stream::{
    AnnotationInterval, ConceptLexicon, FrameScores, Provenance, Stream, StreamMeta, StreamSet,
};
