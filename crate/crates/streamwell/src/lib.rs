//! File formats, command line and benchmark harness around
//! [`streamwell_core`].

pub mod bench;
pub mod cli;
pub mod config;
pub mod formats;
pub mod pipeline;

pub use streamwell_core as core;
