//! Run configuration: an optional TOML file overlaid by command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

/// Inputs and parameters shared by the retrieval commands. Every field is
/// optional so that a config file and flags can be merged.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Concept lexicon, one name per line (overrides the manifest's).
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Word embeddings in word2vec text format.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Stream-set manifest (TOML).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// frame, mp_mean, mp_max, well, max_well, full_mean, full_max or random.
    #[arg(long)]
    pub method: Option<String>,
    /// Memory length in frames.
    #[arg(long)]
    pub m: Option<usize>,
    /// Concepts kept after pooling.
    #[arg(long)]
    pub k: Option<usize>,
    /// Well leak; defaults to 1/C.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Frames per second.
    #[arg(long)]
    pub fps: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// File with one query per line; '#' starts a comment.
    #[arg(long = "queries")]
    #[serde(rename = "queries")]
    pub queries_file: Option<PathBuf>,
    /// Inline query; repeatable.
    #[arg(long = "query")]
    #[serde(default)]
    pub query: Vec<String>,
    /// Output path; stdout when absent for streaming outputs.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Reads a TOML config. Relative paths are taken relative to the file.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.lexicon,
            &mut cfg.embeddings,
            &mut cfg.manifest,
            &mut cfg.queries_file,
            &mut cfg.out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// `self` with every field set in `flags` replaced by the flag value.
    pub fn overlay(self, flags: RunConfig) -> RunConfig {
        RunConfig {
            lexicon: flags.lexicon.or(self.lexicon),
            embeddings: flags.embeddings.or(self.embeddings),
            manifest: flags.manifest.or(self.manifest),
            method: flags.method.or(self.method),
            m: flags.m.or(self.m),
            k: flags.k.or(self.k),
            beta: flags.beta.or(self.beta),
            fps: flags.fps.or(self.fps),
            seed: flags.seed.or(self.seed),
            queries_file: flags.queries_file.or(self.queries_file),
            query: if flags.query.is_empty() {
                self.query
            } else {
                flags.query
            },
            out: flags.out.or(self.out),
        }
    }

    /// Input files named by the config that do not exist.
    pub fn missing_paths(&self) -> Vec<&Path> {
        [&self.lexicon, &self.embeddings, &self.manifest, &self.queries_file]
            .into_iter()
            .flatten()
            .map(PathBuf::as_path)
            .filter(|p| !p.exists())
            .collect()
    }
}
