//! Stream-set manifests (TOML). Paths are relative to the manifest file.
//!
//! ```toml
//! lexicon = "lexicon.txt"
//!
//! [[streams]]
//! id = "s1"
//! scores = "streams/s1.scores"
//!
//! [[annotations]]
//! stream = "s1"
//! label = "dog"
//! start = 0
//! end = 120
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use streamwell_core::{AnnotationInterval, ConceptLexicon, Stream, StreamSet};

use super::lexicon::parse_lexicon;
use super::scores::parse_frame_file;
use super::FormatError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub lexicon: String,
    #[serde(default)]
    pub streams: Vec<StreamEntry>,
    #[serde(default)]
    pub annotations: Vec<AnnotationEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamEntry {
    pub id: String,
    pub scores: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationEntry {
    pub stream: String,
    pub label: String,
    pub start: usize,
    pub end: usize,
}

impl Manifest {
    /// Manifest for `set`, with score files at `<scores_dir>/<id>.scores`.
    pub fn describe(set: &StreamSet, lexicon: &str, scores_dir: &str) -> Self {
        Manifest {
            lexicon: lexicon.to_string(),
            streams: set
                .streams()
                .iter()
                .map(|s| StreamEntry {
                    id: s.id().to_string(),
                    scores: format!("{scores_dir}/{}.scores", s.id()),
                })
                .collect(),
            annotations: set
                .streams()
                .iter()
                .flat_map(|s| {
                    s.annotations.iter().map(|a| AnnotationEntry {
                        stream: s.id().to_string(),
                        label: a.label.clone(),
                        start: a.start_frame,
                        end: a.end_frame,
                    })
                })
                .collect(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }
}

pub fn parse_manifest(text: &str) -> Result<Manifest, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

fn open(path: &Path) -> Result<BufReader<File>, FormatError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| FormatError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Reads the manifest at `path` and every file it references, and checks
/// them against each other.
pub fn load_manifest(path: &Path) -> Result<StreamSet, FormatError> {
    load_manifest_with(path, None)
}

/// [`load_manifest`] with the manifest's lexicon file replaced by `lexicon`.
pub fn load_manifest_with(path: &Path, lexicon: Option<&Path>) -> Result<StreamSet, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let manifest = parse_manifest(&text).map_err(|message| FormatError::Manifest {
        path: path.to_path_buf(),
        message,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    resolve_manifest(&manifest, base, lexicon).map_err(|e| match e {
        e @ (FormatError::Io { .. } | FormatError::InFile { .. } | FormatError::Manifest { .. }) => e,
        other => other.in_file(path),
    })
}

/// Like [`load_manifest`] for an already parsed manifest. `lexicon`
/// overrides the manifest's lexicon file.
pub fn resolve_manifest(
    manifest: &Manifest,
    base: &Path,
    lexicon: Option<&Path>,
) -> Result<StreamSet, FormatError> {
    let mut ids = BTreeSet::new();
    for s in &manifest.streams {
        if !ids.insert(s.id.as_str()) {
            return Err(streamwell_core::Error::DuplicateStream {
                stream: s.id.clone(),
            }
            .into());
        }
    }
    let mut by_stream: BTreeMap<&str, Vec<AnnotationInterval>> = BTreeMap::new();
    for a in &manifest.annotations {
        if !ids.contains(a.stream.as_str()) {
            return Err(streamwell_core::Error::UnknownStream {
                stream: a.stream.clone(),
            }
            .into());
        }
        by_stream
            .entry(a.stream.as_str())
            .or_default()
            .push(AnnotationInterval::new(a.label.clone(), a.start, a.end)?);
    }
    let lexicon_path = lexicon.map_or_else(|| base.join(&manifest.lexicon), Path::to_path_buf);
    let lexicon: ConceptLexicon =
        parse_lexicon(open(&lexicon_path)?).map_err(|e| e.in_file(&lexicon_path))?;
    let mut streams = Vec::with_capacity(manifest.streams.len());
    for entry in &manifest.streams {
        let scores_path: PathBuf = base.join(&entry.scores);
        let file = parse_frame_file(open(&scores_path)?, &lexicon).map_err(|e| e.in_file(&scores_path))?;
        if file.meta.stream_id != entry.id {
            return Err(FormatError::Manifest {
                path: scores_path,
                message: format!(
                    "score file holds stream {:?}, manifest lists {:?}",
                    file.meta.stream_id, entry.id
                ),
            });
        }
        let annotations = by_stream.remove(entry.id.as_str()).unwrap_or_default();
        streams.push(Stream::new(
            entry.id.clone(),
            file.meta.fps,
            file.provenance,
            file.frames,
            annotations,
        )?);
    }
    Ok(StreamSet::new(lexicon, streams)?)
}
