//! Rankings as JSON lines: one `{"query", "t", "ranking": [{"stream", "score"}]}`
//! object per query and timestep.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use streamwell_core::ScoredStream;

use super::FormatError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRecord {
    pub query: String,
    pub t: usize,
    pub ranking: Vec<ScoredStream>,
}

pub fn write_record<W: Write>(record: &RankingRecord, mut out: W) -> std::io::Result<()> {
    serde_json::to_writer(&mut out, record)?;
    out.write_all(b"\n")
}

pub fn read_records<R: BufRead>(source: R) -> Result<Vec<RankingRecord>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| FormatError::syntax(i + 1, e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}
