use std::io::{BufRead, Write};

use streamwell_core::ConceptLexicon;

use super::FormatError;

/// One concept name per line; blank lines are skipped.
pub fn parse_lexicon<R: BufRead>(source: R) -> Result<ConceptLexicon, FormatError> {
    let mut names = Vec::new();
    for line in source.lines() {
        let line = line?;
        let name = line.trim();
        if !name.is_empty() {
            names.push(name.to_string());
        }
    }
    Ok(ConceptLexicon::new(names)?)
}

pub fn write_lexicon<W: Write>(lexicon: &ConceptLexicon, mut out: W) -> std::io::Result<()> {
    for name in lexicon.names() {
        writeln!(out, "{name}")?;
    }
    Ok(())
}
