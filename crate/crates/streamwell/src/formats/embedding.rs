//! word2vec text format: a `<count> <dim>` header, then one
//! `<token> <dim floats>` line per entry.

use std::io::{BufRead, Write};

use streamwell_core::EmbeddingTable;

use super::{parse_f64, push_floats, FormatError, FormatWarning};

pub fn read_embedding_text<R: BufRead>(
    source: R,
) -> Result<(EmbeddingTable, Vec<FormatWarning>), FormatError> {
    let mut lines = source.lines().enumerate();
    let (declared, dim) = loop {
        let Some((i, line)) = lines.next() else {
            return Err(FormatError::syntax(1, "missing header"));
        };
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parsed = match fields.as_slice() {
            [count, dim] => count.parse::<usize>().ok().zip(dim.parse::<i64>().ok()),
            _ => None,
        };
        match parsed {
            Some((_, d)) if d <= 0 => {
                return Err(FormatError::syntax(i + 1, format!("dimension {d} must be positive")))
            }
            Some((count, d)) => break (count, d as usize),
            None => {
                return Err(FormatError::syntax(
                    i + 1,
                    format!("malformed header {line:?}, expected \"<count> <dim>\""),
                ))
            }
        }
    };
    let mut table = EmbeddingTable::new(dim)?;
    let mut warnings = Vec::new();
    let mut actual = 0usize;
    let mut values = Vec::with_capacity(dim);
    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else {
            continue;
        };
        values.clear();
        for f in fields {
            values.push(parse_f64(f, lineno)?);
        }
        if values.len() != dim {
            return Err(FormatError::syntax(
                lineno,
                format!("{} values where {dim} expected", values.len()),
            ));
        }
        actual += 1;
        if !table
            .insert(token, &values)
            .map_err(|source| FormatError::Invalid { line: lineno, source })?
        {
            warnings.push(FormatWarning::DuplicateToken {
                token: token.to_string(),
                line: lineno,
            });
        }
    }
    if actual != declared {
        warnings.push(FormatWarning::CountMismatch { declared, actual });
    }
    Ok((table, warnings))
}

pub fn write_embedding_text<W: Write>(table: &EmbeddingTable, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {}", table.len(), table.dim())?;
    let mut line = String::new();
    for (token, v) in table.iter() {
        line.clear();
        line.push_str(token);
        line.push(' ');
        push_floats(&mut line, v);
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}
