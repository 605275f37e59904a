//! Well snapshots: one `WELL v1 <stream_id> <m> <beta> <C floats>` line per
//! stream, for stopping and resuming long runs.

use std::io::{BufRead, Write};

use streamwell_core::WellState;

use super::{format_f64, parse_f64, push_floats, FormatError};

pub fn write_snapshot<'a, W, I>(entries: I, mut out: W) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = (&'a str, &'a WellState)>,
{
    let mut line = String::new();
    for (id, well) in entries {
        line.clear();
        line.push_str(&format!("WELL v1 {id} {} {} ", well.m(), format_f64(well.beta())));
        push_floats(&mut line, well.w());
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn parse_snapshot<R: BufRead>(source: R) -> Result<Vec<(String, WellState)>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        if fields.len() < 5 || fields[0] != "WELL" || fields[1] != "v1" {
            return Err(FormatError::syntax(lineno, "expected \"WELL v1 <id> <m> <beta> <floats>\""));
        }
        let m: usize = fields[3]
            .parse()
            .map_err(|_| FormatError::syntax(lineno, format!("bad m {:?}", fields[3])))?;
        let beta = parse_f64(fields[4], lineno)?;
        let w = fields[5..]
            .iter()
            .map(|f| parse_f64(f, lineno))
            .collect::<Result<Vec<_>, _>>()?;
        let well = WellState::from_parts(m, beta, w)
            .map_err(|source| FormatError::Invalid { line: lineno, source })?;
        out.push((fields[2].to_string(), well));
    }
    Ok(out)
}
