use std::io::BufRead;

/// One query per line; blank lines and lines starting with `#` are skipped.
pub fn parse_queries<R: BufRead>(source: R) -> std::io::Result<Vec<String>> {
    let mut out = Vec::new();
    for line in source.lines() {
        let line = line?;
        let q = line.trim();
        if !q.is_empty() && !q.starts_with('#') {
            out.push(q.to_string());
        }
    }
    Ok(out)
}
