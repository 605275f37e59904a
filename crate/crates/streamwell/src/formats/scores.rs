//! `STREAMSCORES v1` files: a header
//! `STREAMSCORES v1 <stream_id> <C> <fps> <softmax|raw>` followed by one line
//! of C floats per frame, in time order.

use std::io::{BufRead, Write};

use streamwell_core::{ConceptLexicon, FrameScores, Provenance, StreamMeta};

use super::{parse_f64, push_floats, FormatError};

pub const MAGIC: &str = "STREAMSCORES";
pub const VERSION: &str = "v1";

/// A parsed score file.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFile {
    pub meta: StreamMeta,
    pub provenance: Provenance,
    pub frames: Vec<FrameScores>,
}

fn parse_header(line: &str, concepts: usize) -> Result<(String, f64, Provenance), FormatError> {
    let bad = |msg: String| FormatError::syntax(1, msg);
    let fields: Vec<&str> = line.split(' ').collect();
    let [magic, version, id, c, fps, prov] = fields.as_slice() else {
        return Err(bad(format!("malformed header {line:?}")));
    };
    if *magic != MAGIC || *version != VERSION {
        return Err(bad(format!("expected \"{MAGIC} {VERSION}\" header, found {line:?}")));
    }
    if id.is_empty() {
        return Err(bad("empty stream id".into()));
    }
    let c: usize = c
        .parse()
        .map_err(|_| bad(format!("bad concept count {c:?}")))?;
    if c != concepts {
        return Err(bad(format!(
            "header declares {c} concepts but the lexicon has {concepts}"
        )));
    }
    let fps = match fps.parse::<f64>() {
        Ok(f) if f.is_finite() && f > 0.0 => f,
        _ => return Err(bad(format!("bad fps {fps:?}"))),
    };
    let provenance = match *prov {
        "softmax" => Provenance::Softmax,
        "raw" => Provenance::Raw,
        other => return Err(bad(format!("unknown provenance {other:?}"))),
    };
    Ok((id.to_string(), fps, provenance))
}

pub fn parse_frame_file<R: BufRead>(
    source: R,
    lexicon: &ConceptLexicon,
) -> Result<FrameFile, FormatError> {
    let c = lexicon.len();
    let mut lines = source.lines();
    let header = lines
        .next()
        .ok_or_else(|| FormatError::syntax(1, "missing header"))??;
    let (stream_id, fps, provenance) = parse_header(header.trim_end_matches('\r'), c)?;
    let mut frames = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let values = line
            .split(' ')
            .map(|f| parse_f64(f, lineno))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != c {
            return Err(FormatError::syntax(
                lineno,
                format!("{} values where {c} expected", values.len()),
            ));
        }
        let frame = FrameScores::new(values, provenance)
            .map_err(|source| FormatError::Invalid { line: lineno, source })?;
        frames.push(frame);
    }
    Ok(FrameFile {
        meta: StreamMeta {
            stream_id,
            fps,
            frame_count: frames.len(),
        },
        provenance,
        frames,
    })
}

pub fn write_frame_file<W: Write>(
    stream_id: &str,
    fps: f64,
    provenance: Provenance,
    concepts: usize,
    frames: &[FrameScores],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(
        out,
        "{MAGIC} {VERSION} {stream_id} {concepts} {fps:?} {}",
        provenance.as_str()
    )?;
    let mut line = String::new();
    for f in frames {
        line.clear();
        push_floats(&mut line, f.values());
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(n: usize) -> ConceptLexicon {
        ConceptLexicon::new((0..n).map(|i| format!("c{i}"))).unwrap()
    }

    #[test]
    fn parses_example() {
        let f = parse_frame_file(
            "STREAMSCORES v1 s1 2 2.0 softmax\n1.0 0.0\n0.5 0.5\n".as_bytes(),
            &lex(2),
        )
        .unwrap();
        assert_eq!(f.meta.stream_id, "s1");
        assert_eq!(f.meta.frame_count, 2);
        assert_eq!(f.meta.fps, 2.0);
        assert_eq!(f.frames[1].values(), &[0.5, 0.5]);
    }

    #[test]
    fn softmax_violation_is_rejected() {
        let err = parse_frame_file(
            "STREAMSCORES v1 s1 2 2.0 softmax\n0.9 0.3\n".as_bytes(),
            &lex(2),
        )
        .unwrap_err();
        assert!(matches!(err, FormatError::Invalid { line: 2, .. }), "{err}");
        assert!(parse_frame_file("STREAMSCORES v1 s1 2 2.0 raw\n0.9 0.3\n".as_bytes(), &lex(2)).is_ok());
    }

    #[test]
    fn header_must_match_lexicon() {
        assert!(parse_frame_file("STREAMSCORES v1 s1 3 2.0 softmax\n".as_bytes(), &lex(2)).is_err());
        assert!(parse_frame_file("STREAMSCORES v2 s1 2 2.0 softmax\n".as_bytes(), &lex(2)).is_err());
        assert!(parse_frame_file("STREAMSCORES v1 s1 2 0 softmax\n".as_bytes(), &lex(2)).is_err());
        assert!(parse_frame_file("STREAMSCORES v1 s1 2 2 logits\n".as_bytes(), &lex(2)).is_err());
        assert!(parse_frame_file("".as_bytes(), &lex(2)).is_err());
    }

    #[test]
    fn bad_rows_are_rejected() {
        let head = "STREAMSCORES v1 s1 2 2.0 raw\n";
        assert!(parse_frame_file(format!("{head}1.0\n").as_bytes(), &lex(2)).is_err());
        assert!(parse_frame_file(format!("{head}1.0 -0.5\n").as_bytes(), &lex(2)).is_err());
        assert!(parse_frame_file(format!("{head}1.0 abc\n").as_bytes(), &lex(2)).is_err());
    }

    #[test]
    fn writes_header_and_rows() {
        let frames = vec![FrameScores::new(vec![1.0, 0.0], Provenance::Softmax).unwrap()];
        let mut out = Vec::new();
        write_frame_file("s1", 2.0, Provenance::Softmax, 2, &frames, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "STREAMSCORES v1 s1 2 2.0 softmax\n1.0000000000000000e0 0.0000000000000000e0\n"
        );
    }
}
