//! Plain-text signal and annotation files.
//!
//! Signal CSV: a `fs=<rate>` line, then one sample per line.
//! Annotation CSV: optionally a `fs=<rate>` line, then one integer sample
//! index per line. Blank lines are ignored.

use std::fmt::Write as _;

use super::{AnnotationSet, EcgRecord, IngestError};

fn parse_fs(line: &str) -> Option<Result<f64, ()>> {
    let rest = line.strip_prefix("fs=")?;
    Some(rest.trim().parse::<f64>().map_err(|_| ()))
}

fn parse_err(line: usize, message: impl Into<String>) -> IngestError {
    IngestError::Parse {
        line,
        message: message.into(),
    }
}

pub fn read_csv(text: &str) -> Result<EcgRecord, IngestError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (first_no, first) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let fs = match parse_fs(first) {
        Some(Ok(fs)) if fs > 0.0 && fs.is_finite() => fs,
        Some(_) => return Err(parse_err(first_no, format!("bad sampling rate `{first}`"))),
        None => return Err(parse_err(first_no, "expected `fs=<rate>` header")),
    };
    let samples = lines
        .map(|(no, l)| match l.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(parse_err(no, format!("bad sample `{l}`"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    EcgRecord::new(samples, fs, "csv", "csv")
}

/// `default_fs` applies when the file has no `fs=` line.
pub fn read_annotations_csv(text: &str, default_fs: f64) -> Result<AnnotationSet, IngestError> {
    let mut fs = default_fs;
    let mut indices: Vec<usize> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let (no, l) = (i + 1, line.trim());
        if l.is_empty() {
            continue;
        }
        if let Some(parsed) = parse_fs(l) {
            if !indices.is_empty() {
                return Err(parse_err(no, "`fs=` must precede the indices"));
            }
            fs = parsed.map_err(|_| parse_err(no, format!("bad sampling rate `{l}`")))?;
            continue;
        }
        let idx: usize = l
            .parse()
            .map_err(|_| parse_err(no, format!("bad sample index `{l}`")))?;
        if let Some(&prev) = indices.last() {
            if idx <= prev {
                return Err(parse_err(
                    no,
                    format!("index {idx} does not follow {prev} (indices must strictly increase)"),
                ));
            }
        }
        indices.push(idx);
    }
    AnnotationSet::new(indices, fs)
}

pub fn write_csv(rec: &EcgRecord) -> String {
    let mut out = format!("fs={}\n", rec.fs);
    for v in &rec.samples {
        let _ = writeln!(out, "{v}");
    }
    out
}

pub fn write_annotations_csv(ann: &AnnotationSet) -> String {
    let mut out = format!("fs={}\n", ann.fs);
    for i in ann.indices() {
        let _ = writeln!(out, "{i}");
    }
    out
}
