//! Reader for the LIBSVM sparse text format (`label idx:val idx:val ...`).

use std::io::BufRead;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::Dataset;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: label {label} makes the label set unmappable to {{-1, +1}}")]
    UnmappableLabels { line: usize, label: f64 },
    #[error("no samples")]
    NoSamples,
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// The label sets accepted, each with its map onto `{-1, +1}`.
const LABEL_MAPS: [(f64, f64); 3] = [(-1.0, 1.0), (0.0, 1.0), (1.0, 2.0)];

/// Parses LIBSVM text into a dense [`Dataset`].
///
/// Indices are 1-based and strictly increasing within a line; absent entries
/// are zero and the feature count is the largest index seen. Blank lines and
/// lines starting with `#` are skipped. Labels drawn from `{-1,+1}`, `{0,1}` or
/// `{1,2}` are mapped to `{-1,+1}` (the smaller value becomes `-1`).
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Dataset, ParseError> {
    let mut labels: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;
    let mut viable = [true; 3];

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let label_tok = tokens.next().expect("nonempty line has a token");
        let label: f64 = label_tok.parse().map_err(|_| ParseError::Malformed {
            line: lineno,
            message: format!("bad label '{label_tok}'"),
        })?;
        for (ok, (neg, pos)) in viable.iter_mut().zip(LABEL_MAPS) {
            *ok &= label == neg || label == pos;
        }
        if !viable.iter().any(|&v| v) {
            return Err(ParseError::UnmappableLabels {
                line: lineno,
                label,
            });
        }

        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let malformed = |message: String| ParseError::Malformed {
                line: lineno,
                message,
            };
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| malformed(format!("expected idx:val, got '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| malformed(format!("bad index in '{tok}'")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| malformed(format!("bad value in '{tok}'")))?;
            if idx == 0 {
                return Err(malformed("indices are 1-based".into()));
            }
            if idx <= last {
                return Err(malformed(format!(
                    "index {idx} does not increase (previous {last})"
                )));
            }
            if !val.is_finite() {
                return Err(malformed(format!("non-finite value in '{tok}'")));
            }
            last = idx;
            row.push((idx, val));
        }
        max_index = max_index.max(last);
        labels.push(label);
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(ParseError::NoSamples);
    }
    let (neg, _) = LABEL_MAPS[viable.iter().position(|&v| v).expect("checked above")];
    let labels = DVector::from_iterator(
        labels.len(),
        labels.iter().map(|&l| if l == neg { -1.0 } else { 1.0 }),
    );
    let n = rows.len();
    let d = max_index.max(1);
    let mut features = DMatrix::zeros(n, d);
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            features[(i, j - 1)] = v;
        }
    }
    Ok(Dataset::new(features, labels).expect("shape is consistent by construction"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn parse(s: &str) -> Result<Dataset, ParseError> {
        parse_libsvm(s.as_bytes())
    }

    #[test]
    fn dense_layout() {
        let ds = parse("+1 1:0.5 3:2\n-1 2:1").unwrap();
        assert_eq!(ds.features, dmatrix![0.5, 0.0, 2.0; 0.0, 1.0, 0.0]);
        assert_eq!(ds.labels.as_slice(), &[1.0, -1.0]);
    }

    #[test]
    fn empty_input() {
        assert_eq!(parse("").unwrap_err().to_string(), "no samples");
        assert_eq!(parse("\n# just a comment\n\n").unwrap_err().to_string(), "no samples");
    }

    #[test]
    fn label_remaps() {
        let ds = parse("0 1:1\n1 1:2\n0 2:3").unwrap();
        assert_eq!(ds.labels.as_slice(), &[-1.0, 1.0, -1.0]);
        let ds = parse("2 1:1\n1 1:2").unwrap();
        assert_eq!(ds.labels.as_slice(), &[1.0, -1.0]);
        let ds = parse("1 1:1\n1 1:2").unwrap();
        assert_eq!(ds.labels.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn unmappable_label_reports_line() {
        match parse("0 1:1\n1 1:1\n# c\n2 1:1").unwrap_err() {
            ParseError::UnmappableLabels { line, label } => {
                assert_eq!(line, 4);
                assert_eq!(label, 2.0);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn malformed_tokens() {
        for (text, line) in [
            ("1 1:1\n1 2:x", 2),
            ("1 1:1 1:2", 1),
            ("1 3:1 2:2", 1),
            ("1 0:1", 1),
            ("abc 1:1", 1),
            ("1\n1 2", 2),
        ] {
            match parse(text).unwrap_err() {
                ParseError::Malformed { line: l, .. } => assert_eq!(l, line, "{text:?}"),
                e => panic!("unexpected {e} for {text:?}"),
            }
        }
    }

    #[test]
    fn label_only_lines_are_zero_rows() {
        let ds = parse("1\n-1 2:4").unwrap();
        assert_eq!(ds.features, dmatrix![0.0, 0.0; 0.0, 4.0]);
    }
}
