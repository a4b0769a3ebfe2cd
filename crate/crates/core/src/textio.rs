//! Plain-text matrix list format shared by block profiles and channel sets.
//!
//! ```text
//! spectra-svi matrices v1
//! count 2
//! matrix 2 2 block0
//! (1.0000000000000000e0,0.0000000000000000e0) (0.0000000000000000e0,0.0000000000000000e0)
//! ...
//! ```
//!
//! One line per matrix row; each entry is a `(re,im)` pair written with 17
//! significant digits, so parse → write reproduces the input byte for byte.
//! Blank lines and lines starting with `#` are ignored by the parser.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

const MAGIC: &str = "spectra-svi matrices v1";

/// Formats a float with 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes labelled matrices.
pub fn write_matrices<'a>(items: impl IntoIterator<Item = (&'a str, &'a ComplexMatrix)>) -> String {
    let items: Vec<_> = items.into_iter().collect();
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "count {}", items.len());
    for (label, m) in items {
        let _ = writeln!(out, "matrix {} {} {}", m.rows(), m.cols(), label);
        for i in 0..m.rows() {
            let row: Vec<String> = (0..m.cols())
                .map(|j| {
                    let z = m.get(i, j);
                    format!("({},{})", fmt_f64(z.re), fmt_f64(z.im))
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_entry(tok: &str, line: usize) -> Result<Complex64> {
    let inner = tok
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| parse_err(line, format!("expected (re,im), got `{tok}`")))?;
    let (re, im) = inner
        .split_once(',')
        .ok_or_else(|| parse_err(line, format!("expected (re,im), got `{tok}`")))?;
    let re: f64 = re.trim().parse().map_err(|_| parse_err(line, format!("bad real part `{re}`")))?;
    let im: f64 = im.trim().parse().map_err(|_| parse_err(line, format!("bad imaginary part `{im}`")))?;
    Ok(Complex64::new(re, im))
}

/// Parses the output of [`write_matrices`].
pub fn read_matrices(text: &str) -> Result<Vec<(String, ComplexMatrix)>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    if header != MAGIC {
        return Err(parse_err(ln, format!("expected header `{MAGIC}`")));
    }
    let (ln, count_line) = lines.next().ok_or_else(|| parse_err(ln + 1, "missing count"))?;
    let count: usize = count_line
        .strip_prefix("count ")
        .and_then(|c| c.trim().parse().ok())
        .ok_or_else(|| parse_err(ln, "expected `count <k>`"))?;

    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let (ln, head) = lines.next().ok_or_else(|| parse_err(ln, "missing matrix header"))?;
        let mut parts = head.split_whitespace();
        if parts.next() != Some("matrix") {
            return Err(parse_err(ln, "expected `matrix <rows> <cols> <label>`"));
        }
        let rows: usize = parts.next().and_then(|t| t.parse().ok()).ok_or_else(|| parse_err(ln, "bad row count"))?;
        let cols: usize = parts.next().and_then(|t| t.parse().ok()).ok_or_else(|| parse_err(ln, "bad column count"))?;
        let label = parts.collect::<Vec<_>>().join(" ");
        let mut entries = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (rl, row) = lines.next().ok_or_else(|| parse_err(ln, "truncated matrix"))?;
            let before = entries.len();
            for tok in row.split_whitespace() {
                entries.push(parse_entry(tok, rl)?);
            }
            if entries.len() - before != cols {
                return Err(parse_err(rl, format!("expected {cols} entries, got {}", entries.len() - before)));
            }
        }
        let m = ComplexMatrix::new(rows, cols, entries).map_err(|e| parse_err(ln, e.to_string()))?;
        out.push((label, m));
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing content after last matrix"));
    }
    Ok(out)
}
