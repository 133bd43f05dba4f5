//! Plain-text matrix files.
//!
//! The first line holds `rows cols`; each following line holds one row of
//! space-separated entries. Entries are written with 17 significant digits,
//! which round-trips every `f64` exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub fn write_matrix<W: Write>(mut out: W, a: &DenseMatrix) -> Result<()> {
    writeln!(out, "{} {}", a.rows(), a.cols())?;
    for i in 0..a.rows() {
        let line: Vec<String> = a.row(i).iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn save_matrix(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    let mut buf = Vec::new();
    write_matrix(&mut buf, a)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Parses the text format; errors carry 1-based line and column numbers.
pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    parse(text, None)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse(&text, Some(path))
}

fn parse(text: &str, path: Option<&Path>) -> Result<DenseMatrix> {
    let err = |line: usize, column: usize, message: String| Error::Parse {
        path: path.map(Path::to_path_buf),
        line,
        column,
        message,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, 1, "missing 'rows cols' header".into()))?;
    let dims: Vec<(usize, &str)> = tokens(header).collect();
    if dims.len() != 2 {
        return Err(err(1, 1, format!("header needs 2 fields, found {}", dims.len())));
    }
    let mut shape = [0usize; 2];
    for (slot, &(col, tok)) in shape.iter_mut().zip(&dims) {
        *slot = tok
            .parse()
            .map_err(|_| err(1, col, format!("invalid dimension '{tok}'")))?;
    }
    let [rows, cols] = shape;

    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if seen == rows {
            return Err(err(lineno, 1, format!("more than {rows} data rows")));
        }
        let mut count = 0;
        for (col, tok) in tokens(line) {
            let x: f64 = tok
                .parse()
                .map_err(|_| err(lineno, col, format!("invalid number '{tok}'")))?;
            if !x.is_finite() {
                return Err(err(lineno, col, format!("non-finite entry '{tok}'")));
            }
            data.push(x);
            count += 1;
        }
        if count != cols {
            return Err(err(lineno, 1, format!("row has {count} entries, expected {cols}")));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(err(text.lines().count() + 1, 1, format!("found {seen} data rows, expected {rows}")));
    }
    DenseMatrix::new(rows, cols, data)
}

/// Whitespace-separated tokens with their 1-based character column.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = line;
    let mut offset = 0;
    std::iter::from_fn(move || {
        let start = rest.find(|c: char| !c.is_whitespace())?;
        let tail = &rest[start..];
        let len = tail.find(char::is_whitespace).unwrap_or(tail.len());
        let col = line[..offset + start].chars().count() + 1;
        let tok = &tail[..len];
        offset += start + len;
        rest = &tail[len..];
        Some((col, tok))
    })
}
