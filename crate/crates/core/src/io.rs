//! Plain-text matrix format: a `rows cols` header line followed by one
//! whitespace-separated row per line, values printed with 17 significant digits.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub fn format_matrix(m: &DenseMatrix) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::input("matrix text is empty"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::input(format!("line {}: bad header: {e}", hline + 1)))?;
    let [rows, cols] = dims[..] else {
        return Err(Error::input(format!(
            "line {}: header must be `rows cols`",
            hline + 1
        )));
    };
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen_rows = 0;
    for (lineno, line) in lines {
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|e| Error::input(format!("line {}: `{tok}`: {e}", lineno + 1)))?;
            data.push(v);
        }
        if data.len() - before != cols {
            return Err(Error::input(format!(
                "line {}: expected {cols} values, found {}",
                lineno + 1,
                data.len() - before
            )));
        }
        seen_rows += 1;
    }
    if seen_rows != rows {
        return Err(Error::input(format!(
            "expected {rows} rows, found {seen_rows}"
        )));
    }
    DenseMatrix::from_row_major(rows, cols, data)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DenseMatrix) -> std::io::Result<()> {
    fs::write(path, format_matrix(m))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
    parse_matrix(&text).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::InvalidInput(format!("{}: {msg}", path.display())),
        other => other,
    })
}
