//! Matrix Market coordinate file reader and writer.
//!
//! Supports real-valued `general` and `symmetric` coordinate files.
//! Symmetric inputs are expanded to full storage on read. Indices are
//! 1-based on disk and 0-based in memory. The writer always emits
//! `general` files with shortest round-trip float formatting.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::csr::SparseCsr;

/// Reads a Matrix Market coordinate file.
pub fn read_matrix_market<P: AsRef<Path>>(path: P) -> Result<SparseCsr> {
    let file = File::open(path)?;
    read_matrix_market_from(BufReader::new(file))
}

/// Reads Matrix Market coordinate data from any buffered reader.
pub fn read_matrix_market_from<R: BufRead>(reader: R) -> Result<SparseCsr> {
    let mut lines = reader.lines().enumerate();

    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(parse_err(1, "empty file")),
    };
    let symmetric = parse_header(1, &header)?;

    // dimensions line: first non-comment, non-empty line after the header
    let mut dims: Option<(usize, usize, usize)> = None;
    let mut n_entries = 0usize;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        match dims {
            None => {
                let m: usize = next_field(line_no, &mut fields, "rows")?;
                let n: usize = next_field(line_no, &mut fields, "columns")?;
                let nnz: usize = next_field(line_no, &mut fields, "nonzeros")?;
                triplets.reserve(if symmetric { 2 * nnz } else { nnz });
                dims = Some((m, n, nnz));
            }
            Some((m, n, nnz)) => {
                if n_entries == nnz {
                    return Err(parse_err(line_no, "more entries than declared"));
                }
                let i: usize = next_field(line_no, &mut fields, "row index")?;
                let j: usize = next_field(line_no, &mut fields, "column index")?;
                let v: f64 = next_field(line_no, &mut fields, "value")?;
                if i < 1 || i > m || j < 1 || j > n {
                    return Err(parse_err(
                        line_no,
                        &format!("index ({i}, {j}) out of range for {m}x{n}"),
                    ));
                }
                n_entries += 1;
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (m, n, nnz) = dims.ok_or_else(|| parse_err(0, "missing dimensions line"))?;
    if n_entries != nnz {
        return Err(parse_err(
            0,
            &format!("declared {nnz} entries but file contains {n_entries}"),
        ));
    }
    SparseCsr::from_triplets(m, n, &triplets)
}

/// Writes a matrix as a real `general` coordinate file.
pub fn write_matrix_market<P: AsRef<Path>>(path: P, a: &SparseCsr) -> Result<()> {
    let file = File::create(path)?;
    write_matrix_market_to(BufWriter::new(file), a)
}

/// Writes coordinate data to any writer.
pub fn write_matrix_market_to<W: Write>(mut w: W, a: &SparseCsr) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            writeln!(w, "{} {} {}", i + 1, j + 1, v)?;
        }
    }
    Ok(())
}

fn parse_header(line_no: usize, header: &str) -> Result<bool> {
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 5 || !fields[0].eq_ignore_ascii_case("%%MatrixMarket") {
        return Err(parse_err(line_no, "expected %%MatrixMarket header"));
    }
    if !fields[1].eq_ignore_ascii_case("matrix") || !fields[2].eq_ignore_ascii_case("coordinate") {
        return Err(parse_err(line_no, "only coordinate matrices are supported"));
    }
    if !fields[3].eq_ignore_ascii_case("real") {
        return Err(parse_err(
            line_no,
            &format!("unsupported value type '{}' (only real)", fields[3]),
        ));
    }
    match fields[4].to_ascii_lowercase().as_str() {
        "general" => Ok(false),
        "symmetric" => Ok(true),
        other => Err(parse_err(
            line_no,
            &format!("unsupported symmetry '{other}' (general or symmetric)"),
        )),
    }
}

fn next_field<T: std::str::FromStr>(
    line_no: usize,
    fields: &mut std::str::SplitWhitespace<'_>,
    what: &str,
) -> Result<T> {
    fields
        .next()
        .ok_or_else(|| parse_err(line_no, &format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line_no, &format!("cannot parse {what}")))
}

fn parse_err(line: usize, msg: &str) -> Error {
    Error::Parse {
        line,
        msg: msg.to_string(),
    }
}
