//! Matrix Market coordinate and array files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{KemenyError, Result};
use crate::linalg::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Symmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Header {
    pub format: Format,
    pub field: Field,
    pub symmetry: Symmetry,
}

fn parse_error(line: usize, msg: impl Into<String>) -> KemenyError {
    KemenyError::Parse { line, msg: msg.into() }
}

/// Parses the banner line; keywords are case-insensitive.
pub fn parse_banner(line: &str) -> Result<Header> {
    let tokens: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(parse_error(1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    if tokens[1] != "matrix" {
        return Err(KemenyError::Unsupported(format!("object '{}'", tokens[1])));
    }
    let format = match tokens[2].as_str() {
        "coordinate" => Format::Coordinate,
        "array" => Format::Array,
        other => return Err(parse_error(1, format!("unknown format '{other}'"))),
    };
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        "complex" => return Err(KemenyError::Unsupported("complex field".into())),
        other => return Err(parse_error(1, format!("unknown field '{other}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" | "hermitian" => {
            return Err(KemenyError::Unsupported(format!("{} storage", tokens[4])));
        }
        other => return Err(parse_error(1, format!("unknown symmetry '{other}'"))),
    };
    if format == Format::Array && field == Field::Pattern {
        return Err(parse_error(1, "pattern field requires coordinate format"));
    }
    Ok(Header { format, field, symmetry })
}

fn parse_index(tok: Option<&str>, bound: usize, line: usize) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_error(line, "missing index"))?;
    let i: usize = tok.parse().map_err(|_| parse_error(line, format!("bad index '{tok}'")))?;
    if i == 0 || i > bound {
        return Err(parse_error(line, format!("index {i} outside 1..={bound}")));
    }
    Ok(i - 1)
}

fn parse_value(tok: Option<&str>, field: Field, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| parse_error(line, "missing value"))?;
    let v = match field {
        Field::Integer => tok.parse::<i64>().map(|v| v as f64).ok(),
        _ => tok.parse::<f64>().ok(),
    };
    match v {
        Some(v) if v.is_finite() => Ok(v),
        _ => Err(parse_error(line, format!("bad value '{tok}'"))),
    }
}

/// Reads a Matrix Market matrix; symmetric storage is mirrored and pattern
/// entries become 1.
pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<CsrMatrix> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let header = match lines.next() {
        Some((_, l)) => parse_banner(&l?)?,
        None => return Err(parse_error(1, "empty file")),
    };
    // Data lines, skipping comments and blanks.
    let mut data = lines.filter_map(|(no, l)| match l {
        Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('%') => None,
        other => Some((no, other)),
    });

    let (size_no, size_line) = match data.next() {
        Some((no, l)) => (no, l?),
        None => return Err(parse_error(2, "missing size line")),
    };
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_error(size_no, format!("bad size entry '{t}'"))))
        .collect::<Result<_>>()?;
    let expected = if header.format == Format::Coordinate { 3 } else { 2 };
    if dims.len() != expected {
        return Err(parse_error(size_no, format!("size line needs {expected} integers")));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if header.symmetry == Symmetry::Symmetric && rows != cols {
        return Err(parse_error(size_no, "symmetric storage needs a square matrix"));
    }

    let mut triplets = Vec::new();
    let mut push = |i: usize, j: usize, v: f64| {
        triplets.push((i, j, v));
        if header.symmetry == Symmetry::Symmetric && i != j {
            triplets.push((j, i, v));
        }
    };
    let mut last = size_no;
    match header.format {
        Format::Coordinate => {
            let nnz = dims[2];
            let mut seen = 0;
            for (no, l) in data {
                let l = l?;
                last = no;
                if seen == nnz {
                    return Err(parse_error(no, format!("more than the declared {nnz} entries")));
                }
                let mut tok = l.split_whitespace();
                let i = parse_index(tok.next(), rows, no)?;
                let j = parse_index(tok.next(), cols, no)?;
                if header.symmetry == Symmetry::Symmetric && j > i {
                    return Err(parse_error(no, "symmetric storage holds the lower triangle only"));
                }
                let v = if header.field == Field::Pattern { 1.0 } else { parse_value(tok.next(), header.field, no)? };
                if tok.next().is_some() {
                    return Err(parse_error(no, "trailing tokens"));
                }
                push(i, j, v);
                seen += 1;
            }
            if seen < nnz {
                return Err(parse_error(last + 1, format!("expected {nnz} entries, found {seen}")));
            }
        }
        Format::Array => {
            // Column-major; symmetric storage lists the lower triangle.
            let mut slots = (0..cols).flat_map(|j| {
                let start = if header.symmetry == Symmetry::Symmetric { j } else { 0 };
                (start..rows).map(move |i| (i, j))
            });
            for (no, l) in data {
                let l = l?;
                last = no;
                for t in l.split_whitespace() {
                    let (i, j) = slots.next().ok_or_else(|| parse_error(no, "more values than the matrix holds"))?;
                    let v = parse_value(Some(t), header.field, no)?;
                    if v != 0.0 {
                        push(i, j, v);
                    }
                }
            }
            if slots.next().is_some() {
                return Err(parse_error(last + 1, "fewer values than the matrix holds"));
            }
        }
    }
    CsrMatrix::from_triplets(rows, cols, &triplets)
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    parse_matrix_market(BufReader::new(File::open(path)?))
}

/// Writes `coordinate real general` with 17 significant digits, which
/// round-trips every finite f64.
pub fn write_matrix_market_to<W: Write>(a: &CsrMatrix, mut w: W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j, v) in a.iter() {
        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix_market(path: impl AsRef<Path>, a: &CsrMatrix) -> Result<()> {
    write_matrix_market_to(a, BufWriter::new(File::create(path)?))
}
