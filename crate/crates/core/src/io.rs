//! Matrix and vector files.
//!
//! * Matrix CSV: one matrix row per line, comma separated, no header.
//! * Matrix binary: `n` and `p` as little-endian `u32`, then `n * p`
//!   little-endian `f64` values in row-major order.
//! * Vector CSV: one value per line, no header.
//!
//! Values are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces every bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: cannot parse '{text}' as a number")]
    Parse { line: usize, text: String },
    #[error("line {line}: expected {expected} values, found {got}")]
    Ragged { line: usize, expected: usize, got: usize },
    #[error("binary matrix header declares {expected} values but the file holds {got}")]
    Truncated { expected: usize, got: usize },
    #[error("no data")]
    Empty,
}

/// Matrix as read from disk, before column normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMatrix {
    pub n: usize,
    pub p: usize,
    /// Row-major.
    pub data: Vec<f64>,
}

fn parse(line: usize, text: &str) -> Result<f64, IoError> {
    let t = text.trim();
    t.parse::<f64>().map_err(|_| IoError::Parse { line, text: t.to_string() })
}

pub fn read_matrix_csv<R: Read>(reader: R) -> Result<RawMatrix, IoError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut data = Vec::new();
    let mut p = 0;
    let mut n = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 1;
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if n == 0 {
            p = rec.len();
        } else if rec.len() != p {
            return Err(IoError::Ragged { line, expected: p, got: rec.len() });
        }
        for f in rec.iter() {
            data.push(parse(line, f)?);
        }
        n += 1;
    }
    if n == 0 || p == 0 {
        return Err(IoError::Empty);
    }
    Ok(RawMatrix { n, p, data })
}

pub fn read_matrix_binary<R: Read>(mut reader: R) -> Result<RawMatrix, IoError> {
    let mut header = [0u8; 8];
    reader.read_exact(&mut header)?;
    let n = u32::from_le_bytes(header[..4].try_into().expect("4 bytes")) as usize;
    let p = u32::from_le_bytes(header[4..].try_into().expect("4 bytes")) as usize;
    if n == 0 || p == 0 {
        return Err(IoError::Empty);
    }
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let expected = n * p;
    if bytes.len() != expected * 8 {
        return Err(IoError::Truncated { expected, got: bytes.len() / 8 });
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok(RawMatrix { n, p, data })
}

/// Reads a `.bin` file as binary and anything else as CSV.
pub fn read_matrix(path: &Path) -> Result<RawMatrix, IoError> {
    let f = BufReader::new(File::open(path)?);
    if path.extension().is_some_and(|e| e == "bin") {
        read_matrix_binary(f)
    } else {
        read_matrix_csv(f)
    }
}

pub fn write_matrix_csv<W: Write>(writer: W, n: usize, p: usize, data: &[f64]) -> Result<(), IoError> {
    assert_eq!(data.len(), n * p, "matrix data length");
    let mut w = BufWriter::new(writer);
    for row in data.chunks_exact(p) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix_binary<W: Write>(writer: W, n: usize, p: usize, data: &[f64]) -> Result<(), IoError> {
    assert_eq!(data.len(), n * p, "matrix data length");
    let mut w = BufWriter::new(writer);
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&(p as u32).to_le_bytes())?;
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes binary for a `.bin` path and CSV otherwise.
pub fn write_matrix(path: &Path, n: usize, p: usize, data: &[f64]) -> Result<(), IoError> {
    let f = File::create(path)?;
    if path.extension().is_some_and(|e| e == "bin") {
        write_matrix_binary(f, n, p, data)
    } else {
        write_matrix_csv(f, n, p, data)
    }
}

pub fn read_vector_csv<R: Read>(reader: R) -> Result<Vec<f64>, IoError> {
    let mut text = String::new();
    BufReader::new(reader).read_to_string(&mut text)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse(i + 1, line)?);
    }
    if out.is_empty() {
        return Err(IoError::Empty);
    }
    Ok(out)
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>, IoError> {
    read_vector_csv(File::open(path)?)
}

pub fn write_vector_csv<W: Write>(writer: W, values: &[f64]) -> Result<(), IoError> {
    let mut w = BufWriter::new(writer);
    for v in values {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_vector(path: &Path, values: &[f64]) -> Result<(), IoError> {
    write_vector_csv(File::create(path)?, values)
}
