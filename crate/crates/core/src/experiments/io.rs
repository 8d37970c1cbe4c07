//! Plain CSV for matrices and vectors, JSON for everything else.
//!
//! Reals are written with 17 significant digits so that reading a file back
//! reproduces every value bit for bit.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_rows(text: &str) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut rows = Vec::new();
    for (l, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for (c, field) in line.split(',').enumerate() {
            let value = field.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: l + 1,
                column: c + 1,
                message: format!("`{}`: {e}", field.trim()),
            })?;
            row.push(value);
        }
        rows.push((l + 1, row));
    }
    Ok(rows)
}

/// Comma-separated rows; blank lines and `#` comments are skipped.
pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let rows = parse_rows(text)?;
    let Some((_, first)) = rows.first() else {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "no data rows".into(),
        });
    };
    let cols = first.len();
    for (line, row) in &rows {
        if row.len() != cols {
            return Err(Error::Parse {
                line: *line,
                column: row.len().min(cols) + 1,
                message: format!("row has {} fields, expected {cols}", row.len()),
            });
        }
    }
    let data: Vec<f64> = rows.iter().flat_map(|(_, r)| r.iter().copied()).collect();
    Ok(Matrix::from_row_slice(rows.len(), cols, &data))
}

/// One value per line, or a single comma-separated row.
pub fn parse_vector(text: &str) -> Result<Vector> {
    let rows = parse_rows(text)?;
    if rows.len() == 1 {
        return Ok(Vector::from_vec(rows[0].1.clone()));
    }
    let mut values = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        if row.len() != 1 {
            return Err(Error::Parse {
                line,
                column: 2,
                message: format!("expected one value per line, found {}", row.len()),
            });
        }
        values.push(row[0]);
    }
    Ok(Vector::from_vec(values))
}

pub fn format_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let fields: Vec<String> = row.iter().map(|v| format_real(*v)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn format_vector(v: &[f64]) -> String {
    v.iter().map(|x| format_real(*x) + "\n").collect()
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

pub fn read_vector(path: &Path) -> Result<Vector> {
    parse_vector(&std::fs::read_to_string(path)?)
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    Ok(std::fs::write(path, format_matrix(m))?)
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    Ok(std::fs::write(path, format_vector(v))?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(std::fs::write(path, text)?)
}
