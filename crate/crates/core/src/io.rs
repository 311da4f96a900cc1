//! Output plumbing: atomic file writes, full-precision number formatting,
//! and a small CSV reader with row-numbered errors.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Write via a temp file in the same directory, then rename into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// 17 significant digits: outputs are diffable across runs.
pub fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parse a CSV of f64 columns. The first line must be the header; `file` is
/// only used for error messages.
pub fn read_numeric_csv(content: &str, file: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = content.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        file: file.to_string(),
        row: 0,
        reason: "empty file".into(),
    })?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(names.len());
        for (col, tok) in line.split(',').enumerate() {
            let v: f64 = tok.trim().parse().map_err(|e| Error::Parse {
                file: file.to_string(),
                row: idx + 1,
                reason: format!("column {} ({}): {e}", col + 1, tok.trim()),
            })?;
            row.push(v);
        }
        if row.len() != names.len() {
            return Err(Error::Parse {
                file: file.to_string(),
                row: idx + 1,
                reason: format!("expected {} columns, got {}", names.len(), row.len()),
            });
        }
        rows.push(row);
    }
    Ok((names, rows))
}
