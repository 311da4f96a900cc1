//! State checkpoints: a JSON header followed by the CI vector and orbitals
//! as little-endian complex doubles.
//!
//! Layout: 8-byte magic, u64 LE header length, header JSON, then
//! n_det + m * n_grid (re, im) f64 pairs (CI first, orbitals row-major).

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::McState;
use crate::error::{Error, Result};
use crate::fields::{BindingPotential, CapSpec, LaserPulse, SoftCoreModel};
use crate::io;

const MAGIC: &[u8; 8] = b"MCHF1D\0\0";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub code_version: String,
    pub grid_half_width: f64,
    pub grid_points: usize,
    pub m: usize,
    pub n_up: usize,
    pub n_dn: usize,
    pub n_det: usize,
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<SoftCoreModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binding: Option<BindingPotential>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<LaserPulse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<CapSpec>,
}

impl CheckpointHeader {
    /// Compare against expected parameters; returns the list of mismatches.
    pub fn diff(&self, other: &CheckpointHeader) -> Vec<String> {
        let mut diffs = Vec::new();
        let mut cmp = |name: &str, a: String, b: String| {
            if a != b {
                diffs.push(format!("  {name}: checkpoint has {a}, config has {b}"));
            }
        };
        cmp(
            "grid.half_width",
            self.grid_half_width.to_string(),
            other.grid_half_width.to_string(),
        );
        cmp(
            "grid.n_points",
            self.grid_points.to_string(),
            other.grid_points.to_string(),
        );
        cmp("m", self.m.to_string(), other.m.to_string());
        cmp("n_up", self.n_up.to_string(), other.n_up.to_string());
        cmp("n_dn", self.n_dn.to_string(), other.n_dn.to_string());
        if let (Some(a), Some(b)) = (&self.model, &other.model) {
            cmp("model", format!("{a:?}"), format!("{b:?}"));
        }
        diffs
    }
}

pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub state: McState,
}

pub fn save_checkpoint(path: &Path, header: &CheckpointHeader, state: &McState) -> Result<()> {
    let json = serde_json::to_vec(header)
        .map_err(|e| Error::InvalidArgument(format!("checkpoint header: {e}")))?;
    let n_values = state.ci.len() + state.orbitals.len();
    let mut bytes = Vec::with_capacity(8 + 8 + json.len() + 16 * n_values);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(json.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&json);
    for z in state.ci.iter().chain(state.orbitals.iter()) {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    io::atomic_write(path, &bytes)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path)?;
    let fail = |reason: &str| Error::Parse {
        file: path.display().to_string(),
        row: 0,
        reason: reason.to_string(),
    };
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(fail("not a checkpoint file (bad magic)"));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    if bytes.len() < 16 + hlen {
        return Err(fail("truncated header"));
    }
    let header: CheckpointHeader = serde_json::from_slice(&bytes[16..16 + hlen])
        .map_err(|e| fail(&format!("header JSON: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(fail(&format!(
            "unsupported format version {}",
            header.format_version
        )));
    }
    let n_values = header.n_det + header.m * header.grid_points;
    let payload = &bytes[16 + hlen..];
    if payload.len() != 16 * n_values {
        return Err(fail(&format!(
            "payload holds {} bytes, expected {}",
            payload.len(),
            16 * n_values
        )));
    }
    let mut values = Vec::with_capacity(n_values);
    for chunk in payload.chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
        values.push(Complex64::new(re, im));
    }
    let ci = Array1::from_iter(values[..header.n_det].iter().copied());
    let orbitals = Array2::from_shape_vec(
        (header.m, header.grid_points),
        values[header.n_det..].to_vec(),
    )
    .map_err(|e| fail(&format!("orbital block: {e}")))?;
    let state = McState {
        orbitals,
        ci,
        t: header.t,
    };
    Ok(Checkpoint { header, state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn sample_state() -> McState {
        let mut orbitals = Array2::<Complex64>::zeros((2, 5));
        for (i, z) in orbitals.iter_mut().enumerate() {
            *z = Complex64::new(i as f64 * 0.25, -(i as f64) * 0.5);
        }
        McState {
            orbitals,
            ci: Array1::from_vec(vec![
                Complex64::new(0.6, 0.0),
                Complex64::new(0.0, 0.8),
            ]),
            t: 3.25,
        }
    }

    fn sample_header() -> CheckpointHeader {
        CheckpointHeader {
            format_version: FORMAT_VERSION,
            code_version: crate::VERSION.to_string(),
            grid_half_width: 10.0,
            grid_points: 5,
            m: 2,
            n_up: 1,
            n_dn: 1,
            n_det: 2,
            t: 3.25,
            model: Some(SoftCoreModel::polarizable_4e()),
            binding: None,
            pulse: None,
            cap: None,
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.ckpt");
        let state = sample_state();
        save_checkpoint(&path, &sample_header(), &state).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back.header.t, 3.25);
        assert_eq!(back.state.ci, state.ci);
        assert_eq!(back.state.orbitals, state.orbitals);
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.ckpt");
        std::fs::write(&path, b"not a checkpoint").unwrap();
        assert!(load_checkpoint(&path).is_err());
    }

    #[test]
    fn diff_reports_mismatches() {
        let a = sample_header();
        let mut b = sample_header();
        b.grid_points = 7;
        b.m = 4;
        let diffs = a.diff(&b);
        assert_eq!(diffs.len(), 2);
        assert!(diffs[0].contains("grid.n_points"));
    }
}
