//! Physical quantities extracted from an MCTDHF state, and the sampled time
//! series they are recorded into.

use ndarray::Array1;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::determinants::DeterminantBasis;
use crate::engine::{EomContext, Hamiltonian, McState};
use crate::error::{Error, Result};
use crate::fields::{LaserPulse, SoftCoreModel};
use crate::grid::Grid1D;
use crate::io;

/// Run parameters carried next to a time series; written as the JSON sidecar.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub omega0: f64,
    pub sample_stride: usize,
    pub code_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<LaserPulse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<SoftCoreModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_peak: Option<f64>,
    /// How often the energy column was actually evaluated; values are held
    /// between evaluations.
    #[serde(default = "default_energy_stride")]
    pub energy_stride: usize,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

fn default_energy_stride() -> usize {
    1
}

/// Observables sampled on the uniform stride grid. The `norm` column holds
/// the squared norm |Psi|^2, so the ionization yield is 1 - norm.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub field: Vec<f64>,
    pub vector_potential: Vec<f64>,
    pub dipole: Vec<f64>,
    pub norm: Vec<f64>,
    pub energy: Vec<f64>,
    pub metadata: SeriesMeta,
}

impl TimeSeries {
    pub fn new(metadata: SeriesMeta) -> Self {
        Self {
            times: Vec::new(),
            field: Vec::new(),
            vector_potential: Vec::new(),
            dipole: Vec::new(),
            norm: Vec::new(),
            energy: Vec::new(),
            metadata,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Sample spacing; errors if the grid is not uniform.
    pub fn dt(&self) -> Result<f64> {
        if self.times.len() < 2 {
            return Err(Error::InvalidArgument(
                "time series needs at least two samples".into(),
            ));
        }
        let dt = self.times[1] - self.times[0];
        for w in self.times.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs() {
                return Err(Error::InvalidArgument(format!(
                    "non-uniform sampling: {} vs {}",
                    w[1] - w[0],
                    dt
                )));
            }
        }
        Ok(dt)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 140 + 64);
        out.push_str("t,field,vector_potential,dipole,norm,energy\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                io::fmt_full(self.times[i]),
                io::fmt_full(self.field[i]),
                io::fmt_full(self.vector_potential[i]),
                io::fmt_full(self.dipole[i]),
                io::fmt_full(self.norm[i]),
                io::fmt_full(self.energy[i]),
            ));
        }
        out
    }

    /// Write `<base>.csv` and the `<base>.meta.json` sidecar atomically.
    pub fn write(&self, csv_path: &Path) -> Result<()> {
        io::atomic_write(csv_path, self.to_csv().as_bytes())?;
        let meta = serde_json::to_string_pretty(&self.metadata)
            .map_err(|e| Error::InvalidArgument(format!("metadata serialization: {e}")))?;
        io::atomic_write(&sidecar_path(csv_path), meta.as_bytes())?;
        Ok(())
    }

    /// Read a series and its sidecar. Without a sidecar, `fallback_omega0`
    /// must supply the carrier frequency.
    pub fn read(csv_path: &Path, fallback_omega0: Option<f64>) -> Result<Self> {
        let content = std::fs::read_to_string(csv_path)?;
        let fname = csv_path.display().to_string();
        let (names, rows) = io::read_numeric_csv(&content, &fname)?;
        let expected = ["t", "field", "vector_potential", "dipole", "norm", "energy"];
        if names != expected {
            return Err(Error::Parse {
                file: fname,
                row: 1,
                reason: format!("unexpected columns {names:?}"),
            });
        }
        let side = sidecar_path(csv_path);
        let metadata: SeriesMeta = if side.exists() {
            serde_json::from_str(&std::fs::read_to_string(&side)?).map_err(|e| Error::Parse {
                file: side.display().to_string(),
                row: 0,
                reason: e.to_string(),
            })?
        } else {
            let omega0 = fallback_omega0.ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "no sidecar at {} and no carrier frequency given",
                    side.display()
                ))
            })?;
            SeriesMeta {
                omega0,
                sample_stride: 0,
                code_version: String::new(),
                pulse: None,
                model: None,
                t_peak: None,
                energy_stride: 1,
                extra: serde_json::Value::Null,
            }
        };
        let mut s = Self::new(metadata);
        for row in rows {
            s.times.push(row[0]);
            s.field.push(row[1]);
            s.vector_potential.push(row[2]);
            s.dipole.push(row[3]);
            s.norm.push(row[4]);
            s.energy.push(row[5]);
        }
        Ok(s)
    }
}

pub fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "series".to_string());
    csv_path.with_file_name(format!("{stem}.meta.json"))
}

/// One-body position expectation d = <Psi| sum_i x_i |Psi> = sum_pq
/// rho1[p,q] <phi_p|x|phi_q>. Real; the imaginary residue is asserted away.
pub fn dipole_moment(basis: &DeterminantBasis, grid: &Grid1D, state: &McState) -> f64 {
    let rho1 = basis.one_body_density(state.ci.as_slice().unwrap());
    dipole_from_density_matrix(&rho1, grid, &state.orbitals)
}

pub(crate) fn dipole_from_density_matrix(
    rho1: &ndarray::Array2<Complex64>,
    grid: &Grid1D,
    orbitals: &ndarray::Array2<Complex64>,
) -> f64 {
    let m = orbitals.nrows();
    let n = orbitals.ncols();
    let orb = orbitals.as_slice().unwrap();
    let x = grid.x();
    let mut d = Complex64::default();
    for p in 0..m {
        let phip = &orb[p * n..(p + 1) * n];
        for q in 0..m {
            let w = rho1[(p, q)];
            if w.norm_sqr() < 1e-60 {
                continue;
            }
            let phiq = &orb[q * n..(q + 1) * n];
            let mut acc = Complex64::default();
            for i in 0..n {
                acc += phip[i].conj() * x[i] * phiq[i];
            }
            d += w * acc;
        }
    }
    d *= grid.dx();
    debug_assert!(
        d.im.abs() < 1e-10 * d.re.abs().max(1.0),
        "dipole imaginary residue {}",
        d.im
    );
    d.re
}

/// One-body density rho(x) = sum_pq rho1[p,q] conj(phi_p(x)) phi_q(x).
/// Integrates to n_electrons * |Psi|^2.
pub fn electron_density(basis: &DeterminantBasis, grid: &Grid1D, state: &McState) -> Array1<f64> {
    debug_assert_eq!(state.n_grid(), grid.len());
    let rho1 = basis.one_body_density(state.ci.as_slice().unwrap());
    let m = state.m();
    let n = state.n_grid();
    let orb = state.orbitals.as_slice().unwrap();
    let mut rho = Array1::<f64>::zeros(n);
    for p in 0..m {
        let phip = &orb[p * n..(p + 1) * n];
        // diagonal term
        let wpp = rho1[(p, p)].re;
        for i in 0..n {
            rho[i] += wpp * phip[i].norm_sqr();
        }
        // off-diagonal pairs contribute twice the real part
        for q in (p + 1)..m {
            let w = rho1[(p, q)];
            if w.norm_sqr() < 1e-60 {
                continue;
            }
            let phiq = &orb[q * n..(q + 1) * n];
            for i in 0..n {
                rho[i] += 2.0 * (w * phip[i].conj() * phiq[i]).re;
            }
        }
    }
    rho
}

/// Center of gravity of the electron density.
pub fn center_of_gravity(basis: &DeterminantBasis, grid: &Grid1D, state: &McState) -> Result<f64> {
    let rho = electron_density(basis, grid, state);
    let total: f64 = rho.iter().sum::<f64>() * grid.dx();
    if total < 1e-12 {
        return Err(Error::UndefinedObservable(format!(
            "electron density integrates to {total:.3e}"
        )));
    }
    let first: f64 = rho
        .iter()
        .zip(grid.x())
        .map(|(r, &x)| r * x)
        .sum::<f64>()
        * grid.dx();
    Ok(first / total)
}

/// <H(t)> with the absorber excluded.
pub fn total_energy(
    ham: &Hamiltonian,
    basis: &DeterminantBasis,
    pulse: Option<&LaserPulse>,
    t: f64,
    state: &McState,
) -> f64 {
    let ctx = EomContext {
        ham,
        basis,
        pulse,
        eps_reg: 1e-8,
        include_cap: false,
        e_ref: 0.0,
    };
    ctx.total_energy(t, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{relax_ground_state, initial_state, RelaxOptions};
    use crate::fields::{BindingPotential, SoftCoreModel};
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    fn relaxed_two_electron() -> (Hamiltonian, DeterminantBasis, McState) {
        let grid = Grid1D::new(12.0, 121).unwrap();
        let model = SoftCoreModel::new(2.0, 1.0, 1.0, 2).unwrap();
        let ham = Hamiltonian::new(grid, model.binding(), model.a_ee, None);
        let basis = DeterminantBasis::new(3, 1, 1).unwrap();
        let initial = initial_state(&ham, &basis, 3).unwrap();
        let (state, _) =
            relax_ground_state(&ham, &basis, initial, &RelaxOptions::default()).unwrap();
        (ham, basis, state)
    }

    #[test]
    fn symmetric_ground_state_has_zero_dipole_and_cog() {
        let (ham, basis, state) = relaxed_two_electron();
        let d = dipole_moment(&basis, ham.grid(), &state);
        assert_abs_diff_eq!(d, 0.0, epsilon = 1e-8);
        let c = center_of_gravity(&basis, ham.grid(), &state).unwrap();
        assert_abs_diff_eq!(c, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn density_integrates_to_electron_count_and_is_nonnegative() {
        let (ham, basis, state) = relaxed_two_electron();
        let rho = electron_density(&basis, ham.grid(), &state);
        let total: f64 = rho.iter().sum::<f64>() * ham.grid().dx();
        assert_abs_diff_eq!(total, 2.0 * state.norm_squared(), epsilon = 1e-10);
        assert!(rho.iter().all(|&r| r > -1e-10));
    }

    #[test]
    fn displaced_orbital_moves_dipole_and_cog() {
        // single electron in a displaced Gaussian: d = cog = c
        let grid = Grid1D::new(15.0, 301).unwrap();
        let ham = Hamiltonian::new(
            grid,
            BindingPotential::Harmonic { omega: 1.0 },
            1.0,
            None,
        );
        let basis = DeterminantBasis::new(1, 1, 0).unwrap();
        let c = 1.7;
        let n = ham.grid().len();
        let mut orbitals = Array2::<Complex64>::zeros((1, n));
        for (i, &x) in ham.grid().x().iter().enumerate() {
            orbitals[(0, i)] = Complex64::new((-0.5 * (x - c) * (x - c)).exp(), 0.0);
        }
        crate::linalg::lowdin_orthonormalize(&mut orbitals, ham.grid().dx()).unwrap();
        let state = McState {
            orbitals,
            ci: ndarray::Array1::from_elem(1, Complex64::new(1.0, 0.0)),
            t: 0.0,
        };
        assert_abs_diff_eq!(dipole_moment(&basis, ham.grid(), &state), c, epsilon = 1e-8);
        assert_abs_diff_eq!(
            center_of_gravity(&basis, ham.grid(), &state).unwrap(),
            c,
            epsilon = 1e-8
        );
    }

    #[test]
    fn series_csv_round_trip() {
        let meta = SeriesMeta {
            omega0: 0.05,
            sample_stride: 4,
            code_version: "test".into(),
            pulse: None,
            model: None,
            t_peak: None,
            energy_stride: 1,
            extra: serde_json::Value::Null,
        };
        let mut s = TimeSeries::new(meta);
        for k in 0..8 {
            let t = k as f64 * 0.5;
            s.times.push(t);
            s.field.push((0.3 * t).sin());
            s.vector_potential.push((0.3 * t).cos());
            s.dipole.push(0.1 * t);
            s.norm.push(1.0 - 1e-4 * t);
            s.energy.push(-2.5);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.csv");
        s.write(&path).unwrap();
        let back = TimeSeries::read(&path, None).unwrap();
        assert_eq!(back.len(), 8);
        assert_eq!(back.times, s.times);
        assert_eq!(back.dipole, s.dipole);
        assert_eq!(back.metadata.omega0, 0.05);
        assert_abs_diff_eq!(back.dt().unwrap(), 0.5, epsilon = 1e-15);
    }
}
