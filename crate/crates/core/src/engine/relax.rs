//! Imaginary-time relaxation to the variational ground state, and the
//! successive-ionization ladder built on it.
//!
//! The real-time equations with t -> -i tau turn into a gradient-like flow;
//! each accepted RK4 step is followed by CI renormalization and Löwdin
//! re-orthonormalization. Steps that raise the energy are rejected and
//! retried with half the step, which makes the energy monotone by
//! construction.

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use super::{initial_state, EomContext, Hamiltonian, McState};
use crate::determinants::DeterminantBasis;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone)]
pub struct RelaxOptions {
    /// Stop when |dE| per accepted step stays below this.
    pub energy_tol: f64,
    pub max_iters: usize,
    /// Initial imaginary-time step; None picks one from the grid spacing.
    pub dtau_init: Option<f64>,
    pub eps_reg: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            energy_tol: 1e-9,
            max_iters: 200_000,
            dtau_init: None,
            eps_reg: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RelaxReport {
    pub energy: f64,
    pub iterations: usize,
    pub rejected: usize,
    pub final_dtau: f64,
    pub converged: bool,
}

fn rk4_step(
    ctx: &EomContext,
    y: &[Complex64],
    dtau: f64,
    k: &mut [Vec<Complex64>; 4],
    scratch: &mut Vec<Complex64>,
) -> Vec<Complex64> {
    let n = y.len();
    // imaginary time: dy/dtau = -action(y)
    ctx.action_flat(0.0, y, &mut k[0]);
    scratch.clear();
    scratch.extend((0..n).map(|i| y[i] - 0.5 * dtau * k[0][i]));
    ctx.action_flat(0.0, scratch, &mut k[1]);
    scratch.clear();
    scratch.extend((0..n).map(|i| y[i] - 0.5 * dtau * k[1][i]));
    ctx.action_flat(0.0, scratch, &mut k[2]);
    scratch.clear();
    scratch.extend((0..n).map(|i| y[i] - dtau * k[2][i]));
    ctx.action_flat(0.0, scratch, &mut k[3]);
    (0..n)
        .map(|i| {
            y[i] - dtau / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i])
        })
        .collect()
}

fn renormalize(y: &mut [Complex64], n_det: usize, m: usize, n: usize, dx: f64) -> Result<()> {
    let norm: f64 = y[..n_det].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-300 {
        return Err(Error::RelaxationFailure("CI vector collapsed to zero".into()));
    }
    for z in y[..n_det].iter_mut() {
        *z /= norm;
    }
    let mut orbitals = Array2::from_shape_vec((m, n), y[n_det..].to_vec()).unwrap();
    linalg::lowdin_orthonormalize(&mut orbitals, dx)?;
    y[n_det..].copy_from_slice(orbitals.as_slice().unwrap());
    Ok(())
}

/// Relax `initial` to the variational ground state of the field-free
/// Hamiltonian. The absorber is excluded; `tol` is the energy change per
/// accepted step at which the flow is considered stationary.
pub fn relax_ground_state(
    ham: &Hamiltonian,
    basis: &DeterminantBasis,
    initial: McState,
    opts: &RelaxOptions,
) -> Result<(McState, RelaxReport)> {
    let mut ctx = EomContext {
        ham,
        basis,
        pulse: None,
        eps_reg: opts.eps_reg,
        include_cap: false,
        e_ref: 0.0,
    };
    let n_det = basis.len();
    let m = basis.m();
    let n = ham.grid().len();
    let dx = ham.grid().dx();

    let mut y = initial.flatten();
    renormalize(&mut y, n_det, m, n, dx)?;

    let state_of = |y: &[Complex64]| McState::from_flat(y, n_det, m, n, 0.0);
    let mut energy = ctx.total_energy(0.0, &state_of(&y));

    // stability bound for the explicit flow: the kinetic spectral radius
    let kin_max = 2.0 / (dx * dx);
    let dtau_max = 2.5 / (kin_max + 10.0);
    let mut dtau = opts.dtau_init.unwrap_or(0.25 * dtau_max).min(dtau_max);

    let mut k: [Vec<Complex64>; 4] = std::array::from_fn(|_| vec![Complex64::default(); y.len()]);
    let mut scratch = Vec::with_capacity(y.len());

    let mut iterations = 0;
    let mut rejected = 0;
    let mut quiet_steps = 0;
    let mut streak = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        // shifting by the current energy keeps the flow well conditioned:
        // the CI norm then decays only through the excited-state content
        ctx.e_ref = energy;
        let mut y_new = rk4_step(&ctx, &y, dtau, &mut k, &mut scratch);
        if renormalize(&mut y_new, n_det, m, n, dx).is_err() {
            dtau *= 0.5;
            rejected += 1;
            continue;
        }
        let e_new = ctx.total_energy(0.0, &state_of(&y_new));
        if !e_new.is_finite() || e_new > energy + 1e-12 * energy.abs().max(1.0) {
            dtau *= 0.5;
            rejected += 1;
            streak = 0;
            if dtau < 1e-12 {
                return Err(Error::RelaxationFailure(format!(
                    "imaginary-time step collapsed at E = {energy:.8}"
                )));
            }
            continue;
        }
        let de = (energy - e_new).abs();
        y = y_new;
        energy = e_new;
        streak += 1;
        if streak >= 5 && dtau < dtau_max {
            dtau = (dtau * 1.3).min(dtau_max);
            streak = 0;
        }
        if de < opts.energy_tol {
            quiet_steps += 1;
            if quiet_steps >= 3 {
                let mut state = state_of(&y);
                state.t = 0.0;
                return Ok((
                    state,
                    RelaxReport {
                        energy,
                        iterations,
                        rejected,
                        final_dtau: dtau,
                        converged: true,
                    },
                ));
            }
        } else {
            quiet_steps = 0;
        }
    }
    Err(Error::RelaxationFailure(format!(
        "no convergence after {} iterations (E = {energy:.8}, dtau = {dtau:.2e})",
        opts.max_iters
    )))
}

/// Relax from the Aufbau guess.
pub fn relax_from_scratch(
    ham: &Hamiltonian,
    basis: &DeterminantBasis,
    opts: &RelaxOptions,
) -> Result<(McState, RelaxReport)> {
    let initial = initial_state(ham, basis, basis.m())?;
    relax_ground_state(ham, basis, initial, opts)
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderReport {
    /// Ground-state energies E(k) for k = n, n-1, ..., 1 electrons.
    pub energies: Vec<f64>,
    /// Successive ionization potentials E(k-1) - E(k), k = n first.
    pub potentials: Vec<f64>,
}

/// Ground-state energies of the n, n-1, ..., 1 electron systems with the
/// same binding potential, and the ionization potentials between them.
/// Spin sectors: n_up = ceil(k/2), n_dn = floor(k/2).
pub fn ionization_ladder(
    ham: &Hamiltonian,
    n_electrons: usize,
    m: usize,
    opts: &RelaxOptions,
) -> Result<LadderReport> {
    if n_electrons < 1 {
        return Err(Error::InvalidArgument(
            "ionization ladder needs at least one electron".into(),
        ));
    }
    let mut energies = Vec::with_capacity(n_electrons);
    for k in (1..=n_electrons).rev() {
        let basis = DeterminantBasis::new(m, k.div_ceil(2), k / 2)?;
        let (_, report) = relax_from_scratch(ham, &basis, opts)?;
        energies.push(report.energy);
    }
    let mut potentials = Vec::with_capacity(n_electrons);
    for i in 0..n_electrons {
        let upper = if i + 1 < n_electrons {
            energies[i + 1]
        } else {
            0.0
        };
        potentials.push(upper - energies[i]);
    }
    Ok(LadderReport {
        energies,
        potentials,
    })
}
