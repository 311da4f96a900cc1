//! The MCTDHF engine: state representation, equations of motion, real-time
//! propagation, and imaginary-time ground-state relaxation.
//!
//! Working equations, in the gauge <phi_i | d/dt phi_j> = 0:
//!
//!   i dA/dt   = H_CI A
//!   i dphi_j/dt = Q [ h(t) phi_j
//!                     + sum_a (rho1^-1)_{ja} sum_{qrs} rho2[a,q,r,s] W_qs phi_r ]
//!
//! with Q = 1 - sum_i |phi_i><phi_i|, H_CI the full Hamiltonian matrix over
//! determinants, and W_qs the mean fields. The CI equation carries the whole
//! phase evolution; the Q projection keeps the orbitals orthonormal.

mod checkpoint;
mod propagate;
mod relax;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointHeader};
pub use propagate::{propagate, propagate_with_observer, PropStats, PropagationConfig};
pub use relax::{
    ionization_ladder, relax_from_scratch, relax_ground_state, LadderReport, RelaxOptions,
    RelaxReport,
};

use ndarray::{Array1, Array2, Array3, Array4};
use num_complex::Complex64;

use crate::determinants::DeterminantBasis;
use crate::error::{Error, Result};
use crate::fields::{cap_value, BindingPotential, CapSpec, LaserPulse};
use crate::grid::{apply_kinetic_into, Grid1D};
use crate::linalg;
use crate::meanfield::{mean_field_operators, EeKernel};

/// Grid, model, orbital count, and absorber bundled for the drivers.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub grid: Grid1D,
    pub model: crate::fields::SoftCoreModel,
    pub m: usize,
    pub cap: Option<CapSpec>,
}

impl SystemSpec {
    pub fn hamiltonian(&self) -> Hamiltonian {
        Hamiltonian::new(
            self.grid.clone(),
            self.model.binding(),
            self.model.a_ee,
            self.cap,
        )
    }

    /// Determinant basis for the model's electron count:
    /// n_up = ceil(n/2), n_dn = floor(n/2).
    pub fn basis(&self) -> Result<DeterminantBasis> {
        let n = self.model.n_electrons;
        DeterminantBasis::new(self.m, n.div_ceil(2), n / 2)
    }
}

/// Full MCTDHF state: m spatial orbitals (rows) and the CI vector.
#[derive(Debug, Clone)]
pub struct McState {
    pub orbitals: Array2<Complex64>,
    pub ci: Array1<Complex64>,
    pub t: f64,
}

impl McState {
    /// Squared norm of the total wave function (orbitals orthonormal).
    pub fn norm_squared(&self) -> f64 {
        self.ci.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn m(&self) -> usize {
        self.orbitals.nrows()
    }

    pub fn n_grid(&self) -> usize {
        self.orbitals.ncols()
    }

    /// Pack CI coefficients and orbitals into one vector (CI first).
    pub fn flatten(&self) -> Vec<Complex64> {
        let mut y = Vec::with_capacity(self.ci.len() + self.orbitals.len());
        y.extend(self.ci.iter().copied());
        y.extend(self.orbitals.iter().copied());
        y
    }

    /// Inverse of [`McState::flatten`].
    pub fn from_flat(y: &[Complex64], n_det: usize, m: usize, n: usize, t: f64) -> Self {
        let ci = Array1::from_iter(y[..n_det].iter().copied());
        let orbitals = Array2::from_shape_vec((m, n), y[n_det..].to_vec()).unwrap();
        Self { orbitals, ci, t }
    }
}

/// Static parts of the Hamiltonian on a grid: binding potential, e-e kernel,
/// absorber, and an optional static electric field -E_s * x used by the
/// polarizability probe.
pub struct Hamiltonian {
    grid: Grid1D,
    binding: BindingPotential,
    v_diag: Vec<f64>,
    cap: Option<(CapSpec, Vec<f64>)>,
    static_field: f64,
    ee: EeKernel,
}

impl Hamiltonian {
    pub fn new(
        grid: Grid1D,
        binding: BindingPotential,
        a_ee: f64,
        cap: Option<CapSpec>,
    ) -> Self {
        let v_diag: Vec<f64> = grid.x().iter().map(|&x| binding.potential(x)).collect();
        let cap = cap.filter(|c| c.enabled).map(|c| {
            let w: Vec<f64> = grid.x().iter().map(|&x| cap_value(&c, x)).collect();
            (c, w)
        });
        let ee = EeKernel::new(&grid, a_ee);
        Self {
            grid,
            binding,
            v_diag,
            cap,
            static_field: 0.0,
            ee,
        }
    }

    /// Add the static-field term -E_s * x to the one-body potential.
    pub fn set_static_field(&mut self, e_static: f64) {
        self.static_field = e_static;
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn binding(&self) -> BindingPotential {
        self.binding
    }

    pub fn kernel(&self) -> &EeKernel {
        &self.ee
    }

    pub fn has_cap(&self) -> bool {
        self.cap.is_some()
    }

    /// Spectral-radius estimate of the one-body operator at peak vector
    /// potential `a_max`, used to cap explicit step sizes at the stability
    /// limit.
    pub fn spectral_radius_estimate(&self, a_max: f64) -> f64 {
        let dx = self.grid.dx();
        let k_max = std::f64::consts::PI / dx;
        let v_max = self
            .v_diag
            .iter()
            .fold(0.0f64, |acc, &v| acc.max(v.abs()));
        let cap_max = if self.cap.is_some() { 2.0 } else { 0.0 };
        2.0 / (dx * dx) + v_max + a_max.abs() * k_max + 0.5 * a_max * a_max + cap_max
    }

    pub fn cap_spec(&self) -> Option<CapSpec> {
        self.cap.as_ref().map(|(c, _)| *c)
    }

    /// One-body h(t) f = [-1/2 d^2/dx^2 + A p + V + A^2/2 - E_s x (- i W)] f.
    fn apply_one_body(
        &self,
        a_t: f64,
        include_cap: bool,
        f: &[Complex64],
        out: &mut [Complex64],
    ) {
        let n = f.len();
        let dx = self.grid.dx();
        apply_kinetic_into(dx, f, out);
        if a_t != 0.0 {
            let w = Complex64::new(0.0, -a_t * 0.5 / dx);
            out[0] += w * f[1];
            for i in 1..n - 1 {
                out[i] += w * (f[i + 1] - f[i - 1]);
            }
            out[n - 1] += w * (-f[n - 2]);
        }
        let a2 = 0.5 * a_t * a_t;
        let x = self.grid.x();
        if self.static_field != 0.0 {
            for i in 0..n {
                out[i] += (self.v_diag[i] + a2 - self.static_field * x[i]) * f[i];
            }
        } else {
            for i in 0..n {
                out[i] += (self.v_diag[i] + a2) * f[i];
            }
        }
        if include_cap {
            if let Some((_, w)) = &self.cap {
                for i in 0..n {
                    out[i] += Complex64::new(0.0, -w[i]) * f[i];
                }
            }
        }
    }

    /// Apply h(t) to every orbital row.
    fn one_body_applied(
        &self,
        orbitals: &Array2<Complex64>,
        a_t: f64,
        include_cap: bool,
    ) -> Array2<Complex64> {
        let m = orbitals.nrows();
        let n = orbitals.ncols();
        let mut out = Array2::<Complex64>::zeros((m, n));
        let src = orbitals.as_slice().unwrap();
        let dst = out.as_slice_mut().unwrap();
        let apply = |(row_out, row_in): (&mut [Complex64], &[Complex64])| {
            self.apply_one_body(a_t, include_cap, row_in, row_out);
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            dst.par_chunks_mut(n).zip(src.par_chunks(n)).for_each(apply);
        }
        #[cfg(not(feature = "parallel"))]
        {
            dst.chunks_mut(n).zip(src.chunks(n)).for_each(apply);
        }
        out
    }
}

/// Two-electron integrals g[p,q,r,s] = <phi_p | W_qs | phi_r> from the mean
/// fields. Physicists' index convention throughout.
pub fn two_body_integrals(
    orbitals: &Array2<Complex64>,
    w: &Array3<Complex64>,
    dx: f64,
) -> Array4<Complex64> {
    #[cfg(feature = "parallel")]
    {
        two_body_integrals_par(orbitals, w, dx)
    }
    #[cfg(not(feature = "parallel"))]
    {
        two_body_integrals_seq(orbitals, w, dx)
    }
}

fn two_body_block(
    orbitals: &Array2<Complex64>,
    w: &Array3<Complex64>,
    dx: f64,
    q: usize,
    s: usize,
) -> Array2<Complex64> {
    let m = orbitals.nrows();
    let n = orbitals.ncols();
    let wqs = w.index_axis(ndarray::Axis(0), q);
    let wqs = wqs.index_axis(ndarray::Axis(0), s);
    let wslice = wqs.as_slice().unwrap();
    let orb = orbitals.as_slice().unwrap();
    let mut blk = Array2::<Complex64>::zeros((m, m));
    let mut u = vec![Complex64::default(); n];
    for r in 0..m {
        let phir = &orb[r * n..(r + 1) * n];
        for i in 0..n {
            u[i] = wslice[i] * phir[i];
        }
        for p in 0..m {
            let phip = &orb[p * n..(p + 1) * n];
            let mut acc = Complex64::default();
            for i in 0..n {
                acc += phip[i].conj() * u[i];
            }
            blk[(p, r)] = acc * dx;
        }
    }
    blk
}

fn assemble_two_body(
    m: usize,
    blocks: Vec<((usize, usize), Array2<Complex64>)>,
) -> Array4<Complex64> {
    let mut g = Array4::<Complex64>::zeros((m, m, m, m));
    for ((q, s), blk) in blocks {
        for p in 0..m {
            for r in 0..m {
                g[(p, q, r, s)] = blk[(p, r)];
                if q != s {
                    // g[r,s,p,q] = conj(g[p,q,r,s]): W_sq = conj(W_qs)
                    g[(r, s, p, q)] = blk[(p, r)].conj();
                }
            }
        }
    }
    g
}

pub fn two_body_integrals_seq(
    orbitals: &Array2<Complex64>,
    w: &Array3<Complex64>,
    dx: f64,
) -> Array4<Complex64> {
    let m = orbitals.nrows();
    let blocks: Vec<((usize, usize), Array2<Complex64>)> = (0..m)
        .flat_map(|q| (q..m).map(move |s| (q, s)))
        .map(|(q, s)| ((q, s), two_body_block(orbitals, w, dx, q, s)))
        .collect();
    assemble_two_body(m, blocks)
}

#[cfg(feature = "parallel")]
pub fn two_body_integrals_par(
    orbitals: &Array2<Complex64>,
    w: &Array3<Complex64>,
    dx: f64,
) -> Array4<Complex64> {
    use rayon::prelude::*;
    let m = orbitals.nrows();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|q| (q..m).map(move |s| (q, s))).collect();
    let blocks: Vec<((usize, usize), Array2<Complex64>)> = pairs
        .par_iter()
        .map(|&(q, s)| ((q, s), two_body_block(orbitals, w, dx, q, s)))
        .collect();
    assemble_two_body(m, blocks)
}

/// Diagnostics from one equations-of-motion evaluation.
#[derive(Debug, Clone, Copy)]
pub struct ActionDiag {
    /// Smallest eigenvalue of rho1; values at or below the regularization
    /// floor mean the inverse was regularized.
    pub rho1_min_eig: f64,
}

/// Everything needed to evaluate the equations of motion.
pub struct EomContext<'a> {
    pub ham: &'a Hamiltonian,
    pub basis: &'a DeterminantBasis,
    pub pulse: Option<&'a LaserPulse>,
    pub eps_reg: f64,
    pub include_cap: bool,
    /// Reference energy subtracted from the CI Hamiltonian. The coefficients
    /// then integrate in a frame rotating at exp(-i e_ref t); the fast
    /// global phase carries no information and would otherwise dominate the
    /// step-size control. Callers restore the physical phase when they need
    /// the literal wave function.
    pub e_ref: f64,
}

impl EomContext<'_> {
    fn n_det(&self) -> usize {
        self.basis.len()
    }

    /// The "action" M y = (H_CI A, Q[...] phi). Real-time derivative is
    /// -i * action, imaginary-time derivative is -action.
    ///
    /// Layout of `y` and `out`: CI coefficients first, then orbitals row-major.
    pub fn action_flat(&self, t: f64, y: &[Complex64], out: &mut [Complex64]) -> ActionDiag {
        let n_det = self.n_det();
        let m = self.basis.m();
        let n = self.ham.grid.len();
        let dx = self.ham.grid.dx();
        debug_assert_eq!(y.len(), n_det + m * n);

        let ci = &y[..n_det];
        let orbitals =
            ndarray::ArrayView2::from_shape((m, n), &y[n_det..]).unwrap().to_owned();

        let a_t = self.pulse.map_or(0.0, |p| p.vector_potential_at(t));

        // one-body applied orbitals and matrix
        let h_orb = self.ham.one_body_applied(&orbitals, a_t, self.include_cap);
        let orb_slice = orbitals.as_slice().unwrap();
        let horb_slice = h_orb.as_slice().unwrap();
        let mut h = Array2::<Complex64>::zeros((m, m));
        for p in 0..m {
            for q in 0..m {
                h[(p, q)] = linalg::row_inner(
                    &orb_slice[p * n..(p + 1) * n],
                    &horb_slice[q * n..(q + 1) * n],
                    dx,
                );
            }
        }

        // mean fields and two-body integrals
        let w = mean_field_operators(&orbitals, &self.ham.ee);
        let g = two_body_integrals(&orbitals, &w, dx);

        // reduced densities
        let rho1 = self.basis.one_body_density(ci);
        let rho2 = self.basis.two_body_density(ci);

        // CI action, in the rotating frame
        let (ci_out, orb_out) = out.split_at_mut(n_det);
        self.basis.apply_hamiltonian(&h, &g, ci, ci_out);
        if self.e_ref != 0.0 {
            for (y, a) in ci_out.iter_mut().zip(ci) {
                *y -= self.e_ref * a;
            }
        }

        // regularized rho1 inverse
        let eig = linalg::hermitian_eigen(&rho1).expect("rho1 eigen");
        let rho1_min_eig = eig.values[0];
        let mut inv = Array2::<Complex64>::zeros((m, m));
        for (k, &wv) in eig.values.iter().enumerate() {
            let iw = 1.0 / wv.max(self.eps_reg);
            for i in 0..m {
                for j in 0..m {
                    inv[(i, j)] += iw * eig.vectors[(i, k)] * eig.vectors[(j, k)].conj();
                }
            }
        }

        // two-body orbital terms G2_a = sum_{qrs} rho2[a,q,r,s] W_qs phi_r
        let worb = w.as_slice().unwrap(); // [m, m, n] row-major
        let orb = orbitals.as_slice().unwrap();
        let g2_row = |a: usize| -> Vec<Complex64> {
            let mut coeff = vec![Complex64::default(); m * m]; // (q*m+s) -> per r below
            let mut row = vec![Complex64::default(); n];
            for r in 0..m {
                for q in 0..m {
                    for s in 0..m {
                        coeff[q * m + s] = rho2[(a, q, r, s)];
                    }
                }
                let phir = &orb[r * n..(r + 1) * n];
                for q in 0..m {
                    for s in 0..m {
                        let c = coeff[q * m + s];
                        if c.norm_sqr() < 1e-60 {
                            continue;
                        }
                        let wqs = &worb[(q * m + s) * n..(q * m + s + 1) * n];
                        for i in 0..n {
                            row[i] += c * wqs[i] * phir[i];
                        }
                    }
                }
            }
            row
        };
        #[cfg(feature = "parallel")]
        let g2: Vec<Vec<Complex64>> = {
            use rayon::prelude::*;
            (0..m).into_par_iter().map(g2_row).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let g2: Vec<Vec<Complex64>> = (0..m).map(g2_row).collect();

        // assemble raw orbital action and project with Q
        let houtslice = h_orb.as_slice().unwrap();
        let raw_row = |j: usize| -> Vec<Complex64> {
            let mut row = houtslice[j * n..(j + 1) * n].to_vec();
            for a in 0..m {
                let c = inv[(j, a)];
                if c.norm_sqr() < 1e-60 {
                    continue;
                }
                let ga = &g2[a];
                for i in 0..n {
                    row[i] += c * ga[i];
                }
            }
            // Q projection: subtract sum_i phi_i <phi_i | row>
            let mut coeffs = vec![Complex64::default(); m];
            for i in 0..m {
                let phii = &orb[i * n..(i + 1) * n];
                let mut acc = Complex64::default();
                for x in 0..n {
                    acc += phii[x].conj() * row[x];
                }
                coeffs[i] = acc * dx;
            }
            for i in 0..m {
                let c = coeffs[i];
                let phii = &orb[i * n..(i + 1) * n];
                for x in 0..n {
                    row[x] -= c * phii[x];
                }
            }
            row
        };
        #[cfg(feature = "parallel")]
        let rows: Vec<Vec<Complex64>> = {
            use rayon::prelude::*;
            (0..m).into_par_iter().map(raw_row).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let rows: Vec<Vec<Complex64>> = (0..m).map(raw_row).collect();

        for (j, row) in rows.iter().enumerate() {
            orb_out[j * n..(j + 1) * n].copy_from_slice(row);
        }

        ActionDiag { rho1_min_eig }
    }

    /// Total energy <H(t)> with the absorber excluded. Real by construction;
    /// the imaginary residue is asserted small and dropped.
    pub fn total_energy(&self, t: f64, state: &McState) -> f64 {
        let m = state.m();
        let n = state.n_grid();
        let dx = self.ham.grid.dx();
        let a_t = self.pulse.map_or(0.0, |p| p.vector_potential_at(t));
        let h_orb = self.ham.one_body_applied(&state.orbitals, a_t, false);
        let orb_slice = state.orbitals.as_slice().unwrap();
        let horb_slice = h_orb.as_slice().unwrap();
        let mut h = Array2::<Complex64>::zeros((m, m));
        for p in 0..m {
            for q in 0..m {
                h[(p, q)] = linalg::row_inner(
                    &orb_slice[p * n..(p + 1) * n],
                    &horb_slice[q * n..(q + 1) * n],
                    dx,
                );
            }
        }
        let w = mean_field_operators(&state.orbitals, &self.ham.ee);
        let g = two_body_integrals(&state.orbitals, &w, dx);
        let ci = state.ci.as_slice().unwrap();
        let rho1 = self.basis.one_body_density(ci);
        let rho2 = self.basis.two_body_density(ci);

        let mut e = Complex64::default();
        for p in 0..m {
            for q in 0..m {
                e += h[(p, q)] * rho1[(p, q)];
            }
        }
        for p in 0..m {
            for q in 0..m {
                for r in 0..m {
                    for s in 0..m {
                        e += 0.5 * g[(p, q, r, s)] * rho2[(p, q, r, s)];
                    }
                }
            }
        }
        debug_assert!(
            e.im.abs() < 1e-8 * e.re.abs().max(1.0),
            "energy has imaginary residue {}",
            e.im
        );
        e.re
    }

    /// Largest |<phi_i | dphi_j/dt>| of an evaluation; the Q projection keeps
    /// this at round-off.
    pub fn gauge_residual(&self, t: f64, state: &McState) -> f64 {
        let n_det = self.n_det();
        let m = state.m();
        let n = state.n_grid();
        let dx = self.ham.grid.dx();
        let y = state.flatten();
        let mut out = vec![Complex64::default(); y.len()];
        self.action_flat(t, &y, &mut out);
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let phii = state.orbitals.row(i);
                let dphj = &out[n_det + j * n..n_det + (j + 1) * n];
                let mut acc = Complex64::default();
                for (a, b) in phii.iter().zip(dphj) {
                    acc += a.conj() * b;
                }
                worst = worst.max((acc * dx).norm());
            }
        }
        worst
    }
}

/// Lowest-m eigenfunctions of the field-free one-body Hamiltonian, as
/// orthonormal initial orbitals.
pub fn initial_orbitals(ham: &Hamiltonian, m: usize) -> Result<Array2<Complex64>> {
    let grid = &ham.grid;
    let n = grid.len();
    if m > n / 2 {
        return Err(Error::InvalidArgument(format!(
            "{m} orbitals on a {n}-point grid"
        )));
    }
    let dx = grid.dx();
    let w = 1.0 / (dx * dx);
    let diag: Vec<f64> = (0..n)
        .map(|i| w + ham.v_diag[i] - ham.static_field * grid.x()[i])
        .collect();
    let off = vec![-0.5 * w; n - 1];
    let pairs = linalg::tridiagonal_lowest(&diag, &off, m)?;
    let mut orbitals = Array2::<Complex64>::zeros((m, n));
    let scale = 1.0 / dx.sqrt();
    for (j, (_, vec)) in pairs.iter().enumerate() {
        for (i, &v) in vec.iter().enumerate() {
            orbitals[(j, i)] = Complex64::new(v * scale, 0.0);
        }
    }
    // eigenvectors of a symmetric tridiagonal matrix are orthogonal; fix any
    // residual drift from the inverse iteration
    linalg::lowdin_orthonormalize(&mut orbitals, dx)?;
    Ok(orbitals)
}

/// Aufbau initial state: ground determinant with unit coefficient.
pub fn initial_state(ham: &Hamiltonian, basis: &DeterminantBasis, m: usize) -> Result<McState> {
    let orbitals = initial_orbitals(ham, m)?;
    let mut ci = Array1::<Complex64>::zeros(basis.len());
    ci[basis.aufbau()] = Complex64::new(1.0, 0.0);
    Ok(McState {
        orbitals,
        ci,
        t: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::SoftCoreModel;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn small_system() -> (Hamiltonian, DeterminantBasis) {
        let grid = Grid1D::new(10.0, 101).unwrap();
        let model = SoftCoreModel::new(2.0, 1.0, 1.0, 2).unwrap();
        let ham = Hamiltonian::new(grid, model.binding(), model.a_ee, None);
        let basis = DeterminantBasis::new(3, 1, 1).unwrap();
        (ham, basis)
    }

    fn random_state(ham: &Hamiltonian, basis: &DeterminantBasis, seed: u64) -> McState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = basis.m();
        let n = ham.grid().len();
        let mut orbitals = Array2::<Complex64>::zeros((m, n));
        for j in 0..m {
            for i in 0..n {
                let x = ham.grid().x()[i];
                let noise = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                orbitals[(j, i)] =
                    noise * (-0.2 * x * x).exp() + Complex64::new((-0.5 * x * x).exp(), 0.0);
            }
        }
        linalg::lowdin_orthonormalize(&mut orbitals, ham.grid().dx()).unwrap();
        let mut ci = Array1::<Complex64>::zeros(basis.len());
        for z in ci.iter_mut() {
            *z = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
        let norm = ci.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        ci.mapv_inplace(|z| z / norm);
        McState {
            orbitals,
            ci,
            t: 0.0,
        }
    }

    #[test]
    fn initial_orbitals_are_orthonormal_eigenfunctions() {
        let (ham, _) = small_system();
        let orbitals = initial_orbitals(&ham, 4).unwrap();
        assert!(linalg::ortho_drift(&orbitals, ham.grid().dx()) < 1e-10);
    }

    #[test]
    fn gauge_constraint_holds_after_projection() {
        let (ham, basis) = small_system();
        let state = random_state(&ham, &basis, 3);
        let ctx = EomContext {
            ham: &ham,
            basis: &basis,
            pulse: None,
            eps_reg: 1e-8,
            include_cap: false,
            e_ref: 0.0,
        };
        assert!(ctx.gauge_residual(0.0, &state) < 1e-10);
    }

    #[test]
    fn energy_from_densities_matches_ci_expectation() {
        // <A|H_CI|A> must equal tr(rho1 h) + 1/2 tr(rho2 g): same operator,
        // two routes through the code
        let (ham, basis) = small_system();
        let state = random_state(&ham, &basis, 7);
        let ctx = EomContext {
            ham: &ham,
            basis: &basis,
            pulse: None,
            eps_reg: 1e-8,
            include_cap: false,
            e_ref: 0.0,
        };
        let e_rho = ctx.total_energy(0.0, &state);

        let y = state.flatten();
        let mut out = vec![Complex64::default(); y.len()];
        ctx.action_flat(0.0, &y, &mut out);
        let mut e_ci = Complex64::default();
        for (a, ha) in state.ci.iter().zip(&out[..basis.len()]) {
            e_ci += a.conj() * ha;
        }
        assert_abs_diff_eq!(e_ci.im, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(e_rho, e_ci.re, epsilon = 1e-10);
    }

    #[test]
    fn harmonic_well_initial_orbital_energies() {
        let grid = Grid1D::new(10.0, 401).unwrap();
        let ham = Hamiltonian::new(grid, BindingPotential::Harmonic { omega: 1.0 }, 1.0, None);
        let orbitals = initial_orbitals(&ham, 3).unwrap();
        // Rayleigh quotients ~ 0.5, 1.5, 2.5
        let dx = ham.grid().dx();
        for (j, expect) in [(0usize, 0.5), (1, 1.5), (2, 2.5)] {
            let row = orbitals.row(j).to_owned();
            let mut hrow = vec![Complex64::default(); ham.grid().len()];
            ham.apply_one_body(0.0, false, row.as_slice().unwrap(), &mut hrow);
            let mut acc = Complex64::default();
            for (a, b) in row.iter().zip(&hrow) {
                acc += a.conj() * b;
            }
            assert_abs_diff_eq!((acc * dx).re, expect, epsilon = 30.0 * dx * dx);
        }
    }
}
