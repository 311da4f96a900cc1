//! Mean-field operators W_sl(x) = integral of conj(phi_s(x')) Ve(x - x')
//! phi_l(x') dx', the two-body workhorse of the orbital equations.
//!
//! On a uniform grid the rectangle-rule quadrature is a discrete convolution
//! with the kernel table Ve((i-j) dx), so the fast path evaluates it with a
//! zero-padded FFT. The direct O(n^2) sum is kept as the reference route and
//! the two are held to machine agreement in the tests.

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::grid::Grid1D;

/// Precomputed electron-electron kernel on a grid, with its padded spectrum.
pub struct EeKernel {
    n: usize,
    dx: f64,
    a_ee: f64,
    /// Ve((d - (n-1)) dx) for d in 0..2n-1
    table: Vec<f64>,
    m_fft: usize,
    kernel_hat: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl EeKernel {
    pub fn new(grid: &Grid1D, a_ee: f64) -> Self {
        let n = grid.len();
        let dx = grid.dx();
        let table: Vec<f64> = (0..2 * n - 1)
            .map(|d| {
                let s = (d as f64 - (n - 1) as f64) * dx;
                1.0 / (s * s + a_ee * a_ee).sqrt()
            })
            .collect();

        let m_fft = (2 * n - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m_fft);
        let ifft = planner.plan_fft_inverse(m_fft);

        // circulant embedding: K[t] for t >= 0 at the front, negative lags
        // wrapped to the tail
        let mut kernel_hat = vec![Complex64::new(0.0, 0.0); m_fft];
        for t in 0..n {
            kernel_hat[t] = Complex64::new(table[n - 1 + t], 0.0);
        }
        for t in 1..n {
            kernel_hat[m_fft - t] = Complex64::new(table[n - 1 - t], 0.0);
        }
        fft.process(&mut kernel_hat);

        Self {
            n,
            dx,
            a_ee,
            table,
            m_fft,
            kernel_hat,
            fft,
            ifft,
        }
    }

    pub fn a_ee(&self) -> f64 {
        self.a_ee
    }

    /// Kernel value at separation s.
    pub fn value(&self, s: f64) -> f64 {
        1.0 / (s * s + self.a_ee * self.a_ee).sqrt()
    }

    /// W(x_i) = dx * sum_j Ve((i-j) dx) f(x_j), evaluated by direct sum.
    pub fn convolve_direct(&self, f: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(f.len(), n);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            let base = n - 1 + i;
            for (j, fj) in f.iter().enumerate() {
                acc += self.table[base - j] * fj;
            }
            out[i] = acc * self.dx;
        }
        out
    }

    /// Same sum evaluated through the padded FFT.
    pub fn convolve(&self, f: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(f.len(), n);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m_fft];
        buf[..n].copy_from_slice(f);
        self.fft.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.ifft.process(&mut buf);
        let scale = self.dx / self.m_fft as f64;
        buf[..n].iter().map(|z| z * scale).collect()
    }
}

/// All m^2 mean fields for the given orbital set (rows of `orbitals`).
/// `w[(s, l, x)]` holds W_sl(x); the tensor satisfies W_sl = conj(W_ls), so
/// only the upper triangle is computed.
pub fn mean_field_operators(orbitals: &Array2<Complex64>, kernel: &EeKernel) -> Array3<Complex64> {
    #[cfg(feature = "parallel")]
    {
        mean_field_operators_par(orbitals, kernel)
    }
    #[cfg(not(feature = "parallel"))]
    {
        mean_field_operators_seq(orbitals, kernel)
    }
}

fn pair_density(orbitals: &Array2<Complex64>, s: usize, l: usize) -> Vec<Complex64> {
    orbitals
        .row(s)
        .iter()
        .zip(orbitals.row(l).iter())
        .map(|(a, b)| a.conj() * b)
        .collect()
}

fn assemble(
    orbitals: &Array2<Complex64>,
    columns: Vec<((usize, usize), Vec<Complex64>)>,
) -> Array3<Complex64> {
    let m = orbitals.nrows();
    let n = orbitals.ncols();
    let mut w = Array3::<Complex64>::zeros((m, m, n));
    for ((s, l), col) in columns {
        for (x, v) in col.iter().enumerate() {
            w[(s, l, x)] = *v;
        }
        if s != l {
            for (x, v) in col.iter().enumerate() {
                w[(l, s, x)] = v.conj();
            }
        }
    }
    w
}

pub fn mean_field_operators_seq(
    orbitals: &Array2<Complex64>,
    kernel: &EeKernel,
) -> Array3<Complex64> {
    let m = orbitals.nrows();
    let mut columns = Vec::with_capacity(m * (m + 1) / 2);
    for s in 0..m {
        for l in s..m {
            let rho = pair_density(orbitals, s, l);
            columns.push(((s, l), kernel.convolve(&rho)));
        }
    }
    assemble(orbitals, columns)
}

#[cfg(feature = "parallel")]
pub fn mean_field_operators_par(
    orbitals: &Array2<Complex64>,
    kernel: &EeKernel,
) -> Array3<Complex64> {
    use rayon::prelude::*;
    let m = orbitals.nrows();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|s| (s..m).map(move |l| (s, l))).collect();
    let columns: Vec<((usize, usize), Vec<Complex64>)> = pairs
        .par_iter()
        .map(|&(s, l)| {
            let rho = pair_density(orbitals, s, l);
            ((s, l), kernel.convolve(&rho))
        })
        .collect();
    assemble(orbitals, columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn gaussian_orbital(grid: &Grid1D, center: f64, width: f64) -> Vec<Complex64> {
        let norm: f64 = grid
            .x()
            .iter()
            .map(|&x| (-(x - center) * (x - center) / (2.0 * width * width)).exp().powi(2))
            .sum::<f64>()
            * grid.dx();
        let scale = 1.0 / norm.sqrt();
        grid.x()
            .iter()
            .map(|&x| {
                Complex64::new(
                    scale * (-(x - center) * (x - center) / (2.0 * width * width)).exp(),
                    0.0,
                )
            })
            .collect()
    }

    #[test]
    fn fft_route_matches_direct_quadrature() {
        let grid = Grid1D::new(12.0, 193).unwrap();
        let kernel = EeKernel::new(&grid, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f: Vec<Complex64> = (0..grid.len())
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let direct = kernel.convolve_direct(&f);
        let fast = kernel.convolve(&f);
        for (a, b) in direct.iter().zip(&fast) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn flat_kernel_limit() {
        // a_ee >> box: W -> (1/a_ee) <phi_s|phi_l>
        let grid = Grid1D::new(8.0, 161).unwrap();
        let a_ee = 1.0e4;
        let kernel = EeKernel::new(&grid, a_ee);
        let phi = gaussian_orbital(&grid, 0.0, 1.0);
        let mut orbitals = Array2::<Complex64>::zeros((1, grid.len()));
        for (i, v) in phi.iter().enumerate() {
            orbitals[(0, i)] = *v;
        }
        let w = mean_field_operators(&orbitals, &kernel);
        for x in 0..grid.len() {
            assert_abs_diff_eq!(w[(0, 0, x)].re, 1.0 / a_ee, epsilon = 1e-4 / a_ee);
            assert_abs_diff_eq!(w[(0, 0, x)].im, 0.0, epsilon = 1e-18);
        }
    }

    #[test]
    fn conjugate_transpose_symmetry() {
        let grid = Grid1D::new(6.0, 121).unwrap();
        let kernel = EeKernel::new(&grid, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = 3;
        let mut orbitals = Array2::<Complex64>::zeros((m, grid.len()));
        for s in 0..m {
            for x in 0..grid.len() {
                orbitals[(s, x)] = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        let w = mean_field_operators(&orbitals, &kernel);
        for s in 0..m {
            for l in 0..m {
                for x in (0..grid.len()).step_by(17) {
                    assert!((w[(s, l, x)] - w[(l, s, x)].conj()).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn disjoint_orbitals_decouple_with_separation() {
        let grid = Grid1D::new(40.0, 801).unwrap();
        let kernel = EeKernel::new(&grid, 1.0);
        let norms: Vec<f64> = [6.0, 24.0]
            .iter()
            .map(|&sep| {
                let a = gaussian_orbital(&grid, -sep / 2.0, 0.7);
                let b = gaussian_orbital(&grid, sep / 2.0, 0.7);
                let mut orbitals = Array2::<Complex64>::zeros((2, grid.len()));
                for i in 0..grid.len() {
                    orbitals[(0, i)] = a[i];
                    orbitals[(1, i)] = b[i];
                }
                let w = mean_field_operators(&orbitals, &kernel);
                (0..grid.len())
                    .map(|x| w[(0, 1, x)].norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        assert!(norms[1] < 1e-6 * norms[0], "cross mean field should vanish: {norms:?}");
    }

    #[test]
    fn seq_and_par_agree_exactly() {
        let grid = Grid1D::new(5.0, 97).unwrap();
        let kernel = EeKernel::new(&grid, 0.8);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = 4;
        let mut orbitals = Array2::<Complex64>::zeros((m, grid.len()));
        for s in 0..m {
            for x in 0..grid.len() {
                orbitals[(s, x)] = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        let a = mean_field_operators_seq(&orbitals, &kernel);
        let b = mean_field_operators(&orbitals, &kernel);
        assert_eq!(a, b);
    }
}
