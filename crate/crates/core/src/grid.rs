//! Uniform 1D grid, finite-difference operators, and the discrete inner
//! product. This is the numerical substrate every orbital operation sits on.

use ndarray::Array1;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A complex function sampled on the grid, one value per point.
pub type GridFunction = Array1<Complex64>;

/// Uniform grid on `[-l, +l]` with points at the interval endpoints.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Grid1D {
    half_width: f64,
    n_points: usize,
    dx: f64,
    #[serde(skip)]
    x: Vec<f64>,
}

impl Grid1D {
    /// Build a grid with `n_points` points spanning `[-half_width, +half_width]`.
    pub fn new(half_width: f64, n_points: usize) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grid half_width must be positive, got {half_width}"
            )));
        }
        if n_points < 3 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 3 points, got {n_points}"
            )));
        }
        let dx = 2.0 * half_width / (n_points - 1) as f64;
        let x = (0..n_points)
            .map(|i| -half_width + i as f64 * dx)
            .collect();
        Ok(Self {
            half_width,
            n_points,
            dx,
            x,
        })
    }

    /// Rebuild the point coordinates after deserialization.
    pub fn restore(half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(half_width, n_points)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    fn check_len(&self, f: &GridFunction) -> Result<()> {
        if f.len() != self.n_points {
            return Err(Error::InvalidArgument(format!(
                "grid function has {} values, grid has {} points",
                f.len(),
                self.n_points
            )));
        }
        Ok(())
    }

    /// Kinetic operator -1/2 d^2/dx^2 with the 3-point stencil and hard-wall
    /// (zero) exterior.
    pub fn apply_kinetic(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check_len(f)?;
        let mut out = GridFunction::zeros(self.n_points);
        apply_kinetic_into(self.dx, f.as_slice().unwrap(), out.as_slice_mut().unwrap());
        Ok(out)
    }

    /// Momentum operator -i d/dx with the central difference and hard-wall
    /// exterior. Shares its stencil with the exact-grid reference solver.
    pub fn apply_momentum(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check_len(f)?;
        let mut out = GridFunction::zeros(self.n_points);
        apply_momentum_into(self.dx, f.as_slice().unwrap(), out.as_slice_mut().unwrap());
        Ok(out)
    }

    /// Discrete bracket `<f|g>`: rectangle rule, conjugate-linear in `f`.
    pub fn inner_product(&self, f: &GridFunction, g: &GridFunction) -> Result<Complex64> {
        self.check_len(f)?;
        self.check_len(g)?;
        Ok(inner_product_raw(
            self.dx,
            f.as_slice().unwrap(),
            g.as_slice().unwrap(),
        ))
    }

    /// Squared L2 norm `<f|f>` (real, nonnegative).
    pub fn norm_squared(&self, f: &GridFunction) -> Result<f64> {
        self.check_len(f)?;
        Ok(f.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx)
    }
}

pub(crate) fn apply_kinetic_into(dx: f64, f: &[Complex64], out: &mut [Complex64]) {
    let n = f.len();
    let w = -0.5 / (dx * dx);
    out[0] = w * (f[1] - 2.0 * f[0]);
    for i in 1..n - 1 {
        out[i] = w * (f[i - 1] - 2.0 * f[i] + f[i + 1]);
    }
    out[n - 1] = w * (f[n - 2] - 2.0 * f[n - 1]);
}

pub(crate) fn apply_momentum_into(dx: f64, f: &[Complex64], out: &mut [Complex64]) {
    let n = f.len();
    let w = Complex64::new(0.0, -0.5 / dx);
    out[0] = w * f[1];
    for i in 1..n - 1 {
        out[i] = w * (f[i + 1] - f[i - 1]);
    }
    out[n - 1] = w * (-f[n - 2]);
}

pub(crate) fn inner_product_raw(dx: f64, f: &[Complex64], g: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in f.iter().zip(g) {
        acc += a.conj() * b;
    }
    acc * dx
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_fn(grid: &Grid1D, rng: &mut impl Rng) -> GridFunction {
        GridFunction::from_iter(
            (0..grid.len()).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)),
        )
    }

    #[test]
    fn paper_grid_spacing() {
        let g = Grid1D::new(360.0, 2400).unwrap();
        assert_abs_diff_eq!(g.dx(), 720.0 / 2399.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.dx(), 0.30013, epsilon = 1e-5);
        assert_eq!(g.x()[0], -360.0);
        assert_abs_diff_eq!(*g.x().last().unwrap(), 360.0, epsilon = 1e-12);
    }

    #[test]
    fn tiny_grid() {
        let g = Grid1D::new(1.0, 3).unwrap();
        assert_eq!(g.x(), &[-1.0, 0.0, 1.0]);
        assert_eq!(g.dx(), 1.0);
    }

    #[test]
    fn degenerate_grid_rejected() {
        assert!(Grid1D::new(360.0, 2).is_err());
        assert!(Grid1D::new(0.0, 100).is_err());
        assert!(Grid1D::new(-1.0, 100).is_err());
    }

    #[test]
    fn kinetic_of_constant_vanishes_inside() {
        let g = Grid1D::new(5.0, 101).unwrap();
        let f = GridFunction::from_elem(101, Complex64::new(1.0, 0.0));
        let t = g.apply_kinetic(&f).unwrap();
        for i in 1..100 {
            assert_abs_diff_eq!(t[i].norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn kinetic_stencil_on_unit_vector() {
        let g = Grid1D::new(1.0, 5).unwrap();
        let mut f = GridFunction::zeros(5);
        f[0] = Complex64::new(1.0, 0.0);
        let t = g.apply_kinetic(&f).unwrap();
        let d = g.dx();
        assert_abs_diff_eq!(t[0].re, 1.0 / (d * d), epsilon = 1e-14);
        assert_abs_diff_eq!(t[1].re, -0.5 / (d * d), epsilon = 1e-14);
        assert_abs_diff_eq!(t[2].norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn kinetic_second_order_convergence_on_sine() {
        // -1/2 (sin kx)'' = k^2/2 sin kx; halving dx should cut the error 4x.
        let k = 1.3;
        let mut errs = Vec::new();
        for n in [201usize, 401] {
            let g = Grid1D::new(std::f64::consts::PI / k * 4.0, n).unwrap();
            let f = GridFunction::from_iter(
                g.x().iter().map(|&x| Complex64::new((k * x).sin(), 0.0)),
            );
            let t = g.apply_kinetic(&f).unwrap();
            let err = g
                .x()
                .iter()
                .enumerate()
                .skip(1)
                .take(n - 2)
                .map(|(i, &x)| (t[i].re - 0.5 * k * k * (k * x).sin()).abs())
                .fold(0.0f64, f64::max);
            errs.push(err);
        }
        let ratio = errs[0] / errs[1];
        assert!(
            (3.0..5.5).contains(&ratio),
            "expected ~4x error reduction, got {ratio} ({errs:?})"
        );
    }

    #[test]
    fn normalized_gaussian_has_unit_norm_on_paper_grid() {
        let g = Grid1D::new(360.0, 2400).unwrap();
        let sigma = 3.0;
        let norm = (1.0 / (std::f64::consts::PI * 2.0 * sigma * sigma).sqrt()).sqrt();
        let f = GridFunction::from_iter(g.x().iter().map(|&x| {
            Complex64::new(norm * (-x * x / (4.0 * sigma * sigma)).exp(), 0.0)
        }));
        assert_abs_diff_eq!(g.norm_squared(&f).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn inner_product_conjugate_symmetry_and_parity() {
        let g = Grid1D::new(8.0, 257).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_fn(&g, &mut rng);
        let h = random_fn(&g, &mut rng);
        let fg = g.inner_product(&f, &h).unwrap();
        let gf = g.inner_product(&h, &f).unwrap();
        assert_abs_diff_eq!(fg.re, gf.conj().re, epsilon = 1e-12);
        assert_abs_diff_eq!(fg.im, gf.conj().im, epsilon = 1e-12);

        // even vs odd function: exact zero by symmetry of the grid
        let even = GridFunction::from_iter(
            g.x().iter().map(|&x| Complex64::new((-x * x).exp(), 0.0)),
        );
        let odd = GridFunction::from_iter(
            g.x().iter().map(|&x| Complex64::new(x * (-x * x).exp(), 0.0)),
        );
        assert_abs_diff_eq!(g.inner_product(&even, &odd).unwrap().norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn kinetic_is_hermitian() {
        let g = Grid1D::new(6.0, 200).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let f = random_fn(&g, &mut rng);
        let h = random_fn(&g, &mut rng);
        let tf = g.apply_kinetic(&f).unwrap();
        let th = g.apply_kinetic(&h).unwrap();
        let lhs = g.inner_product(&f, &th).unwrap();
        let rhs = g.inner_product(&tf, &h).unwrap();
        let scale = g.norm_squared(&f).unwrap().sqrt() * g.norm_squared(&h).unwrap().sqrt();
        assert!((lhs - rhs).norm() < 1e-10 * scale);
    }

    #[test]
    fn momentum_is_hermitian() {
        let g = Grid1D::new(6.0, 200).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let f = random_fn(&g, &mut rng);
        let h = random_fn(&g, &mut rng);
        let pf = g.apply_momentum(&f).unwrap();
        let ph = g.apply_momentum(&h).unwrap();
        let lhs = g.inner_product(&f, &ph).unwrap();
        let rhs = g.inner_product(&pf, &h).unwrap();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn quadrature_stable_under_refinement() {
        // doubling the point count moves <f|f> of a smooth f by O(dx^2)
        let mut vals = Vec::new();
        for n in [301usize, 601] {
            let g = Grid1D::new(10.0, n).unwrap();
            let f = GridFunction::from_iter(
                g.x().iter().map(|&x| Complex64::new((-0.5 * x * x).exp(), 0.0)),
            );
            vals.push(g.norm_squared(&f).unwrap());
        }
        assert!((vals[0] - vals[1]).abs() < 1e-10);
    }

    #[test]
    fn length_mismatch_rejected() {
        let g = Grid1D::new(1.0, 5).unwrap();
        let f = GridFunction::zeros(4);
        assert!(g.apply_kinetic(&f).is_err());
        assert!(g.inner_product(&f, &f).is_err());
    }
}
