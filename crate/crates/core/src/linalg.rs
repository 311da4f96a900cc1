//! Small dense linear algebra: Hermitian eigendecomposition by cyclic Jacobi
//! (orbital-space matrices, m <= 16) and a Sturm-bisection eigensolver for
//! real symmetric tridiagonal matrices (one-body grid Hamiltonians).

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigendecomposition `H = V diag(w) V^H` of a Hermitian matrix.
/// Eigenvalues ascending; eigenvectors are the columns of `vectors`.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Array2<Complex64>,
}

/// Cyclic Jacobi diagonalization. Intended for small matrices; cost grows as
/// O(n^3) per sweep.
pub fn hermitian_eigen(h: &Array2<Complex64>) -> Result<HermitianEigen> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::InvalidArgument("matrix must be square".into()));
    }
    let mut a = h.clone();
    let mut v = Array2::<Complex64>::eye(n);
    let scale: f64 = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);

    for _sweep in 0..60 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let b = apq.norm();
                if b < 1e-300 {
                    continue;
                }
                let phase = apq / b;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = 0.5 * (2.0 * b).atan2(aqq - app);
                let (s, c) = theta.sin_cos();
                let sp = s * phase; // s * e^{i phi}
                // A <- R^H A R with R = [[c, sp], [-sp^*, c]] acting on (p, q)
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sp.conj() * akq;
                    a[(k, q)] = sp * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sp * aqk;
                    a[(q, k)] = sp.conj() * apk + c * aqk;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sp.conj() * vkq;
                    v[(k, q)] = sp * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = Array2::<Complex64>::zeros((n, n));
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, new)] = v[(k, old)];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// `f(H)` for Hermitian `H` through its eigendecomposition.
pub fn hermitian_function(
    h: &Array2<Complex64>,
    f: impl Fn(f64) -> f64,
) -> Result<Array2<Complex64>> {
    let eig = hermitian_eigen(h)?;
    let n = h.nrows();
    let mut out = Array2::<Complex64>::zeros((n, n));
    for (k, &w) in eig.values.iter().enumerate() {
        let fw = f(w);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += fw * eig.vectors[(i, k)] * eig.vectors[(j, k)].conj();
            }
        }
    }
    Ok(out)
}

/// Inverse with the spectral floor used to regularize near-singular density
/// matrices: eigenvalues below `floor` are replaced by `floor`.
pub fn hermitian_inverse_floored(
    h: &Array2<Complex64>,
    floor: f64,
) -> Result<Array2<Complex64>> {
    hermitian_function(h, |w| 1.0 / w.max(floor))
}

/// Gram matrix S_ij = dx * sum_x conj(rows[i]) rows[j].
pub fn gram_matrix(rows: &Array2<Complex64>, dx: f64) -> Array2<Complex64> {
    let m = rows.nrows();
    let mut s = Array2::<Complex64>::zeros((m, m));
    for i in 0..m {
        let ri = rows.row(i);
        for j in i..m {
            let rj = rows.row(j);
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in ri.iter().zip(rj.iter()) {
                acc += a.conj() * b;
            }
            acc *= dx;
            s[(i, j)] = acc;
            if i != j {
                s[(j, i)] = acc.conj();
            }
        }
    }
    s
}

/// Largest deviation of the Gram matrix from the identity.
pub fn ortho_drift(rows: &Array2<Complex64>, dx: f64) -> f64 {
    let s = gram_matrix(rows, dx);
    let m = rows.nrows();
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((s[(i, j)] - target).norm());
        }
    }
    worst
}

/// Löwdin symmetric re-orthonormalization of the rows: phi_i <- sum_k
/// (S^{-1/2})_{ki} phi_k. The symmetric form avoids any ordering bias.
pub fn lowdin_orthonormalize(rows: &mut Array2<Complex64>, dx: f64) -> Result<()> {
    let s = gram_matrix(rows, dx);
    let m = rows.nrows();
    let inv_sqrt = hermitian_function(&s, |w| {
        if w <= 0.0 {
            0.0
        } else {
            1.0 / w.sqrt()
        }
    })?;
    let old = rows.clone();
    for i in 0..m {
        let mut row = rows.row_mut(i);
        row.fill(Complex64::new(0.0, 0.0));
        for k in 0..m {
            let c = inv_sqrt[(k, i)];
            if c.norm_sqr() == 0.0 {
                continue;
            }
            for (dst, src) in row.iter_mut().zip(old.row(k)) {
                *dst += c * src;
            }
        }
    }
    Ok(())
}

/// Lowest `k` eigenpairs of a real symmetric tridiagonal matrix by Sturm
/// bisection plus inverse iteration. `off[i]` couples rows i and i+1.
pub fn tridiagonal_lowest(diag: &[f64], off: &[f64], k: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = diag.len();
    if off.len() + 1 != n {
        return Err(Error::InvalidArgument(
            "off-diagonal must have n-1 entries".into(),
        ));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "asked for {k} eigenpairs of a {n}-dim matrix"
        )));
    }

    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = (if i > 0 { off[i - 1].abs() } else { 0.0 })
            + (if i + 1 < n { off[i].abs() } else { 0.0 });
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let span = (hi - lo).max(1e-300);

    // number of eigenvalues strictly below x
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut d = diag[0] - x;
        if d < 0.0 {
            count += 1;
        }
        for i in 1..n {
            if d.abs() < 1e-300 {
                d = 1e-300;
            }
            d = (diag[i] - x) - off[i - 1] * off[i - 1] / d;
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };

    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let mut a = lo;
        let mut b = hi;
        // λ_j is the smallest x with count_below(x + ε) > j
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if count_below(mid) > j {
                b = mid;
            } else {
                a = mid;
            }
            if b - a < 1e-15 * span + 1e-300 {
                break;
            }
        }
        let lambda = 0.5 * (a + b);
        let vec = inverse_iteration(diag, off, lambda, span, &out)?;
        out.push((lambda, vec));
    }
    Ok(out)
}

fn inverse_iteration(
    diag: &[f64],
    off: &[f64],
    lambda: f64,
    span: f64,
    previous: &[(f64, Vec<f64>)],
) -> Result<Vec<f64>> {
    let n = diag.len();
    // deterministic start vector
    let mut v: Vec<f64> = (0..n)
        .map(|i| ((i as f64 * 12.9898).sin() * 43758.5453).fract() - 0.5)
        .collect();
    normalize(&mut v);
    let shift = lambda + 1e-12 * span;
    for _ in 0..6 {
        let mut w = solve_shifted_tridiagonal(diag, off, shift, &v)?;
        // project out converged near-degenerate partners
        for (other_lambda, other_vec) in previous {
            if (other_lambda - lambda).abs() < 1e-8 * span {
                let dot: f64 = w.iter().zip(other_vec).map(|(a, b)| a * b).sum();
                for (wi, oi) in w.iter_mut().zip(other_vec) {
                    *wi -= dot * oi;
                }
            }
        }
        normalize(&mut w);
        let delta: f64 = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a.abs() - b.abs()).abs())
            .fold(0.0, f64::max);
        v = w;
        if delta < 1e-13 {
            break;
        }
    }
    // sign convention: largest-magnitude entry positive
    let imax = (0..n).max_by(|&i, &j| v[i].abs().partial_cmp(&v[j].abs()).unwrap());
    if let Some(i) = imax {
        if v[i] < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
    Ok(v)
}

/// Solve (T - shift I) x = b for tridiagonal T by elimination with partial
/// pivoting (the shift sits near an eigenvalue, so pivoting matters).
///
/// Band storage with one fill-in super-diagonal: row i holds (main[i],
/// upper[i], upper2[i]) at columns (i, i+1, i+2); lower[i] couples row i+1
/// back to column i.
fn solve_shifted_tridiagonal(
    diag: &[f64],
    off: &[f64],
    shift: f64,
    b: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut main: Vec<f64> = diag.iter().map(|d| d - shift).collect();
    let mut upper: Vec<f64> = off.to_vec();
    upper.push(0.0);
    let mut upper2 = vec![0.0f64; n];
    let mut lower: Vec<f64> = off.to_vec();
    let mut rhs = b.to_vec();

    for i in 0..n - 1 {
        if lower[i].abs() > main[i].abs() {
            // swap rows i and i+1 across columns i, i+1, i+2
            let (ri, rj) = (
                (main[i], upper[i], upper2[i]),
                (lower[i], main[i + 1], upper[i + 1]),
            );
            main[i] = rj.0;
            upper[i] = rj.1;
            upper2[i] = rj.2;
            lower[i] = ri.0;
            main[i + 1] = ri.1;
            upper[i + 1] = ri.2;
            rhs.swap(i, i + 1);
        }
        let pivot = main[i];
        if pivot.abs() < 1e-300 {
            return Err(Error::InvalidArgument(
                "singular shifted tridiagonal system".into(),
            ));
        }
        let factor = lower[i] / pivot;
        main[i + 1] -= factor * upper[i];
        upper[i + 1] -= factor * upper2[i];
        rhs[i + 1] -= factor * rhs[i];
        lower[i] = 0.0;
    }
    if main[n - 1].abs() < 1e-300 {
        return Err(Error::InvalidArgument(
            "singular shifted tridiagonal system".into(),
        ));
    }

    let mut x = vec![0.0f64; n];
    x[n - 1] = rhs[n - 1] / main[n - 1];
    if n >= 2 {
        x[n - 2] = (rhs[n - 2] - upper[n - 2] * x[n - 1]) / main[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (rhs[i] - upper[i] * x[i + 1] - upper2[i] * x[i + 2]) / main[i];
    }
    Ok(x)
}

fn normalize(v: &mut [f64]) {
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

/// Dot helper for complex row pairs (dx-weighted).
pub fn row_inner(a: &[Complex64], b: &[Complex64], dx: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * y;
    }
    acc * dx
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> Array2<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            h[(i, i)] = Complex64::new(rng.gen::<f64>() - 0.5, 0.0);
            for j in (i + 1)..n {
                let z = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        h
    }

    #[test]
    fn jacobi_reconstructs_random_hermitian() {
        for seed in 0..4 {
            let n = 8;
            let h = random_hermitian(n, seed);
            let eig = hermitian_eigen(&h).unwrap();
            // rebuild V diag(w) V^H
            let mut rec = Array2::<Complex64>::zeros((n, n));
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        rec[(i, j)] +=
                            eig.values[k] * eig.vectors[(i, k)] * eig.vectors[(j, k)].conj();
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    assert!((rec[(i, j)] - h[(i, j)]).norm() < 1e-12);
                }
            }
            for w in eig.values.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn jacobi_known_2x2() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2
        let mut h = Array2::<Complex64>::zeros((2, 2));
        h[(0, 0)] = Complex64::new(1.0, 0.0);
        h[(1, 1)] = Complex64::new(1.0, 0.0);
        h[(0, 1)] = Complex64::new(0.0, 1.0);
        h[(1, 0)] = Complex64::new(0.0, -1.0);
        let eig = hermitian_eigen(&h).unwrap();
        assert_abs_diff_eq!(eig.values[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn floored_inverse_caps_small_eigenvalues() {
        let mut h = Array2::<Complex64>::zeros((2, 2));
        h[(0, 0)] = Complex64::new(2.0, 0.0);
        h[(1, 1)] = Complex64::new(1e-14, 0.0);
        let inv = hermitian_inverse_floored(&h, 1e-8).unwrap();
        assert_abs_diff_eq!(inv[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(inv[(1, 1)].re, 1e8, epsilon = 1.0);
    }

    #[test]
    fn lowdin_restores_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = 4;
        let n = 120;
        let dx = 0.05;
        let mut rows = Array2::<Complex64>::zeros((m, n));
        for i in 0..m {
            for j in 0..n {
                rows[(i, j)] = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        lowdin_orthonormalize(&mut rows, dx).unwrap();
        assert!(ortho_drift(&rows, dx) < 1e-12);

        // perturb slightly and fix again
        rows[(0, 3)] += Complex64::new(1e-5, 0.0);
        assert!(ortho_drift(&rows, dx) > 1e-7);
        lowdin_orthonormalize(&mut rows, dx).unwrap();
        assert!(ortho_drift(&rows, dx) < 1e-12);
    }

    #[test]
    fn tridiagonal_matches_analytic_laplacian_spectrum() {
        // tridiag(a on diagonal, b off-diagonal): lambda_k = a + 2b cos(k pi/(n+1))
        let n = 50;
        let a = 2.0;
        let b = -1.0;
        let diag = vec![a; n];
        let off = vec![b; n - 1];
        let pairs = tridiagonal_lowest(&diag, &off, 5).unwrap();
        for (k, (lambda, _)) in pairs.iter().enumerate() {
            // with b < 0 the k-th smallest eigenvalue sits at small angles
            let exact =
                a + 2.0 * b * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert_abs_diff_eq!(*lambda, exact, epsilon = 1e-10);
        }
    }

    #[test]
    fn tridiagonal_harmonic_oscillator_ground_state() {
        // h = -1/2 d2/dx2 + x^2/2 discretized; ground energy 0.5 + O(dx^2)
        let l = 12.0;
        let n = 1201;
        let dx = 2.0 * l / (n - 1) as f64;
        let w = 1.0 / (dx * dx);
        let diag: Vec<f64> = (0..n)
            .map(|i| {
                let x = -l + i as f64 * dx;
                w + 0.5 * x * x
            })
            .collect();
        let off = vec![-0.5 * w; n - 1];
        let pairs = tridiagonal_lowest(&diag, &off, 3).unwrap();
        assert_abs_diff_eq!(pairs[0].0, 0.5, epsilon = 5.0 * dx * dx);
        assert_abs_diff_eq!(pairs[1].0, 1.5, epsilon = 20.0 * dx * dx);
        // eigenvector is normalized and node-free
        let v = &pairs[0].1;
        let norm: f64 = v.iter().map(|x| x * x).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        assert!(v.iter().all(|&x| x > -1e-10));
    }
}
