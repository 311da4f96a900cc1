//! Slater-determinant basis over spin-restricted spatial orbitals and the
//! Slater-Condon machinery built on it: Hamiltonian application in the
//! determinant basis and one-/two-body reduced density matrices.
//!
//! Determinants are (up-string, down-string) pairs of occupation bitmasks
//! over m spatial orbitals; creation operators are ordered by spin-orbital
//! index with the up block below the down block. Two-electron integrals use
//! the physicists' convention g[p,q,r,s] = <pq|V|rs> = integral of
//! conj(phi_p(x)) conj(phi_q(y)) V(x-y) phi_r(x) phi_s(y).

use ndarray::{Array2, Array4};
use num_complex::Complex64;
use std::collections::HashMap;

use crate::error::{Error, Result};

/// Annihilate spin-orbital `so` in `mask`: returns (new mask, sign).
#[inline]
fn annihilate(mask: u64, so: u32) -> Option<(u64, f64)> {
    if mask & (1 << so) == 0 {
        return None;
    }
    let below = (mask & ((1u64 << so) - 1)).count_ones();
    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
    Some((mask & !(1 << so), sign))
}

/// Create spin-orbital `so` in `mask`: returns (new mask, sign).
#[inline]
fn create(mask: u64, so: u32) -> Option<(u64, f64)> {
    if mask & (1 << so) != 0 {
        return None;
    }
    let below = (mask & ((1u64 << so) - 1)).count_ones();
    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
    Some((mask | (1 << so), sign))
}

/// All n-subsets of {0..m} as bitmasks, in lexicographic order of the
/// ascending occupation tuples.
fn combinations(m: usize, n: usize) -> Vec<u32> {
    if n > m {
        return Vec::new();
    }
    if n == 0 {
        return vec![0];
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    loop {
        out.push(idx.iter().fold(0u32, |acc, &i| acc | (1 << i)));
        // advance to the next combination
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + m - n {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Single {
    j: u32,
    k: u32,
    p: u8,
    q: u8,
    up: bool,
    phase: f64,
}

#[derive(Debug, Clone, Copy)]
struct DoubleSame {
    j: u32,
    k: u32,
    p: u8,
    r: u8,
    q: u8,
    s: u8,
    phase: f64,
}

#[derive(Debug, Clone, Copy)]
struct DoubleCross {
    j: u32,
    k: u32,
    p_up: u8,
    q_up: u8,
    p_dn: u8,
    q_dn: u8,
    phase: f64,
}

/// Basis of all determinants with fixed (n_up, n_dn) occupation numbers,
/// plus precomputed excitation coupling tables.
pub struct DeterminantBasis {
    m: usize,
    n_up: usize,
    n_dn: usize,
    up_strings: Vec<u32>,
    dn_strings: Vec<u32>,
    singles: Vec<Single>,
    doubles_same: Vec<DoubleSame>,
    doubles_cross: Vec<DoubleCross>,
}

impl DeterminantBasis {
    pub fn new(m: usize, n_up: usize, n_dn: usize) -> Result<Self> {
        if m == 0 || m > 30 {
            return Err(Error::InvalidArgument(format!(
                "orbital count must be in 1..=30, got {m}"
            )));
        }
        if n_up > m || n_dn > m {
            return Err(Error::InvalidArgument(format!(
                "cannot place {n_up} up / {n_dn} down electrons in {m} orbitals"
            )));
        }
        let up_strings = combinations(m, n_up);
        let dn_strings = combinations(m, n_dn);
        let up_index: HashMap<u32, u32> = up_strings
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, i as u32))
            .collect();
        let dn_index: HashMap<u32, u32> = dn_strings
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, i as u32))
            .collect();

        let mut basis = Self {
            m,
            n_up,
            n_dn,
            up_strings,
            dn_strings,
            singles: Vec::new(),
            doubles_same: Vec::new(),
            doubles_cross: Vec::new(),
        };
        basis.build_couplings(&up_index, &dn_index);
        Ok(basis)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_up(&self) -> usize {
        self.n_up
    }

    pub fn n_dn(&self) -> usize {
        self.n_dn
    }

    pub fn n_electrons(&self) -> usize {
        self.n_up + self.n_dn
    }

    /// Number of determinants C(m, n_up) * C(m, n_dn).
    pub fn len(&self) -> usize {
        self.up_strings.len() * self.dn_strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Full 2m-bit occupation mask (up block low, down block high).
    pub fn full_mask(&self, det: usize) -> u64 {
        let (iu, id) = self.split(det);
        (self.up_strings[iu] as u64) | ((self.dn_strings[id] as u64) << self.m)
    }

    /// Index of the Aufbau determinant (lowest orbitals filled): always 0.
    pub fn aufbau(&self) -> usize {
        0
    }

    #[inline]
    fn split(&self, det: usize) -> (usize, usize) {
        (det / self.dn_strings.len(), det % self.dn_strings.len())
    }

    fn build_couplings(&mut self, up_index: &HashMap<u32, u32>, dn_index: &HashMap<u32, u32>) {
        let m = self.m as u32;
        let n_dn_str = self.dn_strings.len();

        for k in 0..self.len() {
            let (iu, id) = self.split(k);
            let ku = self.up_strings[iu];
            let kd = self.dn_strings[id];
            let full = (ku as u64) | ((kd as u64) << m);

            // single excitations, both spins
            for spin_up in [true, false] {
                let (occ, base) = if spin_up { (ku, 0) } else { (kd, m) };
                for q in bits(occ) {
                    for p in bits(!occ & ((1u32 << m) - 1)) {
                        let (m1, s1) = annihilate(full, base + q).unwrap();
                        let (m2, s2) = create(m1, base + p).unwrap();
                        let j = self.index_of_mask(m2, up_index, dn_index, n_dn_str);
                        self.singles.push(Single {
                            j,
                            k: k as u32,
                            p: p as u8,
                            q: q as u8,
                            up: spin_up,
                            phase: s1 * s2,
                        });
                    }
                }
            }

            // same-spin doubles: q < s annihilated, p < r created
            for spin_up in [true, false] {
                let (occ, base) = if spin_up { (ku, 0) } else { (kd, m) };
                let occ_list: Vec<u32> = bits(occ).collect();
                let virt_list: Vec<u32> = bits(!occ & ((1u32 << m) - 1)).collect();
                for (a, &q) in occ_list.iter().enumerate() {
                    for &s in &occ_list[a + 1..] {
                        for (b, &p) in virt_list.iter().enumerate() {
                            for &r in &virt_list[b + 1..] {
                                // a+_p a+_r a_s a_q |K>
                                let (m1, s1) = annihilate(full, base + q).unwrap();
                                let (m2, s2) = annihilate(m1, base + s).unwrap();
                                let (m3, s3) = create(m2, base + r).unwrap();
                                let (m4, s4) = create(m3, base + p).unwrap();
                                let j = self.index_of_mask(m4, up_index, dn_index, n_dn_str);
                                self.doubles_same.push(DoubleSame {
                                    j,
                                    k: k as u32,
                                    p: p as u8,
                                    r: r as u8,
                                    q: q as u8,
                                    s: s as u8,
                                    phase: s1 * s2 * s3 * s4,
                                });
                            }
                        }
                    }
                }
            }

            // cross-spin doubles
            for q_up in bits(ku) {
                for p_up in bits(!ku & ((1u32 << m) - 1)) {
                    for q_dn in bits(kd) {
                        for p_dn in bits(!kd & ((1u32 << m) - 1)) {
                            // a+_{pu,up} a+_{pd,dn} a_{qd,dn} a_{qu,up} |K>
                            let (m1, s1) = annihilate(full, q_up).unwrap();
                            let (m2, s2) = annihilate(m1, m + q_dn).unwrap();
                            let (m3, s3) = create(m2, m + p_dn).unwrap();
                            let (m4, s4) = create(m3, p_up).unwrap();
                            let j = self.index_of_mask(m4, up_index, dn_index, n_dn_str);
                            self.doubles_cross.push(DoubleCross {
                                j,
                                k: k as u32,
                                p_up: p_up as u8,
                                q_up: q_up as u8,
                                p_dn: p_dn as u8,
                                q_dn: q_dn as u8,
                                phase: s1 * s2 * s3 * s4,
                            });
                        }
                    }
                }
            }
        }
    }

    fn index_of_mask(
        &self,
        mask: u64,
        up_index: &HashMap<u32, u32>,
        dn_index: &HashMap<u32, u32>,
        n_dn_str: usize,
    ) -> u32 {
        let up = (mask & ((1u64 << self.m) - 1)) as u32;
        let dn = (mask >> self.m) as u32;
        up_index[&up] * n_dn_str as u32 + dn_index[&dn]
    }

    /// Occupied (spatial, is_up) pairs of a determinant.
    fn occupied(&self, det: usize) -> impl Iterator<Item = (usize, bool)> + '_ {
        let (iu, id) = self.split(det);
        let up = self.up_strings[iu];
        let dn = self.dn_strings[id];
        bits(up)
            .map(|p| (p as usize, true))
            .chain(bits(dn).map(|p| (p as usize, false)))
    }

    /// y += H a in the determinant basis, with one-body matrix `h` (may be
    /// non-Hermitian when the absorber is folded in) and two-body tensor `g`.
    pub fn apply_hamiltonian(
        &self,
        h: &Array2<Complex64>,
        g: &Array4<Complex64>,
        a: &[Complex64],
        y: &mut [Complex64],
    ) {
        assert_eq!(a.len(), self.len());
        assert_eq!(y.len(), self.len());
        y.fill(Complex64::new(0.0, 0.0));

        // diagonal
        for det in 0..self.len() {
            if a[det] == Complex64::new(0.0, 0.0) {
                continue;
            }
            let occ: Vec<(usize, bool)> = self.occupied(det).collect();
            let mut e = Complex64::new(0.0, 0.0);
            for &(p, _) in &occ {
                e += h[(p, p)];
            }
            for (i, &(p, sp)) in occ.iter().enumerate() {
                for &(q, sq) in &occ[i + 1..] {
                    e += g[(p, q, p, q)];
                    if sp == sq {
                        e -= g[(p, q, q, p)];
                    }
                }
            }
            y[det] += e * a[det];
        }

        // singles
        for s in &self.singles {
            let ak = a[s.k as usize];
            if ak == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (p, q) = (s.p as usize, s.q as usize);
            let mut e = h[(p, q)];
            for (c, c_up) in self.occupied(s.k as usize) {
                if c == q && c_up == s.up {
                    continue;
                }
                e += g[(p, c, q, c)];
                if c_up == s.up {
                    e -= g[(p, c, c, q)];
                }
            }
            y[s.j as usize] += s.phase * e * ak;
        }

        // doubles
        for d in &self.doubles_same {
            let ak = a[d.k as usize];
            if ak == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (p, r, q, sx) = (d.p as usize, d.r as usize, d.q as usize, d.s as usize);
            let e = g[(p, r, q, sx)] - g[(p, r, sx, q)];
            y[d.j as usize] += d.phase * e * ak;
        }
        for d in &self.doubles_cross {
            let ak = a[d.k as usize];
            if ak == Complex64::new(0.0, 0.0) {
                continue;
            }
            let e = g[(d.p_up as usize, d.p_dn as usize, d.q_up as usize, d.q_dn as usize)];
            y[d.j as usize] += d.phase * e * ak;
        }
    }

    /// Dense Hamiltonian matrix; for small bases and tests.
    pub fn hamiltonian_matrix(&self, h: &Array2<Complex64>, g: &Array4<Complex64>) -> Array2<Complex64> {
        let n = self.len();
        let mut out = Array2::<Complex64>::zeros((n, n));
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        let mut unit = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            unit[k] = Complex64::new(1.0, 0.0);
            self.apply_hamiltonian(h, g, &unit, &mut col);
            for j in 0..n {
                out[(j, k)] = col[j];
            }
            unit[k] = Complex64::new(0.0, 0.0);
        }
        out
    }

    /// One-body reduced density rho1[p,q] = < sum_sigma a+_{p sigma} a_{q sigma} >.
    /// Hermitian with trace n * |A|^2.
    pub fn one_body_density(&self, a: &[Complex64]) -> Array2<Complex64> {
        assert_eq!(a.len(), self.len());
        let mut rho = Array2::<Complex64>::zeros((self.m, self.m));
        for det in 0..self.len() {
            let w = a[det].norm_sqr();
            if w == 0.0 {
                continue;
            }
            for (p, _) in self.occupied(det) {
                rho[(p, p)] += w;
            }
        }
        for s in &self.singles {
            let z = s.phase * a[s.j as usize].conj() * a[s.k as usize];
            rho[(s.p as usize, s.q as usize)] += z;
        }
        rho
    }

    /// Two-body reduced density
    /// rho2[p,q,r,s] = < sum_{sigma tau} a+_{p sigma} a+_{q tau} a_{s tau} a_{r sigma} >.
    pub fn two_body_density(&self, a: &[Complex64]) -> Array4<Complex64> {
        assert_eq!(a.len(), self.len());
        let m = self.m;
        let mut rho = Array4::<Complex64>::zeros((m, m, m, m));

        for det in 0..self.len() {
            let w = a[det].norm_sqr();
            if w == 0.0 {
                continue;
            }
            let occ: Vec<(usize, bool)> = self.occupied(det).collect();
            for &(p, sp) in &occ {
                for &(q, sq) in &occ {
                    if p == q && sp == sq {
                        continue;
                    }
                    rho[(p, q, p, q)] += w;
                    if sp == sq {
                        rho[(p, q, q, p)] -= w;
                    }
                }
            }
        }

        for s in &self.singles {
            let z = s.phase * a[s.j as usize].conj() * a[s.k as usize];
            if z == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (p, q) = (s.p as usize, s.q as usize);
            for (c, c_up) in self.occupied(s.k as usize) {
                if c == q && c_up == s.up {
                    continue;
                }
                rho[(p, c, q, c)] += z;
                rho[(c, p, c, q)] += z;
                if c_up == s.up {
                    rho[(p, c, c, q)] -= z;
                    rho[(c, p, q, c)] -= z;
                }
            }
        }

        for d in &self.doubles_same {
            let z = d.phase * a[d.j as usize].conj() * a[d.k as usize];
            if z == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (p, r, q, sx) = (d.p as usize, d.r as usize, d.q as usize, d.s as usize);
            rho[(p, r, q, sx)] += z;
            rho[(r, p, sx, q)] += z;
            rho[(p, r, sx, q)] -= z;
            rho[(r, p, q, sx)] -= z;
        }
        for d in &self.doubles_cross {
            let z = d.phase * a[d.j as usize].conj() * a[d.k as usize];
            if z == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (pu, qu, pd, qd) = (
                d.p_up as usize,
                d.q_up as usize,
                d.p_dn as usize,
                d.q_dn as usize,
            );
            rho[(pu, pd, qu, qd)] += z;
            rho[(pd, pu, qd, qu)] += z;
        }
        rho
    }
}

/// Iterate set bit positions of a u32.
fn bits(mut mask: u32) -> impl Iterator<Item = u32> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let b = mask.trailing_zeros();
            mask &= mask - 1;
            Some(b)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Brute-force reference: apply H term by term with raw operators,
    /// independent of any Slater-Condon shortcut.
    fn brute_apply(
        basis: &DeterminantBasis,
        h: &Array2<Complex64>,
        g: &Array4<Complex64>,
        a: &[Complex64],
    ) -> Vec<Complex64> {
        let m = basis.m() as u32;
        let n = basis.len();
        let mut index: HashMap<u64, usize> = HashMap::new();
        for k in 0..n {
            index.insert(basis.full_mask(k), k);
        }
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            if a[k] == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mask = basis.full_mask(k);
            // one-body
            for sigma in 0..2u32 {
                let base = sigma * m;
                for p in 0..m {
                    for q in 0..m {
                        if let Some((m1, s1)) = annihilate(mask, base + q) {
                            if let Some((m2, s2)) = create(m1, base + p) {
                                let j = index[&m2];
                                y[j] += h[(p as usize, q as usize)] * s1 * s2 * a[k];
                            }
                        }
                    }
                }
            }
            // two-body: 1/2 sum_{pqrs, sigma tau} g_pqrs a+_{p s} a+_{q t} a_{s t} a_{r s}
            for sigma in 0..2u32 {
                for tau in 0..2u32 {
                    let bs = sigma * m;
                    let bt = tau * m;
                    for p in 0..m {
                        for q in 0..m {
                            for r in 0..m {
                                for s in 0..m {
                                    let Some((m1, s1)) = annihilate(mask, bs + r) else {
                                        continue;
                                    };
                                    let Some((m2, s2)) = annihilate(m1, bt + s) else {
                                        continue;
                                    };
                                    let Some((m3, s3)) = create(m2, bt + q) else {
                                        continue;
                                    };
                                    let Some((m4, s4)) = create(m3, bs + p) else {
                                        continue;
                                    };
                                    let j = index[&m4];
                                    y[j] += 0.5
                                        * g[(p as usize, q as usize, r as usize, s as usize)]
                                        * s1
                                        * s2
                                        * s3
                                        * s4
                                        * a[k];
                                }
                            }
                        }
                    }
                }
            }
        }
        y
    }

    /// Brute-force reduced densities via raw operator application.
    fn brute_densities(
        basis: &DeterminantBasis,
        a: &[Complex64],
    ) -> (Array2<Complex64>, Array4<Complex64>) {
        let m = basis.m() as u32;
        let n = basis.len();
        let mut index: HashMap<u64, usize> = HashMap::new();
        for k in 0..n {
            index.insert(basis.full_mask(k), k);
        }
        let mu = m as usize;
        let mut rho1 = Array2::<Complex64>::zeros((mu, mu));
        let mut rho2 = Array4::<Complex64>::zeros((mu, mu, mu, mu));
        for k in 0..n {
            if a[k] == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mask = basis.full_mask(k);
            for sigma in 0..2u32 {
                let base = sigma * m;
                for p in 0..m {
                    for q in 0..m {
                        if let Some((m1, s1)) = annihilate(mask, base + q) {
                            if let Some((m2, s2)) = create(m1, base + p) {
                                let j = index[&m2];
                                rho1[(p as usize, q as usize)] +=
                                    a[j].conj() * a[k] * s1 * s2;
                            }
                        }
                    }
                }
            }
            for sigma in 0..2u32 {
                for tau in 0..2u32 {
                    let bs = sigma * m;
                    let bt = tau * m;
                    for p in 0..m {
                        for q in 0..m {
                            for r in 0..m {
                                for s in 0..m {
                                    let Some((m1, s1)) = annihilate(mask, bs + r) else {
                                        continue;
                                    };
                                    let Some((m2, s2)) = annihilate(m1, bt + s) else {
                                        continue;
                                    };
                                    let Some((m3, s3)) = create(m2, bt + q) else {
                                        continue;
                                    };
                                    let Some((m4, s4)) = create(m3, bs + p) else {
                                        continue;
                                    };
                                    let j = index[&m4];
                                    rho2[(p as usize, q as usize, r as usize, s as usize)] +=
                                        a[j].conj() * a[k] * s1 * s2 * s3 * s4;
                                }
                            }
                        }
                    }
                }
            }
        }
        (rho1, rho2)
    }

    fn random_h(m: usize, rng: &mut impl Rng, hermitian: bool) -> Array2<Complex64> {
        let mut h = Array2::<Complex64>::zeros((m, m));
        for p in 0..m {
            for q in 0..m {
                h[(p, q)] = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        if hermitian {
            let ht = h.t().mapv(|z| z.conj());
            h = (&h + &ht).mapv(|z| 0.5 * z);
        }
        h
    }

    /// Random g with the physical index symmetries: particle exchange
    /// g[pqrs] = g[qpsr] and hermiticity g[pqrs]* = g[rspq].
    fn random_g(m: usize, rng: &mut impl Rng) -> Array4<Complex64> {
        let mut g = Array4::<Complex64>::zeros((m, m, m, m));
        for p in 0..m {
            for q in 0..m {
                for r in 0..m {
                    for s in 0..m {
                        let z = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                        g[(p, q, r, s)] += z;
                        g[(q, p, s, r)] += z;
                        g[(r, s, p, q)] += z.conj();
                        g[(s, r, q, p)] += z.conj();
                    }
                }
            }
        }
        g
    }

    fn random_ci(n: usize, rng: &mut impl Rng) -> Vec<Complex64> {
        let mut a: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut a {
            *z /= norm;
        }
        a
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(DeterminantBasis::new(8, 2, 2).unwrap().len(), 784);
        assert_eq!(DeterminantBasis::new(2, 1, 1).unwrap().len(), 4);
        // spinless 2-particle reading: both electrons in the up sector
        assert_eq!(DeterminantBasis::new(8, 2, 0).unwrap().len(), 28);
        assert!(DeterminantBasis::new(2, 3, 0).is_err());
    }

    #[test]
    fn lexicographic_order_and_aufbau() {
        let b = DeterminantBasis::new(4, 2, 0).unwrap();
        let expected: Vec<u32> = vec![
            0b0011, 0b0101, 0b1001, 0b0110, 0b1010, 0b1100,
        ];
        let got: Vec<u32> = (0..b.len()).map(|k| b.full_mask(k) as u32).collect();
        assert_eq!(got, expected);
        assert_eq!(b.aufbau(), 0);
    }

    #[test]
    fn hamiltonian_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for (m, n_up, n_dn) in [(3, 1, 1), (4, 2, 2), (4, 2, 1), (3, 2, 0), (4, 1, 0)] {
            let basis = DeterminantBasis::new(m, n_up, n_dn).unwrap();
            for hermitian in [true, false] {
                let h = random_h(m, &mut rng, hermitian);
                let g = random_g(m, &mut rng);
                let a = random_ci(basis.len(), &mut rng);
                let mut fast = vec![Complex64::new(0.0, 0.0); basis.len()];
                basis.apply_hamiltonian(&h, &g, &a, &mut fast);
                let brute = brute_apply(&basis, &h, &g, &a);
                for (f, b) in fast.iter().zip(&brute) {
                    assert!(
                        (f - b).norm() < 1e-12,
                        "H apply mismatch (m={m}, n_up={n_up}, n_dn={n_dn}): {f} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn densities_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for (m, n_up, n_dn) in [(3, 1, 1), (4, 2, 2), (4, 2, 1), (3, 2, 0)] {
            let basis = DeterminantBasis::new(m, n_up, n_dn).unwrap();
            let a = random_ci(basis.len(), &mut rng);
            let rho1 = basis.one_body_density(&a);
            let rho2 = basis.two_body_density(&a);
            let (b1, b2) = brute_densities(&basis, &a);
            for p in 0..m {
                for q in 0..m {
                    assert!((rho1[(p, q)] - b1[(p, q)]).norm() < 1e-12);
                    for r in 0..m {
                        for s in 0..m {
                            assert!(
                                (rho2[(p, q, r, s)] - b2[(p, q, r, s)]).norm() < 1e-12,
                                "rho2 mismatch at ({p},{q},{r},{s})"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rho1_trace_counts_electrons_and_is_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let basis = DeterminantBasis::new(5, 2, 2).unwrap();
        let a = random_ci(basis.len(), &mut rng);
        let rho1 = basis.one_body_density(&a);
        let trace: Complex64 = (0..5).map(|p| rho1[(p, p)]).sum();
        assert_abs_diff_eq!(trace.re, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(trace.im, 0.0, epsilon = 1e-12);
        for p in 0..5 {
            for q in 0..5 {
                assert!((rho1[(p, q)] - rho1[(q, p)].conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn closed_shell_single_determinant_density() {
        // m = 2 spatial orbitals, both doubly occupied in the Aufbau det
        let basis = DeterminantBasis::new(2, 2, 2).unwrap();
        assert_eq!(basis.len(), 1);
        let a = vec![Complex64::new(1.0, 0.0)];
        let rho1 = basis.one_body_density(&a);
        for p in 0..2 {
            for q in 0..2 {
                let expect = if p == q { 2.0 } else { 0.0 };
                assert_abs_diff_eq!(rho1[(p, q)].re, expect, epsilon = 1e-14);
                assert_abs_diff_eq!(rho1[(p, q)].im, 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn two_closed_shell_determinants_give_diagonal_rho1() {
        // 2-electron singlet split 50/50 over (1up 1dn) and (2up 2dn)
        let basis = DeterminantBasis::new(2, 1, 1).unwrap();
        let mut a = vec![Complex64::new(0.0, 0.0); 4];
        let w = Complex64::new(1.0 / 2.0f64.sqrt(), 0.0);
        // dets in order: (0u,0d), (0u,1d), (1u,0d), (1u,1d)
        a[0] = w;
        a[3] = w;
        let rho1 = basis.one_body_density(&a);
        assert_abs_diff_eq!(rho1[(0, 0)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rho1[(1, 1)].re, 1.0, epsilon = 1e-14);
        assert!(rho1[(0, 1)].norm() < 1e-14);
        assert!(rho1[(1, 0)].norm() < 1e-14);
    }

    #[test]
    fn rho2_pair_exchange_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let basis = DeterminantBasis::new(4, 2, 1).unwrap();
        let a = random_ci(basis.len(), &mut rng);
        let rho2 = basis.two_body_density(&a);
        for p in 0..4 {
            for q in 0..4 {
                for r in 0..4 {
                    for s in 0..4 {
                        assert!(
                            (rho2[(p, q, r, s)] - rho2[(q, p, s, r)]).norm() < 1e-12,
                            "pair exchange broken at ({p},{q},{r},{s})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn hermitian_input_gives_hermitian_ci_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let basis = DeterminantBasis::new(4, 2, 2).unwrap();
        let h = random_h(4, &mut rng, true);
        let g = random_g(4, &mut rng);
        let hm = basis.hamiltonian_matrix(&h, &g);
        let n = basis.len();
        let scale = hm.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        for j in 0..n {
            for k in 0..n {
                assert!(
                    (hm[(j, k)] - hm[(k, j)].conj()).norm() < 1e-10 * scale,
                    "H_CI not Hermitian at ({j},{k})"
                );
            }
        }
    }
}
