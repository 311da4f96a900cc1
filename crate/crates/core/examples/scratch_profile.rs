use mctdhf1d::determinants::DeterminantBasis;
use mctdhf1d::engine::{initial_state, two_body_integrals, Hamiltonian};
use mctdhf1d::fields::SoftCoreModel;
use mctdhf1d::grid::Grid1D;
use mctdhf1d::meanfield::{mean_field_operators, EeKernel};
use num_complex::Complex64;
use std::time::Instant;

fn main() {
    for (l, np, m) in [(24.0f64, 121usize, 8usize), (360.0, 2400, 8)] {
        let grid = Grid1D::new(l, np).unwrap();
        let model = SoftCoreModel::polarizable_4e();
        let ham = Hamiltonian::new(grid.clone(), model.binding(), model.a_ee, None);
        let basis = DeterminantBasis::new(m, 2, 2).unwrap();
        let state = initial_state(&ham, &basis, m).unwrap();
        let kernel = EeKernel::new(&grid, model.a_ee);
        let ci: Vec<Complex64> = state.ci.iter().copied().collect();

        let reps = 50;
        let t0 = Instant::now();
        let mut w = mean_field_operators(&state.orbitals, &kernel);
        for _ in 1..reps {
            w = mean_field_operators(&state.orbitals, &kernel);
        }
        let t_mf = t0.elapsed().as_secs_f64() * 1e3 / reps as f64;

        let t0 = Instant::now();
        let mut g = two_body_integrals(&state.orbitals, &w, grid.dx());
        for _ in 1..reps {
            g = two_body_integrals(&state.orbitals, &w, grid.dx());
        }
        let t_g = t0.elapsed().as_secs_f64() * 1e3 / reps as f64;

        let t0 = Instant::now();
        for _ in 0..reps {
            let _ = basis.one_body_density(&ci);
        }
        let t_r1 = t0.elapsed().as_secs_f64() * 1e3 / reps as f64;

        let t0 = Instant::now();
        for _ in 0..reps {
            let _ = basis.two_body_density(&ci);
        }
        let t_r2 = t0.elapsed().as_secs_f64() * 1e3 / reps as f64;

        let h = ndarray::Array2::<Complex64>::eye(m);
        let mut out = vec![Complex64::default(); basis.len()];
        let t0 = Instant::now();
        for _ in 0..reps {
            basis.apply_hamiltonian(&h, &g, &ci, &mut out);
        }
        let t_ha = t0.elapsed().as_secs_f64() * 1e3 / reps as f64;

        println!(
            "n={np} m={m}: meanfield {t_mf:.2} ms, g-tensor {t_g:.2} ms, rho1 {t_r1:.2} ms, \
             rho2 {t_r2:.2} ms, H*A {t_ha:.2} ms"
        );
    }
}
