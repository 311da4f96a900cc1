use mctdhf1d::determinants::DeterminantBasis;
use mctdhf1d::engine::{initial_state, EomContext, Hamiltonian};
use mctdhf1d::fields::SoftCoreModel;
use mctdhf1d::grid::Grid1D;
use num_complex::Complex64;
use std::time::Instant;

fn main() {
    for (l, np, m) in [(30.0f64, 201usize, 8usize), (360.0, 2400, 8), (360.0, 1200, 6)] {
        let grid = Grid1D::new(l, np).unwrap();
        let model = SoftCoreModel::polarizable_4e();
        let ham = Hamiltonian::new(grid, model.binding(), model.a_ee, None);
        let basis = DeterminantBasis::new(m, 2, 2).unwrap();
        let state = initial_state(&ham, &basis, m).unwrap();
        let ctx = EomContext {
            ham: &ham,
            basis: &basis,
            pulse: None,
            eps_reg: 1e-8,
            include_cap: false,
            e_ref: 0.0,
        };
        let y = state.flatten();
        let mut out = vec![Complex64::default(); y.len()];
        ctx.action_flat(0.0, &y, &mut out);
        let t0 = Instant::now();
        let reps = 20;
        for _ in 0..reps {
            ctx.action_flat(0.0, &y, &mut out);
        }
        println!(
            "n={np} m={m}: action = {:.2} ms",
            t0.elapsed().as_secs_f64() * 1e3 / reps as f64
        );
    }
}
