use mctdhf1d::determinants::DeterminantBasis;
use mctdhf1d::engine::{ionization_ladder, relax_from_scratch, Hamiltonian, RelaxOptions};
use mctdhf1d::fields::SoftCoreModel;
use mctdhf1d::grid::Grid1D;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    // paper dx = 720/2399 on a truncated box (bound states only)
    let dx_paper = 720.0 / 2399.0;
    let l: f64 = 30.0;
    let n = (2.0 * l / dx_paper).round() as usize + 1;
    let grid = Grid1D::new(l, n).unwrap();
    println!("grid: {} points, dx = {:.5}", grid.len(), grid.dx());
    let model = SoftCoreModel::polarizable_4e();
    let ham = Hamiltonian::new(grid, model.binding(), model.a_ee, None);

    let basis = DeterminantBasis::new(8, 2, 2).unwrap();
    println!("dets: {}", basis.len());
    let opts = RelaxOptions { energy_tol: 1e-9, ..Default::default() };
    let (_state, report) = relax_from_scratch(&ham, &basis, &opts).unwrap();
    println!(
        "E0(4) = {:.6}  iters = {} rej = {}  dtau = {:.3e}  [{:.1?}]",
        report.energy, report.iterations, report.rejected, report.final_dtau, t0.elapsed()
    );

    let t1 = Instant::now();
    let ladder = ionization_ladder(&ham, 4, 8, &opts).unwrap();
    println!("energies: {:?}", ladder.energies);
    println!("IPs: {:?}", ladder.potentials);
    println!("sum IPs = {:.4}  [{:.1?}]", ladder.potentials.iter().sum::<f64>(), t1.elapsed());
}
