use mctdhf1d::determinants::DeterminantBasis;
use mctdhf1d::engine::{propagate, relax_from_scratch, Hamiltonian, PropagationConfig, RelaxOptions};
use mctdhf1d::fields::{Envelope, LaserPulse, SoftCoreModel};
use mctdhf1d::grid::Grid1D;
use std::time::Instant;

fn main() {
    let dx_paper = 0.4;
    let l: f64 = 24.0;
    let n = (2.0 * l / dx_paper).round() as usize + 1;
    let grid = Grid1D::new(l, n).unwrap();
    let model = SoftCoreModel::polarizable_4e();
    let ham = Hamiltonian::new(grid, model.binding(), model.a_ee, None);
    let basis = DeterminantBasis::new(8, 2, 2).unwrap();
    let opts = RelaxOptions { energy_tol: 1e-10, ..Default::default() };
    let (state, report) = relax_from_scratch(&ham, &basis, &opts).unwrap();
    println!("relaxed E = {:.8}", report.energy);

    let omega0 = mctdhf1d::constants::omega_from_lambda_nm(1000.0);
    let pulse = LaserPulse::new(omega0, 0.0, Envelope::RampedCw { ramp_cycles: 0.0 }, 0.0).unwrap();
    let cfg = PropagationConfig {
        t_end: 10.0 * pulse.period(),
        sample_stride: 256,
        energy_stride: 64,
        ..Default::default()
    };
    let t0 = Instant::now();
    let (series, _final, stats) = propagate(&ham, &basis, &pulse, state, &cfg, serde_json::Value::Null).unwrap();
    let elapsed = t0.elapsed();
    let norm_drift = series.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0f64, f64::max);
    let e_drift = series.energy.iter().map(|e| (e - report.energy).abs()).fold(0.0f64, f64::max);
    println!("samples = {}", series.len());
    println!("norm drift = {:.3e}, energy drift = {:.3e}", norm_drift, e_drift);
    println!("ortho drift = {:.3e} (raw {:.3e}), reortho = {}", stats.max_ortho_drift, stats.max_raw_drift, stats.n_reortho);
    println!("steps = {} (rej {}), rhs = {}, h_last = {:.4e}", stats.ode.n_accepted, stats.ode.n_rejected, stats.ode.n_rhs, stats.ode.h_last);
    println!("wall = {:.1?}", elapsed);
}
