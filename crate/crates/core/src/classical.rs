//! Classical three-step trajectories: an electron born at rest at the core,
//! driven by the same vector potential as the quantum run, and followed to
//! its first return. The cutoff-law calculators live here too.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fields::LaserPulse;
use crate::io;

/// One returning trajectory. Phases are relative to the pulse's carrier
/// reference (envelope peak for Gaussian pulses), in radians.
#[derive(Debug, Clone, Copy)]
pub struct ClassicalTrajectory {
    pub birth_phase: f64,
    pub birth_time: f64,
    pub return_time: f64,
    /// Kinetic energy at the first return to x = 0.
    pub return_energy: f64,
}

impl ClassicalTrajectory {
    pub fn return_phase(&self, pulse: &LaserPulse) -> f64 {
        pulse.omega0 * (self.return_time - pulse.t_reference())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ReturnMapOptions {
    /// Trajectory sampling step as a fraction of the optical period.
    pub dt_fraction: f64,
    /// Follow a trajectory at most this many periods before giving up.
    pub max_flight_cycles: f64,
    /// Report later returns instead of the first crossing.
    pub return_index: usize,
}

impl Default for ReturnMapOptions {
    fn default() -> Self {
        Self {
            dt_fraction: 1.0 / 2000.0,
            max_flight_cycles: 3.0,
            return_index: 0,
        }
    }
}

/// Trace trajectories for every birth phase in `birth_phases` (radians
/// relative to the pulse reference time). Electrons start at x = 0 with
/// v = 0; v(t) = -[A(t) - A(t_b)]; non-returning trajectories are omitted.
pub fn classical_return_map(
    pulse: &LaserPulse,
    birth_phases: &[f64],
) -> Vec<ClassicalTrajectory> {
    classical_return_map_with(pulse, birth_phases, &ReturnMapOptions::default())
}

pub fn classical_return_map_with(
    pulse: &LaserPulse,
    birth_phases: &[f64],
    opts: &ReturnMapOptions,
) -> Vec<ClassicalTrajectory> {
    let map_one = |&phase: &f64| trace_trajectory(pulse, phase, opts);

    #[cfg(feature = "parallel")]
    let found: Vec<Option<ClassicalTrajectory>> = {
        use rayon::prelude::*;
        birth_phases.par_iter().map(map_one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let found: Vec<Option<ClassicalTrajectory>> = birth_phases.iter().map(map_one).collect();

    found.into_iter().flatten().collect()
}

fn trace_trajectory(
    pulse: &LaserPulse,
    birth_phase: f64,
    opts: &ReturnMapOptions,
) -> Option<ClassicalTrajectory> {
    let t_b = pulse.t_reference() + birth_phase / pulse.omega0;
    let a_b = pulse.vector_potential_at(t_b);
    let velocity = |t: f64| -(pulse.vector_potential_at(t) - a_b);

    let dt = pulse.period() * opts.dt_fraction;
    let n_max = (opts.max_flight_cycles / opts.dt_fraction).ceil() as usize;

    let mut crossings_left = opts.return_index;
    let mut x = 0.0f64;
    let mut t = t_b;
    let mut v_prev = velocity(t);
    let mut moved = false;
    for _ in 0..n_max {
        let t_next = t + dt;
        let v_next = velocity(t_next);
        let x_next = x + 0.5 * dt * (v_prev + v_next);
        if moved && x != 0.0 && x_next != 0.0 && x.signum() != x_next.signum() {
            if crossings_left == 0 {
                let t_ret = bisect_crossing(&velocity, t, x, t_next, dt);
                let v_ret = velocity(t_ret);
                return Some(ClassicalTrajectory {
                    birth_phase,
                    birth_time: t_b,
                    return_time: t_ret,
                    return_energy: 0.5 * v_ret * v_ret,
                });
            }
            crossings_left -= 1;
        }
        if x_next.abs() > 1e-12 {
            moved = true;
        }
        x = x_next;
        t = t_next;
        v_prev = v_next;
    }
    None
}

/// Refine the crossing inside [t_lo, t_lo + dt] by bisection on the locally
/// integrated position.
fn bisect_crossing(velocity: &impl Fn(f64) -> f64, t_lo: f64, x_lo: f64, t_hi: f64, dt: f64) -> f64 {
    // 5-point Gauss-Legendre quadrature of v over [t_lo, t]
    let gl_x = [
        -0.906179845938664,
        -0.538469310105683,
        0.0,
        0.538469310105683,
        0.906179845938664,
    ];
    let gl_w = [
        0.236926885056189,
        0.478628670499366,
        0.568888888888889,
        0.478628670499366,
        0.236926885056189,
    ];
    let x_at = |t: f64| -> f64 {
        let h = 0.5 * (t - t_lo);
        let mid = 0.5 * (t + t_lo);
        let mut acc = 0.0;
        for (xi, wi) in gl_x.iter().zip(&gl_w) {
            acc += wi * velocity(mid + h * xi);
        }
        x_lo + acc * h
    };
    let mut lo = t_lo;
    let mut hi = t_hi;
    let sign_lo = x_lo.signum();
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if x_at(mid).signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * dt.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Cutoff law 3.17 Up + Ip + k omega_p: k = 0 is the standard law; k > 0
/// adds the collective-excitation quanta that extend the second plateau.
pub fn cutoff_law(ip: f64, up: f64, k: usize, omega_p: f64) -> Result<f64> {
    if ip < 0.0 || up < 0.0 || omega_p < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "cutoff law needs nonnegative inputs: ip={ip}, up={up}, omega_p={omega_p}"
        )));
    }
    Ok(3.17 * up + ip + k as f64 * omega_p)
}

/// CSV for spectrogram overlays.
pub fn write_return_map_csv(
    path: &Path,
    pulse: &LaserPulse,
    trajectories: &[ClassicalTrajectory],
) -> Result<()> {
    let up = pulse.ponderomotive_energy();
    let mut out =
        String::from("birth_phase_deg,return_phase_deg,return_energy_au,return_energy_over_up\n");
    for t in trajectories {
        out.push_str(&format!(
            "{},{},{},{}\n",
            io::fmt_full(t.birth_phase.to_degrees()),
            io::fmt_full(t.return_phase(pulse).to_degrees()),
            io::fmt_full(t.return_energy),
            io::fmt_full(t.return_energy / up),
        ));
    }
    io::atomic_write(path, out.as_bytes())
}
