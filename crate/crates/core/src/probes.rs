//! Diagnostic experiment drivers: static polarizability, driven resonance
//! scans, and post-pulse oscillation spectroscopy.

use num_complex::Complex64;
use serde::Serialize;
use std::path::Path;

use crate::constants::{field_from_intensity_w_cm2, POLARIZABILITY_AU_A3};
use crate::engine::{
    propagate, relax_from_scratch, PropagationConfig, RelaxOptions, SystemSpec,
};
use crate::error::{Error, Result};
use crate::fields::{Envelope, LaserPulse};
use crate::io;
use crate::observables::{electron_density, TimeSeries};

#[derive(Debug, Clone, Serialize)]
pub struct PolarizabilityReport {
    pub alpha_au: f64,
    pub alpha_angstrom3: f64,
    /// (field strength, alpha estimate) per probe field.
    pub per_field: Vec<(f64, f64)>,
}

/// Static polarizability from relaxed densities: the ground state is relaxed
/// without and with the static term -E x, and alpha = (1/E) integral of
/// (rho_E - rho_0) x dx. Linearity across the probe fields is enforced to 5%.
pub fn static_polarizability(
    spec: &SystemSpec,
    field_strengths: &[f64],
    relax: &RelaxOptions,
) -> Result<PolarizabilityReport> {
    let probes: Vec<f64> = field_strengths.iter().copied().filter(|&e| e != 0.0).collect();
    if probes.is_empty() {
        return Err(Error::InvalidArgument(
            "polarizability needs at least one nonzero field strength".into(),
        ));
    }
    let basis = spec.basis()?;

    let density_for = |e_static: f64| -> Result<ndarray::Array1<f64>> {
        let mut ham = spec.hamiltonian();
        ham.set_static_field(e_static);
        let (state, _) = relax_from_scratch(&ham, &basis, relax)?;
        Ok(electron_density(&basis, &spec.grid, &state))
    };

    let rho0 = density_for(0.0)?;
    let dx = spec.grid.dx();
    let mut per_field = Vec::with_capacity(probes.len());
    for &e in &probes {
        let rho_e = density_for(e)?;
        let moment: f64 = rho_e
            .iter()
            .zip(rho0.iter())
            .zip(spec.grid.x())
            .map(|((re, r0), &x)| (re - r0) * x)
            .sum::<f64>()
            * dx;
        per_field.push((e, moment / e));
    }

    let mean: f64 = per_field.iter().map(|(_, a)| a).sum::<f64>() / per_field.len() as f64;
    for (e1, a1) in &per_field {
        for (e2, a2) in &per_field {
            if (a1 - a2).abs() > 0.05 * mean.abs() {
                return Err(Error::NonlinearResponse(format!(
                    "alpha({e1:.1e}) = {a1:.4} vs alpha({e2:.1e}) = {a2:.4}: \
                     beyond 5% of the mean {mean:.4}"
                )));
            }
        }
    }
    Ok(PolarizabilityReport {
        alpha_au: mean,
        alpha_angstrom3: mean * POLARIZABILITY_AU_A3,
        per_field,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RampShape {
    Amplitude,
    Intensity,
}

#[derive(Debug, Clone)]
pub struct ResonanceScanConfig {
    pub omega_grid: Vec<f64>,
    pub intensity_w_cm2: f64,
    pub ramp_cycles: f64,
    pub total_cycles: f64,
    pub ramp_shape: RampShape,
    pub rel_tol: f64,
    pub sample_stride: usize,
    pub eps_reg: f64,
    /// Length of the tail used for the phase fit, in cycles.
    pub phase_fit_cycles: f64,
}

impl Default for ResonanceScanConfig {
    fn default() -> Self {
        Self {
            omega_grid: Vec::new(),
            intensity_w_cm2: 2e13,
            ramp_cycles: 4.0,
            total_cycles: 13.0,
            ramp_shape: RampShape::Amplitude,
            rel_tol: 1e-8,
            sample_stride: 256,
            eps_reg: 1e-8,
            phase_fit_cycles: 8.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub omega: f64,
    pub max_excursion: f64,
    /// Phase of the charge response relative to the driving force, wrapped
    /// to (-pi, pi]; 0 means in phase, negative means the dipole lags.
    pub phase_shift: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResonanceScanResult {
    pub points: Vec<ScanPoint>,
}

impl ResonanceScanResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega_au,max_excursion_au,phase_deg,status\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                io::fmt_full(p.omega),
                io::fmt_full(p.max_excursion),
                io::fmt_full(p.phase_shift.to_degrees()),
                p.error.as_deref().unwrap_or("ok"),
            ));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::atomic_write(path, self.to_csv().as_bytes())
    }

    pub fn any_failed(&self) -> bool {
        self.points.iter().any(|p| p.error.is_some())
    }
}

/// Drive the relaxed ground state with a ramped CW laser at each frequency;
/// record the largest post-ramp excursion of the density's center of gravity
/// and the steady-state phase between the charge response and the field.
pub fn resonance_scan(spec: &SystemSpec, cfg: &ResonanceScanConfig) -> Result<ResonanceScanResult> {
    if cfg.omega_grid.is_empty() {
        return Err(Error::InvalidArgument("empty frequency grid".into()));
    }
    if cfg.omega_grid.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidArgument("frequencies must be positive".into()));
    }
    let basis = spec.basis()?;
    let ham = spec.hamiltonian();
    let (ground, _) = relax_from_scratch(&ham, &basis, &RelaxOptions::default())?;
    let e0 = field_from_intensity_w_cm2(cfg.intensity_w_cm2);
    let n_electrons = spec.model.n_electrons as f64;

    let run_point = |&omega: &f64| -> ScanPoint {
        let envelope = match cfg.ramp_shape {
            RampShape::Amplitude => Envelope::RampedCw {
                ramp_cycles: cfg.ramp_cycles,
            },
            RampShape::Intensity => Envelope::RampedCwIntensity {
                ramp_cycles: cfg.ramp_cycles,
            },
        };
        let attempt = || -> Result<(f64, f64)> {
            let pulse = LaserPulse::new(omega, e0, envelope, 0.0)?;
            let period = pulse.period();
            let prop = PropagationConfig {
                rel_tol: cfg.rel_tol,
                t_start: 0.0,
                t_end: cfg.total_cycles * period,
                sample_stride: cfg.sample_stride,
                eps_reg: cfg.eps_reg,
                energy_stride: cfg.sample_stride, // once per cycle
                ..Default::default()
            };
            let (series, _, _) = propagate(
                &ham,
                &basis,
                &pulse,
                ground.clone(),
                &prop,
                serde_json::Value::Null,
            )?;
            let t_ramp_end = cfg.ramp_cycles * period;
            let mut excursion = 0.0f64;
            for i in 0..series.len() {
                if series.times[i] >= t_ramp_end {
                    let cog = series.dipole[i] / (n_electrons * series.norm[i]);
                    excursion = excursion.max(cog.abs());
                }
            }
            let phase = driven_phase_shift(&series, omega, cfg.phase_fit_cycles)?;
            Ok((excursion, phase))
        };
        match attempt() {
            Ok((excursion, phase)) => ScanPoint {
                omega,
                max_excursion: excursion,
                phase_shift: phase,
                error: None,
            },
            Err(e) => ScanPoint {
                omega,
                max_excursion: f64::NAN,
                phase_shift: f64::NAN,
                error: Some(e.to_string()),
            },
        }
    };

    #[cfg(feature = "parallel")]
    let points: Vec<ScanPoint> = {
        use rayon::prelude::*;
        cfg.omega_grid.par_iter().map(run_point).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let points: Vec<ScanPoint> = cfg.omega_grid.iter().map(run_point).collect();

    Ok(ResonanceScanResult { points })
}

/// Phase of the dipole response relative to the driving force -E(t) over the
/// final `fit_cycles` cycles, from single-frequency Fourier projections.
/// The force convention makes the low-frequency limit come out in phase.
pub fn driven_phase_shift(series: &TimeSeries, omega: f64, fit_cycles: f64) -> Result<f64> {
    let _ = series.dt()?;
    let period = 2.0 * std::f64::consts::PI / omega;
    let t_end = *series.times.last().ok_or_else(|| {
        Error::InvalidArgument("empty series".into())
    })?;
    let t_from = t_end - fit_cycles * period;
    let mut zd = Complex64::default();
    let mut zf = Complex64::default();
    for i in 0..series.len() {
        let t = series.times[i];
        if t < t_from {
            continue;
        }
        let phasor = Complex64::new(0.0, -omega * t).exp();
        zd += series.dipole[i] * phasor;
        zf += -series.field[i] * phasor;
    }
    if zd.norm() == 0.0 || zf.norm() == 0.0 {
        return Err(Error::UndefinedObservable(
            "no response at the driving frequency".into(),
        ));
    }
    let mut phi = zd.arg() - zf.arg();
    while phi <= -std::f64::consts::PI {
        phi += 2.0 * std::f64::consts::PI;
    }
    while phi > std::f64::consts::PI {
        phi -= 2.0 * std::f64::consts::PI;
    }
    Ok(phi)
}

#[derive(Debug, Clone, Serialize)]
pub struct PlasmonReport {
    pub omega_p: f64,
    /// Multiples k with a line at k * omega_p above the detection threshold.
    pub harmonics_present: Vec<usize>,
    pub decay_observed: bool,
}

/// Fourier analysis of the post-pulse dipole: the fundamental line in
/// (0.1, 1.0) a.u., its detected multiples, and whether its amplitude decays
/// across the window.
pub fn plasmon_spectroscopy(series: &TimeSeries, pulse_end: f64) -> Result<PlasmonReport> {
    let dt = series.dt()?;
    let period = 2.0 * std::f64::consts::PI / series.metadata.omega0;
    let t_last = *series.times.last().unwrap();
    if t_last - pulse_end < 20.0 * period {
        return Err(Error::InvalidArgument(format!(
            "series extends only {:.1} cycles past the pulse end; need 20",
            (t_last - pulse_end) / period
        )));
    }
    let start = series.times.partition_point(|&t| t < pulse_end);
    let seg: Vec<f64> = series.dipole[start..].to_vec();
    let times: Vec<f64> = series.times[start..].to_vec();
    let n = seg.len();
    let mean = seg.iter().sum::<f64>() / n as f64;

    // plain transform of the detrended segment
    let mut buf: Vec<Complex64> = seg.iter().map(|&d| Complex64::new(d - mean, 0.0)).collect();
    rustfft::FftPlanner::new()
        .plan_fft_forward(n)
        .process(&mut buf);
    let domega = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    let intensity: Vec<f64> = buf[..n / 2 + 1].iter().map(|z| z.norm_sqr()).collect();

    let band = |w: f64| (w / domega).round() as usize;
    let lo = band(0.1).max(1);
    let hi = band(1.0).min(intensity.len() - 1);
    if lo >= hi {
        return Err(Error::InvalidArgument(
            "record too short to resolve the search band".into(),
        ));
    }
    let peak_idx = {
        let mut best = lo;
        for i in lo..=hi {
            if intensity[i] > intensity[best] {
                best = i;
            }
        }
        best
    };
    let mut noise_band: Vec<f64> = intensity[lo..=hi].to_vec();
    noise_band.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let noise = noise_band[noise_band.len() / 2].max(1e-300);
    if intensity[peak_idx] < 10.0 * noise || intensity[peak_idx] <= 1e-30 {
        return Err(Error::NoPlasmon(format!(
            "strongest line {:.3e} under 10x the noise floor {noise:.3e}",
            intensity[peak_idx]
        )));
    }
    let omega_p = peak_idx as f64 * domega;

    let mut harmonics = Vec::new();
    let mut k = 1;
    loop {
        let w = k as f64 * omega_p;
        let center = band(w);
        if center + 2 >= intensity.len() {
            break;
        }
        let local = intensity[center.saturating_sub(2)..=(center + 2)]
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        if local >= 10.0 * noise {
            harmonics.push(k);
        }
        k += 1;
        if k > 20 {
            break;
        }
    }

    // amplitude of the fundamental over the two window halves
    let mid = n / 2;
    let amp_first = tone_amplitude(&times[..mid], &seg[..mid], mean, omega_p);
    let amp_last = tone_amplitude(&times[mid..], &seg[mid..], mean, omega_p);
    let decay_observed = amp_last < 0.95 * amp_first;

    Ok(PlasmonReport {
        omega_p,
        harmonics_present: harmonics,
        decay_observed,
    })
}

fn tone_amplitude(times: &[f64], values: &[f64], mean: f64, omega: f64) -> f64 {
    let mut z = Complex64::default();
    for (&t, &v) in times.iter().zip(values) {
        z += (v - mean) * Complex64::new(0.0, -omega * t).exp();
    }
    2.0 * z.norm() / values.len().max(1) as f64
}

/// Decay bookkeeping over the last `window_cycles` optical cycles: the ratio
/// of the fundamental's amplitude between the first and last quarter of the
/// window, and the ionization-yield change across it.
pub fn plasmon_decay_check(series: &TimeSeries, window_cycles: f64) -> Result<(f64, f64)> {
    let _ = series.dt()?;
    let period = 2.0 * std::f64::consts::PI / series.metadata.omega0;
    let t_last = *series.times.last().ok_or_else(|| {
        Error::InvalidArgument("empty series".into())
    })?;
    let t_from = t_last - window_cycles * period;
    let start = series.times.partition_point(|&t| t < t_from);
    let times = &series.times[start..];
    let seg = &series.dipole[start..];
    let n = times.len();
    if n < 64 {
        return Err(Error::InvalidArgument(
            "window too short for the decay check".into(),
        ));
    }
    let mean = seg.iter().sum::<f64>() / n as f64;

    // fundamental inside the window
    let mut buf: Vec<Complex64> = seg.iter().map(|&d| Complex64::new(d - mean, 0.0)).collect();
    rustfft::FftPlanner::new()
        .plan_fft_forward(n)
        .process(&mut buf);
    let dt = series.times[1] - series.times[0];
    let domega = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    let lo = ((0.1 / domega).round() as usize).max(1);
    let hi = ((1.0 / domega).round() as usize).min(n / 2);
    let mut best = lo;
    for i in lo..=hi {
        if buf[i].norm_sqr() > buf[best].norm_sqr() {
            best = i;
        }
    }
    let omega_p = best as f64 * domega;

    let q = n / 4;
    let amp_first = tone_amplitude(&times[..q], &seg[..q], mean, omega_p);
    let amp_last = tone_amplitude(&times[n - q..], &seg[n - q..], mean, omega_p);
    let amplitude_ratio = if amp_last > 0.0 {
        amp_first / amp_last
    } else {
        f64::INFINITY
    };

    let yield_start = 1.0 - series.norm[start];
    let yield_end = 1.0 - series.norm[series.len() - 1];
    Ok((amplitude_ratio, yield_end - yield_start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::SoftCoreModel;
    use crate::grid::Grid1D;
    use crate::observables::SeriesMeta;
    use approx::assert_abs_diff_eq;

    fn synthetic_series(
        omega0: f64,
        cycles: f64,
        stride: usize,
        f: impl Fn(f64) -> f64,
    ) -> TimeSeries {
        let meta = SeriesMeta {
            omega0,
            sample_stride: stride,
            code_version: "test".into(),
            pulse: None,
            model: None,
            t_peak: None,
            energy_stride: 1,
            extra: serde_json::Value::Null,
        };
        let mut s = TimeSeries::new(meta);
        let t0 = 2.0 * std::f64::consts::PI / omega0;
        let dt = t0 / stride as f64;
        let n = (cycles * stride as f64) as usize;
        for k in 0..n {
            let t = k as f64 * dt;
            s.times.push(t);
            s.field.push(0.0);
            s.vector_potential.push(0.0);
            s.dipole.push(f(t));
            s.norm.push(1.0);
            s.energy.push(0.0);
        }
        s
    }

    #[test]
    fn harmonic_well_polarizability_is_inverse_omega_squared() {
        // single electron in a harmonic well: alpha = 1/omega^2 exactly
        let omega = 0.8;
        let grid = Grid1D::new(12.0, 241).unwrap();
        // soft-core fields are ignored: the binding enum below overrides
        let model = SoftCoreModel {
            z: 1.0,
            a_en: 1.0,
            a_ee: 1.0,
            n_electrons: 1,
        };
        let spec = SystemSpec {
            grid,
            model,
            m: 2,
            cap: None,
        };
        // swap the binding potential through a custom hamiltonian
        let basis = spec.basis().unwrap();
        let density_for = |e_static: f64| {
            let mut ham = crate::engine::Hamiltonian::new(
                spec.grid.clone(),
                crate::fields::BindingPotential::Harmonic { omega },
                model.a_ee,
                None,
            );
            ham.set_static_field(e_static);
            let (state, _) =
                relax_from_scratch(&ham, &basis, &RelaxOptions::default()).unwrap();
            electron_density(&basis, &spec.grid, &state)
        };
        let rho0 = density_for(0.0);
        let e = 1e-3;
        let rho_e = density_for(e);
        let dx = spec.grid.dx();
        let alpha: f64 = rho_e
            .iter()
            .zip(rho0.iter())
            .zip(spec.grid.x())
            .map(|((a, b), &x)| (a - b) * x)
            .sum::<f64>()
            * dx
            / e;
        let expected = 1.0 / (omega * omega);
        assert_abs_diff_eq!(alpha, expected, epsilon = 1e-3 * expected);
    }

    #[test]
    fn zero_field_list_is_rejected() {
        let spec = SystemSpec {
            grid: Grid1D::new(10.0, 101).unwrap(),
            model: SoftCoreModel::single_active_electron(),
            m: 2,
            cap: None,
        };
        let err = static_polarizability(&spec, &[0.0], &RelaxOptions::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn plasmon_spectroscopy_on_synthetic_two_tone_decay() {
        let omega0 = 0.045563;
        let tau_d = 3000.0;
        let s = synthetic_series(omega0, 60.0, 64, |t| {
            (-t / tau_d).exp() * (0.35 * t).cos() + 0.1 * (0.70 * t).cos()
        });
        let report = plasmon_spectroscopy(&s, 0.0).unwrap();
        assert_abs_diff_eq!(report.omega_p, 0.35, epsilon = 0.01);
        assert!(report.harmonics_present.contains(&1));
        assert!(report.harmonics_present.contains(&2));
        assert!(!report.harmonics_present.contains(&3));
        assert!(report.decay_observed);
    }

    #[test]
    fn flat_signal_has_no_plasmon() {
        let omega0 = 0.045563;
        let s = synthetic_series(omega0, 40.0, 64, |_| 0.0);
        assert!(matches!(
            plasmon_spectroscopy(&s, 0.0),
            Err(Error::NoPlasmon(_))
        ));
    }

    #[test]
    fn short_record_is_rejected() {
        let omega0 = 0.045563;
        let s = synthetic_series(omega0, 10.0, 64, |t| (0.35 * t).cos());
        assert!(matches!(
            plasmon_spectroscopy(&s, 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn decay_check_ratios() {
        let omega0 = 0.045563;
        let t0 = 2.0 * std::f64::consts::PI / omega0;
        // undamped tone: ratio 1
        let s = synthetic_series(omega0, 40.0, 64, |t| (0.35 * t).cos());
        let (ratio, dyield) = plasmon_decay_check(&s, 40.0).unwrap();
        assert_abs_diff_eq!(ratio, 1.0, epsilon = 0.05);
        assert_abs_diff_eq!(dyield, 0.0, epsilon = 1e-12);

        // fully damped: tau_d = 5 cycles over a 40-cycle window
        let tau = 5.0 * t0;
        let s2 = synthetic_series(omega0, 40.0, 64, |t| (-t / tau).exp() * (0.35 * t).cos());
        let (ratio2, _) = plasmon_decay_check(&s2, 40.0).unwrap();
        assert!(ratio2 > 100.0, "ratio {ratio2}");
    }

    #[test]
    fn driven_phase_of_synthetic_oscillator() {
        // x(t) driven far below resonance responds in phase with the force
        let omega = 0.05;
        let meta = SeriesMeta {
            omega0: omega,
            sample_stride: 64,
            code_version: "test".into(),
            pulse: None,
            model: None,
            t_peak: None,
            energy_stride: 1,
            extra: serde_json::Value::Null,
        };
        let mut s = TimeSeries::new(meta);
        let t0 = 2.0 * std::f64::consts::PI / omega;
        let dt = t0 / 64.0;
        for k in 0..(13 * 64) {
            let t = k as f64 * dt;
            s.times.push(t);
            // field E(t); force on the charge is -E
            s.field.push((omega * t).cos());
            s.vector_potential.push(0.0);
            // quasi-static response: dipole follows the force
            s.dipole.push(-(omega * t).cos() * 3.0);
            s.norm.push(1.0);
            s.energy.push(0.0);
        }
        let phi = driven_phase_shift(&s, omega, 8.0).unwrap();
        assert_abs_diff_eq!(phi, 0.0, epsilon = 1e-6);
    }
}
