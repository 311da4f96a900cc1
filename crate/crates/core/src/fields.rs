//! Model potentials, the complex absorbing potential, and laser pulses.
//!
//! The laser is defined through its vector potential A(t); the electric field
//! is the analytic derivative E = -dA/dt. Putting the envelope on A keeps the
//! pulse area exactly zero and brings A back to rest after the pulse, which
//! matters for few-cycle envelopes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Soft-core model system: n electrons bound by Z/sqrt(x^2 + a_en^2) with
/// pair repulsion 1/sqrt(s^2 + a_ee^2).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SoftCoreModel {
    pub z: f64,
    pub a_en: f64,
    pub a_ee: f64,
    pub n_electrons: usize,
}

impl SoftCoreModel {
    pub fn new(z: f64, a_en: f64, a_ee: f64, n_electrons: usize) -> Result<Self> {
        if !(z > 0.0) || !(a_en > 0.0) || !(a_ee > 0.0) || n_electrons < 1 {
            return Err(Error::InvalidArgument(format!(
                "soft-core model needs Z > 0, a_en > 0, a_ee > 0, n >= 1; got \
                 Z={z}, a_en={a_en}, a_ee={a_ee}, n={n_electrons}"
            )));
        }
        Ok(Self {
            z,
            a_en,
            a_ee,
            n_electrons,
        })
    }

    /// The paper's 4-electron polarizable model: Z=4, a_en=0.8, a_ee=1.0.
    pub fn polarizable_4e() -> Self {
        Self {
            z: 4.0,
            a_en: 0.8,
            a_ee: 1.0,
            n_electrons: 4,
        }
    }

    /// Single-active-electron comparison system with the same HOMO Ip = 0.5.
    pub fn single_active_electron() -> Self {
        Self {
            z: 1.0,
            a_en: 1.414,
            a_ee: 1.0,
            n_electrons: 1,
        }
    }

    pub fn binding(&self) -> BindingPotential {
        BindingPotential::SoftCore {
            z: self.z,
            a_en: self.a_en,
        }
    }
}

/// Nuclear binding strength Vn(x) = Z / sqrt(x^2 + a_en^2). The attractive
/// term in the Hamiltonian is -Vn.
pub fn nuclear_potential(model: &SoftCoreModel, x: f64) -> f64 {
    model.z / (x * x + model.a_en * model.a_en).sqrt()
}

/// Electron-electron repulsion kernel Ve(s) = 1 / sqrt(s^2 + a_ee^2).
pub fn ee_kernel(model: &SoftCoreModel, s: f64) -> f64 {
    1.0 / (s * s + model.a_ee * model.a_ee).sqrt()
}

/// One-body binding potential as it enters the Hamiltonian. `Harmonic` is a
/// test hook used by the oscillator checks.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub enum BindingPotential {
    SoftCore { z: f64, a_en: f64 },
    Harmonic { omega: f64 },
}

impl BindingPotential {
    /// V_h(x): -Z/sqrt(x^2+a^2) or +omega^2 x^2 / 2.
    pub fn potential(&self, x: f64) -> f64 {
        match *self {
            BindingPotential::SoftCore { z, a_en } => -z / (x * x + a_en * a_en).sqrt(),
            BindingPotential::Harmonic { omega } => 0.5 * omega * omega * x * x,
        }
    }

    /// d V_h / dx, used by the Ehrenfest cross-check.
    pub fn gradient(&self, x: f64) -> f64 {
        match *self {
            BindingPotential::SoftCore { z, a_en } => {
                z * x / (x * x + a_en * a_en).powf(1.5)
            }
            BindingPotential::Harmonic { omega } => omega * omega * x,
        }
    }
}

/// Complex absorbing potential ramping from the onset |x| = x_cap to the box
/// edge. Applied by the propagator as -i * W(x).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct CapSpec {
    pub x_cap: f64,
    pub half_width: f64,
    pub enabled: bool,
}

impl CapSpec {
    pub fn new(x_cap: f64, half_width: f64, enabled: bool) -> Result<Self> {
        if !(x_cap > 0.0 && x_cap < half_width) {
            return Err(Error::InvalidArgument(format!(
                "CAP onset must satisfy 0 < x_cap < l, got x_cap={x_cap}, l={half_width}"
            )));
        }
        Ok(Self {
            x_cap,
            half_width,
            enabled,
        })
    }
}

/// W(x) = 1 - cos[pi (|x| - x_cap) / (l - x_cap)] beyond the onset, 0 inside.
/// Even, continuous at the onset, and grows monotonically to 2 at the wall.
pub fn cap_value(cap: &CapSpec, x: f64) -> f64 {
    let ax = x.abs();
    if ax <= cap.x_cap {
        0.0
    } else {
        let arg = std::f64::consts::PI * (ax - cap.x_cap) / (cap.half_width - cap.x_cap);
        1.0 - arg.cos()
    }
}

/// Pulse envelope applied to the vector potential.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub enum Envelope {
    /// exp(-4 ln2 (t - t_peak)^2 / fwhm^2): `fwhm` is the full width at half
    /// maximum of the A-field envelope.
    Gaussian { fwhm: f64, t_peak: f64 },
    /// Linear switch-on of the amplitude over `ramp_cycles` optical cycles,
    /// then constant. Starts at t = 0.
    RampedCw { ramp_cycles: f64 },
    /// Linear switch-on of the *intensity* (amplitude grows as sqrt(t)).
    RampedCwIntensity { ramp_cycles: f64 },
}

/// Linearly polarized pulse in the dipole approximation, velocity gauge.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct LaserPulse {
    pub omega0: f64,
    pub e0: f64,
    pub envelope: Envelope,
    pub cep: f64,
}

impl LaserPulse {
    pub fn new(omega0: f64, e0: f64, envelope: Envelope, cep: f64) -> Result<Self> {
        if !(omega0 > 0.0) || !(e0 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "pulse needs omega0 > 0 and E0 >= 0, got omega0={omega0}, E0={e0}"
            )));
        }
        if let Envelope::Gaussian { fwhm, .. } = envelope {
            if !(fwhm > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "Gaussian envelope needs fwhm > 0, got {fwhm}"
                )));
            }
        }
        Ok(Self {
            omega0,
            e0,
            envelope,
            cep,
        })
    }

    /// Optical period 2 pi / omega0.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega0
    }

    /// Ponderomotive energy Up = (E0 / 2 omega0)^2.
    pub fn ponderomotive_energy(&self) -> f64 {
        let v = self.e0 / (2.0 * self.omega0);
        v * v
    }

    /// Carrier reference time: envelope peak for Gaussian, t = 0 for CW.
    pub fn t_reference(&self) -> f64 {
        match self.envelope {
            Envelope::Gaussian { t_peak, .. } => t_peak,
            Envelope::RampedCw { .. } | Envelope::RampedCwIntensity { .. } => 0.0,
        }
    }

    fn envelope_and_derivative(&self, t: f64) -> (f64, f64) {
        match self.envelope {
            Envelope::Gaussian { fwhm, t_peak } => {
                let c = 4.0 * std::f64::consts::LN_2 / (fwhm * fwhm);
                let dt = t - t_peak;
                let env = (-c * dt * dt).exp();
                (env, -2.0 * c * dt * env)
            }
            Envelope::RampedCw { ramp_cycles } => {
                let t_ramp = ramp_cycles * self.period();
                if ramp_cycles <= 0.0 {
                    (1.0, 0.0)
                } else if t <= 0.0 {
                    (0.0, 0.0)
                } else if t < t_ramp {
                    (t / t_ramp, 1.0 / t_ramp)
                } else {
                    (1.0, 0.0)
                }
            }
            Envelope::RampedCwIntensity { ramp_cycles } => {
                let t_ramp = ramp_cycles * self.period();
                if ramp_cycles <= 0.0 {
                    (1.0, 0.0)
                } else if t <= 0.0 {
                    (0.0, 0.0)
                } else if t < t_ramp {
                    let env = (t / t_ramp).sqrt();
                    // the sqrt slope is integrable but unbounded at t = 0;
                    // clamp so the field stays finite
                    let denv = if env > 1e-6 {
                        0.5 / (t_ramp * env)
                    } else {
                        0.0
                    };
                    (env, denv)
                } else {
                    (1.0, 0.0)
                }
            }
        }
    }

    /// Vector potential A(t) = -(E0/omega0) env(t) sin(omega0 (t - t_ref) + cep).
    pub fn vector_potential_at(&self, t: f64) -> f64 {
        let (env, _) = self.envelope_and_derivative(t);
        let theta = self.omega0 * (t - self.t_reference()) + self.cep;
        -self.e0 / self.omega0 * env * theta.sin()
    }

    /// Electric field E(t) = -dA/dt, evaluated analytically.
    pub fn field_at(&self, t: f64) -> f64 {
        let (env, denv) = self.envelope_and_derivative(t);
        let theta = self.omega0 * (t - self.t_reference()) + self.cep;
        self.e0 * env * theta.cos() + self.e0 / self.omega0 * denv * theta.sin()
    }

    /// Field amplitude envelope E0 * env(t), without the carrier.
    pub fn field_envelope_at(&self, t: f64) -> f64 {
        self.e0 * self.envelope_and_derivative(t).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{field_from_intensity_w_cm2, omega_from_lambda_nm};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn paper_pulse() -> LaserPulse {
        let omega0 = omega_from_lambda_nm(1000.0);
        let e0 = field_from_intensity_w_cm2(2e14);
        let t0 = 2.0 * std::f64::consts::PI / omega0;
        LaserPulse::new(
            omega0,
            e0,
            Envelope::Gaussian {
                fwhm: 4.0 * t0,
                t_peak: 20.0 * t0,
            },
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn nuclear_potential_values() {
        let me = SoftCoreModel::polarizable_4e();
        assert_abs_diff_eq!(nuclear_potential(&me, 0.0), 5.0, epsilon = 1e-12);
        let sae = SoftCoreModel::single_active_electron();
        assert_abs_diff_eq!(nuclear_potential(&sae, 0.0), 1.0 / 1.414, epsilon = 1e-12);
        // Coulomb tail: within 1% of Z/|x| at |x| = 8
        let tail = nuclear_potential(&me, 8.0);
        assert!((tail - 4.0 / 8.0).abs() / (4.0 / 8.0) < 0.01);
    }

    #[test]
    fn ee_kernel_values() {
        let me = SoftCoreModel::polarizable_4e();
        assert_abs_diff_eq!(ee_kernel(&me, 0.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            ee_kernel(&me, 3.0),
            1.0 / 10.0f64.sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(ee_kernel(&me, -3.0), ee_kernel(&me, 3.0), epsilon = 1e-15);
        let tail = ee_kernel(&me, 8.0);
        assert!((tail - 1.0 / 8.0).abs() / (1.0 / 8.0) < 0.01);
    }

    #[test]
    fn cap_profile() {
        let cap = CapSpec::new(270.0, 360.0, true).unwrap();
        assert_abs_diff_eq!(cap_value(&cap, 270.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cap_value(&cap, -270.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cap_value(&cap, 315.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cap_value(&cap, 360.0), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cap_value(&cap, -360.0), 2.0, epsilon = 1e-12);
        assert!(CapSpec::new(400.0, 360.0, true).is_err());
    }

    proptest! {
        #[test]
        fn cap_even_and_monotone(x in 0.0f64..360.0) {
            let cap = CapSpec::new(270.0, 360.0, true).unwrap();
            prop_assert!((cap_value(&cap, x) - cap_value(&cap, -x)).abs() < 1e-14);
            let w0 = cap_value(&cap, x);
            let w1 = cap_value(&cap, (x + 0.5).min(360.0));
            prop_assert!(w1 + 1e-12 >= w0);
            prop_assert!((0.0..=2.0 + 1e-12).contains(&w0));
        }
    }

    #[test]
    fn peak_field_and_vector_potential() {
        let p = paper_pulse();
        let tp = p.t_reference();
        assert_abs_diff_eq!(p.field_at(tp), 0.075491, epsilon = 1e-6);
        // |A| max ~ E0/omega0
        let mut amax = 0.0f64;
        let t0 = p.period();
        let n = 20000;
        for i in 0..n {
            let t = tp - 3.0 * t0 + 6.0 * t0 * i as f64 / n as f64;
            amax = amax.max(p.vector_potential_at(t).abs());
        }
        assert_abs_diff_eq!(amax, 1.6568, epsilon = 0.02);
    }

    #[test]
    fn zero_amplitude_pulse_is_silent() {
        let p = LaserPulse::new(0.05, 0.0, Envelope::RampedCw { ramp_cycles: 4.0 }, 0.0).unwrap();
        for t in [0.0, 10.0, 500.0] {
            assert_eq!(p.field_at(t), 0.0);
            assert_eq!(p.vector_potential_at(t), 0.0);
        }
    }

    #[test]
    fn ramp_envelope_midpoint() {
        let p = LaserPulse::new(0.35, 0.1, Envelope::RampedCw { ramp_cycles: 4.0 }, 0.0).unwrap();
        let t0 = p.period();
        assert_abs_diff_eq!(p.field_envelope_at(2.0 * t0), 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(p.field_envelope_at(8.0 * t0), 0.1, epsilon = 1e-12);
        assert_eq!(p.field_envelope_at(-1.0), 0.0);
    }

    #[test]
    fn field_is_minus_da_dt() {
        let p = paper_pulse();
        let dt = 1e-5;
        for frac in [17.3, 19.0, 20.0, 20.7, 23.9] {
            let t = frac * p.period();
            let fd = -(p.vector_potential_at(t + dt) - p.vector_potential_at(t - dt)) / (2.0 * dt);
            assert_abs_diff_eq!(p.field_at(t), fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn pulse_area_is_zero() {
        // integral of E over the whole pulse = A(-inf) - A(+inf) = 0
        let p = paper_pulse();
        let t0 = p.period();
        let (a, b) = (p.t_reference() - 15.0 * t0, p.t_reference() + 15.0 * t0);
        let n = 200_000;
        let h = (b - a) / n as f64;
        let mut acc = 0.5 * (p.field_at(a) + p.field_at(b));
        for i in 1..n {
            acc += p.field_at(a + i as f64 * h);
        }
        assert_abs_diff_eq!(acc * h, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn ponderomotive_energy_of_paper_laser() {
        let p = paper_pulse();
        assert_abs_diff_eq!(p.ponderomotive_energy(), 0.686, epsilon = 1e-3);
        // quadratic in E0
        let double = LaserPulse::new(p.omega0, 2.0 * p.e0, p.envelope, 0.0).unwrap();
        assert_abs_diff_eq!(
            double.ponderomotive_energy(),
            4.0 * p.ponderomotive_energy(),
            epsilon = 1e-15
        );
        let silent = LaserPulse::new(p.omega0, 0.0, p.envelope, 0.0).unwrap();
        assert_eq!(silent.ponderomotive_energy(), 0.0);
    }
}
