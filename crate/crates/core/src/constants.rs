//! Unit conversions between atomic units and laboratory units.

/// Bohr radius in nanometers.
pub const BOHR_NM: f64 = 0.052917721054;

/// Speed of light in atomic units (1/alpha).
pub const SPEED_OF_LIGHT: f64 = 137.035999084;

/// Atomic unit of intensity in W/cm^2: I[a.u.] = I[W/cm^2] / this.
pub const INTENSITY_AU_W_CM2: f64 = 3.50945e16;

/// Atomic unit of time in femtoseconds.
pub const AU_TIME_FS: f64 = 0.024188843265857;

/// Polarizability: 1 a.u. in cubic angstroms.
pub const POLARIZABILITY_AU_A3: f64 = 0.148185;

/// Carrier angular frequency (a.u.) of light with the given vacuum wavelength.
pub fn omega_from_lambda_nm(lambda_nm: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT * BOHR_NM / lambda_nm
}

/// Peak electric field (a.u.) for the given intensity in W/cm^2.
pub fn field_from_intensity_w_cm2(intensity: f64) -> f64 {
    (intensity / INTENSITY_AU_W_CM2).sqrt()
}
