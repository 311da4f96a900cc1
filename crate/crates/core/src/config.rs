//! Run configuration: a sectioned TOML file with the model, grid, absorber,
//! pulse, propagation, and analysis parameters. Unknown keys are errors so a
//! typo cannot silently drop a physics parameter.

use serde::{Deserialize, Serialize};

use crate::constants::{field_from_intensity_w_cm2, omega_from_lambda_nm};
use crate::engine::{PropagationConfig, SystemSpec};
use crate::error::{Error, Result};
use crate::fields::{CapSpec, Envelope, LaserPulse, SoftCoreModel};
use crate::grid::Grid1D;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub z: f64,
    pub a_en: f64,
    pub a_ee: f64,
    pub n: usize,
    pub m: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub l: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CapSection {
    pub x_cap: f64,
    pub enabled: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_au: Option<f64>,
    pub intensity_w_cm2: f64,
    /// "gaussian" | "ramped_cw" | "ramped_cw_intensity"
    pub envelope: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fwhm_cycles: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp_cycles: Option<f64>,
    #[serde(default)]
    pub cep: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PropagationSection {
    pub pre_cycles: f64,
    pub post_cycles: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
    #[serde(default = "default_eps_reg")]
    pub eps_reg: f64,
    #[serde(default = "default_one")]
    pub energy_stride: usize,
}

fn default_rel_tol() -> f64 {
    1e-8
}
fn default_stride() -> usize {
    256
}
fn default_eps_reg() -> f64 {
    1e-8
}
fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Gabor window sigma in optical cycles.
    pub tw_cycles: f64,
    /// Read tw_cycles as the FWHM of the window instead of its sigma.
    pub tw_is_fwhm: bool,
    pub gabor_time_stride: usize,
    pub gabor_max_order: f64,
    /// Raised-cosine edge taper fraction for the global spectrum (0 = none).
    pub edge_taper: f64,
    pub cutoff_median_window_orders: f64,
    pub cutoff_drop_decades: f64,
    pub second_plateau_offset_orders: f64,
    pub second_plateau_window_orders: f64,
    pub min_second_contrast_decades: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            tw_cycles: 0.2,
            tw_is_fwhm: false,
            gabor_time_stride: 32,
            gabor_max_order: 130.0,
            edge_taper: 0.0,
            cutoff_median_window_orders: 2.0,
            cutoff_drop_decades: 2.0,
            second_plateau_offset_orders: 4.0,
            second_plateau_window_orders: 10.0,
            min_second_contrast_decades: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct MetaSection {
    pub seed: u64,
    pub label: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub cap: CapSection,
    pub pulse: PulseSection,
    pub propagation: PropagationSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub meta: MetaSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::Config(format!("{key}: {msg}")));
        if !(self.model.z > 0.0) {
            return bad("model.z", format!("must be positive, got {}", self.model.z));
        }
        if !(self.model.a_en > 0.0) || !(self.model.a_ee > 0.0) {
            return bad("model.a_en/a_ee", "shielding lengths must be positive".into());
        }
        if self.model.n < 1 {
            return bad("model.n", "at least one electron".into());
        }
        if self.model.m < self.model.n.div_ceil(2) {
            return bad(
                "model.m",
                format!(
                    "{} orbitals cannot hold {} electrons",
                    self.model.m, self.model.n
                ),
            );
        }
        if !(self.grid.l > 0.0) {
            return bad("grid.l", "box half-width must be positive".into());
        }
        if self.grid.n_points < 3 {
            return bad("grid.n_points", "need at least 3 points".into());
        }
        if self.cap.enabled && !(self.cap.x_cap > 0.0 && self.cap.x_cap < self.grid.l) {
            return bad(
                "cap.x_cap",
                format!("must lie in (0, {}), got {}", self.grid.l, self.cap.x_cap),
            );
        }
        match (self.pulse.lambda_nm, self.pulse.omega_au) {
            (Some(l), None) if l > 0.0 => {}
            (None, Some(w)) if w > 0.0 => {}
            (Some(_), Some(_)) => {
                return bad(
                    "pulse.lambda_nm/omega_au",
                    "give exactly one of the two".into(),
                )
            }
            _ => {
                return bad(
                    "pulse.lambda_nm/omega_au",
                    "one positive carrier must be given".into(),
                )
            }
        }
        if self.pulse.intensity_w_cm2 < 0.0 {
            return bad("pulse.intensity_w_cm2", "must be nonnegative".into());
        }
        match self.pulse.envelope.as_str() {
            "gaussian" => {
                if !self.pulse.fwhm_cycles.map(|v| v > 0.0).unwrap_or(false) {
                    return bad(
                        "pulse.fwhm_cycles",
                        "gaussian envelope needs a positive width".into(),
                    );
                }
            }
            "ramped_cw" | "ramped_cw_intensity" => {
                if !self.pulse.ramp_cycles.map(|v| v >= 0.0).unwrap_or(false) {
                    return bad(
                        "pulse.ramp_cycles",
                        "ramped envelope needs a nonnegative ramp".into(),
                    );
                }
            }
            other => {
                return bad("pulse.envelope", format!("unknown envelope \"{other}\""));
            }
        }
        if !(self.propagation.pre_cycles >= 0.0 && self.propagation.post_cycles > 0.0) {
            return bad(
                "propagation.pre_cycles/post_cycles",
                "window must be positive".into(),
            );
        }
        if !(self.propagation.rel_tol > 0.0) {
            return bad("propagation.rel_tol", "must be positive".into());
        }
        if self.propagation.sample_stride < 2 {
            return bad("propagation.sample_stride", "at least 2 per cycle".into());
        }
        if !(self.propagation.eps_reg > 0.0) {
            return bad("propagation.eps_reg", "must be positive".into());
        }
        Ok(())
    }

    pub fn omega0(&self) -> f64 {
        match (self.pulse.lambda_nm, self.pulse.omega_au) {
            (Some(l), _) => omega_from_lambda_nm(l),
            (_, Some(w)) => w,
            _ => unreachable!("validated"),
        }
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega0()
    }

    pub fn peak_field(&self) -> f64 {
        field_from_intensity_w_cm2(self.pulse.intensity_w_cm2)
    }

    /// Pulse with the envelope peak placed `pre_cycles` into the window.
    pub fn laser_pulse(&self) -> Result<LaserPulse> {
        let omega0 = self.omega0();
        let period = self.period();
        let envelope = match self.pulse.envelope.as_str() {
            "gaussian" => Envelope::Gaussian {
                fwhm: self.pulse.fwhm_cycles.unwrap() * period,
                t_peak: self.propagation.pre_cycles * period,
            },
            "ramped_cw" => Envelope::RampedCw {
                ramp_cycles: self.pulse.ramp_cycles.unwrap(),
            },
            "ramped_cw_intensity" => Envelope::RampedCwIntensity {
                ramp_cycles: self.pulse.ramp_cycles.unwrap(),
            },
            _ => unreachable!("validated"),
        };
        LaserPulse::new(omega0, self.peak_field(), envelope, self.pulse.cep)
    }

    pub fn grid1d(&self) -> Result<Grid1D> {
        Grid1D::new(self.grid.l, self.grid.n_points)
    }

    pub fn model(&self) -> Result<SoftCoreModel> {
        SoftCoreModel::new(self.model.z, self.model.a_en, self.model.a_ee, self.model.n)
    }

    pub fn cap_spec(&self) -> Result<Option<CapSpec>> {
        if self.cap.enabled {
            Ok(Some(CapSpec::new(self.cap.x_cap, self.grid.l, true)?))
        } else {
            Ok(None)
        }
    }

    pub fn system(&self) -> Result<SystemSpec> {
        Ok(SystemSpec {
            grid: self.grid1d()?,
            model: self.model()?,
            m: self.model.m,
            cap: self.cap_spec()?,
        })
    }

    pub fn propagation_config(&self) -> PropagationConfig {
        let period = self.period();
        PropagationConfig {
            rel_tol: self.propagation.rel_tol,
            t_start: 0.0,
            t_end: (self.propagation.pre_cycles + self.propagation.post_cycles) * period,
            sample_stride: self.propagation.sample_stride,
            eps_reg: self.propagation.eps_reg,
            energy_stride: self.propagation.energy_stride,
            ..Default::default()
        }
    }

    /// Gabor window sigma in time units.
    pub fn gabor_sigma(&self) -> f64 {
        let base = self.analysis.tw_cycles * self.period();
        if self.analysis.tw_is_fwhm {
            // FWHM of a Gaussian amplitude window = 2 sqrt(2 ln 2) sigma
            base / (8.0f64 * std::f64::consts::LN_2).sqrt()
        } else {
            base
        }
    }

    /// The published 4-electron experiment at full scale.
    pub fn paper() -> Self {
        Self {
            model: ModelSection {
                z: 4.0,
                a_en: 0.8,
                a_ee: 1.0,
                n: 4,
                m: 8,
            },
            grid: GridSection {
                l: 360.0,
                n_points: 2400,
            },
            cap: CapSection {
                x_cap: 270.0,
                enabled: true,
            },
            pulse: PulseSection {
                lambda_nm: Some(1000.0),
                omega_au: None,
                intensity_w_cm2: 2e14,
                envelope: "gaussian".into(),
                fwhm_cycles: Some(4.0),
                ramp_cycles: None,
                cep: 0.0,
            },
            propagation: PropagationSection {
                pre_cycles: 20.0,
                post_cycles: 80.0,
                rel_tol: 1e-8,
                sample_stride: 256,
                eps_reg: 1e-8,
                energy_stride: 256,
            },
            analysis: AnalysisSection::default(),
            meta: MetaSection::default(),
        }
    }

    /// Reduced preset: coarser grid, fewer orbitals, shorter pulse and
    /// window; still shows both plateaus.
    pub fn reduced() -> Self {
        let mut cfg = Self::paper();
        cfg.model.m = 6;
        cfg.grid.n_points = 1200;
        cfg.pulse.fwhm_cycles = Some(3.0);
        cfg.propagation.pre_cycles = 10.0;
        cfg.propagation.post_cycles = 30.0;
        cfg
    }

    /// Single-active-electron comparison run (same Ip, frozen core).
    pub fn sae() -> Self {
        let mut cfg = Self::paper();
        cfg.model = ModelSection {
            z: 1.0,
            a_en: 1.414,
            a_ee: 1.0,
            n: 1,
            m: 1,
        };
        cfg
    }
}
