//! Harmonic spectra, Gabor time-frequency maps, and two-plateau cutoff
//! detection on dipole time series.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io;
use crate::observables::TimeSeries;

/// |d(omega)|^2 on the discrete frequency axis of the record.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    pub harmonic_order: Vec<f64>,
    pub intensity: Vec<f64>,
}

impl Spectrum {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega_au,harmonic_order,intensity\n");
        for i in 0..self.omega.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                io::fmt_full(self.omega[i]),
                io::fmt_full(self.harmonic_order[i]),
                io::fmt_full(self.intensity[i]),
            ));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::atomic_write(path, self.to_csv().as_bytes())
    }

    /// Frequency resolution of the record.
    pub fn domega(&self) -> f64 {
        if self.omega.len() > 1 {
            self.omega[1] - self.omega[0]
        } else {
            0.0
        }
    }
}

/// Options for the global transform.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumOptions {
    /// Apply a raised-cosine taper over this fraction of each record edge
    /// before transforming. 0 disables it (the default).
    pub edge_taper: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { edge_taper: 0.0 }
    }
}

/// Discrete Fourier transform of the dipole record: intensity = |d(omega)|^2
/// with d(omega) = dt * sum_k d(t_k) exp(-i omega t_k), up to Nyquist.
pub fn harmonic_spectrum(series: &TimeSeries) -> Result<Spectrum> {
    harmonic_spectrum_with(series, &SpectrumOptions::default())
}

pub fn harmonic_spectrum_with(series: &TimeSeries, opts: &SpectrumOptions) -> Result<Spectrum> {
    let dt = series.dt()?;
    let n = series.len();
    let mut buf: Vec<Complex64> = series
        .dipole
        .iter()
        .map(|&d| Complex64::new(d, 0.0))
        .collect();
    if opts.edge_taper > 0.0 {
        apply_edge_taper(&mut buf, opts.edge_taper);
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let omega0 = series.metadata.omega0;
    let domega = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    let n_keep = n / 2 + 1;
    let mut omega = Vec::with_capacity(n_keep);
    let mut order = Vec::with_capacity(n_keep);
    let mut intensity = Vec::with_capacity(n_keep);
    for k in 0..n_keep {
        let w = k as f64 * domega;
        omega.push(w);
        order.push(w / omega0);
        intensity.push((buf[k] * dt).norm_sqr());
    }
    Ok(Spectrum {
        omega,
        harmonic_order: order,
        intensity,
    })
}

fn apply_edge_taper(buf: &mut [Complex64], fraction: f64) {
    let n = buf.len();
    let edge = ((n as f64 * fraction) as usize).max(1).min(n / 2);
    for i in 0..edge {
        let w = 0.5 * (1.0 - (std::f64::consts::PI * (i as f64 + 0.5) / edge as f64).cos());
        buf[i] *= w;
        buf[n - 1 - i] *= w;
    }
}

/// Windowed intensity |Gabor(omega; t_r)|^2 on a (return time, frequency)
/// grid.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    pub return_times: Vec<f64>,
    pub omega: Vec<f64>,
    /// intensity[(i_t, i_w)]
    pub intensity: Array2<f64>,
}

impl Spectrogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_return,omega_au,intensity\n");
        for (i, &tr) in self.return_times.iter().enumerate() {
            for (j, &w) in self.omega.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{}\n",
                    io::fmt_full(tr),
                    io::fmt_full(w),
                    io::fmt_full(self.intensity[(i, j)]),
                ));
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        io::atomic_write(path, self.to_csv().as_bytes())
    }

    /// Binary form: JSON header with the axes, then the intensity grid as
    /// little-endian f64, row-major over (t_return, omega).
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Header<'a> {
            n_return_times: usize,
            n_omega: usize,
            return_times: &'a [f64],
            omega: &'a [f64],
        }
        let header = serde_json::to_vec(&Header {
            n_return_times: self.return_times.len(),
            n_omega: self.omega.len(),
            return_times: &self.return_times,
            omega: &self.omega,
        })
        .map_err(|e| Error::InvalidArgument(format!("spectrogram header: {e}")))?;
        let mut bytes = Vec::with_capacity(16 + header.len() + 8 * self.intensity.len());
        bytes.extend_from_slice(b"MCHFGAB\0");
        bytes.extend_from_slice(&(header.len() as u64).to_le_bytes());
        bytes.extend_from_slice(&header);
        for v in self.intensity.iter() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        io::atomic_write(path, &bytes)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GaborOptions {
    /// Return-time stride in samples of the series.
    pub time_stride: usize,
    /// Highest frequency kept, as a multiple of the carrier.
    pub max_order: f64,
    /// Zero-padded transform length (power of two chosen at or above this).
    pub min_fft_len: usize,
}

impl Default for GaborOptions {
    fn default() -> Self {
        Self {
            time_stride: 32,
            max_order: 130.0,
            min_fft_len: 2048,
        }
    }
}

/// Gabor transform of the dipole: the record is multiplied by the normalized
/// Gaussian window w(t - t_r) with sigma `tw` and Fourier transformed for
/// each return time on the strided sample grid.
pub fn gabor_transform(series: &TimeSeries, tw: f64) -> Result<Spectrogram> {
    gabor_transform_with(series, tw, &GaborOptions::default())
}

pub fn gabor_transform_with(
    series: &TimeSeries,
    tw: f64,
    opts: &GaborOptions,
) -> Result<Spectrogram> {
    let dt = series.dt()?;
    let n = series.len();
    if !(tw > 0.0) {
        return Err(Error::InvalidArgument("window width must be positive".into()));
    }
    let record = (n - 1) as f64 * dt;
    if tw > record {
        return Err(Error::InvalidArgument(format!(
            "window sigma {tw} exceeds the record length {record}"
        )));
    }

    // window support: +-5 sigma covers the Gaussian to ~4e-6 amplitude
    let half = ((5.0 * tw / dt).ceil() as usize).max(1);
    let seg = 2 * half + 1;
    let fft_len = seg.max(opts.min_fft_len).next_power_of_two();
    let fft = FftPlanner::new().plan_fft_forward(fft_len);

    let omega0 = series.metadata.omega0;
    let domega = 2.0 * std::f64::consts::PI / (fft_len as f64 * dt);
    let n_keep = ((opts.max_order * omega0 / domega).ceil() as usize + 1).min(fft_len / 2 + 1);
    let omega: Vec<f64> = (0..n_keep).map(|k| k as f64 * domega).collect();

    let norm = 1.0 / (std::f64::consts::PI * tw * tw).powf(0.25);
    let centers: Vec<usize> = (0..n).step_by(opts.time_stride.max(1)).collect();
    let return_times: Vec<f64> = centers.iter().map(|&c| series.times[c]).collect();

    let column = |&c: &usize| -> Vec<f64> {
        let mut buf = vec![Complex64::default(); fft_len];
        for k in 0..seg {
            let idx = c as isize - half as isize + k as isize;
            if idx < 0 || idx >= n as isize {
                continue;
            }
            let t_off = (k as isize - half as isize) as f64 * dt;
            let w = norm * (-t_off * t_off / (2.0 * tw * tw)).exp();
            buf[k] = Complex64::new(series.dipole[idx as usize] * w, 0.0);
        }
        fft.process(&mut buf);
        buf[..n_keep].iter().map(|z| (z * dt).norm_sqr()).collect()
    };

    #[cfg(feature = "parallel")]
    let columns: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        centers.par_iter().map(column).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let columns: Vec<Vec<f64>> = centers.iter().map(column).collect();

    let mut intensity = Array2::<f64>::zeros((centers.len(), n_keep));
    for (i, col) in columns.iter().enumerate() {
        for (j, &v) in col.iter().enumerate() {
            intensity[(i, j)] = v;
        }
    }
    Ok(Spectrogram {
        return_times,
        omega,
        intensity,
    })
}

/// Detected plateau structure of a harmonic spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct CutoffReport {
    pub first_cutoff: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_cutoff: Option<f64>,
    /// log10 intensity levels of the two plateaus (second present only with
    /// a second cutoff).
    pub plateau_levels: [f64; 2],
    /// Ip + 3.17 Up, for reference.
    pub classical_prediction: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CutoffOptions {
    /// Moving-median smoothing window, in units of the carrier frequency.
    pub median_window_orders: f64,
    /// A cutoff is where the smoothed log intensity falls this many decades
    /// below its plateau level.
    pub drop_decades: f64,
    /// The second plateau is scanned starting this many carrier orders above
    /// the first cutoff.
    pub second_plateau_offset_orders: f64,
    /// Width of the window used to estimate the second plateau level.
    pub second_plateau_window_orders: f64,
    /// Require the second plateau this many decades above the noise floor.
    pub min_second_contrast_decades: f64,
}

impl Default for CutoffOptions {
    fn default() -> Self {
        Self {
            median_window_orders: 2.0,
            drop_decades: 2.0,
            second_plateau_offset_orders: 4.0,
            second_plateau_window_orders: 10.0,
            min_second_contrast_decades: 1.0,
        }
    }
}

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[values.len() / 2]
}

fn moving_median(y: &[f64], half_width: usize) -> Vec<f64> {
    let n = y.len();
    let mut out = Vec::with_capacity(n);
    let mut buf = Vec::new();
    for i in 0..n {
        let lo = i.saturating_sub(half_width);
        let hi = (i + half_width + 1).min(n);
        buf.clear();
        buf.extend_from_slice(&y[lo..hi]);
        out.push(median(&mut buf));
    }
    out
}

fn median_over_band(omega: &[f64], smoothed: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let mut vals: Vec<f64> = omega
        .iter()
        .zip(smoothed)
        .filter(|(&w, _)| w >= lo && w < hi)
        .map(|(_, &v)| v)
        .collect();
    if vals.is_empty() {
        None
    } else {
        Some(median(&mut vals))
    }
}

/// Locate the plateau cutoffs of a harmonic spectrum.
///
/// The log intensity is smoothed with a moving median; the first plateau
/// level is the median over [Ip + Up, Ip + 2.5 Up] and its cutoff the highest
/// frequency still within `drop_decades` of that level. The second plateau is
/// measured in a window above the first cutoff and reported only if it clears
/// the high-frequency noise floor.
pub fn detect_cutoffs(spectrum: &Spectrum, ip: f64, up: f64) -> Result<CutoffReport> {
    detect_cutoffs_with(spectrum, ip, up, &CutoffOptions::default())
}

pub fn detect_cutoffs_with(
    spectrum: &Spectrum,
    ip: f64,
    up: f64,
    opts: &CutoffOptions,
) -> Result<CutoffReport> {
    let omega = &spectrum.omega;
    let n = omega.len();
    if n < 16 {
        return Err(Error::InvalidArgument("spectrum too short".into()));
    }
    let omega0 = if spectrum.harmonic_order[n - 1] > 0.0 {
        omega[n - 1] / spectrum.harmonic_order[n - 1]
    } else {
        return Err(Error::InvalidArgument("harmonic order axis is empty".into()));
    };
    let classical = ip + 3.17 * up;

    let floor_val = 1e-300;
    let logi: Vec<f64> = spectrum
        .intensity
        .iter()
        .map(|&v| v.max(floor_val).log10())
        .collect();
    let domega = spectrum.domega();
    let half = ((opts.median_window_orders * omega0 / domega / 2.0).round() as usize).max(1);
    let smooth = moving_median(&logi, half);

    // first plateau level over [Ip + Up, Ip + 2.5 Up]
    let plateau1 = median_over_band(omega, &smooth, ip + up, ip + 2.5 * up)
        .ok_or_else(|| Error::NoPlateau("spectrum does not reach Ip + Up".into()))?;

    // noise floor from the top 15% of the frequency axis
    let noise = median_over_band(omega, &smooth, omega[n - 1] * 0.85, omega[n - 1] + domega)
        .unwrap_or(f64::NEG_INFINITY);
    if plateau1 - noise < opts.drop_decades {
        return Err(Error::NoPlateau(format!(
            "plateau level {plateau1:.2} within {:.1} decades of the noise floor {noise:.2}",
            opts.drop_decades
        )));
    }

    let threshold1 = plateau1 - opts.drop_decades;
    let first_idx = (0..n)
        .rev()
        .find(|&i| smooth[i] >= threshold1)
        .ok_or_else(|| Error::NoPlateau("no frequency above the plateau threshold".into()))?;
    let first_cutoff = omega[first_idx];

    // second plateau in a window just above the first cutoff
    let lo = first_cutoff + opts.second_plateau_offset_orders * omega0;
    let hi = lo + opts.second_plateau_window_orders * omega0;
    let mut second_cutoff = None;
    let mut plateau2 = f64::NEG_INFINITY;
    if let Some(level2) = median_over_band(omega, &smooth, lo, hi) {
        if level2 - noise >= opts.min_second_contrast_decades {
            let threshold2 = level2 - opts.drop_decades;
            if let Some(idx2) = (0..n).rev().find(|&i| smooth[i] >= threshold2) {
                if omega[idx2] > first_cutoff {
                    second_cutoff = Some(omega[idx2]);
                    plateau2 = level2;
                }
            }
        }
    }

    Ok(CutoffReport {
        first_cutoff,
        second_cutoff,
        plateau_levels: [plateau1, plateau2],
        classical_prediction: classical,
    })
}
