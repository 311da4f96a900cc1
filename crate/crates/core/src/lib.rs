//! 1D multi-configuration time-dependent Hartree-Fock (MCTDHF) on a uniform grid.
//!
//! The crate solves the time-dependent Schrödinger equation for a few
//! soft-core electrons in a strong laser field by expanding the wave function
//! in time-dependent Slater determinants of time-dependent spatial orbitals.
//! On top of the propagator it provides the surrounding machinery for
//! high-harmonic spectroscopy: ground-state relaxation in imaginary time,
//! dipole time series, harmonic spectra and Gabor time-frequency maps,
//! classical three-step trajectory analysis, and driven-response probes
//! (static polarizability, resonance scans, post-pulse oscillation analysis).
//!
//! Everything is in Hartree atomic units unless a name says otherwise.
//!
//! Data-parallel kernels (mean fields, two-body integrals, scan points,
//! spectrogram columns) run on rayon when the default `parallel` feature is
//! enabled and fall back to sequential loops without it. Both paths produce
//! bit-identical results: reductions are ordered, never atomic.

pub mod classical;
pub mod config;
pub mod constants;
pub mod determinants;
pub mod engine;
pub mod error;
pub mod fields;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod meanfield;
pub mod observables;
pub mod ode;
pub mod oracle;
pub mod probes;
pub mod spectral;

pub use error::{Error, Result};

/// Code version stamped into output metadata and checkpoints.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Configure the global worker pool used by the parallel kernels.
///
/// Must be called before any parallel work if a non-default thread count is
/// wanted. Without the `parallel` feature this is a no-op.
pub fn set_worker_threads(n: usize) -> Result<()> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
    }
    Ok(())
}
