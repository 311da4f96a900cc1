//! Command-line driver: ground-state relaxation, time propagation, spectral
//! analysis, resonance scans, classical trajectories, and polarizability.
//!
//! Exit codes: 0 success, 1 physics/convergence failure, 2 usage or config
//! error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mctdhf1d::classical::{classical_return_map_with, write_return_map_csv, ReturnMapOptions};
use mctdhf1d::config::RunConfig;
use mctdhf1d::engine::{
    ionization_ladder, load_checkpoint, propagate, relax_from_scratch, save_checkpoint,
    CheckpointHeader, McState, RelaxOptions,
};
use mctdhf1d::error::Error;
use mctdhf1d::io::atomic_write;
use mctdhf1d::observables::TimeSeries;
use mctdhf1d::probes::{
    plasmon_spectroscopy, resonance_scan, static_polarizability, RampShape, ResonanceScanConfig,
    ResonanceScanResult,
};
use mctdhf1d::spectral::{
    detect_cutoffs_with, gabor_transform_with, harmonic_spectrum_with, CutoffOptions,
    GaborOptions, SpectrumOptions,
};

#[derive(Parser)]
#[command(
    name = "mctdhf1d",
    about = "1D multi-configuration time-dependent Hartree-Fock simulator",
    version
)]
struct Cli {
    /// Worker threads for the data-parallel kernels (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Relax the ground state and write a checkpoint plus a JSON report.
    Relax(RelaxArgs),
    /// Propagate a checkpointed state through the configured pulse.
    Propagate(PropagateArgs),
    /// Analyze a time series: spectrum, time-frequency map, plasmon lines,
    /// or plateau cutoffs.
    Analyze(AnalyzeArgs),
    /// Drive the system with a ramped CW laser over a frequency grid.
    Scan(ScanArgs),
    /// Classical three-step return map for the configured pulse.
    Classical(ClassicalArgs),
    /// Static polarizability from relaxed densities under small fields.
    Polarizability(PolarizabilityArgs),
    /// Successive ionization potentials by repeated relaxation.
    Ladder(LadderArgs),
}

#[derive(Args)]
struct RelaxArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also compute the full ionization ladder.
    #[arg(long)]
    ladder: bool,
    /// Energy change per step at convergence.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct PropagateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum AnalyzeMode {
    Spectrum,
    Tfmap,
    Plasmon,
    Cutoffs,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MapFormat {
    Csv,
    Bin,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long, value_enum)]
    mode: AnalyzeMode,
    /// Time-series CSV produced by `propagate`.
    #[arg(long)]
    series: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Carrier frequency fallback when the series has no sidecar.
    #[arg(long)]
    omega0: Option<f64>,
    /// Run config; supplies analysis parameters (optional).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ionization potential for the cutoff detector.
    #[arg(long)]
    ip: Option<f64>,
    /// Ponderomotive energy for the cutoff detector (default: from the
    /// series' pulse metadata).
    #[arg(long)]
    up: Option<f64>,
    /// End of the pulse for the plasmon probe (default: envelope peak plus
    /// two FWHM from the metadata).
    #[arg(long)]
    pulse_end: Option<f64>,
    /// Gabor window sigma in optical cycles.
    #[arg(long)]
    tw_cycles: Option<f64>,
    #[arg(long, value_enum, default_value_t = MapFormat::Csv)]
    format: MapFormat,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    omega_min: f64,
    #[arg(long)]
    omega_max: f64,
    #[arg(long)]
    omega_step: f64,
    #[arg(long, default_value_t = 2e13)]
    intensity: f64,
    #[arg(long, default_value_t = 4.0)]
    ramp_cycles: f64,
    #[arg(long, default_value_t = 13.0)]
    total_cycles: f64,
    /// Ramp the field amplitude or the intensity linearly.
    #[arg(long, default_value = "amplitude")]
    ramp_shape: String,
    /// Skip frequencies already present in the output file.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct ClassicalArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Birth-phase grid resolution in degrees.
    #[arg(long, default_value_t = 0.05)]
    birth_step_deg: f64,
    /// Birth-phase window in degrees relative to the envelope peak.
    #[arg(long, default_value_t = -360.0)]
    phase_min_deg: f64,
    #[arg(long, default_value_t = 0.0)]
    phase_max_deg: f64,
}

#[derive(Args)]
struct PolarizabilityArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Probe field strengths, comma separated.
    #[arg(long, default_value = "5e-4,1e-3", value_delimiter = ',')]
    fields: Vec<f64>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct LadderArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers > 0 {
        if let Err(e) = mctdhf1d::set_worker_threads(cli.workers) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Relax(args) => cmd_relax(args),
        Command::Propagate(args) => cmd_propagate(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Scan(args) => cmd_scan(args),
        Command::Classical(args) => cmd_classical(args),
        Command::Polarizability(args) => cmd_polarizability(args),
        Command::Ladder(args) => cmd_ladder(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let usage = err
                .downcast_ref::<Error>()
                .map(|e| e.is_usage())
                .unwrap_or(false);
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}

fn checkpoint_header(cfg: &RunConfig, t: f64) -> anyhow::Result<CheckpointHeader> {
    let model = cfg.model()?;
    Ok(CheckpointHeader {
        format_version: 1,
        code_version: mctdhf1d::VERSION.to_string(),
        grid_half_width: cfg.grid.l,
        grid_points: cfg.grid.n_points,
        m: cfg.model.m,
        n_up: cfg.model.n.div_ceil(2),
        n_dn: cfg.model.n / 2,
        n_det: 0, // fixed up by the caller
        t,
        model: Some(model),
        binding: Some(model.binding()),
        pulse: Some(cfg.laser_pulse()?),
        cap: cfg.cap_spec()?,
    })
}

fn cmd_relax(args: RelaxArgs) -> anyhow::Result<()> {
    let cfg = RunConfig::from_file(&args.config)?;
    let spec = cfg.system()?;
    let ham = spec.hamiltonian();
    let basis = spec.basis()?;
    let opts = RelaxOptions {
        energy_tol: args.tol,
        eps_reg: cfg.propagation.eps_reg,
        ..Default::default()
    };
    eprintln!(
        "relaxing {} electrons in m = {} orbitals on {} grid points...",
        cfg.model.n,
        cfg.model.m,
        cfg.grid.n_points
    );
    let (state, report) = relax_from_scratch(&ham, &basis, &opts)?;
    let mut header = checkpoint_header(&cfg, 0.0)?;
    header.n_det = basis.len();
    let ckpt_path = args.out.join("ground.ckpt");
    save_checkpoint(&ckpt_path, &header, &state)?;

    let ladder = if args.ladder {
        eprintln!("relaxing the ion series for the ionization ladder...");
        Some(ionization_ladder(&ham, cfg.model.n, cfg.model.m, &opts)?)
    } else {
        None
    };
    let report_json = serde_json::json!({
        "energy_au": report.energy,
        "iterations": report.iterations,
        "converged": report.converged,
        "ladder": ladder,
        "config": cfg,
        "code_version": mctdhf1d::VERSION,
    });
    atomic_write(
        &args.out.join("relax_report.json"),
        serde_json::to_string_pretty(&report_json)?.as_bytes(),
    )?;
    println!("E0 = {:.8} a.u. ({} iterations)", report.energy, report.iterations);
    if let Some(l) = &ladder {
        println!("ionization ladder: {:?}", l.potentials);
    }
    println!("checkpoint: {}", ckpt_path.display());
    Ok(())
}

fn cmd_propagate(args: PropagateArgs) -> anyhow::Result<()> {
    let cfg = RunConfig::from_file(&args.config)?;
    let spec = cfg.system()?;
    let ham = spec.hamiltonian();
    let basis = spec.basis()?;
    let pulse = cfg.laser_pulse()?;

    let ckpt = load_checkpoint(&args.checkpoint)?;
    let mut expected = checkpoint_header(&cfg, ckpt.header.t)?;
    expected.n_det = basis.len();
    let diffs = ckpt.header.diff(&expected);
    if !diffs.is_empty() {
        return Err(Error::CheckpointMismatch(diffs.join("\n")).into());
    }

    let mut prop = cfg.propagation_config();
    prop.t_start = ckpt.header.t;
    let state = McState {
        t: ckpt.header.t,
        ..ckpt.state
    };
    eprintln!(
        "propagating t = {:.1} .. {:.1} a.u. ({} samples/cycle)...",
        prop.t_start, prop.t_end, prop.sample_stride
    );
    let meta_extra = serde_json::json!({ "config": cfg });
    let (series, final_state, stats) = propagate(&ham, &basis, &pulse, state, &prop, meta_extra)?;

    series.write(&args.out.join("timeseries.csv"))?;
    let mut header = checkpoint_header(&cfg, prop.t_end)?;
    header.n_det = basis.len();
    save_checkpoint(&args.out.join("final.ckpt"), &header, &final_state)?;
    println!(
        "{} samples; {} steps ({} rejected); final norm {:.6}; max orthonormality drift {:.2e}",
        series.len(),
        stats.ode.n_accepted,
        stats.ode.n_rejected,
        final_state.norm_squared(),
        stats.max_ortho_drift,
    );
    Ok(())
}

fn analysis_options(cfg: &Option<RunConfig>) -> (SpectrumOptions, CutoffOptions, GaborOptions) {
    let a = cfg
        .as_ref()
        .map(|c| c.analysis.clone())
        .unwrap_or_default();
    (
        SpectrumOptions {
            edge_taper: a.edge_taper,
        },
        CutoffOptions {
            median_window_orders: a.cutoff_median_window_orders,
            drop_decades: a.cutoff_drop_decades,
            second_plateau_offset_orders: a.second_plateau_offset_orders,
            second_plateau_window_orders: a.second_plateau_window_orders,
            min_second_contrast_decades: a.min_second_contrast_decades,
        },
        GaborOptions {
            time_stride: a.gabor_time_stride,
            max_order: a.gabor_max_order,
            min_fft_len: 2048,
        },
    )
}

fn cmd_analyze(args: AnalyzeArgs) -> anyhow::Result<()> {
    let cfg = match &args.config {
        Some(path) => Some(RunConfig::from_file(path)?),
        None => None,
    };
    let series = TimeSeries::read(&args.series, args.omega0)?;
    let (spec_opts, cutoff_opts, gabor_opts) = analysis_options(&cfg);
    std::fs::create_dir_all(&args.out)?;

    match args.mode {
        AnalyzeMode::Spectrum => {
            let spectrum = harmonic_spectrum_with(&series, &spec_opts)?;
            let path = args.out.join("spectrum.csv");
            spectrum.write(&path)?;
            println!("spectrum: {} ({} bins)", path.display(), spectrum.omega.len());
        }
        AnalyzeMode::Tfmap => {
            let period = 2.0 * std::f64::consts::PI / series.metadata.omega0;
            let tw = match (args.tw_cycles, &cfg) {
                (Some(c), _) => c * period,
                (None, Some(c)) => c.gabor_sigma(),
                (None, None) => 0.2 * period,
            };
            let map = gabor_transform_with(&series, tw, &gabor_opts)?;
            match args.format {
                MapFormat::Csv => {
                    let path = args.out.join("tfmap.csv");
                    map.write_csv(&path)?;
                    println!(
                        "time-frequency map: {} ({} x {})",
                        path.display(),
                        map.return_times.len(),
                        map.omega.len()
                    );
                }
                MapFormat::Bin => {
                    let path = args.out.join("tfmap.bin");
                    map.write_binary(&path)?;
                    println!("time-frequency map: {}", path.display());
                }
            }
        }
        AnalyzeMode::Plasmon => {
            let pulse_end = args.pulse_end.or_else(|| {
                let meta = &series.metadata;
                match (meta.t_peak, meta.pulse) {
                    (Some(tp), Some(p)) => match p.envelope {
                        mctdhf1d::fields::Envelope::Gaussian { fwhm, .. } => {
                            Some(tp + 2.0 * fwhm)
                        }
                        _ => Some(tp),
                    },
                    _ => None,
                }
            });
            let pulse_end = pulse_end.ok_or_else(|| {
                Error::InvalidArgument(
                    "no pulse metadata; give --pulse-end explicitly".into(),
                )
            })?;
            let report = plasmon_spectroscopy(&series, pulse_end)?;
            let path = args.out.join("plasmon.json");
            atomic_write(&path, serde_json::to_string_pretty(&report)?.as_bytes())?;
            println!(
                "plasmon line at {:.4} a.u., multiples {:?}, decay: {}",
                report.omega_p, report.harmonics_present, report.decay_observed
            );
        }
        AnalyzeMode::Cutoffs => {
            let spectrum = harmonic_spectrum_with(&series, &spec_opts)?;
            let up = args
                .up
                .or_else(|| series.metadata.pulse.map(|p| p.ponderomotive_energy()))
                .ok_or_else(|| {
                    Error::InvalidArgument("no pulse metadata; give --up explicitly".into())
                })?;
            let ip = args.ip.unwrap_or(0.5);
            let report = detect_cutoffs_with(&spectrum, ip, up, &cutoff_opts)?;
            let path = args.out.join("cutoffs.json");
            atomic_write(&path, serde_json::to_string_pretty(&report)?.as_bytes())?;
            let omega0 = series.metadata.omega0;
            print!(
                "first cutoff {:.4} a.u. (order {:.1});",
                report.first_cutoff,
                report.first_cutoff / omega0
            );
            match report.second_cutoff {
                Some(c) => println!(" second cutoff {:.4} a.u. (order {:.1})", c, c / omega0),
                None => println!(" no second plateau"),
            }
        }
    }
    Ok(())
}

fn cmd_scan(args: ScanArgs) -> anyhow::Result<()> {
    let cfg = RunConfig::from_file(&args.config)?;
    let spec = cfg.system()?;
    if !(args.omega_step > 0.0) || !(args.omega_max >= args.omega_min) || !(args.omega_min > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bad frequency range [{}, {}] step {}",
            args.omega_min, args.omega_max, args.omega_step
        ))
        .into());
    }
    let mut grid = Vec::new();
    let mut w = args.omega_min;
    while w <= args.omega_max + 1e-12 {
        grid.push(w);
        w += args.omega_step;
    }

    let out_path = args.out.join("scan.csv");
    let mut done: Vec<mctdhf1d::probes::ScanPoint> = Vec::new();
    if args.resume && out_path.exists() {
        let content = std::fs::read_to_string(&out_path)?;
        let (_, rows) = mctdhf1d::io::read_numeric_csv(
            &content
                .lines()
                .map(|l| {
                    // the status column is text; strip it for the reader
                    match l.rsplit_once(',') {
                        Some((head, _)) => head.to_string(),
                        None => l.to_string(),
                    }
                })
                .collect::<Vec<_>>()
                .join("\n"),
            &out_path.display().to_string(),
        )?;
        for row in rows {
            // keep only rows that completed successfully
            if row[1].is_finite() {
                done.push(mctdhf1d::probes::ScanPoint {
                    omega: row[0],
                    max_excursion: row[1],
                    phase_shift: row[2].to_radians(),
                    error: None,
                });
            }
        }
        grid.retain(|w| !done.iter().any(|p| (p.omega - w).abs() < 1e-12));
        eprintln!("resume: {} points done, {} to go", done.len(), grid.len());
    }

    let ramp_shape = match args.ramp_shape.as_str() {
        "amplitude" => RampShape::Amplitude,
        "intensity" => RampShape::Intensity,
        other => {
            return Err(Error::InvalidArgument(format!(
                "ramp shape must be amplitude or intensity, got {other}"
            ))
            .into())
        }
    };

    let mut all = done;
    if !grid.is_empty() {
        let scan_cfg = ResonanceScanConfig {
            omega_grid: grid,
            intensity_w_cm2: args.intensity,
            ramp_cycles: args.ramp_cycles,
            total_cycles: args.total_cycles,
            ramp_shape,
            rel_tol: cfg.propagation.rel_tol,
            sample_stride: cfg.propagation.sample_stride,
            eps_reg: cfg.propagation.eps_reg,
            phase_fit_cycles: 8.0,
        };
        let result = resonance_scan(&spec, &scan_cfg)?;
        all.extend(result.points);
    }
    all.sort_by(|a, b| a.omega.partial_cmp(&b.omega).unwrap());
    let result = ResonanceScanResult { points: all };
    result.write(&out_path)?;
    println!("scan: {} ({} points)", out_path.display(), result.points.len());
    if result.any_failed() {
        return Err(Error::PropagationFailure {
            t: f64::NAN,
            reason: "one or more scan points failed; see the status column".into(),
        }
        .into());
    }
    Ok(())
}

fn cmd_classical(args: ClassicalArgs) -> anyhow::Result<()> {
    let cfg = RunConfig::from_file(&args.config)?;
    let pulse = cfg.laser_pulse()?;
    let n = ((args.phase_max_deg - args.phase_min_deg) / args.birth_step_deg).round() as usize;
    let phases: Vec<f64> = (0..=n)
        .map(|i| (args.phase_min_deg + i as f64 * args.birth_step_deg).to_radians())
        .collect();
    let map = classical_return_map_with(&pulse, &phases, &ReturnMapOptions::default());
    std::fs::create_dir_all(&args.out)?;
    let path = args.out.join("classical.csv");
    write_return_map_csv(&path, &pulse, &map)?;
    let up = pulse.ponderomotive_energy();
    let best = map
        .iter()
        .max_by(|a, b| a.return_energy.partial_cmp(&b.return_energy).unwrap());
    println!("return map: {} ({} trajectories)", path.display(), map.len());
    if let Some(t) = best {
        println!(
            "max return energy {:.4} a.u. = {:.3} Up (born {:.1} deg, returns {:.1} deg)",
            t.return_energy,
            t.return_energy / up,
            t.birth_phase.to_degrees(),
            t.return_phase(&pulse).to_degrees()
        );
    }
    Ok(())
}

fn cmd_polarizability(args: PolarizabilityArgs) -> anyhow::Result<()> {
    let cfg = RunConfig::from_file(&args.config)?;
    let spec = cfg.system()?;
    let opts = RelaxOptions {
        energy_tol: args.tol,
        eps_reg: cfg.propagation.eps_reg,
        ..Default::default()
    };
    let report = static_polarizability(&spec, &args.fields, &opts)?;
    std::fs::create_dir_all(&args.out)?;
    atomic_write(
        &args.out.join("polarizability.json"),
        serde_json::to_string_pretty(&report)?.as_bytes(),
    )?;
    println!(
        "alpha = {:.2} a.u. = {:.2} A^3",
        report.alpha_au, report.alpha_angstrom3
    );
    Ok(())
}

fn cmd_ladder(args: LadderArgs) -> anyhow::Result<()> {
    let cfg = RunConfig::from_file(&args.config)?;
    let spec = cfg.system()?;
    let ham = spec.hamiltonian();
    let opts = RelaxOptions {
        energy_tol: args.tol,
        eps_reg: cfg.propagation.eps_reg,
        ..Default::default()
    };
    let ladder = ionization_ladder(&ham, cfg.model.n, cfg.model.m, &opts)?;
    std::fs::create_dir_all(&args.out)?;
    atomic_write(
        &args.out.join("ladder.json"),
        serde_json::to_string_pretty(&ladder)?.as_bytes(),
    )?;
    println!("energies: {:?}", ladder.energies);
    println!("ionization potentials: {:?}", ladder.potentials);
    Ok(())
}

