//! Command-line pipelines behind the `rydgate` binary.
//!
//! Every command writes its table (CSV or JSON) plus a `<out>.meta.json`
//! sidecar recording the full configuration, seeds, and crate version, so
//! a run is reproducible from its artifacts alone. Timestamps live only
//! in the sidecar; the data files are byte-identical given the same
//! configuration and seed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::atomdata::{load_species, SpeciesData};
use crate::grape::{
    optimize, scan_time_optimal, OptimizationProblem, OptimizationReport, VariableSet,
};
use crate::hamiltonians::GateSystem;
use crate::noise::{
    decay_infidelity, intensity_noise_curve, phase_noise_infidelity, sample_phase_traces,
    ANuInterpretation, AtomNoiseCorrelation, DecayRates, IntensityNoiseSpec, LaserNoiseModel,
    PhaseTraceSampler, WindowPolicy,
};
use crate::propagation::rr_population_trace;
use crate::pulses::{make_pi2pipi_slowed, DEFAULT_SLOWDOWN};
use crate::spectrum::exact_eigenvalues;
use crate::units::{OMEGA_MAX, RABI_PERIOD};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("species file: {0}")]
    Species(#[from] crate::atomdata::IngestError),
    #[error("no bundled species for n = {0} (have 40, 50, 60, 70)")]
    UnknownSpecies(u32),
    #[error("optimizer: {0}")]
    Grape(#[from] crate::grape::GrapeError),
    #[error("noise: {0}")]
    Noise(#[from] crate::noise::NoiseError),
    #[error("propagation: {0}")]
    Propagation(#[from] crate::propagation::PropagationError),
    #[error("pulse shapes: {0}")]
    Pulse(#[from] crate::pulses::PulseError),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown figure id `{0}` (expected fig2 | fig3 | fig4 | fig5)")]
    UnknownFigure(String),
    #[error("{failed} of {total} grid points failed; see the metadata sidecar")]
    PartialFailure { failed: usize, total: usize },
}

/// Sampler-size profile for the noise pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// CI-scale traces (500 us, 5e4 bins).
    Desk,
    /// Full-size measurement window (5 ms, 5e6 bins).
    Paper,
}

impl Profile {
    pub fn sampler(&self) -> PhaseTraceSampler {
        match self {
            Profile::Desk => PhaseTraceSampler::desk(),
            Profile::Paper => PhaseTraceSampler::paper(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MechanismArg {
    Blockade,
    Darkstate,
    Ideal,
}

impl MechanismArg {
    fn system(&self, species: &SpeciesData, r_um: f64) -> GateSystem {
        match self {
            MechanismArg::Blockade => GateSystem::blockade(species, r_um),
            MechanismArg::Darkstate => GateSystem::dark_state(species, r_um),
            MechanismArg::Ideal => GateSystem::ideal_blockade(),
        }
    }
}

/// Options shared by every subcommand.
#[derive(Debug, Args)]
pub struct CommonOpts {
    /// Species file (JSON); defaults to the bundled Cs-133 n=70 set.
    #[arg(long, global = true)]
    pub species: Option<PathBuf>,
    /// Principal quantum number for the bundled data when no file is given.
    #[arg(long, global = true, default_value_t = 70)]
    pub n: u32,
    /// Noise sampler profile.
    #[arg(long, global = true, value_enum, default_value_t = Profile::Desk)]
    pub profile: Profile,
}

impl CommonOpts {
    pub fn species_data(&self) -> Result<SpeciesData, CliError> {
        match &self.species {
            Some(path) => Ok(load_species(path)?),
            None => SpeciesData::bundled_cs(self.n).ok_or(CliError::UnknownSpecies(self.n)),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rydgate", version, about = "Rydberg CZ gate synthesis and noise analysis")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pulse-shape tools.
    Pulse {
        #[command(subcommand)]
        which: PulseCommand,
    },
    /// GRAPE-optimize a pulse at fixed duration and write it as JSON.
    Optimize(OptimizeArgs),
    /// Descending-duration scan locating the time-optimal gate.
    Scan(ScanArgs),
    /// Closed-form dark-state eigenvalues as JSON.
    Spectrum(SpectrumArgs),
    /// Error-channel analyses.
    Noise {
        #[command(subcommand)]
        which: NoiseCommand,
    },
    /// Optimized infidelity over an (R, T) grid.
    Sweep(SweepArgs),
    /// Deterministic desk-scale pipelines for the benchmark figures.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Subcommand)]
pub enum PulseCommand {
    /// Sample a smooth theta - 2 theta - theta sequence onto a grid.
    Pi2pipi(Pi2pipiArgs),
}

#[derive(Debug, Args)]
pub struct Pi2pipiArgs {
    /// Area of the outer stages in rad (the middle stage doubles it).
    #[arg(long, default_value_t = std::f64::consts::PI)]
    pub theta: f64,
    /// Smoothness ratio sigma/T.
    #[arg(long, default_value_t = 0.05)]
    pub sigma_ratio: f64,
    /// Slowdown factor (>= 1) for the adiabatic regime.
    #[arg(long, default_value_t = DEFAULT_SLOWDOWN)]
    pub slowdown: f64,
    /// Bin count; defaults to the dt * OMEGA_MAX <= 0.02 rule.
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, value_enum)]
    pub mechanism: MechanismArg,
    /// Interatomic distance in um (ignored for the ideal mechanism).
    #[arg(long, default_value_t = 4.2)]
    pub r: f64,
    /// Gate duration in us.
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    /// Number of random restarts; the best result is kept.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    /// Base seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Optimize all four control arrays instead of one global phase.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, value_enum)]
    pub mechanism: MechanismArg,
    #[arg(long, default_value_t = 4.2)]
    pub r: f64,
    /// Scan bounds and step in units of the Rabi period 2 pi / OMEGA_MAX.
    #[arg(long, default_value_t = 1.15)]
    pub tmin: f64,
    #[arg(long, default_value_t = 1.30)]
    pub tmax: f64,
    #[arg(long, default_value_t = 0.005)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub threshold: f64,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Förster coupling B (rad/us).
    #[arg(long)]
    pub b: f64,
    #[arg(long)]
    pub omega_c: f64,
    #[arg(long)]
    pub omega_t: f64,
    #[arg(long, default_value_t = 0.0)]
    pub phi_c: f64,
    #[arg(long, default_value_t = 0.0)]
    pub phi_t: f64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum NoiseCommand {
    /// Monte-Carlo phase-noise infidelity of an optimized gate.
    Phase(NoisePhaseArgs),
    /// Quasi-static intensity-noise curve of an optimized gate.
    Intensity(NoiseIntensityArgs),
    /// Rydberg-decay errors of the three gate types per principal number.
    Decay(NoiseDecayArgs),
}

#[derive(Debug, Args)]
pub struct NoisePhaseArgs {
    #[arg(long, value_enum, default_value_t = MechanismArg::Darkstate)]
    pub mechanism: MechanismArg,
    #[arg(long, default_value_t = 4.2)]
    pub r: f64,
    /// Gate duration in Rabi periods.
    #[arg(long, default_value_t = 1.30)]
    pub t_units: f64,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Draw independent traces per atom instead of one shared trace.
    #[arg(long)]
    pub independent: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NoiseIntensityArgs {
    #[arg(long, value_enum, default_value_t = MechanismArg::Darkstate)]
    pub mechanism: MechanismArg,
    #[arg(long, default_value_t = 4.2)]
    pub r: f64,
    #[arg(long, default_value_t = 1.30)]
    pub t_units: f64,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    /// Half-width of the relative deviation grid.
    #[arg(long, default_value_t = 0.03)]
    pub span: f64,
    #[arg(long, default_value_t = 61)]
    pub points: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NoiseDecayArgs {
    /// Principal quantum numbers, e.g. 40,50,60,70.
    #[arg(long, value_delimiter = ',', default_values_t = vec![40u32, 50, 60, 70])]
    pub n: Vec<u32>,
    #[arg(long, default_value_t = 4.2)]
    pub r: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub mechanism: MechanismArg,
    /// Distances in um, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub r: Vec<f64>,
    #[arg(long, default_value_t = 1.10)]
    pub tmin: f64,
    #[arg(long, default_value_t = 1.60)]
    pub tmax: f64,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    #[arg(long, default_value_t = 3)]
    pub seeds: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// One of fig2, fig3, fig4, fig5.
    pub figure: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub outdir: PathBuf,
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

fn write_metadata(
    out: &Path,
    command: &str,
    config: serde_json::Value,
    seeds: &[u64],
    extra: serde_json::Value,
) -> Result<(), CliError> {
    let meta = json!({
        "command": command,
        "config": config,
        "seeds": seeds,
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp_utc_s": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        "extra": extra,
    });
    let mut path = out.as_os_str().to_owned();
    path.push(".meta.json");
    std::fs::write(PathBuf::from(path), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

fn write_text(out: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(out, text)?;
    Ok(())
}

fn fmt_f(x: f64) -> String {
    format!("{x:.12e}")
}

/// Best-of-`restarts` optimization at fixed duration.
fn optimize_best(
    sys: &GateSystem,
    bins: usize,
    t_total: f64,
    base_seed: u64,
    restarts: u64,
    full: bool,
) -> OptimizationReport {
    let mut best: Option<OptimizationReport> = None;
    for i in 0..restarts.max(1) {
        let mut problem = OptimizationProblem::new(sys.clone(), bins, t_total, OMEGA_MAX);
        problem.seed = base_seed.wrapping_add(i);
        problem.convergence.target_epsilon = 1e-10;
        if full {
            problem.variables = VariableSet::Full;
        }
        let report = optimize(&problem);
        if best.as_ref().map_or(true, |b| report.epsilon < b.epsilon) {
            best = Some(report);
        }
    }
    best.expect("at least one restart")
}

/// Time-optimal pulse at a distance: scan down to the threshold wall, then
/// converge hard at the wall duration. Falls back to the best scanned
/// point when the threshold is never met.
fn time_optimal_gate(
    sys: &GateSystem,
    bins: usize,
    t_grid: &[f64],
    threshold: f64,
    restarts: usize,
    seed: u64,
) -> Result<(OptimizationReport, Option<f64>), CliError> {
    let mut template = OptimizationProblem::new(sys.clone(), bins, t_grid[0], OMEGA_MAX);
    template.seed = seed;
    template.convergence.target_epsilon = threshold * 1e-2;
    let scan = scan_time_optimal(&template, t_grid, threshold, restarts)?;
    let t_best = scan.t_min.unwrap_or_else(|| {
        scan.points
            .iter()
            .min_by(|a, b| a.epsilon.total_cmp(&b.epsilon))
            .expect("nonempty scan")
            .t_total
    });
    Ok((optimize_best(sys, bins, t_best, seed, restarts as u64, false), scan.t_min))
}

fn default_t_grid() -> Vec<f64> {
    (0..26).map(|k| (1.775 - 0.025 * k as f64) * RABI_PERIOD).collect()
}

/// Noise model with the a_nu reading used by the comparison pipelines;
/// shape-level results do not depend on it, absolute magnitudes do.
pub fn comparison_noise_model() -> LaserNoiseModel {
    let mut model = LaserNoiseModel::default();
    model.a_nu_unit = ANuInterpretation::MegahertzTimesHertz;
    model
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

pub fn cmd_pulse_pi2pipi(args: &Pi2pipiArgs, out_log: &mut impl std::io::Write) -> Result<(), CliError> {
    let peak = OMEGA_MAX;
    let sched = if (args.theta - std::f64::consts::PI).abs() < 1e-14 {
        make_pi2pipi_slowed(peak, args.sigma_ratio, args.slowdown)?
    } else {
        // generalized theta - 2 theta - theta sequence
        let scaled = peak / args.slowdown;
        let first = crate::pulses::solve_duration(args.theta, scaled, args.sigma_ratio)?;
        let second = crate::pulses::solve_duration(2.0 * args.theta, scaled, args.sigma_ratio)?;
        crate::pulses::PiTwoPiPiSchedule {
            stages: [
                crate::pulses::PulseStage { pulse: first, atom: crate::pulses::DrivenAtom::Control },
                crate::pulses::PulseStage { pulse: second, atom: crate::pulses::DrivenAtom::Target },
                crate::pulses::PulseStage { pulse: first, atom: crate::pulses::DrivenAtom::Control },
            ],
        }
    };
    let grid = match args.bins {
        Some(n) => sched.sample_to_grid(n),
        None => sched.default_grid(),
    };
    write_text(&args.out, &serde_json::to_string_pretty(&grid)?)?;
    write_metadata(
        &args.out,
        "pulse pi2pipi",
        json!({
            "theta": args.theta,
            "sigma_ratio": args.sigma_ratio,
            "slowdown": args.slowdown,
            "bins": grid.n,
        }),
        &[],
        json!({ "total_duration_us": grid.t_total }),
    )?;
    writeln!(out_log, "wrote {} ({} bins over {:.4} us)", args.out.display(), grid.n, grid.t_total)?;
    Ok(())
}

pub fn cmd_optimize(
    common: &CommonOpts,
    args: &OptimizeArgs,
    out_log: &mut impl std::io::Write,
) -> Result<(), CliError> {
    let species = common.species_data()?;
    let sys = args.mechanism.system(&species, args.r);
    let report = optimize_best(&sys, args.bins, args.t, args.seed, args.seeds, args.full);
    write_text(&args.out, &serde_json::to_string_pretty(&report.grid)?)?;
    let seeds: Vec<u64> = (0..args.seeds).map(|i| args.seed.wrapping_add(i)).collect();
    write_metadata(
        &args.out,
        "optimize",
        json!({
            "mechanism": format!("{:?}", args.mechanism),
            "R_um": args.r,
            "T_us": args.t,
            "bins": args.bins,
            "full_variables": args.full,
            "species": species.species,
            "n": species.n,
        }),
        &seeds,
        json!({ "epsilon": report.epsilon, "iterations": report.iterations,
                "converged": report.converged }),
    )?;
    writeln!(out_log, "epsilon = {:.6e} after {} iterations -> {}",
        report.epsilon, report.iterations, args.out.display())?;
    Ok(())
}

pub fn cmd_scan(
    common: &CommonOpts,
    args: &ScanArgs,
    out_log: &mut impl std::io::Write,
) -> Result<(), CliError> {
    let species = common.species_data()?;
    let sys = args.mechanism.system(&species, args.r);
    let mut template = OptimizationProblem::new(sys, args.bins, args.tmax * RABI_PERIOD, OMEGA_MAX);
    template.seed = args.seed;
    template.convergence.target_epsilon = args.threshold * 1e-2;
    let mut t_grid = Vec::new();
    let mut t = args.tmax;
    while t >= args.tmin - 1e-12 {
        t_grid.push(t * RABI_PERIOD);
        t -= args.step;
    }
    let scan = scan_time_optimal(&template, &t_grid, args.threshold, args.seeds)?;
    let mut csv = String::from("T_us,T_over_rabi_period,epsilon\r\n");
    for p in &scan.points {
        let _ = write!(csv, "{},{},{}\r\n", fmt_f(p.t_total), fmt_f(p.t_total / RABI_PERIOD), fmt_f(p.epsilon));
    }
    write_text(&args.out, &csv)?;
    write_metadata(
        &args.out,
        "scan",
        json!({
            "mechanism": format!("{:?}", args.mechanism),
            "R_um": args.r,
            "tmin_units": args.tmin, "tmax_units": args.tmax, "step_units": args.step,
            "threshold": args.threshold, "bins": args.bins, "restarts": args.seeds,
            "species": species.species, "n": species.n,
        }),
        &[args.seed],
        json!({ "t_min_us": scan.t_min, "t_min_units": scan.t_min.map(|t| t / RABI_PERIOD) }),
    )?;
    match scan.t_min {
        Some(tm) => writeln!(out_log, "t_min = {:.4} us ({:.4} Rabi periods) -> {}",
            tm, tm / RABI_PERIOD, args.out.display())?,
        None => writeln!(out_log, "threshold never met -> {}", args.out.display())?,
    }
    Ok(())
}

pub fn cmd_spectrum(args: &SpectrumArgs, out_log: &mut impl std::io::Write) -> Result<(), CliError> {
    let eigenvalues = exact_eigenvalues(args.b, args.omega_c, args.omega_t);
    let body = json!({
        "B": args.b,
        "omega_C": args.omega_c,
        "omega_T": args.omega_t,
        "phi_C": args.phi_c,
        "phi_T": args.phi_t,
        "eigenvalues": {
            "zero": eigenvalues[0],
            "minus_eps_minus": eigenvalues[1],
            "plus_eps_minus": eigenvalues[2],
            "minus_eps_plus": eigenvalues[3],
            "plus_eps_plus": eigenvalues[4],
        },
    });
    let text = serde_json::to_string_pretty(&body)?;
    match &args.out {
        Some(path) => {
            write_text(path, &text)?;
            write_metadata(path, "spectrum", json!({
                "B": args.b, "omega_C": args.omega_c, "omega_T": args.omega_t,
            }), &[], json!({}))?;
        }
        None => writeln!(out_log, "{text}")?,
    }
    Ok(())
}

pub fn cmd_noise_phase(
    common: &CommonOpts,
    args: &NoisePhaseArgs,
    out_log: &mut impl std::io::Write,
) -> Result<(), CliError> {
    let species = common.species_data()?;
    let sys = args.mechanism.system(&species, args.r);
    let report = optimize_best(&sys, args.bins, args.t_units * RABI_PERIOD, args.seed, 5, false);
    let model = comparison_noise_model();
    let sampler = common.profile.sampler();
    let correlation = if args.independent {
        AtomNoiseCorrelation::Independent
    } else {
        AtomNoiseCorrelation::Shared
    };
    let trace_count = match correlation {
        AtomNoiseCorrelation::Shared => args.samples,
        AtomNoiseCorrelation::Independent => 2 * args.samples,
    };
    let traces = sample_phase_traces(&model, &sampler, trace_count, args.seed);
    let policy = WindowPolicy { seed: args.seed, correlation };
    let stats = phase_noise_infidelity(&sys, &report.grid, &traces, sampler.delta_t_s(), &policy)?;
    let mut csv = String::from("sample,epsilon\r\n");
    for (i, s) in stats.samples.iter().enumerate() {
        let _ = write!(csv, "{i},{}\r\n", fmt_f(*s));
    }
    let _ = write!(csv, "mean,{}\r\n", fmt_f(stats.mean));
    let _ = write!(csv, "std,{}\r\n", fmt_f(stats.std_dev));
    write_text(&args.out, &csv)?;
    write_metadata(
        &args.out,
        "noise phase",
        json!({
            "mechanism": format!("{:?}", args.mechanism), "R_um": args.r,
            "T_units": args.t_units, "bins": args.bins, "samples": args.samples,
            "profile": format!("{:?}", common.profile),
            "independent_per_atom": args.independent,
            "noiseless_epsilon": report.epsilon,
        }),
        &[args.seed],
        json!({ "mean": stats.mean, "std": stats.std_dev }),
    )?;
    writeln!(out_log, "mean epsilon = {:.6e} +- {:.3e} ({} samples) -> {}",
        stats.mean, stats.std_dev, stats.count, args.out.display())?;
    Ok(())
}

pub fn cmd_noise_intensity(
    common: &CommonOpts,
    args: &NoiseIntensityArgs,
    out_log: &mut impl std::io::Write,
) -> Result<(), CliError> {
    let species = common.species_data()?;
    let sys = args.mechanism.system(&species, args.r);
    let report = optimize_best(&sys, args.bins, args.t_units * RABI_PERIOD, args.seed, 5, false);
    let spec = IntensityNoiseSpec::symmetric(args.span, args.points);
    let curve = intensity_noise_curve(&sys, &report.grid, &spec)?;
    let mut csv = String::from("delta_omega_over_omega,epsilon\r\n");
    for (d, e) in &curve {
        let _ = write!(csv, "{},{}\r\n", fmt_f(*d), fmt_f(*e));
    }
    write_text(&args.out, &csv)?;
    write_metadata(
        &args.out,
        "noise intensity",
        json!({
            "mechanism": format!("{:?}", args.mechanism), "R_um": args.r,
            "T_units": args.t_units, "bins": args.bins,
            "span": args.span, "points": args.points,
            "noiseless_epsilon": report.epsilon,
        }),
        &[args.seed],
        json!({}),
    )?;
    writeln!(out_log, "{} points -> {}", curve.len(), args.out.display())?;
    Ok(())
}

pub fn cmd_noise_decay(
    common: &CommonOpts,
    args: &NoiseDecayArgs,
    out_log: &mut impl std::io::Write,
) -> Result<(), CliError> {
    let mut csv = String::from("n,eps_nonadiabatic,eps_adiabatic,eps_blockade\r\n");
    let t_grid = default_t_grid();
    for &n in &args.n {
        let species = match &common.species {
            Some(path) => load_species(path)?,
            None => SpeciesData::bundled_cs(n).ok_or(CliError::UnknownSpecies(n))?,
        };
        let rates = DecayRates::from_species(&species);
        let nad_sys = GateSystem::dark_state(&species, args.r);
        let blk_sys = GateSystem::blockade(&species, args.r);
        let (nad, _) = time_optimal_gate(&nad_sys, 100, &t_grid, 1e-6, 4, args.seed)?;
        let (blk, _) = time_optimal_gate(&blk_sys, 100, &t_grid, 1e-6, 4, args.seed)?;
        let sched = make_pi2pipi_slowed(OMEGA_MAX, 0.05, DEFAULT_SLOWDOWN)?;
        let ad_grid = sched.default_grid();
        let eps_nad = decay_infidelity(&nad_sys, &nad.grid, &rates)?;
        let eps_ad = decay_infidelity(&nad_sys, &ad_grid, &rates)?;
        let eps_blk = decay_infidelity(&blk_sys, &blk.grid, &rates)?;
        let _ = write!(csv, "{n},{},{},{}\r\n", fmt_f(eps_nad), fmt_f(eps_ad), fmt_f(eps_blk));
        writeln!(out_log, "n = {n}: NAd {:.3e}  Ad {:.3e}  blockade {:.3e}", eps_nad, eps_ad, eps_blk)?;
    }
    write_text(&args.out, &csv)?;
    write_metadata(
        &args.out,
        "noise decay",
        json!({ "n": args.n, "R_um": args.r }),
        &[args.seed],
        json!({}),
    )?;
    Ok(())
}

pub fn cmd_sweep_rt(
    common: &CommonOpts,
    args: &SweepArgs,
    out_log: &mut impl std::io::Write,
) -> Result<(), CliError> {
    let species = common.species_data()?;
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    let mut failures: Vec<serde_json::Value> = Vec::new();
    let mut total = 0usize;
    for &r_um in &args.r {
        let sys = args.mechanism.system(&species, r_um);
        let mut t_grid = Vec::new();
        let mut t = args.tmax;
        while t >= args.tmin - 1e-12 {
            t_grid.push(t * RABI_PERIOD);
            t -= args.step;
        }
        total += t_grid.len();
        let mut template = OptimizationProblem::new(sys, args.bins, t_grid[0], OMEGA_MAX);
        template.seed = args.seed;
        template.convergence.target_epsilon = 1e-8;
        match scan_time_optimal(&template, &t_grid, 1e-6, args.seeds as usize) {
            Ok(scan) => {
                for p in scan.points {
                    rows.push((r_um, p.t_total, p.epsilon));
                }
            }
            Err(e) => failures.push(json!({ "R_um": r_um, "error": e.to_string() })),
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut csv = String::from("mechanism,R_um,T_us,epsilon,restarts\r\n");
    for (r_um, t, eps) in &rows {
        let _ = write!(csv, "{:?},{},{},{},{}\r\n",
            args.mechanism, fmt_f(*r_um), fmt_f(*t), fmt_f(*eps), args.seeds);
    }
    write_text(&args.out, &csv)?;
    write_metadata(
        &args.out,
        "sweep",
        json!({
            "mechanism": format!("{:?}", args.mechanism), "R_um": args.r,
            "tmin_units": args.tmin, "tmax_units": args.tmax, "step_units": args.step,
            "bins": args.bins, "restarts": args.seeds,
        }),
        &[args.seed],
        json!({ "failed_points": failures }),
    )?;
    writeln!(out_log, "{} rows -> {}", rows.len(), args.out.display())?;
    if !failures.is_empty() {
        return Err(CliError::PartialFailure { failed: failures.len(), total });
    }
    Ok(())
}

pub fn cmd_reproduce(
    common: &CommonOpts,
    args: &ReproduceArgs,
    out_log: &mut impl std::io::Write,
) -> Result<(), CliError> {
    std::fs::create_dir_all(&args.outdir)?;
    match args.figure.as_str() {
        "fig2" => reproduce_fig2(common, args, out_log),
        "fig3" => reproduce_fig3(common, args, out_log),
        "fig4" => reproduce_fig4(common, args, out_log),
        "fig5" => reproduce_fig5(common, args, out_log),
        other => Err(CliError::UnknownFigure(other.to_owned())),
    }
}

/// Infidelity over (R, T) for the non-adiabatic dark-state and blockade
/// gates (desk-scale grids).
fn reproduce_fig2(
    common: &CommonOpts,
    args: &ReproduceArgs,
    out_log: &mut impl std::io::Write,
) -> Result<(), CliError> {
    let species = common.species_data()?;
    let out = args.outdir.join("fig2_rt_sweep.csv");
    let mut csv = String::from("mechanism,R_um,T_us,epsilon,restarts\r\n");
    let families: [(&str, fn(&SpeciesData, f64) -> GateSystem); 2] =
        [("darkstate", GateSystem::dark_state), ("blockade", GateSystem::blockade)];
    for (name, make) in families {
        for r_um in [2.0, 3.0, 4.0, 4.6, 5.0, 6.0, 8.0, 10.0] {
            let sys = make(&species, r_um);
            let t_grid: Vec<f64> =
                (0..11).map(|k| (1.60 - 0.05 * k as f64) * RABI_PERIOD).collect();
            let mut template = OptimizationProblem::new(sys, 100, t_grid[0], OMEGA_MAX);
            template.seed = args.seed;
            template.convergence.target_epsilon = 1e-8;
            let scan = scan_time_optimal(&template, &t_grid, 1e-6, 3)?;
            for p in &scan.points {
                let _ = write!(csv, "{name},{},{},{},3\r\n",
                    fmt_f(r_um), fmt_f(p.t_total), fmt_f(p.epsilon));
            }
            writeln!(out_log, "fig2 {name} R = {r_um}: t_min = {:?}",
                scan.t_min.map(|t| t / RABI_PERIOD))?;
        }
    }
    write_text(&out, &csv)?;
    write_metadata(&out, "reproduce fig2", json!({"seed": args.seed}), &[args.seed], json!({}))?;
    Ok(())
}

/// Decay errors of the three gates against the principal quantum number.
fn reproduce_fig3(
    common: &CommonOpts,
    args: &ReproduceArgs,
    out_log: &mut impl std::io::Write,
) -> Result<(), CliError> {
    let decay_args = NoiseDecayArgs {
        n: vec![40, 50, 60, 70],
        r: 4.2,
        seed: args.seed,
        out: args.outdir.join("fig3_decay_vs_n.csv"),
    };
    cmd_noise_decay(common, &decay_args, out_log)?;
    // P_rr(t) traces of the three gates at n = 70 (inset)
    let species = common.species_data()?;
    let t_grid = default_t_grid();
    let nad_sys = GateSystem::dark_state(&species, 4.2);
    let blk_sys = GateSystem::blockade(&species, 4.2);
    let (nad, _) = time_optimal_gate(&nad_sys, 100, &t_grid, 1e-6, 4, args.seed)?;
    let (blk, _) = time_optimal_gate(&blk_sys, 100, &t_grid, 1e-6, 4, args.seed)?;
    let ad_grid = make_pi2pipi_slowed(OMEGA_MAX, 0.05, DEFAULT_SLOWDOWN)?.default_grid();
    let mut csv = String::from("gate,t_us,p_rr\r\n");
    for (name, sys, grid) in [
        ("nonadiabatic", &nad_sys, &nad.grid),
        ("blockade", &blk_sys, &blk.grid),
        ("adiabatic", &nad_sys, &ad_grid),
    ] {
        let trace = rr_population_trace(sys, grid, 0)?;
        for (t, p) in trace.times.iter().zip(&trace.p_rr) {
            let _ = write!(csv, "{name},{},{}\r\n", fmt_f(*t), fmt_f(*p));
        }
    }
    let out = args.outdir.join("fig3_prr_traces.csv");
    write_text(&out, &csv)?;
    write_metadata(&out, "reproduce fig3", json!({"seed": args.seed}), &[args.seed], json!({}))?;
    Ok(())
}

/// Phase-noise statistics against distance for the three gates.
fn reproduce_fig4(
    common: &CommonOpts,
    args: &ReproduceArgs,
    out_log: &mut impl std::io::Write,
) -> Result<(), CliError> {
    let species = common.species_data()?;
    let model = comparison_noise_model();
    let sampler = common.profile.sampler();
    let traces = sample_phase_traces(&model, &sampler, 200, args.seed.wrapping_add(7));
    let policy = WindowPolicy { seed: args.seed.wrapping_add(11), correlation: AtomNoiseCorrelation::Shared };
    let ad_grid = make_pi2pipi_slowed(OMEGA_MAX, 0.05, DEFAULT_SLOWDOWN)?.default_grid();
    let t_grid = default_t_grid();
    let mut csv = String::from("gate,R_um,mean_epsilon,std_epsilon,noiseless_epsilon\r\n");
    for r_um in [2.0, 3.0, 4.0, 5.0, 6.0, 8.0] {
        let nad_sys = GateSystem::dark_state(&species, r_um);
        let blk_sys = GateSystem::blockade(&species, r_um);
        let (nad, _) = time_optimal_gate(&nad_sys, 100, &t_grid, 1e-6, 4, args.seed)?;
        let (blk, _) = time_optimal_gate(&blk_sys, 100, &t_grid, 1e-6, 4, args.seed)?;
        for (name, sys, grid, eps0) in [
            ("nonadiabatic", &nad_sys, &nad.grid, nad.epsilon),
            ("blockade", &blk_sys, &blk.grid, blk.epsilon),
            ("adiabatic", &nad_sys, &ad_grid, f64::NAN),
        ] {
            let stats = phase_noise_infidelity(sys, grid, &traces, sampler.delta_t_s(), &policy)?;
            let _ = write!(csv, "{name},{},{},{},{}\r\n",
                fmt_f(r_um), fmt_f(stats.mean), fmt_f(stats.std_dev),
                if eps0.is_nan() { String::from("") } else { fmt_f(eps0) });
            writeln!(out_log, "fig4 {name} R = {r_um}: {:.3e} +- {:.3e}", stats.mean, stats.std_dev)?;
        }
    }
    let out = args.outdir.join("fig4_phase_noise_vs_r.csv");
    write_text(&out, &csv)?;
    write_metadata(&out, "reproduce fig4",
        json!({"seed": args.seed, "profile": format!("{:?}", common.profile)}),
        &[args.seed], json!({}))?;
    Ok(())
}

/// Intensity-noise curves of the three gates at the long-distance
/// comparison point.
fn reproduce_fig5(
    common: &CommonOpts,
    args: &ReproduceArgs,
    out_log: &mut impl std::io::Write,
) -> Result<(), CliError> {
    let species = common.species_data()?;
    let r_um = 6.3;
    let nad_sys = GateSystem::dark_state(&species, r_um);
    let blk_sys = GateSystem::blockade(&species, r_um);
    let t_grid = default_t_grid();
    let (nad, _) = time_optimal_gate(&nad_sys, 100, &t_grid, 1e-6, 4, args.seed)?;
    let (blk, _) = time_optimal_gate(&blk_sys, 100, &t_grid, 1e-6, 4, args.seed)?;
    let ad_grid = make_pi2pipi_slowed(OMEGA_MAX, 0.05, DEFAULT_SLOWDOWN)?.default_grid();
    let spec = IntensityNoiseSpec::symmetric(0.03, 61);
    let mut csv = String::from("gate,delta_omega_over_omega,epsilon\r\n");
    for (name, sys, grid) in [
        ("nonadiabatic", &nad_sys, &nad.grid),
        ("blockade", &blk_sys, &blk.grid),
        ("adiabatic", &nad_sys, &ad_grid),
    ] {
        for (d, e) in intensity_noise_curve(sys, grid, &spec)? {
            let _ = write!(csv, "{name},{},{}\r\n", fmt_f(d), fmt_f(e));
        }
        writeln!(out_log, "fig5 {name}: curve done")?;
    }
    let out = args.outdir.join("fig5_intensity_curves.csv");
    write_text(&out, &csv)?;
    write_metadata(&out, "reproduce fig5",
        json!({"seed": args.seed, "R_um": r_um}), &[args.seed], json!({}))?;
    Ok(())
}

/// Dispatch a parsed command line.
pub fn run(cli: &Cli, out_log: &mut impl std::io::Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Pulse { which: PulseCommand::Pi2pipi(args) } => cmd_pulse_pi2pipi(args, out_log),
        Command::Optimize(args) => cmd_optimize(&cli.common, args, out_log),
        Command::Scan(args) => cmd_scan(&cli.common, args, out_log),
        Command::Spectrum(args) => cmd_spectrum(args, out_log),
        Command::Noise { which } => match which {
            NoiseCommand::Phase(args) => cmd_noise_phase(&cli.common, args, out_log),
            NoiseCommand::Intensity(args) => cmd_noise_intensity(&cli.common, args, out_log),
            NoiseCommand::Decay(args) => cmd_noise_decay(&cli.common, args, out_log),
        },
        Command::Sweep(args) => cmd_sweep_rt(&cli.common, args, out_log),
        Command::Reproduce(args) => cmd_reproduce(&cli.common, args, out_log),
    }
}
