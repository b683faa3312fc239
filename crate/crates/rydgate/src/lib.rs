//! Two-qubit CZ gates for Rydberg atoms: pulse synthesis and error budgets.
//!
//! This crate builds and analyzes three families of controlled-Z gates
//! between a pair of Rydberg atoms:
//!
//! - **blockade gates**, where a van der Waals shift `V(R) = C6/R^6` on the
//!   doubly excited state suppresses simultaneous excitation,
//! - **adiabatic dark-state gates**, where a Förster resonance couples
//!   `|rr>` to a pair state and the dynamics follows a zero-energy dark
//!   state through a smooth pi-2pi-pi pulse sequence, and
//! - **non-adiabatic dark-state gates**, obtained by GRAPE optimization of
//!   piecewise-constant pulse amplitudes and phases on the same level
//!   scheme, reaching durations comparable to the time-optimal blockade
//!   gate.
//!
//! The two-atom dynamics decomposes into invariant subspaces labelled by
//! the initial computational state; every propagation here works block by
//! block on those small (at most 5x5) Hamiltonians, so gates are evaluated
//! to machine precision by spectral matrix exponentials.
//!
//! Error channels implemented on top of the coherent dynamics:
//!
//! - Rydberg-state decay via a non-Hermitian Hamiltonian,
//! - laser phase noise sampled from a filtered power-spectral-density
//!   model and Monte-Carlo averaged,
//! - quasi-static laser intensity noise.
//!
//! The `examples/` directory has one runnable program per capability; the
//! `rydgate` binary exposes the same pipelines as subcommands that write
//! CSV/JSON for plotting.
//!
//! Unit convention: angular frequencies in rad/us, times in us, distances
//! in um, and hbar = 1 throughout (see [`units`]).

pub mod atomdata;
pub mod cli;
pub mod fidelity;
pub mod grape;
pub mod hamiltonians;
mod linalg;
pub mod model;
pub mod noise;
pub mod propagation;
pub mod pulses;
pub mod spectrum;
pub mod units;

pub use atomdata::{blockade_radius, load_species, BlockadeRadius, SpeciesData};
pub use fidelity::{compare_to_ideal, trace_fidelity, FidelityResult};
pub use grape::{
    cost_and_gradient, optimize, scan_time_optimal, verify_global_structure, OptimizationProblem,
    OptimizationReport, TimeOptimalScan, VariableSet,
};
pub use hamiltonians::{assemble_full, build_block, GateSystem, HamiltonianBlock, Mechanism};
pub use model::{make_uniform_grid, ControlGrid, GateTarget, SubspaceLabel};
pub use noise::{
    decay_infidelity, intensity_noise_curve, phase_noise_infidelity, sample_phase_traces,
    DecayRates, IntensityNoiseSpec, LaserNoiseModel, NoiseEnsembleStats, PhaseTraceSampler,
};
pub use propagation::{propagate, rr_population_trace, PropagationResult, RydbergPopulationTrace};
pub use pulses::{make_pi2pipi, solve_duration, PiTwoPiPiSchedule, SmoothPulseSpec};
pub use spectrum::{
    exact_eigensystem, schrieffer_wolff, sw_accuracy_probe, EffectiveHamiltonian, ExactSpectrum,
};
