//! Rydberg-decay errors of the three gate types at the distance where all
//! of them still reach high coherent fidelity, plus the doubly excited
//! population traces that explain the ordering.
//!
//! Run with: `cargo run --release --example rydberg_decay`

use rydgate::atomdata::SpeciesData;
use rydgate::grape::{optimize, scan_time_optimal, OptimizationProblem};
use rydgate::hamiltonians::GateSystem;
use rydgate::noise::{decay_infidelity, DecayRates};
use rydgate::propagation::rr_population_trace;
use rydgate::pulses::{make_pi2pipi_slowed, DEFAULT_SLOWDOWN};
use rydgate::units::{OMEGA_MAX, RABI_PERIOD};

fn time_optimal(sys: &GateSystem) -> rydgate::grape::OptimizationReport {
    let t_grid: Vec<f64> = (0..26).map(|k| (1.775 - 0.025 * k as f64) * RABI_PERIOD).collect();
    let mut template = OptimizationProblem::new(sys.clone(), 100, t_grid[0], OMEGA_MAX);
    template.convergence.target_epsilon = 1e-8;
    let scan = scan_time_optimal(&template, &t_grid, 1e-6, 4).expect("scan");
    let t = scan.t_min.expect("feasible gate");
    let mut best: Option<rydgate::grape::OptimizationReport> = None;
    for seed in 1..=4 {
        let mut p = OptimizationProblem::new(sys.clone(), 100, t, OMEGA_MAX);
        p.seed = seed;
        p.convergence.target_epsilon = 1e-10;
        let r = optimize(&p);
        if best.as_ref().map_or(true, |b| r.epsilon < b.epsilon) {
            best = Some(r);
        }
    }
    best.unwrap()
}

fn main() {
    let cs = SpeciesData::bundled_cs(70).expect("bundled data");
    let rates = DecayRates::from_species(&cs);
    let r_um = 4.2;

    let blk_sys = GateSystem::blockade(&cs, r_um);
    let nad_sys = GateSystem::dark_state(&cs, r_um);
    let blk = time_optimal(&blk_sys);
    let nad = time_optimal(&nad_sys);
    let ad_grid = make_pi2pipi_slowed(OMEGA_MAX, 0.05, DEFAULT_SLOWDOWN).unwrap().default_grid();

    println!("gates at R = {r_um} um (n = 70 decay rates):");
    let eps_blk = decay_infidelity(&blk_sys, &blk.grid, &rates).unwrap();
    let eps_nad = decay_infidelity(&nad_sys, &nad.grid, &rates).unwrap();
    let eps_ad = decay_infidelity(&nad_sys, &ad_grid, &rates).unwrap();
    println!("  blockade      T = {:.4} us  eps_decay = {:.4e}", blk.grid.t_total, eps_blk);
    println!("  non-adiabatic T = {:.4} us  eps_decay = {:.4e}", nad.grid.t_total, eps_nad);
    println!("  adiabatic     T = {:.4} us  eps_decay = {:.4e}", ad_grid.t_total, eps_ad);

    println!("\npeak P_rr from |11>:");
    for (name, sys, grid) in [
        ("blockade", &blk_sys, &blk.grid),
        ("non-adiabatic", &nad_sys, &nad.grid),
        ("adiabatic", &nad_sys, &ad_grid),
    ] {
        let trace = rr_population_trace(sys, grid, 0).unwrap();
        println!("  {name:<14} max P_rr = {:.4}", trace.max());
    }
}
