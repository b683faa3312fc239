//! Quasi-static intensity-noise curves for the three gates at a distance
//! beyond the blockade radius, where the dark-state mechanism is the only
//! one still delivering a high-fidelity gate.
//!
//! Run with: `cargo run --release --example intensity_noise`

use rydgate::atomdata::SpeciesData;
use rydgate::grape::{optimize, scan_time_optimal, OptimizationProblem};
use rydgate::hamiltonians::GateSystem;
use rydgate::noise::{intensity_noise_curve, IntensityNoiseSpec};
use rydgate::pulses::{make_pi2pipi_slowed, DEFAULT_SLOWDOWN};
use rydgate::units::{OMEGA_MAX, RABI_PERIOD};

fn main() {
    let cs = SpeciesData::bundled_cs(70).expect("bundled data");
    let r_um = 6.3;
    let nad_sys = GateSystem::dark_state(&cs, r_um);
    let blk_sys = GateSystem::blockade(&cs, r_um);
    println!(
        "R = {r_um} um: B = {:.3} Omega_max, V = {:.3} Omega_max",
        nad_sys.b / OMEGA_MAX,
        blk_sys.v / OMEGA_MAX
    );

    // time-optimal non-adiabatic pulse
    let t_grid: Vec<f64> = (0..26).map(|k| (1.775 - 0.025 * k as f64) * RABI_PERIOD).collect();
    let mut template = OptimizationProblem::new(nad_sys.clone(), 100, t_grid[0], OMEGA_MAX);
    template.convergence.target_epsilon = 1e-8;
    let t = scan_time_optimal(&template, &t_grid, 1e-6, 4).unwrap().t_min.expect("feasible");
    let mut p = OptimizationProblem::new(nad_sys.clone(), 100, t, OMEGA_MAX);
    p.convergence.target_epsilon = 1e-10;
    let nad = optimize(&p);

    // blockade best effort at this distance (well past its radius)
    let mut bp = OptimizationProblem::new(blk_sys.clone(), 100, t_grid[0], OMEGA_MAX);
    bp.convergence.target_epsilon = 1e-10;
    let blk = optimize(&bp);

    let ad_grid = make_pi2pipi_slowed(OMEGA_MAX, 0.05, DEFAULT_SLOWDOWN).unwrap().default_grid();
    let spec = IntensityNoiseSpec::symmetric(0.02, 9);

    println!("\n{:>8} {:>14} {:>14} {:>14}", "delta", "non-adiabatic", "adiabatic", "blockade");
    let cn = intensity_noise_curve(&nad_sys, &nad.grid, &spec).unwrap();
    let ca = intensity_noise_curve(&nad_sys, &ad_grid, &spec).unwrap();
    let cb = intensity_noise_curve(&blk_sys, &blk.grid, &spec).unwrap();
    for i in 0..cn.len() {
        println!(
            "{:>8.3} {:>14.4e} {:>14.4e} {:>14.4e}",
            cn[i].0, cn[i].1, ca[i].1, cb[i].1
        );
    }
}
