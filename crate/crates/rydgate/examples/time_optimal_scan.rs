//! Locate the time-optimal CZ gate on the ideal blockade by a descending
//! duration scan. The minimum implementation time converges to
//! `T ~ 1.2113 x 2pi/Omega_max`.
//!
//! Run with: `cargo run --release --example time_optimal_scan`

use rydgate::grape::{scan_time_optimal, OptimizationProblem};
use rydgate::hamiltonians::GateSystem;
use rydgate::units::{OMEGA_MAX, RABI_PERIOD};

fn main() {
    let mut template =
        OptimizationProblem::new(GateSystem::ideal_blockade(), 100, RABI_PERIOD, OMEGA_MAX);
    template.seed = 1;
    template.convergence.target_epsilon = 1e-8;

    // descending grid through the expected optimum
    let t_grid: Vec<f64> =
        (0..18).map(|k| (1.2613 - 0.005 * k as f64) * RABI_PERIOD).collect();
    let scan = scan_time_optimal(&template, &t_grid, 1e-6, 5).expect("valid scan setup");

    println!("{:>10}  {:>12}", "T/(2pi/W)", "epsilon");
    for p in &scan.points {
        println!("{:>10.4}  {:>12.3e}", p.t_total / RABI_PERIOD, p.epsilon);
    }
    match scan.t_min {
        Some(t) => println!("\nminimum implementation time: {:.4} Rabi periods", t / RABI_PERIOD),
        None => println!("\nthreshold never met on this grid"),
    }
}
