//! Build the smooth pi-2pi-pi sequence, check its stage areas against the
//! closed-form durations, and verify the CZ diagonal on the ideal
//! blockade.
//!
//! Run with: `cargo run --release --example pi2pipi_schedule`

use rydgate::fidelity::trace_fidelity;
use rydgate::hamiltonians::GateSystem;
use rydgate::model::GateTarget;
use rydgate::propagation::propagate;
use rydgate::pulses::make_pi2pipi;
use rydgate::units::OMEGA_MAX;

fn main() {
    let sched = make_pi2pipi(OMEGA_MAX, 0.05).expect("feasible smoothness");
    let edges = sched.stage_boundaries();
    println!("stage edges (us): {edges:.6?}");
    println!("total duration: {:.4} us", sched.total_duration());

    let grid = sched.sample_to_grid(3000);
    let dt = grid.dt();
    let areas: Vec<f64> = [(0, 750), (750, 2250), (2250, 3000)]
        .iter()
        .map(|&(a, b)| (a..b).map(|k| (grid.omega_c[k] + grid.omega_t[k]) * dt).sum())
        .collect();
    println!(
        "sampled stage areas / pi: {:.6}, {:.6}, {:.6}",
        areas[0] / std::f64::consts::PI,
        areas[1] / std::f64::consts::PI,
        areas[2] / std::f64::consts::PI
    );

    let res = propagate(&GateSystem::ideal_blockade(), &grid, None).expect("propagation");
    let d = res.diagonal_amplitudes();
    println!("computational diagonal: {:.6}, {:.6}, {:.6}, {:.6}", d[0], d[1], d[2], d[3]);
    let fid = trace_fidelity(&res, &GateTarget::Cz);
    println!(
        "epsilon = {:.3e} at theta1 = {:.4}, theta2 = {:.4} (both ~ pi)",
        fid.epsilon, fid.theta1_opt, fid.theta2_opt
    );
}
