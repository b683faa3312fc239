//! Second-order effective Hamiltonians and the accuracy sweep showing the
//! fourth-order remainder of the elimination.
//!
//! Run with: `cargo run --release --example schrieffer_wolff`

use rydgate::hamiltonians::GateSystem;
use rydgate::spectrum::{log_log_slope, schrieffer_wolff, sw_accuracy_probe};
use rydgate::units::OMEGA_MAX;

fn main() {
    // blockade: the elimination of |rr> leaves the familiar -Omega^2/4V
    // light shift on the singly excited states
    let sys = GateSystem::blockade_with_shift(20.0 * OMEGA_MAX);
    let eff = schrieffer_wolff(&sys, OMEGA_MAX, OMEGA_MAX, 0.0, 0.0).expect("invertible");
    let corr = &eff.h_eff - &eff.h_low;
    println!("blockade correction / (Omega^2/4V):");
    let scale = OMEGA_MAX * OMEGA_MAX / (4.0 * sys.v);
    for i in 0..3 {
        let row: Vec<String> =
            (0..3).map(|j| format!("{:+.3}", corr[(i, j)].re / scale)).collect();
        println!("  [{}]", row.join(", "));
    }

    // dark state at resonance: the second order vanishes identically
    let dark = GateSystem::dark_state_with_coupling(20.0 * OMEGA_MAX);
    let eff = schrieffer_wolff(&dark, OMEGA_MAX, OMEGA_MAX, 0.0, 0.0).expect("invertible");
    println!(
        "\ndark-state second-order correction norm: {:.3e}",
        (&eff.h_eff - &eff.h_low).norm()
    );

    // accuracy sweep: squared spectral distance falls as B^-4
    let b_sweep: Vec<f64> =
        (0..25).map(|k| OMEGA_MAX * 10.0 * 50f64.powf(k as f64 / 24.0)).collect();
    let rows = sw_accuracy_probe(OMEGA_MAX, OMEGA_MAX, 0.0, 0.0, &b_sweep);
    println!("\n{:>10} {:>14}", "B/Omega", "distance");
    for p in rows.iter().step_by(4) {
        println!("{:>10.1} {:>14.3e}", p.b / OMEGA_MAX, p.distance);
    }
    println!("log-log slope: {:.3} (expected -4)", log_log_slope(&rows));
}
