//! Closed-form eigensystem of the driven Förster block against numerical
//! diagonalization.
//!
//! Run with: `cargo run --release --example exact_spectrum`

use rydgate::hamiltonians::{build_block, GateSystem};
use rydgate::model::SubspaceLabel;
use rydgate::spectrum::exact_eigensystem;
use rydgate::units::OMEGA_MAX;

fn main() {
    let (b, wc, wt, pc, pt) = (3.0 * OMEGA_MAX, 0.8 * OMEGA_MAX, 0.6 * OMEGA_MAX, 0.3, 1.1);
    let spectrum = exact_eigensystem(b, wc, wt, pc, pt).expect("non-degenerate drive");

    println!("curly B = {:.6} rad/us", spectrum.curly_b);
    println!("eps_-   = {:.6} rad/us", spectrum.eps_minus);
    println!("eps_+   = {:.6} rad/us", spectrum.eps_plus);

    let sys = GateSystem::dark_state_with_coupling(b);
    let h = build_block(&sys, SubspaceLabel::Q11, wc, wt, pc, pt).unwrap().matrix;
    println!("\n{:>14} {:>14} {:>12}", "closed form", "residual", "label");
    let labels = ["0", "-eps_-", "+eps_-", "-eps_+", "+eps_+"];
    for ((lambda, vec), label) in
        spectrum.eigenvalues.iter().zip(spectrum.eigenvectors.iter()).zip(labels)
    {
        let residual = (&h * vec - vec.scale(*lambda)).norm();
        println!("{lambda:>14.8} {residual:>14.3e} {label:>12}");
    }
    println!("\ndark-state |rr> amplitude: {:.3e} (exactly zero)", spectrum.eigenvectors[0][3].norm());
}
