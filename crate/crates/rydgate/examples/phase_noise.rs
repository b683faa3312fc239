//! The laser-noise chain: detuning PSD, cavity filter, synthesized phase
//! traces, an ensemble PSD cross-check, and a small Monte-Carlo gate-error
//! estimate.
//!
//! Run with: `cargo run --release --example phase_noise`

use rydgate::grape::{optimize, OptimizationProblem};
use rydgate::hamiltonians::GateSystem;
use rydgate::noise::{
    phase_noise_infidelity, psd_filtered, psd_input, psd_phase_ssb, sample_phase_traces,
    welch_psd, ANuInterpretation, LaserNoiseModel, PhaseTraceSampler, WindowPolicy,
};
use rydgate::units::{OMEGA_MAX, RABI_PERIOD};

fn main() {
    let mut model = LaserNoiseModel::default();
    model.a_nu_unit = ANuInterpretation::MegahertzTimesHertz;
    println!("f_p = {:.6e} Hz, quantum-noise floor = {:.3} Hz^2/Hz", model.f_p_hz(), model.s_qnl());
    println!("\n{:>12} {:>14} {:>14} {:>14}", "f (Hz)", "S_in", "S_out", "S_ssb (rad^2/Hz)");
    for exp in 3..=8 {
        let f = 10f64.powi(exp);
        println!(
            "{f:>12.0} {:>14.4e} {:>14.4e} {:>14.4e}",
            psd_input(&model, f),
            psd_filtered(&model, f),
            psd_phase_ssb(&model, f)
        );
    }

    let sampler = PhaseTraceSampler::desk();
    let traces = sample_phase_traces(&model, &sampler, 100, 7);
    let (freqs, psd) = welch_psd(&traces, sampler.delta_t_s());
    println!("\nensemble PSD over the target (100 traces):");
    for f_check in [1e4, 1e5, 1e6, 1e7] {
        let k = freqs.iter().position(|f| *f >= f_check).unwrap();
        let ratio = psd[k] / psd_phase_ssb(&model, freqs[k]);
        println!("  f = {:>9.0} Hz: ratio = {ratio:.3}", freqs[k]);
    }

    // Monte-Carlo error of a time-optimal ideal-blockade gate
    let mut problem = OptimizationProblem::new(
        GateSystem::ideal_blockade(),
        100,
        1.2113 * RABI_PERIOD,
        OMEGA_MAX,
    );
    problem.convergence.target_epsilon = 1e-9;
    let report = optimize(&problem);
    let stats = phase_noise_infidelity(
        &problem.sys,
        &report.grid,
        &traces,
        sampler.delta_t_s(),
        &WindowPolicy::default(),
    )
    .unwrap();
    println!(
        "\ntime-optimal gate under phase noise: {:.3e} +- {:.3e} (noiseless {:.3e})",
        stats.mean, stats.std_dev, report.epsilon
    );
}
