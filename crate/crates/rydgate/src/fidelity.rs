//! Trace fidelity against the CZ target, maximized over the free
//! single-qubit phases.
//!
//! `F = |Tr(U_target^dag U) / 4|^2` with
//! `U_target = diag(1, e^{i th1}, e^{i th2}, e^{i(th1+th2+pi)})`. Only the
//! four computational diagonal amplitudes of the block propagators enter;
//! leakage shows up as `|u_q| < 1` and is penalized automatically.

use num_complex::Complex64;
use thiserror::Error;

use crate::hamiltonians::Mechanism;
use crate::model::GateTarget;
use crate::propagation::PropagationResult;

#[derive(Debug, Error)]
pub enum FidelityError {
    #[error("results come from different grids ({0} bins over {1} us vs {2} bins over {3} us)")]
    GridMismatch(usize, f64, usize, f64),
    #[error("reference result must use the ideal-blockade mechanism")]
    NotIdealReference,
}

/// Maximized trace fidelity and the phases achieving it.
#[derive(Debug, Clone)]
pub struct FidelityResult {
    pub fidelity: f64,
    pub epsilon: f64,
    pub theta1_opt: f64,
    pub theta2_opt: f64,
    /// Diagonal amplitudes `(u00 = 1, u01, u10, u11)`.
    pub amplitudes: [Complex64; 4],
}

/// `F` at fixed phases for given diagonal amplitudes.
pub fn fidelity_at(u: &[Complex64; 4], theta1: f64, theta2: f64) -> f64 {
    overlap(u, theta1, theta2).norm_sqr() / 16.0
}

#[inline]
fn overlap(u: &[Complex64; 4], theta1: f64, theta2: f64) -> Complex64 {
    let i = Complex64::i();
    u[0] + (-i * theta1).exp() * u[1] + (-i * theta2).exp() * u[2]
        - (-i * (theta1 + theta2)).exp() * u[3]
}

/// Maximize `|z(th1, th2)|^2` over the free phases: coarse 64x64 grid,
/// then Newton polish from the best few cells. The objective is a low-order
/// trigonometric polynomial, so this is robust; polish runs to a phase step
/// below 1e-11 rad, which pins `F` well past 1e-12.
///
/// Returns `(theta1, theta2, F)`.
pub fn maximize_over_phases(u: &[Complex64; 4]) -> (f64, f64, f64) {
    const GRID: usize = 64;
    let step = std::f64::consts::TAU / GRID as f64;
    let mut cells: Vec<(f64, f64, f64)> = Vec::with_capacity(GRID * GRID);
    for a in 0..GRID {
        for b in 0..GRID {
            let t1 = a as f64 * step;
            let t2 = b as f64 * step;
            cells.push((overlap(u, t1, t2).norm_sqr(), t1, t2));
        }
    }
    cells.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for &(_, t1, t2) in cells.iter().take(4) {
        let (g, p1, p2) = polish(u, t1, t2);
        if g > best.0 {
            best = (g, p1, p2);
        }
    }
    // rounding can push |z|^2/16 a few ulp past 1 for a perfect gate
    (best.1, best.2, (best.0 / 16.0).min(1.0))
}

/// Newton ascent on `G = |z|^2` with analytic gradient and Hessian,
/// falling back to damped steps whenever a trial does not increase `G`.
fn polish(u: &[Complex64; 4], mut t1: f64, mut t2: f64) -> (f64, f64, f64) {
    let i = Complex64::i();
    let mut g_cur = overlap(u, t1, t2).norm_sqr();
    for _ in 0..80 {
        let a = (-i * t1).exp() * u[1];
        let b = (-i * t2).exp() * u[2];
        let c = -((-i * (t1 + t2)).exp()) * u[3];
        let z = u[0] + a + b + c;
        let z1 = -i * (a + c);
        let z2 = -i * (b + c);
        let g1 = 2.0 * (z.conj() * z1).re;
        let g2 = 2.0 * (z.conj() * z2).re;
        let h11 = 2.0 * (z.conj() * -(a + c)).re + 2.0 * z1.norm_sqr();
        let h22 = 2.0 * (z.conj() * -(b + c)).re + 2.0 * z2.norm_sqr();
        let h12 = 2.0 * (z.conj() * -c).re + 2.0 * (z1 * z2.conj()).re;

        let det = h11 * h22 - h12 * h12;
        let (mut d1, mut d2) = if det.abs() > 1e-300 {
            ((-g1 * h22 + g2 * h12) / det, (-g2 * h11 + g1 * h12) / det)
        } else {
            (g1, g2) // singular curvature: plain ascent direction
        };
        // keep it an ascent direction
        if d1 * g1 + d2 * g2 < 0.0 {
            d1 = g1;
            d2 = g2;
        }
        if d1.hypot(d2) < 1e-11 {
            break;
        }
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let g_try = overlap(u, t1 + scale * d1, t2 + scale * d2).norm_sqr();
            if g_try >= g_cur {
                t1 += scale * d1;
                t2 += scale * d2;
                // converged when the accepted step is already negligible
                accepted = (scale * d1).hypot(scale * d2) > 1e-11;
                g_cur = g_try;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (g_cur, t1.rem_euclid(std::f64::consts::TAU), t2.rem_euclid(std::f64::consts::TAU))
}

/// Trace fidelity of a propagation against the CZ target, maximized over
/// the free single-qubit phases.
pub fn trace_fidelity(result: &PropagationResult, _target: &GateTarget) -> FidelityResult {
    let u = result.diagonal_amplitudes();
    let (theta1, theta2, fidelity) = maximize_over_phases(&u);
    FidelityResult {
        fidelity,
        epsilon: 1.0 - fidelity,
        theta1_opt: theta1,
        theta2_opt: theta2,
        amplitudes: u,
    }
}

/// Infidelity excess of a finite-interaction mechanism over the ideal
/// blockade on the same control grid:
/// `d_eps = eps(full) - eps(ideal)`. Diagnostic for the `R -> 0` limit.
pub fn compare_to_ideal(
    full: &PropagationResult,
    ideal: &PropagationResult,
) -> Result<f64, FidelityError> {
    if full.n_bins != ideal.n_bins || full.t_total != ideal.t_total {
        return Err(FidelityError::GridMismatch(
            full.n_bins,
            full.t_total,
            ideal.n_bins,
            ideal.t_total,
        ));
    }
    if ideal.mechanism != Mechanism::IdealBlockade {
        return Err(FidelityError::NotIdealReference);
    }
    let target = GateTarget::Cz;
    Ok(trace_fidelity(full, &target).epsilon - trace_fidelity(ideal, &target).epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::GateSystem;
    use crate::model::{make_uniform_grid, ControlGrid};
    use crate::propagation::propagate;
    use crate::units::OMEGA_MAX;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn amps(u01: Complex64, u10: Complex64, u11: Complex64) -> [Complex64; 4] {
        [Complex64::new(1.0, 0.0), u01, u10, u11]
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Dense 2-D grid search plus refinement, kept independent of the
    /// production maximizer.
    fn oracle_max(u: &[Complex64; 4]) -> f64 {
        let n = 2000;
        let step = std::f64::consts::TAU / n as f64;
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                let g = overlap(u, a as f64 * step, b as f64 * step).norm_sqr();
                if g > best.0 {
                    best = (g, a as f64 * step, b as f64 * step);
                }
            }
        }
        // local refinement by shrinking pattern search
        let (mut g0, mut t1, mut t2) = best;
        let mut h = step;
        while h > 1e-9 {
            let mut moved = false;
            for (d1, d2) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
                let g = overlap(u, t1 + d1, t2 + d2).norm_sqr();
                if g > g0 {
                    g0 = g;
                    t1 += d1;
                    t2 += d2;
                    moved = true;
                }
            }
            if !moved {
                h *= 0.5;
            }
        }
        g0 / 16.0
    }

    #[test]
    fn exact_cz_up_to_pi_phases() {
        let u = amps(c(-1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0));
        let (t1, t2, f) = maximize_over_phases(&u);
        assert_relative_eq!(f, 1.0, epsilon = 1e-12);
        assert_relative_eq!(t1, PI, epsilon = 1e-6);
        assert_relative_eq!(t2, PI, epsilon = 1e-6);
    }

    #[test]
    fn free_phases_absorb_single_qubit_rotations() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            let b = rng.gen_range(0.0..std::f64::consts::TAU);
            let i = Complex64::i();
            let u = amps((i * a).exp(), (i * b).exp(), -((i * (a + b)).exp()));
            let (_, _, f) = maximize_over_phases(&u);
            assert!((f - 1.0).abs() < 1e-12, "F = {f}");
        }
    }

    #[test]
    fn identity_diagonal_reaches_one_half() {
        // max over phases of |1 + a + b - ab|, |a| = |b| = 1, is 2 sqrt(2),
        // attained at a = b = i; hence F = 8/16 = 1/2
        let u = amps(c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0));
        let (_, _, f) = maximize_over_phases(&u);
        assert_relative_eq!(f, 0.5, epsilon = 1e-12);
        assert_relative_eq!(oracle_max(&u), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn maximizer_matches_dense_oracle_on_random_amplitudes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..6 {
            let mut rand_amp = || {
                let r = rng.gen_range(0.0..1.0f64);
                let p = rng.gen_range(0.0..std::f64::consts::TAU);
                r * (Complex64::i() * p).exp()
            };
            let u = amps(rand_amp(), rand_amp(), rand_amp());
            let (_, _, f) = maximize_over_phases(&u);
            let f_oracle = oracle_max(&u);
            assert!(
                (f - f_oracle).abs() < 1e-8,
                "maximizer {f} vs oracle {f_oracle}"
            );
            assert!(f >= f_oracle - 1e-10, "maximizer must not undershoot the oracle");
        }
    }

    #[test]
    fn restart_invariance_of_the_maximum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let u = amps(c(0.3, -0.7), c(-0.5, 0.4), c(0.2, 0.9));
        let (_, _, f_ref) = maximize_over_phases(&u);
        for _ in 0..16 {
            let t1 = rng.gen_range(0.0..std::f64::consts::TAU);
            let t2 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (g, _, _) = polish(&u, t1, t2);
            assert!(g / 16.0 <= f_ref + 1e-10);
        }
        // and the best of the 16 equals the reference
        let best = (0..16)
            .map(|k| {
                let t1 = k as f64 * 0.4;
                let t2 = k as f64 * 0.7;
                polish(&u, t1, t2).0 / 16.0
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((best - f_ref).abs() < 1e-10);
    }

    #[test]
    fn leakage_bound_holds() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let mut rand_amp = || {
                let r = rng.gen_range(0.0..1.0f64);
                let p = rng.gen_range(0.0..std::f64::consts::TAU);
                r * (Complex64::i() * p).exp()
            };
            let u = amps(rand_amp(), rand_amp(), rand_amp());
            let (_, _, f) = maximize_over_phases(&u);
            let bound = (1.0 + u[1].norm() + u[2].norm() + u[3].norm()).powi(2) / 16.0;
            assert!(f <= bound + 1e-12);
            assert!((0.0..=1.0 + 1e-12).contains(&f));
        }
    }

    #[test]
    fn global_phase_offset_leaves_fidelity_unchanged() {
        let sys = GateSystem::dark_state_with_coupling(25.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let n = 40;
        let mut grid = ControlGrid {
            t_total: 0.13,
            n,
            omega_c: (0..n).map(|_| rng.gen_range(0.0..OMEGA_MAX)).collect(),
            omega_t: (0..n).map(|_| rng.gen_range(0.0..OMEGA_MAX)).collect(),
            phi_c: (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            phi_t: (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        };
        let f0 = trace_fidelity(&propagate(&sys, &grid, None).unwrap(), &GateTarget::Cz).fidelity;
        for p in grid.phi_c.iter_mut().chain(grid.phi_t.iter_mut()) {
            *p += 1.2345;
        }
        let f1 = trace_fidelity(&propagate(&sys, &grid, None).unwrap(), &GateTarget::Cz).fidelity;
        assert!((f0 - f1).abs() < 1e-12, "phase-offset drift {}", (f0 - f1).abs());
    }

    #[test]
    fn compare_to_ideal_detects_mismatch_and_self_zero() {
        let ideal = GateSystem::ideal_blockade();
        let grid = make_uniform_grid(0.12, 24, OMEGA_MAX, 0.0).unwrap();
        let res = propagate(&ideal, &grid, None).unwrap();
        assert_eq!(compare_to_ideal(&res, &res).unwrap(), 0.0);

        let other = make_uniform_grid(0.12, 25, OMEGA_MAX, 0.0).unwrap();
        let res2 = propagate(&ideal, &other, None).unwrap();
        assert!(matches!(compare_to_ideal(&res2, &res), Err(FidelityError::GridMismatch(..))));

        let blk = GateSystem::blockade_with_shift(5.0);
        let res3 = propagate(&blk, &grid, None).unwrap();
        assert!(matches!(compare_to_ideal(&res, &res3), Err(FidelityError::NotIdealReference)));
    }

    #[test]
    fn huge_interactions_reduce_to_ideal_blockade() {
        // V = B = 1e6 OMEGA_MAX surrogate for R -> 0. A generic grid has
        // first-order 1/V sensitivity (the optimized gates, whose epsilon
        // is stationary, reach 1e-6 already at 1e4 OMEGA_MAX; see the
        // optimizer tests).
        let grid = {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
            let n = 60;
            ControlGrid {
                t_total: 0.121,
                n,
                omega_c: vec![OMEGA_MAX; n],
                omega_t: vec![OMEGA_MAX; n],
                phi_c: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                phi_t: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            }
        };
        let ideal = propagate(&GateSystem::ideal_blockade(), &grid, None).unwrap();
        for sys in [
            GateSystem::blockade_with_shift(1e6 * OMEGA_MAX),
            GateSystem::dark_state_with_coupling(1e6 * OMEGA_MAX),
        ] {
            let full = propagate(&sys, &grid, None).unwrap();
            let diff = compare_to_ideal(&full, &ideal).unwrap();
            assert!(diff.abs() < 1e-6, "residual {diff:.3e}");
        }
    }
}
