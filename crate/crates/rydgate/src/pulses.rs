//! Smooth pi-2pi-pi pulse sequences for the adiabatic dark-state protocol.
//!
//! The stage envelope rises from exactly zero, flat-tops near the peak,
//! and returns to exactly zero:
//!
//! `Omega(t) = W [ b(x) - a(x) (e^{-t^2/2s^2} + e^{-(t-T)^2/2s^2}) ]`
//!
//! with `x = T/s`, `a(x) = 1/(1+e^{-x^2/2}+e^{-x^2/8})` and
//! `b(x) = (1+e^{-x^2/2}) a(x)`, so `b/a = 1 + e^{-x^2/2}` pins the
//! endpoints to zero. For a fixed smoothness ratio `s/T` the duration that
//! yields pulse area `Theta` is closed-form:
//!
//! `T = Theta / (W [ b(x) - sqrt(2 pi) (s/T) a(x) erf(x / sqrt(2)) ])`,
//!
//! which integrates the envelope exactly (`erf` is the standard error
//! function).

use thiserror::Error;

use crate::model::ControlGrid;
use crate::units::OMEGA_MAX;

#[derive(Debug, Error)]
pub enum PulseError {
    #[error("pulse area must be positive, got {0}")]
    NonPositiveArea(f64),
    #[error("peak amplitude must be positive, got {0}")]
    NonPositivePeak(f64),
    #[error("smoothness ratio must lie in (0, 0.5), got {0}")]
    BadSmoothness(f64),
    #[error("no positive duration solves the area equation at sigma/T = {0} (denominator {1})")]
    Infeasible(f64, f64),
    #[error("time {t} outside the pulse support [0, {duration}]")]
    OutOfSupport { t: f64, duration: f64 },
    #[error("slowdown factor must be at least 1, got {0}")]
    BadSlowdown(f64),
}

/// `a(x) = 1 / (1 + e^{-x^2/2} + e^{-x^2/8})`.
pub fn shape_a(x: f64) -> f64 {
    1.0 / (1.0 + (-0.5 * x * x).exp() + (-0.125 * x * x).exp())
}

/// `b(x) = (1 + e^{-x^2/2}) a(x)`; `a(0) = 1/3`, `b(0) = 2/3`.
pub fn shape_b(x: f64) -> f64 {
    (1.0 + (-0.5 * x * x).exp()) * shape_a(x)
}

/// One smooth stage pulse with solved duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothPulseSpec {
    /// Target pulse area (rad).
    pub theta: f64,
    /// Peak amplitude scale `W` (rad/us); the actual maximum is `W b(x)`.
    pub omega_peak: f64,
    /// Smoothness ratio `sigma / T`.
    pub sigma_over_t: f64,
    /// Solved duration (us).
    pub duration: f64,
}

/// Solve the closed-form duration for a given area at fixed smoothness.
pub fn solve_duration(
    theta: f64,
    omega_peak: f64,
    sigma_over_t: f64,
) -> Result<SmoothPulseSpec, PulseError> {
    if theta <= 0.0 {
        return Err(PulseError::NonPositiveArea(theta));
    }
    if omega_peak <= 0.0 {
        return Err(PulseError::NonPositivePeak(omega_peak));
    }
    if !(0.0..0.5).contains(&sigma_over_t) || sigma_over_t == 0.0 {
        return Err(PulseError::BadSmoothness(sigma_over_t));
    }
    let x = 1.0 / sigma_over_t;
    let denom = shape_b(x)
        - (2.0 * std::f64::consts::PI).sqrt()
            * sigma_over_t
            * shape_a(x)
            * libm::erf(x / 2f64.sqrt());
    if denom <= 0.0 {
        return Err(PulseError::Infeasible(sigma_over_t, denom));
    }
    Ok(SmoothPulseSpec { theta, omega_peak, sigma_over_t, duration: theta / (omega_peak * denom) })
}

impl SmoothPulseSpec {
    /// Envelope value at `t` within `[0, duration]`. The two Gaussian edge
    /// terms are evaluated in scaled time so both endpoints are exact
    /// zeros; any residual negative rounding is clamped away.
    pub fn eval(&self, t: f64) -> Result<f64, PulseError> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(PulseError::OutOfSupport { t, duration: self.duration });
        }
        let x = 1.0 / self.sigma_over_t;
        let tau = t / self.duration;
        let q = (-0.5 * x * x).exp();
        let e0 = (-0.5 * (x * tau) * (x * tau)).exp();
        let e1 = {
            let z = x * (1.0 - tau);
            (-0.5 * z * z).exp()
        };
        let value = self.omega_peak * shape_a(x) * ((1.0 + q) - e0 - e1);
        Ok(value.max(0.0))
    }
}

/// Which atom a stage drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrivenAtom {
    Control,
    Target,
}

/// One stage of the sequence: a smooth pulse applied to one atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseStage {
    pub pulse: SmoothPulseSpec,
    pub atom: DrivenAtom,
}

/// The pi-2pi-pi sequence: pi on the control atom, 2pi on the target,
/// pi on the control, contiguous with no gaps and zero drive phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PiTwoPiPiSchedule {
    pub stages: [PulseStage; 3],
}

/// Slowdown that keeps the sequence adiabatic against the dark-state gap:
/// non-adiabatic infidelity below 1e-6 on the Förster system at
/// `B = 10 OMEGA_MAX` (peak amplitude `OMEGA_MAX / slowdown`, areas
/// unchanged).
pub const DEFAULT_SLOWDOWN: f64 = 6.0;

/// Build the sequence at full peak amplitude.
pub fn make_pi2pipi(omega_peak: f64, sigma_over_t: f64) -> Result<PiTwoPiPiSchedule, PulseError> {
    make_pi2pipi_slowed(omega_peak, sigma_over_t, 1.0)
}

/// Build the sequence with all stages slowed by `slowdown >= 1` (peak
/// divided, durations multiplied, areas preserved). The adiabatic
/// dark-state gate uses [`DEFAULT_SLOWDOWN`].
pub fn make_pi2pipi_slowed(
    omega_peak: f64,
    sigma_over_t: f64,
    slowdown: f64,
) -> Result<PiTwoPiPiSchedule, PulseError> {
    if slowdown < 1.0 {
        return Err(PulseError::BadSlowdown(slowdown));
    }
    let peak = omega_peak / slowdown;
    let pi = std::f64::consts::PI;
    let first = solve_duration(pi, peak, sigma_over_t)?;
    let second = solve_duration(2.0 * pi, peak, sigma_over_t)?;
    Ok(PiTwoPiPiSchedule {
        stages: [
            PulseStage { pulse: first, atom: DrivenAtom::Control },
            PulseStage { pulse: second, atom: DrivenAtom::Target },
            PulseStage { pulse: first, atom: DrivenAtom::Control },
        ],
    })
}

impl PiTwoPiPiSchedule {
    /// Total duration `2 T_pi + T_2pi`.
    pub fn total_duration(&self) -> f64 {
        self.stages.iter().map(|s| s.pulse.duration).sum()
    }

    /// Stage edges `[0, T_pi, T_pi + T_2pi, total]`.
    pub fn stage_boundaries(&self) -> [f64; 4] {
        let mut edges = [0.0; 4];
        for (i, stage) in self.stages.iter().enumerate() {
            edges[i + 1] = edges[i] + stage.pulse.duration;
        }
        edges
    }

    /// Amplitudes `(omega_c, omega_t)` at time `t` within the sequence.
    pub fn eval(&self, t: f64) -> Result<(f64, f64), PulseError> {
        let edges = self.stage_boundaries();
        if !(0.0..=edges[3]).contains(&t) {
            return Err(PulseError::OutOfSupport { t, duration: edges[3] });
        }
        // pick the stage whose half-open interval holds t (last stage
        // closed at the right edge)
        let idx = match t {
            t if t < edges[1] => 0,
            t if t < edges[2] => 1,
            _ => 2,
        };
        let stage = &self.stages[idx];
        let w = stage.pulse.eval((t - edges[idx]).min(stage.pulse.duration))?;
        Ok(match stage.atom {
            DrivenAtom::Control => (w, 0.0),
            DrivenAtom::Target => (0.0, w),
        })
    }

    /// Sample onto a uniform control grid by bin-midpoint evaluation.
    /// `n` should be divisible by 4 so the stage edges (at quarters of the
    /// total duration) fall on bin boundaries.
    pub fn sample_to_grid(&self, n: usize) -> ControlGrid {
        let total = self.total_duration();
        let dt = total / n as f64;
        let mut grid = ControlGrid {
            t_total: total,
            n,
            omega_c: vec![0.0; n],
            omega_t: vec![0.0; n],
            phi_c: vec![0.0; n],
            phi_t: vec![0.0; n],
        };
        for k in 0..n {
            let t = (k as f64 + 0.5) * dt;
            let (wc, wt) = self.eval(t).expect("midpoint within support");
            grid.omega_c[k] = wc;
            grid.omega_t[k] = wt;
        }
        grid
    }

    /// Bin count keeping `dt * OMEGA_MAX <= 0.02` rad, rounded up to a
    /// multiple of 4 so stage edges are bin-aligned.
    pub fn default_bins(&self) -> usize {
        let raw = (self.total_duration() * OMEGA_MAX / 0.02).ceil() as usize;
        raw.div_ceil(4) * 4
    }

    /// Convenience: sample with [`Self::default_bins`].
    pub fn default_grid(&self) -> ControlGrid {
        self.sample_to_grid(self.default_bins())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fidelity::trace_fidelity;
    use crate::hamiltonians::GateSystem;
    use crate::model::GateTarget;
    use crate::propagation::propagate;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    /// Adaptive Simpson quadrature, used as the independent area oracle.
    fn integrate<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, m: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
        }
        fn recurse<F: Fn(f64) -> f64>(
            f: &F,
            a: f64,
            b: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, 0.5 * (a + m), m);
            let right = simpson(f, m, 0.5 * (m + b), b);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(f, a, m, left, tol / 2.0, depth - 1)
                    + recurse(f, m, b, right, tol / 2.0, depth - 1)
            }
        }
        let m = 0.5 * (a + b);
        recurse(&f, a, b, simpson(&f, a, m, b), tol, 40)
    }

    #[test]
    fn shape_values_at_zero() {
        assert_relative_eq!(shape_a(0.0), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(shape_b(0.0), 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn area_matches_quadrature_oracle() {
        for theta in [PI, 2.0 * PI] {
            let spec = solve_duration(theta, OMEGA_MAX, 0.05).unwrap();
            let area = integrate(|t| spec.eval(t).unwrap(), 0.0, spec.duration, 1e-12);
            assert!(
                (area - theta).abs() < 1e-6,
                "area {area} vs theta {theta}, err {:.3e}",
                (area - theta).abs()
            );
        }
    }

    #[test]
    fn endpoints_are_exact_zeros() {
        let spec = solve_duration(PI, OMEGA_MAX, 0.05).unwrap();
        assert_eq!(spec.eval(0.0).unwrap(), 0.0);
        assert_eq!(spec.eval(spec.duration).unwrap(), 0.0);
    }

    #[test]
    fn midpoint_reaches_peak() {
        let spec = solve_duration(PI, OMEGA_MAX, 0.05).unwrap();
        let mid = spec.eval(spec.duration / 2.0).unwrap();
        // the Gaussian edges contribute ~e^{-50} at the center
        assert_relative_eq!(mid, OMEGA_MAX, max_relative = 1e-15);
        assert!(mid <= OMEGA_MAX);
    }

    #[test]
    fn envelope_is_time_symmetric_and_bounded() {
        let spec = solve_duration(2.0 * PI, OMEGA_MAX, 0.07).unwrap();
        let x = 1.0 / spec.sigma_over_t;
        let cap = OMEGA_MAX * shape_b(x);
        for k in 0..=200 {
            let t = spec.duration * k as f64 / 200.0;
            let w = spec.eval(t).unwrap();
            let w_mirror = spec.eval(spec.duration - t).unwrap();
            assert!((w - w_mirror).abs() < 1e-13 * OMEGA_MAX);
            assert!((0.0..=cap * (1.0 + 1e-14)).contains(&w));
        }
    }

    #[test]
    fn square_pulse_limit() {
        let spec = solve_duration(PI, OMEGA_MAX, 1e-6).unwrap();
        assert_relative_eq!(spec.duration, PI / OMEGA_MAX, max_relative = 1e-5);
    }

    #[test]
    fn doubling_area_doubles_duration() {
        let one = solve_duration(PI, OMEGA_MAX, 0.05).unwrap();
        let two = solve_duration(2.0 * PI, OMEGA_MAX, 0.05).unwrap();
        assert_relative_eq!(two.duration, 2.0 * one.duration, epsilon = 1e-15);
    }

    #[test]
    fn too_smooth_is_infeasible() {
        assert!(matches!(solve_duration(PI, OMEGA_MAX, 0.45), Err(PulseError::Infeasible(..))));
        assert!(matches!(solve_duration(PI, OMEGA_MAX, 0.5), Err(PulseError::BadSmoothness(_))));
        assert!(matches!(solve_duration(-1.0, OMEGA_MAX, 0.05), Err(PulseError::NonPositiveArea(_))));
    }

    #[test]
    fn eval_rejects_out_of_support() {
        let spec = solve_duration(PI, OMEGA_MAX, 0.05).unwrap();
        assert!(spec.eval(-1e-9).is_err());
        assert!(spec.eval(spec.duration + 1e-9).is_err());
    }

    #[test]
    fn schedule_durations_are_contiguous_quarters() {
        let sched = make_pi2pipi(OMEGA_MAX, 0.05).unwrap();
        let t_pi = sched.stages[0].pulse.duration;
        assert_relative_eq!(sched.stages[1].pulse.duration, 2.0 * t_pi, epsilon = 1e-15);
        assert_relative_eq!(sched.total_duration(), 4.0 * t_pi, epsilon = 1e-12);
        let edges = sched.stage_boundaries();
        assert_relative_eq!(edges[1], t_pi, epsilon = 1e-15);
        assert_relative_eq!(edges[2], 3.0 * t_pi, max_relative = 1e-15);
    }

    #[test]
    fn sampled_stage_areas() {
        let sched = make_pi2pipi(OMEGA_MAX, 0.05).unwrap();
        let grid = sched.sample_to_grid(3000);
        let dt = grid.dt();
        // stage edges at bin 750 and 2250 (3000 divisible by 4)
        let area = |range: std::ops::Range<usize>, omega: &[f64]| -> f64 {
            range.map(|k| omega[k] * dt).sum()
        };
        assert!((area(0..750, &grid.omega_c) - PI).abs() < 1e-4);
        assert!((area(750..2250, &grid.omega_t) - 2.0 * PI).abs() < 1e-4);
        assert!((area(2250..3000, &grid.omega_c) - PI).abs() < 1e-4);
        // one atom driven at a time
        for k in 0..3000 {
            assert!(grid.omega_c[k] == 0.0 || grid.omega_t[k] == 0.0);
        }
    }

    #[test]
    fn ideal_blockade_realizes_cz_with_pi_phases() {
        let sched = make_pi2pipi(OMEGA_MAX, 0.05).unwrap();
        let grid = sched.sample_to_grid(3000);
        let res = propagate(&GateSystem::ideal_blockade(), &grid, None).unwrap();
        let d = res.diagonal_amplitudes();
        for (got, want) in d.iter().zip([1.0, -1.0, -1.0, -1.0]) {
            assert!((got - Complex64::new(want, 0.0)).norm() < 1e-6, "diag {got} vs {want}");
        }
        let fid = trace_fidelity(&res, &GateTarget::Cz);
        assert!(fid.epsilon < 1e-5, "epsilon {}", fid.epsilon);
        assert!((fid.theta1_opt - PI).abs() < 1e-3);
        assert!((fid.theta2_opt - PI).abs() < 1e-3);
    }

    use num_complex::Complex64;

    #[test]
    fn slowdown_preserves_areas_and_scales_duration() {
        let fast = make_pi2pipi(OMEGA_MAX, 0.05).unwrap();
        let slow = make_pi2pipi_slowed(OMEGA_MAX, 0.05, 5.0).unwrap();
        assert_relative_eq!(slow.total_duration(), 5.0 * fast.total_duration(), epsilon = 1e-12);
        let grid = slow.sample_to_grid(4000);
        let dt = grid.dt();
        let total_area: f64 =
            (0..4000).map(|k| (grid.omega_c[k] + grid.omega_t[k]) * dt).sum();
        assert!((total_area - 4.0 * PI).abs() < 1e-4);
        assert!(matches!(
            make_pi2pipi_slowed(OMEGA_MAX, 0.05, 0.5),
            Err(PulseError::BadSlowdown(_))
        ));
    }

    #[test]
    fn adiabatic_gate_on_forster_system_at_default_slowdown() {
        // the calibration behind DEFAULT_SLOWDOWN: at B = 10 OMEGA_MAX the
        // slowed sequence must be adiabatic to below 1e-6 infidelity
        let sys = GateSystem::dark_state_with_coupling(10.0 * OMEGA_MAX);
        let sched = make_pi2pipi_slowed(OMEGA_MAX, 0.05, DEFAULT_SLOWDOWN).unwrap();
        let grid = sched.default_grid();
        let res = propagate(&sys, &grid, None).unwrap();
        let eps = trace_fidelity(&res, &GateTarget::Cz).epsilon;
        assert!(eps < 1e-6, "non-adiabatic error {eps:.3e} at default slowdown");
    }
}
