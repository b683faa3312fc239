//! Core domain types: control grids, gate targets, subspace labels.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::OMEGA_MAX;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("total duration must be positive, got {0}")]
    NonPositiveDuration(f64),
    #[error("bin count must be at least 1")]
    EmptyGrid,
    #[error("Rabi amplitude {value} outside the box [0, {max}]")]
    AmplitudeOutOfBox { value: f64, max: f64 },
    #[error("control arrays have inconsistent lengths")]
    LengthMismatch,
}

/// Piecewise-constant controls on `n` equal bins of `[0, T)`.
///
/// `omega_c`/`omega_t` are the Rabi amplitudes (rad/us) on the control and
/// target atom, `phi_c`/`phi_t` the drive phases (rad). Controls are
/// constant on each bin `[t_k, t_{k+1})` (zero-order hold); smooth pulses
/// are sampled onto a grid by midpoint evaluation.
///
/// Serializes as the JSON object `{T, N, omega_C, omega_T, phi_C, phi_T}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlGrid {
    #[serde(rename = "T")]
    pub t_total: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "omega_C")]
    pub omega_c: Vec<f64>,
    #[serde(rename = "omega_T")]
    pub omega_t: Vec<f64>,
    #[serde(rename = "phi_C")]
    pub phi_c: Vec<f64>,
    #[serde(rename = "phi_T")]
    pub phi_t: Vec<f64>,
}

impl ControlGrid {
    /// Bin width T/N.
    pub fn dt(&self) -> f64 {
        self.t_total / self.n as f64
    }

    /// Midpoint time of bin `k`.
    pub fn bin_midpoint(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dt()
    }

    /// Check array lengths against `n`.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.t_total <= 0.0 {
            return Err(ModelError::NonPositiveDuration(self.t_total));
        }
        if self.n == 0 {
            return Err(ModelError::EmptyGrid);
        }
        if [&self.omega_c, &self.omega_t, &self.phi_c, &self.phi_t]
            .iter()
            .any(|v| v.len() != self.n)
        {
            return Err(ModelError::LengthMismatch);
        }
        Ok(())
    }

    /// Controls of bin `k` as (omega_c, omega_t, phi_c, phi_t).
    pub fn bin(&self, k: usize) -> (f64, f64, f64, f64) {
        (self.omega_c[k], self.omega_t[k], self.phi_c[k], self.phi_t[k])
    }

    /// New grid with both amplitudes scaled by `factor` (intensity-noise
    /// perturbations; the result may exceed the optimizer box).
    pub fn scaled_amplitudes(&self, factor: f64) -> ControlGrid {
        let mut g = self.clone();
        for w in g.omega_c.iter_mut().chain(g.omega_t.iter_mut()) {
            *w *= factor;
        }
        g
    }
}

/// Uniform grid driving both atoms with the same constant amplitude and
/// phase (a "global" pulse).
pub fn make_uniform_grid(
    t_total: f64,
    n: usize,
    omega: f64,
    phi: f64,
) -> Result<ControlGrid, ModelError> {
    if t_total <= 0.0 {
        return Err(ModelError::NonPositiveDuration(t_total));
    }
    if n == 0 {
        return Err(ModelError::EmptyGrid);
    }
    if !(0.0..=OMEGA_MAX).contains(&omega) {
        return Err(ModelError::AmplitudeOutOfBox { value: omega, max: OMEGA_MAX });
    }
    Ok(ControlGrid {
        t_total,
        n,
        omega_c: vec![omega; n],
        omega_t: vec![omega; n],
        phi_c: vec![phi; n],
        phi_t: vec![phi; n],
    })
}

/// CZ gate target with free single-qubit phases.
///
/// The target diagonal in the basis `{|00>, |01>, |10>, |11>}` is
/// `(1, e^{i th1}, e^{i th2}, e^{i(th1 + th2 + pi)})`; `th1`, `th2` are
/// determined at fidelity-evaluation time, not fixed inputs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum GateTarget {
    #[default]
    Cz,
}

impl GateTarget {
    /// Diagonal of the target unitary at given single-qubit phases.
    pub fn diagonal(&self, theta1: f64, theta2: f64) -> [Complex64; 4] {
        let i = Complex64::i();
        [
            Complex64::new(1.0, 0.0),
            (i * theta1).exp(),
            (i * theta2).exp(),
            -((i * (theta1 + theta2)).exp()),
        ]
    }
}

/// Invariant subspaces of the two-atom dynamics, labelled by the
/// computational state they contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubspaceLabel {
    /// `{|00>}` — trivial, scalar identity.
    Q00,
    /// `{|01>, |0r>}` — target-atom dynamics.
    Q01,
    /// `{|10>, |r0>}` — control-atom dynamics.
    Q10,
    /// The entangling block; its basis depends on the gate mechanism.
    Q11,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn uniform_grid_bin_width() {
        let g = make_uniform_grid(0.12113, 100, OMEGA_MAX, 0.0).unwrap();
        assert_relative_eq!(g.dt(), 1.2113e-3, epsilon = 1e-18);
    }

    #[test]
    fn zero_drive_grid() {
        let g = make_uniform_grid(1.0, 1, 0.0, 0.0).unwrap();
        assert_eq!(g.omega_c, vec![0.0]);
        assert_eq!(g.omega_t, vec![0.0]);
    }

    #[test]
    fn box_violation_rejected() {
        let err = make_uniform_grid(1.0, 2, 1.1 * OMEGA_MAX, 0.0).unwrap_err();
        assert!(matches!(err, ModelError::AmplitudeOutOfBox { .. }));
    }

    #[test]
    fn bad_duration_and_bins_rejected() {
        assert!(make_uniform_grid(0.0, 2, 0.0, 0.0).is_err());
        assert!(make_uniform_grid(-1.0, 2, 0.0, 0.0).is_err());
        assert!(make_uniform_grid(1.0, 0, 0.0, 0.0).is_err());
    }

    #[test]
    fn cz_diagonal_at_pi_pi() {
        let d = GateTarget::Cz.diagonal(std::f64::consts::PI, std::f64::consts::PI);
        assert_relative_eq!(d[0].re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(d[1].re, -1.0, epsilon = 1e-15);
        assert_relative_eq!(d[2].re, -1.0, epsilon = 1e-15);
        assert_relative_eq!(d[3].re, -1.0, epsilon = 1e-14);
    }

    proptest! {
        // Serialization round-trips bit-exactly: JSON holds IEEE-754
        // doubles and serde_json preserves them through shortest-repr.
        #[test]
        fn grid_serde_round_trip(
            t in 1e-3f64..10.0,
            n in 1usize..40,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let grid = ControlGrid {
                t_total: t,
                n,
                omega_c: (0..n).map(|_| rng.gen_range(0.0..OMEGA_MAX)).collect(),
                omega_t: (0..n).map(|_| rng.gen_range(0.0..OMEGA_MAX)).collect(),
                phi_c: (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect(),
                phi_t: (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect(),
            };
            let text = serde_json::to_string(&grid).unwrap();
            let back: ControlGrid = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(grid, back);
        }
    }
}
