//! GRAPE optimization of piecewise-constant pulses, with exact gradients
//! through the spectral bin propagators and a descending-duration scan
//! that locates the time-optimal gate.
//!
//! The cost is the phase-maximized infidelity of [`crate::fidelity`]; its
//! gradient follows from the chain rule through each bin exponential,
//! using the spectral divided-difference (Loewner) formula, so it matches
//! central finite differences to solver precision. Minimization is a
//! limited-memory BFGS with a strong-Wolfe line search; box-constrained
//! amplitude variables are handled by projection.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::fidelity::maximize_over_phases;
use crate::hamiltonians::{assemble_full, GateSystem, Mechanism};
use crate::linalg::{
    hermitian_eigen, propagator_derivative_element, unitary_from_eigen, CMatrix, CVector,
};
use crate::model::{ControlGrid, SubspaceLabel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Error)]
pub enum GrapeError {
    #[error("grid shape ({n} bins, {t} us) does not match the problem ({pn} bins, {pt} us)")]
    GridMismatch { n: usize, t: f64, pn: usize, pt: f64 },
    #[error("duration scan grid must be strictly descending")]
    ScanNotDescending,
    #[error("threshold must lie in (0, 1), got {0}")]
    BadThreshold(f64),
    #[error("need at least one restart per scan point")]
    NoRestarts,
}

/// Which controls the optimizer may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariableSet {
    /// One shared phase per bin (`phi_C[k] = phi_T[k]` free), amplitudes
    /// pinned at `omega_max`. The time-optimal gates live here.
    PhasesOnlyGlobal,
    /// All four control arrays free, amplitudes box-constrained to
    /// `[0, omega_max]`, phases unconstrained.
    Full,
}

/// Stopping rules. `target_epsilon` ends a run early once the cost is
/// clearly converged below any threshold of interest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub target_epsilon: f64,
}

impl Default for Convergence {
    fn default() -> Self {
        Convergence { grad_tol: 1e-12, max_iters: 600, target_epsilon: 1e-9 }
    }
}

/// One optimization instance: system, grid shape, variable set, stopping
/// rules, and the seed for the initial guess.
#[derive(Debug, Clone)]
pub struct OptimizationProblem {
    pub sys: GateSystem,
    pub n_bins: usize,
    pub t_total: f64,
    pub omega_max: f64,
    pub variables: VariableSet,
    pub convergence: Convergence,
    pub seed: u64,
}

impl OptimizationProblem {
    pub fn new(sys: GateSystem, n_bins: usize, t_total: f64, omega_max: f64) -> Self {
        OptimizationProblem {
            sys,
            n_bins,
            t_total,
            omega_max,
            variables: VariableSet::PhasesOnlyGlobal,
            convergence: Convergence::default(),
            seed: 1,
        }
    }

    fn dim(&self) -> usize {
        match self.variables {
            VariableSet::PhasesOnlyGlobal => self.n_bins,
            VariableSet::Full => 4 * self.n_bins,
        }
    }

    /// Decision vector of a grid. Layout: phases-only is `phi[k]`; full is
    /// `[omega_C | omega_T | phi_C | phi_T]`, each of length `n_bins`.
    pub fn pack(&self, grid: &ControlGrid) -> Vec<f64> {
        match self.variables {
            VariableSet::PhasesOnlyGlobal => grid.phi_c.clone(),
            VariableSet::Full => {
                let mut x = Vec::with_capacity(4 * self.n_bins);
                x.extend_from_slice(&grid.omega_c);
                x.extend_from_slice(&grid.omega_t);
                x.extend_from_slice(&grid.phi_c);
                x.extend_from_slice(&grid.phi_t);
                x
            }
        }
    }

    /// Rebuild a grid from a decision vector.
    pub fn unpack(&self, x: &[f64]) -> ControlGrid {
        let n = self.n_bins;
        match self.variables {
            VariableSet::PhasesOnlyGlobal => ControlGrid {
                t_total: self.t_total,
                n,
                omega_c: vec![self.omega_max; n],
                omega_t: vec![self.omega_max; n],
                phi_c: x.to_vec(),
                phi_t: x.to_vec(),
            },
            VariableSet::Full => ControlGrid {
                t_total: self.t_total,
                n,
                omega_c: x[..n].to_vec(),
                omega_t: x[n..2 * n].to_vec(),
                phi_c: x[2 * n..3 * n].to_vec(),
                phi_t: x[3 * n..].to_vec(),
            },
        }
    }

    fn bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self.variables {
            VariableSet::PhasesOnlyGlobal => None,
            VariableSet::Full => {
                let n = self.n_bins;
                let mut lo = vec![0.0; 4 * n];
                let mut hi = vec![self.omega_max; 4 * n];
                for i in 2 * n..4 * n {
                    lo[i] = f64::NEG_INFINITY;
                    hi[i] = f64::INFINITY;
                }
                Some((lo, hi))
            }
        }
    }

    /// Seeded initial guess: smooth random phases from a three-harmonic
    /// Fourier series with amplitudes up to pi/2, avoiding the stationary
    /// constant-phase start. Full mode starts the amplitudes flat at
    /// `0.7 omega_max` so pushing them to the box edge is the optimizer's
    /// doing, not the guess's.
    pub fn initial_guess(&self) -> ControlGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.n_bins;
        let smooth_phases = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let coeffs: Vec<(f64, f64)> = (1..=3)
                .map(|h| {
                    let scale = std::f64::consts::FRAC_PI_2 / h as f64;
                    (rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
                })
                .collect();
            (0..n)
                .map(|k| {
                    let tau = (k as f64 + 0.5) / n as f64;
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(i, (a, b))| {
                            let w = std::f64::consts::TAU * (i + 1) as f64 * tau;
                            a * w.cos() + b * w.sin()
                        })
                        .sum()
                })
                .collect()
        };
        match self.variables {
            VariableSet::PhasesOnlyGlobal => {
                let phi = smooth_phases(&mut rng);
                ControlGrid {
                    t_total: self.t_total,
                    n,
                    omega_c: vec![self.omega_max; n],
                    omega_t: vec![self.omega_max; n],
                    phi_c: phi.clone(),
                    phi_t: phi,
                }
            }
            VariableSet::Full => {
                let phi_c = smooth_phases(&mut rng);
                let phi_t = smooth_phases(&mut rng);
                ControlGrid {
                    t_total: self.t_total,
                    n,
                    omega_c: vec![0.7 * self.omega_max; n],
                    omega_t: vec![0.7 * self.omega_max; n],
                    phi_c,
                    phi_t,
                }
            }
        }
    }
}

/// Outcome of one optimization run.
#[derive(Debug, Clone)]
pub struct OptimizationReport {
    pub epsilon: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub wall_time_s: f64,
    pub converged: bool,
    pub grid: ControlGrid,
}

// ---------------------------------------------------------------------------
// Cost and exact gradient
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
enum ControlParam {
    OmegaC,
    OmegaT,
    PhiC,
    PhiT,
    /// Shared global phase: `d/dphi` with `phi_C = phi_T`.
    PhiGlobal,
}

/// Positions of the control-drive and target-drive couplings
/// (lower-triangle row/col pairs) in each block.
fn drive_slots(mechanism: Mechanism, label: SubspaceLabel) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    match label {
        SubspaceLabel::Q00 => (vec![], vec![]),
        SubspaceLabel::Q01 => (vec![], vec![(1, 0)]),
        SubspaceLabel::Q10 => (vec![(1, 0)], vec![]),
        SubspaceLabel::Q11 => match mechanism {
            Mechanism::IdealBlockade => (vec![(2, 0)], vec![(1, 0)]),
            _ => (vec![(2, 0), (3, 1)], vec![(1, 0), (3, 2)]),
        },
    }
}

fn block_derivative(
    mechanism: Mechanism,
    label: SubspaceLabel,
    dim: usize,
    param: ControlParam,
    omega_c: f64,
    omega_t: f64,
    phi_c: f64,
    phi_t: f64,
) -> CMatrix {
    let (c_slots, t_slots) = drive_slots(mechanism, label);
    let mut m = CMatrix::zeros(dim, dim);
    let mut fill = |slots: &[(usize, usize)], value: Complex64| {
        for &(r, c) in slots {
            m[(r, c)] += value;
            m[(c, r)] += value.conj();
        }
    };
    let i = Complex64::i();
    let dzc_domega = 0.5 * (-i * phi_c).exp();
    let dzt_domega = 0.5 * (-i * phi_t).exp();
    let dzc_dphi = -i * 0.5 * omega_c * (-i * phi_c).exp();
    let dzt_dphi = -i * 0.5 * omega_t * (-i * phi_t).exp();
    match param {
        ControlParam::OmegaC => fill(&c_slots, dzc_domega),
        ControlParam::OmegaT => fill(&t_slots, dzt_domega),
        ControlParam::PhiC => fill(&c_slots, dzc_dphi),
        ControlParam::PhiT => fill(&t_slots, dzt_dphi),
        ControlParam::PhiGlobal => {
            fill(&c_slots, dzc_dphi);
            fill(&t_slots, dzt_dphi);
        }
    }
    m
}

struct SubspacePass {
    label: SubspaceLabel,
    /// Per-bin eigendecompositions of the block Hamiltonian.
    eigs: Vec<(nalgebra::DVector<f64>, CMatrix)>,
    /// `F_k = P_{k-1} ... P_0 |0>`, length `n + 1`.
    fwd: Vec<CVector>,
    /// Row vectors `B_k = <0| P_{N-1} ... P_{k+1}`, length `n`.
    bwd: Vec<CVector>,
}

impl SubspacePass {
    fn run(sys: &GateSystem, grid: &ControlGrid, slot: usize) -> SubspacePass {
        let n = grid.n;
        let dt = grid.dt();
        let mut eigs = Vec::with_capacity(n);
        let mut props = Vec::with_capacity(n);
        let mut label = SubspaceLabel::Q11;
        for k in 0..n {
            let blocks = assemble_full(sys, grid, k).expect("bin in range");
            let block = &blocks[slot];
            label = block.label;
            let (vals, vecs) = hermitian_eigen(&block.matrix);
            props.push(unitary_from_eigen(&vals, &vecs, dt));
            eigs.push((vals, vecs));
        }
        let dim = props[0].nrows();
        let mut fwd = Vec::with_capacity(n + 1);
        let mut state = CVector::zeros(dim);
        state[0] = Complex64::new(1.0, 0.0);
        fwd.push(state.clone());
        for p in &props {
            state = p * &state;
            fwd.push(state.clone());
        }
        let mut bwd = vec![CVector::zeros(dim); n];
        let mut bra = CVector::zeros(dim);
        bra[0] = Complex64::new(1.0, 0.0);
        bwd[n - 1] = bra.clone();
        for k in (1..n).rev() {
            // B_{k-1} = B_k P_k (row-vector times matrix)
            let p = &props[k];
            let mut next = CVector::zeros(dim);
            for j in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..dim {
                    acc += bra[i] * p[(i, j)];
                }
                next[j] = acc;
            }
            bwd[k - 1] = next.clone();
            bra = next;
        }
        SubspacePass { label, eigs, fwd, bwd }
    }

    fn final_amplitude(&self) -> Complex64 {
        self.fwd.last().expect("nonempty")[0]
    }
}

/// Infidelity and its exact gradient with respect to the problem's
/// decision vector (see [`OptimizationProblem::pack`] for the layout).
pub fn cost_and_gradient(
    problem: &OptimizationProblem,
    grid: &ControlGrid,
) -> Result<(f64, Vec<f64>), GrapeError> {
    if grid.n != problem.n_bins || grid.t_total != problem.t_total {
        return Err(GrapeError::GridMismatch {
            n: grid.n,
            t: grid.t_total,
            pn: problem.n_bins,
            pt: problem.t_total,
        });
    }
    Ok(cost_and_gradient_impl(problem, grid))
}

fn cost_and_gradient_impl(problem: &OptimizationProblem, grid: &ControlGrid) -> (f64, Vec<f64>) {
    let sys = &problem.sys;
    let n = grid.n;
    let dt = grid.dt();
    let passes: Vec<SubspacePass> =
        (0..3).map(|slot| SubspacePass::run(sys, grid, slot)).collect();

    let u = [
        Complex64::new(1.0, 0.0),
        passes[0].final_amplitude(),
        passes[1].final_amplitude(),
        passes[2].final_amplitude(),
    ];
    let (theta1, theta2, fidelity) = maximize_over_phases(&u);
    let epsilon = 1.0 - fidelity;

    // z = 1 + e^{-i th1} u01 + e^{-i th2} u10 - e^{-i(th1+th2)} u11;
    // d(eps)/dp = sum_q Re(c_q du_q/dp) with c_q = -(1/8) conj(z) phase_q
    // at the maximizing phases (envelope theorem).
    let i = Complex64::i();
    let phase = [
        (-i * theta1).exp(),
        (-i * theta2).exp(),
        -((-i * (theta1 + theta2)).exp()),
    ];
    let z = u[0] + phase[0] * u[1] + phase[1] * u[2] + phase[2] * u[3];
    let coeff: Vec<Complex64> = phase.iter().map(|p| -0.125 * z.conj() * p).collect();

    let mut gradient = vec![0.0; problem.dim()];
    for (slot, pass) in passes.iter().enumerate() {
        let dim = pass.fwd[0].len();
        let c_q = coeff[slot];
        for k in 0..n {
            let (wc, wt, pc, pt) = grid.bin(k);
            let (vals, vecs) = &pass.eigs[k];
            let bra = &pass.bwd[k];
            let ket = &pass.fwd[k];
            let mut add = |param: ControlParam, index: usize| {
                let dh = block_derivative(sys.mechanism, pass.label, dim, param, wc, wt, pc, pt);
                let du = propagator_derivative_element(vals, vecs, dt, &dh, bra, ket);
                gradient[index] += (c_q * du).re;
            };
            match problem.variables {
                VariableSet::PhasesOnlyGlobal => add(ControlParam::PhiGlobal, k),
                VariableSet::Full => {
                    add(ControlParam::OmegaC, k);
                    add(ControlParam::OmegaT, n + k);
                    add(ControlParam::PhiC, 2 * n + k);
                    add(ControlParam::PhiT, 3 * n + k);
                }
            }
        }
    }
    (epsilon, gradient)
}

// ---------------------------------------------------------------------------
// Limited-memory BFGS with strong-Wolfe line search and box projection
// ---------------------------------------------------------------------------

const LBFGS_MEMORY: usize = 12;
const WOLFE_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;

struct Minimizer<'a> {
    eval: &'a dyn Fn(&[f64]) -> (f64, Vec<f64>),
    bounds: Option<(Vec<f64>, Vec<f64>)>,
}

struct MinimizerResult {
    x: Vec<f64>,
    f: f64,
    grad_inf: f64,
    iterations: usize,
    converged: bool,
}

impl<'a> Minimizer<'a> {
    fn clip(&self, x: &mut [f64]) {
        if let Some((lo, hi)) = &self.bounds {
            for ((xi, l), h) in x.iter_mut().zip(lo).zip(hi) {
                *xi = xi.clamp(*l, *h);
            }
        }
    }

    /// Gradient with components pointing out of an active bound zeroed.
    fn projected_gradient(&self, x: &[f64], g: &[f64]) -> Vec<f64> {
        match &self.bounds {
            None => g.to_vec(),
            Some((lo, hi)) => x
                .iter()
                .zip(g)
                .zip(lo.iter().zip(hi))
                .map(|((&xi, &gi), (&l, &h))| {
                    if (xi <= l && gi > 0.0) || (xi >= h && gi < 0.0) {
                        0.0
                    } else {
                        gi
                    }
                })
                .collect(),
        }
    }

    fn run(&self, x0: Vec<f64>, conv: &Convergence) -> MinimizerResult {
        let mut x = x0;
        self.clip(&mut x);
        let (mut f, mut g) = (self.eval)(&x);
        let mut s_hist: Vec<Vec<f64>> = Vec::new();
        let mut y_hist: Vec<Vec<f64>> = Vec::new();
        let mut rho_hist: Vec<f64> = Vec::new();

        let mut iterations = 0;
        let mut converged = false;
        for iter in 0..conv.max_iters {
            iterations = iter;
            let pg = self.projected_gradient(&x, &g);
            let pg_inf = pg.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if pg_inf < conv.grad_tol || f <= conv.target_epsilon {
                converged = true;
                break;
            }

            let mut d = two_loop(&pg, &s_hist, &y_hist, &rho_hist);
            let mut gd = dot(&g, &d);
            if gd >= 0.0 {
                // bad curvature from stale history: steepest descent restart
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
                d = pg.iter().map(|v| -v).collect();
                gd = dot(&g, &d);
                if gd >= 0.0 {
                    converged = pg_inf < 1e-8;
                    break;
                }
            }

            let step = match &self.bounds {
                None => self.wolfe_search(&x, &d, f, gd),
                Some(_) => self.projected_backtracking(&x, &d, f, &g),
            };
            let Some((x_new, f_new, g_new)) = step else {
                converged = pg_inf < 1e-8;
                break;
            };

            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-10 * norm(&s) * norm(&y) {
                if s_hist.len() == LBFGS_MEMORY {
                    s_hist.remove(0);
                    y_hist.remove(0);
                    rho_hist.remove(0);
                }
                rho_hist.push(1.0 / sy);
                s_hist.push(s);
                y_hist.push(y);
            }
            x = x_new;
            f = f_new;
            g = g_new;
        }
        let pg = self.projected_gradient(&x, &g);
        MinimizerResult {
            x,
            f,
            grad_inf: pg.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            iterations,
            converged,
        }
    }

    /// Strong-Wolfe search (bracket + bisection zoom).
    fn wolfe_search(
        &self,
        x: &[f64],
        d: &[f64],
        f0: f64,
        gd0: f64,
    ) -> Option<(Vec<f64>, f64, Vec<f64>)> {
        let phi = |alpha: f64| {
            let xt: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
            let (ft, gt) = (self.eval)(&xt);
            let gdt = dot(&gt, d);
            (xt, ft, gt, gdt)
        };
        let mut best: Option<(Vec<f64>, f64, Vec<f64>)> = None;
        let mut alpha_prev = 0.0;
        let mut f_prev = f0;
        let mut alpha = 1.0;
        let mut bracket = None;
        for i in 0..12 {
            let (xt, ft, gt, gdt) = phi(alpha);
            if ft < f0 {
                let keep = best.as_ref().map_or(true, |(_, fb, _)| ft < *fb);
                if keep {
                    best = Some((xt.clone(), ft, gt.clone()));
                }
            }
            if ft > f0 + WOLFE_C1 * alpha * gd0 || (i > 0 && ft >= f_prev) {
                bracket = Some((alpha_prev, alpha));
                break;
            }
            if gdt.abs() <= -WOLFE_C2 * gd0 {
                return Some((xt, ft, gt));
            }
            if gdt >= 0.0 {
                bracket = Some((alpha, alpha_prev));
                break;
            }
            alpha_prev = alpha;
            f_prev = ft;
            alpha *= 2.0;
        }
        let (mut lo, mut hi) = bracket?;
        let (_, mut f_lo, _, _) = phi(lo);
        for _ in 0..25 {
            let mid = 0.5 * (lo + hi);
            let (xt, ft, gt, gdt) = phi(mid);
            if ft < f0 {
                let keep = best.as_ref().map_or(true, |(_, fb, _)| ft < *fb);
                if keep {
                    best = Some((xt.clone(), ft, gt.clone()));
                }
            }
            if ft > f0 + WOLFE_C1 * mid * gd0 || ft >= f_lo {
                hi = mid;
            } else {
                if gdt.abs() <= -WOLFE_C2 * gd0 {
                    return Some((xt, ft, gt));
                }
                if gdt * (hi - lo) >= 0.0 {
                    hi = lo;
                }
                lo = mid;
                f_lo = ft;
            }
            if (hi - lo).abs() < 1e-14 {
                break;
            }
        }
        let _ = f_lo;
        best
    }

    /// Armijo backtracking along the projected path `clip(x + alpha d)`.
    fn projected_backtracking(
        &self,
        x: &[f64],
        d: &[f64],
        f0: f64,
        g: &[f64],
    ) -> Option<(Vec<f64>, f64, Vec<f64>)> {
        let mut alpha = 1.0;
        for _ in 0..40 {
            let mut xt: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
            self.clip(&mut xt);
            let step: Vec<f64> = xt.iter().zip(x).map(|(a, b)| a - b).collect();
            let gstep = dot(g, &step);
            if norm(&step) == 0.0 {
                return None;
            }
            let (ft, gt) = (self.eval)(&xt);
            if ft <= f0 + WOLFE_C1 * gstep.min(0.0) && ft < f0 {
                return Some((xt, ft, gt));
            }
            alpha *= 0.5;
        }
        None
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn two_loop(g: &[f64], s_hist: &[Vec<f64>], y_hist: &[Vec<f64>], rho: &[f64]) -> Vec<f64> {
    let mut q = g.to_vec();
    let m = s_hist.len();
    let mut alphas = vec![0.0; m];
    for j in (0..m).rev() {
        let a = rho[j] * dot(&s_hist[j], &q);
        alphas[j] = a;
        for (qi, yi) in q.iter_mut().zip(&y_hist[j]) {
            *qi -= a * yi;
        }
    }
    if m > 0 {
        let j = m - 1;
        let gamma = dot(&s_hist[j], &y_hist[j]) / dot(&y_hist[j], &y_hist[j]);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for j in 0..m {
        let beta = rho[j] * dot(&y_hist[j], &q);
        for (qi, si) in q.iter_mut().zip(&s_hist[j]) {
            *qi += (alphas[j] - beta) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

// ---------------------------------------------------------------------------
// Public optimizer entry points
// ---------------------------------------------------------------------------

/// Run one optimization from the problem's seeded initial guess.
pub fn optimize(problem: &OptimizationProblem) -> OptimizationReport {
    run_from(problem, problem.initial_guess())
}

/// Run one optimization warm-started from a given grid (its controls are
/// reused; the duration is taken from the problem).
pub fn optimize_from(
    problem: &OptimizationProblem,
    start: &ControlGrid,
) -> Result<OptimizationReport, GrapeError> {
    if start.n != problem.n_bins {
        return Err(GrapeError::GridMismatch {
            n: start.n,
            t: start.t_total,
            pn: problem.n_bins,
            pt: problem.t_total,
        });
    }
    let mut grid = start.clone();
    grid.t_total = problem.t_total;
    Ok(run_from(problem, grid))
}

fn run_from(problem: &OptimizationProblem, start: ControlGrid) -> OptimizationReport {
    let t0 = std::time::Instant::now();
    let eval = |x: &[f64]| cost_and_gradient_impl(problem, &problem.unpack(x));
    let minimizer = Minimizer { eval: &eval, bounds: problem.bounds() };
    let result = minimizer.run(problem.pack(&start), &problem.convergence);
    OptimizationReport {
        epsilon: result.f,
        iterations: result.iterations,
        grad_norm: result.grad_inf,
        wall_time_s: t0.elapsed().as_secs_f64(),
        converged: result.converged,
        grid: problem.unpack(&result.x),
    }
}

// ---------------------------------------------------------------------------
// Time-optimal scan
// ---------------------------------------------------------------------------

/// One duration of a scan with its best optimized infidelity.
#[derive(Debug, Clone, Copy)]
pub struct ScanPoint {
    pub t_total: f64,
    pub epsilon: f64,
}

/// Result of a descending-duration scan.
#[derive(Debug, Clone)]
pub struct TimeOptimalScan {
    pub points: Vec<ScanPoint>,
    /// Smallest scanned duration whose optimized infidelity stays at or
    /// below the threshold; absent when the threshold is never met.
    pub t_min: Option<f64>,
    pub threshold: f64,
}

/// Descending-duration scan: at each `T` the optimizer restarts from
/// `restarts` fresh seeds plus a warm start from the previous duration's
/// best pulse, and the best infidelity is recorded. `t_min` is the
/// smallest duration still meeting the threshold — past the sharp error
/// increase the remaining grid documents the infeasible side.
pub fn scan_time_optimal(
    template: &OptimizationProblem,
    t_grid: &[f64],
    threshold: f64,
    restarts: usize,
) -> Result<TimeOptimalScan, GrapeError> {
    if t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(GrapeError::ScanNotDescending);
    }
    if !(0.0..1.0).contains(&threshold) || threshold == 0.0 {
        return Err(GrapeError::BadThreshold(threshold));
    }
    if restarts == 0 {
        return Err(GrapeError::NoRestarts);
    }

    let mut points = Vec::with_capacity(t_grid.len());
    let mut warm: Option<ControlGrid> = None;
    for (ti, &t) in t_grid.iter().enumerate() {
        let mut problem = template.clone();
        problem.t_total = t;

        let mut runs: Vec<(usize, Option<ControlGrid>)> =
            (0..restarts).map(|i| (i, None)).collect();
        if let Some(w) = &warm {
            runs.push((restarts, Some(w.clone())));
        }
        let reports: Vec<(usize, OptimizationReport)> = runs
            .into_par_iter()
            .map(|(i, start)| {
                let mut p = problem.clone();
                p.seed = template.seed.wrapping_add((ti * restarts + i) as u64);
                let report = match start {
                    Some(grid) => optimize_from(&p, &grid).expect("warm grid shape matches"),
                    None => optimize(&p),
                };
                (i, report)
            })
            .collect();
        let best = reports
            .into_iter()
            .min_by(|(ia, ra), (ib, rb)| {
                ra.epsilon.total_cmp(&rb.epsilon).then(ia.cmp(ib))
            })
            .expect("at least one run")
            .1;
        points.push(ScanPoint { t_total: t, epsilon: best.epsilon });
        warm = Some(best.grid);
    }

    let t_min = points
        .iter()
        .filter(|p| p.epsilon <= threshold)
        .map(|p| p.t_total)
        .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.min(t))));
    Ok(TimeOptimalScan { points, t_min, threshold })
}

// ---------------------------------------------------------------------------
// Global-pulse structure check
// ---------------------------------------------------------------------------

/// Default amplitude tolerance (fraction of `omega_max`) for
/// [`verify_global_structure`].
pub const GLOBAL_STRUCTURE_OMEGA_TOL: f64 = 0.05;
/// Default phase-mismatch tolerance (rad).
pub const GLOBAL_STRUCTURE_PHASE_TOL: f64 = 0.1;

/// Check whether an unconstrained optimum has the global-pulse structure
/// of the time-optimal gates: both amplitudes pinned at `omega_max` and
/// equal phase profiles up to one constant offset (mod 2pi).
pub fn verify_global_structure(report: &OptimizationReport, omega_max: f64) -> bool {
    verify_global_structure_with(
        report,
        omega_max,
        GLOBAL_STRUCTURE_OMEGA_TOL * omega_max,
        GLOBAL_STRUCTURE_PHASE_TOL,
    )
}

/// [`verify_global_structure`] with explicit tolerances.
pub fn verify_global_structure_with(
    report: &OptimizationReport,
    omega_max: f64,
    tol_omega: f64,
    tol_phase: f64,
) -> bool {
    let grid = &report.grid;
    let amp_at_max = grid.omega_c.iter().all(|w| (w - omega_max).abs() <= tol_omega);
    let amps_equal = grid
        .omega_c
        .iter()
        .zip(&grid.omega_t)
        .all(|(c, t)| (c - t).abs() <= tol_omega);
    // circular mean of the phase difference, then the residual spread
    let (mut sin_acc, mut cos_acc) = (0.0, 0.0);
    for (pc, pt) in grid.phi_c.iter().zip(&grid.phi_t) {
        let d = pc - pt;
        sin_acc += d.sin();
        cos_acc += d.cos();
    }
    let offset = sin_acc.atan2(cos_acc);
    let phases_match = grid.phi_c.iter().zip(&grid.phi_t).all(|(pc, pt)| {
        let mut r = (pc - pt - offset).rem_euclid(std::f64::consts::TAU);
        if r > std::f64::consts::PI {
            r -= std::f64::consts::TAU;
        }
        r.abs() <= tol_phase
    });
    amp_at_max && amps_equal && phases_match
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{OMEGA_MAX, RABI_PERIOD};

    fn ideal_problem(n: usize, t_units: f64) -> OptimizationProblem {
        OptimizationProblem::new(
            GateSystem::ideal_blockade(),
            n,
            t_units * RABI_PERIOD,
            OMEGA_MAX,
        )
    }

    fn finite_difference(problem: &OptimizationProblem, x: &[f64], h: f64) -> Vec<f64> {
        let f = |x: &[f64]| cost_and_gradient_impl(problem, &problem.unpack(x)).0;
        (0..x.len())
            .map(|i| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += h;
                xm[i] -= h;
                (f(&xp) - f(&xm)) / (2.0 * h)
            })
            .collect()
    }

    fn assert_gradient_matches(problem: &OptimizationProblem, x: &[f64]) {
        let (_, g) = cost_and_gradient_impl(problem, &problem.unpack(x));
        let g_fd = finite_difference(problem, x, 1e-6);
        // components below 1% of the max norm are compared at that floor,
        // which keeps the test above central-difference truncation error
        let scale = g_fd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (i, (a, n)) in g.iter().zip(&g_fd).enumerate() {
            let rel = (a - n).abs() / n.abs().max(1e-2 * scale);
            assert!(rel < 1e-5, "component {i}: analytic {a:.3e}, fd {n:.3e}, rel {rel:.3e}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences_phases_only() {
        let mut problem = ideal_problem(8, 1.2);
        problem.seed = 3;
        let x = problem.pack(&problem.initial_guess());
        assert_gradient_matches(&problem, &x);
    }

    #[test]
    fn gradient_matches_finite_differences_dark_state_full() {
        let mut problem = OptimizationProblem::new(
            GateSystem::dark_state_with_coupling(8.0 * OMEGA_MAX),
            6,
            1.2 * RABI_PERIOD,
            OMEGA_MAX,
        );
        problem.variables = VariableSet::Full;
        problem.seed = 5;
        let mut x = problem.pack(&problem.initial_guess());
        // keep amplitudes off the box edge so central differences are valid
        for v in x.iter_mut().take(12) {
            *v = 0.5 * OMEGA_MAX + 0.1 * OMEGA_MAX * (*v / OMEGA_MAX - 0.7);
        }
        assert_gradient_matches(&problem, &x);
    }

    #[test]
    fn gradient_matches_finite_differences_blockade() {
        let problem = OptimizationProblem::new(
            GateSystem::blockade_with_shift(3.0 * OMEGA_MAX),
            7,
            1.1 * RABI_PERIOD,
            OMEGA_MAX,
        );
        let x = problem.pack(&problem.initial_guess());
        assert_gradient_matches(&problem, &x);
    }

    #[test]
    fn global_phase_direction_is_flat() {
        // shifting every phase equally is a gauge direction
        let mut problem = ideal_problem(20, 1.25);
        problem.seed = 11;
        let x = problem.pack(&problem.initial_guess());
        let (_, g) = cost_and_gradient_impl(&problem, &problem.unpack(&x));
        let directional: f64 = g.iter().sum();
        assert!(directional.abs() < 1e-12, "directional derivative {directional:.3e}");
    }

    #[test]
    fn optimize_reaches_high_fidelity_above_t_opt() {
        let mut problem = ideal_problem(60, 1.30);
        problem.seed = 7;
        let report = optimize(&problem);
        assert!(report.epsilon < 1e-8, "epsilon {:.3e}", report.epsilon);
        // reported epsilon equals an independent re-evaluation
        let (eps, _) = cost_and_gradient(&problem, &report.grid).unwrap();
        assert!((eps - report.epsilon).abs() < 1e-14);
    }

    #[test]
    fn below_t_opt_is_infeasible() {
        for seed in [1, 2, 3] {
            let mut problem = ideal_problem(60, 1.00);
            problem.seed = seed;
            problem.convergence.target_epsilon = 1e-12;
            let report = optimize(&problem);
            assert!(report.epsilon > 1e-3, "epsilon {:.3e} at seed {seed}", report.epsilon);
        }
    }

    #[test]
    fn warm_restart_from_optimum_is_a_fixed_point() {
        let mut problem = ideal_problem(50, 1.30);
        problem.seed = 9;
        let first = optimize(&problem);
        assert!(first.epsilon < 1e-8);
        let again = optimize_from(&problem, &first.grid).unwrap();
        assert!(again.iterations <= 2, "iterations {}", again.iterations);
        assert!(again.epsilon <= first.epsilon + 1e-14);
    }

    #[test]
    fn optimized_finite_interactions_match_ideal_limit() {
        // on an optimized pulse (stationary cost) the 1e4 OMEGA_MAX
        // surrogate reproduces the ideal-blockade error to 1e-6
        let mut problem = ideal_problem(50, 1.28);
        problem.seed = 13;
        let report = optimize(&problem);
        assert!(report.epsilon < 1e-8);
        let ideal = crate::propagation::propagate(&problem.sys, &report.grid, None).unwrap();
        for sys in [
            GateSystem::blockade_with_shift(1e4 * OMEGA_MAX),
            GateSystem::dark_state_with_coupling(1e4 * OMEGA_MAX),
        ] {
            let full = crate::propagation::propagate(&sys, &report.grid, None).unwrap();
            let delta = crate::fidelity::compare_to_ideal(&full, &ideal).unwrap();
            assert!(delta.abs() < 1e-6, "delta {delta:.3e}");
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let mut problem = ideal_problem(30, 1.24);
        problem.seed = 21;
        problem.convergence.max_iters = 40;
        let a = optimize(&problem);
        let b = optimize(&problem);
        assert_eq!(a.epsilon, b.epsilon);
        assert_eq!(a.grid, b.grid);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn mini_scan_brackets_the_time_optimal_point() {
        let template = {
            let mut p = ideal_problem(40, 1.0);
            p.seed = 2;
            p.convergence.target_epsilon = 1e-8;
            p
        };
        let t_grid: Vec<f64> =
            [1.30, 1.26, 1.23, 1.20, 1.17].iter().map(|u| u * RABI_PERIOD).collect();
        let scan = scan_time_optimal(&template, &t_grid, 1e-6, 3).unwrap();
        assert_eq!(scan.points.len(), 5);
        let t_min = scan.t_min.expect("threshold met at the feasible end") / RABI_PERIOD;
        assert!(
            (1.20..=1.27).contains(&t_min),
            "t_min {t_min} outside the expected bracket"
        );
        // feasible side stays feasible in the recorded points
        for p in &scan.points {
            if p.t_total / RABI_PERIOD >= t_min + 0.025 {
                assert!(p.epsilon <= 1e-6);
            }
        }
    }

    #[test]
    fn scan_rejects_bad_inputs() {
        let template = ideal_problem(10, 1.0);
        assert!(matches!(
            scan_time_optimal(&template, &[0.1, 0.2], 1e-6, 3),
            Err(GrapeError::ScanNotDescending)
        ));
        assert!(matches!(
            scan_time_optimal(&template, &[0.2, 0.1], 2.0, 3),
            Err(GrapeError::BadThreshold(_))
        ));
        assert!(matches!(
            scan_time_optimal(&template, &[0.2, 0.1], 1e-6, 0),
            Err(GrapeError::NoRestarts)
        ));
    }

    #[test]
    fn full_optimization_recovers_global_pulse_structure() {
        // exactly at the time-optimal duration the feasible set pinches to
        // the global-pulse extremal; above it, slack admits asymmetric
        // solutions and the property is not claimed
        let mut problem = ideal_problem(60, 1.2113);
        problem.variables = VariableSet::Full;
        problem.seed = 17;
        problem.convergence.max_iters = 4000;
        problem.convergence.target_epsilon = 0.0;
        problem.convergence.grad_tol = 1e-13;
        let report = optimize(&problem);
        assert!(report.epsilon < 1e-6, "epsilon {:.3e}", report.epsilon);
        assert!(verify_global_structure(&report, OMEGA_MAX));
    }

    #[test]
    fn asymmetric_grid_fails_structure_check() {
        let problem = ideal_problem(10, 1.3);
        let mut grid = problem.initial_guess();
        for k in 0..grid.n {
            grid.omega_t[k] = 0.4 * OMEGA_MAX;
        }
        let report = OptimizationReport {
            epsilon: 0.5,
            iterations: 0,
            grad_norm: 1.0,
            wall_time_s: 0.0,
            converged: false,
            grid,
        };
        assert!(!verify_global_structure(&report, OMEGA_MAX));
    }
}
