//! Piecewise-constant time evolution of the invariant-subspace blocks.
//!
//! Each bin's propagator is `exp(-i H_q(k) dt)`, computed spectrally for
//! Hermitian generators (exact to machine precision) and by Padé scaling
//! and squaring when the non-Hermitian decay terms are present. The full
//! gate operator is the ordered product over bins.

use num_complex::Complex64;
use thiserror::Error;

use crate::hamiltonians::{assemble_full, GateSystem, Mechanism};
use crate::linalg::{expm, hermitian_eigen, polar_polish, unitary_from_eigen, CMatrix, CVector};

/// Re-unitarize accumulated products every this many bins (Hermitian path).
const POLISH_INTERVAL: usize = 128;
use crate::model::ControlGrid;
use crate::noise::DecayRates;

#[derive(Debug, Error)]
pub enum PropagationError {
    #[error("invalid control grid: {0}")]
    Grid(#[from] crate::model::ModelError),
    #[error("matrix exponential produced non-finite entries at bin {bin}")]
    Numeric { bin: usize },
    #[error("decay rates must be non-negative")]
    NegativeRates,
    #[error("initial state index {index} outside the Q11 block of dimension {dim}")]
    BadInitialState { index: usize, dim: usize },
}

/// Final per-subspace operators of one propagation. `Q00` is the scalar
/// identity and not stored.
#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub u_q01: CMatrix,
    pub u_q10: CMatrix,
    pub u_q11: CMatrix,
    pub mechanism: Mechanism,
    pub t_total: f64,
    pub n_bins: usize,
}

impl PropagationResult {
    /// Computational-basis diagonal `(u00, u01, u10, u11)` with
    /// `u00 = 1` and `u_q = <q|U_q|q>`.
    pub fn diagonal_amplitudes(&self) -> [Complex64; 4] {
        [
            Complex64::new(1.0, 0.0),
            self.u_q01[(0, 0)],
            self.u_q10[(0, 0)],
            self.u_q11[(0, 0)],
        ]
    }
}

/// `P_rr` sampled at every bin boundary for one initial `Q11` basis state.
#[derive(Debug, Clone)]
pub struct RydbergPopulationTrace {
    pub times: Vec<f64>,
    pub p_rr: Vec<f64>,
}

impl RydbergPopulationTrace {
    /// Largest sampled `P_rr`.
    pub fn max(&self) -> f64 {
        self.p_rr.iter().copied().fold(0.0, f64::max)
    }
}

fn check_finite(m: &CMatrix, bin: usize) -> Result<(), PropagationError> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(PropagationError::Numeric { bin })
    }
}

/// Evolve all subspace blocks over the grid, optionally with the
/// non-Hermitian decay terms `-i Gamma/2` on the Rydberg levels.
pub fn propagate(
    sys: &GateSystem,
    grid: &ControlGrid,
    decay: Option<&DecayRates>,
) -> Result<PropagationResult, PropagationError> {
    grid.validate()?;
    if let Some(rates) = decay {
        if !rates.is_valid() {
            return Err(PropagationError::NegativeRates);
        }
    }
    let dt = grid.dt();
    let dims = [2usize, 2, sys.q11_dim()];
    let mut ops: Vec<CMatrix> = dims.iter().map(|&d| CMatrix::identity(d, d)).collect();

    for k in 0..grid.n {
        let blocks = assemble_full(sys, grid, k).expect("bin index in range");
        for (slot, block) in blocks.iter().enumerate() {
            let step = match decay {
                None => {
                    let (vals, vecs) = hermitian_eigen(&block.matrix);
                    unitary_from_eigen(&vals, &vecs, dt)
                }
                Some(rates) => {
                    let gammas = rates.level_rates(sys.mechanism, block.label);
                    let d = block.matrix.nrows();
                    let mut gen = block.matrix.map(|z| -Complex64::i() * z * dt);
                    for i in 0..d {
                        gen[(i, i)] -= Complex64::new(0.5 * gammas[i] * dt, 0.0);
                    }
                    expm(&gen)
                }
            };
            check_finite(&step, k)?;
            ops[slot] = &step * &ops[slot];
            if decay.is_none() && (k + 1) % POLISH_INTERVAL == 0 {
                polar_polish(&mut ops[slot]);
            }
        }
    }
    if decay.is_none() {
        for op in ops.iter_mut() {
            polar_polish(op);
        }
    }

    let mut it = ops.into_iter();
    Ok(PropagationResult {
        u_q01: it.next().unwrap(),
        u_q10: it.next().unwrap(),
        u_q11: it.next().unwrap(),
        mechanism: sys.mechanism,
        t_total: grid.t_total,
        n_bins: grid.n,
    })
}

/// Propagate one `Q11` basis state and record the doubly excited Rydberg
/// population `P_rr(t) = |<rr|psi(t)>|^2` at every bin boundary.
///
/// The initial state is given as an index into the `Q11` basis (0 is
/// `|11>`). The ideal-blockade block has no `|rr>` level, so its trace is
/// identically zero.
pub fn rr_population_trace(
    sys: &GateSystem,
    grid: &ControlGrid,
    initial: usize,
) -> Result<RydbergPopulationTrace, PropagationError> {
    grid.validate()?;
    let dim = sys.q11_dim();
    if initial >= dim {
        return Err(PropagationError::BadInitialState { index: initial, dim });
    }
    let dt = grid.dt();
    let mut psi = CVector::zeros(dim);
    psi[initial] = Complex64::new(1.0, 0.0);

    let rr_index = match sys.mechanism {
        Mechanism::IdealBlockade => None,
        _ => Some(3usize),
    };
    let sample = |psi: &CVector| rr_index.map(|i| psi[i].norm_sqr()).unwrap_or(0.0);

    let mut times = Vec::with_capacity(grid.n + 1);
    let mut p_rr = Vec::with_capacity(grid.n + 1);
    times.push(0.0);
    p_rr.push(sample(&psi));
    for k in 0..grid.n {
        let blocks = assemble_full(sys, grid, k).expect("bin index in range");
        let h11 = &blocks[2].matrix;
        let (vals, vecs) = hermitian_eigen(h11);
        let step = unitary_from_eigen(&vals, &vecs, dt);
        psi = &step * psi;
        times.push((k + 1) as f64 * dt);
        p_rr.push(sample(&psi));
    }
    Ok(RydbergPopulationTrace { times, p_rr })
}
