//! Small-matrix helpers shared by propagation, GRAPE, and the spectrum
//! oracles. All gate blocks are at most 5x5, so dense eigendecompositions
//! and Padé exponentials are exact to machine precision and cheap.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigendecomposition of a Hermitian matrix: real eigenvalues ascending,
/// orthonormal eigenvector columns.
pub fn hermitian_eigen(h: &CMatrix) -> (DVector<f64>, CMatrix) {
    let se = h.clone().symmetric_eigen();
    (se.eigenvalues, se.eigenvectors)
}

/// `exp(-i H dt)` from a precomputed Hermitian eigendecomposition.
pub fn unitary_from_eigen(evals: &DVector<f64>, evecs: &CMatrix, dt: f64) -> CMatrix {
    let d = evals.len();
    let mut phased = evecs.clone();
    // columns scaled by e^{-i lambda dt}, then multiplied by V^H
    for (j, mut col) in phased.column_iter_mut().enumerate() {
        let phase = (-Complex64::i() * evals[j] * dt).exp();
        for i in 0..d {
            col[i] *= phase;
        }
    }
    &phased * evecs.adjoint()
}

/// Stable divided difference of `f(x) = exp(-i x dt)`:
/// `(f(a) - f(b)) / (a - b)`, continued to `-i dt f(a)` at `a = b`.
///
/// Evaluated as `-i dt e^{-i (a+b) dt / 2} sinc((a-b) dt / 2)`, which has
/// no cancellation for nearby eigenvalues.
pub fn phase_divided_difference(a: f64, b: f64, dt: f64) -> Complex64 {
    let mid = 0.5 * (a + b) * dt;
    let half = 0.5 * (a - b) * dt;
    let sinc = if half.abs() < 1e-8 {
        1.0 - half * half / 6.0
    } else {
        half.sin() / half
    };
    -Complex64::i() * dt * (-Complex64::i() * mid).exp() * sinc
}

/// Fréchet-style derivative contraction for GRAPE: given the
/// eigendecomposition of the bin Hamiltonian and a Hamiltonian derivative
/// `dH`, returns `<bra| d/dp exp(-i H dt) |ket>`.
pub fn propagator_derivative_element(
    evals: &DVector<f64>,
    evecs: &CMatrix,
    dt: f64,
    dh: &CMatrix,
    bra: &CVector,
    ket: &CVector,
) -> Complex64 {
    let d = evals.len();
    // W = V^H dH V, then contract with the Loewner kernel
    let w = evecs.adjoint() * dh * evecs;
    let a = evecs.adjoint() * ket;
    let mut b = CVector::zeros(d);
    for i in 0..d {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..d {
            acc += bra[r] * evecs[(r, i)];
        }
        b[i] = acc;
    }
    let mut out = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            out += b[i] * w[(i, j)] * phase_divided_difference(evals[i], evals[j], dt) * a[j];
        }
    }
    out
}

/// Dense matrix exponential by Padé-13 approximation with scaling and
/// squaring (for the non-Hermitian decay generators).
pub fn expm(a: &CMatrix) -> CMatrix {
    const THETA_13: f64 = 5.371_920_351_148_152;
    const B: [f64; 14] = [
        64_764_752_532_480_000.0,
        32_382_376_266_240_000.0,
        7_771_770_303_897_600.0,
        1_187_353_796_428_800.0,
        129_060_195_264_000.0,
        10_559_470_521_600.0,
        670_442_572_800.0,
        33_522_128_640.0,
        1_323_241_920.0,
        40_840_800.0,
        960_960.0,
        16_380.0,
        182.0,
        1.0,
    ];
    let d = a.nrows();
    assert_eq!(d, a.ncols(), "expm requires a square matrix");

    let norm1 = one_norm(a);
    let s = if norm1 > THETA_13 {
        (norm1 / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.scale(0.5f64.powi(s));

    let id = CMatrix::identity(d, d);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let u_inner = &a6 * (a6.scale(B[13]) + a4.scale(B[11]) + a2.scale(B[9]))
        + a6.scale(B[7])
        + a4.scale(B[5])
        + a2.scale(B[3])
        + id.scale(B[1]);
    let u = &a * u_inner;
    let v = &a6 * (a6.scale(B[12]) + a4.scale(B[10]) + a2.scale(B[8]))
        + a6.scale(B[6])
        + a4.scale(B[4])
        + a2.scale(B[2])
        + id.scale(B[0]);

    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut r = lhs
        .lu()
        .solve(&rhs)
        .expect("expm: Padé denominator is singular");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn one_norm(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// One Newton step towards the polar (unitary) factor:
/// `U <- U (3I - U^H U) / 2`. For a matrix within rounding distance of a
/// unitary this crushes `||U^H U - I||` to the machine floor without
/// moving `U` by more than its own error. Long products of per-bin
/// unitaries accumulate rounding-induced non-unitarity linearly in the
/// bin count; the propagation loop applies this periodically.
pub fn polar_polish(u: &mut CMatrix) {
    let d = u.nrows();
    let g = CMatrix::identity(d, d) * Complex64::new(3.0, 0.0) - u.adjoint() * &*u;
    *u = (&*u * g).scale(0.5);
}

/// Largest absolute entry of `M^H M - I`; zero for a perfect unitary.
#[allow(dead_code)]
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let d = u.nrows();
    let g = u.adjoint() * u - CMatrix::identity(d, d);
    g.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
