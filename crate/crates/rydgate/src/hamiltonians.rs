//! Hamiltonian blocks of the invariant subspaces, per gate mechanism.
//!
//! Basis orders are fixed once and shared by every module:
//!
//! - `Q01`: `{|01>, |0r>}` (target drive only)
//! - `Q10`: `{|10>, |r0>}` (control drive only)
//! - `Q11`, blockade: `{|11>, |1r>, |r1>, |rr>}`
//! - `Q11`, dark state: `{|11>, |1r>, |r1>, |rr>, |(r+r-)>}`
//! - `Q11`, ideal blockade: `{|11>, |1r>, |r1>}`
//!
//! In `|xy>` the first symbol is the control atom, the second the target.
//! The laser drive puts `<r|H|1> = (Omega/2) e^{-i phi}` on the driven
//! atom (the conjugate element `<1|H|r>` carries `e^{+i phi}`); the
//! symmetric Förster state couples as `<(r+r-)|H|rr> = B` with the
//! sqrt(2) of the symmetrization already absorbed in `B`.

use num_complex::Complex64;
use thiserror::Error;

use crate::atomdata::SpeciesData;
use crate::linalg::CMatrix;
use crate::model::{ControlGrid, SubspaceLabel};

#[derive(Debug, Error)]
pub enum BlockError {
    #[error("bin index {index} out of range for a grid of {n} bins")]
    BinOutOfRange { index: usize, n: usize },
    #[error("Rabi amplitudes must be non-negative, got ({0}, {1})")]
    NegativeAmplitude(f64, f64),
}

/// Which physical mechanism provides the entangling interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mechanism {
    /// Van der Waals shift `V(R) = C6/R^6` on `|rr>`.
    Blockade,
    /// Förster coupling `B(R) = C3/R^3` between `|rr>` and `|(r+r-)>`,
    /// with defect `Delta` (zero at the tuned resonance).
    DarkState,
    /// Blockade limit `V -> infinity`: `|rr>` removed from the dynamics.
    IdealBlockade,
}

/// A gate configuration: mechanism plus interaction strengths.
///
/// `v` is the van der Waals shift (rad/us, used by `Blockade`), `b` the
/// Förster coupling (rad/us, used by `DarkState`), `delta` the Förster
/// defect (held at zero for the tuned resonance, kept as a parameter for
/// robustness studies).
#[derive(Debug, Clone, PartialEq)]
pub struct GateSystem {
    pub mechanism: Mechanism,
    pub r_um: Option<f64>,
    pub v: f64,
    pub b: f64,
    pub delta: f64,
    pub species: Option<SpeciesData>,
}

impl GateSystem {
    /// Blockade gate at interatomic distance `r_um`.
    pub fn blockade(species: &SpeciesData, r_um: f64) -> GateSystem {
        GateSystem {
            mechanism: Mechanism::Blockade,
            r_um: Some(r_um),
            v: species.vdw_shift(r_um),
            b: 0.0,
            delta: 0.0,
            species: Some(species.clone()),
        }
    }

    /// Dark-state gate at interatomic distance `r_um` (resonant, Delta = 0).
    pub fn dark_state(species: &SpeciesData, r_um: f64) -> GateSystem {
        GateSystem {
            mechanism: Mechanism::DarkState,
            r_um: Some(r_um),
            v: 0.0,
            b: species.forster_coupling(r_um),
            delta: 0.0,
            species: Some(species.clone()),
        }
    }

    /// Ideal blockade (V -> infinity) reference system.
    pub fn ideal_blockade() -> GateSystem {
        GateSystem {
            mechanism: Mechanism::IdealBlockade,
            r_um: None,
            v: 0.0,
            b: 0.0,
            delta: 0.0,
            species: None,
        }
    }

    /// Blockade system with an explicit shift, bypassing species data.
    pub fn blockade_with_shift(v: f64) -> GateSystem {
        GateSystem {
            mechanism: Mechanism::Blockade,
            r_um: None,
            v,
            b: 0.0,
            delta: 0.0,
            species: None,
        }
    }

    /// Dark-state system with an explicit coupling, bypassing species data.
    pub fn dark_state_with_coupling(b: f64) -> GateSystem {
        GateSystem {
            mechanism: Mechanism::DarkState,
            r_um: None,
            v: 0.0,
            b,
            delta: 0.0,
            species: None,
        }
    }

    /// Dimension of the entangling `Q11` block.
    pub fn q11_dim(&self) -> usize {
        match self.mechanism {
            Mechanism::Blockade => 4,
            Mechanism::DarkState => 5,
            Mechanism::IdealBlockade => 3,
        }
    }

    /// Subspace dimension for any label.
    pub fn dim(&self, label: SubspaceLabel) -> usize {
        match label {
            SubspaceLabel::Q00 => 1,
            SubspaceLabel::Q01 | SubspaceLabel::Q10 => 2,
            SubspaceLabel::Q11 => self.q11_dim(),
        }
    }
}

/// One invariant-subspace Hamiltonian evaluated at fixed control values.
#[derive(Debug, Clone)]
pub struct HamiltonianBlock {
    pub label: SubspaceLabel,
    /// Dense Hermitian matrix in the basis order of the module docs.
    pub matrix: CMatrix,
}

fn drive(omega: f64, phi: f64) -> Complex64 {
    // <r|H|1> element of the driven atom
    0.5 * omega * (-Complex64::i() * phi).exp()
}

/// Build one subspace block at fixed controls.
pub fn build_block(
    sys: &GateSystem,
    label: SubspaceLabel,
    omega_c: f64,
    omega_t: f64,
    phi_c: f64,
    phi_t: f64,
) -> Result<HamiltonianBlock, BlockError> {
    if omega_c < 0.0 || omega_t < 0.0 {
        return Err(BlockError::NegativeAmplitude(omega_c, omega_t));
    }
    let zc = drive(omega_c, phi_c);
    let zt = drive(omega_t, phi_t);
    let matrix = match label {
        SubspaceLabel::Q00 => CMatrix::zeros(1, 1),
        SubspaceLabel::Q01 => two_level(zt),
        SubspaceLabel::Q10 => two_level(zc),
        SubspaceLabel::Q11 => q11_matrix(sys, zc, zt),
    };
    Ok(HamiltonianBlock { label, matrix })
}

fn two_level(z: Complex64) -> CMatrix {
    let mut m = CMatrix::zeros(2, 2);
    m[(1, 0)] = z;
    m[(0, 1)] = z.conj();
    m
}

fn q11_matrix(sys: &GateSystem, zc: Complex64, zt: Complex64) -> CMatrix {
    let d = sys.q11_dim();
    let mut m = CMatrix::zeros(d, d);
    // shared 3x3 core on {|11>, |1r>, |r1>}
    m[(1, 0)] = zt;
    m[(0, 1)] = zt.conj();
    m[(2, 0)] = zc;
    m[(0, 2)] = zc.conj();
    match sys.mechanism {
        Mechanism::IdealBlockade => {}
        Mechanism::Blockade => {
            m[(3, 1)] = zc;
            m[(1, 3)] = zc.conj();
            m[(3, 2)] = zt;
            m[(2, 3)] = zt.conj();
            m[(3, 3)] = Complex64::new(sys.v, 0.0);
        }
        Mechanism::DarkState => {
            m[(3, 1)] = zc;
            m[(1, 3)] = zc.conj();
            m[(3, 2)] = zt;
            m[(2, 3)] = zt.conj();
            m[(3, 3)] = Complex64::new(-sys.delta, 0.0);
            m[(4, 3)] = Complex64::new(sys.b, 0.0);
            m[(3, 4)] = Complex64::new(sys.b, 0.0);
        }
    }
    m
}

/// All non-trivial blocks (`Q01`, `Q10`, `Q11`) at the controls of bin `k`;
/// `Q00` is the scalar identity and omitted.
pub fn assemble_full(
    sys: &GateSystem,
    grid: &ControlGrid,
    k: usize,
) -> Result<[HamiltonianBlock; 3], BlockError> {
    if k >= grid.n {
        return Err(BlockError::BinOutOfRange { index: k, n: grid.n });
    }
    let (wc, wt, pc, pt) = grid.bin(k);
    Ok([
        build_block(sys, SubspaceLabel::Q01, wc, wt, pc, pt)?,
        build_block(sys, SubspaceLabel::Q10, wc, wt, pc, pt)?,
        build_block(sys, SubspaceLabel::Q11, wc, wt, pc, pt)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigen;
    use crate::model::make_uniform_grid;
    use crate::units::OMEGA_MAX;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn hermiticity_defect(m: &CMatrix) -> f64 {
        (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn sorted_eigenvalues(m: &CMatrix) -> Vec<f64> {
        let (vals, _) = hermitian_eigen(m);
        let mut v: Vec<f64> = vals.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn subspace_dimensions() {
        let dark = GateSystem::dark_state_with_coupling(1.0);
        let blk = GateSystem::blockade_with_shift(1.0);
        let ideal = GateSystem::ideal_blockade();
        assert_eq!(dark.dim(SubspaceLabel::Q00), 1);
        assert_eq!(dark.dim(SubspaceLabel::Q01), 2);
        assert_eq!(dark.dim(SubspaceLabel::Q10), 2);
        assert_eq!(dark.dim(SubspaceLabel::Q11), 5);
        assert_eq!(blk.dim(SubspaceLabel::Q11), 4);
        assert_eq!(ideal.dim(SubspaceLabel::Q11), 3);
        // shapes match
        for sys in [&dark, &blk, &ideal] {
            let b = build_block(sys, SubspaceLabel::Q11, 1.0, 2.0, 0.1, 0.2).unwrap();
            assert_eq!(b.matrix.nrows(), sys.q11_dim());
        }
    }

    #[test]
    fn blocks_are_hermitian_on_random_draws() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let sys = match rng.gen_range(0..3) {
                0 => GateSystem::blockade_with_shift(rng.gen_range(0.0..500.0)),
                1 => GateSystem::dark_state_with_coupling(rng.gen_range(0.1..500.0)),
                _ => GateSystem::ideal_blockade(),
            };
            for label in [SubspaceLabel::Q01, SubspaceLabel::Q10, SubspaceLabel::Q11] {
                let b = build_block(
                    &sys,
                    label,
                    rng.gen_range(0.0..OMEGA_MAX),
                    rng.gen_range(0.0..OMEGA_MAX),
                    rng.gen_range(0.0..6.3),
                    rng.gen_range(0.0..6.3),
                )
                .unwrap();
                assert!(hermiticity_defect(&b.matrix) < 1e-14);
            }
        }
    }

    #[test]
    fn dark_state_single_drive_spectrum() {
        // Omega_C = 0: eigenvalues {0, +-Omega/2, +-sqrt(4B^2+Omega^2)/2}
        let b = 3.7;
        let omega = 2.1;
        let sys = GateSystem::dark_state_with_coupling(b);
        let blk = build_block(&sys, SubspaceLabel::Q11, 0.0, omega, 0.0, 0.9).unwrap();
        let eps_plus = 0.5 * (4.0 * b * b + omega * omega).sqrt();
        let expected = {
            let mut v = vec![0.0, omega / 2.0, -omega / 2.0, eps_plus, -eps_plus];
            v.sort_by(f64::total_cmp);
            v
        };
        for (got, want) in sorted_eigenvalues(&blk.matrix).iter().zip(&expected) {
            assert_relative_eq!(got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn dark_state_no_drive_spectrum() {
        let b = 5.0;
        let sys = GateSystem::dark_state_with_coupling(b);
        let blk = build_block(&sys, SubspaceLabel::Q11, 0.0, 0.0, 0.0, 0.0).unwrap();
        let got = sorted_eigenvalues(&blk.matrix);
        let want = [-b, 0.0, 0.0, 0.0, b];
        for (g, w) in got.iter().zip(want.iter()) {
            assert_relative_eq!(g, w, epsilon = 1e-13);
        }
    }

    #[test]
    fn blockade_no_drive_spectrum() {
        let v = 17.0;
        let sys = GateSystem::blockade_with_shift(v);
        let blk = build_block(&sys, SubspaceLabel::Q11, 0.0, 0.0, 0.0, 0.0).unwrap();
        let got = sorted_eigenvalues(&blk.matrix);
        for (g, w) in got.iter().zip([0.0, 0.0, 0.0, v].iter()) {
            assert_relative_eq!(g, w, epsilon = 1e-13);
        }
    }

    #[test]
    fn assemble_zero_drive_is_diagonal() {
        let sys = GateSystem::dark_state_with_coupling(2.0);
        let grid = make_uniform_grid(1.0, 4, 0.0, 0.0).unwrap();
        for blk in assemble_full(&sys, &grid, 2).unwrap() {
            for i in 0..blk.matrix.nrows() {
                for j in 0..blk.matrix.ncols() {
                    if i != j && !(i >= 3 && j >= 3) {
                        assert_eq!(blk.matrix[(i, j)], Complex64::new(0.0, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn global_grid_gives_equal_single_atom_blocks() {
        let sys = GateSystem::blockade_with_shift(10.0);
        let grid = make_uniform_grid(0.5, 3, 0.8 * OMEGA_MAX, 1.2).unwrap();
        let [q01, q10, _] = assemble_full(&sys, &grid, 1).unwrap();
        let diff = (&q01.matrix - &q10.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert_eq!(diff, 0.0);
    }

    #[test]
    fn control_only_bin_has_no_target_coupling() {
        // stage (ii) of the pi-2pi-pi sequence drives only the target;
        // here the converse: a control-only bin leaves |11>-|1r> dark
        let sys = GateSystem::dark_state_with_coupling(4.0);
        let blk = build_block(&sys, SubspaceLabel::Q11, OMEGA_MAX, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(blk.matrix[(1, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(blk.matrix[(3, 2)], Complex64::new(0.0, 0.0));
        assert!(blk.matrix[(2, 0)].norm() > 0.0);
    }

    #[test]
    fn bin_out_of_range() {
        let sys = GateSystem::ideal_blockade();
        let grid = make_uniform_grid(1.0, 4, 0.0, 0.0).unwrap();
        assert!(matches!(
            assemble_full(&sys, &grid, 4),
            Err(BlockError::BinOutOfRange { index: 4, n: 4 })
        ));
    }
}
