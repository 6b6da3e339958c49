//! Layered hardware-efficient ansatz `V(θ)`.
//!
//! Each layer is a brick of two-qubit blocks: first on pairs `(0,1), (2,3), …`,
//! then on `(1,2), (3,4), …`. For odd `n` the last qubit idles in the second
//! sub-row. Rotations follow the half-angle convention of [`gates`], under which
//! the `±π/2` parameter-shift rule is exact.
//!
//! Shifting any single angle by `2π` multiplies `V` by the global phase `-1`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::qmath::contract::{self, Layout};
use crate::qmath::{apply_unitary_unchecked, gates, Bitstring, DensityMatrix, Gate, PureState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockKind {
    /// `R_y ⊗ R_y`, controlled-Z, `R_y ⊗ R_y`: 4 angles.
    RyCz,
    /// `G ⊗ G`, CNOT, `G ⊗ G` with `G(θ₁,θ₂,θ₃) = R_z(θ₃)R_y(θ₂)R_z(θ₁)`: 12 angles.
    GCnotG,
}

impl BlockKind {
    pub fn angles_per_block(self) -> usize {
        match self {
            BlockKind::RyCz => 4,
            BlockKind::GCnotG => 12,
        }
    }

    /// Gate sequence of one block on `pair`, in application order.
    pub fn gates(self, angles: &[f64], pair: (usize, usize)) -> Vec<Gate> {
        let (a, b) = pair;
        match self {
            BlockKind::RyCz => vec![
                Gate::new(gates::ry(angles[0]), vec![a]),
                Gate::new(gates::ry(angles[1]), vec![b]),
                Gate::new(gates::cz(), vec![a, b]),
                Gate::new(gates::ry(angles[2]), vec![a]),
                Gate::new(gates::ry(angles[3]), vec![b]),
            ],
            BlockKind::GCnotG => {
                let g = |i: usize| gates::g_rotation(angles[i], angles[i + 1], angles[i + 2]);
                vec![
                    Gate::new(g(0), vec![a]),
                    Gate::new(g(3), vec![b]),
                    Gate::new(gates::cnot(), vec![a, b]),
                    Gate::new(g(6), vec![a]),
                    Gate::new(g(9), vec![b]),
                ]
            }
        }
    }

    /// The block as a single 4×4 unitary on its pair (first wire most significant).
    pub fn unitary(self, angles: &[f64]) -> DMatrix<Complex64> {
        let (before, entangler, after) = match self {
            BlockKind::RyCz => (
                contract::kron(&gates::ry(angles[0]), &gates::ry(angles[1])),
                gates::cz(),
                contract::kron(&gates::ry(angles[2]), &gates::ry(angles[3])),
            ),
            BlockKind::GCnotG => {
                let g = |i: usize| gates::g_rotation(angles[i], angles[i + 1], angles[i + 2]);
                (
                    contract::kron(&g(0), &g(3)),
                    gates::cnot(),
                    contract::kron(&g(6), &g(9)),
                )
            }
        };
        after * entangler * before
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockKind::RyCz => "rycz",
            BlockKind::GCnotG => "gcnotg",
        })
    }
}

impl FromStr for BlockKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rycz" | "ry_cz" => Ok(BlockKind::RyCz),
            "gcnotg" | "g_cnot_g" => Ok(BlockKind::GCnotG),
            other => Err(Error::InvalidArgument(format!("unknown block kind {other:?}"))),
        }
    }
}

/// Qubit pairs of one layer, in application order.
pub fn layer_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n.saturating_sub(1))
        .step_by(2)
        .chain((1..n.saturating_sub(1)).step_by(2))
        .map(|q| (q, q + 1))
        .collect()
}

pub fn parameter_count(n: usize, layers: usize, kind: BlockKind) -> usize {
    layers * layer_pairs(n).len() * kind.angles_per_block()
}

/// Position of one block inside the circuit and its slice of `θ`.
#[derive(Clone, Debug)]
pub struct BlockSite {
    pub pair: (usize, usize),
    pub offset: usize,
}

#[derive(Clone, Debug)]
pub struct LayeredAnsatz {
    n: usize,
    layers: usize,
    kind: BlockKind,
    theta: Vec<f64>,
    sites: Vec<BlockSite>,
    layouts: Vec<Layout>,
}

impl LayeredAnsatz {
    pub fn new(n: usize, layers: usize, kind: BlockKind, theta: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("ansatz needs at least two qubits".into()));
        }
        if layers == 0 {
            return Err(Error::InvalidArgument("ansatz needs at least one layer".into()));
        }
        let expected = parameter_count(n, layers, kind);
        if theta.len() != expected {
            return Err(Error::ParameterCount {
                expected,
                actual: theta.len(),
            });
        }
        let per = kind.angles_per_block();
        let pairs = layer_pairs(n);
        let sites: Vec<BlockSite> = (0..layers)
            .flat_map(|_| pairs.iter().copied())
            .enumerate()
            .map(|(i, pair)| BlockSite { pair, offset: i * per })
            .collect();
        let layouts = sites
            .iter()
            .map(|s| Layout::new(n, &[s.pair.0, s.pair.1]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            layers,
            kind,
            theta,
            sites,
            layouts,
        })
    }

    pub fn zeros(n: usize, layers: usize, kind: BlockKind) -> Result<Self> {
        Self::new(n, layers, kind, vec![0.0; parameter_count(n, layers, kind)])
    }

    /// Angles drawn uniformly from `[-π, π)`.
    pub fn random<R: Rng + ?Sized>(n: usize, layers: usize, kind: BlockKind, rng: &mut R) -> Result<Self> {
        let pi = std::f64::consts::PI;
        let theta = (0..parameter_count(n, layers, kind))
            .map(|_| rng.random_range(-pi..pi))
            .collect();
        Self::new(n, layers, kind, theta)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn kind(&self) -> BlockKind {
        self.kind
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn sites(&self) -> &[BlockSite] {
        &self.sites
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != self.theta.len() {
            return Err(Error::ParameterCount {
                expected: self.theta.len(),
                actual: theta.len(),
            });
        }
        Ok(Self { theta, ..self.clone() })
    }

    /// Copy with `theta[index] += delta`.
    pub fn shift_parameter(&self, index: usize, delta: f64) -> Result<Self> {
        if index >= self.theta.len() {
            return Err(Error::ParameterIndex {
                index,
                len: self.theta.len(),
            });
        }
        let mut out = self.clone();
        out.theta[index] += delta;
        Ok(out)
    }

    pub(crate) fn block_angles(&self, block: usize) -> &[f64] {
        let per = self.kind.angles_per_block();
        let off = self.sites[block].offset;
        &self.theta[off..off + per]
    }

    pub(crate) fn block_unitary(&self, block: usize) -> DMatrix<Complex64> {
        self.kind.unitary(self.block_angles(block))
    }

    pub(crate) fn block_layout(&self, block: usize) -> &Layout {
        &self.layouts[block]
    }

    /// Index of the block that owns parameter `index`.
    pub(crate) fn block_of(&self, index: usize) -> usize {
        index / self.kind.angles_per_block()
    }

    /// Full `2^n × 2^n` matrix of `V(θ)`.
    pub fn build_unitary(&self) -> DMatrix<Complex64> {
        let d = 1usize << self.n;
        let mut v = DMatrix::<Complex64>::identity(d, d);
        for b in 0..self.sites.len() {
            contract::apply_left(&mut v, &self.block_unitary(b), &self.layouts[b]);
        }
        v
    }

    /// `V(θ) ρ V†(θ)`, one block at a time.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.n_qubits() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: rho.n_qubits(),
            });
        }
        Ok(self.apply_blocks(rho, 0..self.sites.len()))
    }

    pub(crate) fn apply_blocks(&self, rho: &DensityMatrix, blocks: std::ops::Range<usize>) -> DensityMatrix {
        let mut out = rho.clone();
        for b in blocks {
            out = apply_unitary_unchecked(&out, &self.block_unitary(b), &self.layouts[b]);
        }
        out
    }

    /// Gate-level circuit of `V(θ)` in application order.
    pub fn gates(&self) -> Vec<Gate> {
        (0..self.sites.len())
            .flat_map(|b| self.kind.gates(self.block_angles(b), self.sites[b].pair))
            .collect()
    }

    /// Inferred eigenvector `V†(θ)|z⟩`.
    pub fn prepare_eigenvector(&self, z: Bitstring) -> Result<PureState> {
        z.ensure_len(self.n)?;
        let mut v = PureState::basis(z).amplitudes().clone();
        for b in (0..self.sites.len()).rev() {
            contract::apply_vector(&mut v, &self.block_unitary(b).adjoint(), &self.layouts[b]);
        }
        Ok(PureState::from_vector_unchecked(self.n, v))
    }
}

/// Gate-level preparation of `V†(θ)|z⟩` from `|0…0⟩`: X on every set bit of
/// `z`, then the adjoint of each ansatz gate in reverse order.
pub fn eigenvector_circuit(ansatz: &LayeredAnsatz, z: Bitstring) -> Result<Vec<Gate>> {
    z.ensure_len(ansatz.n)?;
    let mut out: Vec<Gate> = (0..ansatz.n)
        .filter(|&q| z.bit(q) == 1)
        .map(|q| Gate::new(gates::pauli_x(), vec![q]))
        .collect();
    out.extend(ansatz.gates().iter().rev().map(Gate::adjoint));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{apply_unitary, fidelity_pure, gates::unitarity_defect};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dense_embed(n: usize, u: &DMatrix<Complex64>, targets: &[usize]) -> DMatrix<Complex64> {
        let mut m = DMatrix::identity(1 << n, 1 << n);
        contract::apply_left(&mut m, u, &Layout::new(n, targets).unwrap());
        m
    }

    #[test]
    fn brick_pattern() {
        assert_eq!(layer_pairs(2), vec![(0, 1)]);
        assert_eq!(layer_pairs(3), vec![(0, 1), (1, 2)]);
        assert_eq!(layer_pairs(4), vec![(0, 1), (2, 3), (1, 2)]);
        assert_eq!(layer_pairs(5), vec![(0, 1), (2, 3), (1, 2), (3, 4)]);
    }

    #[test]
    fn parameter_count_formula() {
        for n in 2..=8 {
            for layers in 1..=4 {
                let expected = 4 * layers * (n / 2 + (n - 1) / 2);
                assert_eq!(parameter_count(n, layers, BlockKind::RyCz), expected);
                assert_eq!(
                    LayeredAnsatz::zeros(n, layers, BlockKind::RyCz).unwrap().theta().len(),
                    expected
                );
                assert_eq!(parameter_count(n, layers, BlockKind::GCnotG), 3 * expected);
            }
        }
    }

    #[test]
    fn zero_angles_reduce_to_entanglers() {
        let v = LayeredAnsatz::zeros(2, 1, BlockKind::RyCz).unwrap().build_unitary();
        assert!((v - gates::cz()).norm() < 1e-14);
        let v = LayeredAnsatz::zeros(2, 1, BlockKind::GCnotG).unwrap().build_unitary();
        assert!((v - gates::cnot()).norm() < 1e-14);

        let v = LayeredAnsatz::zeros(3, 1, BlockKind::RyCz).unwrap().build_unitary();
        let expected = dense_embed(3, &gates::cz(), &[1, 2]) * dense_embed(3, &gates::cz(), &[0, 1]);
        assert!((v - expected).norm() < 1e-14);
    }

    #[test]
    fn theta_length_checked() {
        assert!(matches!(
            LayeredAnsatz::new(3, 2, BlockKind::RyCz, vec![0.0; 5]),
            Err(Error::ParameterCount {
                expected: 16,
                actual: 5
            })
        ));
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in [BlockKind::RyCz, BlockKind::GCnotG] {
            let a = LayeredAnsatz::random(3, 2, kind, &mut rng).unwrap();
            let v = a.build_unitary();
            let d = DMatrix::<Complex64>::identity(8, 8);
            assert!((v.adjoint() * &v - d).norm() < 1e-10);
            assert!(unitarity_defect(&v) < 1e-12);
        }
    }

    #[test]
    fn block_unitary_matches_gate_sequence() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in [BlockKind::RyCz, BlockKind::GCnotG] {
            let angles: Vec<f64> = (0..kind.angles_per_block())
                .map(|_| rng.random_range(-3.0..3.0))
                .collect();
            let mut m = DMatrix::identity(4, 4);
            for g in kind.gates(&angles, (0, 1)) {
                contract::apply_left(&mut m, &g.matrix, &Layout::new(2, &g.targets).unwrap());
            }
            assert!((m - kind.unitary(&angles)).norm() < 1e-13);
        }
    }

    #[test]
    fn apply_agrees_with_dense_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in [BlockKind::RyCz, BlockKind::GCnotG] {
            let a = LayeredAnsatz::random(3, 2, kind, &mut rng).unwrap();
            let psi = PureState::normalized(
                3,
                (0..8)
                    .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect(),
            )
            .unwrap();
            let rho = DensityMatrix::from_pure(&psi);
            let blockwise = a.apply(&rho).unwrap();
            let dense = apply_unitary(&rho, &a.build_unitary(), &[0, 1, 2]).unwrap();
            assert!((blockwise.matrix() - dense.matrix()).norm() < 1e-10);
        }
    }

    #[test]
    fn diagonal_state_invariant_under_cz_layer() {
        let rho = DensityMatrix::from_real(
            2,
            &DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.4, 0.3, 0.2, 0.1])),
        )
        .unwrap();
        let out = LayeredAnsatz::zeros(2, 1, BlockKind::RyCz)
            .unwrap()
            .apply(&rho)
            .unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-15);
    }

    #[test]
    fn cnot_block_flips_target() {
        let rho = DensityMatrix::basis_state(2, 0b10);
        let out = LayeredAnsatz::zeros(2, 1, BlockKind::GCnotG)
            .unwrap()
            .apply(&rho)
            .unwrap();
        assert!((out.matrix() - DensityMatrix::basis_state(2, 0b11).matrix()).norm() < 1e-15);
    }

    #[test]
    fn eigenvector_preparation_at_zero_angles() {
        let a = LayeredAnsatz::zeros(2, 1, BlockKind::RyCz).unwrap();
        let psi = a.prepare_eigenvector("00".parse().unwrap()).unwrap();
        assert!(psi.overlap(&PureState::basis("00".parse().unwrap())).unwrap() > 1.0 - 1e-15);
        let psi = a.prepare_eigenvector("11".parse().unwrap()).unwrap();
        assert!((psi.amplitudes()[3].re + 1.0).abs() < 1e-15);
        assert!(psi.overlap(&PureState::basis("11".parse().unwrap())).unwrap() > 1.0 - 1e-15);
        assert!(matches!(
            a.prepare_eigenvector("111".parse().unwrap()),
            Err(Error::BitstringLength { .. })
        ));
    }

    #[test]
    fn eigenvector_circuit_matches_direct_preparation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = LayeredAnsatz::random(3, 1, BlockKind::GCnotG, &mut rng).unwrap();
        let z: Bitstring = "101".parse().unwrap();
        let mut rho = DensityMatrix::basis_state(3, 0);
        for g in eigenvector_circuit(&a, z).unwrap() {
            rho = g.apply(&rho).unwrap();
        }
        let f = fidelity_pure(&rho, &a.prepare_eigenvector(z).unwrap()).unwrap();
        assert!(f > 1.0 - 1e-12);
    }

    #[test]
    fn shifts() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = LayeredAnsatz::random(3, 1, BlockKind::RyCz, &mut rng).unwrap();
        assert_eq!(a.shift_parameter(2, 0.0).unwrap().theta(), a.theta());
        let back = a.shift_parameter(2, 0.7).unwrap().shift_parameter(2, -0.7).unwrap();
        assert_eq!(back.theta()[3], a.theta()[3]);
        assert!((back.theta()[2] - a.theta()[2]).abs() < 1e-15);
        assert!(matches!(a.shift_parameter(99, 1.0), Err(Error::ParameterIndex { .. })));

        // A 2π turn of one rotation flips the sign of V.
        let v = a.build_unitary();
        let w = a
            .shift_parameter(1, 2.0 * std::f64::consts::PI)
            .unwrap()
            .build_unitary();
        let overlap = (v.adjoint() * &w).trace();
        assert!((overlap.norm() - 8.0).abs() < 1e-10);
        assert!((overlap.re + 8.0).abs() < 1e-10);
    }
}
