//! Dense complex linear algebra for `n`-qubit density matrices.
//!
//! All operators on a subset of qubits are applied by index arithmetic on the
//! `2^n × 2^n` matrix; the embedded `2^n`-dimensional operator is never built.
//! Qubit 0 is the most significant bit of a basis index (see [`Bitstring`]).

mod bitstring;
mod channel;
mod circuit;
pub(crate) mod contract;
pub mod gates;

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub use bitstring::Bitstring;
pub use channel::{apply_channel, KrausChannel};
pub use circuit::Gate;

use crate::error::{Error, Result};
use contract::Layout;

/// Tolerance for Hermiticity, trace and positivity checks.
pub const STATE_TOL: f64 = 1e-10;
/// Tolerance for unit norm of pure states.
pub const NORM_TOL: f64 = 1e-12;
/// Largest register this crate simulates densely.
pub const MAX_QUBITS: usize = 12;

/// Hermitian, positive semidefinite, unit-trace matrix on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates every state invariant, including positivity via a full
    /// eigendecomposition.
    pub fn new(n: usize, data: DMatrix<Complex64>) -> Result<Self> {
        check_qubits(n)?;
        let d = 1usize << n;
        if data.nrows() != d || data.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: data.nrows().max(data.ncols()),
            });
        }
        let rho = Self { n, data };
        rho.check_invariants()?;
        Ok(rho)
    }

    /// Real symmetric input, e.g. from a real-valued construction.
    pub fn from_real(n: usize, data: &DMatrix<f64>) -> Result<Self> {
        Self::new(n, data.map(|x| Complex64::new(x, 0.0)))
    }

    pub(crate) fn from_matrix_unchecked(n: usize, data: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(data.nrows(), 1 << n);
        Self { n, data }
    }

    pub fn basis_state(n: usize, index: usize) -> Self {
        let d = 1usize << n;
        let mut data = DMatrix::zeros(d, d);
        data[(index, index)] = Complex64::new(1.0, 0.0);
        Self { n, data }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let d = 1usize << n;
        Self {
            n,
            data: DMatrix::identity(d, d) * Complex64::new(1.0 / d as f64, 0.0),
        }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let v = &psi.amplitudes;
        Self {
            n: psi.n,
            data: v * v.adjoint(),
        }
    }

    /// Convex mixture `Σ w_i |ψ_i⟩⟨ψ_i|`; weights must be non-negative and sum to one.
    pub fn mixture(states: &[(f64, PureState)]) -> Result<Self> {
        let n = states
            .first()
            .map(|(_, s)| s.n)
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let d = 1usize << n;
        let mut data = DMatrix::zeros(d, d);
        for (w, psi) in states {
            if psi.n != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: psi.n,
                });
            }
            data += (&psi.amplitudes * psi.amplitudes.adjoint()) * Complex64::new(*w, 0.0);
        }
        Self::new(n, data)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    /// Real parts of the diagonal: standard-basis outcome probabilities.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.data[(i, i)].re).collect()
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    /// Largest entry of `|ρ - ρ†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.data - self.data.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Checks Hermiticity, unit trace and positivity within [`STATE_TOL`].
    pub fn check_invariants(&self) -> Result<()> {
        let herm = self.hermiticity_defect();
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm:.3e})")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = hermitian_eigenvalues(&self.data)?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }
}

/// Unit-norm state vector on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n: usize,
    amplitudes: DVector<Complex64>,
}

impl PureState {
    pub fn new(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        let psi = Self::unnormalized(n, amplitudes)?;
        let norm = psi.amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(psi)
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        let mut psi = Self::unnormalized(n, amplitudes)?;
        let norm = psi.amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        psi.amplitudes /= Complex64::new(norm, 0.0);
        Ok(psi)
    }

    fn unnormalized(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_qubits(n)?;
        if amplitudes.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                actual: amplitudes.len(),
            });
        }
        Ok(Self {
            n,
            amplitudes: DVector::from_vec(amplitudes),
        })
    }

    pub(crate) fn from_vector_unchecked(n: usize, amplitudes: DVector<Complex64>) -> Self {
        Self { n, amplitudes }
    }

    pub fn basis(z: Bitstring) -> Self {
        let mut amplitudes = DVector::zeros(1 << z.n_qubits());
        amplitudes[z.index()] = Complex64::new(1.0, 0.0);
        Self {
            n: z.n_qubits(),
            amplitudes,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap(&self, other: &PureState) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: other.n,
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes).norm_sqr())
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidArgument(format!(
            "qubit count {n} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// `U ρ U†` with `u` embedded on `targets`.
pub fn apply_unitary(rho: &DensityMatrix, u: &DMatrix<Complex64>, targets: &[usize]) -> Result<DensityMatrix> {
    let layout = Layout::new(rho.n, targets)?;
    if u.nrows() != layout.local_dim() || u.ncols() != layout.local_dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.local_dim(),
            actual: u.nrows(),
        });
    }
    let defect = gates::unitarity_defect(u);
    if defect > STATE_TOL {
        return Err(Error::NotUnitary(defect));
    }
    Ok(apply_unitary_unchecked(rho, u, &layout))
}

pub(crate) fn apply_unitary_unchecked(rho: &DensityMatrix, u: &DMatrix<Complex64>, layout: &Layout) -> DensityMatrix {
    DensityMatrix::from_matrix_unchecked(rho.n, contract::conjugate_hermitian(&rho.data, u, layout))
}

/// Applies `u` on `targets` to a state vector.
pub fn apply_to_state(psi: &PureState, u: &DMatrix<Complex64>, targets: &[usize]) -> Result<PureState> {
    let layout = Layout::new(psi.n, targets)?;
    if u.nrows() != layout.local_dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.local_dim(),
            actual: u.nrows(),
        });
    }
    let mut v = psi.amplitudes.clone();
    contract::apply_vector(&mut v, u, &layout);
    Ok(PureState::from_vector_unchecked(psi.n, v))
}

/// Reduced state on `keep` (output qubits in ascending original order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n;
    contract::check_targets(n, keep).map_err(|e| match e {
        Error::InvalidSubset(_) => Error::InvalidSubset("keep set is empty".into()),
        other => other,
    })?;
    if keep.len() == n {
        return Err(Error::InvalidSubset("keep set covers every qubit".into()));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();

    let spread = |local: usize, qubits: &[usize]| -> usize {
        let k = qubits.len();
        qubits
            .iter()
            .enumerate()
            .filter(|(i, _)| (local >> (k - 1 - i)) & 1 == 1)
            .map(|(_, q)| 1usize << (n - 1 - q))
            .sum()
    };
    let keep_idx: Vec<usize> = (0..1usize << kept.len()).map(|a| spread(a, &kept)).collect();
    let trace_idx: Vec<usize> = (0..1usize << traced.len()).map(|a| spread(a, &traced)).collect();

    let dk = keep_idx.len();
    let mut out = DMatrix::<Complex64>::zeros(dk, dk);
    for j in 0..dk {
        for i in 0..dk {
            let mut acc = Complex64::default();
            for t in &trace_idx {
                acc += rho.data[(keep_idx[i] + t, keep_idx[j] + t)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(kept.len(), out))
}

/// Eigenvalues sorted in decreasing order with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl Spectrum {
    pub fn vector(&self, i: usize) -> PureState {
        PureState::from_vector_unchecked(
            self.vectors.nrows().trailing_zeros() as usize,
            self.vectors.column(i).into_owned(),
        )
    }
}

fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let eig = SymmetricEigen::try_new(m.clone(), 1e-15, 0).ok_or(Error::EigenNonConvergence)?;
    Ok(eig.eigenvalues.iter().copied().collect())
}

/// Exact spectral decomposition: the ground-truth oracle for eigenvalue and
/// eigenvector errors.
pub fn exact_eigs(rho: &DensityMatrix) -> Result<Spectrum> {
    let eig = SymmetricEigen::try_new(rho.data.clone(), 1e-15, 0).ok_or(Error::EigenNonConvergence)?;
    let d = rho.dim();
    let mut pairs: Vec<(f64, DVector<Complex64>)> = (0..d)
        .map(|i| (eig.eigenvalues[i], fix_phase(eig.eigenvectors.column(i).into_owned())))
        .collect();
    pairs.sort_by(|a, b| match b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal) {
        Ordering::Equal => lexicographic(&a.1, &b.1),
        ord => ord,
    });
    let mut vectors = DMatrix::zeros(d, d);
    for (i, (_, v)) in pairs.iter().enumerate() {
        vectors.set_column(i, v);
    }
    Ok(Spectrum {
        values: pairs.into_iter().map(|(v, _)| v).collect(),
        vectors,
    })
}

/// Rotates the global phase so the first non-negligible component is real positive.
fn fix_phase(mut v: DVector<Complex64>) -> DVector<Complex64> {
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        v *= z.conj() / z.norm();
    }
    v
}

fn lexicographic(a: &DVector<Complex64>, b: &DVector<Complex64>) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let ord =
            y.re.partial_cmp(&x.re)
                .unwrap_or(Ordering::Equal)
                .then(y.im.partial_cmp(&x.im).unwrap_or(Ordering::Equal));
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

/// `Tr[ρ²]`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    // Tr[ρ²] = Σ_ij |ρ_ij|² for Hermitian ρ.
    rho.data.iter().map(|z| z.norm_sqr()).sum()
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn fidelity_pure(rho: &DensityMatrix, psi: &PureState) -> Result<f64> {
    if rho.n != psi.n {
        return Err(Error::DimensionMismatch {
            expected: rho.n,
            actual: psi.n,
        });
    }
    let v = &psi.amplitudes;
    let f = v.dotc(&(&rho.data * v)).re;
    Ok(f.clamp(0.0, 1.0))
}
