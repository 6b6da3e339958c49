use nalgebra::DMatrix;
use num_complex::Complex64;

use super::contract::{self, Layout};
use super::{gates, DensityMatrix};
use crate::error::{Error, Result};

const TP_TOL: f64 = 1e-10;

/// A completely positive map `ρ ↦ Σ K ρ K†` on `arity` target qubits.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    operators: Vec<DMatrix<Complex64>>,
    arity: usize,
}

impl KrausChannel {
    /// Builds a channel, rejecting operator sets with `Σ K†K ≠ I`.
    pub fn new(operators: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty Kraus set".into()))?;
        let d = first.nrows();
        if !d.is_power_of_two() || d < 2 {
            return Err(Error::InvalidArgument(format!("Kraus dimension {d} is not 2^k")));
        }
        let mut sum = DMatrix::<Complex64>::zeros(d, d);
        for k in &operators {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: k.nrows().max(k.ncols()),
                });
            }
            sum += k.adjoint() * k;
        }
        let defect = (sum - DMatrix::<Complex64>::identity(d, d))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if defect > TP_TOL {
            return Err(Error::NotTracePreserving(defect));
        }
        Ok(Self {
            arity: d.trailing_zeros() as usize,
            operators,
        })
    }

    /// Depolarizing channel `ρ ↦ (1-p)ρ + p·I/2^k ⊗ Tr_k ρ` on `k` qubits.
    pub fn depolarizing(k: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("depolarizing probability {p}")));
        }
        if k == 0 {
            return Err(Error::InvalidArgument("depolarizing arity 0".into()));
        }
        let paulis = [gates::identity(1), gates::pauli_x(), gates::pauli_y(), gates::pauli_z()];
        let count = 1usize << (2 * k);
        let mut ops = Vec::with_capacity(count);
        for label in 0..count {
            let mut op = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
            for site in 0..k {
                let which = (label >> (2 * (k - 1 - site))) & 3;
                op = contract::kron(&op, &paulis[which]);
            }
            let weight = if label == 0 {
                1.0 - p + p / count as f64
            } else {
                p / count as f64
            };
            if weight > 0.0 {
                ops.push(op * Complex64::new(weight.sqrt(), 0.0));
            }
        }
        Self::new(ops)
    }

    /// Single-qubit amplitude damping with decay probability `gamma`.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidArgument(format!("damping rate {gamma}")));
        }
        let c = |x: f64| Complex64::new(x, 0.0);
        let k0 = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c((1.0 - gamma).sqrt())]);
        let k1 = DMatrix::from_row_slice(2, 2, &[c(0.0), c(gamma.sqrt()), c(0.0), c(0.0)]);
        Self::new(vec![k0, k1])
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn operators(&self) -> &[DMatrix<Complex64>] {
        &self.operators
    }
}

/// `Σ K ρ K†` with each Kraus operator embedded on `targets`.
pub fn apply_channel(rho: &DensityMatrix, ch: &KrausChannel, targets: &[usize]) -> Result<DensityMatrix> {
    if targets.len() != ch.arity {
        return Err(Error::DimensionMismatch {
            expected: ch.arity,
            actual: targets.len(),
        });
    }
    let layout = Layout::new(rho.n_qubits(), targets)?;
    let d = rho.dim();
    let mut out = DMatrix::<Complex64>::zeros(d, d);
    for k in &ch.operators {
        out += contract::conjugate_hermitian(rho.matrix(), k, &layout);
    }
    Ok(DensityMatrix::from_matrix_unchecked(rho.n_qubits(), out))
}
