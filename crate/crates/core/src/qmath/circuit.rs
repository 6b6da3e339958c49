use nalgebra::DMatrix;
use num_complex::Complex64;

use super::contract::{self, Layout};
use super::{apply_unitary_unchecked, DensityMatrix, PureState};
use crate::error::Result;

/// A unitary on one or two qubits of a register.
#[derive(Clone, Debug)]
pub struct Gate {
    pub matrix: DMatrix<Complex64>,
    pub targets: Vec<usize>,
}

impl Gate {
    pub fn new(matrix: DMatrix<Complex64>, targets: Vec<usize>) -> Self {
        Self { matrix, targets }
    }

    pub fn arity(&self) -> usize {
        self.targets.len()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            targets: self.targets.clone(),
        }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let layout = Layout::new(rho.n_qubits(), &self.targets)?;
        Ok(apply_unitary_unchecked(rho, &self.matrix, &layout))
    }

    pub fn apply_state(&self, psi: &PureState) -> Result<PureState> {
        let layout = Layout::new(psi.n_qubits(), &self.targets)?;
        let mut v = psi.amplitudes().clone();
        contract::apply_vector(&mut v, &self.matrix, &layout);
        Ok(PureState::from_vector_unchecked(psi.n_qubits(), v))
    }
}
