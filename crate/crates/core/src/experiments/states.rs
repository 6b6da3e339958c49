use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::qmath::{DensityMatrix, MAX_QUBITS};
use crate::seeding;

/// Real random state of rank at most `2^n_ancilla` on `n` qubits.
///
/// A Haar-random real unitary applied to `|0…0⟩` yields its first column, which
/// is distributed as a normalised standard Gaussian vector; that vector is
/// drawn directly on the `n + n_ancilla` register and the ancillas (the least
/// significant qubits) are traced out.
pub fn random_low_rank_state(n: usize, n_ancilla: usize, seed: u64) -> Result<DensityMatrix> {
    if n == 0 || n + n_ancilla > MAX_QUBITS {
        return Err(Error::InvalidArgument(format!(
            "{n} system + {n_ancilla} ancilla qubits exceeds the {MAX_QUBITS}-qubit cap"
        )));
    }
    let (ds, da) = (1usize << n, 1usize << n_ancilla);
    let mut rng = seeding::stream(seed, 0);
    let mut psi = DVector::<f64>::from_iterator(ds * da, (0..ds * da).map(|_| StandardNormal.sample(&mut rng)));
    psi /= psi.norm();
    // Row = system index, column = ancilla index.
    let a = DMatrix::from_row_slice(ds, da, psi.as_slice());
    let rho = &a * a.transpose();
    DensityMatrix::from_real(n, &rho)
}
