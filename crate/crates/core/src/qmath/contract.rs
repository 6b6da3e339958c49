//! Index-arithmetic application of small operators to `2^n`-dimensional
//! matrices and vectors, without materializing the embedded operator.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Precomputed index layout for an operator acting on `targets` of an
/// `n`-qubit register.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    /// `offsets[a]` is the basis-index offset of local index `a` (targets[0] is the
    /// most significant local bit).
    offsets: Vec<usize>,
    /// Basis indices with every target bit cleared.
    bases: Vec<usize>,
}

impl Layout {
    pub(crate) fn new(n: usize, targets: &[usize]) -> Result<Self> {
        check_targets(n, targets)?;
        let k = targets.len();
        let masks: Vec<usize> = targets.iter().map(|&q| 1usize << (n - 1 - q)).collect();
        let offsets = (0..1usize << k)
            .map(|a| {
                masks
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| (a >> (k - 1 - i)) & 1 == 1)
                    .map(|(_, m)| m)
                    .sum()
            })
            .collect();
        let all: usize = masks.iter().sum();
        let bases = (0..1usize << n).filter(|i| i & all == 0).collect();
        Ok(Self { offsets, bases })
    }

    pub(crate) fn local_dim(&self) -> usize {
        self.offsets.len()
    }
}

pub(crate) fn check_targets(n: usize, targets: &[usize]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::InvalidSubset("no target qubits".into()));
    }
    for (i, &q) in targets.iter().enumerate() {
        if q >= n {
            return Err(Error::QubitOutOfRange { index: q, n });
        }
        if targets[..i].contains(&q) {
            return Err(Error::DuplicateTarget(q));
        }
    }
    Ok(())
}

/// `m <- (U ⊗ I) m`.
pub(crate) fn apply_left(m: &mut DMatrix<Complex64>, u: &DMatrix<Complex64>, layout: &Layout) {
    let k = layout.local_dim();
    let mut buf = vec![Complex64::default(); k];
    for col in 0..m.ncols() {
        let column = &mut m.column_mut(col);
        for &base in &layout.bases {
            for (a, off) in layout.offsets.iter().enumerate() {
                buf[a] = column[base + off];
            }
            for (a, off) in layout.offsets.iter().enumerate() {
                let mut acc = Complex64::default();
                for (b, v) in buf.iter().enumerate() {
                    acc += u[(a, b)] * v;
                }
                column[base + off] = acc;
            }
        }
    }
}

/// `v <- (U ⊗ I) v`.
pub(crate) fn apply_vector(v: &mut DVector<Complex64>, u: &DMatrix<Complex64>, layout: &Layout) {
    let k = layout.local_dim();
    let mut buf = vec![Complex64::default(); k];
    for &base in &layout.bases {
        for (a, off) in layout.offsets.iter().enumerate() {
            buf[a] = v[base + off];
        }
        for (a, off) in layout.offsets.iter().enumerate() {
            let mut acc = Complex64::default();
            for (b, x) in buf.iter().enumerate() {
                acc += u[(a, b)] * x;
            }
            v[base + off] = acc;
        }
    }
}

/// `U m U†` for Hermitian `m`, using `(U m)† = m U†`.
pub(crate) fn conjugate_hermitian(
    m: &DMatrix<Complex64>,
    u: &DMatrix<Complex64>,
    layout: &Layout,
) -> DMatrix<Complex64> {
    let mut x = m.clone();
    apply_left(&mut x, u, layout);
    let mut y = x.adjoint();
    apply_left(&mut y, u, layout);
    y
}

/// Kronecker product of operators, first factor acting on the most significant qubits.
pub(crate) fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}
