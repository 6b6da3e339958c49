//! Gate matrices.
//!
//! Rotations use the half-angle convention `R_k(θ) = exp(iθσ_k/2)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

fn real(rows: usize, values: &[f64]) -> DMatrix<Complex64> {
    DMatrix::from_row_iterator(rows, rows, values.iter().map(|&x| Complex64::new(x, 0.0)))
}

pub fn identity(n_qubits: usize) -> DMatrix<Complex64> {
    DMatrix::identity(1 << n_qubits, 1 << n_qubits)
}

pub fn pauli_x() -> DMatrix<Complex64> {
    real(2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> DMatrix<Complex64> {
    real(2, &[1.0, 0.0, 0.0, -1.0])
}

/// `exp(iθσ_y/2)`.
pub fn ry(theta: f64) -> DMatrix<Complex64> {
    let (s, c) = (theta / 2.0).sin_cos();
    real(2, &[c, s, -s, c])
}

/// `exp(iθσ_z/2)`.
pub fn rz(theta: f64) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::from_polar(1.0, theta / 2.0),
            ZERO,
            ZERO,
            Complex64::from_polar(1.0, -theta / 2.0),
        ],
    )
}

/// `G(θ₁, θ₂, θ₃) = R_z(θ₃) R_y(θ₂) R_z(θ₁)`.
pub fn g_rotation(t1: f64, t2: f64, t3: f64) -> DMatrix<Complex64> {
    rz(t3) * ry(t2) * rz(t1)
}

pub fn cz() -> DMatrix<Complex64> {
    let mut m = identity(2);
    m[(3, 3)] = -ONE;
    m
}

/// Controlled-NOT, control on the first (more significant) wire.
pub fn cnot() -> DMatrix<Complex64> {
    real(
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, 1.0, 0.0,
        ],
    )
}

/// Largest absolute entry of `U†U - I`.
pub fn unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let d = u.nrows();
    (u.adjoint() * u - DMatrix::<Complex64>::identity(d, d))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}
