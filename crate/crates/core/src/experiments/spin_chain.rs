//! Cyclic XY chain in a tilted field and its reduced ground states.
//!
//! `H = -Σ_j (h_x S^x_j + h_z S^z_j + J_x S^x_j S^x_{j+1} + J_y S^y_j S^y_{j+1})`
//! with `S = σ/2`, `(h_z, h_x) = h (cos γ, sin γ)` and site `N-1` coupled to
//! site 0. Every term is real in the standard basis, so the Hamiltonian is a
//! real symmetric matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::qmath::DensityMatrix;

pub const MAX_SITES: usize = 12;
const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinChainSpec {
    pub sites: usize,
    pub jx: f64,
    pub jy: f64,
    pub h: f64,
    pub gamma: f64,
    /// Size of the contiguous block `0..keep` kept in the reduced state.
    pub keep: usize,
}

impl SpinChainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sites < 3 || self.sites > MAX_SITES {
            return Err(Error::InvalidArgument(format!(
                "chain length {} outside 3..={MAX_SITES}",
                self.sites
            )));
        }
        if self.keep == 0 || self.keep >= self.sites {
            return Err(Error::InvalidArgument(format!(
                "block size {} must lie in 1..{}",
                self.keep, self.sites
            )));
        }
        if ![self.jx, self.jy, self.h, self.gamma].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidArgument("chain parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn with_field(&self, h: f64) -> Self {
        Self { h, ..*self }
    }

    pub fn fields(&self) -> (f64, f64) {
        (self.h * self.gamma.cos(), self.h * self.gamma.sin())
    }
}

/// Dense `2^N × 2^N` chain Hamiltonian (site 0 is the most significant bit).
pub fn xy_hamiltonian(spec: &SpinChainSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let n = spec.sites;
    let dim = 1usize << n;
    let (hz, hx) = spec.fields();
    let mask = |j: usize| 1usize << (n - 1 - j);
    let spin = |i: usize, j: usize| if i & mask(j) == 0 { 0.5 } else { -0.5 };

    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..n {
            let k = (j + 1) % n;
            h[(i, i)] -= hz * spin(i, j);
            h[(i ^ mask(j), i)] -= hx * 0.5;
            // S^x S^x flips both spins with amplitude 1/4; S^y S^y does the
            // same with sign -(4 s_j s_k).
            let flipped = i ^ mask(j) ^ mask(k);
            let parallel = 4.0 * spin(i, j) * spin(i, k);
            h[(flipped, i)] -= 0.25 * spec.jx - 0.25 * spec.jy * parallel;
        }
    }
    Ok(h)
}

/// How a ground state is picked when the lowest level is (nearly) degenerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GroundSelection {
    /// Project basis states `|0…0⟩, |0…1⟩, …` onto the lowest eigenspace and
    /// keep the first non-vanishing projection.
    #[default]
    Lexicographic,
    /// Real combination of the two lowest eigenvectors with the largest
    /// Schmidt coefficient across the block cut.
    MostSeparableDoublet,
}

#[derive(Clone, Debug)]
pub struct ChainGround {
    pub reduced: DensityMatrix,
    pub energy: f64,
    /// `E_1 - E_0`.
    pub gap: f64,
    /// Dimension of the lowest eigenspace within tolerance.
    pub degeneracy: usize,
    pub state: DVector<f64>,
}

/// Ground state of the chain reduced to its first `keep` sites, and the ground energy.
pub fn xy_ground_reduced(spec: &SpinChainSpec) -> Result<(DensityMatrix, f64)> {
    let g = xy_ground(spec, GroundSelection::Lexicographic)?;
    Ok((g.reduced, g.energy))
}

pub fn xy_ground(spec: &SpinChainSpec, selection: GroundSelection) -> Result<ChainGround> {
    let h = xy_hamiltonian(spec)?;
    let eig = SymmetricEigen::try_new(h, 1e-14, 0).ok_or(Error::EigenNonConvergence)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let e0 = eig.eigenvalues[order[0]];
    let gap = eig.eigenvalues[order[1]] - e0;
    let tol = DEGENERACY_TOL * e0.abs().max(1.0);
    let degeneracy = order.iter().take_while(|&&i| eig.eigenvalues[i] - e0 <= tol).count();
    let column = |i: usize| eig.eigenvectors.column(order[i]).into_owned();

    let state = match selection {
        GroundSelection::Lexicographic => {
            let basis: Vec<DVector<f64>> = (0..degeneracy).map(column).collect();
            lexicographic_projection(&basis)
        }
        GroundSelection::MostSeparableDoublet => most_separable(&column(0), &column(1), spec.keep, spec.sites),
    };
    Ok(ChainGround {
        reduced: reduce(&state, spec.keep, spec.sites)?,
        energy: e0,
        gap,
        degeneracy,
        state,
    })
}

fn lexicographic_projection(basis: &[DVector<f64>]) -> DVector<f64> {
    let dim = basis[0].len();
    for k in 0..dim {
        let mut v = DVector::<f64>::zeros(dim);
        for b in basis {
            v.axpy(b[k], b, 1.0);
        }
        let norm = v.norm();
        if norm > 1e-6 {
            return fix_sign(v / norm);
        }
    }
    fix_sign(basis[0].clone())
}

fn fix_sign(v: DVector<f64>) -> DVector<f64> {
    match v.iter().find(|x| x.abs() > 1e-12) {
        Some(&x) if x < 0.0 => -v,
        _ => v,
    }
}

fn most_separable(v0: &DVector<f64>, v1: &DVector<f64>, keep: usize, sites: usize) -> DVector<f64> {
    let mix = |t: f64| v0 * t.cos() + v1 * t.sin();
    let score = |t: f64| top_schmidt_weight(&mix(t), keep, sites);
    let pi = std::f64::consts::PI;
    let grid = 180;
    let step = pi / grid as f64;
    let best = (0..grid)
        .map(|i| i as f64 * step)
        .max_by(|a, b| score(*a).total_cmp(&score(*b)))
        .unwrap_or(0.0);
    let t = golden_section(|t| -score(t), best - step, best + step, 1e-12);
    fix_sign(mix(t).normalize())
}

/// Largest eigenvalue of the block reduction of a real pure state.
fn top_schmidt_weight(psi: &DVector<f64>, keep: usize, sites: usize) -> f64 {
    let rho = reduced_real(psi, keep, sites);
    SymmetricEigen::new(rho).eigenvalues.max()
}

fn reduced_real(psi: &DVector<f64>, keep: usize, sites: usize) -> DMatrix<f64> {
    let a = DMatrix::from_row_slice(1 << keep, 1 << (sites - keep), psi.as_slice());
    &a * a.transpose()
}

fn reduce(psi: &DVector<f64>, keep: usize, sites: usize) -> Result<DensityMatrix> {
    DensityMatrix::from_real(keep, &reduced_real(psi, keep, sites))
}

/// Minimiser of a unimodal `f` on `[a, b]`.
pub(crate) fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Total weight outside the largest eigenvalue, `1 - λ_1`, computed from the
/// tail to avoid cancellation.
pub fn separability_defect(reduced: &DensityMatrix) -> Result<f64> {
    let spec = crate::qmath::exact_eigs(reduced)?;
    Ok(spec.values[1..].iter().sum::<f64>().max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Factorization {
    pub h: f64,
    pub defect: f64,
}

/// Field in `[lo, hi]` minimising `1 - λ_1` of the reduced ground state:
/// grid scan with `points` samples, then golden-section refinement around the
/// best sample. Fails when the refined defect is not below `tolerance`.
pub fn locate_factorization(
    base: &SpinChainSpec,
    lo: f64,
    hi: f64,
    points: usize,
    tolerance: f64,
    selection: GroundSelection,
) -> Result<Factorization> {
    if !(hi > lo) || points < 3 {
        return Err(Error::InvalidArgument(
            "scan needs lo < hi and at least 3 points".into(),
        ));
    }
    let defect = |h: f64| -> Result<f64> { separability_defect(&xy_ground(&base.with_field(h), selection)?.reduced) };
    let step = (hi - lo) / (points - 1) as f64;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..points {
        let d = defect(lo + i as f64 * step)?;
        if d < best.1 {
            best = (i, d);
        }
    }
    let centre = lo + best.0 as f64 * step;
    let (a, b) = ((centre - step).max(lo), (centre + step).min(hi));
    let h = golden_section(|h| defect(h).unwrap_or(f64::INFINITY), a, b, 1e-10);
    let refined = defect(h)?;
    let found = if refined <= best.1 {
        Factorization { h, defect: refined }
    } else {
        Factorization {
            h: centre,
            defect: best.1,
        }
    };
    if found.defect >= tolerance {
        return Err(Error::Experiment(format!(
            "no factorizing field in [{lo}, {hi}]: smallest 1 - λ1 = {:.3e} at h = {:.6}",
            found.defect, found.h
        )));
    }
    Ok(found)
}
