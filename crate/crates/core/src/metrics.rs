//! Eigen-error functionals, verification bounds and runs-per-success.

use crate::ansatz::LayeredAnsatz;
use crate::error::{Error, Result};
use crate::qmath::DensityMatrix;
use crate::vqse::EigenEstimate;

/// Absolute and relative eigenvalue errors over the top `m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenErrors {
    pub eps_lambda: f64,
    pub eps_rel: f64,
    /// Number of terms dropped from `eps_rel` because the exact eigenvalue is zero.
    pub zero_terms: usize,
}

/// `ε_λ = Σ (λ_i - λ̃_i)²`, `ε_r = Σ (λ_i - λ̃_i)² / λ_i²` over `i ≤ m`.
pub fn eigen_errors(exact: &[f64], estimates: &[f64], m: usize) -> Result<EigenErrors> {
    if m > estimates.len() || m > exact.len() {
        return Err(Error::InvalidArgument(format!(
            "m = {m} exceeds available values ({} exact, {} estimated)",
            exact.len(),
            estimates.len()
        )));
    }
    let mut out = EigenErrors {
        eps_lambda: 0.0,
        eps_rel: 0.0,
        zero_terms: 0,
    };
    for (l, e) in exact.iter().zip(estimates).take(m) {
        let sq = (l - e).powi(2);
        out.eps_lambda += sq;
        if *l == 0.0 {
            out.zero_terms += 1;
        } else {
            out.eps_rel += sq / (l * l);
        }
    }
    Ok(out)
}

/// `Σ_i ‖ρ|λ̃_i⟩ - λ̃_i|λ̃_i⟩‖²` with `|λ̃_i⟩ = V†|z_i⟩`.
pub fn eigenvector_error(rho: &DensityMatrix, a: &LayeredAnsatz, est: &EigenEstimate) -> Result<f64> {
    let mut total = 0.0;
    for (&lambda, &z) in est.lambdas.iter().zip(&est.bitstrings) {
        let v = a.prepare_eigenvector(z)?;
        let v = v.amplitudes();
        let delta = rho.matrix() * v - v * num_complex::Complex64::new(lambda, 0.0);
        total += delta.norm_squared();
    }
    Ok(total)
}

/// Value of a bound plus whether it fell back to a trivial form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bound {
    pub value: f64,
    pub degenerate: bool,
}

/// Cost-based bound `Tr ρ² - (E_{m+1} - C)² / Σ_{i≤m} (E_{m+1} - E_i)²`.
///
/// `energies` holds `E_1 ≤ … ≤ E_{m+1}`. When `E_{m+1} ≤ C`, or all levels
/// coincide, the bound is uninformative and the purity itself is returned,
/// flagged.
pub fn bound_from_cost(cost: f64, energies: &[f64], purity: f64) -> Result<Bound> {
    if energies.len() < 2 {
        return Err(Error::InvalidArgument("cost bound needs at least two energies".into()));
    }
    if energies.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("energies must be ascending".into()));
    }
    let (low, top) = energies.split_at(energies.len() - 1);
    let top = top[0];
    let denom: f64 = low.iter().map(|e| (top - e).powi(2)).sum();
    // Equal levels force C ≥ E_1 = E_{m+1}; treat round-off the same way.
    if top <= cost || denom == 0.0 {
        return Ok(Bound {
            value: purity,
            degenerate: true,
        });
    }
    Ok(Bound {
        value: purity - (top - cost).powi(2) / denom,
        degenerate: false,
    })
}

/// Purity-based bound `Tr ρ² - (Σ_{i≤m̂} λ̃_i² + (1 - Σ λ̃_i)² / (2^n - m̂))`.
///
/// `estimates` must hold at least `m_hat` descending values.
pub fn bound_from_purity(purity: f64, estimates: &[f64], n: usize, m_hat: usize) -> Result<f64> {
    let dim = 1usize << n;
    if m_hat == 0 || m_hat >= dim {
        return Err(Error::InvalidArgument(format!("m_hat = {m_hat} must lie in 1..{dim}")));
    }
    if estimates.len() < m_hat {
        return Err(Error::InvalidArgument(format!(
            "m_hat = {m_hat} exceeds the {} available estimates",
            estimates.len()
        )));
    }
    let head = &estimates[..m_hat];
    let sq: f64 = head.iter().map(|l| l * l).sum();
    let rest = 1.0 - head.iter().sum::<f64>();
    Ok(purity - (sq + rest * rest / (dim - m_hat) as f64))
}

/// Default `m̂ = min(2m, 2^n - 1)`.
pub fn default_m_hat(m: usize, n: usize) -> usize {
    (2 * m).min((1usize << n) - 1)
}

/// Runs divided by successful runs (`ε < target`); infinite when none succeed.
pub fn runs_per_success(errors: &[f64], target: f64) -> f64 {
    let successes = errors.iter().filter(|&&e| e < target).count();
    if successes == 0 {
        f64::INFINITY
    } else {
        errors.len() as f64 / successes as f64
    }
}

/// Everything reported for a completed run.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub eps_lambda: f64,
    pub eps_rel: f64,
    pub eps_v: f64,
    pub bound_cost: f64,
    pub bound_cost_degenerate: bool,
    /// Purity bound at `m̂ = m_hat`.
    pub bound_purity: f64,
    /// Purity bound at `m̂ = m`, never below `bound_purity`.
    pub bound_purity_at_m: f64,
    pub m_hat: usize,
    pub zero_terms: usize,
}

impl ErrorReport {
    /// Names of the violated inequalities, with `slack`.
    pub fn violations(&self, slack: f64) -> Vec<&'static str> {
        let mut out = Vec::new();
        let checks = [
            (self.eps_lambda <= self.bound_cost + slack, "eps_lambda <= bound_cost"),
            (
                self.eps_lambda <= self.bound_purity + slack,
                "eps_lambda <= bound_purity",
            ),
            (self.eps_v <= self.bound_cost + slack, "eps_v <= bound_cost"),
            (self.eps_v <= self.bound_purity + slack, "eps_v <= bound_purity"),
        ];
        for (ok, name) in checks {
            if !ok {
                out.push(name);
            }
        }
        out
    }
}
