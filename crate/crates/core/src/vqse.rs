//! Training loop, gradients, eigenvalue readout and shot planning.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::ansatz::LayeredAnsatz;
use crate::error::{Error, Result};
use crate::hamiltonians::{
    cost_from_counts, cost_from_diagonal, sample_counts, AdaptiveHamiltonian, DiagonalHamiltonian, GlobalPart,
    Hamiltonian, LocalWeights,
};
use crate::qmath::contract::conjugate_hermitian;
use crate::qmath::{Bitstring, DensityMatrix};
use crate::seeding;

const SHIFT: f64 = std::f64::consts::FRAC_PI_2;

// Stream tags; combined with an iteration or component index.
const TAG_GRADIENT: u64 = 1 << 40;
const TAG_UPDATE: u64 = 2 << 40;

/// `f(t)` that jumps to `t` every `s` iterations and is flat in between.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepwiseSchedule {
    n_max: usize,
    s: usize,
}

impl StepwiseSchedule {
    pub fn new(n_max: usize, s: usize) -> Result<Self> {
        if n_max == 0 || s == 0 || !n_max.is_multiple_of(s) {
            return Err(Error::ScheduleDivisibility { n_max, s });
        }
        Ok(Self { n_max, s })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn interval(&self) -> usize {
        self.s
    }

    /// `t = k / n_max`.
    pub fn t(&self, k: usize) -> f64 {
        k as f64 / self.n_max as f64
    }

    pub fn is_update(&self, k: usize) -> bool {
        k > 0 && k.is_multiple_of(self.s)
    }

    /// Schedule weight in force at iteration `k`.
    pub fn weight(&self, k: usize) -> f64 {
        self.t(k.min(self.n_max) / self.s * self.s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CostVariant {
    Local,
    Global,
    Adaptive,
}

impl CostVariant {
    pub const ALL: [CostVariant; 3] = [CostVariant::Adaptive, CostVariant::Local, CostVariant::Global];
}

impl fmt::Display for CostVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostVariant::Local => "local",
            CostVariant::Global => "global",
            CostVariant::Adaptive => "adaptive",
        })
    }
}

impl FromStr for CostVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(CostVariant::Local),
            "global" => Ok(CostVariant::Global),
            "adaptive" => Ok(CostVariant::Adaptive),
            other => Err(Error::InvalidArgument(format!("unknown cost variant {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    GradientDescent,
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(OptimizerKind::Adam),
            "gd" => Ok(OptimizerKind::GradientDescent),
            other => Err(Error::InvalidArgument(format!("unknown optimizer {other:?}"))),
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::GradientDescent => "gd",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::Adam,
            lr: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First-order optimizer state.
#[derive(Clone, Debug)]
pub struct Optimizer {
    cfg: OptimizerConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    steps: i32,
}

impl Optimizer {
    pub fn new(cfg: OptimizerConfig, n_params: usize) -> Self {
        Self {
            cfg,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            steps: 0,
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        let c = self.cfg;
        match c.kind {
            OptimizerKind::GradientDescent => {
                for (x, g) in theta.iter_mut().zip(grad) {
                    *x -= c.lr * g;
                }
            }
            OptimizerKind::Adam => {
                self.steps += 1;
                let b1t = 1.0 - c.beta1.powi(self.steps);
                let b2t = 1.0 - c.beta2.powi(self.steps);
                for i in 0..theta.len() {
                    self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * grad[i];
                    self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
                    let m_hat = self.m[i] / b1t;
                    let v_hat = self.v[i] / b2t;
                    theta[i] -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
                }
            }
        }
    }
}

/// How `ρ` is carried through the ansatz circuit.
pub trait Evolution: Sync {
    fn evolve(&self, rho: &DensityMatrix, a: &LayeredAnsatz) -> Result<DensityMatrix>;

    /// True when `evolve` is exactly `V ρ V†`, enabling the cached-gradient path.
    fn is_unitary(&self) -> bool {
        false
    }
}

/// Noiseless evolution `ρ ↦ V(θ) ρ V†(θ)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Ideal;

impl Evolution for Ideal {
    fn evolve(&self, rho: &DensityMatrix, a: &LayeredAnsatz) -> Result<DensityMatrix> {
        a.apply(rho)
    }

    fn is_unitary(&self) -> bool {
        true
    }
}

/// Cost of the evolved state under `energies`, exact or from `shots` samples.
pub fn evaluate_cost<E, R>(
    evolution: &E,
    rho: &DensityMatrix,
    a: &LayeredAnsatz,
    energies: &[f64],
    shots: usize,
    rng: &mut R,
) -> Result<f64>
where
    E: Evolution + ?Sized,
    R: Rng + ?Sized,
{
    let diag = evolution.evolve(rho, a)?.diagonal();
    if shots == 0 {
        Ok(cost_from_diagonal(energies, &diag))
    } else {
        let counts = sample_counts(&diag, shots, rng)?;
        Ok(cost_from_counts(energies, &counts, shots))
    }
}

/// Parameter-shift gradient `½[C(θ_ν + π/2) - C(θ_ν - π/2)]` under ideal evolution.
///
/// With `shots > 0` every shifted cost is estimated from its own sample
/// stream derived from `seed`.
pub fn param_shift_gradient<H>(
    rho: &DensityMatrix,
    a: &LayeredAnsatz,
    h: &H,
    shots: usize,
    seed: u64,
) -> Result<Vec<f64>>
where
    H: DiagonalHamiltonian + ?Sized,
{
    check_dims(rho, a, h.n_qubits())?;
    gradient(&Ideal, rho, a, &h.energies(), shots, seed)
}

/// Parameter-shift gradient for energies given in basis order.
pub fn gradient<E: Evolution + ?Sized>(
    evolution: &E,
    rho: &DensityMatrix,
    a: &LayeredAnsatz,
    energies: &[f64],
    shots: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if energies.len() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: energies.len(),
        });
    }
    if shots == 0 && evolution.is_unitary() {
        return Ok(cached_gradient(rho, a, energies));
    }
    (0..a.theta().len())
        .into_par_iter()
        .map(|nu| {
            let mut shifted = [0.0; 2];
            for (slot, sign) in [1.0, -1.0].into_iter().enumerate() {
                let mut rng = seeding::stream(seed, TAG_GRADIENT | (2 * nu + slot) as u64);
                let b = a.shift_parameter(nu, sign * SHIFT)?;
                shifted[slot] = evaluate_cost(evolution, rho, &b, energies, shots, &mut rng)?;
            }
            Ok(0.5 * (shifted[0] - shifted[1]))
        })
        .collect()
}

/// Exact gradient reusing forward states and back-propagated observables:
/// with `ρ_b` the state entering block `b` and `O_b` the observable seen right
/// after it, a shifted cost is `Tr[O_b B' ρ_b B'†]`.
fn cached_gradient(rho: &DensityMatrix, a: &LayeredAnsatz, energies: &[f64]) -> Vec<f64> {
    let blocks = a.sites().len();
    let unitaries: Vec<DMatrix<Complex64>> = (0..blocks).map(|b| a.block_unitary(b)).collect();

    let mut forward = Vec::with_capacity(blocks);
    let mut state = rho.matrix().clone();
    for (b, u) in unitaries.iter().enumerate() {
        let next = conjugate_hermitian(&state, u, a.block_layout(b));
        forward.push(std::mem::replace(&mut state, next));
    }

    let mut observables = vec![DMatrix::<Complex64>::zeros(0, 0); blocks];
    let mut obs = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        energies.len(),
        energies.iter().map(|&e| Complex64::new(e, 0.0)),
    ));
    for b in (0..blocks).rev() {
        let prev = conjugate_hermitian(&obs, &unitaries[b].adjoint(), a.block_layout(b));
        observables[b] = std::mem::replace(&mut obs, prev);
    }

    let per = a.kind().angles_per_block();
    (0..a.theta().len())
        .into_par_iter()
        .map(|nu| {
            let b = a.block_of(nu);
            let mut angles = a.block_angles(b).to_vec();
            let base = angles[nu % per];
            let mut shifted = [0.0; 2];
            for (slot, sign) in [1.0, -1.0].into_iter().enumerate() {
                angles[nu % per] = base + sign * SHIFT;
                let u = a.kind().unitary(&angles);
                let out = conjugate_hermitian(&forward[b], &u, a.block_layout(b));
                shifted[slot] = real_inner(&observables[b], &out);
            }
            0.5 * (shifted[0] - shifted[1])
        })
        .collect()
}

/// `Tr[O R]` for Hermitian `O`, `R`.
fn real_inner(o: &DMatrix<Complex64>, r: &DMatrix<Complex64>) -> f64 {
    o.iter().zip(r.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopConfig {
    pub variant: CostVariant,
    pub m: usize,
    pub schedule: StepwiseSchedule,
    pub optimizer: OptimizerConfig,
    /// Shots per cost evaluation and per adaptive measurement; 0 = exact.
    pub shots: usize,
}

/// One row of the cost trace: the cost after the optimizer step of iteration
/// `iter`, under the Hamiltonian in force at that iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub t: f64,
    pub cost: f64,
    /// The adaptive Hamiltonian was rebuilt at this iteration.
    pub updated: bool,
}

/// State of the loop passed to observers after every iteration.
pub struct Snapshot<'a> {
    pub record: IterationRecord,
    pub ansatz: &'a LayeredAnsatz,
    pub rho_tilde: &'a DensityMatrix,
    pub hamiltonian: &'a Hamiltonian,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub ansatz: LayeredAnsatz,
    /// Cost of the initial parameters under the initial Hamiltonian.
    pub initial_cost: f64,
    pub trace: Vec<IterationRecord>,
    /// Hamiltonian in force at the final iteration.
    pub hamiltonian: Hamiltonian,
}

impl Outcome {
    pub fn final_cost(&self) -> f64 {
        self.trace.last().map_or(self.initial_cost, |r| r.cost)
    }
}

/// Runs the training loop with ideal evolution.
pub fn optimize(
    rho: &DensityMatrix,
    ansatz: LayeredAnsatz,
    local: &LocalWeights,
    cfg: &LoopConfig,
    seed: u64,
) -> Result<Outcome> {
    optimize_with(&Ideal, rho, ansatz, local, cfg, seed, |_| {})
}

/// Training loop with stepwise adaptive schedule.
///
/// Iterations run `k = 1..=n_max` at `t = k/n_max`. For the adaptive variant,
/// whenever `s | k` the evolved state is measured, its `m` most likely
/// bitstrings become the projectors of `H_G(t)` and `H(t) = (1-t)H_L + tH_G(t)`.
/// Every iteration takes one optimizer step.
pub fn optimize_with<E, F>(
    evolution: &E,
    rho: &DensityMatrix,
    mut ansatz: LayeredAnsatz,
    local: &LocalWeights,
    cfg: &LoopConfig,
    seed: u64,
    mut observer: F,
) -> Result<Outcome>
where
    E: Evolution + ?Sized,
    F: FnMut(&Snapshot<'_>),
{
    check_dims(rho, &ansatz, local.n_qubits())?;
    let n = rho.n_qubits();
    let mut hamiltonian = match cfg.variant {
        CostVariant::Local | CostVariant::Adaptive => Hamiltonian::Local(local.clone()),
        CostVariant::Global => Hamiltonian::Global(GlobalPart::from_local(local, cfg.m)?),
    };
    let mut energies = hamiltonian.energies();
    let initial_cost = cost_from_diagonal(&energies, &evolution.evolve(rho, &ansatz)?.diagonal());

    let schedule = cfg.schedule;
    let mut optimizer = Optimizer::new(cfg.optimizer, ansatz.theta().len());
    let mut trace = Vec::with_capacity(schedule.n_max());
    for k in 1..=schedule.n_max() {
        let t = schedule.t(k);
        let updated = cfg.variant == CostVariant::Adaptive && schedule.is_update(k);
        if updated {
            let diag = evolution.evolve(rho, &ansatz)?.diagonal();
            let mut rng = seeding::stream(seed, TAG_UPDATE | k as u64);
            let est = estimate_from_diagonal(&diag, n, cfg.m, cfg.shots, &mut rng)?;
            let global = GlobalPart::with_bitstrings(local, &est.bitstrings)?;
            hamiltonian = Hamiltonian::Adaptive(AdaptiveHamiltonian::new(local.clone(), global, t)?);
            energies = hamiltonian.energies();
        }

        let grad_seed = seeding::child_seed(seed, k as u64);
        let grad = gradient(evolution, rho, &ansatz, &energies, cfg.shots, grad_seed)?;
        let mut theta = ansatz.theta().to_vec();
        optimizer.step(&mut theta, &grad);
        ansatz = ansatz.with_theta(theta)?;

        let rho_tilde = evolution.evolve(rho, &ansatz)?;
        let cost = cost_from_diagonal(&energies, &rho_tilde.diagonal());
        if !cost.is_finite() {
            return Err(Error::NanCost(k));
        }
        let record = IterationRecord {
            iter: k,
            t,
            cost,
            updated,
        };
        observer(&Snapshot {
            record,
            ansatz: &ansatz,
            rho_tilde: &rho_tilde,
            hamiltonian: &hamiltonian,
        });
        trace.push(record);
    }
    Ok(Outcome {
        ansatz,
        initial_cost,
        trace,
        hamiltonian,
    })
}

/// Estimates `λ̃_1 ≥ … ≥ λ̃_m` with their bitstrings.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenEstimate {
    pub lambdas: Vec<f64>,
    pub bitstrings: Vec<Bitstring>,
    /// 0 for exact readout.
    pub shots_used: usize,
    /// Fewer than `m` distinct outcomes were observed; the tail is zero-filled.
    pub padded: bool,
}

/// Indices of the `m` largest values, descending, ties by lower index.
pub fn top_m(values: &[f64], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(m);
    idx
}

/// Readout from the diagonal of `ρ̃`, exact or sampled.
pub fn estimate_from_diagonal<R: Rng + ?Sized>(
    diag: &[f64],
    n: usize,
    m: usize,
    shots: usize,
    rng: &mut R,
) -> Result<EigenEstimate> {
    if m == 0 || m > diag.len() {
        return Err(Error::InvalidArgument(format!(
            "m = {m} out of range 1..={}",
            diag.len()
        )));
    }
    let (values, padded) = if shots == 0 {
        (diag.to_vec(), false)
    } else {
        let counts = sample_counts(diag, shots, rng)?;
        let observed = counts.iter().filter(|&&c| c > 0).count();
        (counts.iter().map(|&c| c as f64 / shots as f64).collect(), observed < m)
    };
    let idx = top_m(&values, m);
    Ok(EigenEstimate {
        lambdas: idx.iter().map(|&i| values[i].clamp(0.0, 1.0)).collect(),
        bitstrings: idx.iter().map(|&i| Bitstring::from_index_unchecked(n, i)).collect(),
        shots_used: shots,
        padded,
    })
}

/// Eigenvalue readout from `V(θ) ρ V†(θ)`.
pub fn readout<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    a: &LayeredAnsatz,
    m: usize,
    shots: usize,
    rng: &mut R,
) -> Result<EigenEstimate> {
    let rho_tilde = a.apply(rho)?;
    estimate_from_diagonal(&rho_tilde.diagonal(), rho.n_qubits(), m, shots, rng)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShotPlan {
    pub c: f64,
    pub delta: f64,
    pub lambda_min: f64,
    pub n_runs: u64,
}

/// Smallest shot count with `P(|λ̃ - λ| ≥ cλ) ≤ δ` for every `λ ≥ lambda_min`
/// by Hoeffding: `ceil(ln(1/δ) / (2c²λ_min²))`.
pub fn plan_shots(c: f64, delta: f64, lambda_min: f64) -> Result<ShotPlan> {
    if !(c > 0.0) || !(delta > 0.0 && delta < 1.0) || !(lambda_min > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "shot plan needs c > 0, 0 < delta < 1, lambda_min > 0 (got {c}, {delta}, {lambda_min})"
        )));
    }
    let raw = (1.0 / delta).ln() / (2.0 * c * c * lambda_min * lambda_min);
    // Guard against ceil(23025.85...00001) style round-off pushing an exact
    // integer up by one.
    let n_runs = (raw - raw.abs() * 1e-12).ceil().max(1.0) as u64;
    Ok(ShotPlan {
        c,
        delta,
        lambda_min,
        n_runs,
    })
}

/// Smallest eigenvalue covered by `n_runs` shots at relative error `c` and
/// failure probability `delta`.
pub fn covered_lambda(n_runs: u64, c: f64, delta: f64) -> f64 {
    ((1.0 / delta).ln() / (2.0 * c * c * n_runs as f64)).sqrt()
}

fn check_dims(rho: &DensityMatrix, a: &LayeredAnsatz, n_h: usize) -> Result<()> {
    for actual in [a.n_qubits(), n_h] {
        if actual != rho.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: rho.n_qubits(),
                actual,
            });
        }
    }
    Ok(())
}
