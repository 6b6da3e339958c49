//! Re-purification of a noisy W-state preparation.
//!
//! Preparation circuit (3 CNOTs, qubit 0 most significant), from `|000⟩`:
//!
//! 1. `R_y(a)` on q0 with `a = -2 arccos(1/√3)`: q0 → `(|0⟩ + √2|1⟩)/√3`
//! 2. `R_y(-π/4)` on q1, CNOT(0→1), `R_y(π/4)` on q1: Hadamard-like rotation
//!    of q1 controlled on q0 = 1
//! 3. CNOT(1→2), CNOT(0→1), X on q0
//!
//! giving `(|001⟩ + |010⟩ + |100⟩)/√3`.

use num_complex::Complex64;
use rayon::prelude::*;

use super::noise::{NoiseSpec, NoisyCircuit};
use crate::ansatz::{eigenvector_circuit, BlockKind, LayeredAnsatz};
use crate::error::Result;
use crate::hamiltonians::default_local_weights;
use crate::qmath::{fidelity_pure, gates, Bitstring, DensityMatrix, Gate, PureState};
use crate::seeding;
use crate::vqse::{optimize_with, top_m, CostVariant, Evolution, LoopConfig, OptimizerConfig, StepwiseSchedule};

pub fn w_state() -> PureState {
    let a = Complex64::new(1.0 / 3f64.sqrt(), 0.0);
    let mut amps = vec![Complex64::default(); 8];
    for i in [0b001, 0b010, 0b100] {
        amps[i] = a;
    }
    PureState::new(3, amps).expect("W amplitudes are normalised")
}

pub fn w_preparation_circuit() -> Vec<Gate> {
    let a = -2.0 * (1.0 / 3f64.sqrt()).acos();
    let b = -std::f64::consts::FRAC_PI_4;
    vec![
        Gate::new(gates::ry(a), vec![0]),
        Gate::new(gates::ry(b), vec![1]),
        Gate::new(gates::cnot(), vec![0, 1]),
        Gate::new(gates::ry(-b), vec![1]),
        Gate::new(gates::cnot(), vec![1, 2]),
        Gate::new(gates::cnot(), vec![0, 1]),
        Gate::new(gates::pauli_x(), vec![0]),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct WStateConfig {
    pub noise: NoiseSpec,
    pub layers: usize,
    pub block: BlockKind,
    pub iters: usize,
    pub update_every: usize,
    pub m: usize,
    pub optimizer: OptimizerConfig,
    pub runs: usize,
    pub seed: u64,
}

impl Default for WStateConfig {
    fn default() -> Self {
        Self {
            noise: NoiseSpec::depolarizing(0.002, 0.02),
            layers: 1,
            block: BlockKind::GCnotG,
            iters: 50,
            update_every: 10,
            m: 1,
            optimizer: OptimizerConfig {
                lr: 0.1,
                ..OptimizerConfig::default()
            },
            runs: 10,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WTraceRow {
    pub iter: usize,
    pub cost: f64,
    /// `⟨ψ|σ|ψ⟩` for the noisy eigenvector preparation at this iterate.
    pub fidelity: f64,
    pub z1: Bitstring,
}

#[derive(Clone, Debug)]
pub struct WStateRun {
    pub run: usize,
    pub initial_cost: f64,
    pub initial_fidelity: f64,
    pub trace: Vec<WTraceRow>,
    pub theta: Vec<f64>,
}

impl WStateRun {
    pub fn final_fidelity(&self) -> f64 {
        self.trace.last().map_or(self.initial_fidelity, |r| r.fidelity)
    }

    pub fn final_cost(&self) -> f64 {
        self.trace.last().map_or(self.initial_cost, |r| r.cost)
    }
}

#[derive(Clone, Debug)]
pub struct WStateResult {
    /// `⟨ψ|ρ|ψ⟩` of the noisy preparation.
    pub baseline: f64,
    pub rho: DensityMatrix,
    pub runs: Vec<WStateRun>,
}

impl WStateResult {
    pub fn mean_final_fidelity(&self) -> f64 {
        self.runs.iter().map(WStateRun::final_fidelity).sum::<f64>() / self.runs.len() as f64
    }
}

/// Fidelity of the noisy eigenvector preparation for `z` with the W state.
fn prepared_fidelity(sim: &NoisyCircuit, a: &LayeredAnsatz, z: Bitstring, psi: &PureState) -> Result<f64> {
    let sigma = sim.run(&DensityMatrix::basis_state(3, 0), &eigenvector_circuit(a, z)?)?;
    fidelity_pure(&sigma, psi)
}

fn top_bitstring(diag: &[f64]) -> Bitstring {
    Bitstring::new(3, top_m(diag, 1)[0]).expect("index within 3 qubits")
}

pub fn w_state_mitigation_run(cfg: &WStateConfig) -> Result<WStateResult> {
    let sim = NoisyCircuit::new(cfg.noise)?;
    let psi = w_state();
    let rho = sim.run(&DensityMatrix::basis_state(3, 0), &w_preparation_circuit())?;
    let baseline = fidelity_pure(&rho, &psi)?;
    let local = default_local_weights(3, cfg.m)?;
    let loop_cfg = LoopConfig {
        variant: CostVariant::Adaptive,
        m: cfg.m,
        schedule: StepwiseSchedule::new(cfg.iters, cfg.update_every)?,
        optimizer: cfg.optimizer,
        shots: 0,
    };

    let runs = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let seed = seeding::child_seed(cfg.seed, run as u64);
            let mut rng = seeding::stream(seed, 0);
            let ansatz = LayeredAnsatz::random(3, cfg.layers, cfg.block, &mut rng)?;
            let start = sim.evolve(&rho, &ansatz)?.diagonal();
            let initial_fidelity = prepared_fidelity(&sim, &ansatz, top_bitstring(&start), &psi)?;
            let mut trace = Vec::with_capacity(cfg.iters);
            let mut failure = None;
            let outcome = optimize_with(&sim, &rho, ansatz, &local, &loop_cfg, seed, |snap| {
                let z1 = top_bitstring(&snap.rho_tilde.diagonal());
                match prepared_fidelity(&sim, snap.ansatz, z1, &psi) {
                    Ok(fidelity) => trace.push(WTraceRow {
                        iter: snap.record.iter,
                        cost: snap.record.cost,
                        fidelity,
                        z1,
                    }),
                    Err(e) => failure = Some(e),
                }
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(WStateRun {
                run,
                initial_cost: outcome.initial_cost,
                initial_fidelity,
                trace,
                theta: outcome.ansatz.theta().to_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WStateResult { baseline, rho, runs })
}
