//! Seeded experiment drivers: random-state PCA, XY-chain entanglement
//! spectroscopy and W-state error mitigation.

mod noise;
mod spin_chain;
mod states;
mod wstate;

pub use noise::{NoiseSpec, NoisyCircuit};
pub use spin_chain::{
    locate_factorization, separability_defect, xy_ground, xy_ground_reduced, xy_hamiltonian, ChainGround,
    Factorization, GroundSelection, SpinChainSpec, MAX_SITES,
};
pub use states::random_low_rank_state;
pub use wstate::{
    w_preparation_circuit, w_state, w_state_mitigation_run, WStateConfig, WStateResult, WStateRun, WTraceRow,
};

use rayon::prelude::*;

use crate::ansatz::{BlockKind, LayeredAnsatz};
use crate::error::{Error, Result};
use crate::hamiltonians::{default_local_weights, sorted_levels, DiagonalHamiltonian, Hamiltonian, LocalWeights};
use crate::metrics::{bound_from_cost, bound_from_purity, default_m_hat, eigen_errors, eigenvector_error, ErrorReport};
use crate::qmath::{exact_eigs, purity, DensityMatrix};
use crate::seeding;
use crate::vqse::{estimate_from_diagonal, optimize_with, EigenEstimate, Ideal, LoopConfig};

/// Everything needed to train one ansatz on a given state.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSettings {
    pub layers: usize,
    pub block: BlockKind,
    pub loop_config: LoopConfig,
    /// Explicit `(r1, delta)` for the local weights; defaults otherwise.
    pub local: Option<(f64, f64)>,
    pub m_hat: Option<usize>,
}

impl RunSettings {
    pub fn m(&self) -> usize {
        self.loop_config.m
    }

    pub fn local_weights(&self, n: usize) -> Result<LocalWeights> {
        match self.local {
            Some((r1, delta)) => LocalWeights::arithmetic(n, r1, delta, self.m()),
            None => default_local_weights(n, self.m()),
        }
    }
}

/// One row of a per-run trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub run: usize,
    pub iter: usize,
    pub t: f64,
    pub cost: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Present only at Hamiltonian-update iterations.
    pub bound_cost: Option<f64>,
    pub bound_purity: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub theta: Vec<f64>,
    pub estimate: EigenEstimate,
    /// Top-`m_hat` estimates behind the purity bound.
    pub wide: Vec<f64>,
    pub report: ErrorReport,
    pub initial_cost: f64,
    pub final_cost: f64,
    /// Smallest `ε_λ` and `ε_r` seen along the trace.
    pub min_eps_lambda: f64,
    pub min_eps_rel: f64,
    pub purity: f64,
    /// `E_1 ≤ … ≤ E_{m+1}` of the final Hamiltonian.
    pub energies: Vec<f64>,
    pub trace: Vec<TraceRow>,
}

/// Cost and purity bounds for the current iterate under Hamiltonian `h`.
fn bounds_at(h: &Hamiltonian, cost: f64, diag: &[f64], purity: f64, m: usize, m_hat: usize) -> Result<(f64, f64)> {
    let n = h.n_qubits();
    let energies: Vec<f64> = sorted_levels(h).iter().take(m + 1).map(|l| l.0).collect();
    let bc = bound_from_cost(cost, &energies, purity)?;
    let mut sorted = diag.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok((bc.value, bound_from_purity(purity, &sorted, n, m_hat)?))
}

/// Trains one seeded ansatz on `rho` and scores it against the exact spectrum.
pub fn vqse_run(
    rho: &DensityMatrix,
    exact: &[f64],
    settings: &RunSettings,
    run: usize,
    seed: u64,
) -> Result<RunRecord> {
    let n = rho.n_qubits();
    let m = settings.m();
    if m >= 1usize << n {
        return Err(Error::InvalidArgument(format!(
            "m = {m} leaves no level above the targets on {n} qubits"
        )));
    }
    let m_hat = settings.m_hat.unwrap_or_else(|| default_m_hat(m, n));
    if m_hat < m {
        return Err(Error::InvalidArgument(format!("m_hat = {m_hat} below m = {m}")));
    }
    let local = settings.local_weights(n)?;
    let p = purity(rho);
    let cfg = &settings.loop_config;

    let mut rng = seeding::stream(seed, 0);
    let ansatz = LayeredAnsatz::random(n, settings.layers, settings.block, &mut rng)?;

    let mut trace = Vec::with_capacity(cfg.schedule.n_max());
    let mut failure = None;
    let outcome = optimize_with(&Ideal, rho, ansatz, &local, cfg, seed, |snap| {
        let diag = snap.rho_tilde.diagonal();
        let mut sorted = diag.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let row = eigen_errors(exact, &sorted, m).and_then(|errs| {
            let at_update = cfg.schedule.is_update(snap.record.iter);
            let (bound_cost, bound_purity) = if at_update {
                let (bc, bp) = bounds_at(snap.hamiltonian, snap.record.cost, &diag, p, m, m_hat)?;
                (Some(bc), Some(bp))
            } else {
                (None, None)
            };
            Ok(TraceRow {
                run,
                iter: snap.record.iter,
                t: snap.record.t,
                cost: snap.record.cost,
                eps_abs: errs.eps_lambda,
                eps_rel: errs.eps_rel,
                bound_cost,
                bound_purity,
            })
        });
        match row {
            Ok(r) => trace.push(r),
            Err(e) => failure = failure.take().or(Some(e)),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }

    let rho_tilde = outcome.ansatz.apply(rho)?;
    let diag = rho_tilde.diagonal();
    let mut read_rng = seeding::stream(seed, 1);
    let wide = estimate_from_diagonal(&diag, n, m_hat, cfg.shots, &mut read_rng)?;
    let estimate = EigenEstimate {
        lambdas: wide.lambdas[..m].to_vec(),
        bitstrings: wide.bitstrings[..m].to_vec(),
        shots_used: wide.shots_used,
        padded: wide.padded,
    };
    let errs = eigen_errors(exact, &estimate.lambdas, m)?;
    let eps_v = eigenvector_error(rho, &outcome.ansatz, &estimate)?;
    let final_cost = outcome.final_cost();
    let energies: Vec<f64> = sorted_levels(&outcome.hamiltonian)
        .iter()
        .take(m + 1)
        .map(|l| l.0)
        .collect();
    let bc = bound_from_cost(final_cost, &energies, p)?;
    let report = ErrorReport {
        eps_lambda: errs.eps_lambda,
        eps_rel: errs.eps_rel,
        eps_v,
        bound_cost: bc.value,
        bound_cost_degenerate: bc.degenerate,
        bound_purity: bound_from_purity(p, &wide.lambdas, n, m_hat)?,
        bound_purity_at_m: bound_from_purity(p, &wide.lambdas, n, m)?,
        m_hat,
        zero_terms: errs.zero_terms,
    };
    let min_of = |f: fn(&TraceRow) -> f64| trace.iter().map(f).fold(f64::INFINITY, f64::min);
    Ok(RunRecord {
        run,
        seed,
        theta: outcome.ansatz.theta().to_vec(),
        estimate,
        wide: wide.lambdas,
        initial_cost: outcome.initial_cost,
        final_cost,
        min_eps_lambda: min_of(|r| r.eps_abs).min(report.eps_lambda),
        min_eps_rel: min_of(|r| r.eps_rel).min(report.eps_rel),
        purity: p,
        energies,
        trace,
        report,
    })
}

/// `runs` independent seeded runs on the same state, in parallel.
pub fn vqse_runs(
    rho: &DensityMatrix,
    settings: &RunSettings,
    runs: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<RunRecord>)> {
    let exact = exact_eigs(rho)?.values;
    let records = (0..runs)
        .into_par_iter()
        .map(|run| vqse_run(rho, &exact, settings, run, seeding::child_seed(seed, run as u64 + 1)))
        .collect::<Result<Vec<_>>>()?;
    Ok((exact, records))
}

/// Index of the run with the smallest final `ε_λ`.
pub fn best_by_error(records: &[RunRecord]) -> Option<usize> {
    (0..records.len()).min_by(|&a, &b| records[a].report.eps_lambda.total_cmp(&records[b].report.eps_lambda))
}

/// Index of the run with the smallest final cost.
pub fn best_by_cost(records: &[RunRecord]) -> Option<usize> {
    (0..records.len()).min_by(|&a, &b| records[a].final_cost.total_cmp(&records[b].final_cost))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PcaConfig {
    pub n: usize,
    pub n_ancilla: usize,
    pub settings: RunSettings,
    pub runs: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct PcaResult {
    pub rho: DensityMatrix,
    pub exact: Vec<f64>,
    pub runs: Vec<RunRecord>,
}

/// Random rank-`2^n_ancilla` state and `runs` seeded trainings on it.
pub fn pca_experiment(cfg: &PcaConfig) -> Result<PcaResult> {
    let rho = random_low_rank_state(cfg.n, cfg.n_ancilla, seeding::child_seed(cfg.seed, 0))?;
    let (exact, runs) = vqse_runs(&rho, &cfg.settings, cfg.runs, cfg.seed)?;
    Ok(PcaResult { rho, exact, runs })
}

/// Runs-per-success for each target error.
pub fn runs_per_success_table(records: &[RunRecord], targets: &[f64]) -> Vec<(f64, f64)> {
    let errors: Vec<f64> = records.iter().map(|r| r.report.eps_lambda).collect();
    targets
        .iter()
        .map(|&t| (t, crate::metrics::runs_per_success(&errors, t)))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct XyConfig {
    /// Chain parameters; the field `h` is overridden by each grid point.
    pub chain: SpinChainSpec,
    pub h_grid: Vec<f64>,
    pub selection: GroundSelection,
    pub settings: RunSettings,
    pub runs: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct XyPoint {
    pub h: f64,
    pub ground_energy: f64,
    pub exact: Vec<f64>,
    pub runs: Vec<RunRecord>,
    /// Index into `runs` of the lowest final cost.
    pub best: usize,
}

impl XyPoint {
    pub fn best_run(&self) -> &RunRecord {
        &self.runs[self.best]
    }
}

/// VQSE on the reduced ground state at every grid field.
pub fn xy_sweep(cfg: &XyConfig) -> Result<Vec<XyPoint>> {
    cfg.h_grid
        .par_iter()
        .enumerate()
        .map(|(i, &h)| {
            let ground = xy_ground(&cfg.chain.with_field(h), cfg.selection)?;
            let (exact, runs) = vqse_runs(
                &ground.reduced,
                &cfg.settings,
                cfg.runs,
                seeding::child_seed(cfg.seed, i as u64),
            )?;
            let best = best_by_cost(&runs).ok_or_else(|| Error::Experiment("no runs requested".into()))?;
            Ok(XyPoint {
                h,
                ground_energy: ground.energy,
                exact,
                runs,
                best,
            })
        })
        .collect()
}
