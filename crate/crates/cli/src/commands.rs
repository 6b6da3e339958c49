use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use rayon::prelude::*;
use vqse_core::experiments::{
    best_by_cost, best_by_error, locate_factorization, pca_experiment, runs_per_success_table, separability_defect,
    vqse_runs, w_state_mitigation_run, xy_ground, RunRecord,
};
use vqse_core::metrics::{bound_from_cost, bound_from_purity};
use vqse_core::vqse::covered_lambda;

use crate::artifacts::{
    list, num, run_summary, settings_summary, trace_csv, write_all, wstate_trace_csv, xy_trace_csv, Artifact, Manifest,
    Summary, SCAN_HEADER,
};
use crate::config::{ConfigError, Document, Section};
use crate::plan::{load, load_scan, Experiment, LoadedPlan, Overrides, Plan, ScanPlan};

const RPS_TARGETS: [f64; 6] = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12];
pub const SWEEP: &str = "sweep";

fn shot_lines(s: &mut Summary, loaded: &LoadedPlan) {
    if loaded.shots > 0 {
        let t = loaded.tolerance;
        s.kv("c", num(t.c))
            .kv("delta", num(t.delta))
            .kv("covered_lambda", num(covered_lambda(loaded.shots as u64, t.c, t.delta)));
    }
}

fn vqse_summary(s: &mut Summary, n: usize, m: usize, exact: &[f64], runs: &[RunRecord], prefix: &str) {
    let purity = runs.first().map_or(f64::NAN, |r| r.purity);
    s.kv("purity", num(purity))
        .kv("exact", list(&exact[..exact.len().min(2 * m)]));
    if let Some(b) = best_by_error(runs) {
        s.kv("best_by_error", b)
            .kv("best_eps_lambda", num(runs[b].report.eps_lambda));
    }
    if let Some(b) = best_by_cost(runs) {
        s.kv("best_by_cost", b);
    }
    let rps: Vec<String> = runs_per_success_table(runs, &RPS_TARGETS)
        .into_iter()
        .map(|(t, r)| format!("{}:{}", num(t), if r.is_finite() { num(r) } else { "inf".into() }))
        .collect();
    s.kv("runs_per_success", rps.join(","));
    for rec in runs {
        run_summary(s, &format!("{prefix}run.{}", rec.run), n, m, rec);
    }
}

/// Runs a loaded plan and renders its artifacts (nothing touches disk).
pub fn execute(experiment: Experiment, loaded: &LoadedPlan) -> anyhow::Result<Vec<Artifact>> {
    let name = experiment.name();
    let mut s = Summary::default();
    s.section("summary").kv("experiment", name).kv("seed", loaded.seed);
    shot_lines(&mut s, loaded);
    let trace = match &loaded.plan {
        Plan::Pca(cfg) => {
            let res = pca_experiment(cfg)?;
            s.kv("n", cfg.n).kv("n_ancilla", cfg.n_ancilla).kv("runs", cfg.runs);
            settings_summary(&mut s, &cfg.settings);
            vqse_summary(&mut s, cfg.n, cfg.settings.m(), &res.exact, &res.runs, "");
            trace_csv(res.runs.iter().flat_map(|r| &r.trace))
        }
        Plan::Custom(cfg) => {
            let (exact, runs) = vqse_runs(&cfg.rho, &cfg.settings, cfg.runs, cfg.seed)?;
            let n = cfg.rho.n_qubits();
            s.kv("state", cfg.state_path.display()).kv("n", n).kv("runs", cfg.runs);
            settings_summary(&mut s, &cfg.settings);
            vqse_summary(&mut s, n, cfg.settings.m(), &exact, &runs, "");
            trace_csv(runs.iter().flat_map(|r| &r.trace))
        }
        Plan::Xy(cfg) => {
            let points = vqse_core::experiments::xy_sweep(cfg)?;
            let c = &cfg.chain;
            s.kv("N", c.sites)
                .kv("keep", c.keep)
                .kv("Jx", num(c.jx))
                .kv("Jy", num(c.jy))
                .kv("gamma", num(c.gamma))
                .kv("h_grid", list(&cfg.h_grid))
                .kv("runs", cfg.runs);
            settings_summary(&mut s, &cfg.settings);
            let m = cfg.settings.m();
            for (i, p) in points.iter().enumerate() {
                let best = p.best_run();
                s.section(&format!("point.{i}"))
                    .kv("h", num(p.h))
                    .kv("ground_energy", num(p.ground_energy))
                    .kv("best_lambdas", list(&best.estimate.lambdas))
                    .kv("best_eps_rel", num(best.report.eps_rel));
                vqse_summary(&mut s, c.keep, m, &p.exact, &p.runs, &format!("point.{i}."));
            }
            xy_trace_csv(points.iter().enumerate().flat_map(|(i, p)| {
                p.runs
                    .iter()
                    .flat_map(move |r| r.trace.iter().map(move |row| (i, p.h, row)))
            }))
        }
        Plan::Wstate(cfg) => {
            let res = w_state_mitigation_run(cfg)?;
            s.kv("p1q", num(cfg.noise.p_depol_1q))
                .kv("p2q", num(cfg.noise.p_depol_2q))
                .kv("gamma_ad", num(cfg.noise.gamma_ad))
                .kv("layers", cfg.layers)
                .kv("block", cfg.block)
                .kv("iters", cfg.iters)
                .kv("update_every", cfg.update_every)
                .kv("baseline_fidelity", num(res.baseline))
                .kv("mean_final_fidelity", num(res.mean_final_fidelity()));
            for run in &res.runs {
                let z1 = run.trace.last().map(|r| r.z1.to_string()).unwrap_or_default();
                s.section(&format!("run.{}", run.run))
                    .kv("theta", list(&run.theta))
                    .kv("z1", z1)
                    .kv("initial_cost", num(run.initial_cost))
                    .kv("final_cost", num(run.final_cost()))
                    .kv("initial_fidelity", num(run.initial_fidelity))
                    .kv("final_fidelity", num(run.final_fidelity()));
            }
            wstate_trace_csv(&res.runs)
        }
    };
    Ok(vec![
        Artifact::new(format!("{name}_trace.csv"), trace),
        Artifact::new(format!("{name}_summary.txt"), s.finish()),
    ])
}

/// Field scan of the exact reduced ground state plus the located factorizing field.
pub fn execute_scan(plan: &ScanPlan) -> anyhow::Result<Vec<Artifact>> {
    let step = (plan.hi - plan.lo) / (plan.points - 1) as f64;
    let rows = (0..plan.points)
        .into_par_iter()
        .map(|i| {
            let h = plan.lo + i as f64 * step;
            let g = xy_ground(&plan.chain.with_field(h), plan.selection)?;
            let defect = separability_defect(&g.reduced)?;
            Ok(format!(
                "{},{},{},{},{}\n",
                num(h),
                num(g.energy),
                num(g.gap),
                g.degeneracy,
                num(defect)
            ))
        })
        .collect::<vqse_core::Result<Vec<_>>>()?;
    let csv = format!("{SCAN_HEADER}\n{}", rows.concat());
    let mut s = Summary::default();
    s.section("summary")
        .kv("experiment", SWEEP)
        .kv("N", plan.chain.sites)
        .kv("keep", plan.chain.keep)
        .kv("Jx", num(plan.chain.jx))
        .kv("Jy", num(plan.chain.jy))
        .kv("gamma", num(plan.chain.gamma))
        .kv(
            "scan",
            format!("{}..{} ({} points)", num(plan.lo), num(plan.hi), plan.points),
        );
    match locate_factorization(
        &plan.chain,
        plan.lo,
        plan.hi,
        plan.points,
        plan.tolerance,
        plan.selection,
    ) {
        Ok(f) => s.kv("factorizing_field", num(f.h)).kv("defect", num(f.defect)),
        Err(e) => s.kv("factorizing_field", "none").kv("reason", e),
    };
    Ok(vec![
        Artifact::new("xy_scan.csv", csv),
        Artifact::new("xy_scan_summary.txt", s.finish()),
    ])
}

fn read_config(path: &Path) -> anyhow::Result<(String, Document, PathBuf)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let doc = Document::parse(&text).map_err(|e| ConfigError {
        message: format!("{}: {}", path.display(), e.message),
        ..e
    })?;
    let dir = path
        .parent()
        .map(|p| if p.as_os_str().is_empty() { Path::new(".") } else { p })
        .unwrap_or(Path::new("."));
    let dir = std::fs::canonicalize(dir).with_context(|| format!("resolving {}", dir.display()))?;
    Ok((text, doc, dir))
}

fn produce(
    label: &str,
    config: String,
    config_dir: &Path,
    seed: u64,
    shots: usize,
    out: &Path,
    artifacts: Vec<Artifact>,
) -> anyhow::Result<Manifest> {
    let manifest = Manifest {
        experiment: label.to_string(),
        seed,
        shots,
        config_dir: config_dir.display().to_string(),
        config,
        artifacts: artifacts.iter().map(|a| (a.name.clone(), a.sha256())).collect(),
    };
    let mut all = artifacts;
    all.push(Artifact::new("manifest.txt", manifest.render()));
    write_all(out, &all)?;
    Ok(manifest)
}

pub fn run(experiment: Experiment, config: &Path, out: &Path, overrides: Overrides) -> anyhow::Result<Manifest> {
    let (text, doc, dir) = read_config(config)?;
    let loaded = load(&doc, experiment, overrides, &dir)?;
    let artifacts = execute(experiment, &loaded)?;
    produce(experiment.name(), text, &dir, loaded.seed, loaded.shots, out, artifacts)
}

pub fn sweep(config: &Path, out: &Path) -> anyhow::Result<Manifest> {
    let (text, doc, dir) = read_config(config)?;
    let plan = load_scan(&doc)?;
    produce(SWEEP, text, &dir, 0, 0, out, execute_scan(&plan)?)
}

/// Re-runs a manifest into `out` and fails unless every artifact hash matches.
pub fn replay(manifest_path: &Path, out: &Path) -> anyhow::Result<Manifest> {
    let text = std::fs::read_to_string(manifest_path)
        .with_context(|| format!("reading manifest {}", manifest_path.display()))?;
    let recorded = Manifest::parse(&text)?;
    let doc = Document::parse(&recorded.config)?;
    let dir = PathBuf::from(&recorded.config_dir);
    let artifacts = if recorded.experiment == SWEEP {
        execute_scan(&load_scan(&doc)?)?
    } else {
        let experiment: Experiment = recorded.experiment.parse().map_err(ConfigError::general)?;
        let overrides = Overrides {
            seed: Some(recorded.seed),
            shots: Some(recorded.shots),
        };
        execute(experiment, &load(&doc, experiment, overrides, &dir)?)?
    };
    let fresh = produce(
        &recorded.experiment,
        recorded.config.clone(),
        &dir,
        recorded.seed,
        recorded.shots,
        out,
        artifacts,
    )?;
    let mismatched: Vec<&str> = recorded
        .artifacts
        .iter()
        .filter(|(name, hash)| fresh.artifacts.iter().all(|(n, h)| n != name || h != hash))
        .map(|(name, _)| name.as_str())
        .collect();
    if !mismatched.is_empty() {
        bail!("replay differs from manifest in: {}", mismatched.join(", "));
    }
    Ok(fresh)
}

/// Per-run outcome of re-checking the stored bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct RunCheck {
    pub name: String,
    pub bound_cost: f64,
    pub cost_degenerate: bool,
    pub bound_purity: f64,
    pub eps_lambda: f64,
    pub eps_v: f64,
    pub violations: Vec<&'static str>,
}

impl RunCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn render(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let mut line = format!(
            "{} {status}: eps_lambda margins (cost {}, purity {}), eps_v margins (cost {}, purity {})",
            self.name,
            num(self.bound_cost - self.eps_lambda),
            num(self.bound_purity - self.eps_lambda),
            num(self.bound_cost - self.eps_v),
            num(self.bound_purity - self.eps_v),
        );
        if self.cost_degenerate {
            line.push_str(" [bound_cost degenerate: E_{m+1} <= C, purity bound still checked]");
        }
        if !self.passed() {
            line.push_str(&format!(" violated: {}", self.violations.join("; ")));
        }
        line
    }
}

fn check_run(sec: &Section, slack: f64) -> anyhow::Result<RunCheck> {
    let n: usize = sec.require("n")?;
    let m_hat: usize = sec.require("m_hat")?;
    let purity: f64 = sec.require("purity")?;
    let cost: f64 = sec.require("final_cost")?;
    let energies: Vec<f64> = sec.get_list("energies")?.unwrap_or_default();
    let wide: Vec<f64> = sec.get_list("lambdas_m_hat")?.unwrap_or_default();
    let eps_lambda: f64 = sec.require("eps_lambda")?;
    let eps_v: f64 = sec.require("eps_v")?;
    let corrupt = |e: vqse_core::Error| ConfigError::at(sec.line, format!("[{}] {e}", sec.name));
    let bc = bound_from_cost(cost, &energies, purity).map_err(corrupt)?;
    let bp = bound_from_purity(purity, &wide, n, m_hat).map_err(corrupt)?;
    let violations = [
        (eps_lambda, bc.value, "eps_lambda <= bound_cost"),
        (eps_lambda, bp, "eps_lambda <= bound_purity"),
        (eps_v, bc.value, "eps_v <= bound_cost"),
        (eps_v, bp, "eps_v <= bound_purity"),
    ]
    .into_iter()
    .filter(|&(value, bound, _)| value > bound + slack)
    .map(|(_, _, name)| name)
    .collect();
    Ok(RunCheck {
        name: sec.name.clone(),
        bound_cost: bc.value,
        cost_degenerate: bc.degenerate,
        bound_purity: bp,
        eps_lambda,
        eps_v,
        violations,
    })
}

/// Recomputes both bounds for every run recorded in a summary file.
pub fn verify(summary: &Path, slack: f64) -> anyhow::Result<Vec<RunCheck>> {
    let text = std::fs::read_to_string(summary).with_context(|| format!("reading summary {}", summary.display()))?;
    let doc = Document::parse(&text)?;
    let checks = doc
        .sections
        .iter()
        .filter(|s| s.entry("eps_v").is_some())
        .map(|s| check_run(s, slack))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if checks.is_empty() {
        return Err(ConfigError::general(format!("{} holds no verifiable runs", summary.display())).into());
    }
    Ok(checks)
}
