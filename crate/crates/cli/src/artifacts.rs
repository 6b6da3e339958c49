//! CSV traces, text summaries and replay manifests.
//!
//! Numbers are written with `{:e}`, the shortest representation that parses
//! back to the same `f64`, so artifacts are locale-free and bit-stable.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use sha2::{Digest, Sha256};
use vqse_core::experiments::{RunRecord, RunSettings, TraceRow, WStateRun};

use crate::config::{ConfigError, Document};

pub const TRACE_HEADER: &str = "run,iter,t,cost,eps_abs,eps_rel,bound_cost,bound_purity";
pub const XY_TRACE_HEADER: &str = "point,h,run,iter,t,cost,eps_abs,eps_rel,bound_cost,bound_purity";
pub const WSTATE_TRACE_HEADER: &str = "run,iter,cost,fidelity,z1";
pub const SCAN_HEADER: &str = "h,ground_energy,gap,degeneracy,defect";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, contents: String) -> Self {
        Self {
            name: name.into(),
            contents,
        }
    }

    pub fn sha256(&self) -> String {
        sha256_hex(self.contents.as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn list(xs: &[f64]) -> String {
    xs.iter().map(|&x| num(x)).collect::<Vec<_>>().join(",")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn trace_fields(r: &TraceRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        r.run,
        r.iter,
        num(r.t),
        num(r.cost),
        num(r.eps_abs),
        num(r.eps_rel),
        opt(r.bound_cost),
        opt(r.bound_purity)
    )
}

pub fn trace_csv<'a>(rows: impl IntoIterator<Item = &'a TraceRow>) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for r in rows {
        out.push_str(&trace_fields(r));
        out.push('\n');
    }
    out
}

pub fn xy_trace_csv<'a>(rows: impl IntoIterator<Item = (usize, f64, &'a TraceRow)>) -> String {
    let mut out = format!("{XY_TRACE_HEADER}\n");
    for (point, h, r) in rows {
        let _ = writeln!(out, "{point},{},{}", num(h), trace_fields(r));
    }
    out
}

pub fn wstate_trace_csv(runs: &[WStateRun]) -> String {
    let mut out = format!("{WSTATE_TRACE_HEADER}\n");
    for run in runs {
        for r in &run.trace {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                run.run,
                r.iter,
                num(r.cost),
                num(r.fidelity),
                r.z1
            );
        }
    }
    out
}

/// `key = value` text grouped under `[section]` headers.
#[derive(Clone, Debug, Default)]
pub struct Summary {
    text: String,
}

impl Summary {
    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.text, "{key} = {value}");
        self
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        let _ = writeln!(self.text, "\n[{name}]");
        self
    }

    pub fn finish(self) -> String {
        self.text
    }
}

pub fn settings_summary(s: &mut Summary, settings: &RunSettings) {
    let lc = &settings.loop_config;
    s.kv("cost", lc.variant)
        .kv("layers", settings.layers)
        .kv("block", settings.block)
        .kv("m", lc.m)
        .kv("n_max", lc.schedule.n_max())
        .kv("s", lc.schedule.interval())
        .kv("optimizer", lc.optimizer.kind)
        .kv("lr", num(lc.optimizer.lr))
        .kv("shots", lc.shots);
}

/// Everything `verify` needs to recompute the bounds of one run.
pub fn run_summary(s: &mut Summary, name: &str, n: usize, m: usize, rec: &RunRecord) {
    let rep = &rec.report;
    let bitstrings: Vec<String> = rec.estimate.bitstrings.iter().map(ToString::to_string).collect();
    s.section(name)
        .kv("seed", rec.seed)
        .kv("n", n)
        .kv("m", m)
        .kv("m_hat", rep.m_hat)
        .kv("theta", list(&rec.theta))
        .kv("bitstrings", bitstrings.join(","))
        .kv("lambdas", list(&rec.estimate.lambdas))
        .kv("lambdas_m_hat", list(&rec.wide))
        .kv("shots_used", rec.estimate.shots_used)
        .kv("padded", rec.estimate.padded)
        .kv("purity", num(rec.purity))
        .kv("initial_cost", num(rec.initial_cost))
        .kv("final_cost", num(rec.final_cost))
        .kv("energies", list(&rec.energies))
        .kv("eps_lambda", num(rep.eps_lambda))
        .kv("eps_rel", num(rep.eps_rel))
        .kv("eps_v", num(rep.eps_v))
        .kv("zero_terms", rep.zero_terms)
        .kv("bound_cost", num(rep.bound_cost))
        .kv("bound_cost_degenerate", rep.bound_cost_degenerate)
        .kv("bound_purity", num(rep.bound_purity))
        .kv("bound_purity_at_m", num(rep.bound_purity_at_m))
        .kv("min_eps_lambda", num(rec.min_eps_lambda))
        .kv("min_eps_rel", num(rec.min_eps_rel));
}

/// Replay record: what ran, with which seed, and the hash of every output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub experiment: String,
    pub seed: u64,
    pub shots: usize,
    /// Directory that relative paths inside the config resolve against.
    pub config_dir: String,
    pub config: String,
    pub artifacts: Vec<(String, String)>,
}

const CONFIG_MARKER: &str = "[config]";

impl Manifest {
    pub fn render(&self) -> String {
        let mut s = Summary::default();
        s.section("manifest")
            .kv("experiment", &self.experiment)
            .kv("seed", self.seed)
            .kv("shots", self.shots)
            .kv("config_sha256", sha256_hex(self.config.as_bytes()))
            .kv("config_dir", &self.config_dir);
        s.section("artifacts");
        for (name, hash) in &self.artifacts {
            s.kv(name, hash);
        }
        let mut text = s.finish();
        let _ = write!(text, "\n{CONFIG_MARKER}\n{}", self.config);
        text.trim_start().to_string()
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let (head, config) = text
            .split_once(&format!("\n{CONFIG_MARKER}\n"))
            .ok_or_else(|| ConfigError::general("manifest has no embedded [config] block"))?;
        let doc = Document::parse(head)?;
        doc.restrict_sections(&["manifest", "artifacts"])?;
        let m = doc
            .section("manifest")
            .ok_or_else(|| ConfigError::general("manifest has no [manifest] section"))?;
        let config = config.to_string();
        let stated: String = m.require("config_sha256")?;
        if stated != sha256_hex(config.as_bytes()) {
            return Err(ConfigError::general("embedded config does not match config_sha256"));
        }
        let artifacts = doc
            .section("artifacts")
            .map(|s| s.entries.iter().map(|e| (e.key.clone(), e.value.clone())).collect())
            .unwrap_or_default();
        Ok(Self {
            experiment: m.require("experiment")?,
            seed: m.require("seed")?,
            shots: m.require("shots")?,
            config_dir: m.require("config_dir")?,
            config,
            artifacts,
        })
    }
}

pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    for a in artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.contents).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
