//! Typed experiment plans built from a parsed config document.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use vqse_core::experiments::{
    GroundSelection, NoiseSpec, PcaConfig, RunSettings, SpinChainSpec, WStateConfig, XyConfig,
};
use vqse_core::{BlockKind, CostVariant, DensityMatrix, LoopConfig, OptimizerConfig, OptimizerKind, StepwiseSchedule};

use crate::config::{ConfigError, Document, Section};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Experiment {
    Pca,
    Xy,
    Wstate,
    Custom,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [Experiment::Pca, Experiment::Xy, Experiment::Wstate, Experiment::Custom];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Pca => "pca",
            Experiment::Xy => "xy",
            Experiment::Wstate => "wstate",
            Experiment::Custom => "custom",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub shots: Option<usize>,
}

/// Confidence parameters used to report which eigenvalues the shot budget covers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShotTolerance {
    pub c: f64,
    pub delta: f64,
}

#[derive(Clone, Debug)]
pub struct CustomPlan {
    pub state_path: PathBuf,
    pub rho: DensityMatrix,
    pub settings: RunSettings,
    pub runs: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub enum Plan {
    Pca(PcaConfig),
    Xy(XyConfig),
    Wstate(WStateConfig),
    Custom(CustomPlan),
}

#[derive(Clone, Debug)]
pub struct LoadedPlan {
    pub plan: Plan,
    pub seed: u64,
    pub shots: usize,
    pub tolerance: ShotTolerance,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanPlan {
    pub chain: SpinChainSpec,
    pub selection: GroundSelection,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub tolerance: f64,
}

const LOOP_KEYS: &[&str] = &[
    "m",
    "cost",
    "layers",
    "block",
    "n_max",
    "s",
    "optimizer",
    "lr",
    "beta1",
    "beta2",
    "eps",
    "shots",
    "runs",
    "seed",
    "c",
    "delta",
    "r1",
    "r_step",
    "m_hat",
];
const PCA_KEYS: &[&str] = &["n", "n_ancilla"];
const XY_KEYS: &[&str] = &[
    "N",
    "keep",
    "Jx",
    "Jy",
    "gamma",
    "h_grid",
    "selection",
    "scan_lo",
    "scan_hi",
    "scan_points",
    "tolerance",
];
const WSTATE_KEYS: &[&str] = &[
    "p1q",
    "p2q",
    "gamma_ad",
    "layers",
    "block",
    "iters",
    "update_every",
    "m",
    "optimizer",
    "lr",
    "beta1",
    "beta2",
    "eps",
    "runs",
    "seed",
];
const CUSTOM_KEYS: &[&str] = &["state"];

fn section<'a>(doc: &'a Document, name: &str) -> Result<&'a Section, ConfigError> {
    doc.restrict_sections(&["pca", "xy", "wstate", "custom"])?;
    doc.section(name)
        .ok_or_else(|| ConfigError::general(format!("config has no [{name}] section")))
}

fn keys(own: &[&'static str], shared: &[&'static str]) -> Vec<&'static str> {
    own.iter().chain(shared).copied().collect()
}

fn invalid(sec: &Section, key: &str, message: impl fmt::Display) -> ConfigError {
    let line = sec.entry(key).map_or(sec.line, |e| e.line);
    ConfigError::at(line, format!("`{key}`: {message}"))
}

fn optimizer(sec: &Section) -> Result<OptimizerConfig, ConfigError> {
    let base = OptimizerConfig::default();
    let kind: OptimizerKind = sec.get_or("optimizer", base.kind)?;
    let cfg = OptimizerConfig {
        kind,
        lr: sec.get_or("lr", base.lr)?,
        beta1: sec.get_or("beta1", base.beta1)?,
        beta2: sec.get_or("beta2", base.beta2)?,
        eps: sec.get_or("eps", base.eps)?,
    };
    if !(cfg.lr > 0.0) {
        return Err(invalid(sec, "lr", "must be positive"));
    }
    Ok(cfg)
}

fn run_settings(sec: &Section, shots: Option<usize>) -> Result<(RunSettings, usize, u64, ShotTolerance), ConfigError> {
    let m: usize = sec.require("m")?;
    let n_max: usize = sec.get_or("n_max", 300)?;
    let s: usize = sec.get_or("s", 30)?;
    let schedule = StepwiseSchedule::new(n_max, s).map_err(|e| invalid(sec, "s", e))?;
    let shots = match shots {
        Some(v) => v,
        None => sec.get_or("shots", 0)?,
    };
    let local = match (sec.get::<f64>("r1")?, sec.get::<f64>("r_step")?) {
        (Some(r1), Some(step)) => Some((r1, step)),
        (None, None) => None,
        _ => return Err(ConfigError::at(sec.line, "`r1` and `r_step` must be given together")),
    };
    let settings = RunSettings {
        layers: sec.get_or("layers", 2)?,
        block: sec.get_or("block", BlockKind::RyCz)?,
        loop_config: LoopConfig {
            variant: sec.get_or("cost", CostVariant::Adaptive)?,
            m,
            schedule,
            optimizer: optimizer(sec)?,
            shots,
        },
        local,
        m_hat: sec.get("m_hat")?,
    };
    if settings.layers == 0 {
        return Err(invalid(sec, "layers", "must be at least 1"));
    }
    if m == 0 {
        return Err(invalid(sec, "m", "must be at least 1"));
    }
    let tolerance = ShotTolerance {
        c: sec.get_or("c", 0.1)?,
        delta: sec.get_or("delta", 0.01)?,
    };
    if !(tolerance.c > 0.0) || !(tolerance.delta > 0.0 && tolerance.delta < 1.0) {
        return Err(ConfigError::at(sec.line, "`c` must be positive and `delta` in (0, 1)"));
    }
    let runs: usize = sec.get_or("runs", 10)?;
    if runs == 0 {
        return Err(invalid(sec, "runs", "must be at least 1"));
    }
    Ok((settings, runs, sec.get_or("seed", 0)?, tolerance))
}

fn chain(sec: &Section) -> Result<(SpinChainSpec, GroundSelection), ConfigError> {
    let spec = SpinChainSpec {
        sites: sec.get_or("N", 8)?,
        jx: sec.get_or("Jx", -1.0)?,
        jy: sec.get_or("Jy", -0.5)?,
        h: 0.0,
        gamma: sec.get_or("gamma", std::f64::consts::FRAC_PI_3)?,
        keep: sec.get_or("keep", 4)?,
    };
    spec.validate().map_err(|e| ConfigError::at(sec.line, e.to_string()))?;
    let selection = match sec.get::<String>("selection")?.as_deref() {
        None | Some("lexicographic") => GroundSelection::Lexicographic,
        Some("doublet") => GroundSelection::MostSeparableDoublet,
        Some(other) => {
            return Err(invalid(
                sec,
                "selection",
                format!("expected `lexicographic` or `doublet`, found `{other}`"),
            ))
        }
    };
    Ok((spec, selection))
}

/// Reads a whitespace-separated real matrix of side `2^n`.
pub fn read_state(path: &Path) -> anyhow::Result<DensityMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(str::parse).collect::<Result<Vec<f64>, _>>())
        .collect::<Result<_, _>>()
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    let dim = rows.len();
    if dim < 2 || !dim.is_power_of_two() || rows.iter().any(|r| r.len() != dim) {
        anyhow::bail!("{}: expected a square matrix with power-of-two side", path.display());
    }
    let n = dim.trailing_zeros() as usize;
    let data = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
    Ok(DensityMatrix::from_real(n, &data)?)
}

pub fn load(
    doc: &Document,
    experiment: Experiment,
    overrides: Overrides,
    base_dir: &Path,
) -> anyhow::Result<LoadedPlan> {
    let sec = section(doc, experiment.name())?;
    let loaded = match experiment {
        Experiment::Pca => {
            sec.restrict_keys(&keys(PCA_KEYS, LOOP_KEYS))?;
            let (settings, runs, seed, tolerance) = run_settings(sec, overrides.shots)?;
            let n: usize = sec.require("n")?;
            let seed = overrides.seed.unwrap_or(seed);
            LoadedPlan {
                shots: settings.loop_config.shots,
                plan: Plan::Pca(PcaConfig {
                    n,
                    n_ancilla: sec.get_or("n_ancilla", 4)?,
                    settings,
                    runs,
                    seed,
                }),
                seed,
                tolerance,
            }
        }
        Experiment::Xy => {
            sec.restrict_keys(&keys(XY_KEYS, LOOP_KEYS))?;
            let (settings, runs, seed, tolerance) = run_settings(sec, overrides.shots)?;
            let (chain, selection) = chain(sec)?;
            let h_grid: Vec<f64> = sec
                .get_list("h_grid")?
                .ok_or_else(|| ConfigError::at(sec.line, "missing required key `h_grid` in [xy]"))?;
            let seed = overrides.seed.unwrap_or(seed);
            LoadedPlan {
                shots: settings.loop_config.shots,
                plan: Plan::Xy(XyConfig {
                    chain,
                    h_grid,
                    selection,
                    settings,
                    runs,
                    seed,
                }),
                seed,
                tolerance,
            }
        }
        Experiment::Wstate => {
            sec.restrict_keys(WSTATE_KEYS)?;
            let base = WStateConfig::default();
            let iters: usize = sec.get_or("iters", base.iters)?;
            let update_every: usize = sec.get_or("update_every", base.update_every)?;
            StepwiseSchedule::new(iters, update_every).map_err(|e| invalid(sec, "update_every", e))?;
            let optimizer = if ["optimizer", "lr", "beta1", "beta2", "eps"]
                .iter()
                .any(|k| sec.entry(k).is_some())
            {
                OptimizerConfig {
                    lr: sec.get_or("lr", base.optimizer.lr)?,
                    ..optimizer(sec)?
                }
            } else {
                base.optimizer
            };
            let cfg = WStateConfig {
                noise: NoiseSpec {
                    p_depol_1q: sec.get_or("p1q", base.noise.p_depol_1q)?,
                    p_depol_2q: sec.get_or("p2q", base.noise.p_depol_2q)?,
                    gamma_ad: sec.get_or("gamma_ad", base.noise.gamma_ad)?,
                },
                layers: sec.get_or("layers", base.layers)?,
                block: sec.get_or("block", base.block)?,
                iters,
                update_every,
                m: sec.get_or("m", base.m)?,
                optimizer,
                runs: sec.get_or("runs", base.runs)?,
                seed: overrides.seed.unwrap_or(sec.get_or("seed", base.seed)?),
            };
            cfg.noise
                .validate()
                .map_err(|e| ConfigError::at(sec.line, e.to_string()))?;
            LoadedPlan {
                seed: cfg.seed,
                plan: Plan::Wstate(cfg),
                shots: 0,
                tolerance: ShotTolerance { c: 0.1, delta: 0.01 },
            }
        }
        Experiment::Custom => {
            sec.restrict_keys(&keys(CUSTOM_KEYS, LOOP_KEYS))?;
            let (settings, runs, seed, tolerance) = run_settings(sec, overrides.shots)?;
            let rel: String = sec.require("state")?;
            let state_path = base_dir.join(rel);
            let rho = read_state(&state_path)?;
            let seed = overrides.seed.unwrap_or(seed);
            LoadedPlan {
                shots: settings.loop_config.shots,
                plan: Plan::Custom(CustomPlan {
                    state_path,
                    rho,
                    settings,
                    runs,
                    seed,
                }),
                seed,
                tolerance,
            }
        }
    };
    Ok(loaded)
}

pub fn load_scan(doc: &Document) -> Result<ScanPlan, ConfigError> {
    let sec = section(doc, "xy")?;
    sec.restrict_keys(&keys(XY_KEYS, LOOP_KEYS))?;
    let (chain, selection) = chain(sec)?;
    let plan = ScanPlan {
        chain,
        selection,
        lo: sec.get_or("scan_lo", 0.0)?,
        hi: sec.get_or("scan_hi", 3.0)?,
        points: sec.get_or("scan_points", 61)?,
        tolerance: sec.get_or("tolerance", 1e-8)?,
    };
    if !(plan.hi > plan.lo) || plan.points < 3 {
        return Err(ConfigError::at(
            sec.line,
            "scan needs `scan_lo < scan_hi` and `scan_points >= 3`",
        ));
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> Document {
        Document::parse(text).unwrap()
    }

    #[test]
    fn pca_defaults_and_overrides() {
        let d = doc("[pca]\nn = 3\nm = 2\nn_max = 60\nseed = 5\n");
        let p = load(
            &d,
            Experiment::Pca,
            Overrides {
                seed: Some(9),
                shots: Some(100),
            },
            Path::new("."),
        )
        .unwrap();
        let Plan::Pca(cfg) = p.plan else { panic!() };
        assert_eq!((cfg.n, cfg.n_ancilla, cfg.seed, p.seed), (3, 4, 9, 9));
        assert_eq!(cfg.settings.loop_config.shots, 100);
        assert_eq!(cfg.settings.loop_config.variant, CostVariant::Adaptive);
        assert_eq!(cfg.settings.loop_config.schedule.n_max(), 60);
    }

    #[test]
    fn missing_m_is_named() {
        let d = doc("[pca]\nn = 3\n");
        let err = load(&d, Experiment::Pca, Overrides::default(), Path::new(".")).unwrap_err();
        let err = err.downcast::<ConfigError>().unwrap();
        assert!(err.message.contains("`m`"), "{err}");
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let d = doc("[pca]\nn = 3\nm = 2\nlayer = 2\n");
        let err = load(&d, Experiment::Pca, Overrides::default(), Path::new(".")).unwrap_err();
        assert_eq!(err.downcast::<ConfigError>().unwrap().line, Some(4));
    }

    #[test]
    fn bad_schedule_points_at_s() {
        let d = doc("[pca]\nn = 3\nm = 2\nn_max = 100\ns = 30\n");
        let err = load(&d, Experiment::Pca, Overrides::default(), Path::new(".")).unwrap_err();
        assert_eq!(err.downcast::<ConfigError>().unwrap().line, Some(5));
    }

    #[test]
    fn xy_and_wstate_sections() {
        let d = doc(
            "[xy]\nm = 3\nh_grid = 0.5, 1.0\nselection = doublet\n[wstate]\np2q = 0.05\niters = 20\nupdate_every = 5\n",
        );
        let p = load(&d, Experiment::Xy, Overrides::default(), Path::new(".")).unwrap();
        let Plan::Xy(cfg) = p.plan else { panic!() };
        assert_eq!(cfg.h_grid, vec![0.5, 1.0]);
        assert_eq!(cfg.selection, GroundSelection::MostSeparableDoublet);
        let p = load(&d, Experiment::Wstate, Overrides::default(), Path::new(".")).unwrap();
        let Plan::Wstate(cfg) = p.plan else { panic!() };
        assert_eq!(cfg.noise.p_depol_2q, 0.05);
        assert_eq!(cfg.optimizer, WStateConfig::default().optimizer);
        assert!(load_scan(&d).is_ok());
    }

    #[test]
    fn missing_section() {
        let d = doc("[pca]\nn = 3\nm = 2\n");
        assert!(load(&d, Experiment::Xy, Overrides::default(), Path::new(".")).is_err());
        let d = doc("[pcaa]\n");
        let err = load(&d, Experiment::Pca, Overrides::default(), Path::new(".")).unwrap_err();
        assert_eq!(err.downcast::<ConfigError>().unwrap().line, Some(1));
    }
}
