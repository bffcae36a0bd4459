use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::dynamics::{SchemeConfig, SchemeKind};
use crate::error::{HjdError, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::optimizer::{BlockShape, OptimizerConfig};

use super::scenario::Scenario;

const KEYS: &[&str] = &[
    "scenario",
    "domain.dim",
    "domain.side",
    "grid.m",
    "time.horizon",
    "time.steps",
    "hamiltonian.kind",
    "hamiltonian.c",
    "scheme.kind",
    "scheme.beta",
    "scheme.picard_iters",
    "terminal.center",
    "terminal.radius",
    "terminal.moreau_v",
    "optimizer.levels",
    "optimizer.lipschitz",
    "optimizer.eps",
    "optimizer.max_inner",
    "optimizer.block_fraction",
    "optimizer.block_shape",
    "optimizer.seed",
    "optimizer.max_iters",
    "optimizer.fd_step",
    "output.dir",
    "output.snapshots",
    "input.rho",
];

/// Keys a custom run must spell out. Conditional ones (`hamiltonian.c`,
/// `scheme.beta`) are checked once the kinds are known.
const CUSTOM_REQUIRED: &[&str] = &[
    "domain.dim",
    "domain.side",
    "grid.m",
    "time.horizon",
    "time.steps",
    "hamiltonian.kind",
    "scheme.kind",
    "terminal.center",
    "terminal.radius",
    "terminal.moreau_v",
    "input.rho",
];

/// A fully resolved run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub dim: usize,
    pub side: f64,
    pub m: usize,
    pub horizon: f64,
    pub steps: usize,
    pub ham: HamiltonianSpec,
    pub scheme: SchemeConfig,
    pub center: Vec<f64>,
    pub radius: f64,
    pub moreau_v: f64,
    pub optimizer: OptimizerConfig,
    pub output_dir: PathBuf,
    pub snapshot_times: Vec<f64>,
    /// CSV density, required for custom runs and optional otherwise.
    pub input_rho: Option<PathBuf>,
}

impl RunConfig {
    /// Reads and parses a config file. Relative `input.rho` and `output.dir`
    /// paths are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HjdError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(base) = path.parent() {
            if cfg.output_dir.is_relative() {
                cfg.output_dir = base.join(&cfg.output_dir);
            }
            if let Some(p) = cfg.input_rho.as_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc = Document::parse(text)?;
        let scenario = match doc.get("scenario") {
            Some(s) => Scenario::from_name(s).ok_or_else(|| {
                HjdError::config("scenario", format!("unknown scenario `{s}`"))
            })?,
            None => Scenario::Custom,
        };
        if scenario == Scenario::Custom {
            for key in CUSTOM_REQUIRED {
                if doc.get(key).is_none() {
                    return Err(HjdError::config(*key, "required for a custom scenario"));
                }
            }
        }
        let mut cfg = scenario.defaults();

        if let Some(v) = doc.value::<usize>("domain.dim")? {
            cfg.dim = v;
        }
        if let Some(v) = doc.value::<f64>("domain.side")? {
            cfg.side = v;
        }
        if let Some(v) = doc.value::<usize>("grid.m")? {
            cfg.m = v;
        }
        if let Some(v) = doc.value::<f64>("time.horizon")? {
            cfg.horizon = v;
        }
        if let Some(v) = doc.value::<usize>("time.steps")? {
            cfg.steps = v;
        }

        let c = doc.value::<f64>("hamiltonian.c")?;
        match doc.get("hamiltonian.kind") {
            Some("quadratic") => cfg.ham = HamiltonianSpec::Quadratic,
            Some("saddle") => cfg.ham = HamiltonianSpec::SaddleQuadratic,
            Some("soft-l1") => {
                let c = c.ok_or_else(|| HjdError::config("hamiltonian.c", "required for soft-l1"))?;
                cfg.ham = HamiltonianSpec::soft_l1(c).map_err(|e| HjdError::config("hamiltonian.c", e.to_string()))?;
            }
            Some(other) => {
                return Err(HjdError::config(
                    "hamiltonian.kind",
                    format!("expected quadratic, saddle or soft-l1, got `{other}`"),
                ))
            }
            None => {
                if let (Some(c), HamiltonianSpec::SoftL1 { .. }) = (c, cfg.ham) {
                    cfg.ham = HamiltonianSpec::soft_l1(c)
                        .map_err(|e| HjdError::config("hamiltonian.c", e.to_string()))?;
                }
            }
        }

        let kind = match doc.get("scheme.kind") {
            Some("symplectic") => SchemeKind::Symplectic,
            Some("upwind") => SchemeKind::Upwind,
            Some("upwind-lf") => SchemeKind::UpwindLF,
            Some(other) => {
                return Err(HjdError::config(
                    "scheme.kind",
                    format!("expected symplectic, upwind or upwind-lf, got `{other}`"),
                ))
            }
            None => cfg.scheme.kind,
        };
        let beta = match doc.value::<f64>("scheme.beta")? {
            Some(b) => b,
            None if kind == SchemeKind::UpwindLF && scenario == Scenario::Custom => {
                return Err(HjdError::config("scheme.beta", "required for upwind-lf"))
            }
            None if kind == SchemeKind::UpwindLF && cfg.scheme.kind == SchemeKind::UpwindLF => cfg.scheme.beta,
            None if kind == SchemeKind::UpwindLF => super::scenario::LF_BETA,
            None => 0.0,
        };
        let picard = doc.value::<usize>("scheme.picard_iters")?.unwrap_or(cfg.scheme.picard_iters);
        cfg.scheme = SchemeConfig::new(kind, beta, picard).map_err(|e| HjdError::config("scheme", e.to_string()))?;

        if let Some(s) = doc.get("terminal.center") {
            cfg.center = parse_list("terminal.center", s)?;
        }
        if let Some(v) = doc.value::<f64>("terminal.radius")? {
            cfg.radius = v;
        }
        if let Some(v) = doc.value::<f64>("terminal.moreau_v")? {
            cfg.moreau_v = v;
        }

        let o = &mut cfg.optimizer;
        if let Some(v) = doc.value::<usize>("optimizer.levels")? {
            o.n_levels = v;
        }
        if let Some(v) = doc.value::<f64>("optimizer.lipschitz")? {
            o.lipschitz_init = v;
        }
        if let Some(v) = doc.value::<f64>("optimizer.eps")? {
            o.eps = Some(v);
        }
        if let Some(v) = doc.value::<usize>("optimizer.max_inner")? {
            o.max_inner = v;
        }
        if let Some(v) = doc.value::<f64>("optimizer.block_fraction")? {
            o.block_fraction = v;
        }
        match doc.get("optimizer.block_shape") {
            Some("scattered") => o.block_shape = BlockShape::Scattered,
            Some("patch") => o.block_shape = BlockShape::Patch,
            Some(other) => {
                return Err(HjdError::config(
                    "optimizer.block_shape",
                    format!("expected scattered or patch, got `{other}`"),
                ))
            }
            None => {}
        }
        if let Some(v) = doc.value::<u64>("optimizer.seed")? {
            o.seed = v;
        }
        if let Some(v) = doc.value::<usize>("optimizer.max_iters")? {
            o.max_iters = v;
        }
        if let Some(v) = doc.value::<f64>("optimizer.fd_step")? {
            o.fd_step = Some(v);
        }
        o.validate().map_err(|e| HjdError::config("optimizer", e.to_string()))?;

        if let Some(s) = doc.get("output.dir") {
            cfg.output_dir = PathBuf::from(s);
        }
        cfg.snapshot_times = match doc.get("output.snapshots") {
            Some(s) => parse_list("output.snapshots", s)?,
            None => (0..=5).map(|k| cfg.horizon * k as f64 / 5.0).collect(),
        };
        if let Some(s) = doc.get("input.rho") {
            cfg.input_rho = Some(PathBuf::from(s));
        }

        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(HjdError::config("domain.dim", "must be at least 1"));
        }
        if !(self.side.is_finite() && self.side > 0.0) {
            return Err(HjdError::config("domain.side", "must be positive"));
        }
        if self.m < 2 {
            return Err(HjdError::config("grid.m", "need at least 2 points per axis"));
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(HjdError::config("time.horizon", "must be nonnegative"));
        }
        crate::dynamics::TimeGrid::new(self.horizon, self.steps)
            .map_err(|e| HjdError::config("time.steps", e.to_string()))?;
        if self.center.len() != self.dim {
            return Err(HjdError::config(
                "terminal.center",
                format!("expected {} coordinates, got {}", self.dim, self.center.len()),
            ));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(HjdError::config("terminal.radius", "must be positive"));
        }
        if !(self.moreau_v.is_finite() && self.moreau_v > 0.0) {
            return Err(HjdError::config("terminal.moreau_v", "must be positive"));
        }
        self.ham
            .check_dim(self.dim)
            .map_err(|e| HjdError::config("hamiltonian.kind", e.to_string()))?;
        if let Some(s) = self.snapshot_times.iter().find(|s| !(0.0..=self.horizon).contains(*s)) {
            return Err(HjdError::config(
                "output.snapshots",
                format!("time {s} lies outside [0, {}]", self.horizon),
            ));
        }
        Ok(())
    }
}

/// Raw `key = value` pairs.
struct Document {
    entries: BTreeMap<String, String>,
}

impl Document {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HjdError::config(line, format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(HjdError::config(key, format!("line {}: unknown key", lineno + 1)));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(HjdError::config(key, format!("line {}: duplicate key", lineno + 1)));
            }
        }
        Ok(Document { entries })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn value<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|s| s.parse::<T>().map_err(|e| HjdError::config(key, format!("`{s}`: {e}"))))
            .transpose()
    }
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>().map_err(|e| HjdError::config(key, format!("`{t}`: {e}")))
        })
        .collect()
}
