//! Experiment configuration: a TOML file with a `[grid]` section and one
//! section per enabled method.
//!
//! ```toml
//! [grid]
//! name = "demo"
//! topology = "canonical7"
//! antennas = [[2, 2]]
//! sigmas = [1.0]
//! iterations = 2000
//! sample_paths = 3
//!
//! [am-smd]
//! [m-smd]
//! [mel]
//! lambdas = [0.1, 0.5, 1.0]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::mimo::{NetworkTopology, CANONICAL_DISTANCES};
use crate::solver::{Method, StepSchedule};

pub const CANONICAL_TOPOLOGY: &str = "canonical7";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    #[serde(rename = "am-smd", default, skip_serializing_if = "Option::is_none")]
    pub am_smd: Option<MethodSection>,
    #[serde(rename = "m-smd", default, skip_serializing_if = "Option::is_none")]
    pub m_smd: Option<MethodSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mel: Option<MethodSection>,
    /// Distance table read from `grid.topology` when it names a file.
    #[serde(skip)]
    topology_text: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Stem of the output files.
    #[serde(default = "default_name")]
    pub name: String,
    /// `canonical7` or a path to a distance table (row = transmitter).
    #[serde(default = "default_topology")]
    pub topology: String,
    /// `(m, n)` = (transmit, receive) antennas per user.
    pub antennas: Vec<[usize; 2]>,
    pub sigmas: Vec<f64>,
    pub iterations: usize,
    #[serde(default = "one")]
    pub sample_paths: usize,
    #[serde(default = "ten")]
    pub gap_every: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "unit")]
    pub max_power: f64,
    #[serde(default = "yes")]
    pub resample_channels: bool,
    /// Fill `elapsed_ms` with wall-clock time. Off by default because it makes output nondeterministic.
    #[serde(default)]
    pub record_timing: bool,
    /// Also write per-player throughput at every iteration.
    #[serde(default)]
    pub record_throughput: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleName>,
    /// Stepsize for `schedule = "constant"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Regularization weights; MEL only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleName {
    TunedConstant,
    Constant,
    HarmonicSqrt,
    Harmonic,
}

fn default_name() -> String {
    "results".into()
}
fn default_topology() -> String {
    CANONICAL_TOPOLOGY.into()
}
fn one() -> usize {
    1
}
fn ten() -> usize {
    10
}
fn unit() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

/// A method with its resolved stepsize rule; one per `(method, λ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Variant {
    pub method: Method,
    pub schedule: StepSchedule,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Demo,
    PaperGrid,
    Stability,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Demo, Preset::PaperGrid, Preset::Stability];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Demo => "demo",
            Preset::PaperGrid => "paper-grid",
            Preset::Stability => "stability",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn text(&self) -> &'static str {
        match self {
            Preset::Demo => include_str!("../../presets/demo.toml"),
            Preset::PaperGrid => include_str!("../../presets/paper-grid.toml"),
            Preset::Stability => include_str!("../../presets/stability.toml"),
        }
    }
}

fn config_error(key: &str, msg: impl Into<String>) -> HarnessError {
    HarnessError::Config { line: None, key: Some(key.into()), msg: msg.into() }
}

impl ExperimentConfig {
    /// Parses and validates; a file topology is resolved relative to `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self, HarnessError> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
            HarnessError::Config { line, key: None, msg: e.message().trim().to_string() }
        })?;
        if cfg.grid.topology != CANONICAL_TOPOLOGY {
            let mut path = PathBuf::from(&cfg.grid.topology);
            if path.is_relative() {
                if let Some(dir) = base_dir {
                    path = dir.join(path);
                }
            }
            let body = std::fs::read_to_string(&path)
                .map_err(|e| config_error("grid.topology", format!("{}: {e}", path.display())))?;
            cfg.topology_text = Some(body);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent())
    }

    pub fn preset(preset: Preset) -> Self {
        Self::parse(preset.text(), None).expect("bundled preset")
    }

    pub fn with_base_seed(mut self, seed: u64) -> Self {
        self.grid.base_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let g = &self.grid;
        if g.name.is_empty() || g.name.contains(['/', '\\']) {
            return Err(config_error("grid.name", "must be a plain file stem"));
        }
        if g.antennas.is_empty() {
            return Err(config_error("grid.antennas", "list is empty"));
        }
        if g.antennas.iter().any(|[m, n]| *m == 0 || *n == 0) {
            return Err(config_error("grid.antennas", "antenna counts must be positive"));
        }
        if g.sigmas.is_empty() {
            return Err(config_error("grid.sigmas", "list is empty"));
        }
        if g.sigmas.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(config_error("grid.sigmas", "noise levels must be finite and nonnegative"));
        }
        if g.iterations == 0 {
            return Err(config_error("grid.iterations", "must be at least 1"));
        }
        if g.sample_paths == 0 {
            return Err(config_error("grid.sample_paths", "must be at least 1"));
        }
        if g.gap_every == 0 {
            return Err(config_error("grid.gap_every", "must be at least 1"));
        }
        if !(g.max_power > 0.0 && g.max_power.is_finite()) {
            return Err(config_error("grid.max_power", "must be positive"));
        }
        for (key, section) in self.sections() {
            if let Some(s) = section {
                s.check(key)?;
            }
        }
        let variants = self.variants()?;
        if variants.is_empty() {
            return Err(config_error("methods", "enable at least one of [am-smd], [m-smd], [mel]"));
        }
        if g.record_throughput {
            let single_mel = self.mel.as_ref().is_none_or(|s| s.lambdas.as_ref().is_none_or(|l| l.len() == 1));
            if g.antennas.len() != 1 || g.sigmas.len() != 1 || !single_mel {
                return Err(config_error(
                    "grid.record_throughput",
                    "needs a single antenna pair, a single sigma and at most one mel lambda",
                ));
            }
        }
        for &[m, n] in &g.antennas {
            self.topology(m, n)?;
        }
        Ok(())
    }

    fn sections(&self) -> [(&'static str, Option<&MethodSection>); 3] {
        [("am-smd", self.am_smd.as_ref()), ("m-smd", self.m_smd.as_ref()), ("mel", self.mel.as_ref())]
    }

    /// Enabled `(method, λ)` variants in the order am-smd, m-smd, mel by λ.
    pub fn variants(&self) -> Result<Vec<Variant>, HarnessError> {
        let mut out = Vec::new();
        for (key, section) in self.sections() {
            let Some(s) = section else { continue };
            let methods = match key {
                "am-smd" => vec![Method::AmSmd],
                "m-smd" => vec![Method::MSmd],
                _ => s.lambdas.clone().unwrap_or_else(|| vec![0.0]).into_iter().map(|lambda| Method::Mel { lambda }).collect(),
            };
            for method in methods {
                out.push(Variant { method, schedule: s.schedule(key, method, self.grid.iterations)? });
            }
        }
        Ok(out)
    }

    /// Network for one antenna pair.
    pub fn topology(&self, m: usize, n: usize) -> Result<NetworkTopology, HarnessError> {
        let p = self.grid.max_power;
        let built = match &self.topology_text {
            None => {
                let d = CANONICAL_DISTANCES.iter().map(|r| r.to_vec()).collect();
                NetworkTopology::new(d, vec![m; 7], vec![n; 7], p)
            }
            Some(text) => NetworkTopology::from_distance_text(text, (m, n), p),
        };
        built.map_err(|e| config_error("grid.topology", e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

impl MethodSection {
    fn check(&self, key: &str) -> Result<(), HarnessError> {
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(config_error(&format!("{key}.eta"), "must be positive"));
            }
        }
        if self.schedule == Some(ScheduleName::Constant) && self.eta.is_none() {
            return Err(config_error(&format!("{key}.eta"), "required by schedule = \"constant\""));
        }
        match (&self.lambdas, key) {
            (Some(_), "am-smd" | "m-smd") => Err(config_error(&format!("{key}.lambdas"), "only mel takes lambdas")),
            (Some(l), _) if l.is_empty() => Err(config_error(&format!("{key}.lambdas"), "list is empty")),
            (Some(l), _) if l.iter().any(|x| !(*x >= 0.0 && x.is_finite())) => {
                Err(config_error(&format!("{key}.lambdas"), "must be finite and nonnegative"))
            }
            _ => Ok(()),
        }
    }

    fn schedule(&self, key: &str, method: Method, iterations: usize) -> Result<StepSchedule, HarnessError> {
        Ok(match self.schedule {
            None => method.default_schedule(),
            Some(ScheduleName::TunedConstant) => StepSchedule::TunedConstant { horizon: iterations },
            Some(ScheduleName::Constant) => {
                StepSchedule::Constant { eta: self.eta.ok_or_else(|| config_error(&format!("{key}.eta"), "missing"))? }
            }
            Some(ScheduleName::HarmonicSqrt) => StepSchedule::HarmonicSqrt,
            Some(ScheduleName::Harmonic) => StepSchedule::Harmonic,
        })
    }
}
