//! Experiment configuration documents (JSON).

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::protocol::{EhKind, EhProtocol, BETA_MAX};
use crate::simulator::StoppingRule;

/// Either an explicit list or an inclusive `start..=stop` range by `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid {
    pub fn range(start: f64, stop: f64, step: f64) -> Self {
        Grid::Range { start, stop, step }
    }

    /// Grid values. Range points are snapped to 12 decimals so that
    /// accumulated step error does not leak into output files.
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match *self {
            Grid::List(ref v) => v.clone(),
            Grid::Range { start, stop, step } => {
                if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
                    return Err(Error::Config(format!("bad grid range {start}..{stop} step {step}")));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect()
            }
        };
        if v.is_empty() {
            return Err(Error::Config("grid is empty".into()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("grid contains a non-finite value".into()));
        }
        Ok(v)
    }
}

/// A scenario given by preset name ("I" to "IV") or spelled out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Preset(String),
    Custom(Scenario),
}

impl ScenarioRef {
    pub fn resolve(&self) -> Result<Scenario> {
        let sc = match self {
            ScenarioRef::Preset(name) => {
                Scenario::preset_by_name(name).ok_or_else(|| Error::Config(format!("unknown scenario preset {name:?}")))?
            }
            ScenarioRef::Custom(s) => s.clone(),
        };
        sc.validate()?;
        Ok(sc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Analytic,
    Simulate,
    Both,
}

impl Mode {
    pub fn analytic(self) -> bool {
        matches!(self, Mode::Analytic | Mode::Both)
    }

    pub fn simulate(self) -> bool {
        matches!(self, Mode::Simulate | Mode::Both)
    }
}

/// What an optimizer minimizes over the two users' e2e ABERs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// The worse of the two users.
    #[default]
    MaxUser,
    U1,
    U2,
    Mean,
}

impl Objective {
    pub fn eval(self, e2e_u1: f64, e2e_u2: f64) -> f64 {
        match self {
            Objective::MaxUser => e2e_u1.max(e2e_u2),
            Objective::U1 => e2e_u1,
            Objective::U2 => e2e_u2,
            Objective::Mean => 0.5 * (e2e_u1 + e2e_u2),
        }
    }
}

fn default_scenarios() -> Vec<ScenarioRef> {
    ["I", "II", "III", "IV"].iter().map(|s| ScenarioRef::Preset(s.to_string())).collect()
}

fn default_protocols() -> Vec<EhKind> {
    vec![
        EhKind::NoEh,
        EhKind::PowerSplitting { rho: 0.1 },
        EhKind::TimeSwitching { beta: 0.1 },
        EhKind::Hybrid { beta: 0.1, rho: 0.1 },
    ]
}

fn default_eta() -> f64 {
    0.95
}

fn default_alpha2() -> f64 {
    0.1
}

fn default_snr_grid() -> Grid {
    Grid::range(0.0, 40.0, 5.0)
}

fn default_fixed_snr() -> f64 {
    20.0
}

fn default_alpha2_grid() -> Grid {
    Grid::range(0.025, 0.5, 0.025)
}

fn default_beta_grid() -> Grid {
    Grid::range(0.0, 0.9, 0.05)
}

fn default_rho_grid() -> Grid {
    Grid::range(0.0, 0.95, 0.05)
}

fn default_seed() -> u64 {
    1
}

/// One experiment. Every field has a default, so `{}` is a valid document
/// describing the four-scenario SNR sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_scenarios")]
    pub scenarios: Vec<ScenarioRef>,
    #[serde(default = "default_protocols")]
    pub protocols: Vec<EhKind>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Power share of U₂ where it is held fixed.
    #[serde(default = "default_alpha2")]
    pub alpha2: f64,
    /// Total SNR axis of the SNR sweeps, in dB.
    #[serde(default = "default_snr_grid")]
    pub snr_db: Grid,
    /// Total SNR where it is held fixed (α₂ and EH sweeps, optimizers).
    #[serde(default = "default_fixed_snr")]
    pub fixed_snr_db: f64,
    #[serde(default = "default_alpha2_grid")]
    pub alpha2_grid: Grid,
    #[serde(default = "default_beta_grid")]
    pub beta_grid: Grid,
    #[serde(default = "default_rho_grid")]
    pub rho_grid: Grid,
    /// Overridden by the SNR subcommands; used by the α₂ and EH sweeps.
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub objective: Objective,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub stop: StoppingRule,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let cfg = Self::from_json(&text)?;
        let digest = config_digest(&text)?;
        Ok((cfg, digest))
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::Config("no scenarios given".into()));
        }
        for s in &self.scenarios {
            s.resolve()?;
        }
        if self.protocols.is_empty() {
            return Err(Error::Config("no protocols given".into()));
        }
        for &k in &self.protocols {
            self.protocol(k)?;
        }
        check_alpha2(self.alpha2)?;
        for a in self.alpha2_grid.values()? {
            check_alpha2(a)?;
        }
        for b in self.beta_grid.values()? {
            if !(0.0..=BETA_MAX).contains(&b) {
                return Err(Error::Config(format!("beta grid value {b} outside [0, {BETA_MAX}]")));
            }
        }
        for r in self.rho_grid.values()? {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Config(format!("rho grid value {r} outside [0, 1]")));
            }
        }
        self.snr_db.values()?;
        if !self.fixed_snr_db.is_finite() {
            return Err(Error::Config("fixed_snr_db must be finite".into()));
        }
        self.stop.validate()
    }

    pub fn protocol(&self, kind: EhKind) -> Result<EhProtocol> {
        if kind == EhKind::NoEh {
            return Ok(EhProtocol::no_eh());
        }
        EhProtocol::new(kind, self.eta)
    }

    pub fn resolved_scenarios(&self) -> Result<Vec<Scenario>> {
        self.scenarios.iter().map(ScenarioRef::resolve).collect()
    }

    pub fn resolved_protocols(&self) -> Result<Vec<EhProtocol>> {
        self.protocols.iter().map(|&k| self.protocol(k)).collect()
    }
}

fn check_alpha2(a: f64) -> Result<()> {
    if !(a > 0.0 && a <= 0.5) {
        return Err(Error::Config(format!("alpha2 value {a} outside (0, 0.5]")));
    }
    Ok(())
}

/// SHA-256 over the document re-serialized with sorted keys and no
/// whitespace, so formatting and key order do not change it.
pub fn config_digest(text: &str) -> Result<String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let canonical = serde_json::to_string(&value)?;
    Ok(Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect())
}
