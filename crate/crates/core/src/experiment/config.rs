//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state_models::Functional;
use crate::stop_dp::BasisSpec;

/// Defaults as printed by `--print-defaults`.
pub const DEFAULTS: &str = r#"# skelstop experiment configuration
seed = 20240607
output_dir = "skelstop-out"
# worker threads for path simulation; 0 uses every core
threads = 0

[model]
# "bm_sde": dX = drift dt + vol dW
# "fbm_drift": dX = drift dt + dB_H (vol is ignored; hurst = 0.5 drives with the walk)
kind = "bm_sde"
# log of the initial price 36
x0 = 3.58351893845611
hurst = 0.6

[model.drift]
name = "constant"
params = [0.04]

[model.vol]
name = "constant"
params = [0.2]

[payoff]
# put on the log-price: [strike, rate]
name = "put"
params = [40.0, 0.06]

[grid]
# "pow2": eps_k = 2^-k; "custom": eps_k = eps_list[i] for k_list[i]
phi = "pow2"
k_list = [2, 3, 4]
eps_list = []
horizon = 1.0

[simulation]
train_paths = 20000
fresh_paths = 20000
# regress and stop only where the reward is positive
itm_only = false

[basis]
# "polynomial", "piecewise_linear" or "constant"
family = "polynomial"
degree = 2
# number of most recent (delta T, sign) pairs used as features
window = 0
clip_bound = 1000000.0
standardize = true

[reference]
# "crr": binomial price of the put (needs constant drift r - vol^2/2 and vol)
# "self": finest level as reference, reported as self-ref
# "none"
kind = "crr"
crr_steps = 20000

[report]
# delta and zeta of the large-deviation term exp(-I*(1 - delta) / (zeta eps^2))
delta = 0.5
zeta = 1.0
"#;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    BmSde,
    FbmDrift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSection {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl FunctionalSection {
    pub fn build(&self) -> Result<Functional> {
        Functional::from_name(&self.name, &self.params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub x0: f64,
    #[serde(default = "default_hurst")]
    pub hurst: f64,
    pub drift: FunctionalSection,
    pub vol: FunctionalSection,
}

fn default_hurst() -> f64 {
    0.6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phi {
    Pow2,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub phi: Phi,
    pub k_list: Vec<u32>,
    #[serde(default)]
    pub eps_list: Vec<f64>,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub train_paths: usize,
    pub fresh_paths: usize,
    #[serde(default)]
    pub itm_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    Crr,
    #[serde(rename = "self")]
    SelfRef,
    None,
}

impl ReferenceKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Crr => "crr",
            Self::SelfRef => "self-ref",
            Self::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub kind: ReferenceKind,
    #[serde(default = "default_crr_steps")]
    pub crr_steps: usize,
}

fn default_crr_steps() -> usize {
    20000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    pub delta: f64,
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub threads: usize,
    pub model: ModelSection,
    pub payoff: FunctionalSection,
    pub grid: GridSection,
    pub simulation: SimulationSection,
    pub basis: BasisSpec,
    pub reference: ReferenceSection,
    pub report: ReportSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_toml(DEFAULTS).expect("built-in defaults parse")
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| e.in_stage(format!("config {}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.grid.k_list.is_empty() {
            return bad("k_list must not be empty".into());
        }
        if self.simulation.train_paths < 2 || self.simulation.fresh_paths < 2 {
            return bad("train_paths and fresh_paths must be at least 2".into());
        }
        if !(self.grid.horizon > 0.0 && self.grid.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.grid.horizon));
        }
        if self.grid.phi == Phi::Custom {
            if self.grid.eps_list.len() != self.grid.k_list.len() {
                return bad("custom phi needs one eps per k".into());
            }
            if self.grid.eps_list.iter().any(|e| !(*e > 0.0)) {
                return bad("eps values must be positive".into());
            }
        }
        if self.model.kind == ModelKind::FbmDrift && !(self.model.hurst >= 0.5 && self.model.hurst < 1.0) {
            return bad(format!("hurst must lie in [1/2, 1), got {}", self.model.hurst));
        }
        if !(self.report.delta > 0.0 && self.report.delta < 1.0 && self.report.zeta > 0.0) {
            return bad("report needs 0 < delta < 1 and zeta > 0".into());
        }
        self.model.drift.build()?;
        self.model.vol.build()?;
        self.payoff.build()?;
        self.basis.validate()?;
        Ok(())
    }

    /// `(k, eps_k)` ordered by decreasing `eps`.
    pub fn levels(&self) -> Vec<(u32, f64)> {
        let mut levels: Vec<(u32, f64)> = match self.grid.phi {
            Phi::Pow2 => self.grid.k_list.iter().map(|&k| (k, 2f64.powi(-(k as i32)))).collect(),
            Phi::Custom => self
                .grid
                .k_list
                .iter()
                .copied()
                .zip(self.grid.eps_list.iter().copied())
                .collect(),
        };
        levels.sort_by(|a, b| b.1.total_cmp(&a.1));
        levels
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_and_round_trip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.grid.k_list, vec![2, 3, 4]);
        let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn empty_k_list_is_rejected() {
        let text = DEFAULTS.replace("k_list = [2, 3, 4]", "k_list = []");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = DEFAULTS.replace("[grid]", "[grid]\nmystery = 1");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn levels_are_sorted_by_eps() {
        let text = DEFAULTS.replace("k_list = [2, 3, 4]", "k_list = [4, 2, 3]");
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.levels(), vec![(2, 0.25), (3, 0.125), (4, 0.0625)]);
    }
}
