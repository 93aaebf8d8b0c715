use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::active::{Axis, AxisSpacing, CampaignSettings};
use crate::basis::{ShiftMode, TruncationRule};
use crate::error::{Error, Result};
use crate::models::TimeGrid;
use crate::regsearch::RegGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// `n` grid nodes on `[0, length]`, boundaries included.
    Heat { n: usize, length: f64 },
    /// `n_side` interior points per direction.
    Burgers { n_side: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t0: f64,
    pub tf: f64,
    pub n_t: usize,
    /// RK4 steps per sample interval for the ROM.
    pub rom_substeps: usize,
    /// RK4 steps per sample interval for the FOM; chosen from a stability
    /// bound when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fom_substeps: Option<usize>,
}

impl TimeConfig {
    pub fn rom_grid(&self) -> Result<TimeGrid> {
        TimeGrid::with_substeps(self.t0, self.tf, self.n_t, self.rom_substeps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub shift: ShiftMode,
    pub rule: TruncationRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionConfig {
    pub n_d: usize,
    pub guard_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySettings {
    pub budget: usize,
    pub trials: usize,
    pub seed: u64,
    /// Directory for persisted FOM solutions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub problem: ProblemConfig,
    pub candidates: Vec<Axis>,
    pub time: TimeConfig,
    pub basis: BasisConfig,
    pub regularization: RegGrid,
    pub acquisition: AcquisitionConfig,
    pub study: StudySettings,
}

pub const PRESETS: [&str; 4] = ["heat-desk", "heat-paper", "burgers-desk", "burgers-paper"];

impl StudyConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let heat = |n: usize, grid: usize, trials: usize, budget: usize| Self {
            problem: ProblemConfig::Heat { n, length: 1.0 },
            candidates: vec![
                Axis {
                    min: 1e-3,
                    max: 0.1,
                    n: grid,
                    spacing: AxisSpacing::Log,
                },
                Axis {
                    min: 1.0,
                    max: 5.0,
                    n: grid,
                    spacing: AxisSpacing::Linear,
                },
            ],
            time: TimeConfig {
                t0: 0.0,
                tf: 1.0,
                n_t: 101,
                rom_substeps: 10,
                fom_substeps: None,
            },
            basis: BasisConfig {
                shift: ShiftMode::MeanSnapshot,
                rule: TruncationRule::ResidualEnergyBelow(1e-6),
            },
            regularization: RegGrid::default(),
            acquisition: AcquisitionConfig {
                n_d: 50,
                guard_factor: 100.0,
            },
            study: StudySettings {
                budget,
                trials,
                seed: 0,
                cache_dir: None,
            },
        };
        let burgers = |n_side: usize, n_cand: usize, trials: usize, budget: usize| Self {
            problem: ProblemConfig::Burgers { n_side },
            candidates: vec![Axis {
                min: 1e-3,
                max: 0.025,
                n: n_cand,
                spacing: AxisSpacing::Log,
            }],
            time: TimeConfig {
                t0: 0.0,
                tf: 1.0,
                n_t: 100,
                rom_substeps: 10,
                fom_substeps: None,
            },
            basis: BasisConfig {
                shift: ShiftMode::Zero,
                rule: TruncationRule::CumulativeEnergyAbove(0.995),
            },
            regularization: RegGrid::default(),
            acquisition: AcquisitionConfig {
                n_d: 50,
                guard_factor: 100.0,
            },
            study: StudySettings {
                budget,
                trials,
                seed: 0,
                cache_dir: None,
            },
        };
        match name {
            "heat-desk" => Ok(heat(200, 10, 10, 8)),
            "heat-paper" => Ok(heat(500, 20, 50, 10)),
            "burgers-desk" => Ok(burgers(41, 25, 5, 6)),
            "burgers-paper" => Ok(burgers(101, 50, 50, 10)),
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (available: {})",
                PRESETS.join(", ")
            ))),
        }
    }

    /// Parses TOML. A top-level `preset = "<name>"` supplies defaults that the
    /// remaining keys override table by table.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut value: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let merged = match value.remove("preset") {
            Some(toml::Value::String(name)) => {
                let base = toml::Table::try_from(Self::preset(&name)?).map_err(|e| Error::Config(e.to_string()))?;
                merge(base, value)
            }
            Some(_) => return Err(Error::Config("preset must be a string".into())),
            None => value,
        };
        let config: Self = merged.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        match self.problem {
            ProblemConfig::Heat { n, length } => {
                if n < 3 || !(length > 0.0) {
                    return Err(Error::Config("heat problem needs n ≥ 3 and a positive length".into()));
                }
                if self.candidates.len() != 2 {
                    return Err(Error::Config("heat candidates need two axes (κ, ρ)".into()));
                }
            }
            ProblemConfig::Burgers { n_side } => {
                if n_side < 3 {
                    return Err(Error::Config("burgers problem needs n_side ≥ 3".into()));
                }
                if self.candidates.len() != 1 {
                    return Err(Error::Config("burgers candidates need one axis (ν)".into()));
                }
            }
        }
        for a in &self.candidates {
            a.validate()?;
        }
        self.time.rom_grid()?;
        if self.time.fom_substeps == Some(0) {
            return Err(Error::Config("fom_substeps must be positive".into()));
        }
        self.basis.rule.validate()?;
        self.regularization.validate()?;
        if self.acquisition.n_d == 0 || !(self.acquisition.guard_factor > 0.0) {
            return Err(Error::Config("acquisition needs n_d ≥ 1 and a positive guard factor".into()));
        }
        let total: usize = self.candidates.iter().map(|a| a.n).product();
        if self.study.budget == 0 || self.study.budget > total {
            return Err(Error::Config(format!("budget must be in 1..={total}")));
        }
        if self.study.trials == 0 {
            return Err(Error::Config("at least one trial is required".into()));
        }
        Ok(())
    }

    pub fn campaign_settings(&self) -> Result<CampaignSettings> {
        Ok(CampaignSettings {
            shift: self.basis.shift,
            rule: self.basis.rule,
            reg_grid: self.regularization.clone(),
            n_d: self.acquisition.n_d,
            guard_factor: self.acquisition.guard_factor,
            grid: self.time.rom_grid()?,
        })
    }
}

fn merge(mut base: toml::Table, overrides: toml::Table) -> toml::Table {
    for (key, value) in overrides {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => {
                let merged = merge(std::mem::take(b), o);
                *b = merged;
            }
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
    base
}
