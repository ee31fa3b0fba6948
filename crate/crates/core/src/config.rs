//! The JSON experiment configuration shared by every subcommand.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clt::{KRule, StatisticRegistry};
use crate::error::{Error, Result};
use crate::lemmas::LemmaId;
use crate::limits::SGrid;
use crate::models::{parse_descriptor, QuantileModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub ratio: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<SGrid> {
        SGrid::geometric(self.start, self.ratio, self.count)
            .map_err(|e| Error::Config(format!("s_grid: {e}")))
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            start: 0.5,
            ratio: 0.1,
            count: 7,
        }
    }
}

/// Bounds for every verdict the tool issues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub t1_mean: f64,
    pub t1_var: [f64; 2],
    pub t23_var: [f64; 2],
    pub ks: f64,
    pub bdh_mean: f64,
    pub bdh_sd_factor: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub l5: f64,
    pub l5_closed_form: f64,
    pub l6: f64,
    pub l7: f64,
    pub rc: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            t1_mean: 0.1,
            t1_var: [1.8, 2.2],
            t23_var: [0.85, 1.15],
            ks: 0.05,
            bdh_mean: 0.1,
            bdh_sd_factor: 2.0,
            l1: 0.25,
            l2: 0.05,
            l3: 1e-6,
            l4: 0.02,
            l5: 0.1,
            l5_closed_form: 1e-9,
            l6: 0.05,
            l7: 0.01,
            rc: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub models: Vec<String>,
    #[serde(default = "default_n_values")]
    pub n_values: Vec<u64>,
    #[serde(default = "default_k_rule")]
    pub k_rule: KRule,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_statistics")]
    pub statistics: Vec<String>,
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    #[serde(default)]
    pub s_grid: GridSpec,
    #[serde(default = "LemmaId::all")]
    pub lemmas: Vec<LemmaId>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default)]
    pub dump_samples: bool,
}

fn default_n_values() -> Vec<u64> {
    vec![5000, 50000]
}

fn default_k_rule() -> KRule {
    KRule::Power {
        coeff: 1.0,
        gamma: 0.4,
    }
}

fn default_replicates() -> usize {
    2000
}

fn default_statistics() -> Vec<String> {
    ["T1", "T2", "T3", "BDH"].map(String::from).to_vec()
}

fn default_betas() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

fn default_output_dir() -> String {
    "out".into()
}

impl ExperimentConfig {
    /// Every other field at its default.
    pub fn for_models(models: &[&str]) -> ExperimentConfig {
        serde_json::from_value(serde_json::json!({ "models": models }))
            .expect("defaults deserialize")
    }

    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        ExperimentConfig::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn parse_models(&self) -> Result<Vec<Box<dyn QuantileModel>>> {
        if self.models.is_empty() {
            return Err(Error::Config("no models given".into()));
        }
        self.models
            .iter()
            .map(|d| parse_descriptor(d).map_err(|e| Error::Config(format!("model {d:?}: {e}"))))
            .collect()
    }

    /// Checks that apply to every subcommand.
    pub fn validate(&self) -> Result<()> {
        self.parse_models()?;
        self.s_grid.build()?;
        if let Some(b) = self.betas.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(Error::Config(format!("beta {b} must be positive")));
        }
        Ok(())
    }

    /// Checks needed before any sampling.
    pub fn validate_simulation(&self, stats: &StatisticRegistry) -> Result<()> {
        self.validate()?;
        if self.replicates < 1 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.replicates > u32::MAX as usize {
            return Err(Error::Config("too many replicates".into()));
        }
        if self.n_values.is_empty() {
            return Err(Error::Config("no n_values given".into()));
        }
        for &n in &self.n_values {
            if n < 4 {
                return Err(Error::Config(format!("n = {n} below 4")));
            }
            self.k_rule
                .resolve(n)
                .map_err(|e| Error::Config(format!("k_rule at n = {n}: {e}")))?;
        }
        if self.statistics.is_empty() {
            return Err(Error::Config("no statistics selected".into()));
        }
        for s in &self.statistics {
            if stats.get(s).is_none() {
                return Err(Error::Config(format!(
                    "unknown statistic {s:?}; known: {}",
                    stats.ids().join(", ")
                )));
            }
        }
        Ok(())
    }
}
