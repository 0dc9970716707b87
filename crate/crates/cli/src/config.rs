//! Experiment configuration files.

use doq_core::learn::TrainConfig;
use doq_core::model::{MimoEeConfig, MultiBandEeConfig, SumRateConfig, UtilityModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilitySpec {
    MultibandEe(MultiBandEeConfig),
    SumRate(SumRateConfig),
    MimoEe(MimoEeConfig),
}

impl UtilitySpec {
    pub fn model(&self) -> UtilityModel {
        match self {
            UtilitySpec::MultibandEe(c) => UtilityModel::MultiBandEe(c.clone()),
            UtilitySpec::SumRate(c) => UtilityModel::SumRate(c.clone()),
            UtilitySpec::MimoEe(c) => UtilityModel::MimoEe(c.clone()),
        }
    }

    /// Band count for the gain models, `None` for MIMO.
    pub fn n_bands(&self) -> Option<usize> {
        match self {
            UtilitySpec::MultibandEe(c) => Some(c.n_bands),
            UtilitySpec::SumRate(c) => Some(c.n_bands),
            UtilitySpec::MimoEe(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionOptions {
    pub bounds: Vec<(f64, f64)>,
    pub resolution: usize,
}

impl Default for RegionOptions {
    fn default() -> Self {
        RegionOptions {
            bounds: vec![(0.0, 5.0), (0.0, 5.0)],
            resolution: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CompressionUtility {
    Ee,
    Sumrate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompressionOptions {
    pub sigmas: Vec<f64>,
    pub m_cap: usize,
    /// Samples used to design and score each budget.
    pub n_samples: usize,
    /// Total power of the sum-rate problem, mW.
    pub p_total: f64,
    /// Log-spaced per-band candidate powers (plus zero) for the EE designer.
    pub ee_levels: usize,
    pub ee_p_min: f64,
    pub ee_p_max: f64,
    /// Simplex resolution of the sum-rate candidate allocations.
    pub simplex_steps: usize,
    /// Per-band powers of the EE fine-grid oracle.
    pub oracle_resolution: usize,
}

impl Default for CompressionOptions {
    fn default() -> Self {
        CompressionOptions {
            sigmas: vec![1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0],
            m_cap: 16,
            n_samples: 10_000,
            p_total: 10.0,
            ee_levels: 40,
            ee_p_min: 0.1,
            ee_p_max: 1000.0,
            simplex_steps: 64,
            oracle_resolution: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MimoOptions {
    /// Largest decision budget; defaults to the full selection set.
    pub k_max: Option<usize>,
    /// Seed of the random nested decision-set chain.
    pub decision_seed: u64,
    /// Replace `p_max` by the Monte-Carlo optimal budget before building decisions.
    pub use_pstar: bool,
    pub kmeans_iters: usize,
    /// Budgets at which a classifier is trained; `None` means all of them.
    pub nn_ks: Option<Vec<usize>>,
    /// Decision budget used by `train-nn` and `eval` on MIMO utilities.
    pub k: Option<usize>,
}

impl Default for MimoOptions {
    fn default() -> Self {
        MimoOptions {
            k_max: None,
            decision_seed: 0,
            use_pstar: false,
            kmeans_iters: 100,
            nn_ks: None,
            k: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NnOptions {
    pub hidden: Vec<usize>,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub patience: usize,
    pub batch_size: Option<usize>,
    pub standardize: bool,
}

impl Default for NnOptions {
    fn default() -> Self {
        let t = TrainConfig::default();
        NnOptions {
            hidden: vec![20, 20, 20],
            max_epochs: t.max_epochs,
            learning_rate: t.learning_rate,
            momentum: t.momentum,
            patience: t.patience,
            batch_size: t.batch_size,
            standardize: t.standardize,
        }
    }
}

impl NnOptions {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            max_epochs: self.max_epochs,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            patience: self.patience,
            batch_size: self.batch_size,
            seed,
            standardize: self.standardize,
        }
    }
}

fn default_n_samples() -> usize {
    100_000
}

fn default_powers() -> Vec<f64> {
    vec![2.0, 3.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub utility: UtilitySpec,
    #[serde(default)]
    pub seed: u64,
    /// Monte-Carlo realizations, split 70/15/15 where a split is needed.
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    /// Per-band power levels; decisions are their product minus all-zero.
    #[serde(default = "default_powers")]
    pub powers: Vec<f64>,
    #[serde(default)]
    pub regions: RegionOptions,
    #[serde(default)]
    pub compression: CompressionOptions,
    #[serde(default)]
    pub mimo: MimoOptions,
    #[serde(default)]
    pub nn: NnOptions,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex_digest(canonical.as_bytes())
    }

    /// Checks every field that is shared by all commands.
    pub fn validate(&self) -> Result<(), CliError> {
        self.utility
            .model()
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        if self.n_samples < 20 {
            return Err(invalid("n_samples must be at least 20"));
        }
        validate_powers(&self.powers)?;
        let n = &self.nn;
        if n.hidden.is_empty() || n.hidden.contains(&0) {
            return Err(invalid("nn.hidden needs at least one positive layer width"));
        }
        n.train_config(0)
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        Ok(())
    }
}

/// Power levels must be positive and strictly ascending.
pub fn validate_powers(powers: &[f64]) -> Result<(), CliError> {
    if powers.is_empty() {
        return Err(invalid("power list is empty"));
    }
    if let Some(p) = powers.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
        return Err(invalid(format!("power {p} is not positive")));
    }
    for (i, w) in powers.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(invalid(format!(
                "powers must be strictly ascending: P{} = {} is not below P{} = {}",
                i + 1,
                w[0],
                i + 2,
                w[1]
            )));
        }
    }
    Ok(())
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
