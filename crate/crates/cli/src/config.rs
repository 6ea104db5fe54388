//! JSON configuration schemas. Unknown fields are rejected so experiment
//! provenance stays exact.

use opab_core::simulators::{BoredomSpec, PolicyPairSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

fn check_schema(version: u32) -> Result<(), CliError> {
    if version != SCHEMA_VERSION {
        return Err(CliError::usage(format!(
            "schema_version {version} unsupported (this binary supports {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

/// Beta matrix source for the boredom environment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaCfg {
    Seeded { beta_seed: u64 },
    Explicit { beta: Vec<Vec<f64>> },
}

/// Simulation environment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvCfg {
    Bandit {
        reward_probs: Vec<f64>,
        pair: PolicyPairSpec,
    },
    Boredom {
        dim: usize,
        rho: f64,
        sigma_noise: f64,
        horizon: usize,
        #[serde(flatten)]
        beta: BetaCfg,
        temp_a: f64,
        temp_b: f64,
    },
    Epsilon {
        t0: usize,
        epsilon: f64,
    },
}

impl EnvCfg {
    pub fn boredom_spec(
        dim: usize,
        rho: f64,
        sigma_noise: f64,
        horizon: usize,
        beta: &BetaCfg,
        action_count: usize,
    ) -> Result<BoredomSpec, CliError> {
        let beta = match beta {
            BetaCfg::Seeded { beta_seed } => BoredomSpec::seeded_beta(action_count, dim, *beta_seed),
            BetaCfg::Explicit { beta } => beta.clone(),
        };
        BoredomSpec::new(dim, rho, sigma_noise, beta, horizon).map_err(CliError::usage)
    }
}

/// `simulate` subcommand configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub n_a: usize,
    pub n_b: usize,
    pub env: EnvCfg,
}

impl SimulateConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: SimulateConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid simulate config: {e}")))?;
        check_schema(cfg.schema_version)?;
        Ok(cfg)
    }
}

/// Named scenario for the misspecification sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioCfg {
    pub name: String,
    pub pair: PolicyPairSpec,
}

/// `lambda_eff(sigma)` schedule applied to `fstar_robust:<noise>:auto` ids.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaSchedule {
    Linear { coeff: f64 },
    Quadratic { coeff: f64 },
}

impl LambdaSchedule {
    pub fn lambda(&self, sigma: f64) -> f64 {
        match self {
            LambdaSchedule::Linear { coeff } => coeff * sigma,
            LambdaSchedule::Quadratic { coeff } => coeff * sigma * sigma,
        }
    }
}

/// Propensity-fit options for learned-propensity experiments.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitCfg {
    pub reg: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for FitCfg {
    fn default() -> Self {
        FitCfg { reg: 1e-4, max_iter: 150, tol: 1e-5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AaTestParams {
    pub reward_probs: Vec<f64>,
    pub policy: Vec<f64>,
    pub n_a: usize,
    pub n_b: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceReductionParams {
    pub reward_probs: Vec<f64>,
    pub pairs: Vec<PolicyPairSpec>,
    /// n_A / n_B grid; arm sizes derive from `n_total`.
    pub n_r_grid: Vec<f64>,
    pub n_total: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MisspecificationParams {
    pub reward_probs: Vec<f64>,
    pub scenarios: Vec<ScenarioCfg>,
    pub sigma_grid: Vec<f64>,
    pub n_per_arm: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_schedule: Option<LambdaSchedule>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoredomSweepParams {
    pub dim: usize,
    pub rho: f64,
    pub sigma_noise: f64,
    #[serde(flatten)]
    pub beta: BetaCfg,
    pub temp_a: f64,
    pub temp_b: f64,
    pub horizons: Vec<usize>,
    pub n_per_arm: usize,
    #[serde(default = "default_fit")]
    pub fit: FitCfg,
    pub oracle_reps: usize,
}

fn default_fit() -> FitCfg {
    FitCfg::default()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomParams {
    pub env: EnvCfg,
    pub n_a: usize,
    pub n_b: usize,
    /// Monte-Carlo oracle repetitions for environments without a closed form.
    #[serde(default = "default_oracle_reps")]
    pub oracle_reps: usize,
}

fn default_oracle_reps() -> usize {
    100_000
}

/// Experiment kind plus its parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ExperimentKind {
    AaTest(AaTestParams),
    VarianceReductionSweep(VarianceReductionParams),
    MisspecificationSweep(MisspecificationParams),
    BoredomHorizonSweep(BoredomSweepParams),
    Custom(CustomParams),
}

/// `experiment` subcommand configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub master_seed: u64,
    pub repetitions: usize,
    /// Estimator identifiers; see the README table.
    pub estimators: Vec<String>,
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| CliError::usage(format!("invalid experiment config: {e}")))?;
        check_schema(cfg.schema_version)?;
        if cfg.repetitions < 1 {
            return Err(CliError::usage("repetitions must be >= 1"));
        }
        if cfg.estimators.is_empty() {
            return Err(CliError::usage("estimator list is empty"));
        }
        Ok(cfg)
    }
}
