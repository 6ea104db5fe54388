//! Policy files: explicit policy specs and fitted-model JSON.

use opab_core::propensity::FittedPolicy;
use opab_core::{PolicyModel, SoftmaxLinearPolicy, TabularPolicy, UniformMixPolicy};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// One policy in a JSON file. Fitted-model files (the `fit-propensity`
/// output) are accepted interchangeably.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    Tabular { probs: Vec<f64> },
    SoftmaxLinear { weights: Vec<Vec<f64>>, dim: usize },
    UniformMix { sigma: f64, base: Box<PolicySpec> },
}

impl PolicySpec {
    pub fn build(&self) -> Result<Box<dyn PolicyModel>, CliError> {
        match self {
            PolicySpec::Tabular { probs } => Ok(Box::new(
                TabularPolicy::new(probs.clone()).map_err(CliError::usage)?,
            )),
            PolicySpec::SoftmaxLinear { weights, dim } => Ok(Box::new(
                SoftmaxLinearPolicy::new(weights.clone(), *dim).map_err(CliError::usage)?,
            )),
            PolicySpec::UniformMix { sigma, base } => {
                let inner = base.build()?;
                Ok(Box::new(
                    UniformMixPolicy::new(inner, *sigma).map_err(CliError::usage)?,
                ))
            }
        }
    }
}

/// Load a policy from a file holding either a [`PolicySpec`] or a
/// [`FittedPolicy`].
pub fn load_policy(path: &std::path::Path) -> Result<Box<dyn PolicyModel>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read policy file {}: {e}", path.display())))?;
    if let Ok(spec) = serde_json::from_str::<PolicySpec>(&text) {
        return spec.build();
    }
    let fitted = FittedPolicy::from_json(&text).map_err(|e| {
        CliError::usage(format!(
            "{} is neither a policy spec nor a fitted model: {e}",
            path.display()
        ))
    })?;
    Ok(Box::new(fitted.policy().map_err(CliError::usage)?))
}
