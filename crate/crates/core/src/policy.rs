//! Policy models: conditional action distributions with evaluable
//! propensities and seeded sampling.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for per-state propensity normalization.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A conditional distribution over a finite action set given a state vector.
///
/// Implementations must keep propensities nonnegative and summing to one per
/// state within [`SIMPLEX_TOL`].
pub trait PolicyModel: Send + Sync {
    fn action_count(&self) -> usize;

    /// Probability of `action` in `state`.
    fn propensity(&self, state: &[f64], action: usize) -> f64;

    /// Full propensity vector for a state.
    fn propensity_vector(&self, state: &[f64]) -> Vec<f64> {
        (0..self.action_count()).map(|a| self.propensity(state, a)).collect()
    }

    /// Sample an action by inverse CDF over the propensity vector; consumes
    /// exactly one uniform draw so streams stay aligned across policies.
    fn sample(&self, state: &[f64], rng: &mut dyn RngCore) -> usize {
        let probs = self.propensity_vector(state);
        sample_index(&probs, rng)
    }
}

pub(crate) fn sample_index(probs: &[f64], rng: &mut dyn RngCore) -> usize {
    let u = rand::Rng::random::<f64>(rng);
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

pub(crate) fn validate_simplex(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::Argument("empty probability vector".into()));
    }
    if probs.iter().any(|&p| !(0.0..=1.0).contains(&p) || !p.is_finite()) {
        return Err(Error::Argument("probabilities must lie in [0, 1]".into()));
    }
    let s: f64 = probs.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Argument(format!("probabilities sum to {s}, expected 1")));
    }
    Ok(())
}

/// State-independent policy given by an explicit probability vector
/// (the bandit case).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularPolicy {
    probs: Vec<f64>,
}

impl TabularPolicy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_simplex(&probs)?;
        Ok(TabularPolicy { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

impl PolicyModel for TabularPolicy {
    fn action_count(&self) -> usize {
        self.probs.len()
    }

    fn propensity(&self, _state: &[f64], action: usize) -> f64 {
        self.probs.get(action).copied().unwrap_or(0.0)
    }

    fn propensity_vector(&self, _state: &[f64]) -> Vec<f64> {
        self.probs.clone()
    }
}

/// Softmax-linear policy: logits are `W [x; 1]` with weight matrix of shape
/// (actions x (dim + 1)), the last column acting as intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxLinearPolicy {
    weights: Vec<Vec<f64>>,
    dim: usize,
}

impl SoftmaxLinearPolicy {
    pub fn new(weights: Vec<Vec<f64>>, dim: usize) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Argument("softmax policy needs at least one action".into()));
        }
        if weights.iter().any(|row| row.len() != dim + 1) {
            return Err(Error::Argument(format!(
                "each weight row must have dim+1 = {} entries",
                dim + 1
            )));
        }
        if weights.iter().flatten().any(|w| !w.is_finite()) {
            return Err(Error::Argument("non-finite policy weights".into()));
        }
        Ok(SoftmaxLinearPolicy { weights, dim })
    }

    /// Softmax over externally supplied per-action scores divided by a
    /// temperature; used by simulator acting policies.
    pub fn from_scores(score_rows: &[Vec<f64>], temperature: f64, dim: usize) -> Result<Self> {
        if temperature <= 0.0 {
            return Err(Error::Argument("temperature must be positive".into()));
        }
        let weights = score_rows
            .iter()
            .map(|row| {
                let mut w: Vec<f64> = row.iter().map(|s| s / temperature).collect();
                w.push(0.0);
                w
            })
            .collect();
        SoftmaxLinearPolicy::new(weights, dim)
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn logits(&self, state: &[f64]) -> Vec<f64> {
        assert_eq!(state.len(), self.dim, "state dimension mismatch");
        self.weights
            .iter()
            .map(|row| {
                let mut z = row[self.dim];
                for (w, x) in row[..self.dim].iter().zip(state) {
                    z += w * x;
                }
                z
            })
            .collect()
    }
}

impl PolicyModel for SoftmaxLinearPolicy {
    fn action_count(&self) -> usize {
        self.weights.len()
    }

    fn propensity(&self, state: &[f64], action: usize) -> f64 {
        self.propensity_vector(state)[action]
    }

    fn propensity_vector(&self, state: &[f64]) -> Vec<f64> {
        let mut z = self.logits(state);
        let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in z.iter_mut() {
            *v = (*v - zmax).exp();
            sum += *v;
        }
        for v in z.iter_mut() {
            *v /= sum;
        }
        z
    }
}

/// Uniform mixture wrapper: `(1 - sigma) * base + sigma / |A|` per state.
#[derive(Clone)]
pub struct UniformMixPolicy<P: PolicyModel> {
    base: P,
    sigma: f64,
}

impl<P: PolicyModel> UniformMixPolicy<P> {
    pub fn new(base: P, sigma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&sigma) {
            return Err(Error::Argument(format!("sigma {sigma} outside [0, 1]")));
        }
        Ok(UniformMixPolicy { base, sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl<P: PolicyModel> PolicyModel for UniformMixPolicy<P> {
    fn action_count(&self) -> usize {
        self.base.action_count()
    }

    fn propensity(&self, state: &[f64], action: usize) -> f64 {
        let k = self.action_count() as f64;
        (1.0 - self.sigma) * self.base.propensity(state, action) + self.sigma / k
    }

    fn propensity_vector(&self, state: &[f64]) -> Vec<f64> {
        let k = self.action_count() as f64;
        self.base
            .propensity_vector(state)
            .into_iter()
            .map(|p| (1.0 - self.sigma) * p + self.sigma / k)
            .collect()
    }
}

impl PolicyModel for Box<dyn PolicyModel> {
    fn action_count(&self) -> usize {
        self.as_ref().action_count()
    }

    fn propensity(&self, state: &[f64], action: usize) -> f64 {
        self.as_ref().propensity(state, action)
    }

    fn propensity_vector(&self, state: &[f64]) -> Vec<f64> {
        self.as_ref().propensity_vector(state)
    }
}
