//! Off-policy augmented A/B testing.
//!
//! A/B tests traditionally compare two systems as black boxes through the
//! difference-in-means estimator. When the tested policies are stochastic
//! and their propensities are available (or can be learned), importance
//! weighting turns that overlap into variance reduction. This crate
//! implements the resulting estimator family:
//!
//! - trajectory-prefix importance weights with explicit zero / infinity
//!   conventions ([`weights`]),
//! - the bounded weight-transform family, its surrogate-optimal and
//!   misspecification-aware members, and the reverse / convex algebra
//!   ([`transforms`]),
//! - improvement estimators with CLT confidence intervals and the variance
//!   surrogate ([`estimators`]),
//! - propensity fitting by penalized maximum likelihood and controlled
//!   perturbation ([`propensity`]),
//! - simulation environments and improvement oracles ([`simulators`]).

pub mod error;
pub mod estimators;
pub mod logio;
pub mod policy;
pub mod propensity;
pub mod rng;
pub mod simulators;
pub mod stats;
pub mod transforms;
pub mod types;
pub mod weights;

pub use error::{Error, Result};
pub use estimators::{
    confidence_interval, diff_in_means, f_estimate, f_estimate_from_view, f_estimate_mixture_form,
    ips_improvement, reverse_f_estimate, variance_surrogate_empirical,
    variance_surrogate_exact_bandit, CounterfactualView, ImprovementReport,
};
pub use logio::{read_trajectory_log, to_log_bytes, write_trajectory_log};
pub use policy::{PolicyModel, SoftmaxLinearPolicy, TabularPolicy, UniformMixPolicy};
pub use propensity::{
    build_counterfactual_view, fit_softmax_mle, perturb_uniform_mix, FitOptions, FittedPolicy,
    PerturbationSpec,
};
pub use simulators::{
    epsilon_pair, make_policy_pair, policy_distance, simulate_bandit, simulate_boredom,
    true_improvement_bandit, true_improvement_mc, BanditSpec, BoredomSpec, EpsilonEnv,
    PolicyPairSpec,
};
pub use transforms::{check_conditions, eval_noise, NoiseModel, WeightTransform};
pub use types::{Arm, Dataset, Step, Trajectory};
pub use weights::{prefix_weight, trajectory_propensity, ExtendedWeight};
