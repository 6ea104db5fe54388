//! Generative environments and oracles: the single-state sparse-reward
//! bandit, the non-Markovian boredom process, policy-pair constructors with
//! tunable overlap, and exact / Monte-Carlo improvement oracles.
//!
//! Every simulated user consumes an independent random stream derived from
//! `(seed, arm, user index)`, so datasets are byte-identical for a fixed
//! seed regardless of evaluation order.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{sample_index, validate_simplex, PolicyModel, SoftmaxLinearPolicy, TabularPolicy};
use crate::rng::derive_rng;
use crate::stats::mean;
use crate::types::{Arm, Dataset, Step, Trajectory};

/// Single-state bandit: K actions, Bernoulli rewards, explicit policy pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditSpec {
    pub action_count: usize,
    pub reward_probs: Vec<f64>,
    pub pi_a: Vec<f64>,
    pub pi_b: Vec<f64>,
}

impl BanditSpec {
    pub fn new(reward_probs: Vec<f64>, pi_a: Vec<f64>, pi_b: Vec<f64>) -> Result<Self> {
        let k = reward_probs.len();
        if k == 0 {
            return Err(Error::Argument("bandit needs at least one action".into()));
        }
        if reward_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Argument("reward probabilities must lie in [0, 1]".into()));
        }
        if pi_a.len() != k || pi_b.len() != k {
            return Err(Error::Argument("policy vectors must match the action count".into()));
        }
        validate_simplex(&pi_a)?;
        validate_simplex(&pi_b)?;
        Ok(BanditSpec { action_count: k, reward_probs, pi_a, pi_b })
    }

    pub fn policy_a(&self) -> TabularPolicy {
        TabularPolicy::new(self.pi_a.clone()).expect("validated at construction")
    }

    pub fn policy_b(&self) -> TabularPolicy {
        TabularPolicy::new(self.pi_b.clone()).expect("validated at construction")
    }

    /// The default sparse reward profile for K = 10: most arms pay rarely,
    /// one pays often.
    pub fn sparse_rewards_k10() -> Vec<f64> {
        vec![0.02, 0.04, 0.03, 0.05, 0.04, 0.06, 0.05, 0.08, 0.10, 0.35]
    }
}

/// Non-Markovian boredom process:
/// `s_{t+1} = rho s_0 + (1 - rho)(s_t + sigma eps - beta_a (.) s_t)` with
/// states clipped to [0,1]^d, and rewards `r_t ~ Bernoulli(y_t)` with
/// `y_t = clip(<beta_a, s_t> / d, 0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoredomSpec {
    pub dim: usize,
    pub rho: f64,
    pub sigma_noise: f64,
    /// One parameter row per action, entries in [0, 1].
    pub beta: Vec<Vec<f64>>,
    pub horizon: usize,
}

impl BoredomSpec {
    pub fn new(dim: usize, rho: f64, sigma_noise: f64, beta: Vec<Vec<f64>>, horizon: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::Argument(format!("rho {rho} outside [0, 1]")));
        }
        if sigma_noise < 0.0 {
            return Err(Error::Argument("sigma_noise must be nonnegative".into()));
        }
        if horizon == 0 {
            return Err(Error::Argument("horizon must be >= 1".into()));
        }
        if beta.is_empty() || beta.iter().any(|row| row.len() != dim) {
            return Err(Error::Argument("beta must be (actions x dim)".into()));
        }
        if beta.iter().flatten().any(|&b| !(0.0..=1.0).contains(&b)) {
            return Err(Error::Argument("beta entries must lie in [0, 1]".into()));
        }
        Ok(BoredomSpec { dim, rho, sigma_noise, beta, horizon })
    }

    /// Seeded beta matrix with one dominant coordinate per action, making
    /// actions distinguishable and depletion observable.
    pub fn seeded_beta(action_count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = derive_rng(seed, &[0xbe7a]);
        (0..action_count)
            .map(|a| {
                (0..dim)
                    .map(|j| {
                        if j == a % dim {
                            rng.random_range(0.7..1.0)
                        } else {
                            rng.random_range(0.0..0.3)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn action_count(&self) -> usize {
        self.beta.len()
    }

    /// Expected reward for `action` in `state`.
    pub fn success_prob(&self, state: &[f64], action: usize) -> f64 {
        let dot: f64 = self.beta[action].iter().zip(state).map(|(b, s)| b * s).sum();
        (dot / self.dim as f64).clamp(0.0, 1.0)
    }

    /// Per-action scores `<beta_a, s>` used by the acting softmax policies.
    pub fn acting_policy(&self, temperature: f64) -> Result<SoftmaxLinearPolicy> {
        SoftmaxLinearPolicy::from_scores(&self.beta, temperature, self.dim)
    }

    fn transition(&self, s0: &[f64], s: &mut [f64], action: usize, rng: &mut impl Rng) {
        for j in 0..self.dim {
            let eps: f64 = StandardNormal.sample(rng);
            let drift = s[j] + self.sigma_noise * eps - self.beta[action][j] * s[j];
            s[j] = (self.rho * s0[j] + (1.0 - self.rho) * drift).clamp(0.0, 1.0);
        }
    }
}

/// Policy-pair constructor family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PolicyPairSpec {
    /// Softmax over shared base scores with per-arm temperatures. With a
    /// distance hint, the B temperature is recalibrated by bisection on the
    /// temperature gap.
    SoftmaxTemperature {
        base_scores: Vec<f64>,
        temp_a: f64,
        temp_b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        distance_hint: Option<f64>,
    },
    /// Explicit probability vectors.
    Explicit {
        pi_a: Vec<f64>,
        pi_b: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        distance_hint: Option<f64>,
    },
}

/// Symmetric chi-square style divergence between two probability vectors
/// plus a flag marking excluded zero-denominator terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyDistance {
    pub value: f64,
    pub partial: bool,
}

/// `d(pi_A, pi_B) = 1/2 (E_A[(pi_B/pi_A - 1)^2] + E_B[(pi_A/pi_B - 1)^2])`.
///
/// Terms whose denominator vanishes while the numerator does not are
/// excluded from that arm's expectation and the result is flagged partial.
pub fn policy_distance(pi_a: &[f64], pi_b: &[f64]) -> Result<PolicyDistance> {
    validate_simplex(pi_a)?;
    validate_simplex(pi_b)?;
    if pi_a.len() != pi_b.len() {
        return Err(Error::Argument("policy vectors differ in length".into()));
    }
    let mut partial = false;
    let mut acc = 0.0;
    for (own, other) in [(pi_a, pi_b), (pi_b, pi_a)] {
        let mut e = 0.0;
        for (&po, &pq) in own.iter().zip(other) {
            if po > 0.0 {
                let r = pq / po - 1.0;
                e += po * r * r;
            } else if pq > 0.0 {
                partial = true;
            }
        }
        acc += e;
    }
    Ok(PolicyDistance { value: 0.5 * acc, partial })
}

const HINT_REL_TOL: f64 = 0.25;

/// Construct a policy pair, optionally calibrating to a distance hint.
/// Returns the pair and the achieved distance.
pub fn make_policy_pair(spec: &PolicyPairSpec, _seed: u64) -> Result<(TabularPolicy, TabularPolicy, f64)> {
    match spec {
        PolicyPairSpec::Explicit { pi_a, pi_b, distance_hint } => {
            let d = policy_distance(pi_a, pi_b)?.value;
            if let Some(h) = distance_hint {
                check_hint(d, *h)?;
            }
            Ok((TabularPolicy::new(pi_a.clone())?, TabularPolicy::new(pi_b.clone())?, d))
        }
        PolicyPairSpec::SoftmaxTemperature { base_scores, temp_a, temp_b, distance_hint } => {
            if base_scores.len() < 2 {
                return Err(Error::Argument("softmax pair needs K >= 2 base scores".into()));
            }
            if *temp_a <= 0.0 || *temp_b <= 0.0 {
                return Err(Error::Argument("temperatures must be positive".into()));
            }
            let pa = softmax_vec(base_scores, *temp_a);
            match distance_hint {
                None => {
                    let pb = softmax_vec(base_scores, *temp_b);
                    let d = policy_distance(&pa, &pb)?.value;
                    Ok((TabularPolicy::new(pa)?, TabularPolicy::new(pb)?, d))
                }
                Some(hint) => {
                    if *hint < 0.0 {
                        return Err(Error::Argument("distance hint must be nonnegative".into()));
                    }
                    // Bisection on the temperature gap g, with
                    // temp_b = temp_a / (1 + g); distance grows with g.
                    let dist_at = |g: f64| -> f64 {
                        let pb = softmax_vec(base_scores, temp_a / (1.0 + g));
                        policy_distance(&pa, &pb).map(|d| d.value).unwrap_or(f64::INFINITY)
                    };
                    let g_max = 400.0;
                    if dist_at(g_max) < *hint {
                        return Err(Error::Calibration(format!(
                            "distance hint {hint} unreachable with this score profile (max {})",
                            dist_at(g_max)
                        )));
                    }
                    let (mut lo, mut hi) = (0.0f64, g_max);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if dist_at(mid) < *hint {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    let g = 0.5 * (lo + hi);
                    let pb = softmax_vec(base_scores, temp_a / (1.0 + g));
                    let d = policy_distance(&pa, &pb)?.value;
                    check_hint(d, *hint)?;
                    Ok((TabularPolicy::new(pa)?, TabularPolicy::new(pb)?, d))
                }
            }
        }
    }
}

fn check_hint(achieved: f64, hint: f64) -> Result<()> {
    if hint == 0.0 {
        if achieved > 1e-9 {
            return Err(Error::Calibration(format!("achieved distance {achieved} for hint 0")));
        }
        return Ok(());
    }
    if (achieved - hint).abs() > HINT_REL_TOL * hint {
        return Err(Error::Calibration(format!(
            "achieved distance {achieved} misses hint {hint} by more than {}%",
            HINT_REL_TOL * 100.0
        )));
    }
    Ok(())
}

fn softmax_vec(scores: &[f64], temp: f64) -> Vec<f64> {
    let zmax = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut v: Vec<f64> = scores.iter().map(|s| ((s - zmax) / temp).exp()).collect();
    let sum: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= sum;
    }
    v
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

fn arm_tag(arm: Arm) -> u64 {
    match arm {
        Arm::A => 0xaa,
        Arm::B => 0xbb,
    }
}

/// Simulate one bandit arm: each user contributes a single step.
fn simulate_bandit_arm(spec: &BanditSpec, arm: Arm, n: usize, seed: u64) -> Result<Dataset> {
    let probs = match arm {
        Arm::A => &spec.pi_a,
        Arm::B => &spec.pi_b,
    };
    let mut trajs = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = derive_rng(seed, &[arm_tag(arm), i as u64]);
        let action = sample_index(probs, &mut rng);
        let reward = if rng.random::<f64>() < spec.reward_probs[action] { 1.0 } else { 0.0 };
        let step = Step::new(vec![], action, reward, probs[action])?;
        trajs.push(Trajectory::new(format!("{}{i}", arm.label().to_lowercase()), arm, vec![step])?);
    }
    Dataset::new(trajs)
}

/// Simulate a two-arm bandit dataset; deterministic in `(spec, seed)`.
pub fn simulate_bandit(spec: &BanditSpec, n_a: usize, n_b: usize, seed: u64) -> Result<Dataset> {
    let a = simulate_bandit_arm(spec, Arm::A, n_a, seed)?;
    let b = simulate_bandit_arm(spec, Arm::B, n_b, seed)?;
    a.merge(b)
}

/// Simulate one arm of the boredom process under `policy`. Trajectories run
/// exactly `spec.horizon` steps.
pub fn simulate_boredom(
    spec: &BoredomSpec,
    policy: &dyn PolicyModel,
    arm: Arm,
    n_users: usize,
    seed: u64,
) -> Result<Dataset> {
    if policy.action_count() != spec.action_count() {
        return Err(Error::Argument("policy action count does not match beta rows".into()));
    }
    let mut trajs = Vec::with_capacity(n_users);
    for i in 0..n_users {
        let mut rng = derive_rng(seed, &[arm_tag(arm), i as u64]);
        let s0: Vec<f64> = (0..spec.dim).map(|_| rng.random::<f64>()).collect();
        let mut s = s0.clone();
        let mut steps = Vec::with_capacity(spec.horizon);
        for _ in 0..spec.horizon {
            let probs = policy.propensity_vector(&s);
            let action = sample_index(&probs, &mut rng);
            let y = spec.success_prob(&s, action);
            let reward = if rng.random::<f64>() < y { 1.0 } else { 0.0 };
            steps.push(Step::new(s.clone(), action, reward, probs[action])?);
            spec.transition(&s0, &mut s, action, &mut rng);
        }
        trajs.push(Trajectory::new(format!("{}{i}", arm.label().to_lowercase()), arm, steps)?);
    }
    Dataset::new(trajs)
}

/// Exact improvement for the single-state bandit:
/// `sum_a (pi_A(a) - pi_B(a)) p(a)`.
pub fn true_improvement_bandit(spec: &BanditSpec) -> f64 {
    spec.pi_a
        .iter()
        .zip(&spec.pi_b)
        .zip(&spec.reward_probs)
        .map(|((a, b), p)| (a - b) * p)
        .sum()
}

/// Monte-Carlo improvement oracle for the boredom process. The Bernoulli
/// reward expectation is taken analytically (cumulative y_t), which removes
/// the reward-sampling variance. Returns `(estimate, standard error)`.
pub fn true_improvement_mc(
    spec: &BoredomSpec,
    pi_a: &dyn PolicyModel,
    pi_b: &dyn PolicyModel,
    reps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if reps < 1_000 {
        return Err(Error::Argument("oracle needs reps >= 1000".into()));
    }
    let mut sums = [Vec::with_capacity(reps), Vec::with_capacity(reps)];
    for (slot, (policy, arm)) in [(pi_a, Arm::A), (pi_b, Arm::B)].into_iter().enumerate() {
        for i in 0..reps {
            let mut rng = derive_rng(seed, &[0x02ac1e, arm_tag(arm), i as u64]);
            let s0: Vec<f64> = (0..spec.dim).map(|_| rng.random::<f64>()).collect();
            let mut s = s0.clone();
            let mut acc = 0.0;
            for _ in 0..spec.horizon {
                let probs = policy.propensity_vector(&s);
                let action = sample_index(&probs, &mut rng);
                acc += spec.success_prob(&s, action);
                spec.transition(&s0, &mut s, action, &mut rng);
            }
            sums[slot].push(acc);
        }
    }
    let est = mean(&sums[0]) - mean(&sums[1]);
    let var = sums
        .iter()
        .map(|v| crate::stats::sample_variance(v).unwrap_or(0.0) / reps as f64)
        .sum::<f64>();
    Ok((est, var.sqrt()))
}

// ---------------------------------------------------------------------------
// Long-horizon epsilon pair
// ---------------------------------------------------------------------------

/// Binary-action environment for the long-horizon fallback study:
/// `pi_A(a+) = 0`, `pi_B(a+) = epsilon`, reward only at the final step with
/// probability depending on the final action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEnv {
    pub t0: usize,
    pub epsilon: f64,
    pub q_minus: f64,
    pub q_plus: f64,
}

impl EpsilonEnv {
    /// Simulate both arms; trajectories run exactly `t0` steps and the only
    /// nonzero reward arrives at t = t0.
    pub fn simulate(&self, n_a: usize, n_b: usize, seed: u64) -> Result<Dataset> {
        let mut trajs = Vec::with_capacity(n_a + n_b);
        for (arm, n, p_plus) in [(Arm::A, n_a, 0.0), (Arm::B, n_b, self.epsilon)] {
            for i in 0..n {
                let mut rng = derive_rng(seed, &[arm_tag(arm), i as u64]);
                let mut steps = Vec::with_capacity(self.t0);
                for t in 0..self.t0 {
                    let plus = p_plus > 0.0 && rng.random::<f64>() < p_plus;
                    let (action, lp) = if plus { (1, p_plus) } else { (0, 1.0 - p_plus) };
                    let reward = if t + 1 == self.t0 {
                        let q = if action == 1 { self.q_plus } else { self.q_minus };
                        if rng.random::<f64>() < q {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        0.0
                    };
                    steps.push(Step::new(vec![], action, reward, lp)?);
                }
                trajs.push(Trajectory::new(format!("{}{i}", arm.label().to_lowercase()), arm, steps)?);
            }
        }
        Dataset::new(trajs)
    }
}

/// The section-4.5 pair: `pi_A(a+|s) = 0`, `pi_B(a+|s) = epsilon`, fixed
/// horizon `t0`. Returns the two policies and the environment.
pub fn epsilon_pair(t0: usize, epsilon: f64) -> Result<(TabularPolicy, TabularPolicy, EpsilonEnv)> {
    if t0 == 0 {
        return Err(Error::Argument("t0 must be >= 1".into()));
    }
    if !(0.0 < epsilon && epsilon <= 1.0) {
        return Err(Error::Argument(format!("epsilon {epsilon} outside (0, 1]")));
    }
    let pi_a = TabularPolicy::new(vec![1.0, 0.0])?;
    let pi_b = TabularPolicy::new(vec![1.0 - epsilon, epsilon])?;
    let env = EpsilonEnv { t0, epsilon, q_minus: 0.5, q_plus: 0.9 };
    Ok((pi_a, pi_b, env))
}
