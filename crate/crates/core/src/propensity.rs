//! Propensity estimation from logged data and controlled misspecification.
//!
//! The model family is softmax-linear in state features with intercept,
//! matching the simulators' generative family so misspecification is
//! controlled by sample size rather than model class. Fitting is full-batch
//! gradient descent with Armijo backtracking from zero weights, which makes
//! the result deterministic in the data order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::CounterfactualView;
use crate::policy::{PolicyModel, SoftmaxLinearPolicy, UniformMixPolicy};
use crate::transforms::NoiseModel;
use crate::types::{Arm, Dataset};

/// Fit diagnostics reported alongside the learned weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Mean negative log-likelihood plus the L2 penalty at the optimum.
    pub final_objective: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
}

/// A softmax-linear conditional distribution learned by penalized maximum
/// likelihood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPolicy {
    /// Shape (actions x (dim + 1)); last column is the intercept.
    pub weights: Vec<Vec<f64>>,
    pub actions: usize,
    pub dim: usize,
    pub diagnostics: FitDiagnostics,
}

impl FittedPolicy {
    pub fn policy(&self) -> Result<SoftmaxLinearPolicy> {
        SoftmaxLinearPolicy::new(self.weights.clone(), self.dim)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Argument(format!("bad fitted-model JSON: {e}")))
    }
}

/// One (state, action) observation for fitting.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub state: Vec<f64>,
    pub action: usize,
}

/// Collect the fitting records of one arm of a dataset.
pub fn arm_step_records(data: &Dataset, arm: Arm) -> Vec<StepRecord> {
    data.iter_arm(arm)
        .flat_map(|t| {
            t.steps
                .iter()
                .map(|s| StepRecord { state: s.state.clone(), action: s.action })
        })
        .collect()
}

/// Options for [`fit_softmax_mle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// L2 penalty on feature weights (intercept unpenalized), applied to the
    /// mean log-likelihood so duplicated records leave the optimum unchanged.
    pub reg: f64,
    pub max_iter: usize,
    /// Convergence threshold on the gradient infinity norm.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { reg: 1e-4, max_iter: 500, tol: 1e-5 }
    }
}

struct Objective<'a> {
    records: &'a [StepRecord],
    dim: usize,
    actions: usize,
    reg: f64,
}

impl Objective<'_> {
    /// Mean NLL + (reg/2) ||W_features||^2 and its gradient.
    fn eval(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let (k, d) = (self.actions, self.dim);
        let cols = d + 1;
        let n = self.records.len() as f64;
        grad.fill(0.0);
        let mut nll = 0.0;
        let mut logits = vec![0.0f64; k];
        for rec in self.records {
            for a in 0..k {
                let row = &w[a * cols..(a + 1) * cols];
                let mut z = row[d];
                for (wj, xj) in row[..d].iter().zip(&rec.state) {
                    z += wj * xj;
                }
                logits[a] = z;
            }
            let zmax = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for z in logits.iter_mut() {
                *z = (*z - zmax).exp();
                sum += *z;
            }
            nll -= (logits[rec.action] / sum).ln();
            for a in 0..k {
                let p = logits[a] / sum;
                let resid = p - if a == rec.action { 1.0 } else { 0.0 };
                let g = &mut grad[a * cols..(a + 1) * cols];
                for (gj, xj) in g[..d].iter_mut().zip(&rec.state) {
                    *gj += resid * xj;
                }
                g[d] += resid;
            }
        }
        for v in grad.iter_mut() {
            *v /= n;
        }
        let mut penalty = 0.0;
        for a in 0..k {
            for j in 0..d {
                let idx = a * cols + j;
                penalty += w[idx] * w[idx];
                grad[idx] += self.reg * w[idx];
            }
        }
        nll / n + 0.5 * self.reg * penalty
    }
}

/// Fit a softmax-linear policy by L2-regularized maximum likelihood.
///
/// Deterministic: zero initialization, full-batch gradient descent with
/// Armijo backtracking and step growth. With `max_iter = 0` the zero-weight
/// (uniform) policy is returned.
pub fn fit_softmax_mle(
    records: &[StepRecord],
    dim: usize,
    action_count: usize,
    opts: &FitOptions,
) -> Result<FittedPolicy> {
    if records.is_empty() {
        return Err(Error::InsufficientData("no step records to fit on".into()));
    }
    if action_count == 0 {
        return Err(Error::Argument("action_count must be positive".into()));
    }
    for r in records {
        if r.state.len() != dim {
            return Err(Error::Argument("record state dimension mismatch".into()));
        }
        if r.state.iter().any(|x| !x.is_finite()) {
            return Err(Error::Argument("non-finite state features".into()));
        }
        if r.action >= action_count {
            return Err(Error::Argument(format!(
                "action {} outside action set of size {action_count}",
                r.action
            )));
        }
    }
    if opts.reg < 0.0 {
        return Err(Error::Argument("reg must be nonnegative".into()));
    }

    let cols = dim + 1;
    let obj = Objective { records, dim, actions: action_count, reg: opts.reg };
    let mut w = vec![0.0f64; action_count * cols];
    let mut grad = vec![0.0f64; w.len()];
    let mut loss = obj.eval(&w, &mut grad);
    let mut step = 1.0f64;
    let mut iters = 0;
    let mut gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let mut trial = vec![0.0f64; w.len()];
    let mut trial_grad = vec![0.0f64; w.len()];
    while iters < opts.max_iter && gnorm > opts.tol {
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        loop {
            for ((t, wi), gi) in trial.iter_mut().zip(&w).zip(&grad) {
                *t = wi - step * gi;
            }
            let trial_loss = obj.eval(&trial, &mut trial_grad);
            if trial_loss <= loss - 0.5 * step * g2 || step < 1e-12 {
                w.copy_from_slice(&trial);
                grad.copy_from_slice(&trial_grad);
                loss = trial_loss;
                break;
            }
            step *= 0.5;
        }
        step *= 2.0;
        gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        iters += 1;
    }

    let weights = (0..action_count)
        .map(|a| w[a * cols..(a + 1) * cols].to_vec())
        .collect();
    Ok(FittedPolicy {
        weights,
        actions: action_count,
        dim,
        diagnostics: FitDiagnostics {
            final_objective: loss,
            iterations: iters,
            gradient_norm: gnorm,
            converged: gnorm <= opts.tol,
        },
    })
}

/// Uniform-mixing perturbation level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub sigma: f64,
}

impl PerturbationSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&sigma) {
            return Err(Error::Argument(format!("sigma {sigma} outside [0, 1]")));
        }
        Ok(PerturbationSpec { sigma })
    }
}

/// `(1 - sigma) pi + sigma / |A|` per state; simplex membership is exact.
pub fn perturb_uniform_mix<P: PolicyModel>(policy: P, spec: PerturbationSpec) -> Result<UniformMixPolicy<P>> {
    UniformMixPolicy::new(policy, spec.sigma)
}

/// Prefix weights and cumulative noise from plug-in propensity models.
/// Noise accumulates from the estimated step ratios (the deployment case).
pub fn build_counterfactual_view(
    data: &Dataset,
    pi_a_hat: &dyn PolicyModel,
    pi_b_hat: &dyn PolicyModel,
    noise: NoiseModel,
) -> Result<CounterfactualView> {
    CounterfactualView::build(data, pi_a_hat, pi_b_hat, Some(noise), None)
}

/// Oracle-study variant: weights from the plug-in models, noise from the
/// true step ratios.
pub fn build_counterfactual_view_with_noise_source(
    data: &Dataset,
    pi_a_hat: &dyn PolicyModel,
    pi_b_hat: &dyn PolicyModel,
    noise: NoiseModel,
    noise_pi_a: &dyn PolicyModel,
    noise_pi_b: &dyn PolicyModel,
) -> Result<CounterfactualView> {
    CounterfactualView::build(data, pi_a_hat, pi_b_hat, Some(noise), Some((noise_pi_a, noise_pi_b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::TabularPolicy;
    use crate::rng::derive_rng;
    use crate::simulators::{simulate_bandit, BanditSpec};
    use crate::weights::prefix_weight;
    use rand::Rng;

    fn synth_records(n: usize, seed: u64) -> (Vec<StepRecord>, SoftmaxLinearPolicy) {
        let dim = 3;
        let k = 4;
        let mut rng = derive_rng(seed, &[7]);
        let weights: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..=dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let truth = SoftmaxLinearPolicy::new(weights, dim).unwrap();
        let records = (0..n)
            .map(|_| {
                let state: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
                let action = truth.sample(&state, &mut rng);
                StepRecord { state, action }
            })
            .collect();
        (records, truth)
    }

    #[test]
    fn zero_iterations_gives_uniform() {
        let (records, _) = synth_records(100, 1);
        let opts = FitOptions { max_iter: 0, ..FitOptions::default() };
        let fit = fit_softmax_mle(&records, 3, 4, &opts).unwrap();
        let pol = fit.policy().unwrap();
        let v = pol.propensity_vector(&[0.2, 0.5, 0.8]);
        for p in v {
            assert!((p - 0.25).abs() < 1e-12);
        }
        assert_eq!(fit.diagnostics.iterations, 0);
    }

    #[test]
    fn degenerate_single_action_fit() {
        let mut rng = derive_rng(3, &[1]);
        let records: Vec<StepRecord> = (0..500)
            .map(|_| StepRecord {
                state: (0..2).map(|_| rng.random::<f64>()).collect(),
                action: 2,
            })
            .collect();
        let opts = FitOptions { reg: 1e-2, max_iter: 400, tol: 1e-6 };
        let fit = fit_softmax_mle(&records, 2, 4, &opts).unwrap();
        let pol = fit.policy().unwrap();
        for rec in records.iter().take(50) {
            let v = pol.propensity_vector(&rec.state);
            assert!(v[2] >= 0.95, "propensity {}", v[2]);
            assert!(v.iter().all(|p| p.is_finite() && *p > 0.0));
        }
    }

    #[test]
    fn duplication_leaves_optimum_unchanged() {
        let (records, _) = synth_records(300, 5);
        let opts = FitOptions { reg: 1e-3, max_iter: 300, tol: 1e-8 };
        let fit1 = fit_softmax_mle(&records, 3, 4, &opts).unwrap();
        let doubled: Vec<StepRecord> = records.iter().chain(records.iter()).cloned().collect();
        let fit2 = fit_softmax_mle(&doubled, 3, 4, &opts).unwrap();
        for (r1, r2) in fit1.weights.iter().zip(&fit2.weights) {
            for (a, b) in r1.iter().zip(r2) {
                assert!((a - b).abs() < 1e-4, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn self_consistency_on_synthetic_data() {
        let (records, truth) = synth_records(30_000, 11);
        let fit = fit_softmax_mle(&records, 3, 4, &FitOptions::default()).unwrap();
        let pol = fit.policy().unwrap();
        let mut rng = derive_rng(12, &[2]);
        let mut err = 0.0;
        let held = check_heldout(&mut rng, &truth, &pol, &mut err);
        assert!(held <= 0.02, "held-out propensity MAE {held}");
    }

    fn check_heldout(
        rng: &mut impl Rng,
        truth: &SoftmaxLinearPolicy,
        fitted: &SoftmaxLinearPolicy,
        _acc: &mut f64,
    ) -> f64 {
        let m = 2_000;
        let mut total = 0.0;
        for _ in 0..m {
            let s: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let a = truth.propensity_vector(&s);
            let b = fitted.propensity_vector(&s);
            total += a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).abs())
                .sum::<f64>()
                / a.len() as f64;
        }
        total / m as f64
    }

    #[test]
    fn fit_input_validation() {
        assert!(fit_softmax_mle(&[], 2, 3, &FitOptions::default()).is_err());
        let bad = [StepRecord { state: vec![f64::NAN, 0.0], action: 0 }];
        assert!(fit_softmax_mle(&bad, 2, 3, &FitOptions::default()).is_err());
        let oob = [StepRecord { state: vec![0.0, 0.0], action: 5 }];
        assert!(fit_softmax_mle(&oob, 2, 3, &FitOptions::default()).is_err());
    }

    #[test]
    fn perturbation_endpoints_and_affinity() {
        let base = TabularPolicy::new(vec![0.9, 0.1]).unwrap();
        let p0 = perturb_uniform_mix(base.clone(), PerturbationSpec::new(0.0).unwrap()).unwrap();
        assert_eq!(p0.propensity(&[], 0), 0.9);
        let p1 = perturb_uniform_mix(base.clone(), PerturbationSpec::new(1.0).unwrap()).unwrap();
        assert!((p1.propensity(&[], 0) - 0.5).abs() < 1e-15);
        assert!(PerturbationSpec::new(1.5).is_err());
        // affine in sigma and on the simplex
        for sigma in [0.1, 0.37, 0.8] {
            let p = perturb_uniform_mix(base.clone(), PerturbationSpec::new(sigma).unwrap()).unwrap();
            let v = p.propensity_vector(&[]);
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            let expect = (1.0 - sigma) * 0.9 + sigma / 2.0;
            assert!((v[0] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn view_with_exact_models_matches_prefix_weight() {
        let spec = BanditSpec::new(
            vec![0.5; 4],
            vec![0.1, 0.2, 0.3, 0.4],
            vec![0.4, 0.3, 0.2, 0.1],
        )
        .unwrap();
        let ds = simulate_bandit(&spec, 30, 30, 77).unwrap();
        let (pa, pb) = (spec.policy_a(), spec.policy_b());
        let view = build_counterfactual_view(&ds, &pa, &pb, NoiseModel::ClippedLog).unwrap();
        for (tv, traj) in view.trajectories().iter().zip(ds.trajectories()) {
            let pt = &tv.points[0];
            let w = (pt.log_pi_a - pt.log_pi_b).exp();
            let expect = prefix_weight(&pa, &pb, traj, 1).unwrap();
            assert!((w - expect.value()).abs() <= 1e-12 * expect.value());
        }
    }

    #[test]
    fn view_identical_models_unit_weights_zero_noise() {
        let spec = BanditSpec::new(vec![0.5; 3], vec![0.2, 0.3, 0.5], vec![0.2, 0.3, 0.5]).unwrap();
        let ds = simulate_bandit(&spec, 20, 20, 4).unwrap();
        let p = spec.policy_a();
        let view = build_counterfactual_view(&ds, &p, &p, NoiseModel::ClippedLog).unwrap();
        for tv in view.trajectories() {
            for pt in &tv.points {
                assert_eq!(pt.log_pi_a, pt.log_pi_b);
                assert_eq!(pt.cum_noise, 0.0);
            }
        }
    }

    #[test]
    fn view_rejects_zero_own_arm_propensity() {
        let spec = BanditSpec::new(vec![0.5, 0.5], vec![0.5, 0.5], vec![0.5, 0.5]).unwrap();
        let ds = simulate_bandit(&spec, 2, 2, 9).unwrap();
        // a fitted B model that assigns zero to some logged B action
        let dead = TabularPolicy::new(vec![1.0, 0.0]).unwrap();
        let pa = spec.policy_a();
        let res = build_counterfactual_view(&ds, &pa, &dead, NoiseModel::ConstantOne);
        // with 2 B users at seed 9 at least one plays action 1
        assert!(matches!(res, Err(Error::SupportViolation { .. })));
    }

    #[test]
    fn weight_error_grows_with_sigma() {
        let spec = BanditSpec::new(
            BanditSpec::sparse_rewards_k10(),
            vec![0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.3, 0.3],
            vec![0.3, 0.3, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05],
        )
        .unwrap();
        let ds = simulate_bandit(&spec, 400, 400, 31).unwrap();
        let (pa, pb) = (spec.policy_a(), spec.policy_b());
        let mut errs = Vec::new();
        for sigma in [0.1, 0.3, 0.5] {
            let ha = perturb_uniform_mix(pa.clone(), PerturbationSpec::new(sigma).unwrap()).unwrap();
            let hb = perturb_uniform_mix(pb.clone(), PerturbationSpec::new(sigma).unwrap()).unwrap();
            let view = build_counterfactual_view(&ds, &ha, &hb, NoiseModel::ClippedLog).unwrap();
            let exact = build_counterfactual_view(&ds, &pa, &pb, NoiseModel::ClippedLog).unwrap();
            let mut rel = 0.0;
            let mut count = 0usize;
            for (tv, te) in view.trajectories().iter().zip(exact.trajectories()) {
                for (ph, pe) in tv.points.iter().zip(&te.points) {
                    let wh = (ph.log_pi_a - ph.log_pi_b).exp();
                    let we = (pe.log_pi_a - pe.log_pi_b).exp();
                    rel += (wh - we).abs() / we;
                    count += 1;
                }
            }
            errs.push(rel / count as f64);
        }
        assert!(errs[0] < errs[1] && errs[1] < errs[2], "errors {errs:?}");
    }
}
