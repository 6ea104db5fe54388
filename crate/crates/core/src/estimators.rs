//! Improvement estimators over two-arm datasets.
//!
//! The family is parameterized by a weight transform f:
//!
//! ```text
//! I_f = (1/n_B) sum_{B users} sum_t f(w(tau_t)) r_t
//!     + (1/n_A) sum_{A users} sum_t (1 - wbar(tau_t) [1 + f(1/wbar(tau_t))]) r_t
//! ```
//!
//! where on B-arm trajectories the transform argument is
//! `w = pi_A(tau_t) / pi_B(tau_t)` and on A-arm trajectories the correction
//! weight is `wbar = pi_B(tau_t) / pi_A(tau_t)`. With f = -1 this reduces to
//! the difference-in-means estimator; f = f* minimizes the variance
//! surrogate. Products of the form `wbar [1 + f(1/wbar)]` at `wbar = 0`
//! follow an explicit limit rule rather than floating-point arithmetic:
//! zero for bounded transforms, `1 - f'(0)` for reverse-built ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::PolicyModel;
use crate::simulators::BanditSpec;
use crate::stats::{mean, normal_quantile, sample_variance};
use crate::transforms::{NoiseModel, TrajectoryNoise, WeightTransform};
use crate::types::{Arm, Dataset};
use crate::weights::{log_is_zero, weight_from_logs, ExtendedWeight};

/// Default two-sided confidence level parameter.
pub const DEFAULT_ALPHA: f64 = 0.05;

// ---------------------------------------------------------------------------
// Counterfactual view
// ---------------------------------------------------------------------------

/// Per-prefix quantities for one trajectory: log propensity products under
/// both policies, the logged behavior product, and cumulative step noise.
#[derive(Debug, Clone)]
pub struct PrefixPoint {
    pub reward: f64,
    pub log_pi_a: f64,
    pub log_pi_b: f64,
    pub log_logged: f64,
    pub cum_noise: f64,
}

#[derive(Debug, Clone)]
pub struct TrajectoryPrefixes {
    pub user_id: String,
    pub arm: Arm,
    pub points: Vec<PrefixPoint>,
}

/// Precomputed prefix weights and noise for a dataset under a policy pair.
#[derive(Debug, Clone)]
pub struct CounterfactualView {
    trajectories: Vec<TrajectoryPrefixes>,
    n_a: usize,
    n_b: usize,
}

impl CounterfactualView {
    /// Build the view from plug-in (or exact) propensity models. Noise is
    /// accumulated from step-level `pi_A / pi_B` ratios of `noise_source`
    /// when given, else of the weight policies themselves.
    pub fn build(
        data: &Dataset,
        pi_a: &dyn PolicyModel,
        pi_b: &dyn PolicyModel,
        noise: Option<NoiseModel>,
        noise_source: Option<(&dyn PolicyModel, &dyn PolicyModel)>,
    ) -> Result<Self> {
        let mut trajectories = Vec::with_capacity(data.len());
        for traj in data.trajectories() {
            let own: &dyn PolicyModel = match traj.arm {
                Arm::A => pi_a,
                Arm::B => pi_b,
            };
            let mut la = 0.0f64;
            let mut lb = 0.0f64;
            let mut ll = 0.0f64;
            let mut cum = 0.0f64;
            let mut points = Vec::with_capacity(traj.horizon());
            for (i, step) in traj.steps.iter().enumerate() {
                let t = i + 1;
                if step.action >= pi_a.action_count() || step.action >= pi_b.action_count() {
                    return Err(Error::Argument(format!(
                        "logged action {} outside the policy action set (user {}, t={t})",
                        step.action, traj.user_id
                    )));
                }
                let pa = pi_a.propensity(&step.state, step.action);
                let pb = pi_b.propensity(&step.state, step.action);
                let pown = own.propensity(&step.state, step.action);
                if pown <= 0.0 {
                    return Err(Error::SupportViolation { user_id: traj.user_id.clone(), t });
                }
                la += if pa > 0.0 { pa.ln() } else { f64::NEG_INFINITY };
                lb += if pb > 0.0 { pb.ln() } else { f64::NEG_INFINITY };
                ll += step.logged_propensity.ln();
                if let Some(model) = noise {
                    let (na, nb) = match noise_source {
                        Some((sa, sb)) => (
                            sa.propensity(&step.state, step.action),
                            sb.propensity(&step.state, step.action),
                        ),
                        None => (pa, pb),
                    };
                    let ratio = step_ratio(na, nb);
                    cum += model.eval(ratio);
                }
                points.push(PrefixPoint {
                    reward: step.reward,
                    log_pi_a: la,
                    log_pi_b: lb,
                    log_logged: ll,
                    cum_noise: cum,
                });
            }
            trajectories.push(TrajectoryPrefixes {
                user_id: traj.user_id.clone(),
                arm: traj.arm,
                points,
            });
        }
        Ok(CounterfactualView { trajectories, n_a: data.n_a(), n_b: data.n_b() })
    }

    pub fn trajectories(&self) -> &[TrajectoryPrefixes] {
        &self.trajectories
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn n_r(&self) -> f64 {
        self.n_a as f64 / self.n_b as f64
    }
}

fn step_ratio(pa: f64, pb: f64) -> ExtendedWeight {
    if pa <= 0.0 {
        ExtendedWeight::ZERO
    } else if pb <= 0.0 {
        ExtendedWeight::INFINITE
    } else {
        ExtendedWeight::new(pa / pb).expect("positive ratio")
    }
}

/// A-over-B prefix weight from stored logs.
fn weight_a_over_b(pt: &PrefixPoint, t: usize) -> Result<ExtendedWeight> {
    weight_from_logs(pt.log_pi_a, pt.log_pi_b, t)
}

/// B-over-A prefix weight from stored logs.
fn weight_b_over_a(pt: &PrefixPoint, t: usize) -> Result<ExtendedWeight> {
    weight_from_logs(pt.log_pi_b, pt.log_pi_a, t)
}

// ---------------------------------------------------------------------------
// Improvement report
// ---------------------------------------------------------------------------

/// Point estimate with per-user contributions, a CLT variance estimate and
/// normal-quantile intervals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImprovementReport {
    pub estimator_id: String,
    pub point_estimate: f64,
    pub contributions_a: Vec<f64>,
    pub contributions_b: Vec<f64>,
    /// `None` when a contributing arm has fewer than 2 users.
    pub variance_estimate: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub ci_lower_one_sided: Option<f64>,
    pub alpha: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub bias_warning: Option<String>,
}

impl ImprovementReport {
    fn assemble(
        estimator_id: String,
        contributions_a: Vec<f64>,
        contributions_b: Vec<f64>,
        uses_a: bool,
        uses_b: bool,
        n_a: usize,
        n_b: usize,
        bias_warning: Option<String>,
    ) -> Self {
        let mut point = 0.0;
        if uses_a {
            point += mean(&contributions_a);
        }
        if uses_b {
            point += mean(&contributions_b);
        }
        let mut variance = Some(0.0f64);
        if uses_a {
            variance = match (variance, sample_variance(&contributions_a)) {
                (Some(v), Some(sa)) => Some(v + sa / n_a as f64),
                _ => None,
            };
        }
        if uses_b {
            variance = match (variance, sample_variance(&contributions_b)) {
                (Some(v), Some(sb)) => Some(v + sb / n_b as f64),
                _ => None,
            };
        }
        let mut report = ImprovementReport {
            estimator_id,
            point_estimate: point,
            contributions_a,
            contributions_b,
            variance_estimate: variance,
            ci_lower: None,
            ci_upper: None,
            ci_lower_one_sided: None,
            alpha: DEFAULT_ALPHA,
            n_a,
            n_b,
            bias_warning,
        };
        report.fill_intervals();
        report
    }

    fn fill_intervals(&mut self) {
        if let Some(var) = self.variance_estimate {
            let sd = var.max(0.0).sqrt();
            let z2 = normal_quantile(1.0 - self.alpha / 2.0);
            let z1 = normal_quantile(1.0 - self.alpha);
            self.ci_lower = Some(self.point_estimate - z2 * sd);
            self.ci_upper = Some(self.point_estimate + z2 * sd);
            self.ci_lower_one_sided = Some(self.point_estimate - z1 * sd);
        } else {
            self.ci_lower = None;
            self.ci_upper = None;
            self.ci_lower_one_sided = None;
        }
    }

    /// Recompute the intervals at a different level.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(0.0 < alpha && alpha < 1.0) {
            return Err(Error::Argument(format!("alpha {alpha} outside (0, 1)")));
        }
        self.alpha = alpha;
        self.fill_intervals();
        Ok(self)
    }
}

/// Normal-quantile intervals around the point estimate:
/// `(two-sided lower, two-sided upper, one-sided lower)` at level alpha.
pub fn confidence_interval(report: &ImprovementReport, alpha: f64) -> Result<(f64, f64, f64)> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::Argument(format!("alpha {alpha} outside (0, 1)")));
    }
    let var = report.variance_estimate.ok_or(Error::IntervalUnavailable)?;
    let sd = var.max(0.0).sqrt();
    let z2 = normal_quantile(1.0 - alpha / 2.0);
    let z1 = normal_quantile(1.0 - alpha);
    Ok((
        report.point_estimate - z2 * sd,
        report.point_estimate + z2 * sd,
        report.point_estimate - z1 * sd,
    ))
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

/// Classical difference of per-arm mean cumulative rewards.
pub fn diff_in_means(data: &Dataset) -> Result<ImprovementReport> {
    if data.n_a() == 0 || data.n_b() == 0 {
        return Err(Error::InsufficientData("diff_in_means needs users in both arms".into()));
    }
    let mut ca = Vec::with_capacity(data.n_a());
    let mut cb = Vec::with_capacity(data.n_b());
    for traj in data.trajectories() {
        let sum: f64 = traj.steps.iter().map(|s| s.reward).sum();
        match traj.arm {
            Arm::A => ca.push(sum),
            Arm::B => cb.push(-sum),
        }
    }
    Ok(ImprovementReport::assemble("diff".into(), ca, cb, true, true, data.n_a(), data.n_b(), None))
}

/// Naive IPS over the B arm: `(1/n_B) sum_B sum_t (w(tau_t) - 1) r_t`.
/// Unbiased only under common support.
pub fn ips_improvement(
    data: &Dataset,
    pi_a: &dyn PolicyModel,
    pi_b: &dyn PolicyModel,
) -> Result<ImprovementReport> {
    if data.n_b() == 0 {
        return Err(Error::InsufficientData("ips_improvement needs a nonempty B arm".into()));
    }
    let view = CounterfactualView::build(data, pi_a, pi_b, None, None)?;
    ips_from_view(&view)
}

pub fn ips_from_view(view: &CounterfactualView) -> Result<ImprovementReport> {
    if view.n_b() == 0 {
        return Err(Error::InsufficientData("ips_improvement needs a nonempty B arm".into()));
    }
    let mut cb = Vec::with_capacity(view.n_b());
    for tv in view.trajectories() {
        if tv.arm != Arm::B {
            continue;
        }
        let mut acc = 0.0;
        for (i, pt) in tv.points.iter().enumerate() {
            if pt.reward == 0.0 {
                continue;
            }
            let w = weight_a_over_b(pt, i + 1)?;
            acc += (w.value() - 1.0) * pt.reward;
        }
        cb.push(acc);
    }
    Ok(ImprovementReport::assemble(
        "ips".into(),
        Vec::new(),
        cb,
        false,
        true,
        view.n_a(),
        view.n_b(),
        None,
    ))
}

/// The f-family estimator on exact or plug-in propensities.
///
/// `noise` supplies the step-noise model for robust transforms; when absent,
/// the transform's own embedded model is used. Rewards of exactly zero
/// contribute nothing and are skipped.
pub fn f_estimate(
    data: &Dataset,
    pi_a: &dyn PolicyModel,
    pi_b: &dyn PolicyModel,
    f: &WeightTransform,
    noise: Option<NoiseModel>,
) -> Result<ImprovementReport> {
    if data.n_a() == 0 || data.n_b() == 0 {
        return Err(Error::InsufficientData("f_estimate needs users in both arms".into()));
    }
    let effective_noise = noise.or_else(|| f.noise_model());
    if f.requires_noise() && effective_noise.is_none() {
        return Err(Error::Argument(format!(
            "transform {} requires a noise model",
            f.id()
        )));
    }
    let view = CounterfactualView::build(data, pi_a, pi_b, effective_noise, None)?;
    f_estimate_from_view(&view, f)
}

/// f-family estimator over a prebuilt counterfactual view.
pub fn f_estimate_from_view(view: &CounterfactualView, f: &WeightTransform) -> Result<ImprovementReport> {
    if view.n_a() == 0 || view.n_b() == 0 {
        return Err(Error::InsufficientData("f_estimate needs users in both arms".into()));
    }
    let n_a = view.n_a();
    let mut ca = Vec::with_capacity(view.n_a());
    let mut cb = Vec::with_capacity(view.n_b());
    for tv in view.trajectories() {
        let horizon_scale = (tv.points.len() * n_a) as f64;
        match tv.arm {
            Arm::B => {
                let mut acc = 0.0;
                for (i, pt) in tv.points.iter().enumerate() {
                    if pt.reward == 0.0 {
                        continue;
                    }
                    let w = weight_a_over_b(pt, i + 1)?;
                    let noise = TrajectoryNoise { cumulative: pt.cum_noise, horizon_scale };
                    acc += f.eval_with(w, Some(noise))? * pt.reward;
                }
                cb.push(acc);
            }
            Arm::A => {
                let mut acc = 0.0;
                for (i, pt) in tv.points.iter().enumerate() {
                    if pt.reward == 0.0 {
                        continue;
                    }
                    let noise = TrajectoryNoise { cumulative: pt.cum_noise, horizon_scale };
                    acc += (1.0 - correction_term(f, pt, i + 1, noise)?) * pt.reward;
                }
                ca.push(acc);
            }
        }
    }
    let warning = if f.satisfies_c1() {
        None
    } else {
        Some(format!("transform {} violates C1 (f(0) != -1); estimate may be biased", f.id()))
    };
    Ok(ImprovementReport::assemble(
        f.id().to_string(),
        ca,
        cb,
        true,
        true,
        view.n_a(),
        view.n_b(),
        warning,
    ))
}

/// `wbar [1 + f(1/wbar)]` with the explicit limit rule at `wbar = 0`.
fn correction_term(
    f: &WeightTransform,
    pt: &PrefixPoint,
    t: usize,
    noise: TrajectoryNoise,
) -> Result<f64> {
    let wbar = weight_b_over_a(pt, t)?;
    if wbar.is_zero() {
        return Ok(f.correction_limit());
    }
    if wbar.is_infinite() {
        return Err(Error::Argument(format!(
            "infinite correction weight at prefix t={t}: behavior propensity product underflowed"
        )));
    }
    let warg = weight_a_over_b(pt, t)?;
    Ok(wbar.value() * (1.0 + f.eval_with(warg, Some(noise))?))
}

/// Mixture reformulation of the surrogate-optimal estimator:
/// `(1/n_U) sum_all sum_t (pi_A - pi_B)(tau_t) / pi_beta(tau_t) r_t` with
/// `pi_beta = beta pi_A + (1 - beta) pi_B` over trajectory propensities and
/// `beta = n_A / n_U`. Identical to `f_estimate` with `f*_{n_r}`.
pub fn f_estimate_mixture_form(
    data: &Dataset,
    pi_a: &dyn PolicyModel,
    pi_b: &dyn PolicyModel,
) -> Result<ImprovementReport> {
    if data.n_a() == 0 || data.n_b() == 0 {
        return Err(Error::InsufficientData("mixture estimator needs users in both arms".into()));
    }
    let view = CounterfactualView::build(data, pi_a, pi_b, None, None)?;
    mixture_from_view(&view)
}

pub fn mixture_from_view(view: &CounterfactualView) -> Result<ImprovementReport> {
    let (n_a, n_b) = (view.n_a(), view.n_b());
    if n_a == 0 || n_b == 0 {
        return Err(Error::InsufficientData("mixture estimator needs users in both arms".into()));
    }
    let n_u = (n_a + n_b) as f64;
    let beta = n_a as f64 / n_u;
    let mut ca = Vec::with_capacity(n_a);
    let mut cb = Vec::with_capacity(n_b);
    for tv in view.trajectories() {
        let mut acc = 0.0;
        for pt in &tv.points {
            if pt.reward == 0.0 {
                continue;
            }
            // (pa - pb) / (beta pa + (1-beta) pb), stabilized by the larger log.
            let m = pt.log_pi_a.max(pt.log_pi_b);
            debug_assert!(!log_is_zero(m), "own-arm propensity cannot vanish");
            let ea = (pt.log_pi_a - m).exp();
            let eb = (pt.log_pi_b - m).exp();
            acc += (ea - eb) / (beta * ea + (1.0 - beta) * eb) * pt.reward;
        }
        match tv.arm {
            Arm::A => ca.push(acc * n_a as f64 / n_u),
            Arm::B => cb.push(acc * n_b as f64 / n_u),
        }
    }
    Ok(ImprovementReport::assemble("mixture".into(), ca, cb, true, true, n_a, n_b, None))
}

/// Role-swapped estimator: f'-regularized IPS on the A arm plus a bias
/// correction from the B arm. Equals `f_estimate` with `reverse(f')`.
pub fn reverse_f_estimate(
    data: &Dataset,
    pi_a: &dyn PolicyModel,
    pi_b: &dyn PolicyModel,
    f_prime: &WeightTransform,
) -> Result<ImprovementReport> {
    if data.n_a() == 0 || data.n_b() == 0 {
        return Err(Error::InsufficientData("reverse estimator needs users in both arms".into()));
    }
    let noise = f_prime.noise_model();
    let view = CounterfactualView::build(data, pi_a, pi_b, noise, None)?;
    reverse_from_view(&view, f_prime)
}

pub fn reverse_from_view(
    view: &CounterfactualView,
    f_prime: &WeightTransform,
) -> Result<ImprovementReport> {
    if view.n_a() == 0 || view.n_b() == 0 {
        return Err(Error::InsufficientData("reverse estimator needs users in both arms".into()));
    }
    let n_a = view.n_a();
    let mut ca = Vec::with_capacity(view.n_a());
    let mut cb = Vec::with_capacity(view.n_b());
    for tv in view.trajectories() {
        let horizon_scale = (tv.points.len() * n_a) as f64;
        let mut acc = 0.0;
        for (i, pt) in tv.points.iter().enumerate() {
            if pt.reward == 0.0 {
                continue;
            }
            let t = i + 1;
            let noise = TrajectoryNoise { cumulative: pt.cum_noise, horizon_scale };
            match tv.arm {
                Arm::A => {
                    let wbar = weight_b_over_a(pt, t)?;
                    acc += f_prime.eval_with(wbar, Some(noise))? * pt.reward;
                }
                Arm::B => {
                    let w = weight_a_over_b(pt, t)?;
                    let term = if w.is_zero() {
                        // 0 * [1 - f'(inf)] - 1 with bounded f'
                        -1.0
                    } else if w.is_infinite() {
                        return Err(Error::Argument(format!(
                            "infinite weight at prefix t={t}: behavior propensity product underflowed"
                        )));
                    } else {
                        let wbar = weight_b_over_a(pt, t)?;
                        w.value() * (1.0 - f_prime.eval_with(wbar, Some(noise))?) - 1.0
                    };
                    acc += term * pt.reward;
                }
            }
        }
        match tv.arm {
            Arm::A => ca.push(acc),
            Arm::B => cb.push(acc),
        }
    }
    Ok(ImprovementReport::assemble(
        format!("reverse({})", f_prime.id()),
        ca,
        cb,
        true,
        true,
        view.n_a(),
        view.n_b(),
        None,
    ))
}

// ---------------------------------------------------------------------------
// Variance surrogate
// ---------------------------------------------------------------------------

/// Plug-in estimate of the variance surrogate S_f:
/// `(1/n_B) mean_B[sum_t (f(w) r)^2] + (1/n_A) mean_A[sum_t (1 - wbar[1+f])^2 r^2]`.
pub fn variance_surrogate_empirical(
    data: &Dataset,
    pi_a: &dyn PolicyModel,
    pi_b: &dyn PolicyModel,
    f: &WeightTransform,
    noise: Option<NoiseModel>,
) -> Result<f64> {
    if data.n_a() == 0 || data.n_b() == 0 {
        return Err(Error::InsufficientData("variance surrogate needs users in both arms".into()));
    }
    let effective_noise = noise.or_else(|| f.noise_model());
    if f.requires_noise() && effective_noise.is_none() {
        return Err(Error::Argument(format!("transform {} requires a noise model", f.id())));
    }
    let view = CounterfactualView::build(data, pi_a, pi_b, effective_noise, None)?;
    let n_a = view.n_a();
    let mut sum_a = 0.0;
    let mut sum_b = 0.0;
    for tv in view.trajectories() {
        let horizon_scale = (tv.points.len() * n_a) as f64;
        for (i, pt) in tv.points.iter().enumerate() {
            if pt.reward == 0.0 {
                continue;
            }
            let t = i + 1;
            let noise = TrajectoryNoise { cumulative: pt.cum_noise, horizon_scale };
            match tv.arm {
                Arm::B => {
                    let w = weight_a_over_b(pt, t)?;
                    let term = f.eval_with(w, Some(noise))? * pt.reward;
                    sum_b += term * term;
                }
                Arm::A => {
                    let g = 1.0 - correction_term(f, pt, t, noise)?;
                    sum_a += g * g * pt.reward * pt.reward;
                }
            }
        }
    }
    let n_a = view.n_a() as f64;
    let n_b = view.n_b() as f64;
    Ok(sum_b / (n_b * n_b) + sum_a / (n_a * n_a))
}

/// Exact variance surrogate for a single-state bandit (T = 1) by enumeration
/// over actions and Bernoulli reward outcomes under both policies.
pub fn variance_surrogate_exact_bandit(
    spec: &BanditSpec,
    f: &WeightTransform,
    n_a: usize,
    n_b: usize,
) -> Result<f64> {
    if n_a == 0 || n_b == 0 {
        return Err(Error::Argument("surrogate needs positive arm sizes".into()));
    }
    let mut term_b = 0.0;
    let mut term_a = 0.0;
    for a in 0..spec.action_count {
        let p = spec.reward_probs[a];
        let pa = spec.pi_a[a];
        let pb = spec.pi_b[a];
        // E[r^2 | a] = p for Bernoulli rewards.
        if pb > 0.0 {
            let w = step_ratio(pa, pb);
            let noise = TrajectoryNoise::absorbed(implied_step_noise(f, w));
            let fx = f.eval_with(w, Some(noise))?;
            term_b += pb * fx * fx * p;
        }
        if pa > 0.0 {
            let wbar = step_ratio(pb, pa);
            let w = step_ratio(pa, pb);
            let noise = TrajectoryNoise::absorbed(implied_step_noise(f, w));
            let corr = if wbar.is_zero() {
                f.correction_limit()
            } else {
                wbar.value() * (1.0 + f.eval_with(w, Some(noise))?)
            };
            let g = 1.0 - corr;
            term_a += pa * g * g * p;
        }
    }
    Ok(term_b / n_b as f64 + term_a / n_a as f64)
}

fn implied_step_noise(f: &WeightTransform, w: ExtendedWeight) -> f64 {
    match f.noise_model() {
        Some(m) => m.eval(w),
        None => 0.0,
    }
}
