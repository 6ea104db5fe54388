//! Bounded importance-weight transforms and their algebra.
//!
//! A transform f maps extended weights [0, +inf] to reals and defines one
//! member of the improvement-estimator family. Three conditions matter:
//!
//! - C1: f(0) = -1          (unbiasedness under partial support)
//! - C2: f(1) = 0           (zero variance on identical policies)
//! - C3: -1 <= f(x) <= min(2x - 1, 1)   (variance-surrogate reduction)
//!
//! Closed forms provided here:
//! - `diff`:   h_-(x) = -1, recovering difference-in-means
//! - `hplus`:  h_+(x) = min(2x - 1, 1), the upper C3 boundary
//! - `h1`:     min(x - 1, 1), clipped IPS
//! - `fstar`:  (x - 1) / (n_r x + 1), the surrogate-optimal transform
//! - `fstar_robust`: ((1 - g) x - 1) / ((n_r + g) x + 1) with
//!   g = lambda_eff * Delta(tau_t)^2, the misspecification-aware optimum
//!
//! Reverse and convex constructions mirror the data-role-swapped estimator
//! algebra; reverse transforms may grow linearly at +inf, which is handled
//! through an explicit correction limit instead of the bounded-f rule.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::weights::ExtendedWeight;

pub const CONDITION_TOL: f64 = 1e-12;

/// Per-step misspecification magnitude as a function of the step-level
/// propensity ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseModel {
    /// Delta_1: constant 1, conservative multiplicative noise.
    ConstantOne,
    /// Delta_2: |x - 1|, scaling with policy separation (+inf at x = +inf).
    AbsRatioMinusOne,
    /// Delta_3: min(|log x|, 1), the clipped logarithmic model.
    ClippedLog,
}

impl NoiseModel {
    pub fn eval(self, x: ExtendedWeight) -> f64 {
        match self {
            NoiseModel::ConstantOne => 1.0,
            NoiseModel::AbsRatioMinusOne => {
                if x.is_infinite() {
                    f64::INFINITY
                } else {
                    (x.value() - 1.0).abs()
                }
            }
            NoiseModel::ClippedLog => {
                if x.is_zero() || x.is_infinite() {
                    1.0
                } else {
                    x.value().ln().abs().min(1.0)
                }
            }
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            NoiseModel::ConstantOne => "const1",
            NoiseModel::AbsRatioMinusOne => "absratio",
            NoiseModel::ClippedLog => "cliplog",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "const1" => Ok(NoiseModel::ConstantOne),
            "absratio" => Ok(NoiseModel::AbsRatioMinusOne),
            "cliplog" => Ok(NoiseModel::ClippedLog),
            other => Err(Error::Argument(format!(
                "unknown noise model '{other}' (expected const1 | absratio | cliplog)"
            ))),
        }
    }
}

/// Trajectory-level noise context for robust transforms.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryNoise {
    /// Delta(tau_t): cumulative step noise over the prefix.
    pub cumulative: f64,
    /// T * n_A factor; only consulted when the transform uses the
    /// unabsorbed Prop.-4 parameterization.
    pub horizon_scale: f64,
}

impl TrajectoryNoise {
    pub fn absorbed(cumulative: f64) -> Self {
        TrajectoryNoise { cumulative, horizon_scale: 1.0 }
    }
}

/// Condition flags verified numerically at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conditions {
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
}

#[derive(Clone)]
enum Kind {
    ConstantMinusOne,
    HPlus,
    H1,
    FStar {
        n_r: f64,
    },
    FStarRobust {
        n_r: f64,
        lambda_eff: f64,
        noise: NoiseModel,
        absorbed: bool,
    },
    Custom {
        func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        limit_at_inf: f64,
        bound: f64,
    },
    Reverse {
        inner: Box<WeightTransform>,
    },
    Convex {
        first: Box<WeightTransform>,
        second: Box<WeightTransform>,
        lambda: f64,
    },
}

/// A weight transform plus its cached condition flags.
#[derive(Clone)]
pub struct WeightTransform {
    kind: Kind,
    conditions: Conditions,
    id: String,
}

impl std::fmt::Debug for WeightTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeightTransform")
            .field("id", &self.id)
            .field("conditions", &self.conditions)
            .finish()
    }
}

impl WeightTransform {
    fn build(kind: Kind, id: String) -> Self {
        let mut t = WeightTransform { kind, conditions: Conditions { c1: false, c2: false, c3: false }, id };
        let grid = standard_grid();
        t.conditions = t.check_conditions(&grid).expect("standard grid is valid");
        t
    }

    /// h_-(x) = -1; the difference-in-means transform.
    pub fn constant_minus_one() -> Self {
        Self::build(Kind::ConstantMinusOne, "diff".into())
    }

    /// h_+(x) = min(2x - 1, 1); upper boundary of the C3 region.
    pub fn h_plus() -> Self {
        Self::build(Kind::HPlus, "hplus".into())
    }

    /// h_1(x) = min(x - 1, 1); clipped IPS with clipping constant 1.
    pub fn h1() -> Self {
        Self::build(Kind::H1, "h1".into())
    }

    /// Surrogate-optimal transform (x - 1)/(n_r x + 1).
    pub fn f_star(n_r: f64) -> Result<Self> {
        if !(n_r > 0.0) || !n_r.is_finite() {
            return Err(Error::Argument(format!("n_r must be positive, got {n_r}")));
        }
        Ok(Self::build(Kind::FStar { n_r }, format!("fstar(n_r={n_r})")))
    }

    /// Misspecification-aware optimum with absorbed gamma = lambda_eff * Delta^2.
    pub fn f_star_robust(n_r: f64, lambda_eff: f64, noise: NoiseModel) -> Result<Self> {
        Self::f_star_robust_inner(n_r, lambda_eff, noise, true)
    }

    /// Unabsorbed variant: gamma = lambda_eff * T * n_A * Delta^2.
    pub fn f_star_robust_unabsorbed(n_r: f64, lambda_eff: f64, noise: NoiseModel) -> Result<Self> {
        Self::f_star_robust_inner(n_r, lambda_eff, noise, false)
    }

    fn f_star_robust_inner(n_r: f64, lambda_eff: f64, noise: NoiseModel, absorbed: bool) -> Result<Self> {
        if !(n_r > 0.0) || !n_r.is_finite() {
            return Err(Error::Argument(format!("n_r must be positive, got {n_r}")));
        }
        if lambda_eff < 0.0 || !lambda_eff.is_finite() {
            return Err(Error::Argument(format!("lambda_eff must be nonnegative, got {lambda_eff}")));
        }
        let id = format!("fstar_robust:{}:{}", noise.id(), lambda_eff);
        Ok(Self::build(Kind::FStarRobust { n_r, lambda_eff, noise, absorbed }, id))
    }

    /// Custom closed-form or tabulated transform. The caller declares the
    /// bound and the finite limit at +inf; both are verified on the grid.
    pub fn custom<F>(name: &str, func: F, limit_at_inf: f64, bound: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !limit_at_inf.is_finite() {
            return Err(Error::Argument("custom transforms must have a finite limit at +inf".into()));
        }
        let t = Self::build(
            Kind::Custom { func: Arc::new(func), limit_at_inf, bound },
            name.into(),
        );
        // Verify declared boundedness on the standard grid, including the
        // spec's limit probe at x = 1e12.
        for &x in standard_grid().iter() {
            if x.is_infinite() {
                continue;
            }
            let v = t.eval_step_level(x);
            if !v.is_finite() || v.abs() > bound + CONDITION_TOL {
                return Err(Error::Argument(format!(
                    "custom transform '{name}' exceeds declared bound {bound} at x={}",
                    x.value()
                )));
            }
        }
        let probe = t.eval_step_level(ExtendedWeight::new(1e12).unwrap());
        if (probe - limit_at_inf).abs() > bound.max(1.0) * 1e-3 + 1e-6 {
            return Err(Error::Argument(format!(
                "custom transform '{name}' does not approach its declared limit at x=1e12"
            )));
        }
        Ok(t)
    }

    /// z(x) = x (1 - f'(1/x)) - 1, the transform equivalent to running the
    /// estimator with data roles swapped under f'.
    pub fn reverse(f_prime: WeightTransform) -> Self {
        let id = format!("reverse({})", f_prime.id);
        Self::build(Kind::Reverse { inner: Box::new(f_prime) }, id)
    }

    /// Pointwise convex combination `lambda f + (1 - lambda) g`.
    pub fn convex_combine(f: WeightTransform, g: WeightTransform, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Argument(format!("lambda {lambda} outside [0, 1]")));
        }
        let id = format!("convex({}, {}, {lambda})", f.id, g.id);
        Ok(Self::build(Kind::Convex { first: Box::new(f), second: Box::new(g), lambda }, id))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn conditions(&self) -> Conditions {
        self.conditions
    }

    pub fn satisfies_c1(&self) -> bool {
        self.conditions.c1
    }

    pub fn satisfies_c2(&self) -> bool {
        self.conditions.c2
    }

    pub fn satisfies_c3(&self) -> bool {
        self.conditions.c3
    }

    /// Whether evaluation needs a trajectory noise level.
    pub fn requires_noise(&self) -> bool {
        match &self.kind {
            Kind::FStarRobust { .. } => true,
            Kind::Reverse { inner } => inner.requires_noise(),
            Kind::Convex { first, second, .. } => first.requires_noise() || second.requires_noise(),
            _ => false,
        }
    }

    /// limit of w * (1 + f(1/w)) as w -> 0+, used by the estimator's
    /// bias-correction term. Zero for every bounded transform; 1 - f'(0) for
    /// reverse-built transforms (which may be unbounded).
    pub fn correction_limit(&self) -> f64 {
        match &self.kind {
            Kind::Reverse { inner } => 1.0 - inner.eval_step_level(ExtendedWeight::ZERO),
            Kind::Convex { first, second, lambda } => {
                lambda * first.correction_limit() + (1.0 - lambda) * second.correction_limit()
            }
            _ => 0.0,
        }
    }

    /// Evaluate the transform. Robust members require the cumulative
    /// trajectory noise; passing `None` for them is an argument error.
    pub fn eval_transform(&self, x: ExtendedWeight, cumulative_noise: Option<f64>) -> Result<f64> {
        if self.requires_noise() {
            match cumulative_noise {
                Some(c) => Ok(self.eval_inner(x, Some(TrajectoryNoise::absorbed(c)))),
                None => Err(Error::Argument(format!(
                    "transform {} requires a cumulative noise level",
                    self.id
                ))),
            }
        } else {
            Ok(self.eval_inner(x, None))
        }
    }

    /// Evaluation with the full trajectory context (estimator path).
    pub fn eval_with(&self, x: ExtendedWeight, noise: Option<TrajectoryNoise>) -> Result<f64> {
        if self.requires_noise() && noise.is_none() {
            return Err(Error::Argument(format!(
                "transform {} requires a cumulative noise level",
                self.id
            )));
        }
        Ok(self.eval_inner(x, noise))
    }

    /// Single-step evaluation: robust members derive their noise from the
    /// argument itself via their own noise model (a one-step trajectory).
    /// This is the view plotted in the condition region and used for
    /// condition checks.
    pub fn eval_step_level(&self, x: ExtendedWeight) -> f64 {
        self.eval_inner(x, None)
    }

    fn eval_inner(&self, x: ExtendedWeight, noise: Option<TrajectoryNoise>) -> f64 {
        match &self.kind {
            Kind::ConstantMinusOne => -1.0,
            Kind::HPlus => {
                if x.is_infinite() {
                    1.0
                } else {
                    (2.0 * x.value() - 1.0).min(1.0)
                }
            }
            Kind::H1 => {
                if x.is_infinite() {
                    1.0
                } else {
                    (x.value() - 1.0).min(1.0)
                }
            }
            Kind::FStar { n_r } => rational_optimal(x, *n_r, 0.0),
            Kind::FStarRobust { n_r, lambda_eff, noise: model, absorbed } => {
                let delta = match noise {
                    Some(n) => n.cumulative,
                    // One-step trajectory: Delta(tau_1) = Delta(x).
                    None => model.eval(x),
                };
                let scale = match noise {
                    Some(n) if !absorbed => n.horizon_scale,
                    _ => 1.0,
                };
                let gamma = *lambda_eff * scale * delta * delta;
                rational_optimal(x, *n_r, gamma)
            }
            Kind::Custom { func, limit_at_inf, .. } => {
                if x.is_infinite() {
                    *limit_at_inf
                } else {
                    func(x.value())
                }
            }
            Kind::Reverse { inner } => {
                if x.is_zero() {
                    // limit of x(1 - f'(1/x)) - 1 as x -> 0+ for bounded f'
                    -1.0
                } else if x.is_infinite() {
                    let l = 1.0 - inner.eval_inner(ExtendedWeight::ZERO, noise);
                    if l == 0.0 {
                        // bounded tail; probe far out
                        self.eval_inner(ExtendedWeight::new(1e12).unwrap(), noise)
                    } else {
                        l.signum() * f64::INFINITY
                    }
                } else {
                    let v = x.value();
                    v * (1.0 - inner.eval_inner(x.recip(), noise)) - 1.0
                }
            }
            Kind::Convex { first, second, lambda } => {
                let a = first.eval_inner(x, noise);
                let b = second.eval_inner(x, noise);
                if *lambda == 1.0 {
                    a
                } else if *lambda == 0.0 {
                    b
                } else {
                    lambda * a + (1.0 - lambda) * b
                }
            }
        }
    }

    /// Numerically verify C1-C3 on a grid. The grid must contain 0 and 1 and
    /// reach at least 100.
    pub fn check_conditions(&self, grid: &[ExtendedWeight]) -> Result<Conditions> {
        if grid.is_empty() {
            return Err(Error::Argument("condition grid is empty".into()));
        }
        if !grid.iter().any(|x| x.is_zero()) || !grid.iter().any(|x| x.value() == 1.0) {
            return Err(Error::Argument("condition grid must include 0 and 1".into()));
        }
        let xmax = grid.iter().filter(|x| x.is_finite()).fold(0.0f64, |m, x| m.max(x.value()));
        if xmax < 100.0 {
            return Err(Error::Argument("condition grid must reach X_max >= 100".into()));
        }
        let f0 = self.eval_step_level(ExtendedWeight::ZERO);
        let f1 = self.eval_step_level(ExtendedWeight::ONE);
        let c1 = (f0 + 1.0).abs() <= CONDITION_TOL;
        let c2 = f1.abs() <= CONDITION_TOL;
        let mut c3 = true;
        for &x in grid {
            let v = self.eval_step_level(x);
            let upper = if x.is_infinite() { 1.0 } else { (2.0 * x.value() - 1.0).min(1.0) };
            if !(v >= -1.0 - CONDITION_TOL && v <= upper + CONDITION_TOL) {
                c3 = false;
                break;
            }
        }
        Ok(Conditions { c1, c2, c3 })
    }

    /// Parse a CLI/config identifier. `n_r` comes from the dataset at hand.
    ///
    /// Accepted: `diff`, `hplus`, `h1`, `fstar`,
    /// `fstar_robust:<noise>:<lambda_eff>`.
    pub fn parse_id(id: &str, n_r: f64) -> Result<Self> {
        match id {
            "diff" => Ok(Self::constant_minus_one()),
            "hplus" => Ok(Self::h_plus()),
            "h1" => Ok(Self::h1()),
            "fstar" => Self::f_star(n_r),
            other => {
                if let Some(rest) = other.strip_prefix("fstar_robust:") {
                    let mut parts = rest.splitn(2, ':');
                    let noise = NoiseModel::parse(parts.next().unwrap_or(""))?;
                    let lam: f64 = parts
                        .next()
                        .ok_or_else(|| Error::Argument(format!("missing lambda_eff in '{other}'")))?
                        .parse()
                        .map_err(|_| Error::Argument(format!("bad lambda_eff in '{other}'")))?;
                    Self::f_star_robust(n_r, lam, noise)
                } else {
                    Err(Error::Argument(format!(
                        "unknown transform id '{other}' (expected diff | hplus | h1 | fstar | fstar_robust:<noise>:<lambda_eff>)"
                    )))
                }
            }
        }
    }

    /// Declared bound B with |f| <= B on [0, +inf], when the transform is
    /// bounded by construction. Reverse and convex members may be unbounded.
    pub fn declared_bound(&self) -> Option<f64> {
        match &self.kind {
            Kind::ConstantMinusOne | Kind::HPlus | Kind::H1 => Some(1.0),
            Kind::FStar { n_r } | Kind::FStarRobust { n_r, .. } => Some((1.0 / n_r).max(1.0)),
            Kind::Custom { bound, .. } => Some(*bound),
            Kind::Reverse { .. } => None,
            Kind::Convex { first, second, .. } => match (first.declared_bound(), second.declared_bound()) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            },
        }
    }

    /// The noise model embedded in a robust transform, if any.
    pub fn noise_model(&self) -> Option<NoiseModel> {
        match &self.kind {
            Kind::FStarRobust { noise, .. } => Some(*noise),
            Kind::Reverse { inner } => inner.noise_model(),
            Kind::Convex { first, second, .. } => first.noise_model().or(second.noise_model()),
            _ => None,
        }
    }
}

fn rational_optimal(x: ExtendedWeight, n_r: f64, gamma: f64) -> f64 {
    if gamma.is_infinite() {
        return -1.0;
    }
    if x.is_infinite() {
        return (1.0 - gamma) / (n_r + gamma);
    }
    let v = x.value();
    ((1.0 - gamma) * v - 1.0) / ((n_r + gamma) * v + 1.0)
}

/// The fixed condition grid: 4096 log-spaced points on [1e-12, 1e12] plus
/// {0, 1, +inf}.
pub fn standard_grid() -> Vec<ExtendedWeight> {
    let mut grid = Vec::with_capacity(4099);
    grid.push(ExtendedWeight::ZERO);
    grid.push(ExtendedWeight::ONE);
    let (lo, hi) = (-12.0f64, 12.0f64);
    let n = 4096;
    for i in 0..n {
        let e = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        grid.push(ExtendedWeight::new(10f64.powf(e)).unwrap());
    }
    grid.push(ExtendedWeight::INFINITE);
    grid
}

/// Spec-facing wrapper for condition checking on an explicit grid.
pub fn check_conditions(f: &WeightTransform, grid: &[ExtendedWeight]) -> Result<(bool, bool, bool)> {
    let c = f.check_conditions(grid)?;
    Ok((c.c1, c.c2, c.c3))
}

/// Evaluate a noise model on a step-level propensity ratio.
pub fn eval_noise(model: NoiseModel, x: ExtendedWeight) -> f64 {
    model.eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: f64) -> ExtendedWeight {
        ExtendedWeight::new(v).unwrap()
    }

    #[test]
    fn fstar_closed_form() {
        let f = WeightTransform::f_star(1.0).unwrap();
        assert!((f.eval_transform(w(3.0), None).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(f.eval_transform(ExtendedWeight::ZERO, None).unwrap(), -1.0);
        assert_eq!(f.eval_transform(ExtendedWeight::ONE, None).unwrap(), 0.0);
        for nr in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let f = WeightTransform::f_star(nr).unwrap();
            assert_eq!(f.eval_transform(ExtendedWeight::ZERO, None).unwrap(), -1.0);
            assert_eq!(f.eval_transform(ExtendedWeight::ONE, None).unwrap(), 0.0);
            let lim = f.eval_transform(ExtendedWeight::INFINITE, None).unwrap();
            assert!((lim - 1.0 / nr).abs() < 1e-15);
        }
    }

    #[test]
    fn robust_constant_noise_matches_figure_curve() {
        // n_r=1, Delta_1 = 1, lambda_eff=1 -> f(x) = -1/(2x+1)
        let f = WeightTransform::f_star_robust(1.0, 1.0, NoiseModel::ConstantOne).unwrap();
        for x in [0.0, 0.5, 1.0, 3.0, 10.0] {
            let got = f.eval_transform(w(x), Some(1.0)).unwrap();
            assert!((got - (-1.0 / (2.0 * x + 1.0))).abs() < 1e-15, "x={x}");
        }
        assert!((f.eval_transform(ExtendedWeight::ONE, Some(1.0)).unwrap() + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn robust_requires_noise() {
        let f = WeightTransform::f_star_robust(1.0, 0.5, NoiseModel::ClippedLog).unwrap();
        assert!(matches!(f.eval_transform(w(2.0), None), Err(Error::Argument(_))));
    }

    #[test]
    fn robust_lambda_zero_is_fstar() {
        let f = WeightTransform::f_star_robust(2.0, 0.0, NoiseModel::ClippedLog).unwrap();
        let g = WeightTransform::f_star(2.0).unwrap();
        for x in [0.0, 0.2, 1.0, 7.0, 1e6] {
            let a = f.eval_transform(w(x), Some(5.0)).unwrap();
            let b = g.eval_transform(w(x), None).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn robust_huge_gamma_approaches_diff() {
        let f = WeightTransform::f_star_robust(1.0, 1e9, NoiseModel::ConstantOne).unwrap();
        for x in [1e-3, 0.1, 1.0, 50.0] {
            let v = f.eval_transform(w(x), Some(1.0)).unwrap();
            assert!((v + 1.0).abs() < 1e-6, "x={x} v={v}");
        }
    }

    #[test]
    fn h1_examples() {
        let f = WeightTransform::h1();
        assert!((f.eval_transform(w(0.5), None).unwrap() + 0.5).abs() < 1e-15);
        assert_eq!(f.eval_transform(w(3.0), None).unwrap(), 1.0);
    }

    #[test]
    fn condition_flags() {
        let diff = WeightTransform::constant_minus_one();
        assert_eq!((diff.satisfies_c1(), diff.satisfies_c2(), diff.satisfies_c3()), (true, false, true));
        let h1 = WeightTransform::h1();
        assert_eq!((h1.satisfies_c1(), h1.satisfies_c2(), h1.satisfies_c3()), (true, true, true));
        let hp = WeightTransform::h_plus();
        assert_eq!((hp.satisfies_c1(), hp.satisfies_c2(), hp.satisfies_c3()), (true, false, true));
        // f*_{1/2} escapes the C3 region as x grows (limit 2 > 1).
        let fh = WeightTransform::f_star(0.5).unwrap();
        assert!(fh.satisfies_c1() && fh.satisfies_c2());
        assert!(!fh.satisfies_c3());
        // Exactly n_r = 1 stays inside; for n_r > 1 the optimum trades the
        // correction term against the regularized-IPS term and exceeds
        // h_+(x) = 2x - 1 on x in (0, (n_r - 1)/(2 n_r)).
        assert!(WeightTransform::f_star(1.0).unwrap().satisfies_c3());
        for nr in [2.0, 4.0] {
            assert!(!WeightTransform::f_star(nr).unwrap().satisfies_c3());
        }
    }

    #[test]
    fn robust_family_stays_in_c3_region() {
        for noise in [NoiseModel::ConstantOne, NoiseModel::AbsRatioMinusOne, NoiseModel::ClippedLog] {
            for lam in [0.5, 1.0, 2.0] {
                let f = WeightTransform::f_star_robust(1.0, lam, noise).unwrap();
                assert!(f.satisfies_c3(), "noise={noise:?} lam={lam}");
                assert!(f.satisfies_c1());
            }
        }
    }

    #[test]
    fn noise_models() {
        assert_eq!(eval_noise(NoiseModel::ClippedLog, ExtendedWeight::ONE), 0.0);
        assert_eq!(eval_noise(NoiseModel::AbsRatioMinusOne, ExtendedWeight::ZERO), 1.0);
        let e3 = w(std::f64::consts::E.powi(3));
        assert_eq!(eval_noise(NoiseModel::ClippedLog, e3), 1.0);
        assert_eq!(eval_noise(NoiseModel::ClippedLog, ExtendedWeight::ZERO), 1.0);
        assert_eq!(eval_noise(NoiseModel::ClippedLog, ExtendedWeight::INFINITE), 1.0);
        assert_eq!(eval_noise(NoiseModel::AbsRatioMinusOne, ExtendedWeight::INFINITE), f64::INFINITY);
        assert_eq!(eval_noise(NoiseModel::ConstantOne, ExtendedWeight::INFINITE), 1.0);
    }

    #[test]
    fn reverse_examples() {
        // f' = 0 -> z(x) = x - 1
        let z = WeightTransform::reverse(WeightTransform::custom("zero", |_| 0.0, 0.0, 0.0).unwrap());
        assert!((z.eval_transform(w(3.0), None).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(z.eval_transform(ExtendedWeight::ZERO, None).unwrap(), -1.0);
        // f' = -1 -> z(x) = 2x - 1
        let z2 = WeightTransform::reverse(WeightTransform::constant_minus_one());
        assert!((z2.eval_transform(w(5.0), None).unwrap() - 9.0).abs() < 1e-15);
        assert!((z2.correction_limit() - 2.0).abs() < 1e-15);
        // f' = f*_1 -> z(x) = (2x+1)(x-1)/(x+1)
        let z3 = WeightTransform::reverse(WeightTransform::f_star(1.0).unwrap());
        for x in [0.25, 1.0, 2.0, 9.0] {
            let expect = (2.0 * x + 1.0) * (x - 1.0) / (x + 1.0);
            assert!((z3.eval_transform(w(x), None).unwrap() - expect).abs() < 1e-12, "x={x}");
        }
        assert_eq!(z3.eval_transform(ExtendedWeight::ONE, None).unwrap(), 0.0);
        // limit of w(1 + z3(1/w)) at 0+ is 1 - f*_1(0) = 2
        assert!((z3.correction_limit() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn convex_combination() {
        let hm = WeightTransform::constant_minus_one();
        let c = WeightTransform::convex_combine(hm.clone(), hm.clone(), 0.3).unwrap();
        assert_eq!(c.eval_transform(w(7.0), None).unwrap(), -1.0);
        let h1 = WeightTransform::h1();
        let e = WeightTransform::convex_combine(h1.clone(), hm.clone(), 1.0).unwrap();
        assert_eq!(e.eval_transform(w(3.0), None).unwrap(), h1.eval_transform(w(3.0), None).unwrap());
        let half = WeightTransform::convex_combine(hm, h1, 0.5).unwrap();
        assert_eq!(half.eval_transform(w(3.0), None).unwrap(), 0.0);
        assert!(half.satisfies_c1());
        let bad = WeightTransform::convex_combine(
            WeightTransform::h1(),
            WeightTransform::h1(),
            1.5,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn boundedness_on_grid() {
        let grid = standard_grid();
        for (t, bound) in [
            (WeightTransform::constant_minus_one(), 1.0),
            (WeightTransform::h_plus(), 1.0),
            (WeightTransform::h1(), 1.0),
            (WeightTransform::f_star(0.25).unwrap(), 4.0),
            (WeightTransform::f_star(4.0).unwrap(), 1.0),
            (WeightTransform::f_star_robust(1.0, 2.0, NoiseModel::ClippedLog).unwrap(), 1.0),
        ] {
            for &x in &grid {
                let v = t.eval_step_level(x);
                assert!(v.is_finite() && v.abs() <= bound + 1e-12, "{} at {x:?} -> {v}", t.id());
            }
        }
    }

    #[test]
    fn parse_ids() {
        assert_eq!(WeightTransform::parse_id("diff", 1.0).unwrap().id(), "diff");
        assert_eq!(WeightTransform::parse_id("h1", 1.0).unwrap().id(), "h1");
        let r = WeightTransform::parse_id("fstar_robust:cliplog:0.5", 2.0).unwrap();
        assert!(r.requires_noise());
        assert_eq!(r.noise_model(), Some(NoiseModel::ClippedLog));
        assert!(WeightTransform::parse_id("nope", 1.0).is_err());
        assert!(WeightTransform::parse_id("fstar_robust:bogus:1", 1.0).is_err());
    }
}
