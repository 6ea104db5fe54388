//! The seeded experiment harness: repetition grids over simulation cells,
//! estimator evaluation, metric aggregation, and deterministic CSV /
//! manifest emission.
//!
//! Determinism contract: every repetition draws its randomness from
//! `(master_seed, cell tag, repetition index)` and results reduce in
//! repetition order, so outputs are byte-identical for a fixed config and
//! seed regardless of worker count.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use opab_core::estimators::{
    diff_in_means, f_estimate_from_view, ips_from_view, mixture_from_view, CounterfactualView,
};
use opab_core::propensity::{arm_step_records, fit_softmax_mle, FitOptions};
use opab_core::rng::{derive_seed, tag_str};
use opab_core::simulators::{
    make_policy_pair, simulate_bandit, simulate_boredom, true_improvement_bandit,
    true_improvement_mc, BanditSpec,
};
use opab_core::transforms::{NoiseModel, WeightTransform};
use opab_core::types::{Arm, Dataset};
use opab_core::{Error, PolicyModel, UniformMixPolicy};
use rayon::prelude::*;

use crate::config::{
    BoredomSweepParams, CustomParams, EnvCfg, ExperimentConfig, ExperimentKind, FitCfg,
    MisspecificationParams, VarianceReductionParams,
};
use crate::CliError;

/// Threshold under which ratio denominators are reported as infinite.
const RATIO_GUARD: f64 = 1e-15;

// ---------------------------------------------------------------------------
// Estimator ids
// ---------------------------------------------------------------------------

/// Run one estimator id on a dataset through a shared view cache.
/// `lambda_auto` substitutes the `:auto` lambda placeholder.
pub fn run_estimator_id(
    id: &str,
    data: &Dataset,
    views: &mut ViewCache<'_>,
    lambda_auto: Option<f64>,
) -> Result<f64, Error> {
    match id {
        "diff" => Ok(diff_in_means(data)?.point_estimate),
        "ips" => Ok(ips_from_view(views.get(None)?)?.point_estimate),
        "mixture" => Ok(mixture_from_view(views.get(None)?)?.point_estimate),
        "diffq" => Err(Error::Unimplemented("diffq".into())),
        _ => {
            let f = resolve_transform(id, data.n_a() as f64 / data.n_b() as f64, lambda_auto)?;
            let view = views.get(f.noise_model())?;
            Ok(f_estimate_from_view(view, &f)?.point_estimate)
        }
    }
}

/// Resolve a transform id, honoring the `fstar_robust:<noise>:auto` form.
pub fn resolve_transform(
    id: &str,
    n_r: f64,
    lambda_auto: Option<f64>,
) -> Result<WeightTransform, Error> {
    if let Some(rest) = id.strip_prefix("fstar_robust:") {
        if let Some(noise_id) = rest.strip_suffix(":auto") {
            let noise = NoiseModel::parse(noise_id)?;
            let lam = lambda_auto.ok_or_else(|| {
                Error::Argument(format!(
                    "estimator '{id}' needs a lambda_schedule in the experiment config"
                ))
            })?;
            return WeightTransform::f_star_robust(n_r, lam, noise);
        }
    }
    WeightTransform::parse_id(id, n_r)
}

/// Validate an estimator id list up front (fail-closed at config time).
pub fn validate_estimator_ids(ids: &[String], has_schedule: bool) -> Result<(), CliError> {
    for id in ids {
        match id.as_str() {
            "diff" | "ips" | "mixture" => {}
            "diffq" => {
                return Err(CliError::usage(
                    "estimator 'diffq' is a named baseline slot without a reference implementation",
                ))
            }
            other => {
                let lambda_auto = if other.ends_with(":auto") {
                    if !has_schedule {
                        return Err(CliError::usage(format!(
                            "estimator '{other}' needs a lambda_schedule"
                        )));
                    }
                    Some(0.0)
                } else {
                    None
                };
                resolve_transform(other, 1.0, lambda_auto).map_err(CliError::usage)?;
            }
        }
    }
    Ok(())
}

/// Lazily built counterfactual views keyed by noise model, shared across the
/// estimators of one repetition.
pub struct ViewCache<'a> {
    data: &'a Dataset,
    pi_a: &'a dyn PolicyModel,
    pi_b: &'a dyn PolicyModel,
    built: Vec<(Option<NoiseModel>, CounterfactualView)>,
}

impl<'a> ViewCache<'a> {
    pub fn new(data: &'a Dataset, pi_a: &'a dyn PolicyModel, pi_b: &'a dyn PolicyModel) -> Self {
        ViewCache { data, pi_a, pi_b, built: Vec::new() }
    }

    pub fn get(&mut self, noise: Option<NoiseModel>) -> Result<&CounterfactualView, Error> {
        // weights are noise-independent; any existing view serves noise=None
        let idx = match noise {
            None if !self.built.is_empty() => 0,
            _ => match self.built.iter().position(|(n, _)| *n == noise) {
                Some(i) => i,
                None => {
                    let view =
                        CounterfactualView::build(self.data, self.pi_a, self.pi_b, noise, None)?;
                    self.built.push((noise, view));
                    self.built.len() - 1
                }
            },
        };
        Ok(&self.built[idx].1)
    }
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct EstimatorStats {
    pub id: String,
    pub mean: f64,
    /// Empirical variance of the estimate across repetitions.
    pub variance: f64,
    /// Empirical MSE against the cell oracle, when available.
    pub mse: Option<f64>,
    /// var(diff) / var(f); `inf` when the denominator vanishes.
    pub v_r: Option<f64>,
    /// MSE(diff) / MSE(f).
    pub mse_r: Option<f64>,
    pub estimates: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: String,
    pub n_a: usize,
    pub n_b: usize,
    pub oracle: Option<f64>,
    pub oracle_se: Option<f64>,
    pub repetitions: usize,
    pub estimators: Vec<EstimatorStats>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub cells: Vec<CellResult>,
    pub manifest: serde_json::Value,
}

fn aggregate(
    cell: String,
    n_a: usize,
    n_b: usize,
    oracle: Option<f64>,
    oracle_se: Option<f64>,
    ids: &[String],
    per_rep: Vec<Vec<f64>>,
) -> CellResult {
    let reps = per_rep.len();
    let mut stats: Vec<EstimatorStats> = Vec::with_capacity(ids.len());
    for (j, id) in ids.iter().enumerate() {
        let estimates: Vec<f64> = per_rep.iter().map(|row| row[j]).collect();
        let mean = estimates.iter().sum::<f64>() / reps as f64;
        let variance =
            estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (reps - 1).max(1) as f64;
        let mse = oracle
            .map(|truth| estimates.iter().map(|e| (e - truth) * (e - truth)).sum::<f64>() / reps as f64);
        stats.push(EstimatorStats { id: id.clone(), mean, variance, mse, v_r: None, mse_r: None, estimates });
    }
    if let Some(diff_idx) = ids.iter().position(|id| id == "diff") {
        let diff_var = stats[diff_idx].variance;
        let diff_mse = stats[diff_idx].mse;
        for s in stats.iter_mut() {
            s.v_r = Some(guarded_ratio(diff_var, s.variance));
            if let (Some(dm), Some(m)) = (diff_mse, s.mse) {
                s.mse_r = Some(guarded_ratio(dm, m));
            }
        }
    }
    CellResult { cell, n_a, n_b, oracle, oracle_se, repetitions: reps, estimators: stats }
}

fn guarded_ratio(num: f64, den: f64) -> f64 {
    if den < RATIO_GUARD {
        f64::INFINITY
    } else {
        num / den
    }
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

/// Run a full experiment configuration. Worker count comes from the config
/// unless overridden.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    workers_override: Option<usize>,
) -> Result<ExperimentResults, CliError> {
    let schedule = match &cfg.experiment {
        ExperimentKind::MisspecificationSweep(p) => p.lambda_schedule,
        _ => None,
    };
    validate_estimator_ids(&cfg.estimators, schedule.is_some())?;
    let workers = workers_override.or(cfg.workers).unwrap_or_else(num_cpus);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::runtime(format!("worker pool: {e}")))?;

    let cells = pool.install(|| -> Result<Vec<CellResult>, CliError> {
        match &cfg.experiment {
            ExperimentKind::AaTest(p) => {
                let spec = BanditSpec::new(p.reward_probs.clone(), p.policy.clone(), p.policy.clone())
                    .map_err(CliError::usage)?;
                let cell = run_bandit_cell(cfg, "aa".into(), &spec, p.n_a, p.n_b)?;
                Ok(vec![cell])
            }
            ExperimentKind::VarianceReductionSweep(p) => run_variance_sweep(cfg, p),
            ExperimentKind::MisspecificationSweep(p) => run_misspec_sweep(cfg, p),
            ExperimentKind::BoredomHorizonSweep(p) => run_boredom_sweep(cfg, p),
            ExperimentKind::Custom(p) => run_custom(cfg, p),
        }
    })?;

    let manifest = build_manifest(cfg, workers, &cells)?;
    Ok(ExperimentResults { cells, manifest })
}

fn num_cpus() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Repetitions of a bandit cell with exact propensities.
fn run_bandit_cell(
    cfg: &ExperimentConfig,
    cell: String,
    spec: &BanditSpec,
    n_a: usize,
    n_b: usize,
) -> Result<CellResult, CliError> {
    let tag = tag_str(&cell);
    let (pa, pb) = (spec.policy_a(), spec.policy_b());
    let per_rep = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| -> Result<Vec<f64>, Error> {
            let seed = derive_seed(cfg.master_seed, &[tag, rep as u64]);
            let data = simulate_bandit(spec, n_a, n_b, seed)?;
            let mut views = ViewCache::new(&data, &pa, &pb);
            cfg.estimators
                .iter()
                .map(|id| run_estimator_id(id, &data, &mut views, None))
                .collect()
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::runtime)?;
    let oracle = true_improvement_bandit(spec);
    Ok(aggregate(cell, n_a, n_b, Some(oracle), None, &cfg.estimators, per_rep))
}

fn run_variance_sweep(
    cfg: &ExperimentConfig,
    p: &VarianceReductionParams,
) -> Result<Vec<CellResult>, CliError> {
    let mut cells = Vec::new();
    for (pair_idx, pair_spec) in p.pairs.iter().enumerate() {
        let (pa, pb, d) = make_policy_pair(pair_spec, cfg.master_seed).map_err(CliError::usage)?;
        for &n_r in &p.n_r_grid {
            if n_r <= 0.0 {
                return Err(CliError::usage("n_r grid entries must be positive"));
            }
            let n_a = ((p.n_total as f64) * n_r / (1.0 + n_r)).round() as usize;
            let n_b = p.n_total - n_a;
            if n_a == 0 || n_b == 0 {
                return Err(CliError::usage(format!("n_r={n_r} leaves an empty arm")));
            }
            let spec = BanditSpec::new(
                p.reward_probs.clone(),
                pa.probs().to_vec(),
                pb.probs().to_vec(),
            )
            .map_err(CliError::usage)?;
            let cell = format!("pair={pair_idx},d={d:.4},n_r={n_r}");
            cells.push(run_bandit_cell(cfg, cell, &spec, n_a, n_b)?);
        }
    }
    Ok(cells)
}

/// Misspecification sweep. Data is simulated once per (scenario, rep) and
/// shared across the sigma grid: sigma perturbs only the plug-in propensity
/// models handed to the estimators, not the data-generating process.
fn run_misspec_sweep(
    cfg: &ExperimentConfig,
    p: &MisspecificationParams,
) -> Result<Vec<CellResult>, CliError> {
    let mut cells = Vec::new();
    for scenario in &p.scenarios {
        let (pa, pb, _d) = make_policy_pair(&scenario.pair, cfg.master_seed).map_err(CliError::usage)?;
        let spec = BanditSpec::new(p.reward_probs.clone(), pa.probs().to_vec(), pb.probs().to_vec())
            .map_err(CliError::usage)?;
        let tag = tag_str(&scenario.name);
        let oracle = true_improvement_bandit(&spec);
        // rows: rep -> sigma -> estimates
        let per_rep: Vec<Vec<Vec<f64>>> = (0..cfg.repetitions)
            .into_par_iter()
            .map(|rep| -> Result<Vec<Vec<f64>>, Error> {
                let seed = derive_seed(cfg.master_seed, &[tag, rep as u64]);
                let data = simulate_bandit(&spec, p.n_per_arm, p.n_per_arm, seed)?;
                let mut rows = Vec::with_capacity(p.sigma_grid.len());
                for &sigma in &p.sigma_grid {
                    let ha = UniformMixPolicy::new(spec.policy_a(), sigma)?;
                    let hb = UniformMixPolicy::new(spec.policy_b(), sigma)?;
                    let mut views = ViewCache::new(&data, &ha, &hb);
                    let lambda = p.lambda_schedule.as_ref().map(|s| s.lambda(sigma));
                    let row = cfg
                        .estimators
                        .iter()
                        .map(|id| run_estimator_id(id, &data, &mut views, lambda))
                        .collect::<Result<Vec<f64>, Error>>()?;
                    rows.push(row);
                }
                Ok(rows)
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::runtime)?;
        for (s_idx, &sigma) in p.sigma_grid.iter().enumerate() {
            let rows: Vec<Vec<f64>> = per_rep.iter().map(|r| r[s_idx].clone()).collect();
            let cell = format!("scenario={},sigma={sigma}", scenario.name);
            cells.push(aggregate(
                cell,
                p.n_per_arm,
                p.n_per_arm,
                Some(oracle),
                None,
                &cfg.estimators,
                rows,
            ));
        }
    }
    Ok(cells)
}

/// Boredom-environment sweep with learned propensities.
fn run_boredom_sweep(
    cfg: &ExperimentConfig,
    p: &BoredomSweepParams,
) -> Result<Vec<CellResult>, CliError> {
    let mut cells = Vec::new();
    for &horizon in &p.horizons {
        let spec = EnvCfg::boredom_spec(p.dim, p.rho, p.sigma_noise, horizon, &p.beta, p.dim)?;
        let pa = spec.acting_policy(p.temp_a).map_err(CliError::usage)?;
        let pb = spec.acting_policy(p.temp_b).map_err(CliError::usage)?;
        let cell = format!("T={horizon}");
        let tag = tag_str(&cell);
        let (oracle, oracle_se) = true_improvement_mc(
            &spec,
            &pa,
            &pb,
            p.oracle_reps,
            derive_seed(cfg.master_seed, &[tag, 0x0a_c1e]),
        )
        .map_err(CliError::runtime)?;
        let fit = p.fit;
        let per_rep = (0..cfg.repetitions)
            .into_par_iter()
            .map(|rep| -> Result<Vec<f64>, Error> {
                let seed = derive_seed(cfg.master_seed, &[tag, rep as u64]);
                let da = simulate_boredom(&spec, &pa, Arm::A, p.n_per_arm, seed)?;
                let db = simulate_boredom(&spec, &pb, Arm::B, p.n_per_arm, derive_seed(seed, &[1]))?;
                let data = da.merge(db)?;
                let (fit_a, fit_b) = fit_both_arms(&data, p.dim, p.dim, &fit)?;
                let mut views = ViewCache::new(&data, &fit_a, &fit_b);
                cfg.estimators
                    .iter()
                    .map(|id| run_estimator_id(id, &data, &mut views, None))
                    .collect()
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::runtime)?;
        cells.push(aggregate(
            cell,
            p.n_per_arm,
            p.n_per_arm,
            Some(oracle),
            Some(oracle_se),
            &cfg.estimators,
            per_rep,
        ));
    }
    Ok(cells)
}

/// Fit softmax-linear propensity models on both arms of a dataset.
pub fn fit_both_arms(
    data: &Dataset,
    dim: usize,
    action_count: usize,
    fit: &FitCfg,
) -> Result<(opab_core::SoftmaxLinearPolicy, opab_core::SoftmaxLinearPolicy), Error> {
    let opts = FitOptions { reg: fit.reg, max_iter: fit.max_iter, tol: fit.tol };
    let ra = arm_step_records(data, Arm::A);
    let rb = arm_step_records(data, Arm::B);
    let fa = fit_softmax_mle(&ra, dim, action_count, &opts)?;
    let fb = fit_softmax_mle(&rb, dim, action_count, &opts)?;
    Ok((fa.policy()?, fb.policy()?))
}

fn run_custom(cfg: &ExperimentConfig, p: &CustomParams) -> Result<Vec<CellResult>, CliError> {
    match &p.env {
        EnvCfg::Bandit { reward_probs, pair } => {
            let (pa, pb, d) = make_policy_pair(pair, cfg.master_seed).map_err(CliError::usage)?;
            let spec = BanditSpec::new(reward_probs.clone(), pa.probs().to_vec(), pb.probs().to_vec())
                .map_err(CliError::usage)?;
            let cell = format!("custom_bandit,d={d:.4}");
            Ok(vec![run_bandit_cell(cfg, cell, &spec, p.n_a, p.n_b)?])
        }
        EnvCfg::Boredom { dim, rho, sigma_noise, horizon, beta, temp_a, temp_b } => {
            let spec = EnvCfg::boredom_spec(*dim, *rho, *sigma_noise, *horizon, beta, *dim)?;
            let pa = spec.acting_policy(*temp_a).map_err(CliError::usage)?;
            let pb = spec.acting_policy(*temp_b).map_err(CliError::usage)?;
            let cell = format!("custom_boredom,T={horizon}");
            let tag = tag_str(&cell);
            let (oracle, oracle_se) = true_improvement_mc(
                &spec,
                &pa,
                &pb,
                p.oracle_reps,
                derive_seed(cfg.master_seed, &[tag, 0x0a_c1e]),
            )
            .map_err(CliError::runtime)?;
            let per_rep = (0..cfg.repetitions)
                .into_par_iter()
                .map(|rep| -> Result<Vec<f64>, Error> {
                    let seed = derive_seed(cfg.master_seed, &[tag, rep as u64]);
                    let da = simulate_boredom(&spec, &pa, Arm::A, p.n_a, seed)?;
                    let db = simulate_boredom(&spec, &pb, Arm::B, p.n_b, derive_seed(seed, &[1]))?;
                    let data = da.merge(db)?;
                    let mut views = ViewCache::new(&data, &pa, &pb);
                    cfg.estimators
                        .iter()
                        .map(|id| run_estimator_id(id, &data, &mut views, None))
                        .collect()
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(CliError::runtime)?;
            Ok(vec![aggregate(
                cell,
                p.n_a,
                p.n_b,
                Some(oracle),
                Some(oracle_se),
                &cfg.estimators,
                per_rep,
            )])
        }
        EnvCfg::Epsilon { t0, epsilon } => {
            let (pa, pb, env) = opab_core::epsilon_pair(*t0, *epsilon).map_err(CliError::usage)?;
            let oracle = epsilon * (env.q_minus - env.q_plus);
            let cell = format!("custom_epsilon,T0={t0},eps={epsilon}");
            let tag = tag_str(&cell);
            let per_rep = (0..cfg.repetitions)
                .into_par_iter()
                .map(|rep| -> Result<Vec<f64>, Error> {
                    let seed = derive_seed(cfg.master_seed, &[tag, rep as u64]);
                    let data = env.simulate(p.n_a, p.n_b, seed)?;
                    let mut views = ViewCache::new(&data, &pa, &pb);
                    cfg.estimators
                        .iter()
                        .map(|id| run_estimator_id(id, &data, &mut views, None))
                        .collect()
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(CliError::runtime)?;
            Ok(vec![aggregate(
                cell,
                p.n_a,
                p.n_b,
                Some(oracle),
                None,
                &cfg.estimators,
                per_rep,
            )])
        }
    }
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

fn build_manifest(
    cfg: &ExperimentConfig,
    workers: usize,
    cells: &[CellResult],
) -> Result<serde_json::Value, CliError> {
    let cfg_value = serde_json::to_value(cfg).map_err(|e| CliError::runtime(e.to_string()))?;
    let cell_entries: Vec<serde_json::Value> = cells
        .iter()
        .map(|c| {
            serde_json::json!({
                "cell": c.cell,
                "tag": tag_str(&c.cell),
                "n_a": c.n_a,
                "n_b": c.n_b,
                "repetitions": c.repetitions,
                "oracle": c.oracle,
                "oracle_se": c.oracle_se,
            })
        })
        .collect();
    Ok(serde_json::json!({
        "schema_version": crate::config::SCHEMA_VERSION,
        "tool": format!("opab {}", env!("CARGO_PKG_VERSION")),
        "master_seed": cfg.master_seed,
        "seed_derivation": "per repetition: derive_seed(master_seed, [fnv1a(cell), rep_index]); per user: chacha8(derive(seed, [arm, user_index]))",
        "workers_used_do_not_affect_results": workers,
        "config": cfg_value,
        "cells": cell_entries,
    }))
}

fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Wide per-cell CSV.
pub fn results_csv(results: &ExperimentResults) -> String {
    let mut out = String::from(
        "cell,estimator,mean_estimate,emp_variance,emp_mse,oracle,v_r,mse_r,n_a,n_b,repetitions\n",
    );
    for cell in &results.cells {
        for s in &cell.estimators {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                cell.cell,
                s.id,
                fmt_f64(s.mean),
                fmt_f64(s.variance),
                fmt_opt(s.mse),
                fmt_opt(cell.oracle),
                fmt_opt(s.v_r),
                fmt_opt(s.mse_r),
                cell.n_a,
                cell.n_b,
                cell.repetitions
            ));
        }
    }
    out
}

/// Plot-ready long-format CSV: one row per (cell, estimator, metric).
pub fn long_csv(results: &ExperimentResults) -> String {
    let mut out = String::from("cell,estimator,metric,value\n");
    for cell in &results.cells {
        for s in &cell.estimators {
            let mut metrics: BTreeMap<&str, Option<f64>> = BTreeMap::new();
            metrics.insert("mean_estimate", Some(s.mean));
            metrics.insert("emp_variance", Some(s.variance));
            metrics.insert("emp_mse", s.mse);
            metrics.insert("v_r", s.v_r);
            metrics.insert("mse_r", s.mse_r);
            for (metric, value) in metrics {
                if let Some(v) = value {
                    out.push_str(&format!("{},{},{metric},{}\n", cell.cell, s.id, fmt_f64(v)));
                }
            }
        }
    }
    out
}

/// Write results.csv, long.csv and manifest.json to a directory.
pub fn write_outputs(results: &ExperimentResults, out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::runtime(format!("create {}: {e}", out_dir.display())))?;
    let write = |name: &str, bytes: &[u8]| -> Result<(), CliError> {
        let path = out_dir.join(name);
        let mut f = std::fs::File::create(&path)
            .map_err(|e| CliError::runtime(format!("create {}: {e}", path.display())))?;
        f.write_all(bytes)
            .map_err(|e| CliError::runtime(format!("write {}: {e}", path.display())))
    };
    write("results.csv", results_csv(results).as_bytes())?;
    write("long.csv", long_csv(results).as_bytes())?;
    let manifest = serde_json::to_string_pretty(&results.manifest)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    write("manifest.json", format!("{manifest}\n").as_bytes())?;
    Ok(())
}
