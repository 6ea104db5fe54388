//! Algebraic identity tests on simulated data: the mixture reformulation,
//! the reverse-estimator equivalence, and convex-combination linearity.

use opab_core::estimators::{
    f_estimate, f_estimate_from_view, f_estimate_mixture_form, reverse_f_estimate,
    CounterfactualView,
};
use opab_core::simulators::{simulate_boredom, BoredomSpec};
use opab_core::transforms::WeightTransform;
use opab_core::types::{Arm, Dataset};
use opab_core::PolicyModel;

/// Mixed-horizon two-arm dataset from the boredom process, arm sizes chosen
/// to keep n_r away from 1.
fn mixed_horizon_dataset(seed: u64) -> (Dataset, impl PolicyModel, impl PolicyModel) {
    let beta = BoredomSpec::seeded_beta(6, 6, seed);
    let mut parts: Vec<Dataset> = Vec::new();
    for (i, horizon) in [1usize, 3, 7].into_iter().enumerate() {
        let spec = BoredomSpec::new(6, 0.25, 0.15, beta.clone(), horizon).unwrap();
        let pa = spec.acting_policy(0.35).unwrap();
        let pb = spec.acting_policy(0.6).unwrap();
        let mut a = simulate_boredom(&spec, &pa, Arm::A, 40, seed * 31 + i as u64).unwrap();
        let b = simulate_boredom(&spec, &pb, Arm::B, 25, seed * 57 + i as u64).unwrap();
        // user ids collide across horizon blocks; remap
        a = Dataset::new(
            a.trajectories()
                .iter()
                .chain(b.trajectories())
                .map(|t| {
                    let mut t = t.clone();
                    t.user_id = format!("h{horizon}_{}", t.user_id);
                    t
                })
                .collect(),
        )
        .unwrap();
        parts.push(a);
    }
    let mut it = parts.into_iter();
    let mut data = it.next().unwrap();
    for p in it {
        data = data.merge(p).unwrap();
    }
    let spec = BoredomSpec::new(6, 0.25, 0.15, beta, 1).unwrap();
    (data, spec.acting_policy(0.35).unwrap(), spec.acting_policy(0.6).unwrap())
}

fn assert_close_rel(a: f64, b: f64, tol: f64, what: &str) {
    let scale = a.abs().max(b.abs());
    assert!(
        (a - b).abs() <= tol * scale + 1e-14,
        "{what}: {a} vs {b} (rel {})",
        (a - b).abs() / scale.max(1e-300)
    );
}

#[test]
fn mixture_form_equals_fstar() {
    for seed in [3, 11, 29] {
        let (data, pa, pb) = mixed_horizon_dataset(seed);
        let n_r = data.n_a() as f64 / data.n_b() as f64;
        let direct = f_estimate(&data, &pa, &pb, &WeightTransform::f_star(n_r).unwrap(), None).unwrap();
        let mixture = f_estimate_mixture_form(&data, &pa, &pb).unwrap();
        assert_close_rel(direct.point_estimate, mixture.point_estimate, 1e-12, "mixture total");
        for (x, y) in direct
            .contributions_a
            .iter()
            .zip(&mixture.contributions_a)
            .chain(direct.contributions_b.iter().zip(&mixture.contributions_b))
        {
            assert_close_rel(*x, *y, 1e-12, "mixture contribution");
        }
    }
}

#[test]
fn reverse_estimator_equals_reverse_transform() {
    let (data, pa, pb) = mixed_horizon_dataset(17);
    for f_prime in [
        WeightTransform::constant_minus_one(),
        WeightTransform::h1(),
        WeightTransform::f_star(1.0).unwrap(),
        WeightTransform::custom("zero", |_| 0.0, 0.0, 0.0).unwrap(),
    ] {
        let rev = reverse_f_estimate(&data, &pa, &pb, &f_prime).unwrap();
        let z = WeightTransform::reverse(f_prime.clone());
        let via_z = f_estimate(&data, &pa, &pb, &z, None).unwrap();
        assert_close_rel(rev.point_estimate, via_z.point_estimate, 1e-12, f_prime.id());
        for (x, y) in rev
            .contributions_a
            .iter()
            .zip(&via_z.contributions_a)
            .chain(rev.contributions_b.iter().zip(&via_z.contributions_b))
        {
            assert_close_rel(*x, *y, 1e-12, "reverse contribution");
        }
    }
}

#[test]
fn reverse_identity_on_identical_policies() {
    let (data, pa, _) = mixed_horizon_dataset(5);
    // f'(1) = 0 makes both terms vanish on identical policies
    let rep = reverse_f_estimate(&data, &pa, &pa, &WeightTransform::h1()).unwrap();
    assert_eq!(rep.point_estimate, 0.0);
    assert_eq!(rep.variance_estimate, Some(0.0));
}

#[test]
fn convex_combination_is_affine_in_the_estimate() {
    let (data, pa, pb) = mixed_horizon_dataset(41);
    let view = CounterfactualView::build(&data, &pa, &pb, None, None).unwrap();
    let f = WeightTransform::h1();
    let f_prime = WeightTransform::f_star(1.0).unwrap();
    let z = WeightTransform::reverse(f_prime.clone());
    let i_f = f_estimate_from_view(&view, &f).unwrap().point_estimate;
    let i_rev = reverse_f_estimate(&data, &pa, &pb, &f_prime).unwrap().point_estimate;
    for lambda in [0.0, 0.25, 0.5, 0.9, 1.0] {
        let mix = WeightTransform::convex_combine(f.clone(), z.clone(), lambda).unwrap();
        let i_mix = f_estimate_from_view(&view, &mix).unwrap().point_estimate;
        let expect = lambda * i_f + (1.0 - lambda) * i_rev;
        assert_close_rel(i_mix, expect, 1e-12, &format!("lambda={lambda}"));
    }
}
