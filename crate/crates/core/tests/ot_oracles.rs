mod common;

use common::*;
use rand::Rng;
use scenrep_core::ot::{empirical_wasserstein, sr_metric, wasserstein_points};
use scenrep_core::rng::substream;
use scenrep_core::{TransportPlan, WeightVector};

fn check_plan(plan: &TransportPlan, z: &[f64], w: &[f64], dim: usize) {
    let (nz, nw) = (plan.n_z, plan.n_w);
    let mut rows = vec![0.0; nz];
    let mut cols = vec![0.0; nw];
    for e in &plan.entries {
        assert!(e.mass > -1e-10);
        rows[e.i] += e.mass;
        cols[e.j] += e.mass;
    }
    assert!(rows.iter().all(|r| (r - 1.0 / nz as f64).abs() < 1e-10));
    assert!(cols.iter().all(|c| (c - 1.0 / nw as f64).abs() < 1e-10));
    assert!(plan.entries.len() < nz + nw);

    let scale = plan.cost.abs().max(1e-300);
    assert!((plan.cost - plan.dual_value()).abs() <= 1e-9 * scale.max(1.0), "duality gap");
    for (i, a) in z.chunks(dim).enumerate() {
        for (j, b) in w.chunks(dim).enumerate() {
            let slack = ground_cost(a, b, plan.p) - plan.row_potentials[i] - plan.col_potentials[j];
            assert!(slack > -1e-9, "dual infeasible by {slack}");
        }
    }
}

#[test]
fn equal_sizes_match_brute_force_assignment() {
    let mut rng = substream(101, "ot-brute", 0);
    for case in 0..200 {
        let n = rng.gen_range(1..=8);
        let dim = rng.gen_range(1..=4);
        let p = if case % 2 == 0 { 1.0 } else { 2.0 };
        let z = random_points(&mut rng, n, dim, 3.0);
        let w = random_points(&mut rng, n, dim, 3.0);
        let (value, plan) = wasserstein_points(&z, &w, dim, p).unwrap();
        let oracle = brute_force_assignment(&cost_matrix(&z, &w, dim, p), n);
        assert!((value.powf(p) * n as f64 - oracle).abs() < 1e-9, "case {case}: {value} vs {oracle}");
        check_plan(&plan, &z, &w, dim);
    }
}

#[test]
fn unequal_sizes_match_lcm_replication() {
    let mut rng = substream(102, "ot-lcm", 0);
    for case in 0..50 {
        let (nz, nw) = loop {
            let (a, b) = (rng.gen_range(1..=16), rng.gen_range(1..=16));
            if a * b <= 64 && a != b {
                break (a, b);
            }
        };
        let dim = rng.gen_range(1..=4);
        let p = if case % 2 == 0 { 1.0 } else { 2.0 };
        let z = random_points(&mut rng, nz, dim, 2.0);
        let w = random_points(&mut rng, nw, dim, 2.0);
        let (value, plan) = wasserstein_points(&z, &w, dim, p).unwrap();
        let oracle = lcm_replication_cost(&z, &w, dim, p);
        assert!((value.powf(p) - oracle).abs() < 1e-9, "case {case}: {value} vs {oracle}");
        check_plan(&plan, &z, &w, dim);
    }
}

#[test]
fn two_versus_three_points_on_a_line() {
    let (value, _) = wasserstein_points(&[0.0, 1.0], &[0.5, 2.0, 4.0], 1, 1.0).unwrap();
    let oracle = lcm_replication_cost(&[0.0, 1.0], &[0.5, 2.0, 4.0], 1, 1.0);
    assert!((value - oracle).abs() < 1e-12);
    assert!((value - 5.0 / 3.0).abs() < 1e-12);
}

#[test]
fn hungarian_agrees_with_simplex_on_larger_instances() {
    let mut rng = substream(103, "ot-hungarian", 0);
    for _ in 0..5 {
        let n = 60;
        let z = random_points(&mut rng, n, 3, 1.0);
        let w = random_points(&mut rng, n, 3, 1.0);
        let (value, plan) = wasserstein_points(&z, &w, 3, 1.0).unwrap();
        let oracle = hungarian(&cost_matrix(&z, &w, 3, 1.0), n) / n as f64;
        assert!((value - oracle).abs() < 1e-9);
        check_plan(&plan, &z, &w, 3);
    }
}

#[test]
fn metric_axioms_hold_on_random_triples() {
    let mut rng = substream(104, "ot-axioms", 0);
    for _ in 0..100 {
        let n = rng.gen_range(2..=12);
        let dim = rng.gen_range(1..=3);
        let a = random_points(&mut rng, n, dim, 1.0);
        let b = random_points(&mut rng, n, dim, 1.0);
        let c = random_points(&mut rng, n, dim, 1.0);
        let w = |x: &[f64], y: &[f64]| wasserstein_points(x, y, dim, 1.0).unwrap().0;
        assert!((w(&a, &b) - w(&b, &a)).abs() < 1e-9);
        assert!(w(&a, &a).abs() < 1e-9);
        assert!(w(&a, &c) <= w(&a, &b) + w(&b, &c) + 1e-9);
    }
}

#[test]
fn one_dimensional_values_follow_quantile_coupling() {
    let mut rng = substream(105, "ot-quantile", 0);
    for _ in 0..100 {
        let (nz, nw) = (rng.gen_range(1..40), rng.gen_range(1..40));
        let z = random_points(&mut rng, nz, 1, 5.0);
        let w = random_points(&mut rng, nw, 1, 5.0);
        let (value, _) = wasserstein_points(&z, &w, 1, 1.0).unwrap();
        assert!((value - quantile_coupling_w1(&z, &w)).abs() < 1e-9);
    }
}

#[test]
fn weights_scale_the_ground_distance() {
    let z = points_dataset(&[0.0, 0.0, 1.0, 1.0], 2);
    let w = points_dataset(&[1.0, 1.0, 2.0, 2.0], 2);
    let alpha = WeightVector::new(vec![2.0, 3.0]).unwrap();
    let (value, _) = empirical_wasserstein(&z, &w, &alpha, 1.0).unwrap();
    assert!((value - 13f64.sqrt()).abs() < 1e-12);
}

#[test]
fn sr_with_training_copy_has_zero_penalty_term() {
    let mut rng = substream(106, "ot-sr", 0);
    let x = points_dataset(&random_points(&mut rng, 10, 2, 1.0), 2);
    let z = points_dataset(&random_points(&mut rng, 7, 2, 1.0), 2);
    let alpha = WeightVector::ones(2);
    let report = sr_metric(&x, &z, &x, &alpha, 1.0, 0.3).unwrap();
    assert!(report.w_train.abs() < 1e-12);
    assert!((report.sr - 1.3 * report.w_test).abs() < 1e-12);
    let plain = sr_metric(&x, &z, &x, &alpha, 1.0, 0.0).unwrap();
    assert_eq!(plain.sr, plain.w_test);
}

#[test]
fn identical_inputs_give_identical_plans() {
    let mut rng = substream(107, "ot-determinism", 0);
    let z = random_points(&mut rng, 50, 4, 1.0);
    let w = random_points(&mut rng, 80, 4, 1.0);
    let (a, pa) = wasserstein_points(&z, &w, 4, 1.0).unwrap();
    let (b, pb) = wasserstein_points(&z, &w, 4, 1.0).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    assert_eq!(pa.entries, pb.entries);
}

#[test]
fn mismatched_layouts_are_rejected() {
    let z = points_dataset(&[0.0, 1.0], 1);
    let w = points_dataset(&[0.0, 1.0], 2);
    let err = empirical_wasserstein(&z, &w, &WeightVector::ones(1), 1.0).unwrap_err();
    assert_eq!(err.kind(), "layout_mismatch");
}
