mod common;

use common::static_dataset;
use rand::Rng;
use rand_distr::StandardNormal;
use scenrep_core::baselines::*;
use scenrep_core::rng::substream;
use scenrep_core::synth::synth_scenarios;
use scenrep_core::Category;

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    scenrep_core::experiments::pearson(a, b).unwrap()
}

#[test]
fn resampling_frequencies_are_uniform() {
    let data = static_dataset((0..10).map(|i| vec![i as f64]).collect());
    let out = resample_training(&data, 100_000, &mut substream(1, "freq", 0)).unwrap();
    let mut counts = [0usize; 10];
    for r in out.rows() {
        counts[r[0] as usize] += 1;
    }
    for c in counts {
        let f = c as f64 / 100_000.0;
        assert!((0.09..=0.11).contains(&f), "{f}");
    }
}

#[test]
fn gaussian_samples_reproduce_fitted_covariance() {
    let mut rng = substream(2, "gauss-data", 0);
    let data: Vec<Vec<f64>> = (0..1000)
        .map(|_| {
            let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            vec![a, 0.6 * a + 0.8 * b]
        })
        .collect();
    let model = fit_gaussian(&data, false).unwrap();
    let draws = sample_gaussian(&model, 100_000, &mut substream(2, "gauss-draw", 0));
    let n = draws.len() as f64;
    let mean: Vec<f64> = (0..2).map(|k| draws.iter().map(|p| p[k]).sum::<f64>() / n).collect();
    for a in 0..2 {
        for b in 0..2 {
            let c = draws.iter().map(|p| (p[a] - mean[a]) * (p[b] - mean[b])).sum::<f64>() / n;
            let want = model.covariance[a][b];
            let scale = (model.covariance[a][a] * model.covariance[b][b]).sqrt();
            assert!((c - want).abs() <= 0.05 * scale, "({a},{b}) {c} vs {want}");
        }
    }
}

#[test]
fn independent_samplers_decorrelate_coordinates() {
    let mut rng = substream(3, "indep-data", 0);
    let data: Vec<Vec<f64>> = (0..300)
        .map(|_| {
            let a: f64 = rng.sample(StandardNormal);
            vec![a, a + 0.3 * rng.sample::<f64, _>(StandardNormal)]
        })
        .collect();
    for kind in [DensityKind::Kde, DensityKind::Gauss] {
        let model = DensityModel::fit(&data, kind, false).unwrap();
        let draws = model.sample(100_000, &mut substream(3, "indep-draw", 0));
        let a: Vec<f64> = draws.iter().map(|p| p[0]).collect();
        let b: Vec<f64> = draws.iter().map(|p| p[1]).collect();
        assert!(correlation(&a, &b).abs() < 0.02);
    }
    let dependent = DensityModel::fit(&data, DensityKind::Kde, true).unwrap();
    let draws = dependent.sample(20_000, &mut substream(3, "dep-draw", 0));
    let a: Vec<f64> = draws.iter().map(|p| p[0]).collect();
    let b: Vec<f64> = draws.iter().map(|p| p[1]).collect();
    assert!(correlation(&a, &b) > 0.8);
}

#[test]
fn zero_lateral_offset_stays_in_lane() {
    let p = FixedCutinParams {
        mean_speed: 20.0,
        initial_lateral_position: 0.0,
        duration: 3.0,
        ego_initial_speed: 18.0,
        initial_longitudinal_position: 12.0,
    };
    assert!((0..=20).all(|k| p.lateral(k as f64 / 20.0) == 0.0));
    let q = FixedCutinParams { initial_lateral_position: 3.4, ..p };
    assert_eq!(q.lateral(1.0), 0.0);
    assert_eq!(q.lateral(0.0), 3.4);
}

#[test]
fn fixed_fits_of_synthetic_scenarios_are_plausible() {
    for s in synth_scenarios(Category::Lvd, 200, 4).unwrap() {
        let p = fit_fixed_lvd(&s).unwrap();
        assert!(p.duration > 0.0 && p.final_speed > 0.0);
        assert_eq!(p.duration, s.t1 - s.t0);
    }
    for s in synth_scenarios(Category::CutIn, 200, 4).unwrap() {
        let p = fit_fixed_cutin(&s).unwrap();
        assert!(p.initial_lateral_position > 2.0 && p.mean_speed > 0.0);
    }
}

#[test]
fn large_synthetic_draws_respect_domain_constraints() {
    for category in [Category::Lvd, Category::CutIn] {
        let scenarios = synth_scenarios(category, 10_000, 5).unwrap();
        assert_eq!(scenarios.len(), 10_000);
        for s in &scenarios {
            assert!(s.duration() > 0.0);
            s.validate().unwrap();
        }
    }
}
