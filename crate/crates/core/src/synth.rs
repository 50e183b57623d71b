//! Synthetic ground-truth scenario generators.
//!
//! LVD scenarios: duration `T ~ 4.7 exp(0.3 g)`, initial lead speed from a
//! two-component Gaussian mixture, time gap `~ 1.5 exp(0.35 g)`. The lead
//! acceleration over normalized time `τ ∈ [0, 1]` is
//!
//! ```text
//! a(τ) = -c1 sin(πτ) + c2 sin(2πτ) + c3 sin(3πτ) + Σ_{k=0..5} e_k cos(kπτ)
//! ```
//!
//! where `c1` sets a speed drop proportional to the initial speed, `c2`, `c3`
//! are random harmonics and the `e_k` are a small smooth noise term. Three
//! harmonic amplitudes plus three statics, with `c1` tied to the initial
//! speed, leave about five dominant directions in the weighted parameter
//! space.
//!
//! Cut-in scenarios: a lateral half-cosine from `y0` to zero plus two sine
//! harmonics, a cut-in speed that is the ego speed plus an offset and two
//! harmonics, duration, ego speed and initial longitudinal distance as
//! statics.
//!
//! Signals are sampled at 10 Hz with an extra sample at `t1`.

use std::f64::consts::PI;
use std::sync::Arc;

use indexmap::IndexMap;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{self, Rng as SeededRng};
use crate::scenario::{Category, Dataset, Interpolation, Layout, Scenario};

pub const LEAD_SPEED: &str = "lead_speed";
pub const LEAD_ACCEL: &str = "lead_accel";
pub const DURATION: &str = "duration";
pub const LEAD_INITIAL_SPEED: &str = "lead_initial_speed";
pub const INITIAL_TIME_GAP: &str = "initial_time_gap";

pub const CUTIN_SPEED: &str = "cutin_speed";
pub const LATERAL_POSITION: &str = "lateral_position";
pub const EGO_INITIAL_SPEED: &str = "ego_initial_speed";
pub const INITIAL_LONG_POSITION: &str = "initial_long_position";

const SAMPLE_PERIOD: f64 = 0.1;

/// Acceleration channel plus (duration, initial lead speed, initial time gap).
pub fn lvd_layout(n_t: usize) -> Layout {
    Layout::new(
        n_t,
        vec![LEAD_ACCEL.into()],
        vec![DURATION.into(), LEAD_INITIAL_SPEED.into(), INITIAL_TIME_GAP.into()],
    )
}

/// Cut-in speed and lateral position plus (duration, ego speed, longitudinal distance).
pub fn cutin_layout(n_t: usize) -> Layout {
    Layout::new(
        n_t,
        vec![CUTIN_SPEED.into(), LATERAL_POSITION.into()],
        vec![DURATION.into(), EGO_INITIAL_SPEED.into(), INITIAL_LONG_POSITION.into()],
    )
}

pub fn layout_for(category: Category, n_t: usize) -> Result<Layout> {
    match category {
        Category::Lvd => Ok(lvd_layout(n_t)),
        Category::CutIn => Ok(cutin_layout(n_t)),
        Category::Custom => Err(Error::InvalidArgument("no built-in layout for CUSTOM scenarios".into())),
    }
}

fn sample_times(duration: f64) -> Vec<f64> {
    let mut t: Vec<f64> = (0..)
        .map(|k| k as f64 * SAMPLE_PERIOD)
        .take_while(|&t| t < duration - 1e-9)
        .collect();
    t.push(duration);
    t
}

fn normal(rng: &mut SeededRng) -> f64 {
    rng.sample(StandardNormal)
}

fn lvd_scenario(id: String, rng: &mut SeededRng) -> Scenario {
    loop {
        let duration = 4.7 * (0.3 * normal(rng)).exp();
        let v0 = if rng.gen::<f64>() < 0.6 { 5.5 + 1.5 * normal(rng) } else { 11.0 + 2.5 * normal(rng) };
        let gap = 1.5 * (0.35 * normal(rng)).exp();
        if duration < 1.5 || v0 < 1.5 {
            continue;
        }
        let drop = (0.45 + 0.1 * rng.gen::<f64>()) * v0;
        let c1 = drop * PI / (2.0 * duration);
        let c2 = 1.0 * normal(rng);
        let c3 = 0.8 * normal(rng);
        let e: Vec<f64> = (0..6).map(|k| 0.04 / (1.0 + k as f64) * normal(rng)).collect();

        let accel = |tau: f64| {
            -c1 * (PI * tau).sin()
                + c2 * (2.0 * PI * tau).sin()
                + c3 * (3.0 * PI * tau).sin()
                + e.iter().enumerate().map(|(k, ek)| ek * (k as f64 * PI * tau).cos()).sum::<f64>()
        };
        let speed = |tau: f64| {
            let mut s = -c1 * (1.0 - (PI * tau).cos()) / PI
                + c2 * (1.0 - (2.0 * PI * tau).cos()) / (2.0 * PI)
                + c3 * (1.0 - (3.0 * PI * tau).cos()) / (3.0 * PI)
                + e[0] * tau;
            for (k, ek) in e.iter().enumerate().skip(1) {
                let w = k as f64 * PI;
                s += ek * (w * tau).sin() / w;
            }
            v0 + duration * s
        };

        let times = sample_times(duration);
        let speeds: Vec<[f64; 2]> = times.iter().map(|&t| [t, speed(t / duration)]).collect();
        if speeds.iter().any(|s| s[1] < 0.3) {
            continue;
        }
        let accels = times.iter().map(|&t| [t, accel(t / duration)]).collect();

        let mut signals = IndexMap::new();
        signals.insert(LEAD_SPEED.to_string(), speeds);
        signals.insert(LEAD_ACCEL.to_string(), accels);
        let mut statics = IndexMap::new();
        statics.insert(DURATION.to_string(), duration);
        statics.insert(LEAD_INITIAL_SPEED.to_string(), v0);
        statics.insert(INITIAL_TIME_GAP.to_string(), gap);
        let units = [
            (LEAD_SPEED, "m/s"),
            (LEAD_ACCEL, "m/s^2"),
            (DURATION, "s"),
            (LEAD_INITIAL_SPEED, "m/s"),
            (INITIAL_TIME_GAP, "s"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        return Scenario { id, t0: 0.0, t1: duration, category: Category::Lvd, signals, statics, units };
    }
}

fn cutin_scenario(id: String, rng: &mut SeededRng) -> Scenario {
    loop {
        let duration = 3.5 * (0.3 * normal(rng)).exp();
        let ego = if rng.gen::<f64>() < 0.5 { 15.0 + 3.0 * normal(rng) } else { 25.0 + 4.0 * normal(rng) };
        if duration < 1.2 || ego < 3.0 {
            continue;
        }
        let offset = 0.5 + 1.5 * normal(rng);
        let (b1, b2) = (0.8 * normal(rng), 0.3 * normal(rng));
        let y0 = 3.5 + 0.3 * normal(rng);
        let (g1, g2) = (0.25 * normal(rng), 0.15 * normal(rng));
        let long = 15.0 + 2.0 * offset + 4.0 * normal(rng);
        let e: Vec<f64> = (0..4).map(|k| 0.05 / (1.0 + k as f64) * normal(rng)).collect();
        if long < 2.0 {
            continue;
        }

        let speed = |tau: f64| {
            ego + offset
                + b1 * (PI * tau).sin()
                + b2 * (2.0 * PI * tau).sin()
                + e.iter().enumerate().map(|(k, ek)| ek * (k as f64 * PI * tau).cos()).sum::<f64>()
        };
        let lateral = |tau: f64| {
            y0 * (1.0 + (PI * tau).cos()) / 2.0 + g1 * (PI * tau).sin() + g2 * (2.0 * PI * tau).sin()
        };
        let times = sample_times(duration);
        let speeds: Vec<[f64; 2]> = times.iter().map(|&t| [t, speed(t / duration)]).collect();
        if speeds.iter().any(|s| s[1] < 0.5) {
            continue;
        }
        let mut signals = IndexMap::new();
        signals.insert(CUTIN_SPEED.to_string(), speeds);
        signals.insert(LATERAL_POSITION.to_string(), times.iter().map(|&t| [t, lateral(t / duration)]).collect());
        let mut statics = IndexMap::new();
        statics.insert(DURATION.to_string(), duration);
        statics.insert(EGO_INITIAL_SPEED.to_string(), ego);
        statics.insert(INITIAL_LONG_POSITION.to_string(), long);
        let units = [
            (CUTIN_SPEED, "m/s"),
            (LATERAL_POSITION, "m"),
            (DURATION, "s"),
            (EGO_INITIAL_SPEED, "m/s"),
            (INITIAL_LONG_POSITION, "m"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        return Scenario { id, t0: 0.0, t1: duration, category: Category::CutIn, signals, statics, units };
    }
}

/// Draw `n` scenarios of `category`. Scenario `i` depends only on `(seed, i)`.
pub fn synth_scenarios(category: Category, n: usize, seed: u64) -> Result<Vec<Scenario>> {
    let (label, make): (&str, fn(String, &mut SeededRng) -> Scenario) = match category {
        Category::Lvd => ("synth-lvd", lvd_scenario),
        Category::CutIn => ("synth-cutin", cutin_scenario),
        Category::Custom => {
            return Err(Error::InvalidArgument("no synthetic generator for CUSTOM scenarios".into()))
        }
    };
    if n == 0 {
        return Err(Error::InvalidArgument("scenario count must be positive".into()));
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| make(format!("{label}-{i}"), &mut rng::substream(seed, label, i as u64)))
        .collect())
}

/// Draw `n` scenarios and assemble them on the category layout (cubic spline).
pub fn synth_generate(category: Category, n: usize, n_t: usize, seed: u64) -> Result<Dataset> {
    let layout = Arc::new(layout_for(category, n_t)?);
    let scenarios = synth_scenarios(category, n, seed)?;
    Dataset::from_scenarios(&scenarios, &layout, Interpolation::CubicSpline)
}
