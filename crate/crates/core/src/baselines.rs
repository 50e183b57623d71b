//! Comparison generators: train resampling, fixed half-cosine
//! parameterizations, Gaussian density models and coordinate-wise KDE.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kde::KdeModel;
use crate::scenario::{resample_signals, Category, Dataset, Interpolation, Layout, ParameterVector, Scenario};
use crate::synth::{
    CUTIN_SPEED, DURATION, EGO_INITIAL_SPEED, INITIAL_LONG_POSITION, INITIAL_TIME_GAP, LATERAL_POSITION,
    LEAD_ACCEL, LEAD_INITIAL_SPEED, LEAD_SPEED,
};

/// Draw `n_w` rows of `x` uniformly with replacement.
pub fn resample_training<R: Rng + ?Sized>(x: &Dataset, n_w: usize, rng: &mut R) -> Result<Dataset> {
    if x.is_empty() || n_w == 0 {
        return Err(Error::InvalidArgument("resampling needs a non-empty dataset and n_w >= 1".into()));
    }
    let idx: Vec<usize> = (0..n_w).map(|_| rng.gen_range(0..x.len())).collect();
    Ok(x.select(&idx))
}

/// Normalized grid `τ_k = k / (n_t - 1)`.
fn unit_grid(n_t: usize) -> impl Iterator<Item = f64> {
    let last = (n_t - 1) as f64;
    (0..n_t).map(move |k| if k + 1 == n_t { 1.0 } else { k as f64 / last })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedLvdParams {
    /// `v(t0) - v(t1)`.
    pub speed_reduction: f64,
    pub final_speed: f64,
    pub duration: f64,
    pub initial_time_gap: f64,
}

impl FixedLvdParams {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.speed_reduction, self.final_speed, self.duration, self.initial_time_gap]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self { speed_reduction: v[0], final_speed: v[1], duration: v[2], initial_time_gap: v[3] }
    }

    /// `v(τ) = v_end + Δv (1 + cos πτ) / 2`.
    pub fn speed(&self, tau: f64) -> f64 {
        self.final_speed + self.speed_reduction * (1.0 + (PI * tau).cos()) / 2.0
    }

    /// `dv/dt = -Δv π sin(πτ) / (2T)`.
    pub fn acceleration(&self, tau: f64) -> f64 {
        -self.speed_reduction * PI * (PI * tau).sin() / (2.0 * self.duration)
    }

    /// A scenario sampled from the model at the given normalized instants.
    pub fn to_scenario(&self, id: &str, taus: &[f64]) -> Result<Scenario> {
        check_duration(self.duration)?;
        let t = |tau: f64| tau * self.duration;
        let mut s = Scenario {
            id: id.to_string(),
            t0: 0.0,
            t1: self.duration,
            category: Category::Lvd,
            signals: Default::default(),
            statics: Default::default(),
            units: Default::default(),
        };
        s.signals.insert(LEAD_SPEED.into(), taus.iter().map(|&u| [t(u), self.speed(u)]).collect());
        s.signals.insert(LEAD_ACCEL.into(), taus.iter().map(|&u| [t(u), self.acceleration(u)]).collect());
        s.statics.insert(DURATION.into(), self.duration);
        s.statics.insert(LEAD_INITIAL_SPEED.into(), self.speed(0.0));
        s.statics.insert(INITIAL_TIME_GAP.into(), self.initial_time_gap);
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedCutinParams {
    pub mean_speed: f64,
    pub initial_lateral_position: f64,
    pub duration: f64,
    pub ego_initial_speed: f64,
    pub initial_longitudinal_position: f64,
}

impl FixedCutinParams {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.mean_speed,
            self.initial_lateral_position,
            self.duration,
            self.ego_initial_speed,
            self.initial_longitudinal_position,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            mean_speed: v[0],
            initial_lateral_position: v[1],
            duration: v[2],
            ego_initial_speed: v[3],
            initial_longitudinal_position: v[4],
        }
    }

    /// `y(τ) = y0 (1 + cos πτ) / 2`.
    pub fn lateral(&self, tau: f64) -> f64 {
        if tau == 1.0 {
            return 0.0;
        }
        self.initial_lateral_position * (1.0 + (PI * tau).cos()) / 2.0
    }

    pub fn to_scenario(&self, id: &str, taus: &[f64]) -> Result<Scenario> {
        check_duration(self.duration)?;
        let t = |tau: f64| tau * self.duration;
        let mut s = Scenario {
            id: id.to_string(),
            t0: 0.0,
            t1: self.duration,
            category: Category::CutIn,
            signals: Default::default(),
            statics: Default::default(),
            units: Default::default(),
        };
        s.signals.insert(CUTIN_SPEED.into(), taus.iter().map(|&u| [t(u), self.mean_speed]).collect());
        s.signals.insert(LATERAL_POSITION.into(), taus.iter().map(|&u| [t(u), self.lateral(u)]).collect());
        s.statics.insert(DURATION.into(), self.duration);
        s.statics.insert(EGO_INITIAL_SPEED.into(), self.ego_initial_speed);
        s.statics.insert(INITIAL_LONG_POSITION.into(), self.initial_longitudinal_position);
        Ok(s)
    }
}

fn check_duration(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NegativeDuration(t))
    }
}

/// Read Δv and the final speed off the speed signal endpoints.
pub fn fit_fixed_lvd(scenario: &Scenario) -> Result<FixedLvdParams> {
    let ends = resample_signals(scenario, &[LEAD_SPEED], 2, Interpolation::Linear)?;
    let (v0, v1) = (ends[0][0], ends[1][0]);
    Ok(FixedLvdParams {
        speed_reduction: v0 - v1,
        final_speed: v1,
        duration: scenario.duration(),
        initial_time_gap: scenario.static_value(INITIAL_TIME_GAP)?,
    })
}

/// Time-averaged speed (trapezoid over the recorded samples, held flat
/// outside them) and the initial lateral offset.
pub fn fit_fixed_cutin(scenario: &Scenario) -> Result<FixedCutinParams> {
    scenario.validate()?;
    let speed = scenario.signal(CUTIN_SPEED)?;
    let (first, last) = (speed[0], speed[speed.len() - 1]);
    let mut area = first[1] * (first[0] - scenario.t0) + last[1] * (scenario.t1 - last[0]);
    for w in speed.windows(2) {
        area += 0.5 * (w[0][1] + w[1][1]) * (w[1][0] - w[0][0]);
    }
    let ends = resample_signals(scenario, &[LATERAL_POSITION], 2, Interpolation::Linear)?;
    Ok(FixedCutinParams {
        mean_speed: area / scenario.duration(),
        initial_lateral_position: ends[0][0],
        duration: scenario.duration(),
        ego_initial_speed: scenario.static_value(EGO_INITIAL_SPEED)?,
        initial_longitudinal_position: scenario.static_value(INITIAL_LONG_POSITION)?,
    })
}

fn layout_error(layout: &Layout, category: Category) -> Error {
    Error::LayoutMismatch(format!(
        "layout with signals {:?} and statics {:?} is not the fixed {category} layout",
        layout.signals, layout.statics
    ))
}

/// Parameter vector on `layout` with the half-cosine speed profile
/// differentiated into the acceleration channel.
pub fn synth_fixed_lvd(params: &FixedLvdParams, layout: &Arc<Layout>) -> Result<ParameterVector> {
    check_duration(params.duration)?;
    if layout.signals != [LEAD_ACCEL] {
        return Err(layout_error(layout, Category::Lvd));
    }
    let mut values: Vec<f64> = unit_grid(layout.n_t).map(|u| params.acceleration(u)).collect();
    for name in &layout.statics {
        values.push(match name.as_str() {
            DURATION => params.duration,
            LEAD_INITIAL_SPEED => params.speed(0.0),
            INITIAL_TIME_GAP => params.initial_time_gap,
            _ => return Err(layout_error(layout, Category::Lvd)),
        });
    }
    ParameterVector::new(Arc::clone(layout), values)
}

pub fn synth_fixed_cutin(params: &FixedCutinParams, layout: &Arc<Layout>) -> Result<ParameterVector> {
    check_duration(params.duration)?;
    let speed_pos = layout.signal_position(CUTIN_SPEED);
    let lat_pos = layout.signal_position(LATERAL_POSITION);
    let (Some(sp), Some(lp)) = (speed_pos, lat_pos) else {
        return Err(layout_error(layout, Category::CutIn));
    };
    if layout.n_y() != 2 {
        return Err(layout_error(layout, Category::CutIn));
    }
    let mut values = vec![0.0; layout.series_len()];
    for (k, u) in unit_grid(layout.n_t).enumerate() {
        values[layout.series_index(k, sp)] = params.mean_speed;
        values[layout.series_index(k, lp)] = params.lateral(u);
    }
    for name in &layout.statics {
        values.push(match name.as_str() {
            DURATION => params.duration,
            EGO_INITIAL_SPEED => params.ego_initial_speed,
            INITIAL_LONG_POSITION => params.initial_longitudinal_position,
            _ => return Err(layout_error(layout, Category::CutIn)),
        });
    }
    ParameterVector::new(Arc::clone(layout), values)
}

/// Fixed-form parameters of one scenario as a flat vector.
pub fn fit_fixed(category: Category, scenario: &Scenario) -> Result<Vec<f64>> {
    match category {
        Category::Lvd => fit_fixed_lvd(scenario).map(|p| p.to_vec()),
        Category::CutIn => fit_fixed_cutin(scenario).map(|p| p.to_vec()),
        Category::Custom => Err(Error::InvalidArgument("no fixed parameterization for CUSTOM scenarios".into())),
    }
}

/// Inverse of [`fit_fixed`] on a parameter-vector layout.
pub fn synth_fixed(category: Category, params: &[f64], layout: &Arc<Layout>) -> Result<ParameterVector> {
    match category {
        Category::Lvd => synth_fixed_lvd(&FixedLvdParams::from_slice(params), layout),
        Category::CutIn => synth_fixed_cutin(&FixedCutinParams::from_slice(params), layout),
        Category::Custom => Err(Error::InvalidArgument("no fixed parameterization for CUSTOM scenarios".into())),
    }
}

/// Position of the duration in both fixed parameter vectors.
pub const FIXED_DURATION_INDEX: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel {
    pub mean: Vec<f64>,
    /// Row-major population covariance.
    pub covariance: Vec<Vec<f64>>,
    pub independent: bool,
    /// Lower-triangular factor with `L Lᵀ = covariance (+ εI)`.
    #[serde(skip)]
    factor: Vec<Vec<f64>>,
}

impl GaussianModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..n)
            .map(|_| {
                let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                (0..d)
                    .map(|r| self.mean[r] + (0..=r).map(|c| self.factor[r][c] * g[c]).sum::<f64>())
                    .collect()
            })
            .collect()
    }
}

/// Sample mean and population covariance (diagonal when `independent`).
/// A near-singular covariance gets `1e-10 · trace / d` added to its diagonal.
pub fn fit_gaussian(data: &[Vec<f64>], independent: bool) -> Result<GaussianModel> {
    let n = data.len();
    if n < 2 {
        return Err(Error::InvalidArgument("a Gaussian fit needs at least two rows".into()));
    }
    let d = data[0].len();
    if d == 0 || data.iter().any(|r| r.len() != d) {
        return Err(Error::LayoutMismatch("rows must share a positive dimension".into()));
    }
    let mean: Vec<f64> = (0..d).map(|k| data.iter().map(|r| r[k]).sum::<f64>() / n as f64).collect();
    let mut cov = vec![vec![0.0; d]; d];
    for row in data {
        for a in 0..d {
            for b in 0..=a {
                if independent && a != b {
                    continue;
                }
                cov[a][b] += (row[a] - mean[a]) * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in 0..=a {
            cov[a][b] /= n as f64;
            cov[b][a] = cov[a][b];
        }
    }
    let trace: f64 = (0..d).map(|k| cov[k][k]).sum();
    let factor = if trace == 0.0 {
        vec![vec![0.0; d]; d]
    } else {
        let m = DMatrix::from_fn(d, d, |r, c| cov[r][c]);
        let l = match m.clone().cholesky() {
            Some(c) => c.l(),
            None => {
                let eps = 1e-10 * trace / d as f64;
                (m + DMatrix::identity(d, d) * eps).cholesky().ok_or(Error::SingularCovariance)?.l()
            }
        };
        (0..d).map(|r| (0..d).map(|c| l[(r, c)]).collect()).collect()
    };
    Ok(GaussianModel { mean, covariance: cov, independent, factor })
}

pub fn sample_gaussian<R: Rng + ?Sized>(model: &GaussianModel, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    model.sample(n, rng)
}

/// One 1-D KDE per coordinate, sampled independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependentKde {
    pub marginals: Vec<KdeModel>,
}

impl IndependentKde {
    pub fn fit(points: &[Vec<f64>]) -> Result<Self> {
        let d = points.first().map(Vec::len).unwrap_or(0);
        let marginals = (0..d)
            .map(|k| KdeModel::fit(points.iter().map(|p| vec![p[k]]).collect()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { marginals })
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::with_capacity(self.marginals.len()); n];
        for m in &self.marginals {
            for (row, s) in out.iter_mut().zip(m.sample(n, rng)) {
                row.push(s[0]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parameterization {
    Svd,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DensityKind {
    Kde,
    Gauss,
}

/// Generator selector: a parameterization, a density model and whether the
/// parameters are treated as dependent, or plain train resampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Resample,
    Model { param: Parameterization, density: DensityKind, dependent: bool },
}

impl Method {
    pub const SVD_KDE_DEP: Method =
        Method::Model { param: Parameterization::Svd, density: DensityKind::Kde, dependent: true };

    /// The eight table rows followed by train resampling.
    pub fn all() -> Vec<Method> {
        let mut out = Vec::with_capacity(9);
        for param in [Parameterization::Svd, Parameterization::Fixed] {
            for density in [DensityKind::Kde, DensityKind::Gauss] {
                for dependent in [true, false] {
                    out.push(Method::Model { param, density, dependent });
                }
            }
        }
        out.push(Method::Resample);
        out
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, Method::Model { param: Parameterization::Fixed, .. })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Resample => f.write_str("resample"),
            Method::Model { param, density, dependent } => write!(
                f,
                "{}+{}+{}",
                match param {
                    Parameterization::Svd => "svd",
                    Parameterization::Fixed => "fixed",
                },
                match density {
                    DensityKind::Kde => "kde",
                    DensityKind::Gauss => "gauss",
                },
                if *dependent { "dep" } else { "indep" }
            ),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "resample" {
            return Ok(Method::Resample);
        }
        let parts: Vec<&str> = s.split('+').collect();
        let bad = || Error::InvalidArgument(format!("unknown method `{s}`"));
        let [p, d, dep] = parts[..] else { return Err(bad()) };
        let param = match p {
            "svd" => Parameterization::Svd,
            "fixed" => Parameterization::Fixed,
            _ => return Err(bad()),
        };
        let density = match d {
            "kde" => DensityKind::Kde,
            "gauss" => DensityKind::Gauss,
            _ => return Err(bad()),
        };
        let dependent = match dep {
            "dep" => true,
            "indep" => false,
            _ => return Err(bad()),
        };
        Ok(Method::Model { param, density, dependent })
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A fitted density over coordinate vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityModel {
    Kde(KdeModel),
    IndependentKde(IndependentKde),
    Gaussian(GaussianModel),
}

impl DensityModel {
    pub fn fit(points: &[Vec<f64>], kind: DensityKind, dependent: bool) -> Result<Self> {
        Ok(match (kind, dependent) {
            (DensityKind::Kde, true) => DensityModel::Kde(KdeModel::fit(points.to_vec())?),
            (DensityKind::Kde, false) => DensityModel::IndependentKde(IndependentKde::fit(points)?),
            (DensityKind::Gauss, dep) => DensityModel::Gaussian(fit_gaussian(points, !dep)?),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        match self {
            DensityModel::Kde(m) => m.sample(n, rng),
            DensityModel::IndependentKde(m) => m.sample(n, rng),
            DensityModel::Gaussian(m) => m.sample(n, rng),
        }
    }
}
