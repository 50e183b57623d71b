//! Generation pipeline and the calibration experiments: d selection, β
//! calibration against a surrogate truth, the alternating d/β procedure,
//! bootstrap statistics and the method comparison.

use std::io::Write;
use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    resample_training, synth_fixed, DensityModel, Method, Parameterization, FIXED_DURATION_INDEX,
};
use crate::error::{Error, Result};
use crate::ot::{sr_value, wasserstein_points};
use crate::rng::{derive_seed, substream, Rng};
use crate::scenario::{
    column_moments, compute_weights, split_indices, Category, Dataset, Layout, Scenario, WeightVector,
    ZeroVariancePolicy,
};
use crate::svd::{fit_basis, reconstruct_dataset, ReducedBasis};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub n_t: usize,
    /// Candidate reduced dimensions for the selection curves.
    pub d_range: Vec<usize>,
    /// Reduced dimension for single-pipeline runs.
    pub d: usize,
    pub beta: f64,
    pub p: f64,
    pub n_w: usize,
    pub repeats: usize,
    pub test_fraction: f64,
    pub seed: u64,
    pub method: Method,
    pub bootstrap_resamples: usize,
    pub beta_grid: Vec<f64>,
    /// Size of the large reference set drawn from the surrogate truth.
    pub n_z_large: usize,
    pub max_iterations: usize,
    pub zero_variance: ZeroVariancePolicy,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_t: 50,
            d_range: (1..=8).collect(),
            d: 4,
            beta: 0.25,
            p: 1.0,
            n_w: 2000,
            repeats: 50,
            test_fraction: 0.2,
            seed: 0,
            method: Method::SVD_KDE_DEP,
            bootstrap_resamples: 1000,
            beta_grid: (0..=20).map(|k| k as f64 / 20.0).collect(),
            n_z_large: 10_000,
            max_iterations: 10,
            zero_variance: ZeroVariancePolicy::Error,
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.repeats == 0 {
            return bad("repeats must be at least 1");
        }
        if self.n_w == 0 {
            return bad("n_w must be at least 1");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta must be non-negative");
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return bad("p must be at least 1");
        }
        if self.bootstrap_resamples < 100 {
            return bad("bootstrap needs at least 100 resamples");
        }
        Ok(())
    }
}

/// Fixed-form parameters for every scenario of a dataset, row-aligned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedTable {
    pub category: Category,
    pub rows: Vec<Vec<f64>>,
}

impl FixedTable {
    pub fn from_scenarios(category: Category, scenarios: &[Scenario]) -> Result<Self> {
        let rows = scenarios
            .iter()
            .map(|s| crate::baselines::fit_fixed(category, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { category, rows })
    }

    pub fn select(&self, indices: &[usize]) -> FixedTable {
        FixedTable { category: self.category, rows: indices.iter().map(|&i| self.rows[i].clone()).collect() }
    }
}

/// A fitted scenario generator for any [`Method`].
#[derive(Debug, Clone)]
pub enum Generator {
    Resample(Dataset),
    Svd {
        basis: ReducedBasis,
        density: DensityModel,
    },
    /// Density over z-scored fixed-form parameters.
    Fixed {
        category: Category,
        layout: Arc<Layout>,
        center: Vec<f64>,
        scale: Vec<f64>,
        density: DensityModel,
    },
}

impl Generator {
    /// Fit `method` on `train`. Fixed methods read their parameters from
    /// `fixed`, which must be row-aligned with `train`.
    pub fn fit(
        method: Method,
        train: &Dataset,
        alpha: &WeightVector,
        d: usize,
        fixed: Option<&FixedTable>,
    ) -> Result<Self> {
        match method {
            Method::Resample => Ok(Generator::Resample(train.clone())),
            Method::Model { param: Parameterization::Svd, density, dependent } => {
                let (basis, coords) = fit_basis(train, alpha, d)?;
                let density = DensityModel::fit(&coords, density, dependent)?;
                Ok(Generator::Svd { basis, density })
            }
            Method::Model { param: Parameterization::Fixed, density, dependent } => {
                let table = fixed.ok_or_else(|| {
                    Error::InvalidArgument(format!("method `{method}` needs scenarios with fixed-form parameters"))
                })?;
                if table.rows.len() != train.len() {
                    return Err(Error::LayoutMismatch("fixed parameter table is not aligned with the data".into()));
                }
                let dim = table.rows.first().map(Vec::len).unwrap_or(0);
                let layout = Arc::new(Layout::new(0, vec![], (0..dim).map(|k| format!("q{k}")).collect()));
                let (center, std) = column_moments(&Dataset::from_rows(layout, table.rows.clone())?);
                let scale: Vec<f64> = std.iter().map(|&s| if s > 0.0 { s } else { 1.0 }).collect();
                let z: Vec<Vec<f64>> = table
                    .rows
                    .iter()
                    .map(|r| r.iter().zip(&center).zip(&scale).map(|((x, c), s)| (x - c) / s).collect())
                    .collect();
                Ok(Generator::Fixed {
                    category: table.category,
                    layout: Arc::clone(train.layout()),
                    center,
                    scale,
                    density: DensityModel::fit(&z, density, dependent)?,
                })
            }
        }
    }

    pub fn sample(&self, n: usize, rng: &mut Rng) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidArgument("number of generated scenarios must be positive".into()));
        }
        match self {
            Generator::Resample(x) => resample_training(x, n, rng),
            Generator::Svd { basis, density } => reconstruct_dataset(basis, &density.sample(n, rng)),
            Generator::Fixed { category, layout, center, scale, density } => {
                let mut params = Vec::with_capacity(n);
                for _ in 0..1000 {
                    let want = n - params.len();
                    for z in density.sample(want + want / 4 + 8, rng) {
                        let q: Vec<f64> = z.iter().zip(center).zip(scale).map(|((z, c), s)| c + s * z).collect();
                        if q[FIXED_DURATION_INDEX] > 0.0 && params.len() < n {
                            params.push(q);
                        }
                    }
                    if params.len() == n {
                        let vectors =
                            params.iter().map(|q| synth_fixed(*category, q, layout)).collect::<Result<Vec<_>>>()?;
                        let ids = (0..n).map(|i| format!("gen-{i}")).collect();
                        return Dataset::from_vectors(ids, vectors);
                    }
                }
                Err(Error::InvalidArgument("fixed-form density rarely yields positive durations".into()))
            }
        }
    }
}

/// Fit the SVD + KDE pipeline on `train` and draw `n_w` scenarios.
pub fn generate_pipeline(train: &Dataset, alpha: &WeightVector, d: usize, n_w: usize, seed: u64) -> Result<Dataset> {
    Generator::fit(Method::SVD_KDE_DEP, train, alpha, d, None)?.sample(n_w, &mut substream(seed, "generate", 0))
}

/// Weights from the default groups of `data`'s layout.
pub fn default_weights(data: &Dataset, policy: ZeroVariancePolicy) -> Result<WeightVector> {
    compute_weights(data, &data.layout().default_groups(), policy)
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Population standard deviation of the medians of `b` resamples drawn with
/// replacement.
pub fn bootstrap_median_std(values: &[f64], b: usize, seed: u64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("bootstrap needs at least one value".into()));
    }
    if b < 100 {
        return Err(Error::InvalidArgument(format!("bootstrap needs at least 100 resamples, got {b}")));
    }
    let mut rng = substream(seed, "bootstrap", 0);
    let n = values.len();
    let mut buf = vec![0.0; n];
    let medians: Vec<f64> = (0..b)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = values[rng.gen_range(0..n)];
            }
            median(&buf)
        })
        .collect();
    // Shifted by the first median so a constant input gives exactly zero.
    let shifted: Vec<f64> = medians.iter().map(|m| m - medians[0]).collect();
    let mean = shifted.iter().sum::<f64>() / b as f64;
    Ok((shifted.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / b as f64).sqrt())
}

/// Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::CorrelationDegenerate);
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return Err(Error::CorrelationDegenerate);
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Raw Wasserstein values of one generated set in one repeat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub repeat: usize,
    pub point: usize,
    pub w_test: f64,
    pub w_train: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_large: Option<f64>,
}

impl RunRecord {
    pub fn sr(&self, beta: f64) -> f64 {
        sr_value(self.w_test, self.w_train, beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub label: String,
    pub d: Option<usize>,
    pub median_sr: f64,
    pub median_w_test: f64,
    pub median_w_train: f64,
    /// Median of `w_test - w_train`.
    pub median_penalty: f64,
    /// Bootstrap standard deviation of `median_sr`.
    pub sr_std: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_w_large: Option<f64>,
}

/// Medians over repeats for a list of generators, re-derivable from `runs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionCurve {
    pub beta: f64,
    pub p: f64,
    pub repeats: usize,
    pub points: Vec<CurvePoint>,
    /// `d` with the smallest median SR among the SVD points.
    pub argmin_d: Option<usize>,
    /// Smallest `d` whose median SR is within one bootstrap std of the minimum.
    pub selected_d: Option<usize>,
    pub runs: Vec<RunRecord>,
}

struct PointSpec {
    label: String,
    d: Option<usize>,
}

impl SelectionCurve {
    fn build(specs: &[PointSpec], runs: Vec<RunRecord>, beta: f64, config: &ExperimentConfig) -> Result<Self> {
        let mut points = Vec::with_capacity(specs.len());
        for (k, spec) in specs.iter().enumerate() {
            let recs: Vec<&RunRecord> = runs.iter().filter(|r| r.point == k).collect();
            let col = |f: &dyn Fn(&RunRecord) -> f64| recs.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let sr = col(&|r| r.sr(beta));
            let large: Option<Vec<f64>> = recs.iter().map(|r| r.w_large).collect();
            points.push(CurvePoint {
                label: spec.label.clone(),
                d: spec.d,
                median_sr: median(&sr),
                median_w_test: median(&col(&|r| r.w_test)),
                median_w_train: median(&col(&|r| r.w_train)),
                median_penalty: median(&col(&|r| r.w_test - r.w_train)),
                sr_std: bootstrap_median_std(&sr, config.bootstrap_resamples, derive_seed(config.seed, "bootstrap", k as u64))?,
                median_w_large: large.map(|v| median(&v)),
            });
        }
        let svd: Vec<&CurvePoint> = points.iter().filter(|p| p.d.is_some()).collect();
        let best = svd.iter().min_by(|a, b| a.median_sr.total_cmp(&b.median_sr).then(a.d.cmp(&b.d)));
        let argmin_d = best.and_then(|p| p.d);
        let selected_d = best.and_then(|b| {
            svd.iter()
                .filter(|p| p.median_sr <= b.median_sr + b.sr_std)
                .filter_map(|p| p.d)
                .min()
        });
        Ok(Self { beta, p: config.p, repeats: config.repeats, points, argmin_d, selected_d, runs })
    }

    /// The same runs summarized with a different β.
    pub fn with_beta(&self, beta: f64, config: &ExperimentConfig) -> Result<Self> {
        let specs: Vec<PointSpec> = self.points.iter().map(|p| PointSpec { label: p.label.clone(), d: p.d }).collect();
        Self::build(&specs, self.runs.clone(), beta, config)
    }

    pub fn point(&self, label: &str) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.label == label)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_points_csv(writer, &self.points)
    }
}

pub fn write_points_csv<W: Write>(writer: W, points: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record([
        "label",
        "d",
        "median_sr",
        "median_w_test",
        "median_w_train",
        "median_penalty",
        "sr_std",
        "median_w_large",
    ])
    .map_err(err)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for p in points {
        w.write_record([
            p.label.clone(),
            opt(p.d.map(|d| d.to_string())),
            p.median_sr.to_string(),
            p.median_w_test.to_string(),
            p.median_w_train.to_string(),
            p.median_penalty.to_string(),
            p.sr_std.to_string(),
            opt(p.median_w_large.map(|v| v.to_string())),
        ])
        .map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

/// A generator to evaluate in every repeat.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    method: Method,
    d: usize,
}

fn d_candidates(method: Method, d_range: &[usize]) -> Result<(Vec<PointSpec>, Vec<Candidate>)> {
    if !matches!(method, Method::Model { param: Parameterization::Svd, .. }) {
        return Err(Error::InvalidArgument(format!("d curves need an svd method, got `{method}`")));
    }
    if d_range.is_empty() {
        return Err(Error::InvalidArgument("d range is empty".into()));
    }
    let mut specs = vec![PointSpec { label: "resample".into(), d: None }];
    let mut cands = vec![Candidate { method: Method::Resample, d: 0 }];
    for &d in d_range {
        specs.push(PointSpec { label: format!("d={d}"), d: Some(d) });
        cands.push(Candidate { method, d });
    }
    Ok((specs, cands))
}

/// Weighted rows of a dataset, ready for the OT solver.
struct Weighted {
    values: Vec<f64>,
    dim: usize,
}

impl Weighted {
    fn new(data: &Dataset, alpha: &WeightVector) -> Self {
        Self { values: alpha.apply_dataset(data), dim: data.dim() }
    }

    fn distance(&self, other: &Weighted, p: f64) -> Result<f64> {
        Ok(wasserstein_points(&self.values, &other.values, self.dim, p)?.0)
    }
}

/// Everything one repeat needs: the split, the weights and its seed.
struct RepeatInput<'a> {
    repeat: usize,
    seed: u64,
    train: Dataset,
    test: Dataset,
    fixed: Option<FixedTable>,
    alpha: &'a WeightVector,
    large: Option<&'a Weighted>,
}

fn run_repeat(input: &RepeatInput<'_>, cands: &[Candidate], config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let alpha = input.alpha;
    let x = Weighted::new(&input.train, alpha);
    let z = Weighted::new(&input.test, alpha);
    let max_d = cands.iter().filter(|c| !c.method.is_fixed() && c.method != Method::Resample).map(|c| c.d).max();
    // One factorization per repeat; smaller d reuse its leading columns.
    let full_basis = match max_d {
        Some(d) => Some(fit_basis(&input.train, alpha, d)?),
        None => None,
    };
    let mut out = Vec::with_capacity(cands.len());
    for (k, cand) in cands.iter().enumerate() {
        let generator = match (cand.method, &full_basis) {
            (Method::Model { param: Parameterization::Svd, density, dependent }, Some((basis, coords))) => {
                let basis = basis.truncated(cand.d)?;
                let coords: Vec<Vec<f64>> = coords.iter().map(|c| c[..cand.d].to_vec()).collect();
                Generator::Svd { basis, density: DensityModel::fit(&coords, density, dependent)? }
            }
            _ => Generator::fit(cand.method, &input.train, alpha, cand.d, input.fixed.as_ref())?,
        };
        let w_set = generator.sample(config.n_w, &mut substream(input.seed, "generate", k as u64))?;
        let w = Weighted::new(&w_set, alpha);
        let w_large = match input.large {
            Some(l) => Some(l.distance(&w, config.p)?),
            None => None,
        };
        out.push(RunRecord {
            repeat: input.repeat,
            point: k,
            w_test: z.distance(&w, config.p)?,
            w_train: x.distance(&w, config.p)?,
            w_large,
        });
    }
    Ok(out)
}

/// Split `full` per repeat, derive weights from each training part, and
/// evaluate every candidate.
fn run_repeats(
    full: &Dataset,
    fixed: Option<&FixedTable>,
    cands: &[Candidate],
    config: &ExperimentConfig,
) -> Result<Vec<RunRecord>> {
    let per_repeat = (0..config.repeats)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(config.seed, "repeat", r as u64);
            let (tr, te) = split_indices(full.len(), config.test_fraction, seed)?;
            let train = full.select(&tr);
            let alpha = default_weights(&train, config.zero_variance)?;
            let input = RepeatInput {
                repeat: r,
                seed,
                test: full.select(&te),
                train,
                fixed: fixed.map(|f| f.select(&tr)),
                alpha: &alpha,
                large: None,
            };
            run_repeat(&input, cands, config)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_repeat.into_iter().flatten().collect())
}

/// SR curve over `resample` and every `d` in the range.
pub fn select_d(full: &Dataset, config: &ExperimentConfig) -> Result<SelectionCurve> {
    config.validate()?;
    let (specs, cands) = d_candidates(config.method, &config.d_range)?;
    let runs = run_repeats(full, None, &cands, config)?;
    SelectionCurve::build(&specs, runs, config.beta, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    /// Reduced dimension of the surrogate truth.
    pub d: usize,
    pub betas: Vec<f64>,
    pub correlations: Vec<f64>,
    pub argmax_beta: f64,
    pub max_correlation: f64,
    /// Curve summarized at `argmax_beta`, including the large-set medians.
    pub curve: SelectionCurve,
}

impl CalibrationResult {
    /// Correlation at the grid value closest to `beta`.
    pub fn correlation_at(&self, beta: f64) -> Option<f64> {
        self.betas
            .iter()
            .zip(&self.correlations)
            .min_by(|a, b| (a.0 - beta).abs().total_cmp(&(b.0 - beta).abs()))
            .map(|(_, c)| *c)
    }
}

/// Calibrate β against a surrogate truth: the SVD + KDE pipeline with
/// dimension `d` fitted on all of `full`.
pub fn calibrate_beta(full: &Dataset, d: usize, config: &ExperimentConfig) -> Result<CalibrationResult> {
    config.validate()?;
    let alpha = default_weights(full, config.zero_variance)?;
    let truth = Generator::fit(Method::SVD_KDE_DEP, full, &alpha, d, None)?;
    let mut result = calibrate_beta_with_truth(full.len(), &alpha, |n, rng| truth.sample(n, rng), config)?;
    result.d = d;
    Ok(result)
}

/// Calibrate β against an arbitrary truth sampler. A pool of `n` scenarios
/// and the large reference set are drawn once; each repeat re-partitions
/// the pool. All distances use the fixed weights `alpha`.
pub fn calibrate_beta_with_truth<F>(
    n: usize,
    alpha: &WeightVector,
    truth: F,
    config: &ExperimentConfig,
) -> Result<CalibrationResult>
where
    F: Fn(usize, &mut Rng) -> Result<Dataset>,
{
    config.validate()?;
    if config.beta_grid.is_empty() || config.beta_grid.iter().any(|b| !(*b >= 0.0)) {
        return Err(Error::InvalidArgument("beta grid must be non-empty and non-negative".into()));
    }
    if config.n_z_large == 0 {
        return Err(Error::InvalidArgument("large reference set must be non-empty".into()));
    }
    let (specs, cands) = d_candidates(config.method, &config.d_range)?;
    let pool = truth(n, &mut substream(config.seed, "truth-pool", 0))?;
    let large_set = truth(config.n_z_large, &mut substream(config.seed, "truth-large", 0))?;
    let large = Weighted::new(&large_set, alpha);

    let per_repeat = (0..config.repeats)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(config.seed, "calibration-repeat", r as u64);
            let (tr, te) = split_indices(pool.len(), config.test_fraction, seed)?;
            let input = RepeatInput {
                repeat: r,
                seed,
                train: pool.select(&tr),
                test: pool.select(&te),
                fixed: None,
                alpha,
                large: Some(&large),
            };
            run_repeat(&input, &cands, config)
        })
        .collect::<Result<Vec<_>>>()?;
    let runs: Vec<RunRecord> = per_repeat.into_iter().flatten().collect();

    let large_medians: Vec<f64> = (0..specs.len())
        .map(|k| median(&runs.iter().filter(|r| r.point == k).filter_map(|r| r.w_large).collect::<Vec<_>>()))
        .collect();
    let mut correlations = Vec::with_capacity(config.beta_grid.len());
    for &beta in &config.beta_grid {
        let sr_medians: Vec<f64> = (0..specs.len())
            .map(|k| median(&runs.iter().filter(|r| r.point == k).map(|r| r.sr(beta)).collect::<Vec<_>>()))
            .collect();
        correlations.push(pearson(&sr_medians, &large_medians)?);
    }
    let (best, &max_correlation) = correlations
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("non-empty grid");
    let argmax_beta = config.beta_grid[best];
    let curve = SelectionCurve::build(&specs, runs, argmax_beta, config)?;
    Ok(CalibrationResult {
        d: 0,
        betas: config.beta_grid.clone(),
        correlations,
        argmax_beta,
        max_correlation,
        curve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationResult {
    pub d: usize,
    pub beta: f64,
    /// `(d_i, β_i)` for every d selection, starting with `(d_0, β_0)`.
    pub trace: Vec<(usize, f64)>,
    pub selection: SelectionCurve,
    pub calibrations: Vec<CalibrationResult>,
}

/// Alternate d selection and β calibration until d repeats.
pub fn iterate_d_beta(full: &Dataset, beta0: f64, config: &ExperimentConfig) -> Result<IterationResult> {
    if !(beta0 > 0.0 && beta0.is_finite()) {
        return Err(Error::InvalidArgument(format!("initial beta must be positive, got {beta0}")));
    }
    let base = select_d(full, &ExperimentConfig { beta: beta0, ..config.clone() })?;
    let pick = |curve: &SelectionCurve| curve.selected_d.ok_or_else(|| Error::InvalidArgument("no d candidates".into()));
    let mut d_prev = pick(&base)?;
    let mut trace = vec![(d_prev, beta0)];
    let mut calibrations: Vec<CalibrationResult> = Vec::new();
    for _ in 0..config.max_iterations {
        let cal = match calibrations.iter().find(|c| c.d == d_prev) {
            Some(c) => c.clone(),
            None => {
                let c = calibrate_beta(full, d_prev, config)?;
                calibrations.push(c.clone());
                c
            }
        };
        let beta = cal.argmax_beta;
        let selection = base.with_beta(beta, config)?;
        let d = pick(&selection)?;
        trace.push((d, beta));
        if d == d_prev {
            return Ok(IterationResult { d, beta, trace, selection, calibrations });
        }
        d_prev = d;
    }
    Err(Error::NonConvergence { trace })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub d: usize,
    pub beta: f64,
    pub points: Vec<CurvePoint>,
    /// Method names ordered by increasing median SR.
    pub ranking: Vec<String>,
    pub runs: Vec<RunRecord>,
}

/// Evaluate each method over `config.repeats` partitions of `full`.
pub fn compare_methods(
    full: &Dataset,
    fixed: Option<&FixedTable>,
    methods: &[Method],
    config: &ExperimentConfig,
) -> Result<ComparisonReport> {
    config.validate()?;
    if methods.is_empty() {
        return Err(Error::InvalidArgument("no methods to compare".into()));
    }
    if let Some(f) = fixed {
        if f.rows.len() != full.len() {
            return Err(Error::LayoutMismatch("fixed parameter table is not aligned with the data".into()));
        }
    }
    let specs: Vec<PointSpec> = methods.iter().map(|m| PointSpec { label: m.to_string(), d: None }).collect();
    let cands: Vec<Candidate> = methods.iter().map(|&method| Candidate { method, d: config.d }).collect();
    let runs = run_repeats(full, fixed, &cands, config)?;
    let curve = SelectionCurve::build(&specs, runs, config.beta, config)?;
    let mut order: Vec<&CurvePoint> = curve.points.iter().collect();
    order.sort_by(|a, b| a.median_sr.total_cmp(&b.median_sr));
    Ok(ComparisonReport {
        d: config.d,
        beta: config.beta,
        ranking: order.iter().map(|p| p.label.clone()).collect(),
        points: curve.points,
        runs: curve.runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn bootstrap_of_constant_is_zero() {
        assert_eq!(bootstrap_median_std(&[0.7; 9], 1000, 1).unwrap(), 0.0);
        assert!(bootstrap_median_std(&[1.0], 99, 1).is_err());
    }

    #[test]
    fn bootstrap_two_values_matches_enumeration() {
        // Resamples of {0, 1}: medians 0, 0.5, 0.5, 1 equally likely, std sqrt(1/8).
        let s = bootstrap_median_std(&[0.0, 1.0], 10_000, 3).unwrap();
        assert!((0.33..=0.38).contains(&s), "{s}");
    }

    #[test]
    fn pearson_basics() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        // sab = 4.5, saa = 2, sbb = 61/6.
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.5]).unwrap();
        assert!((r - 4.5 / (2.0f64 * 61.0 / 6.0).sqrt()).abs() < 1e-15);
        assert!(matches!(pearson(&[1.0, 1.0], &[0.0, 1.0]), Err(Error::CorrelationDegenerate)));
    }
}
