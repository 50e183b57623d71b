//! Scenarios, fixed-grid resampling and parameter vectors.
//!
//! A [`Scenario`] is a recorded time window with a set of sampled signals and
//! a set of static parameters. Resampling onto `n_t` equidistant instants and
//! concatenating the statics yields a [`ParameterVector`] of length
//! `n_t * n_y + n_theta`, where all signals at instant `k` precede all
//! signals at instant `k + 1`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "LVD", alias = "lvd")]
    Lvd,
    #[serde(rename = "CUT_IN", alias = "cut_in", alias = "cutin", alias = "cut-in")]
    CutIn,
    #[serde(rename = "CUSTOM", alias = "custom")]
    Custom,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Lvd => "lvd",
            Category::CutIn => "cut-in",
            Category::Custom => "custom",
        })
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lvd" => Ok(Category::Lvd),
            "cut-in" | "cut_in" | "cutin" => Ok(Category::CutIn),
            "custom" => Ok(Category::Custom),
            other => Err(Error::InvalidArgument(format!("unknown category `{other}`"))),
        }
    }
}

/// A recorded scenario: sampled signals over `[t0, t1]` plus static parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub t0: f64,
    pub t1: f64,
    pub category: Category,
    /// Signal name to `(timestamp, value)` samples, in declaration order.
    pub signals: IndexMap<String, Vec<[f64; 2]>>,
    /// Static parameters, in declaration order.
    pub statics: IndexMap<String, f64>,
    /// Optional unit annotations for signals and statics.
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub units: IndexMap<String, String>,
}

impl Scenario {
    pub fn duration(&self) -> f64 {
        self.t1 - self.t0
    }

    /// Check the time window and per-signal sample ordering.
    pub fn validate(&self) -> Result<()> {
        if !(self.t1 > self.t0) {
            return Err(Error::NegativeDuration(self.t1 - self.t0));
        }
        for (name, samples) in &self.signals {
            if samples.len() < 2 {
                return Err(Error::EmptySignal(name.clone()));
            }
            let in_window = samples
                .iter()
                .all(|s| s[0] >= self.t0 && s[0] <= self.t1 && s[1].is_finite());
            let increasing = samples.windows(2).all(|w| w[1][0] > w[0][0]);
            if !in_window || !increasing {
                return Err(Error::NonMonotonicTimestamps(name.clone()));
            }
        }
        Ok(())
    }

    pub fn signal(&self, name: &str) -> Result<&[[f64; 2]]> {
        self.signals
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingSignal {
                scenario: self.id.clone(),
                name: name.to_string(),
            })
    }

    pub fn static_value(&self, name: &str) -> Result<f64> {
        self.statics
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingStatic {
                scenario: self.id.clone(),
                name: name.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Linear,
    #[default]
    CubicSpline,
}

impl FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Interpolation::Linear),
            "cubic" | "cubic_spline" | "cubic-spline" | "spline" => Ok(Interpolation::CubicSpline),
            other => Err(Error::InvalidArgument(format!("unknown interpolation `{other}`"))),
        }
    }
}

/// The equidistant grid `t0 + k (t1 - t0) / (n_t - 1)`, with the last point exactly `t1`.
pub fn time_grid(t0: f64, t1: f64, n_t: usize) -> Vec<f64> {
    let span = t1 - t0;
    let last = (n_t - 1) as f64;
    (0..n_t)
        .map(|k| if k + 1 == n_t { t1 } else { t0 + span * (k as f64) / last })
        .collect()
}

/// Piecewise interpolant through a set of samples with strictly increasing times.
///
/// Outside the sampled range the first or last value is held.
struct Interpolant<'a> {
    samples: &'a [[f64; 2]],
    /// Second derivatives at the knots; empty for linear interpolation.
    second: Vec<f64>,
}

impl<'a> Interpolant<'a> {
    fn linear(samples: &'a [[f64; 2]]) -> Self {
        Self { samples, second: Vec::new() }
    }

    /// Natural cubic spline (zero second derivative at both ends).
    fn natural_cubic(samples: &'a [[f64; 2]]) -> Self {
        let n = samples.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            let h: Vec<f64> = samples.windows(2).map(|w| w[1][0] - w[0][0]).collect();
            // Thomas algorithm on the interior knots 1..n-1.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                let (h0, h1) = (h[i], h[i + 1]);
                diag[i] = 2.0 * (h0 + h1);
                rhs[i] = 6.0
                    * ((samples[i + 2][1] - samples[i + 1][1]) / h1
                        - (samples[i + 1][1] - samples[i][1]) / h0);
            }
            for i in 1..k {
                let w = h[i] / diag[i - 1];
                diag[i] -= w * h[i];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - h[i + 1] * m[i + 2]) / diag[i];
            }
        }
        Self { samples, second: m }
    }

    fn eval(&self, t: f64) -> f64 {
        let s = self.samples;
        let n = s.len();
        if t <= s[0][0] {
            return s[0][1];
        }
        if t >= s[n - 1][0] {
            return s[n - 1][1];
        }
        // First knot strictly greater than t; t lies in [s[i-1], s[i]).
        let i = s.partition_point(|p| p[0] <= t);
        let (ta, ya) = (s[i - 1][0], s[i - 1][1]);
        let (tb, yb) = (s[i][0], s[i][1]);
        let h = tb - ta;
        if (t - ta).abs() <= 1e-12 * h {
            return ya;
        }
        if (tb - t).abs() <= 1e-12 * h {
            return yb;
        }
        let (a, b) = (tb - t, t - ta);
        if self.second.is_empty() {
            return (ya * a + yb * b) / h;
        }
        let (ma, mb) = (self.second[i - 1], self.second[i]);
        ma * a * a * a / (6.0 * h)
            + mb * b * b * b / (6.0 * h)
            + (ya / h - ma * h / 6.0) * a
            + (yb / h - mb * h / 6.0) * b
    }
}

fn resample_signal(
    name: &str,
    samples: &[[f64; 2]],
    grid: &[f64],
    method: Interpolation,
) -> Result<Vec<f64>> {
    let interp = match method {
        Interpolation::Linear => Interpolant::linear(samples),
        Interpolation::CubicSpline => {
            if samples.len() < 4 {
                return Err(Error::InsufficientSamplesForSpline {
                    signal: name.to_string(),
                    got: samples.len(),
                });
            }
            Interpolant::natural_cubic(samples)
        }
    };
    Ok(grid.iter().map(|&t| interp.eval(t)).collect())
}

/// Evaluate every signal of `scenario` on the `n_t`-point grid over `[t0, t1]`.
///
/// Row `k` holds all signals (in declaration order) at grid instant `k`.
pub fn resample_time_series(
    scenario: &Scenario,
    n_t: usize,
    method: Interpolation,
) -> Result<Vec<Vec<f64>>> {
    let names: Vec<&str> = scenario.signals.keys().map(String::as_str).collect();
    resample_signals(scenario, &names, n_t, method)
}

/// Like [`resample_time_series`] restricted to the named signals, in the given order.
pub fn resample_signals(
    scenario: &Scenario,
    names: &[&str],
    n_t: usize,
    method: Interpolation,
) -> Result<Vec<Vec<f64>>> {
    if n_t < 2 {
        return Err(Error::InvalidArgument(format!("n_t must be at least 2, got {n_t}")));
    }
    scenario.validate()?;
    let grid = time_grid(scenario.t0, scenario.t1, n_t);
    let columns = names
        .iter()
        .map(|name| resample_signal(name, scenario.signal(name)?, &grid, method))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..n_t)
        .map(|k| columns.iter().map(|c| c[k]).collect())
        .collect())
}

/// Shape of a parameter vector: grid size, signal order and statics order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Layout {
    pub n_t: usize,
    pub signals: Vec<String>,
    pub statics: Vec<String>,
}

impl Layout {
    pub fn new(n_t: usize, signals: Vec<String>, statics: Vec<String>) -> Self {
        Self { n_t, signals, statics }
    }

    /// Layout using every signal and static of `scenario` in declaration order.
    pub fn from_scenario(scenario: &Scenario, n_t: usize) -> Self {
        Self {
            n_t,
            signals: scenario.signals.keys().cloned().collect(),
            statics: scenario.statics.keys().cloned().collect(),
        }
    }

    pub fn n_y(&self) -> usize {
        self.signals.len()
    }

    pub fn n_theta(&self) -> usize {
        self.statics.len()
    }

    /// Total vector length `n_t * n_y + n_theta`.
    pub fn n_x(&self) -> usize {
        self.n_t * self.n_y() + self.n_theta()
    }

    pub fn series_len(&self) -> usize {
        self.n_t * self.n_y()
    }

    /// Index of signal `signal` at grid instant `k`.
    pub fn series_index(&self, k: usize, signal: usize) -> usize {
        k * self.n_y() + signal
    }

    pub fn static_index(&self, name: &str) -> Option<usize> {
        self.statics
            .iter()
            .position(|s| s == name)
            .map(|i| self.series_len() + i)
    }

    pub fn signal_position(&self, name: &str) -> Option<usize> {
        self.signals.iter().position(|s| s == name)
    }

    /// Column names, `sig.<name>.<k>` then `static.<name>`.
    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_x());
        for k in 0..self.n_t {
            for s in &self.signals {
                names.push(format!("sig.{s}.{k}"));
            }
        }
        names.extend(self.statics.iter().map(|s| format!("static.{s}")));
        names
    }

    /// Inverse of [`Layout::column_names`].
    pub fn from_column_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut signals: Vec<String> = Vec::new();
        let mut statics = Vec::new();
        let mut series_cols = 0usize;
        for name in names {
            let name = name.as_ref();
            if let Some(rest) = name.strip_prefix("static.") {
                statics.push(rest.to_string());
            } else if let Some(rest) = name.strip_prefix("sig.") {
                if !statics.is_empty() {
                    return Err(Error::Parse(format!("signal column `{name}` after statics")));
                }
                let (signal, _) = rest
                    .rsplit_once('.')
                    .ok_or_else(|| Error::Parse(format!("bad column `{name}`")))?;
                if !signals.iter().any(|s| s == signal) {
                    signals.push(signal.to_string());
                }
                series_cols += 1;
            } else {
                return Err(Error::Parse(format!("unrecognised column `{name}`")));
            }
        }
        let n_t = if signals.is_empty() { 0 } else { series_cols / signals.len() };
        let layout = Layout { n_t, signals, statics };
        if layout.column_names().iter().map(String::as_str).ne(names.iter().map(AsRef::as_ref)) {
            return Err(Error::Parse("columns do not follow the time-major layout".into()));
        }
        Ok(layout)
    }

    /// Default group constants: `1/sqrt(n_t)` shared by every time-series
    /// entry and `1` for each static.
    pub fn default_groups(&self) -> WeightGroups {
        let mut groups = Vec::with_capacity(1 + self.n_theta());
        if self.series_len() > 0 {
            groups.push(WeightGroup {
                name: "series".into(),
                indices: (0..self.series_len()).collect(),
                constant: 1.0 / (self.n_t as f64).sqrt(),
            });
        }
        for (i, s) in self.statics.iter().enumerate() {
            groups.push(WeightGroup {
                name: format!("static.{s}"),
                indices: vec![self.series_len() + i],
                constant: 1.0,
            });
        }
        WeightGroups { groups }
    }
}

/// A flattened scenario `x_i` together with its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub layout: Arc<Layout>,
    pub values: Vec<f64>,
}

impl ParameterVector {
    pub fn new(layout: Arc<Layout>, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.n_x() {
            return Err(Error::LayoutMismatch(format!(
                "vector has {} entries, layout needs {}",
                values.len(),
                layout.n_x()
            )));
        }
        Ok(Self { layout, values })
    }

    /// The resampled series block as an `n_t x n_y` matrix.
    pub fn time_series(&self) -> Vec<Vec<f64>> {
        let n_y = self.layout.n_y();
        self.values[..self.layout.series_len()]
            .chunks(n_y.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn statics(&self) -> &[f64] {
        &self.values[self.layout.series_len()..]
    }
}

/// Resample `scenario` on `layout` and append its statics.
pub fn assemble_parameter_vector(
    scenario: &Scenario,
    layout: &Arc<Layout>,
    method: Interpolation,
) -> Result<ParameterVector> {
    let names: Vec<&str> = layout.signals.iter().map(String::as_str).collect();
    let mut values = Vec::with_capacity(layout.n_x());
    if !names.is_empty() {
        for row in resample_signals(scenario, &names, layout.n_t, method)? {
            values.extend(row);
        }
    } else {
        scenario.validate()?;
    }
    for name in &layout.statics {
        values.push(scenario.static_value(name)?);
    }
    ParameterVector::new(Arc::clone(layout), values)
}

/// A set of parameter vectors sharing one layout, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    layout: Arc<Layout>,
    ids: Vec<String>,
    data: Vec<f64>,
}

impl Dataset {
    pub fn new(layout: Arc<Layout>, ids: Vec<String>, data: Vec<f64>) -> Result<Self> {
        let n_x = layout.n_x();
        if n_x == 0 || data.len() != ids.len() * n_x {
            return Err(Error::LayoutMismatch(format!(
                "{} values for {} rows of width {n_x}",
                data.len(),
                ids.len()
            )));
        }
        Ok(Self { layout, ids, data })
    }

    /// Build from rows, naming them `row-<i>` when no ids are supplied.
    pub fn from_rows(layout: Arc<Layout>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let ids = (0..rows.len()).map(|i| format!("row-{i}")).collect();
        let n_x = layout.n_x();
        let mut data = Vec::with_capacity(rows.len() * n_x);
        for r in rows {
            if r.len() != n_x {
                return Err(Error::LayoutMismatch(format!("row of length {} vs {n_x}", r.len())));
            }
            data.extend(r);
        }
        Self::new(layout, ids, data)
    }

    pub fn from_vectors(ids: Vec<String>, vectors: Vec<ParameterVector>) -> Result<Self> {
        let layout = vectors
            .first()
            .map(|v| Arc::clone(&v.layout))
            .ok_or_else(|| Error::InvalidArgument("empty dataset".into()))?;
        let mut data = Vec::with_capacity(vectors.len() * layout.n_x());
        for v in vectors {
            if *v.layout != *layout {
                return Err(Error::LayoutMismatch("mixed layouts in dataset".into()));
            }
            data.extend(v.values);
        }
        Self::new(layout, ids, data)
    }

    /// Assemble every scenario on a common layout.
    pub fn from_scenarios(
        scenarios: &[Scenario],
        layout: &Arc<Layout>,
        method: Interpolation,
    ) -> Result<Self> {
        let vectors = scenarios
            .iter()
            .map(|s| assemble_parameter_vector(s, layout, method))
            .collect::<Result<Vec<_>>>()?;
        let ids = scenarios.iter().map(|s| s.id.clone()).collect();
        Self::from_vectors(ids, vectors)
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.layout.n_x()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.dim();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim())
    }

    /// Row-major values.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn vector(&self, i: usize) -> ParameterVector {
        ParameterVector {
            layout: Arc::clone(&self.layout),
            values: self.row(i).to_vec(),
        }
    }

    /// Rows at `indices`, in that order (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let n = self.dim();
        let mut data = Vec::with_capacity(indices.len() * n);
        let mut ids = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.row(i));
            ids.push(self.ids[i].clone());
        }
        Dataset { layout: Arc::clone(&self.layout), ids, data }
    }

    pub fn check_same_layout(&self, other: &Dataset) -> Result<()> {
        if *self.layout != *other.layout {
            return Err(Error::LayoutMismatch(format!(
                "n_x {} vs {}",
                self.layout.n_x(),
                other.layout.n_x()
            )));
        }
        Ok(())
    }
}

/// A named set of parameter indices sharing one constant `w_bar`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightGroup {
    pub name: String,
    pub indices: Vec<usize>,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightGroups {
    pub groups: Vec<WeightGroup>,
}

/// Per-parameter weights `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub values: Vec<f64>,
    #[serde(default)]
    pub group_constants: IndexMap<String, f64>,
}

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::InvalidArgument("weights must be positive and finite".into()));
        }
        Ok(Self { values, group_constants: IndexMap::new() })
    }

    pub fn ones(n: usize) -> Self {
        Self { values: vec![1.0; n], group_constants: IndexMap::new() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `alpha ⊙ x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.values).map(|(x, a)| a * x).collect()
    }

    /// `y ⊘ alpha`.
    pub fn unapply(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.values).map(|(y, a)| y / a).collect()
    }

    /// Weighted copy of every row of `data`, row-major.
    pub fn apply_dataset(&self, data: &Dataset) -> Vec<f64> {
        let mut out = Vec::with_capacity(data.as_slice().len());
        for row in data.rows() {
            out.extend(row.iter().zip(&self.values).map(|(x, a)| a * x));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroVariancePolicy {
    #[default]
    Error,
    /// Floor the standard deviation at `1e-12` times the parameter's mean
    /// magnitude (or `1e-12` when the mean is zero).
    Floor,
}

/// Population mean and standard deviation of every column.
pub fn column_moments(data: &Dataset) -> (Vec<f64>, Vec<f64>) {
    let n = data.len() as f64;
    let dim = data.dim();
    let mut mean = vec![0.0; dim];
    for row in data.rows() {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for row in data.rows() {
        for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
    (mean, std)
}

/// `alpha_k = w_bar_k / std_k` with the population standard deviation.
pub fn compute_weights(
    dataset: &Dataset,
    groups: &WeightGroups,
    policy: ZeroVariancePolicy,
) -> Result<WeightVector> {
    let dim = dataset.dim();
    let mut constant = vec![f64::NAN; dim];
    for g in &groups.groups {
        for &k in &g.indices {
            if k >= dim || !constant[k].is_nan() {
                return Err(Error::InvalidArgument(format!(
                    "index {k} of group `{}` is out of range or assigned twice",
                    g.name
                )));
            }
            if !(g.constant > 0.0 && g.constant.is_finite()) {
                return Err(Error::InvalidArgument(format!("group `{}` constant must be positive", g.name)));
            }
            constant[k] = g.constant;
        }
    }
    if let Some(k) = constant.iter().position(|c| c.is_nan()) {
        return Err(Error::InvalidArgument(format!("index {k} belongs to no weight group")));
    }
    let (mean, std) = column_moments(dataset);
    let mut values = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut s = std[k];
        if !(s > 0.0) {
            match policy {
                ZeroVariancePolicy::Error => return Err(Error::ZeroVariance(k)),
                ZeroVariancePolicy::Floor => {
                    let m = mean[k].abs();
                    s = if m > 0.0 { 1e-12 * m } else { 1e-12 };
                }
            }
        }
        values.push(constant[k] / s);
    }
    Ok(WeightVector {
        values,
        group_constants: groups.groups.iter().map(|g| (g.name.clone(), g.constant)).collect(),
    })
}

/// Shuffle `0..n` under `seed` and cut off `round(fraction * n)` test indices.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let n_test = (test_fraction * n as f64).round() as usize;
    if !(test_fraction > 0.0 && test_fraction < 1.0) || n < 2 || n_test == 0 || n_test >= n {
        return Err(Error::DegenerateSplit { n, fraction: test_fraction });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::substream(seed, "split", 0));
    let test = idx.split_off(n - n_test);
    Ok((idx, test))
}

/// Disjoint train/test partition by seeded uniform shuffling.
pub fn split_dataset(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(dataset.len(), test_fraction, seed)?;
    Ok((dataset.select(&train), dataset.select(&test)))
}
