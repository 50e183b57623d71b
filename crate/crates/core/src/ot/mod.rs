//! Empirical Wasserstein distance between uniform point sets and the SR metric.

mod simplex;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{Dataset, ParameterVector, WeightVector};

/// Cost matrices with at most this many entries are materialized.
pub const DENSE_COST_LIMIT: usize = 30_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub i: usize,
    pub j: usize,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub entries: Vec<PlanEntry>,
    pub n_z: usize,
    pub n_w: usize,
    /// `Σ d(z_i, w_j)^p t_ij` at the optimum.
    pub cost: f64,
    pub p: f64,
    /// Dual variables `f_i`, `g_j` with `f_i + g_j <= d(z_i, w_j)^p`.
    #[serde(skip)]
    pub row_potentials: Vec<f64>,
    #[serde(skip)]
    pub col_potentials: Vec<f64>,
    #[serde(skip)]
    pub pivots: usize,
}

impl TransportPlan {
    /// Dual objective `Σ f_i / N_z + Σ g_j / N_w`.
    pub fn dual_value(&self) -> f64 {
        self.row_potentials.iter().sum::<f64>() / self.n_z as f64
            + self.col_potentials.iter().sum::<f64>() / self.n_w as f64
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(["i", "j", "mass"]).map_err(err)?;
        for e in &self.entries {
            w.write_record([e.i.to_string(), e.j.to_string(), e.mass.to_string()]).map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub w_test: f64,
    pub w_train: f64,
    pub sr: f64,
    pub beta: f64,
    pub p: f64,
}

impl MetricReport {
    pub fn new(w_test: f64, w_train: f64, beta: f64, p: f64) -> Self {
        Self { w_test, w_train, sr: sr_value(w_test, w_train, beta), beta, p }
    }
}

/// `w_test + β (w_test − w_train)`.
pub fn sr_value(w_test: f64, w_train: f64, beta: f64) -> f64 {
    w_test + beta * (w_test - w_train)
}

/// `‖α⊙a − α⊙b‖₂`.
pub fn pairwise_distance(a: &ParameterVector, b: &ParameterVector, alpha: &WeightVector) -> Result<f64> {
    if a.layout != b.layout {
        return Err(Error::LayoutMismatch("parameter vectors have different layouts".into()));
    }
    if alpha.len() != a.values.len() {
        return Err(Error::LayoutMismatch(format!(
            "weight vector of length {} for n_x = {}",
            alpha.len(),
            a.values.len()
        )));
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .zip(&alpha.values)
        .map(|((x, y), w)| (w * (x - y)).powi(2))
        .sum::<f64>()
        .sqrt())
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("p must be a finite value >= 1, got {p}")))
    }
}

#[inline]
fn ground_cost(a: &[f64], b: &[f64], p: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    if p == 1.0 {
        sq.sqrt()
    } else if p == 2.0 {
        sq
    } else {
        sq.powf(0.5 * p)
    }
}

/// Exact `Ŵ_p` between the uniform measures on the rows of `z` and `w`
/// (row-major, `dim` columns), both already scaled by the weights.
pub fn wasserstein_points(z: &[f64], w: &[f64], dim: usize, p: f64) -> Result<(f64, TransportPlan)> {
    check_p(p)?;
    if dim == 0 || z.is_empty() || w.is_empty() || z.len() % dim != 0 || w.len() % dim != 0 {
        return Err(Error::InvalidArgument("point sets must be non-empty with a common dimension".into()));
    }
    if z.iter().chain(w).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("point coordinates must be finite".into()));
    }
    let (n_z, n_w) = (z.len() / dim, w.len() / dim);
    let g = gcd(n_z as u64, n_w as u64);
    let supply = vec![(n_w as u64 / g) as i64; n_z];
    let demand = vec![(n_z as u64 / g) as i64; n_w];
    let total_flow = (n_z as u64 / g * n_w as u64) as f64;
    let max_pivots = 50 * n_z * n_w + 1_000_000;

    let row = |i: usize| &z[i * dim..(i + 1) * dim];
    let col = |j: usize| &w[j * dim..(j + 1) * dim];
    let sol = if n_z * n_w <= DENSE_COST_LIMIT {
        let mut dense = vec![0.0; n_z * n_w];
        dense.par_chunks_mut(n_w).enumerate().for_each(|(i, out)| {
            let zi = row(i);
            for (j, c) in out.iter_mut().enumerate() {
                *c = ground_cost(zi, col(j), p);
            }
        });
        let max_cost = dense.iter().copied().fold(0.0, f64::max);
        simplex::solve(&supply, &demand, &simplex::DenseCost { values: &dense }, max_cost, max_pivots)?
    } else {
        let max_cost = (0..n_z)
            .into_par_iter()
            .map(|i| (0..n_w).map(|j| ground_cost(row(i), col(j), p)).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max);
        let cost = |i: usize, j: usize| ground_cost(row(i), col(j), p);
        simplex::solve(&supply, &demand, &cost, max_cost, max_pivots)?
    };

    let cost = sol.total_cost / total_flow;
    let entries = sol
        .flows
        .iter()
        .map(|&(i, j, f)| PlanEntry { i, j, mass: f as f64 / total_flow })
        .collect();
    // Rescale node potentials to the unit-mass problem: f_i = -pi_i, g_j = pi_j.
    let plan = TransportPlan {
        entries,
        n_z,
        n_w,
        cost,
        p,
        row_potentials: sol.source_potentials.iter().map(|v| -v).collect(),
        col_potentials: sol.sink_potentials,
        pivots: sol.pivots,
    };
    Ok((cost.max(0.0).powf(1.0 / p), plan))
}

fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn check_pair(a: &Dataset, b: &Dataset, alpha: &WeightVector) -> Result<()> {
    a.check_same_layout(b)?;
    if alpha.len() != a.dim() {
        return Err(Error::LayoutMismatch(format!(
            "weight vector of length {} for n_x = {}",
            alpha.len(),
            a.dim()
        )));
    }
    Ok(())
}

/// Exact `Ŵ_p(Z, W)` under the weighted Euclidean ground distance.
pub fn empirical_wasserstein(
    z: &Dataset,
    w: &Dataset,
    alpha: &WeightVector,
    p: f64,
) -> Result<(f64, TransportPlan)> {
    check_pair(z, w, alpha)?;
    wasserstein_points(&alpha.apply_dataset(z), &alpha.apply_dataset(w), z.dim(), p)
}

/// SR metric of generated set `w` against test set `z` and training set `x`.
pub fn sr_metric(
    w: &Dataset,
    z: &Dataset,
    x: &Dataset,
    alpha: &WeightVector,
    p: f64,
    beta: f64,
) -> Result<MetricReport> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta must be non-negative, got {beta}")));
    }
    check_pair(z, w, alpha)?;
    check_pair(x, w, alpha)?;
    let ws = alpha.apply_dataset(w);
    let dim = w.dim();
    let (w_test, _) = wasserstein_points(&alpha.apply_dataset(z), &ws, dim, p)?;
    let (w_train, _) = wasserstein_points(&alpha.apply_dataset(x), &ws, dim, p)?;
    Ok(MetricReport::new(w_test, w_train, beta, p))
}

/// Entropy-regularized approximation of `Ŵ_p` computed with log-domain
/// Sinkhorn iterations. `epsilon` is relative to the largest ground cost.
/// Returns the transport cost of the regularized plan raised to `1/p`.
pub fn sinkhorn_wasserstein(
    z: &[f64],
    w: &[f64],
    dim: usize,
    p: f64,
    epsilon: f64,
    max_iter: usize,
) -> Result<f64> {
    check_p(p)?;
    if dim == 0 || z.is_empty() || w.is_empty() || z.len() % dim != 0 || w.len() % dim != 0 {
        return Err(Error::InvalidArgument("point sets must be non-empty with a common dimension".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let (n, m) = (z.len() / dim, w.len() / dim);
    let c: Vec<f64> = (0..n * m)
        .map(|e| ground_cost(&z[(e / m) * dim..(e / m + 1) * dim], &w[(e % m) * dim..(e % m + 1) * dim], p))
        .collect();
    let scale = c.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let eps = epsilon * scale;
    let (log_a, log_b) = (-(n as f64).ln(), -(m as f64).ln());
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let lse = |vals: &mut dyn Iterator<Item = f64>| {
        let v: Vec<f64> = vals.collect();
        let mx = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        mx + v.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
    };
    for _ in 0..max_iter {
        let mut shift = 0.0f64;
        for i in 0..n {
            let new = -eps * lse(&mut (0..m).map(|j| (g[j] - c[i * m + j]) / eps + log_b));
            shift = shift.max((new - f[i]).abs());
            f[i] = new;
        }
        for j in 0..m {
            let new = -eps * lse(&mut (0..n).map(|i| (f[i] - c[i * m + j]) / eps + log_a));
            shift = shift.max((new - g[j]).abs());
            g[j] = new;
        }
        if shift <= 1e-12 * scale {
            break;
        }
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..m {
            let t = ((f[i] + g[j] - c[i * m + j]) / eps + log_a + log_b).exp();
            total += t * c[i * m + j];
        }
    }
    Ok(total.powf(1.0 / p))
}
