//! Gaussian kernel density estimation with an isotropic bandwidth `H = h² I`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::svd::ReducedCoordinates;

/// Relative tolerance of the golden-section search on `h`.
pub const BANDWIDTH_TOLERANCE: f64 = 1e-4;
/// The search bracket is `[h_ref / BRACKET, h_ref * BRACKET]`.
pub const BRACKET: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeModel {
    pub points: Vec<ReducedCoordinates>,
    pub h: f64,
    pub d: usize,
}

impl KdeModel {
    pub fn new(points: Vec<ReducedCoordinates>, h: f64) -> Result<Self> {
        let d = check_points(&points)?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}")));
        }
        Ok(Self { points, h, d })
    }

    /// Fit with the leave-one-out bandwidth.
    pub fn fit(points: Vec<ReducedCoordinates>) -> Result<Self> {
        let h = select_bandwidth(&points)?;
        Self::new(points, h)
    }

    fn log_norm(&self) -> f64 {
        -0.5 * self.d as f64 * (2.0 * PI).ln() - self.d as f64 * self.h.ln()
    }

    /// `log f̂(v)`, evaluated with a log-sum-exp so far tails do not underflow.
    pub fn log_density(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.d {
            return Err(Error::LayoutMismatch(format!("query of length {} for d = {}", v.len(), self.d)));
        }
        let inv = 1.0 / (2.0 * self.h * self.h);
        let exps: Vec<f64> = self.points.iter().map(|p| -sq_dist(p, v) * inv).collect();
        let max = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = exps.iter().map(|e| (e - max).exp()).sum();
        Ok(max + sum.ln() - (self.points.len() as f64).ln() + self.log_norm())
    }

    pub fn density(&self, v: &[f64]) -> Result<f64> {
        self.log_density(v).map(f64::exp)
    }

    /// Draw `n` points: pick a training point uniformly, add `h` times a
    /// standard Gaussian.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<ReducedCoordinates> {
        (0..n)
            .map(|_| {
                let centre = &self.points[rng.gen_range(0..self.points.len())];
                centre
                    .iter()
                    .map(|c| c + self.h * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect()
    }
}

/// Density of `model` at `v`.
pub fn density(model: &KdeModel, v: &[f64]) -> Result<f64> {
    model.density(v)
}

pub fn sample<R: Rng + ?Sized>(model: &KdeModel, n: usize, rng: &mut R) -> Vec<ReducedCoordinates> {
    model.sample(n, rng)
}

fn check_points(points: &[ReducedCoordinates]) -> Result<usize> {
    let d = points
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidArgument("KDE needs at least one point".into()))?;
    if d == 0 || points.iter().any(|p| p.len() != d) {
        return Err(Error::LayoutMismatch("KDE points must share a positive dimension".into()));
    }
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("KDE points must be finite".into()));
    }
    Ok(d)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Pairwise squared distances, reusable across bandwidths.
pub struct LooObjective {
    n: usize,
    d: usize,
    sq: Vec<f64>,
    /// Smallest off-diagonal entry of each row.
    row_min: Vec<f64>,
}

impl LooObjective {
    pub fn new(points: &[ReducedCoordinates]) -> Result<Self> {
        let d = check_points(points)?;
        let n = points.len();
        if n < 2 {
            return Err(Error::InvalidArgument("leave-one-out needs at least two points".into()));
        }
        let mut sq = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let s = sq_dist(&points[i], &points[j]);
                sq[i * n + j] = s;
                sq[j * n + i] = s;
            }
        }
        let row_min = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| sq[i * n + j])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        Ok(Self { n, d, sq, row_min })
    }

    /// Mean leave-one-out log density at bandwidth `h`.
    pub fn eval(&self, h: f64) -> f64 {
        let n = self.n;
        let inv = 1.0 / (2.0 * h * h);
        let log_norm =
            -0.5 * self.d as f64 * (2.0 * PI).ln() - self.d as f64 * h.ln() - ((n - 1) as f64).ln();
        let per_point: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let row = &self.sq[i * n..(i + 1) * n];
                let m = self.row_min[i];
                let s: f64 = row
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &q)| (-(q - m) * inv).exp())
                    .sum();
                -m * inv + s.ln()
            })
            .collect();
        per_point.iter().sum::<f64>() / n as f64 + log_norm
    }
}

/// `(1/N) Σ_i log f̂_{-i}(v_i)`.
pub fn loo_log_likelihood(points: &[ReducedCoordinates], h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}")));
    }
    Ok(LooObjective::new(points)?.eval(h))
}

/// Reference bandwidth used to centre the search bracket.
pub fn reference_bandwidth(points: &[ReducedCoordinates]) -> Result<f64> {
    let d = check_points(points)?;
    let n = points.len() as f64;
    let mut spread = 0.0;
    for k in 0..d {
        let mean = points.iter().map(|p| p[k]).sum::<f64>() / n;
        let var = points.iter().map(|p| (p[k] - mean).powi(2)).sum::<f64>() / n;
        spread += var.sqrt();
    }
    spread /= d as f64;
    let df = d as f64;
    Ok((4.0 / (df + 2.0)).powf(1.0 / (df + 4.0)) * n.powf(-1.0 / (df + 4.0)) * spread)
}

/// Bandwidth maximizing the leave-one-out log likelihood, found by a
/// golden-section search on `log h` over `[h_ref / 20, 20 h_ref]`.
pub fn select_bandwidth(points: &[ReducedCoordinates]) -> Result<f64> {
    let objective = LooObjective::new(points)?;
    if points.iter().all(|p| p == &points[0]) {
        return Err(Error::AllPointsIdentical);
    }
    let h_ref = reference_bandwidth(points)?;
    if !(h_ref > 0.0) {
        return Err(Error::AllPointsIdentical);
    }
    let f = |log_h: f64| objective.eval(log_h.exp());
    let (mut lo, mut hi) = ((h_ref / BRACKET).ln(), (h_ref * BRACKET).ln());
    let tol = (1.0 + BANDWIDTH_TOLERANCE).ln();
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
    }
    Ok(if fa >= fb { a.exp() } else { b.exp() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn standard_normal_peak() {
        let m = KdeModel::new(vec![vec![0.0]], 1.0).unwrap();
        assert!((m.density(&[0.0]).unwrap() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn symmetric_pair() {
        let m = KdeModel::new(vec![vec![-1.3], vec![1.3]], 0.8).unwrap();
        for q in [0.0, 0.4, 1.3, 5.0] {
            let (a, b) = (m.density(&[q]).unwrap(), m.density(&[-q]).unwrap());
            assert!((a - b).abs() <= 1e-15 * a.max(1e-300));
        }
    }

    #[test]
    fn far_query_stays_positive_in_log_space() {
        let m = KdeModel::new(vec![vec![0.0, 0.0]], 0.1).unwrap();
        let ld = m.log_density(&[100.0, 0.0]).unwrap();
        assert!(ld.is_finite() && ld < -1e5);
    }

    #[test]
    fn two_point_closed_form() {
        let (delta, h) = (1.7f64, 0.6f64);
        let got = loo_log_likelihood(&[vec![0.0], vec![delta]], h).unwrap();
        let expected = ((2.0 * PI).powf(-0.5) / h * (-delta * delta / (2.0 * h * h)).exp()).ln();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn duplicated_points_favour_small_bandwidth() {
        let base = [0.0, 0.7, 2.0, 3.1];
        let pts: Vec<Vec<f64>> = base.iter().flat_map(|&x| [vec![x], vec![x]]).collect();
        let s: Vec<f64> = [1.0, 0.1, 0.01].iter().map(|&h| loo_log_likelihood(&pts, h).unwrap()).collect();
        assert!(s[0] < s[1] && s[1] < s[2]);
    }

    #[test]
    fn identical_points_rejected() {
        assert!(matches!(
            select_bandwidth(&[vec![1.0, 2.0], vec![1.0, 2.0]]),
            Err(Error::AllPointsIdentical)
        ));
    }

    #[test]
    fn sampling_is_seeded() {
        let m = KdeModel::new(vec![vec![0.0, 1.0], vec![2.0, 3.0]], 0.3).unwrap();
        let a = m.sample(20, &mut substream(1, "kde", 0));
        assert_eq!(a, m.sample(20, &mut substream(1, "kde", 0)));
        assert_ne!(a, m.sample(20, &mut substream(2, "kde", 0)));
    }

    #[test]
    fn json_shape() {
        let m = KdeModel::new(vec![vec![0.5], vec![1.5]], 0.25).unwrap();
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        assert_eq!(v["h"], 0.25);
        assert_eq!(v["d"], 1);
        assert_eq!(v["points"][1][0], 1.5);
    }
}
