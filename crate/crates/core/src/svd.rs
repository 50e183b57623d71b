//! Weighted, centered SVD reduction of parameter vectors.
//!
//! The training vectors are scaled by `alpha`, centered on their mean `mu`
//! and stacked as the columns of `X = U Σ Vᵀ`. A scenario is then described
//! by the first `d` entries of its row of `V`, and approximated by
//! `alpha ⊙ x ≈ mu + Σ_{j ≤ d} σ_j v_j u_j`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{Dataset, Layout, ParameterVector, WeightVector};

/// Coordinates of one scenario in the reduced space.
pub type ReducedCoordinates = Vec<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedBasis {
    pub layout: Layout,
    /// Mean of the weighted training vectors.
    pub mean: Vec<f64>,
    pub weights: WeightVector,
    /// `σ_1 ≥ … ≥ σ_d`.
    pub singular_values: Vec<f64>,
    /// All `min(n_x, N_x)` singular values, non-increasing.
    pub spectrum: Vec<f64>,
    /// `u_1 … u_d`, each of length `n_x`.
    pub left_vectors: Vec<Vec<f64>>,
    pub n_train: usize,
    /// Sum of all squared singular values.
    pub total_variance: f64,
}

impl ReducedBasis {
    pub fn d(&self) -> usize {
        self.singular_values.len()
    }

    pub fn n_x(&self) -> usize {
        self.mean.len()
    }

    /// The same basis truncated to its first `d` components.
    pub fn truncated(&self, d: usize) -> Result<ReducedBasis> {
        if d == 0 || d > self.d() {
            return Err(Error::DTooLarge { d, max: self.d() });
        }
        let mut b = self.clone();
        b.singular_values.truncate(d);
        b.left_vectors.truncate(d);
        Ok(b)
    }

    /// `mu ⊘ alpha` followed by `u_j ⊘ alpha` for every retained component,
    /// i.e. the mean scenario and the components in original units.
    pub fn unweighted_components(&self) -> Vec<Vec<f64>> {
        std::iter::once(&self.mean)
            .chain(self.left_vectors.iter())
            .map(|v| self.weights.unapply(v))
            .collect()
    }

    fn check_layout(&self, layout: &Layout) -> Result<()> {
        if *layout != self.layout {
            return Err(Error::LayoutMismatch(format!(
                "basis n_x {} vs vector n_x {}",
                self.layout.n_x(),
                layout.n_x()
            )));
        }
        Ok(())
    }

    fn zero_threshold(&self) -> f64 {
        let scale = self.spectrum.first().copied().unwrap_or(0.0);
        scale * f64::EPSILON * (self.n_x().max(self.n_train) as f64)
    }
}

/// Fit the basis on `train` and return it with the training coordinates.
pub fn fit_basis(
    train: &Dataset,
    alpha: &WeightVector,
    d: usize,
) -> Result<(ReducedBasis, Vec<ReducedCoordinates>)> {
    let n_x = train.dim();
    let n = train.len();
    if alpha.len() != n_x {
        return Err(Error::LayoutMismatch(format!("{} weights for n_x = {n_x}", alpha.len())));
    }
    let max = n_x.min(n);
    if d == 0 || d > max {
        return Err(Error::DTooLarge { d, max });
    }
    let weighted = alpha.apply_dataset(train);
    let mut mean = vec![0.0; n_x];
    for row in weighted.chunks(n_x) {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let x = DMatrix::from_fn(n_x, n, |k, i| weighted[i * n_x + k] - mean[k]);
    let svd = x.svd(true, true);
    let u = svd.u.expect("left vectors requested");
    let v_t = svd.v_t.expect("right vectors requested");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let spectrum: Vec<f64> = order.iter().map(|&j| svd.singular_values[j]).collect();
    let total_variance = spectrum.iter().map(|s| s * s).sum();

    let null_level = spectrum[0] * f64::EPSILON * (n_x.max(n) as f64);
    let mut left_vectors = Vec::with_capacity(d);
    let mut coords = vec![vec![0.0; d]; n];
    for (slot, &j) in order.iter().take(d).enumerate() {
        let mut col: Vec<f64> = u.column(j).iter().copied().collect();
        // Sign convention: the largest-magnitude entry of u_j is positive.
        let pivot = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (k, &c)| if c.abs() > best.1 { (k, c.abs()) } else { best })
            .0;
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        col.iter_mut().for_each(|c| *c *= sign);
        left_vectors.push(col);
        // Right vectors of a null singular value are arbitrary; pin them to zero.
        if spectrum[slot] > null_level {
            for (i, c) in coords.iter_mut().enumerate() {
                c[slot] = sign * v_t[(j, i)];
            }
        }
    }

    let basis = ReducedBasis {
        layout: (**train.layout()).clone(),
        mean,
        weights: alpha.clone(),
        singular_values: spectrum[..d].to_vec(),
        spectrum,
        left_vectors,
        n_train: n,
        total_variance,
    };
    Ok((basis, coords))
}

/// Project `x` onto the basis: `v_j = u_j · (alpha ⊙ x - mu) / σ_j`.
pub fn reduce(basis: &ReducedBasis, x: &ParameterVector) -> Result<ReducedCoordinates> {
    basis.check_layout(&x.layout)?;
    reduce_values(basis, &x.values)
}

pub fn reduce_values(basis: &ReducedBasis, x: &[f64]) -> Result<ReducedCoordinates> {
    if x.len() != basis.n_x() {
        return Err(Error::LayoutMismatch(format!("{} values for n_x = {}", x.len(), basis.n_x())));
    }
    let tiny = basis.zero_threshold();
    let centered: Vec<f64> = x
        .iter()
        .zip(&basis.weights.values)
        .zip(&basis.mean)
        .map(|((x, a), m)| a * x - m)
        .collect();
    basis
        .singular_values
        .iter()
        .zip(&basis.left_vectors)
        .enumerate()
        .map(|(j, (&s, u))| {
            if s <= tiny {
                return Err(Error::ZeroSingularValue(j + 1));
            }
            Ok(u.iter().zip(&centered).map(|(u, c)| u * c).sum::<f64>() / s)
        })
        .collect()
}

/// Unweighted approximation `(mu + Σ_j σ_j v_j u_j) ⊘ alpha`.
pub fn reconstruct(basis: &ReducedBasis, v: &[f64]) -> Result<ParameterVector> {
    let values = reconstruct_values(basis, v)?;
    ParameterVector::new(Arc::new(basis.layout.clone()), values)
}

pub fn reconstruct_values(basis: &ReducedBasis, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != basis.d() {
        return Err(Error::LayoutMismatch(format!("{} coordinates for d = {}", v.len(), basis.d())));
    }
    let mut y = basis.mean.clone();
    for ((&s, u), &c) in basis.singular_values.iter().zip(&basis.left_vectors).zip(v) {
        let scale = s * c;
        y.iter_mut().zip(u).for_each(|(y, u)| *y += scale * u);
    }
    Ok(basis.weights.unapply(&y))
}

/// Reconstruct a whole set of coordinates into a dataset.
pub fn reconstruct_dataset(basis: &ReducedBasis, coords: &[ReducedCoordinates]) -> Result<Dataset> {
    let layout = Arc::new(basis.layout.clone());
    let mut data = Vec::with_capacity(coords.len() * basis.n_x());
    for v in coords {
        data.extend(reconstruct_values(basis, v)?);
    }
    let ids = (0..coords.len()).map(|i| format!("gen-{i}")).collect();
    Dataset::new(layout, ids, data)
}

/// Fraction of the total weighted variance carried by the first `d_query`
/// singular values. A basis fitted on constant data reports 1.
pub fn explained_variance(basis: &ReducedBasis, d_query: usize) -> f64 {
    if basis.total_variance <= 0.0 {
        return 1.0;
    }
    let captured: f64 = basis.spectrum.iter().take(d_query).map(|s| s * s).sum();
    (captured / basis.total_variance).min(1.0)
}
