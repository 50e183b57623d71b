//! Independent oracles shared by the integration and acceptance suites.

#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use scenrep_core::kde::{reference_bandwidth, LooObjective, BRACKET};
use scenrep_core::rng::substream;
use scenrep_core::{Dataset, Layout, WeightVector};

/// Row-major points with `dim` columns drawn uniformly from `[-scale, scale]`.
pub fn random_points<R: Rng>(rng: &mut R, n: usize, dim: usize, scale: f64) -> Vec<f64> {
    (0..n * dim).map(|_| rng.gen_range(-scale..scale)).collect()
}

pub fn ground_cost(a: &[f64], b: &[f64], p: f64) -> f64 {
    let d = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    d.powf(p)
}

pub fn cost_matrix(z: &[f64], w: &[f64], dim: usize, p: f64) -> Vec<f64> {
    let mut c = Vec::new();
    for a in z.chunks(dim) {
        for b in w.chunks(dim) {
            c.push(ground_cost(a, b, p));
        }
    }
    c
}

/// Minimum assignment cost over all `n!` permutations (Heap's algorithm).
pub fn brute_force_assignment(cost: &[f64], n: usize) -> f64 {
    let mut perm: Vec<usize> = (0..n).collect();
    let eval = |perm: &[usize]| perm.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum::<f64>();
    let mut best = eval(&perm);
    let mut c = vec![0; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(eval(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Minimum assignment cost by the O(n³) Hungarian method with row and
/// column potentials.
pub fn hungarian(cost: &[f64], n: usize) -> f64 {
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r = owner[col0];
            let mut delta = inf;
            let mut col1 = 0;
            for col in 1..=n {
                if !used[col] {
                    let cur = cost[(r - 1) * n + col - 1] - u[r] - v[col];
                    if cur < minv[col] {
                        minv[col] = cur;
                        way[col] = col0;
                    }
                    if minv[col] < delta {
                        delta = minv[col];
                        col1 = col;
                    }
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|col| cost[(owner[col] - 1) * n + col - 1]).sum()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `Ŵ_p^p` between uniform measures by replicating both sets up to their
/// least common multiple and solving the resulting assignment problem.
pub fn lcm_replication_cost(z: &[f64], w: &[f64], dim: usize, p: f64) -> f64 {
    let (nz, nw) = (z.len() / dim, w.len() / dim);
    let l = nz / gcd(nz, nw) * nw;
    let rep = |pts: &[f64], k: usize| -> Vec<f64> {
        pts.chunks(dim).flat_map(|x| std::iter::repeat(x).take(k).flatten().copied()).collect()
    };
    let (zz, ww) = (rep(z, l / nz), rep(w, l / nw));
    hungarian(&cost_matrix(&zz, &ww, dim, p), l) / l as f64
}

/// `Ŵ_1` in one dimension as `∫ |F⁻¹(t) − G⁻¹(t)| dt` over the merged
/// quantile breakpoints.
pub fn quantile_coupling_w1(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut t = 0.0;
    let mut total = 0.0;
    while i < na && j < nb {
        let next_a = (i + 1) as f64 / na as f64;
        let next_b = (j + 1) as f64 / nb as f64;
        let next = next_a.min(next_b);
        total += (next - t) * (a[i] - b[j]).abs();
        t = next;
        if next_a <= next {
            i += 1;
        }
        if next_b <= next {
            j += 1;
        }
    }
    total
}

/// A dataset of purely static parameters `p0, p1, …`.
pub fn static_dataset(rows: Vec<Vec<f64>>) -> Dataset {
    let n = rows[0].len();
    let layout = Arc::new(Layout::new(0, vec![], (0..n).map(|k| format!("p{k}")).collect()));
    Dataset::from_rows(layout, rows).unwrap()
}

/// Row-major points as static datasets.
pub fn points_dataset(points: &[f64], dim: usize) -> Dataset {
    static_dataset(points.chunks(dim).map(<[f64]>::to_vec).collect())
}

/// A noisy low-rank dataset of 3 to 30 rows with 2 to 10 columns and
/// random positive weights.
pub fn low_rank_case(seed: u64) -> (Dataset, WeightVector) {
    let mut rng = substream(seed, "svd-case", 0);
    let n_x = rng.gen_range(2..=10);
    let n = rng.gen_range(3..=30);
    let rank = rng.gen_range(1..=n_x);
    let factors: Vec<Vec<f64>> = (0..rank).map(|_| (0..n_x).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let rows = (0..n)
        .map(|_| {
            let mut x: Vec<f64> = (0..n_x).map(|_| rng.gen_range(-0.05..0.05)).collect();
            for f in &factors {
                let c: f64 = rng.gen_range(-3.0..3.0);
                x.iter_mut().zip(f).for_each(|(x, f)| *x += c * f);
            }
            x
        })
        .collect();
    let alpha = WeightVector::new((0..n_x).map(|_| rng.gen_range(0.2..3.0)).collect()).unwrap();
    (static_dataset(rows), alpha)
}

/// `Σ_i ‖α ⊙ (x_i − r_i)‖²`.
pub fn weighted_residual(data: &Dataset, alpha: &WeightVector, recon: &[Vec<f64>]) -> f64 {
    data.rows()
        .zip(recon)
        .map(|(x, r)| x.iter().zip(r).zip(&alpha.values).map(|((x, r), a)| (a * (x - r)).powi(2)).sum::<f64>())
        .sum()
}

pub fn normal_points(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rng = substream(seed, "kde-points", 0);
    (0..n).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect()
}

/// Best bandwidth on a log-spaced grid of `count` points over the search bracket.
pub fn bandwidth_grid_search(points: &[Vec<f64>], count: usize) -> f64 {
    let objective = LooObjective::new(points).unwrap();
    let h_ref = reference_bandwidth(points).unwrap();
    let (lo, hi) = ((h_ref / BRACKET).ln(), (h_ref * BRACKET).ln());
    (0..count)
        .map(|k| (lo + (hi - lo) * k as f64 / (count - 1) as f64).exp())
        .map(|h| (h, objective.eval(h)))
        .fold((0.0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0
}

/// The five fixed datasets used for bandwidth checks: normal, bimodal,
/// log-normal, and 2-D and 3-D normal clouds.
pub fn bandwidth_datasets() -> Vec<Vec<Vec<f64>>> {
    let mut bimodal = normal_points(3, 120, 1);
    bimodal.iter_mut().enumerate().for_each(|(i, p)| p[0] += if i % 2 == 0 { -3.0 } else { 3.0 });
    let skewed: Vec<Vec<f64>> = normal_points(4, 150, 1).into_iter().map(|p| vec![p[0].exp()]).collect();
    vec![normal_points(5, 200, 1), bimodal, skewed, normal_points(6, 150, 2), normal_points(7, 100, 3)]
}
