//! Lloyd's K-Means with k-means++ seeding, plus the elbow and silhouette
//! model-selection helpers.
//!
//! The objective minimised is the inertia
//! `J = sum_i || x_i - mu_{label(i)} ||^2` with hard assignments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::DataMatrix;
use crate::distance::{euclidean, nearest, squared_euclidean};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-6;
const REL_EPS: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Inertia of `labels` against `centroids` on the training matrix.
    /// Never above the last entry of `inertia_trace`.
    pub inertia: f64,
    pub iterations_run: usize,
    pub seed: u64,
    pub converged: bool,
    /// Inertia after every Lloyd iteration, in order.
    pub inertia_trace: Vec<f64>,
}

fn check_k(matrix: &DataMatrix, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::KZero);
    }
    if k > matrix.n_rows() {
        return Err(Error::KTooLarge { k, n: matrix.n_rows() });
    }
    Ok(())
}

/// k-means++ seeding. The first centre is uniform over rows; each further
/// centre is drawn with probability proportional to its squared distance to
/// the nearest centre already chosen. Rows are never chosen twice.
pub fn kmeanspp_init(matrix: &DataMatrix, k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    check_k(matrix, k)?;
    matrix.ensure_finite()?;
    let n = matrix.n_rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![false; n];
    let mut picks = Vec::with_capacity(k);

    let first = rng.gen_range(0..n);
    chosen[first] = true;
    picks.push(first);
    let mut d2: Vec<f64> = matrix.rows().map(|r| squared_euclidean(r, matrix.row(first))).collect();

    while picks.len() < k {
        let total: f64 = (0..n).filter(|&i| !chosen[i]).map(|i| d2[i]).sum();
        let next = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for i in (0..n).filter(|&i| !chosen[i] && d2[i] > 0.0) {
                acc += d2[i];
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            // every remaining row coincides with a centre
            let rest: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            rest[rng.gen_range(0..rest.len())]
        };
        chosen[next] = true;
        picks.push(next);
        for (i, r) in matrix.rows().enumerate() {
            d2[i] = d2[i].min(squared_euclidean(r, matrix.row(next)));
        }
    }
    Ok(picks.into_iter().map(|i| matrix.row(i).to_vec()).collect())
}

pub fn assign(centroids: &[Vec<f64>], matrix: &DataMatrix) -> Result<Vec<usize>> {
    if let Some(c) = centroids.iter().find(|c| c.len() != matrix.n_cols()) {
        return Err(Error::DimensionMismatch { expected: c.len(), found: matrix.n_cols() });
    }
    if centroids.is_empty() {
        return Err(Error::KZero);
    }
    Ok(matrix.rows().map(|r| nearest(r, centroids)).collect())
}

pub fn compute_inertia(matrix: &DataMatrix, centroids: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if labels.len() != matrix.n_rows() {
        return Err(Error::DimensionMismatch { expected: matrix.n_rows(), found: labels.len() });
    }
    if let Some(c) = centroids.iter().find(|c| c.len() != matrix.n_cols()) {
        return Err(Error::DimensionMismatch { expected: matrix.n_cols(), found: c.len() });
    }
    let mut j = 0.0;
    for (i, (row, &l)) in matrix.rows().zip(labels).enumerate() {
        let c = centroids.get(l).ok_or(Error::LabelOutOfRange { row: i, label: l, k: centroids.len() })?;
        j += squared_euclidean(row, c);
    }
    Ok(j)
}

/// Gives every empty cluster the point farthest from its current centroid,
/// drawn only from clusters that can spare one.
fn repair_empty(matrix: &DataMatrix, centroids: &mut [Vec<f64>], labels: &mut [usize]) {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in matrix.rows().enumerate() {
            if counts[labels[i]] < 2 {
                continue;
            }
            let d = squared_euclidean(row, &centroids[labels[i]]);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        let (i, _) = best.expect("k <= n leaves a cluster with two or more points");
        counts[labels[i]] -= 1;
        labels[i] = c;
        counts[c] = 1;
        centroids[c] = matrix.row(i).to_vec();
    }
}

fn cluster_means(matrix: &DataMatrix, labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let d = matrix.n_cols();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (row, &l) in matrix.rows().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(row) {
            *s += x;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        for v in s.iter_mut() {
            *v /= c as f64;
        }
    }
    sums
}

/// One seeded Lloyd run.
///
/// Stops once the relative change in inertia between consecutive iterations
/// is at most `tol`, or after `max_iter` iterations.
pub fn fit(matrix: &DataMatrix, k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<KMeansModel> {
    if max_iter == 0 {
        return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
    }
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::InvalidConfig("tol must be non-negative".into()));
    }
    let mut centroids = kmeanspp_init(matrix, k, seed)?;
    let mut labels = vec![0; matrix.n_rows()];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut prev: Option<f64> = None;

    for _ in 0..max_iter {
        labels = matrix.rows().map(|r| nearest(r, &centroids)).collect();
        repair_empty(matrix, &mut centroids, &mut labels);
        centroids = cluster_means(matrix, &labels, k);
        let j = compute_inertia(matrix, &centroids, &labels)?;
        trace.push(j);
        if let Some(p) = prev {
            if (p - j).abs() / p.max(REL_EPS) <= tol {
                converged = true;
                break;
            }
        }
        prev = Some(j);
    }
    // final assignment against the returned centroids, so the labels agree
    // with what `assign` gives for the same rows
    labels = matrix.rows().map(|r| nearest(r, &centroids)).collect();
    let inertia = compute_inertia(matrix, &centroids, &labels)?;

    Ok(KMeansModel {
        k,
        inertia,
        iterations_run: trace.len(),
        centroids,
        labels,
        seed,
        converged,
        inertia_trace: trace,
    })
}

/// Runs `restarts` fits with seeds `seed, seed + 1, ...` and keeps the one
/// with the lowest inertia (earliest seed on ties).
pub fn fit_best(
    matrix: &DataMatrix,
    k: usize,
    seed: u64,
    restarts: usize,
    max_iter: usize,
    tol: f64,
) -> Result<KMeansModel> {
    if restarts == 0 {
        return Err(Error::InvalidConfig("restarts must be at least 1".into()));
    }
    let mut best: Option<KMeansModel> = None;
    for r in 0..restarts as u64 {
        let m = fit(matrix, k, seed.wrapping_add(r), max_iter, tol)?;
        if best.as_ref().is_none_or(|b| m.inertia < b.inertia) {
            best = Some(m);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

/// Best-of-restarts inertia for every k in `k_min..=k_max`.
pub fn elbow_scan(
    matrix: &DataMatrix,
    k_min: usize,
    k_max: usize,
    seed: u64,
    restarts: usize,
) -> Result<Vec<(usize, f64)>> {
    if k_min == 0 {
        return Err(Error::KZero);
    }
    if k_min > k_max {
        return Err(Error::InvalidConfig(format!("k_min {k_min} exceeds k_max {k_max}")));
    }
    check_k(matrix, k_max)?;
    (k_min..=k_max)
        .map(|k| fit_best(matrix, k, seed, restarts, DEFAULT_MAX_ITER, DEFAULT_TOL).map(|m| (k, m.inertia)))
        .collect()
}

/// Mean silhouette coefficient with Euclidean distances.
///
/// Points in singleton clusters score 0, as do points with `a = b = 0`.
pub fn silhouette(matrix: &DataMatrix, labels: &[usize]) -> Result<f64> {
    let n = matrix.n_rows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: labels.len() });
    }
    matrix.ensure_finite()?;
    let k = labels.iter().max().map_or(0, |m| m + 1);
    if k < 2 || n < 2 {
        return Err(Error::SingleCluster);
    }
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    if let Some(c) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::EmptyCluster(c));
    }

    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if i != j {
                sums[labels[j]] += euclidean(matrix.row(i), matrix.row(j));
            }
        }
        let own = labels[i];
        if sizes[own] == 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k).filter(|&c| c != own).map(|c| sums[c] / sizes[c] as f64).fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}
