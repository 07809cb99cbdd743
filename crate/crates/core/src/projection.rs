//! Deterministic 2-D projection of the clustered matrix for plotting.
//!
//! Top-two principal directions of the column-centred data, found by power
//! iteration on the covariance matrix with deflation. Each direction is
//! signed so that its largest-magnitude component is positive.

use crate::dataset::DataMatrix;
use crate::error::{Error, Result};

const TOL: f64 = 1e-10;
const MAX_ITER: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct Projection2D {
    pub labels: Vec<String>,
    pub coords: Vec<[f64; 2]>,
    /// Share of total variance captured by the two directions.
    pub explained_variance_fraction: f64,
    /// The two unit directions, in input-column space.
    pub directions: [Vec<f64>; 2],
}

impl Projection2D {
    /// `country,x,y,cluster`
    pub fn to_csv(&self, clusters: &[usize]) -> Result<String> {
        if clusters.len() != self.labels.len() {
            return Err(Error::DimensionMismatch { expected: self.labels.len(), found: clusters.len() });
        }
        let mut out = String::from("country,x,y,cluster\n");
        for ((label, [x, y]), c) in self.labels.iter().zip(&self.coords).zip(clusters) {
            out.push_str(&format!("{label},{x},{y},{c}\n"));
        }
        Ok(out)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn mat_vec(c: &[f64], v: &[f64]) -> Vec<f64> {
    let d = v.len();
    (0..d).map(|i| dot(&c[i * d..(i + 1) * d], v)).collect()
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let p = dot(v, b);
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
    }
}

/// Power iteration restricted to the complement of `found`. Returns the unit
/// direction and its Rayleigh quotient.
fn power_iterate(c: &[f64], start: Vec<f64>, found: &[Vec<f64>], floor: f64) -> Option<(Vec<f64>, f64)> {
    let mut v = start;
    orthogonalize(&mut v, found);
    let nv = norm(&v);
    if nv < 1e-8 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= nv);
    for _ in 0..MAX_ITER {
        let mut w = mat_vec(c, &v);
        orthogonalize(&mut w, found);
        let nw = norm(&w);
        if nw <= floor {
            // v lies in the null space of what is left
            break;
        }
        w.iter_mut().for_each(|x| *x /= nw);
        let delta = w.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        v = w;
        if delta < TOL {
            break;
        }
    }
    let lambda = dot(&v, &mat_vec(c, &v)).max(0.0);
    Some((v, lambda))
}

/// Leading direction of `c` orthogonal to `found`.
///
/// The iteration is started from every standard basis vector in turn and
/// the largest Rayleigh quotient wins (earliest start on ties). A single
/// start at e1 stalls whenever e1 happens to be an eigenvector itself.
fn leading_direction(c: &[f64], d: usize, found: &[Vec<f64>], floor: f64) -> (Vec<f64>, f64) {
    let mut best: Option<(Vec<f64>, f64)> = None;
    for j in 0..d {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        if let Some((v, l)) = power_iterate(c, e, found, floor) {
            if best.as_ref().is_none_or(|(_, bl)| l > *bl * (1.0 + 1e-12)) {
                best = Some((v, l));
            }
        }
    }
    best.expect("d > found.len() leaves a basis vector outside the span")
}

fn canonical_sign(v: &mut [f64]) {
    let mut idx = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn pca_2d(matrix: &DataMatrix) -> Result<Projection2D> {
    let (n, d) = (matrix.n_rows(), matrix.n_cols());
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, found: n });
    }
    if d < 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: d });
    }
    matrix.ensure_finite()?;

    let means: Vec<f64> = (0..d).map(|j| (0..n).map(|i| matrix.get(i, j)).sum::<f64>() / n as f64).collect();
    let centred: Vec<Vec<f64>> = matrix.rows().map(|r| r.iter().zip(&means).map(|(x, m)| x - m).collect()).collect();
    let mut cov = vec![0.0; d * d];
    for row in &centred {
        for a in 0..d {
            for b in a..d {
                cov[a * d + b] += row[a] * row[b];
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            cov[a * d + b] /= n as f64;
            cov[b * d + a] = cov[a * d + b];
        }
    }
    let trace: f64 = (0..d).map(|j| cov[j * d + j]).sum();
    let floor = 1e-14 * trace.max(f64::MIN_POSITIVE);

    let (mut v1, l1) = leading_direction(&cov, d, &[], floor);
    canonical_sign(&mut v1);
    let (mut v2, l2) = leading_direction(&cov, d, std::slice::from_ref(&v1), floor);
    canonical_sign(&mut v2);

    let coords = centred.iter().map(|r| [dot(r, &v1), dot(r, &v2)]).collect();
    let explained_variance_fraction = if trace > 0.0 { ((l1 + l2) / trace).clamp(0.0, 1.0) } else { 1.0 };
    Ok(Projection2D { labels: matrix.labels().to_vec(), coords, explained_variance_fraction, directions: [v1, v2] })
}
