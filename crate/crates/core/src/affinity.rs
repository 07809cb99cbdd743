//! Affinity propagation.
//!
//! Messages are exchanged between every pair of points until the set of
//! exemplars stops changing:
//!
//! * responsibility `r(i,k) = s(i,k) - max_{k' != k} (a(i,k') + s(i,k'))`
//! * availability, diagonal `a(k,k) = sum_{i' != k} max(0, r(i',k))`
//! * availability, off-diagonal
//!   `a(i,k) = min(0, r(k,k) + sum_{i' not in {i,k}} max(0, r(i',k)))`
//! * criterion `c(i,k) = r(i,k) + a(i,k)`
//!
//! Both message updates are damped: `new = λ·old + (1-λ)·raw`. With λ = 0 the
//! update functions return the raw equations.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::dataset::DataMatrix;
use crate::distance::squared_euclidean;
use crate::error::{Error, Result};

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { n, data })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|k| self[(k, k)]).collect()
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;

    fn index(&self, (i, k): (usize, usize)) -> &f64 {
        &self.data[i * self.n + k]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, k): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum Preference {
    /// Lower median of the off-diagonal similarities.
    #[default]
    Median,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct APConfig {
    pub damping: f64,
    pub max_iter: usize,
    pub convergence_window: usize,
    pub preference: Preference,
}

impl Default for APConfig {
    fn default() -> Self {
        Self { damping: 0.5, max_iter: 200, convergence_window: 15, preference: Preference::Median }
    }
}

impl APConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..1.0).contains(&self.damping) {
            return Err(Error::InvalidConfig(format!("damping {} outside [0.5, 1)", self.damping)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if self.convergence_window == 0 || self.convergence_window > self.max_iter {
            return Err(Error::InvalidConfig(format!(
                "convergence window {} must be in 1..={}",
                self.convergence_window, self.max_iter
            )));
        }
        if let Preference::Value(p) = self.preference {
            if !p.is_finite() {
                return Err(Error::InvalidConfig("preference must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Message state between iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct APState {
    pub similarity: SquareMatrix,
    pub responsibility: SquareMatrix,
    pub availability: SquareMatrix,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct APResult {
    /// Row indices of the exemplars, ascending.
    pub exemplar_indices: Vec<usize>,
    /// Per-row index into `exemplar_indices`.
    pub labels: Vec<usize>,
    pub converged: bool,
    pub iterations_run: usize,
}

/// `s(i,k) = -||x_i - x_k||^2` off the diagonal; the diagonal holds the
/// preference.
pub fn similarity_matrix(matrix: &DataMatrix, preference: Preference) -> Result<SquareMatrix> {
    matrix.ensure_finite()?;
    let n = matrix.n_rows();
    let mut s = SquareMatrix::zeros(n);
    let mut off = Vec::with_capacity(n * n.saturating_sub(1));
    for i in 0..n {
        for k in 0..n {
            if i != k {
                let v = -squared_euclidean(matrix.row(i), matrix.row(k));
                s[(i, k)] = v;
                off.push(v);
            }
        }
    }
    let pref = match preference {
        Preference::Value(p) => p,
        Preference::Median if off.is_empty() => 0.0,
        Preference::Median => {
            off.sort_by(f64::total_cmp);
            off[(off.len() - 1) / 2]
        }
    };
    for k in 0..n {
        s[(k, k)] = pref;
    }
    Ok(s)
}

fn same_size(a: &SquareMatrix, b: &SquareMatrix) -> Result<()> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch { expected: a.n, found: b.n });
    }
    Ok(())
}

fn damp(prev: f64, raw: f64, damping: f64) -> f64 {
    damping * prev + (1.0 - damping) * raw
}

pub fn update_responsibility(
    s: &SquareMatrix,
    a: &SquareMatrix,
    r_prev: &SquareMatrix,
    damping: f64,
) -> Result<SquareMatrix> {
    same_size(s, a)?;
    same_size(s, r_prev)?;
    let n = s.n;
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, found: n });
    }
    let mut r = SquareMatrix::zeros(n);
    for i in 0..n {
        // largest and second largest of a(i,·) + s(i,·)
        let (mut first, mut second, mut arg) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0);
        for k in 0..n {
            let v = a[(i, k)] + s[(i, k)];
            if v > first {
                second = first;
                first = v;
                arg = k;
            } else if v > second {
                second = v;
            }
        }
        for k in 0..n {
            let competitor = if k == arg { second } else { first };
            r[(i, k)] = damp(r_prev[(i, k)], s[(i, k)] - competitor, damping);
        }
    }
    Ok(r)
}

pub fn update_availability(r: &SquareMatrix, a_prev: &SquareMatrix, damping: f64) -> Result<SquareMatrix> {
    same_size(r, a_prev)?;
    let n = r.n;
    let mut a = SquareMatrix::zeros(n);
    for k in 0..n {
        let positive: f64 = (0..n).filter(|&i| i != k).map(|i| r[(i, k)].max(0.0)).sum();
        for i in 0..n {
            let raw = if i == k { positive } else { (r[(k, k)] + positive - r[(i, k)].max(0.0)).min(0.0) };
            a[(i, k)] = damp(a_prev[(i, k)], raw, damping);
        }
    }
    Ok(a)
}

pub fn criterion(r: &SquareMatrix, a: &SquareMatrix) -> Result<SquareMatrix> {
    same_size(r, a)?;
    Ok(SquareMatrix { n: r.n, data: r.data.iter().zip(&a.data).map(|(x, y)| x + y).collect() })
}

fn exemplars_of(c: &SquareMatrix) -> Vec<usize> {
    (0..c.n).filter(|&k| c[(k, k)] > 0.0).collect()
}

impl APState {
    pub fn new(similarity: SquareMatrix) -> Self {
        let n = similarity.n;
        Self { similarity, responsibility: SquareMatrix::zeros(n), availability: SquareMatrix::zeros(n), iteration: 0 }
    }

    /// One damped responsibility + availability round.
    pub fn step(&mut self, damping: f64) -> Result<()> {
        self.responsibility =
            update_responsibility(&self.similarity, &self.availability, &self.responsibility, damping)?;
        self.availability = update_availability(&self.responsibility, &self.availability, damping)?;
        self.iteration += 1;
        Ok(())
    }

    pub fn criterion(&self) -> SquareMatrix {
        criterion(&self.responsibility, &self.availability).expect("state matrices share a size")
    }
}

/// Runs message passing and labels every point with its exemplar.
///
/// Exemplars are the points with `c(k,k) > 0`. Iteration converges once a
/// non-empty exemplar set has stayed the same for `convergence_window`
/// consecutive iterations. If no point qualifies when iteration stops, the
/// point with the largest `c(k,k)` is used.
///
/// Exemplars label themselves; every other point joins the exemplar with
/// the highest similarity (lowest index on ties), which is the same rule
/// [`crate::model_store::predict`] applies to unseen rows.
pub fn fit(matrix: &DataMatrix, config: &APConfig) -> Result<APResult> {
    config.validate()?;
    let n = matrix.n_rows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let s = similarity_matrix(matrix, config.preference)?;
    if n == 1 {
        return Ok(APResult { exemplar_indices: vec![0], labels: vec![0], converged: true, iterations_run: 0 });
    }

    let mut state = APState::new(s);
    let mut last: Vec<usize> = Vec::new();
    let mut stable = 0usize;
    let mut converged = false;
    while state.iteration < config.max_iter {
        state.step(config.damping)?;
        let current = exemplars_of(&state.criterion());
        if current == last {
            stable += 1;
        } else {
            stable = 1;
            last = current;
        }
        if !last.is_empty() && stable >= config.convergence_window {
            converged = true;
            break;
        }
    }

    let c = state.criterion();
    let mut exemplars = exemplars_of(&c);
    if exemplars.is_empty() {
        let mut best = 0;
        for k in 1..n {
            if c[(k, k)] > c[(best, best)] {
                best = k;
            }
        }
        exemplars.push(best);
    }
    let labels = (0..n)
        .map(|i| {
            if let Ok(own) = exemplars.binary_search(&i) {
                return own;
            }
            let s = &state.similarity;
            let mut best = 0;
            for (e, &k) in exemplars.iter().enumerate().skip(1) {
                if s[(i, k)] > s[(i, exemplars[best])] {
                    best = e;
                }
            }
            best
        })
        .collect();
    Ok(APResult { exemplar_indices: exemplars, labels, converged, iterations_run: state.iteration })
}
