//! Cleaning chain: missing-value imputation, label encoding and per-column
//! feature scaling.
//!
//! Fitted parameters ([`FittedScaler`]) are kept so the prediction flow can
//! re-apply exactly the training transform to unseen data.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::DataMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ImputeStrategy {
    /// Missing cell takes the mean of the present values in its column.
    MeanColumn,
    /// Interior gaps are interpolated along the year axis; edges copy the
    /// nearest present value.
    #[default]
    LinearInterpolate,
    /// Nearest earlier present value in the row, else nearest later one.
    ForwardFill,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScalerKind {
    /// `(x - mean) / std` with the population standard deviation.
    #[default]
    Standard,
    /// `(x - min) / (max - min)`.
    MinMax,
}

/// Per-column scaling parameters. For [`ScalerKind::Standard`] each pair is
/// `(mean, std)`; for [`ScalerKind::MinMax`] it is `(min, max)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedScaler {
    pub kind: ScalerKind,
    pub params: Vec<(f64, f64)>,
}

impl FittedScaler {
    pub fn dims(&self) -> usize {
        self.params.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (j, &(a, b)) in self.params.iter().enumerate() {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::InvariantViolation(format!("scaler column {j} has non-finite parameters")));
            }
            let ok = match self.kind {
                ScalerKind::Standard => b >= 0.0,
                ScalerKind::MinMax => b >= a,
            };
            if !ok {
                return Err(Error::InvariantViolation(format!("scaler column {j} has invalid parameters ({a}, {b})")));
            }
        }
        Ok(())
    }
}

pub fn impute(matrix: &DataMatrix, strategy: ImputeStrategy) -> Result<DataMatrix> {
    let mut out = matrix.clone();
    if !matrix.has_missing() {
        return Ok(out);
    }
    let (n, d) = (matrix.n_rows(), matrix.n_cols());
    match strategy {
        ImputeStrategy::MeanColumn => {
            for j in 0..d {
                let present: Vec<f64> = (0..n).map(|i| matrix.get(i, j)).filter(|x| !x.is_nan()).collect();
                if present.is_empty() {
                    return Err(Error::AllMissingColumn(j));
                }
                let mean = present.iter().sum::<f64>() / present.len() as f64;
                for i in 0..n {
                    if matrix.is_missing(i, j) {
                        out.set(i, j, mean);
                    }
                }
            }
        }
        ImputeStrategy::LinearInterpolate | ImputeStrategy::ForwardFill => {
            for i in 0..n {
                let row = matrix.row(i);
                let present: Vec<usize> = (0..d).filter(|&j| !row[j].is_nan()).collect();
                if present.is_empty() {
                    return Err(Error::AllMissingRow(matrix.labels()[i].clone()));
                }
                for j in 0..d {
                    if !row[j].is_nan() {
                        continue;
                    }
                    // first present index after j, if any
                    let after = present.partition_point(|&p| p < j);
                    let next = present.get(after).copied();
                    let prev = after.checked_sub(1).map(|p| present[p]);
                    let value = match (strategy, prev, next) {
                        (ImputeStrategy::LinearInterpolate, Some(p), Some(q)) => {
                            let w = (j - p) as f64 / (q - p) as f64;
                            row[p] + w * (row[q] - row[p])
                        }
                        (_, Some(p), _) => row[p],
                        (_, None, Some(q)) => row[q],
                        (_, None, None) => unreachable!("row has a present value"),
                    };
                    out.set(i, j, value);
                }
            }
        }
    }
    Ok(out)
}

fn ensure_complete(matrix: &DataMatrix) -> Result<()> {
    if matrix.has_missing() {
        return Err(Error::MissingCellsPresent);
    }
    matrix.ensure_finite()
}

pub fn fit_scaler(matrix: &DataMatrix, kind: ScalerKind) -> Result<FittedScaler> {
    ensure_complete(matrix)?;
    let n = matrix.n_rows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let params = (0..matrix.n_cols())
        .map(|j| {
            let col = (0..n).map(|i| matrix.get(i, j));
            match kind {
                ScalerKind::Standard => {
                    let mean = col.clone().sum::<f64>() / n as f64;
                    let var = col.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
                    (mean, var.sqrt())
                }
                ScalerKind::MinMax => {
                    col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
                }
            }
        })
        .collect();
    Ok(FittedScaler { kind, params })
}

pub fn apply_scaler(scaler: &FittedScaler, matrix: &DataMatrix) -> Result<DataMatrix> {
    if matrix.n_cols() != scaler.dims() {
        return Err(Error::DimensionMismatch { expected: scaler.dims(), found: matrix.n_cols() });
    }
    ensure_complete(matrix)?;
    let mut out = matrix.clone();
    for i in 0..matrix.n_rows() {
        for (j, &(a, b)) in scaler.params.iter().enumerate() {
            let x = matrix.get(i, j);
            let scaled = match scaler.kind {
                ScalerKind::Standard if b == 0.0 => 0.0,
                ScalerKind::Standard => (x - a) / b,
                ScalerKind::MinMax if b == a => 0.0,
                ScalerKind::MinMax => (x - a) / (b - a),
            };
            out.set(i, j, scaled);
        }
    }
    Ok(out)
}

/// Inverse of [`apply_scaler`] for columns with non-zero spread; degenerate
/// columns map back to their constant.
pub fn invert_scaler(scaler: &FittedScaler, point: &[f64]) -> Vec<f64> {
    point
        .iter()
        .zip(&scaler.params)
        .map(|(&z, &(a, b))| match scaler.kind {
            ScalerKind::Standard => a + z * b,
            ScalerKind::MinMax => a + z * (b - a),
        })
        .collect()
}

/// Cells of a standardized matrix whose magnitude exceeds `threshold`.
/// Returned as `(row, column, value)`; nothing is modified.
pub fn outlier_cells(scaled: &DataMatrix, threshold: f64) -> Vec<(usize, usize, f64)> {
    let d = scaled.n_cols();
    scaled.cells().iter().enumerate().filter(|(_, z)| z.abs() > threshold).map(|(p, &z)| (p / d, p % d, z)).collect()
}

/// String labels to consecutive integer codes in first-occurrence order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelCodebook {
    labels: Vec<String>,
    codes: HashMap<String, usize>,
}

impl LabelCodebook {
    pub fn code(&self, label: &str) -> Option<usize> {
        self.codes.get(label).copied()
    }

    pub fn label(&self, code: usize) -> Option<&str> {
        self.labels.get(code).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

pub fn encode_labels<S: AsRef<str>>(labels: &[S]) -> Result<LabelCodebook> {
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut book = LabelCodebook { labels: Vec::new(), codes: HashMap::new() };
    for l in labels {
        let l = l.as_ref();
        if !book.codes.contains_key(l) {
            book.codes.insert(l.to_string(), book.labels.len());
            book.labels.push(l.to_string());
        }
    }
    Ok(book)
}

/// Output of [`preprocess`]: the model-ready matrix and the fitted scaler.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub matrix: DataMatrix,
    pub scaler: FittedScaler,
}

/// Default training chain: impute, then fit and apply the scaler.
pub fn preprocess(matrix: &DataMatrix, strategy: ImputeStrategy, kind: ScalerKind) -> Result<Preprocessed> {
    let filled = impute(matrix, strategy)?;
    let scaler = fit_scaler(&filled, kind)?;
    let matrix = apply_scaler(&scaler, &filled)?;
    Ok(Preprocessed { matrix, scaler })
}
