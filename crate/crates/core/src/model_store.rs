//! Persisted cluster models and the prediction flow for unseen data.
//!
//! A model file is a JSON document with a fixed field order:
//!
//! ```text
//! schema_version, method, k, year_start, year_end, impute_strategy,
//! scaler {kind, params}, reference_points, seed, library_version, created_at
//! ```
//!
//! Reals are written in shortest round-trip form and read back bit-exactly.
//! Prediction re-applies the stored imputation and scaler (never refit) and
//! labels each row with its nearest reference point.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{to_matrix, DataMatrix, Dataset};
use crate::distance::nearest;
use crate::error::{Error, Result};
use crate::preprocess::{apply_scaler, impute, FittedScaler, ImputeStrategy};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    Kmeans,
    Hier,
    Ap,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Kmeans => "kmeans",
            Method::Hier => "hier",
            Method::Ap => "ap",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kmeans" => Ok(Method::Kmeans),
            "hier" => Ok(Method::Hier),
            "ap" => Ok(Method::Ap),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterModel {
    pub schema_version: u64,
    pub method: Method,
    pub k: usize,
    pub year_start: i32,
    pub year_end: i32,
    pub impute_strategy: ImputeStrategy,
    pub scaler: FittedScaler,
    /// Row-major k×d points in scaled space: centroids, exemplar rows, or
    /// per-cluster means of a dendrogram cut.
    pub reference_points: Vec<Vec<f64>>,
    pub seed: Option<u64>,
    pub library_version: String,
    pub created_at: String,
}

impl ClusterModel {
    pub fn span(&self) -> usize {
        (self.year_end - self.year_start + 1).max(0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersionMismatch { found: self.schema_version, expected: SCHEMA_VERSION });
        }
        let bad = |msg: String| Err(Error::InvariantViolation(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.reference_points.len() != self.k {
            return bad(format!("k = {} but {} reference points", self.k, self.reference_points.len()));
        }
        if self.year_end <= self.year_start {
            return bad(format!("year range {}..={} is too short", self.year_start, self.year_end));
        }
        let d = self.span();
        if self.scaler.dims() != d {
            return bad(format!("scaler has {} columns, year span is {d}", self.scaler.dims()));
        }
        for (i, p) in self.reference_points.iter().enumerate() {
            if p.len() != d {
                return bad(format!("reference point {i} has {} columns, expected {d}", p.len()));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return bad(format!("reference point {i} is not finite"));
            }
        }
        self.scaler.validate()
    }

    /// Canonical document, newline-terminated.
    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::CorruptDocument(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::CorruptDocument(e.to_string()))?;
        match value.get("schema_version").and_then(serde_json::Value::as_u64) {
            Some(SCHEMA_VERSION) => {}
            Some(found) => return Err(Error::SchemaVersionMismatch { found, expected: SCHEMA_VERSION }),
            None => return Err(Error::CorruptDocument("missing or invalid `schema_version`".into())),
        }
        let model: ClusterModel = serde_json::from_value(value).map_err(|e| Error::CorruptDocument(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}

pub fn save(model: &ClusterModel, destination: &Path) -> Result<()> {
    std::fs::write(destination, model.to_json()?)?;
    Ok(())
}

pub fn load(source: &Path) -> Result<ClusterModel> {
    ClusterModel::from_json(&std::fs::read_to_string(source)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub countries: Vec<String>,
    pub labels: Vec<usize>,
}

impl Prediction {
    /// `country,cluster`
    pub fn to_csv(&self) -> String {
        labels_csv(&self.countries, &self.labels)
    }
}

pub fn labels_csv(countries: &[String], labels: &[usize]) -> String {
    let mut out = String::from("country,cluster\n");
    for (c, l) in countries.iter().zip(labels) {
        out.push_str(&format!("{c},{l}\n"));
    }
    out
}

/// Labels an already-assembled matrix whose columns match the model span.
pub fn predict_matrix(model: &ClusterModel, matrix: &DataMatrix) -> Result<Vec<usize>> {
    if matrix.n_cols() != model.span() {
        return Err(Error::DimensionMismatch { expected: model.span(), found: matrix.n_cols() });
    }
    let filled = impute(matrix, model.impute_strategy)?;
    let scaled = apply_scaler(&model.scaler, &filled)?;
    Ok(scaled.rows().map(|r| nearest(r, &model.reference_points)).collect())
}

pub fn predict(model: &ClusterModel, dataset: &Dataset) -> Result<Prediction> {
    if dataset.year_start() != model.year_start || dataset.year_end() != model.year_end {
        return Err(Error::YearRangeMismatch {
            expected_start: model.year_start,
            expected_end: model.year_end,
            found_start: dataset.year_start(),
            found_end: dataset.year_end(),
        });
    }
    let matrix = to_matrix(dataset)?;
    let labels = predict_matrix(model, &matrix)?;
    Ok(Prediction { countries: matrix.labels().to_vec(), labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::parse_wide_csv;
    use crate::preprocess::ScalerKind;

    fn model() -> ClusterModel {
        ClusterModel {
            schema_version: SCHEMA_VERSION,
            method: Method::Kmeans,
            k: 2,
            year_start: 1990,
            year_end: 1991,
            impute_strategy: ImputeStrategy::LinearInterpolate,
            scaler: FittedScaler { kind: ScalerKind::Standard, params: vec![(10.0, 2.0), (20.0, 0.1)] },
            reference_points: vec![vec![0.1, 0.2], vec![-1.0 / 3.0, 7.25]],
            seed: Some(42),
            library_version: "0.1.0".into(),
            created_at: "2026-01-01T00:00:00Z".into(),
        }
    }

    #[test]
    fn json_round_trip_and_field_order() {
        let m = model();
        let text = m.to_json().unwrap();
        assert_eq!(ClusterModel::from_json(&text).unwrap(), m);
        assert_eq!(text, m.to_json().unwrap());
        let keys: Vec<String> =
            serde_json::from_str::<serde_json::Value>(&text).unwrap().as_object().unwrap().keys().cloned().collect();
        assert_eq!(
            keys,
            [
                "schema_version",
                "method",
                "k",
                "year_start",
                "year_end",
                "impute_strategy",
                "scaler",
                "reference_points",
                "seed",
                "library_version",
                "created_at"
            ]
        );
        assert!(text.contains("\"method\": \"KMEANS\""));
        assert!(text.contains("\"impute_strategy\": \"LINEAR_INTERPOLATE\""));
    }

    #[test]
    fn load_rejections() {
        let mut m = model();
        m.k = 0;
        m.reference_points.clear();
        let text = serde_json::to_string(&m).unwrap();
        assert!(matches!(ClusterModel::from_json(&text), Err(Error::InvariantViolation(_))));

        let text = model().to_json().unwrap();
        assert!(matches!(ClusterModel::from_json(&text[..text.len() / 2]), Err(Error::CorruptDocument(_))));
        let v2 = text.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(matches!(ClusterModel::from_json(&v2), Err(Error::SchemaVersionMismatch { found: 2, .. })));
    }

    #[test]
    fn save_to_unwritable_destination() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("model.json");
        assert!(matches!(save(&model(), &path), Err(Error::Io(_))));
    }

    #[test]
    fn predict_uses_stored_transform() {
        let m = model();
        // raw (10.2, 20.02) scales to (0.1, 0.2) = reference point 0
        let ds = parse_wide_csv("country,1990,1991\nA,10.2,20.02\nB,9.3,20.725\n").unwrap();
        let p = predict(&m, &ds).unwrap();
        assert_eq!(p.labels, vec![0, 1]);
        assert_eq!(p.to_csv(), "country,cluster\nA,0\nB,1\n");

        let shifted = parse_wide_csv("country,1991,1992\nA,1,2\n").unwrap();
        assert!(matches!(predict(&m, &shifted), Err(Error::YearRangeMismatch { .. })));
    }
}
