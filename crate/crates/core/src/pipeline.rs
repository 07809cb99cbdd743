//! Training flow shared by the CLI and the C bindings: preprocess a dataset,
//! fit one clustering method, and package the result as a [`ClusterModel`].

use crate::affinity::{self, APConfig, APResult};
use crate::dataset::{to_matrix, DataMatrix, Dataset};
use crate::error::{Error, Result};
use crate::hier::{self, Dendrogram, Linkage};
use crate::kmeans::{self, KMeansModel};
use crate::model_store::{ClusterModel, Method, SCHEMA_VERSION};
use crate::preprocess::{preprocess, FittedScaler, ImputeStrategy, ScalerKind};

#[derive(Debug, Clone, PartialEq)]
pub enum MethodConfig {
    KMeans { k: usize, seed: u64, restarts: usize, max_iter: usize, tol: f64 },
    Hier { k: usize, linkage: Linkage },
    Ap(APConfig),
}

impl MethodConfig {
    pub fn method(&self) -> Method {
        match self {
            MethodConfig::KMeans { .. } => Method::Kmeans,
            MethodConfig::Hier { .. } => Method::Hier,
            MethodConfig::Ap(_) => Method::Ap,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub impute: ImputeStrategy,
    pub scale: ScalerKind,
    pub method: MethodConfig,
}

/// Everything a training run produces.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ClusterModel,
    pub labels: Vec<usize>,
    /// Imputed and scaled training matrix.
    pub matrix: DataMatrix,
    pub scaler: FittedScaler,
    pub kmeans: Option<KMeansModel>,
    pub dendrogram: Option<Dendrogram>,
    pub affinity: Option<APResult>,
}

fn cluster_means(matrix: &DataMatrix, labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; matrix.n_cols()]; k];
    let mut counts = vec![0usize; k];
    for (row, &l) in matrix.rows().zip(labels) {
        counts[l] += 1;
        sums[l].iter_mut().zip(row).for_each(|(s, x)| *s += x);
    }
    for (s, c) in sums.iter_mut().zip(counts) {
        s.iter_mut().for_each(|v| *v /= c as f64);
    }
    sums
}

pub fn now_rfc3339() -> String {
    time::OffsetDateTime::now_utc().format(&time::format_description::well_known::Rfc3339).unwrap_or_default()
}

pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    let raw = to_matrix(dataset)?;
    let prep = preprocess(&raw, config.impute, config.scale)?;
    let matrix = prep.matrix;

    let mut outcome_km = None;
    let mut outcome_dendro = None;
    let mut outcome_ap = None;
    let (labels, reference_points, seed) = match &config.method {
        &MethodConfig::KMeans { k, seed, restarts, max_iter, tol } => {
            let m = kmeans::fit_best(&matrix, k, seed, restarts, max_iter, tol)?;
            let out = (m.labels.clone(), m.centroids.clone(), Some(seed));
            outcome_km = Some(m);
            out
        }
        &MethodConfig::Hier { k, linkage } => {
            if k == 0 || k > matrix.n_rows() {
                return Err(Error::KOutOfRange { k, n: matrix.n_rows() });
            }
            let labels = if matrix.n_rows() == 1 {
                vec![0]
            } else {
                let d = hier::agglomerate(&matrix, linkage)?;
                let labels = hier::cut(&d, k)?;
                outcome_dendro = Some(d);
                labels
            };
            let refs = cluster_means(&matrix, &labels, k);
            (labels, refs, None)
        }
        MethodConfig::Ap(ap) => {
            let res = affinity::fit(&matrix, ap)?;
            let refs = res.exemplar_indices.iter().map(|&i| matrix.row(i).to_vec()).collect();
            let out = (res.labels.clone(), refs, None);
            outcome_ap = Some(res);
            out
        }
    };

    let model = ClusterModel {
        schema_version: SCHEMA_VERSION,
        method: config.method.method(),
        k: reference_points.len(),
        year_start: dataset.year_start(),
        year_end: dataset.year_end(),
        impute_strategy: config.impute,
        scaler: prep.scaler.clone(),
        reference_points,
        seed,
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        created_at: now_rfc3339(),
    };
    model.validate()?;
    Ok(TrainOutcome {
        model,
        labels,
        matrix,
        scaler: prep.scaler,
        kmeans: outcome_km,
        dendrogram: outcome_dendro,
        affinity: outcome_ap,
    })
}
