//! Command-line front end: `cluster`, `pair`, `predict` and `rerun`.
//!
//! Every command writes `run_manifest.json` next to its outputs. The manifest
//! holds the fully resolved configuration, so `rerun --manifest` repeats a
//! run without re-typing flags.
//!
//! Exit codes: 0 success, 1 data or pipeline error, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::affinity::{APConfig, Preference};
use crate::dataset::{parse_long_csv, parse_wide_csv, DataMatrix, Dataset};
use crate::error::Error;
use crate::hier::Linkage;
use crate::kmeans::{self, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::model_store::{self, labels_csv, Method};
use crate::pairing::{self, PairingConfig, PairingMode};
use crate::pipeline::{self, MethodConfig, TrainConfig};
use crate::preprocess::{outlier_cells, preprocess, ImputeStrategy, ScalerKind};
use crate::projection::pca_2d;

pub const MANIFEST_FILE: &str = "run_manifest.json";
const OUTLIER_Z: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Format {
    #[default]
    Wide,
    Long,
}

/// Accepts `linear-interpolate`, `linear_interpolate` or
/// `LINEAR_INTERPOLATE` for any enum serialized in screaming snake case.
fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    let key = s.trim().to_ascii_uppercase().replace('-', "_");
    serde_json::from_value(serde_json::Value::String(key)).map_err(|_| format!("unrecognized value `{s}`"))
}

fn parse_preference(s: &str) -> Result<Preference, String> {
    if s.eq_ignore_ascii_case("median") {
        return Ok(Preference::Median);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Preference::Value(v)),
        _ => Err(format!("expected `median` or a finite number, got `{s}`")),
    }
}

#[derive(Debug, Parser)]
#[command(name = "mmr-cluster", version, about = "Cluster and pair per-country mortality time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a clustering model and write labels, model and diagnostics.
    Cluster(ClusterArgs),
    /// List statistically similar and opposite country pairs.
    Pair(PairArgs),
    /// Label unseen data with a saved model.
    Predict(PredictArgs),
    /// Repeat the run recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_enum::<Format>, default_value = "wide")]
    format: Format,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PrepArgs {
    #[arg(long, value_parser = parse_enum::<ImputeStrategy>, default_value = "linear-interpolate")]
    impute: ImputeStrategy,
    #[arg(long, value_parser = parse_enum::<ScalerKind>, default_value = "standard")]
    scale: ScalerKind,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[command(flatten)]
    io: InputArgs,
    #[command(flatten)]
    prep: PrepArgs,
    #[arg(long, value_parser = parse_enum::<Method>)]
    method: Method,
    /// Number of clusters; required for kmeans and hier, rejected for ap.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_parser = parse_enum::<Linkage>, default_value = "average")]
    linkage: Linkage,
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
    /// `median` or a number.
    #[arg(long, value_parser = parse_preference, default_value = "median")]
    preference: Preference,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Also write elbow.csv with inertia for k = 1..=K.
    #[arg(long, value_name = "K")]
    elbow_max: Option<usize>,
}

#[derive(Debug, Args)]
struct PairArgs {
    #[command(flatten)]
    io: InputArgs,
    #[command(flatten)]
    prep: PrepArgs,
    #[arg(long, default_value_t = 0.9, allow_negative_numbers = true)]
    similar_r: f64,
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    opposite_r: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    level_max: f64,
    #[arg(long, value_parser = parse_enum::<PairingMode>, default_value = "level-and-trend")]
    mode: PairingMode,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[command(flatten)]
    io: InputArgs,
    #[arg(long)]
    model: PathBuf,
}

#[derive(Debug, Args)]
struct RerunArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub input: PathBuf,
    pub format: Format,
    pub impute: ImputeStrategy,
    pub scale: ScalerKind,
    pub method: Method,
    pub k: Option<usize>,
    pub linkage: Linkage,
    pub damping: f64,
    pub preference: Preference,
    pub ap_max_iter: usize,
    pub ap_convergence_window: usize,
    pub seed: u64,
    pub restarts: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    pub elbow_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub input: PathBuf,
    pub format: Format,
    pub impute: ImputeStrategy,
    pub scale: ScalerKind,
    pub thresholds: PairingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictConfig {
    pub input: PathBuf,
    pub format: Format,
    pub model: PathBuf,
}

/// Fully resolved configuration of one run. The output directory is not
/// part of it, so a rerun elsewhere produces an identical manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum RunConfig {
    Cluster(ClusterConfig),
    Pair(PairConfig),
    Predict(PredictConfig),
}

impl RunConfig {
    fn input(&self) -> &Path {
        match self {
            RunConfig::Cluster(c) => &c.input,
            RunConfig::Pair(c) => &c.input,
            RunConfig::Predict(c) => &c.input,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub config: RunConfig,
    pub input_sha256: String,
    pub outputs: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Pipeline(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Pipeline(Error::InvalidConfig(_)) => 2,
            CliError::Pipeline(_) => 1,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

impl ClusterArgs {
    fn resolve(self) -> CliResult<(ClusterConfig, PathBuf)> {
        match (self.method, self.k) {
            (Method::Kmeans | Method::Hier, None) => {
                return Err(CliError::Usage(format!("--k is required for --method {}", self.method)));
            }
            (Method::Ap, Some(_)) => {
                return Err(CliError::Usage("--k cannot be used with --method ap".into()));
            }
            (_, Some(0)) => return Err(CliError::Usage("--k must be at least 1".into())),
            _ => {}
        }
        if self.elbow_max == Some(0) {
            return Err(CliError::Usage("--elbow-max must be at least 1".into()));
        }
        let ap = APConfig::default();
        let config = ClusterConfig {
            input: self.io.input,
            format: self.io.format,
            impute: self.prep.impute,
            scale: self.prep.scale,
            method: self.method,
            k: self.k,
            linkage: self.linkage,
            damping: self.damping,
            preference: self.preference,
            ap_max_iter: ap.max_iter,
            ap_convergence_window: ap.convergence_window,
            seed: self.seed,
            restarts: self.restarts,
            kmeans_max_iter: DEFAULT_MAX_ITER,
            kmeans_tol: DEFAULT_TOL,
            elbow_max: self.elbow_max,
        };
        Ok((config, self.io.out))
    }
}

impl ClusterConfig {
    fn train_config(&self) -> CliResult<TrainConfig> {
        let need_k = || self.k.ok_or_else(|| CliError::Usage(format!("k is required for method {}", self.method)));
        let method = match self.method {
            Method::Kmeans => MethodConfig::KMeans {
                k: need_k()?,
                seed: self.seed,
                restarts: self.restarts,
                max_iter: self.kmeans_max_iter,
                tol: self.kmeans_tol,
            },
            Method::Hier => MethodConfig::Hier { k: need_k()?, linkage: self.linkage },
            Method::Ap => {
                if self.k.is_some() {
                    return Err(CliError::Usage("k cannot be set for method ap".into()));
                }
                let ap = APConfig {
                    damping: self.damping,
                    max_iter: self.ap_max_iter,
                    convergence_window: self.ap_convergence_window,
                    preference: self.preference,
                };
                ap.validate()?;
                MethodConfig::Ap(ap)
            }
        };
        Ok(TrainConfig { impute: self.impute, scale: self.scale, method })
    }
}

/// Collects output files and writes them to the output directory.
struct Outputs {
    dir: PathBuf,
    names: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(Error::from)?;
        Ok(Self { dir: dir.to_path_buf(), names: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        fs::write(self.dir.join(name), contents).map_err(Error::from)?;
        self.names.push(name.to_string());
        Ok(())
    }

    fn finish(self, config: RunConfig, input_sha256: String) -> CliResult<()> {
        let manifest = RunManifest { config, input_sha256, outputs: self.names };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::CorruptDocument(e.to_string()))?;
        text.push('\n');
        fs::write(self.dir.join(MANIFEST_FILE), text).map_err(Error::from)?;
        Ok(())
    }
}

fn read_input(path: &Path, format: Format) -> CliResult<(Dataset, String)> {
    let bytes = fs::read(path).map_err(Error::from)?;
    let sha = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::HeaderMalformed(format!("{} is not valid UTF-8", path.display())))?;
    let dataset = match format {
        Format::Wide => parse_wide_csv(&text)?,
        Format::Long => parse_long_csv(&text)?,
    };
    Ok((dataset, sha))
}

fn warn_outliers(matrix: &DataMatrix, scale: ScalerKind) {
    if scale != ScalerKind::Standard {
        return;
    }
    for (i, j, z) in outlier_cells(matrix, OUTLIER_Z) {
        eprintln!(
            "warning: {} {}: standardized value {z} exceeds {OUTLIER_Z} in magnitude",
            matrix.labels()[i],
            matrix.columns()[j]
        );
    }
}

fn run_cluster(config: &ClusterConfig, out: &Path) -> CliResult<String> {
    let train = config.train_config()?;
    let (dataset, sha) = read_input(&config.input, config.format)?;
    let outcome = pipeline::train(&dataset, &train)?;
    warn_outliers(&outcome.matrix, config.scale);

    let mut outputs = Outputs::new(out)?;
    outputs.write("labels.csv", &labels_csv(outcome.matrix.labels(), &outcome.labels))?;
    outputs.write("model.json", &outcome.model.to_json()?)?;
    if outcome.matrix.n_rows() >= 2 {
        let projection = pca_2d(&outcome.matrix)?;
        outputs.write("projection.csv", &projection.to_csv(&outcome.labels)?)?;
    }
    let silhouette = match kmeans::silhouette(&outcome.matrix, &outcome.labels) {
        Ok(s) => format!("{s}\n"),
        Err(Error::SingleCluster) => "NA\n".to_string(),
        Err(e) => return Err(e.into()),
    };
    outputs.write("silhouette.txt", &silhouette)?;
    if let Some(d) = &outcome.dendrogram {
        outputs.write("dendrogram.csv", &d.to_csv())?;
    }
    if let Some(k_max) = config.elbow_max {
        let k_max = k_max.min(outcome.matrix.n_rows());
        let scan = kmeans::elbow_scan(&outcome.matrix, 1, k_max, config.seed, config.restarts)?;
        let mut csv = String::from("k,inertia\n");
        for (k, j) in scan {
            csv.push_str(&format!("{k},{j}\n"));
        }
        outputs.write("elbow.csv", &csv)?;
    }
    if let Some(ap) = &outcome.affinity {
        if !ap.converged {
            eprintln!("warning: affinity propagation did not converge in {} iterations", ap.iterations_run);
        }
    }
    outputs.finish(RunConfig::Cluster(config.clone()), sha.clone())?;
    Ok(sha)
}

fn run_pair(config: &PairConfig, out: &Path) -> CliResult<String> {
    config.thresholds.validate()?;
    let (dataset, sha) = read_input(&config.input, config.format)?;
    let raw = crate::dataset::to_matrix(&dataset)?;
    if raw.n_rows() < 2 {
        return Err(Error::TooFewCountries(raw.n_rows()).into());
    }
    let prep = preprocess(&raw, config.impute, config.scale)?;
    warn_outliers(&prep.matrix, config.scale);
    let report = pairing::find_pairs(&prep.matrix, &config.thresholds)?;
    for name in &report.skipped {
        eprintln!("warning: {name} is constant after preprocessing and was left out of pairing");
    }

    let mut outputs = Outputs::new(out)?;
    outputs.write("pairs_similar.csv", &pairing::pairs_to_csv(&report.similar))?;
    outputs.write("pairs_opposite.csv", &pairing::pairs_to_csv(&report.opposite))?;
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| Error::CorruptDocument(e.to_string()))?;
    json.push('\n');
    outputs.write("pairs.json", &json)?;
    outputs.finish(RunConfig::Pair(config.clone()), sha.clone())?;
    Ok(sha)
}

fn run_predict(config: &PredictConfig, out: &Path) -> CliResult<String> {
    let model = model_store::load(&config.model)?;
    let (dataset, sha) = read_input(&config.input, config.format)?;
    let prediction = model_store::predict(&model, &dataset)?;
    let mut outputs = Outputs::new(out)?;
    outputs.write("predicted_labels.csv", &prediction.to_csv())?;
    outputs.finish(RunConfig::Predict(config.clone()), sha.clone())?;
    Ok(sha)
}

/// Executes a resolved configuration, writing outputs and the manifest into
/// `out`. Returns the SHA-256 of the input file.
pub fn execute(config: &RunConfig, out: &Path) -> CliResult<String> {
    match config {
        RunConfig::Cluster(c) => run_cluster(c, out),
        RunConfig::Pair(c) => run_pair(c, out),
        RunConfig::Predict(c) => run_predict(c, out),
    }
}

fn rerun(args: RerunArgs) -> CliResult<()> {
    let text = fs::read_to_string(&args.manifest).map_err(Error::from)?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| Error::CorruptDocument(format!("{}: {e}", args.manifest.display())))?;
    let input = manifest.config.input();
    let current = hex::encode(Sha256::digest(fs::read(input).map_err(Error::from)?));
    if current != manifest.input_sha256 {
        return Err(Error::InvariantViolation(format!(
            "{} has changed since the manifest was written",
            input.display()
        ))
        .into());
    }
    execute(&manifest.config, &args.out)?;
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Cluster(args) => {
            let (config, out) = args.resolve()?;
            execute(&RunConfig::Cluster(config), &out)?;
        }
        Command::Pair(args) => {
            let config = PairConfig {
                input: args.io.input,
                format: args.io.format,
                impute: args.prep.impute,
                scale: args.prep.scale,
                thresholds: PairingConfig {
                    similar_r_min: args.similar_r,
                    opposite_r_max: args.opposite_r,
                    alpha: args.alpha,
                    level_distance_max: args.level_max,
                    mode: args.mode,
                },
            };
            execute(&RunConfig::Pair(config), &args.io.out)?;
        }
        Command::Predict(args) => {
            let config = PredictConfig { input: args.io.input, format: args.io.format, model: args.model };
            execute(&RunConfig::Predict(config), &args.io.out)?;
        }
        Command::Rerun(args) => rerun(args)?,
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
