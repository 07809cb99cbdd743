//! Acceptance criteria 1-10. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any criterion fails.

mod common;

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::{data_path, exhaustive_kmeans, matrix, naive_agglomerate, regime_dataset, rng, three_blobs, uniform_rows};
use mmr_cluster::affinity::{
    criterion, fit as ap_fit, update_availability, update_responsibility, APConfig, SquareMatrix,
};
use mmr_cluster::dataset::parse_wide_csv;
use mmr_cluster::hier::{agglomerate, Linkage};
use mmr_cluster::kmeans::{self, DEFAULT_MAX_ITER, DEFAULT_TOL};
use mmr_cluster::metrics::adjusted_rand_index;
use mmr_cluster::model_store::{predict, ClusterModel, Method, SCHEMA_VERSION};
use mmr_cluster::pairing::{correlation_test, find_pairs, PairingConfig, PairingMode};
use mmr_cluster::pipeline::{train, MethodConfig, TrainConfig};
use mmr_cluster::preprocess::{preprocess, FittedScaler, ImputeStrategy, ScalerKind};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn kmeans_optimality() -> Outcome {
    let start = Instant::now();
    let rows: Vec<Vec<f64>> = [0.0, 1.0, 2.0, 10.0, 11.0, 12.0].iter().map(|&x| vec![x]).collect();
    let model = kmeans::fit_best(&matrix(&rows), 2, 42, 8, DEFAULT_MAX_ITER, DEFAULT_TOL).map_err(|e| e.to_string())?;
    let oracle = exhaustive_kmeans(&rows, 2);
    let elapsed = start.elapsed().as_secs_f64();
    let mut centroids: Vec<f64> = model.centroids.iter().map(|c| c[0]).collect();
    centroids.sort_by(f64::total_cmp);
    ensure(oracle == 4.0, || format!("exhaustive oracle J = {oracle}"))?;
    ensure(model.inertia == 4.0, || format!("J = {}", model.inertia))?;
    ensure(centroids == [1.0, 11.0], || format!("centroids {centroids:?}"))?;
    ensure(elapsed < 1.0, || format!("took {elapsed:.3} s"))?;
    Ok(format!("J = 4 = exhaustive optimum, centroids {{1, 11}}, {:.1} ms", elapsed * 1e3))
}

fn kmeans_invariants() -> Outcome {
    let mut violations = Vec::new();
    for seed in 0..100u64 {
        let mut r = rng(seed);
        let n = r.gen_range(1..=50);
        let d = r.gen_range(1..=5);
        let k = r.gen_range(1..=n);
        let m = matrix(&uniform_rows(&mut r, n, d, 10.0));
        let model = kmeans::fit(&m, k, seed, DEFAULT_MAX_ITER, DEFAULT_TOL).map_err(|e| e.to_string())?;
        if model.inertia_trace.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12)) {
            violations.push(format!("seed {seed}: inertia increased"));
        }
        let all = kmeans::fit(&m, n, seed, DEFAULT_MAX_ITER, DEFAULT_TOL).map_err(|e| e.to_string())?;
        if all.inertia != 0.0 {
            violations.push(format!("seed {seed}: k = n gives J = {}", all.inertia));
        }
    }
    ensure(violations.is_empty(), || violations.join("; "))?;
    Ok("100 instances, 0 violations of J non-increase or k = n => J = 0".into())
}

fn hier_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    for linkage in Linkage::ALL {
        for seed in 0..50u64 {
            let mut r = rng(seed);
            let n = r.gen_range(2..=8);
            let d = r.gen_range(1..=4);
            let rows = uniform_rows(&mut r, n, d, 5.0);
            let fast = agglomerate(&matrix(&rows), linkage).map_err(|e| e.to_string())?;
            let slow = naive_agglomerate(&rows, linkage);
            for (f, s) in fast.merges().iter().zip(&slow) {
                ensure((f.left, f.right, f.size) == (s.left, s.right, s.size), || {
                    format!("{linkage} seed {seed}: merge order differs")
                })?;
                worst = worst.max((f.distance - s.distance).abs());
            }
        }
    }
    ensure(worst <= 1e-9, || format!("max distance error {worst:e}"))?;
    Ok(format!("4 linkages x 50 instances, identical merge order, max |Δd| = {worst:.1e}"))
}

fn ap_conformance() -> Outcome {
    let s = SquareMatrix::from_rows(&[vec![-1.0, -3.0], vec![-4.0, -2.0]]).unwrap();
    let zero = SquareMatrix::zeros(2);
    let r = update_responsibility(&s, &zero, &zero, 0.0).map_err(|e| e.to_string())?;
    let want_r = SquareMatrix::from_rows(&[vec![2.0, -2.0], vec![-2.0, 2.0]]).unwrap();
    ensure(r == want_r, || format!("responsibility {r:?}"))?;
    let a = update_availability(&r, &zero, 0.0).map_err(|e| e.to_string())?;
    ensure(a == zero, || format!("availability {a:?}"))?;
    let c = criterion(&r, &a).map_err(|e| e.to_string())?;
    ensure(c == want_r, || format!("criterion {c:?}"))?;
    // second round from the first-round messages, damped by one half
    let r2 = update_responsibility(&s, &a, &r, 0.5).map_err(|e| e.to_string())?;
    ensure(r2 == want_r, || format!("damped responsibility {r2:?}"))?;

    let (rows, truth) = three_blobs(0, 10);
    let res = ap_fit(&matrix(&rows), &APConfig::default()).map_err(|e| e.to_string())?;
    let ari = adjusted_rand_index(&truth, &res.labels).map_err(|e| e.to_string())?;
    ensure(res.exemplar_indices.len() == 3, || format!("{} exemplars", res.exemplar_indices.len()))?;
    ensure(ari == 1.0, || format!("ARI {ari}"))?;
    ensure(res.converged && res.iterations_run <= 200, || format!("{} iterations", res.iterations_run))?;
    Ok(format!("2x2 messages exact; 3 blobs -> 3 exemplars, ARI = 1, {} iterations", res.iterations_run))
}

fn default_config(method: MethodConfig) -> TrainConfig {
    TrainConfig { impute: ImputeStrategy::LinearInterpolate, scale: ScalerKind::Standard, method }
}

fn regime_recovery() -> Outcome {
    let (text, truth) = regime_dataset(2026);
    let ds = parse_wide_csv(&text).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for (name, method) in [
        ("kmeans", MethodConfig::KMeans { k: 3, seed: 42, restarts: 10, max_iter: DEFAULT_MAX_ITER, tol: DEFAULT_TOL }),
        ("hier", MethodConfig::Hier { k: 3, linkage: Linkage::Average }),
        ("ap", MethodConfig::Ap(APConfig::default())),
    ] {
        let out = train(&ds, &default_config(method)).map_err(|e| e.to_string())?;
        let ari = adjusted_rand_index(&truth, &out.labels).map_err(|e| e.to_string())?;
        ensure(ari >= 0.9, || format!("{name} ARI {ari:.4}"))?;
        parts.push(format!("{name} {ari:.3}"));
    }
    Ok(format!("ARI: {}", parts.join(", ")))
}

fn pvalue_accuracy() -> Outcome {
    // scipy.stats.t.sf two-sided, computed before the implementation
    let oracle = [
        (0.5, 26, 0.009293697430393882),
        (0.3, 26, 0.13648283179242582),
        (0.7, 10, 0.024206343749999977),
        (0.0, 26, 1.0),
    ];
    let mut worst: f64 = 0.0;
    for (r, n, p) in oracle {
        let got = correlation_test(r, n).map_err(|e| e.to_string())?.p_value;
        worst = worst.max((got - p).abs());
    }
    ensure(worst < 1e-3, || format!("max |Δp| = {worst:e}"))?;
    let zero = correlation_test(0.0, 26).map_err(|e| e.to_string())?.p_value;
    ensure(zero == 1.0, || format!("r = 0 gives p = {zero}"))?;
    Ok(format!("max |Δp| = {worst:.1e}; r = 0 gives p = 1"))
}

fn pairing_determinism() -> Outcome {
    let text = fs::read_to_string(data_path("declining_rising.csv")).map_err(|e| e.to_string())?;
    let ds = parse_wide_csv(&text).map_err(|e| e.to_string())?;
    let raw = mmr_cluster::to_matrix(&ds).map_err(|e| e.to_string())?;
    let prep = preprocess(&raw, ImputeStrategy::LinearInterpolate, ScalerKind::Standard).map_err(|e| e.to_string())?;
    let report = find_pairs(&prep.matrix, &PairingConfig::default()).map_err(|e| e.to_string())?;
    ensure(report.similar.len() == 1 && report.opposite.len() == 4, || {
        format!("{} similar, {} opposite", report.similar.len(), report.opposite.len())
    })?;
    ensure(find_pairs(&prep.matrix, &PairingConfig::default()).unwrap() == report, || "not deterministic".into())?;

    for seed in 0..200u64 {
        let mut r = rng(seed);
        let n = r.gen_range(2..=8);
        let d = r.gen_range(3..=30);
        let mut rows = uniform_rows(&mut r, n, d, 3.0);
        // some exact duplicates and mirrors so perfect correlations occur
        if n >= 3 && seed % 3 == 0 {
            rows[1] = rows[0].clone();
            rows[2] = rows[0].iter().map(|x| -x).collect();
        }
        let similar_r_min = r.gen_range(-0.5..1.0);
        let config = PairingConfig {
            similar_r_min,
            opposite_r_max: r.gen_range(-1.0..similar_r_min),
            alpha: r.gen_range(0.001..0.5),
            level_distance_max: r.gen_range(0.0..3.0),
            mode: if seed % 2 == 0 { PairingMode::Trend } else { PairingMode::LevelAndTrend },
        };
        let rep = find_pairs(&matrix(&rows), &config).map_err(|e| format!("seed {seed}: {e}"))?;
        let sim: HashSet<(String, String)> =
            rep.similar.iter().map(|p| (p.country_a.clone(), p.country_b.clone())).collect();
        let overlap = rep.opposite.iter().filter(|p| sim.contains(&(p.country_a.clone(), p.country_b.clone()))).count();
        ensure(overlap == 0, || format!("seed {seed}: {overlap} pairs both SIMILAR and OPPOSITE"))?;
    }
    Ok("1 SIMILAR + 4 OPPOSITE; SIMILAR ∩ OPPOSITE = ∅ over 200 fuzzed inputs".into())
}

fn random_model(r: &mut rand_chacha::ChaCha8Rng, method: Method) -> ClusterModel {
    let k = r.gen_range(1..=6);
    let d = r.gen_range(2..=26);
    let start = r.gen_range(1960..2000);
    let real = |r: &mut rand_chacha::ChaCha8Rng| {
        let mag = 10f64.powi(r.gen_range(-12..8));
        r.gen_range(-1.0..1.0) * mag
    };
    let minmax = r.gen_bool(0.5);
    let params = (0..d)
        .map(|_| {
            let a = real(r);
            let w = real(r).abs();
            if minmax {
                (a, a + w)
            } else {
                (a, w)
            }
        })
        .collect();
    ClusterModel {
        schema_version: SCHEMA_VERSION,
        method,
        k,
        year_start: start,
        year_end: start + d - 1,
        impute_strategy: [ImputeStrategy::MeanColumn, ImputeStrategy::LinearInterpolate, ImputeStrategy::ForwardFill]
            [r.gen_range(0..3)],
        scaler: FittedScaler { kind: if minmax { ScalerKind::MinMax } else { ScalerKind::Standard }, params },
        reference_points: (0..k).map(|_| (0..d).map(|_| real(r)).collect()).collect(),
        seed: if method == Method::Kmeans { Some(r.gen()) } else { None },
        library_version: env!("CARGO_PKG_VERSION").into(),
        created_at: "2026-10-16T00:00:00Z".into(),
    }
}

fn model_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut r = rng(8);
    for method in [Method::Kmeans, Method::Hier, Method::Ap] {
        for i in 0..20 {
            let m = random_model(&mut r, method);
            let path = dir.path().join(format!("{method}-{i}.json"));
            mmr_cluster::model_store::save(&m, &path).map_err(|e| e.to_string())?;
            let back = mmr_cluster::model_store::load(&path).map_err(|e| e.to_string())?;
            let bits = |m: &ClusterModel| -> Vec<u64> {
                let mut v: Vec<u64> = m.scaler.params.iter().flat_map(|(a, b)| [a.to_bits(), b.to_bits()]).collect();
                v.extend(m.reference_points.iter().flatten().map(|x| x.to_bits()));
                v
            };
            ensure(back == m && bits(&back) == bits(&m), || format!("{method} model {i} changed on reload"))?;
        }
    }
    for seed in 0..5u64 {
        let (text, _) = regime_dataset(seed);
        let ds = parse_wide_csv(&text).map_err(|e| e.to_string())?;
        for method in [
            MethodConfig::KMeans { k: 3, seed, restarts: 4, max_iter: DEFAULT_MAX_ITER, tol: DEFAULT_TOL },
            MethodConfig::Ap(APConfig::default()),
        ] {
            let out = train(&ds, &default_config(method)).map_err(|e| e.to_string())?;
            let reloaded =
                ClusterModel::from_json(&out.model.to_json().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            let pred = predict(&reloaded, &ds).map_err(|e| e.to_string())?;
            ensure(pred.labels == out.labels, || format!("seed {seed} {}: predicted labels differ", out.model.method))?;
        }
    }
    Ok("60 models bit-exact; predict reproduces training labels for kmeans and ap".into())
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mmr-cluster")).args(args).output().map_err(|e| e.to_string())?;
    ensure(out.status.code() == Some(0), || {
        format!("`{}` exited {:?}: {}", args.join(" "), out.status.code(), String::from_utf8_lossy(&out.stderr).trim())
    })
}

fn dir_contents(dir: &Path) -> Result<Vec<(String, String)>, String> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let text = fs::read_to_string(&path).map_err(|e| e.to_string())?;
        let text = if name == "model.json" {
            text.lines().filter(|l| !l.contains("\"created_at\"")).collect::<Vec<_>>().join("\n")
        } else {
            text
        };
        files.push((name, text));
    }
    files.sort();
    Ok(files)
}

fn end_to_end_cli() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (text, _) = regime_dataset(31);
    let input = tmp.path().join("regimes.csv");
    fs::write(&input, &text).map_err(|e| e.to_string())?;
    let input_s = input.to_str().unwrap();
    let mut runs = Vec::new();
    for method in ["kmeans", "hier", "ap"] {
        let out = tmp.path().join(method);
        let mut args = vec!["cluster", "--input", input_s, "--method", method, "--out", out.to_str().unwrap()];
        if method != "ap" {
            args.extend(["--k", "3"]);
        }
        if method == "kmeans" {
            args.extend(["--elbow-max", "6"]);
        }
        run_cli(&args)?;
        let model = mmr_cluster::model_store::load(&out.join("model.json")).map_err(|e| format!("{method}: {e}"))?;
        let labels = fs::read_to_string(out.join("labels.csv")).map_err(|e| e.to_string())?;
        ensure(labels.starts_with("country,cluster\n") && labels.lines().count() == 21, || {
            format!("{method}: labels.csv")
        })?;
        for file in ["projection.csv", "silhouette.txt", "run_manifest.json"] {
            ensure(out.join(file).exists(), || format!("{method}: missing {file}"))?;
        }

        let pred = tmp.path().join(format!("{method}-predict"));
        run_cli(&[
            "predict",
            "--input",
            input_s,
            "--model",
            out.join("model.json").to_str().unwrap(),
            "--out",
            pred.to_str().unwrap(),
        ])?;
        let predicted = fs::read_to_string(pred.join("predicted_labels.csv")).map_err(|e| e.to_string())?;
        ensure(predicted.lines().count() == 21, || format!("{method}: predicted_labels.csv"))?;
        ensure(model.k >= 1, || format!("{method}: k = 0"))?;
        runs.push(out);
        runs.push(pred);
    }
    let pairs = tmp.path().join("pairs");
    run_cli(&["pair", "--input", input_s, "--out", pairs.to_str().unwrap()])?;
    for file in ["pairs_similar.csv", "pairs_opposite.csv"] {
        let csv = fs::read_to_string(pairs.join(file)).map_err(|e| e.to_string())?;
        ensure(csv.starts_with("country_a,country_b,r,t_stat,p_value,level_distance,verdict\n"), || {
            format!("{file} header")
        })?;
    }
    runs.push(pairs);

    for first in &runs {
        let again = first.with_extension("rerun");
        run_cli(&[
            "rerun",
            "--manifest",
            first.join("run_manifest.json").to_str().unwrap(),
            "--out",
            again.to_str().unwrap(),
        ])?;
        ensure(dir_contents(first)? == dir_contents(&again)?, || format!("{} differs on rerun", first.display()))?;
    }
    Ok(format!("cluster x3, predict x3, pair: exit 0; {} reruns byte-identical", runs.len()))
}

fn non_reproducibility_note() -> Outcome {
    let readme = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md");
    let text = fs::read_to_string(&readme).map_err(|e| format!("README.md: {e}"))?;
    let section = text
        .split("\n## ")
        .find(|s| s.starts_with("What is not reproduced"))
        .ok_or("README.md has no `What is not reproduced` section")?;
    for phrase in ["pair lists", "cluster plots", "criteria 1-9"] {
        ensure(section.contains(phrase), || format!("note does not mention `{phrase}`"))?;
    }
    Ok("README states which published results are not reproduced".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("k-means optimality", kmeans_optimality),
        ("k-means invariants", kmeans_invariants),
        ("hierarchical oracle equivalence", hier_oracle),
        ("affinity propagation conformance", ap_conformance),
        ("regime recovery", regime_recovery),
        ("p-value accuracy", pvalue_accuracy),
        ("pairing determinism and disjointness", pairing_determinism),
        ("model round-trip", model_round_trip),
        ("end-to-end CLI", end_to_end_cli),
        ("non-reproducibility note", non_reproducibility_note),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("AC{:<2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("AC{:<2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
