//! Reference implementations and data generators shared by the integration
//! tests. The oracles recompute everything from the defining equations and
//! share no code with the library.

#![allow(dead_code, clippy::needless_range_loop)]

use std::path::PathBuf;

use mmr_cluster::hier::Linkage;
use mmr_cluster::DataMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("data").join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_rows(rng: &mut ChaCha8Rng, n: usize, d: usize, half_width: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(-half_width..half_width)).collect()).collect()
}

pub fn matrix(rows: &[Vec<f64>]) -> DataMatrix {
    DataMatrix::from_rows(rows).unwrap()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Minimum inertia over every assignment of `rows` to `k` non-empty groups.
pub fn exhaustive_kmeans(rows: &[Vec<f64>], k: usize) -> f64 {
    let n = rows.len();
    let d = rows[0].len();
    let mut best = f64::INFINITY;
    let mut labels = vec![0usize; n];
    loop {
        let mut counts = vec![0usize; k];
        let mut sums = vec![vec![0.0; d]; k];
        for (r, &l) in rows.iter().zip(&labels) {
            counts[l] += 1;
            for j in 0..d {
                sums[l][j] += r[j];
            }
        }
        if counts.iter().all(|&c| c > 0) {
            let j: f64 = rows
                .iter()
                .zip(&labels)
                .map(|(r, &l)| {
                    let mean: Vec<f64> = sums[l].iter().map(|s| s / counts[l] as f64).collect();
                    sq_dist(r, &mean)
                })
                .sum();
            best = best.min(j);
        }
        // next labeling in base k
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            labels[pos] += 1;
            if labels[pos] < k {
                break;
            }
            labels[pos] = 0;
            pos += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleMerge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

fn linkage_distance(rows: &[Vec<f64>], a: &[usize], b: &[usize], linkage: Linkage) -> f64 {
    let pair = || a.iter().flat_map(|&i| b.iter().map(move |&j| sq_dist(&rows[i], &rows[j]).sqrt()));
    match linkage {
        Linkage::Single => pair().fold(f64::INFINITY, f64::min),
        Linkage::Complete => pair().fold(0.0, f64::max),
        Linkage::Average => pair().sum::<f64>() / (a.len() * b.len()) as f64,
        Linkage::Ward => {
            let d = rows[0].len();
            let centroid = |s: &[usize]| -> Vec<f64> {
                (0..d).map(|j| s.iter().map(|&i| rows[i][j]).sum::<f64>() / s.len() as f64).collect()
            };
            let (na, nb) = (a.len() as f64, b.len() as f64);
            let delta_sse = na * nb / (na + nb) * sq_dist(&centroid(a), &centroid(b));
            (2.0 * delta_sse).sqrt()
        }
    }
}

/// Agglomeration that recomputes every inter-cluster distance from the
/// member points at every step.
pub fn naive_agglomerate(rows: &[Vec<f64>], linkage: Linkage) -> Vec<OracleMerge> {
    let n = rows.len();
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut merges = Vec::new();
    for step in 0..n - 1 {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for x in 0..clusters.len() {
            for y in (x + 1)..clusters.len() {
                let d = linkage_distance(rows, &clusters[x].1, &clusters[y].1, linkage);
                let (ix, iy) = (clusters[x].0, clusters[y].0);
                let key = (ix.min(iy), ix.max(iy));
                let better = match best {
                    None => true,
                    Some((bd, bk, _, _)) => d < bd || (d == bd && key < bk),
                };
                if better {
                    best = Some((d, key, x, y));
                }
            }
        }
        let (d, (left, right), x, y) = best.unwrap();
        let (_, mut members) = clusters.remove(y);
        clusters[x].1.append(&mut members);
        clusters[x].0 = n + step;
        merges.push(OracleMerge { left, right, distance: d, size: clusters[x].1.len() });
    }
    merges
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleAp {
    pub exemplars: Vec<usize>,
    pub labels: Vec<usize>,
    pub iterations: usize,
}

/// Affinity propagation written directly from the message equations with
/// explicit loops for every max and sum.
pub fn reference_ap(rows: &[Vec<f64>], preference: f64, damping: f64, max_iter: usize, window: usize) -> OracleAp {
    let n = rows.len();
    let mut s = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            s[i][k] = if i == k { preference } else { -sq_dist(&rows[i], &rows[k]) };
        }
    }
    let mut r = vec![vec![0.0; n]; n];
    let mut a = vec![vec![0.0; n]; n];
    let mut last: Vec<usize> = Vec::new();
    let mut stable = 0;
    let mut iterations = 0;
    while iterations < max_iter {
        let mut r_new = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                let mut m = f64::NEG_INFINITY;
                for kp in 0..n {
                    if kp != k {
                        m = m.max(a[i][kp] + s[i][kp]);
                    }
                }
                r_new[i][k] = damping * r[i][k] + (1.0 - damping) * (s[i][k] - m);
            }
        }
        r = r_new;
        let mut a_new = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                let raw = if i == k {
                    let mut sum = 0.0;
                    for ip in 0..n {
                        if ip != k {
                            sum += r[ip][k].max(0.0);
                        }
                    }
                    sum
                } else {
                    let mut sum = 0.0;
                    for ip in 0..n {
                        if ip != i && ip != k {
                            sum += r[ip][k].max(0.0);
                        }
                    }
                    (r[k][k] + sum).min(0.0)
                };
                a_new[i][k] = damping * a[i][k] + (1.0 - damping) * raw;
            }
        }
        a = a_new;
        iterations += 1;
        let current: Vec<usize> = (0..n).filter(|&k| r[k][k] + a[k][k] > 0.0).collect();
        if current == last {
            stable += 1;
        } else {
            stable = 1;
            last = current;
        }
        if !last.is_empty() && stable >= window {
            break;
        }
    }
    let mut exemplars: Vec<usize> = (0..n).filter(|&k| r[k][k] + a[k][k] > 0.0).collect();
    if exemplars.is_empty() {
        let best = (0..n).fold(0, |b, k| if r[k][k] + a[k][k] > r[b][b] + a[b][b] { k } else { b });
        exemplars.push(best);
    }
    let labels = (0..n)
        .map(|i| match exemplars.iter().position(|&e| e == i) {
            Some(p) => p,
            None => (0..exemplars.len()).fold(0, |b, e| if s[i][exemplars[e]] > s[i][exemplars[b]] { e } else { b }),
        })
        .collect();
    OracleAp { exemplars, labels, iterations }
}

/// Three isotropic 2-D Gaussian blobs (σ = 0.1) with centres 10 apart, kept
/// well inside the positive quadrant so the rows are valid rates.
/// Returns rows and ground-truth labels.
pub fn three_blobs(seed: u64, per_blob: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let centres = [[20.0, 20.0], [30.0, 20.0], [25.0, 20.0 + 10.0 * 0.75f64.sqrt()]];
    let noise = Normal::new(0.0, 0.1).unwrap();
    let mut rng = rng(seed);
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for (c, centre) in centres.iter().enumerate() {
        for _ in 0..per_blob {
            rows.push(vec![centre[0] + noise.sample(&mut rng), centre[1] + noise.sample(&mut rng)]);
            truth.push(c);
        }
    }
    (rows, truth)
}

pub fn wide_csv(labels: &[String], year_start: i32, rows: &[Vec<f64>]) -> String {
    let d = rows[0].len() as i32;
    let mut out = String::from("country");
    for y in year_start..year_start + d {
        out.push_str(&format!(",{y}"));
    }
    out.push('\n');
    for (label, row) in labels.iter().zip(rows) {
        out.push_str(label);
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// Twenty countries over 1990..=2015 in three trajectory regimes:
/// low and flat, mid-level declining, high and rising. Multiplicative noise
/// of 5 %. Returns the wide CSV text and the regime of every row.
pub fn regime_dataset(seed: u64) -> (String, Vec<usize>) {
    let years = 26;
    let counts = [7usize, 7, 6];
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut rng = rng(seed);
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for (regime, &count) in counts.iter().enumerate() {
        for c in 0..count {
            let jitter: f64 = rng.gen_range(0.9..1.1);
            let row: Vec<f64> = (0..years)
                .map(|t| {
                    let t = t as f64 / (years - 1) as f64;
                    let level = match regime {
                        0 => 15.0,
                        1 => 400.0 - 250.0 * t,
                        _ => 600.0 + 400.0 * t,
                    };
                    (level * jitter * (1.0 + noise.sample(&mut rng))).max(0.0)
                })
                .collect();
            labels.push(format!("R{regime}-{c:02}"));
            rows.push(row);
            truth.push(regime);
        }
    }
    (wide_csv(&labels, 1990, &rows), truth)
}

/// Same number of distinct labels and one-to-one correspondence.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    use std::collections::HashMap;
    let mut ab = HashMap::new();
    let mut ba = HashMap::new();
    a.iter().zip(b).all(|(x, y)| *ab.entry(*x).or_insert(*y) == *y && *ba.entry(*y).or_insert(*x) == *x)
}
