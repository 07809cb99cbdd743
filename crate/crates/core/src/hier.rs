//! Agglomerative hierarchical clustering.
//!
//! Clusters are merged bottom-up using the Lance–Williams update, keeping a
//! full n×n table of inter-cluster distances. Node ids follow the usual
//! convention: leaves are `0..n`, the j-th merge creates node `n + j`.
//!
//! Ward linkage runs on squared Euclidean distances; the distance recorded in
//! the dendrogram is `sqrt(2 * ΔSSE)`, which equals the plain Euclidean
//! distance when two singletons merge.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::DataMatrix;
use crate::distance::{euclidean, squared_euclidean};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Linkage {
    Single,
    Complete,
    #[default]
    Average,
    Ward,
}

impl Linkage {
    pub const ALL: [Linkage; 4] = [Linkage::Single, Linkage::Complete, Linkage::Average, Linkage::Ward];
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
            Linkage::Ward => "ward",
        })
    }
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            "ward" => Ok(Linkage::Ward),
            other => Err(Error::InvalidConfig(format!("unknown linkage `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    leaves: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn leaves(&self) -> usize {
        self.leaves
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// `left,right,distance,size` in merge order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("left,right,distance,size\n");
        for m in &self.merges {
            out.push_str(&format!("{},{},{},{}\n", m.left, m.right, m.distance, m.size));
        }
        out
    }
}

pub fn agglomerate(matrix: &DataMatrix, linkage: Linkage) -> Result<Dendrogram> {
    let n = matrix.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, found: n });
    }
    matrix.ensure_finite()?;

    // dist[a * n + b] between the clusters currently held in slots a and b
    let mut dist = vec![0.0; n * n];
    for a in 0..n {
        for b in (a + 1)..n {
            let d = match linkage {
                Linkage::Ward => squared_euclidean(matrix.row(a), matrix.row(b)),
                _ => euclidean(matrix.row(a), matrix.row(b)),
            };
            dist[a * n + b] = d;
            dist[b * n + a] = d;
        }
    }
    let mut node = (0..n).collect::<Vec<usize>>();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        // closest pair, ties broken on (min node id, max node id)
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for a in (0..n).filter(|&a| active[a]) {
            for b in ((a + 1)..n).filter(|&b| active[b]) {
                let d = dist[a * n + b];
                let key = (node[a].min(node[b]), node[a].max(node[b]));
                let better = match best {
                    None => true,
                    Some((bd, bkey, _, _)) => d < bd || (d == bd && key < bkey),
                };
                if better {
                    best = Some((d, key, a, b));
                }
            }
        }
        let (d, (left, right), a, b) = best.expect("two active clusters remain");
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for c in (0..n).filter(|&c| active[c] && c != a && c != b) {
            let (dac, dbc) = (dist[a * n + c], dist[b * n + c]);
            let updated = match linkage {
                Linkage::Single => dac.min(dbc),
                Linkage::Complete => dac.max(dbc),
                Linkage::Average => (na * dac + nb * dbc) / (na + nb),
                Linkage::Ward => {
                    let nc = size[c] as f64;
                    ((na + nc) * dac + (nb + nc) * dbc - nc * d) / (na + nb + nc)
                }
            };
            dist[a * n + c] = updated;
            dist[c * n + a] = updated;
        }
        active[b] = false;
        size[a] += size[b];
        node[a] = n + step;
        merges.push(Merge {
            left,
            right,
            distance: match linkage {
                Linkage::Ward => d.max(0.0).sqrt(),
                _ => d,
            },
            size: size[a],
        });
    }
    Ok(Dendrogram { leaves: n, merges })
}

/// Flat labels from the first `n - k` merges. Components are numbered in
/// order of their smallest leaf.
pub fn cut(dendrogram: &Dendrogram, k: usize) -> Result<Vec<usize>> {
    let n = dendrogram.leaves;
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    // parent pointers over leaves + internal nodes, union by merge order
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (j, m) in dendrogram.merges.iter().take(n - k).enumerate() {
        let id = n + j;
        let (l, r) = (root(&mut parent, m.left), root(&mut parent, m.right));
        parent[l] = id;
        parent[r] = id;
    }
    let mut labels = vec![usize::MAX; n];
    let mut roots: Vec<usize> = Vec::with_capacity(k);
    for (leaf, slot) in labels.iter_mut().enumerate() {
        let r = root(&mut parent, leaf);
        let label = match roots.iter().position(|&x| x == r) {
            Some(p) => p,
            None => {
                roots.push(r);
                roots.len() - 1
            }
        };
        *slot = label;
    }
    Ok(labels)
}
