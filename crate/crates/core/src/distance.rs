//! Euclidean helpers shared by the clustering modules.

#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

/// Index of the nearest reference point; ties go to the lowest index.
pub fn nearest(point: &[f64], references: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, r) in references.iter().enumerate() {
        let d = squared_euclidean(point, r);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}
