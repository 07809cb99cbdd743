//! Similar / opposite country pairs.
//!
//! Every unordered pair of rows is scored with Pearson's r, a two-sided
//! t-test on r (df = n - 2), and a level distance `||a - b|| / sqrt(d)`
//! measured on the standardized matrix. A pair is
//!
//! * SIMILAR when `r >= similar_r_min`, `p < alpha` and, in
//!   [`PairingMode::LevelAndTrend`], `level_distance <= level_distance_max`;
//! * OPPOSITE when `r <= opposite_r_max` and `p < alpha`;
//! * NEITHER otherwise.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize, Serializer};

use crate::dataset::DataMatrix;
use crate::distance::euclidean;
use crate::error::{Error, Result};
use crate::special::student_t_two_sided;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Similar,
    Opposite,
    Neither,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Similar => "SIMILAR",
            Verdict::Opposite => "OPPOSITE",
            Verdict::Neither => "NEITHER",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PairingMode {
    Trend,
    #[default]
    LevelAndTrend,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingConfig {
    pub similar_r_min: f64,
    pub opposite_r_max: f64,
    pub alpha: f64,
    /// RMS per-year gap between standardized series.
    pub level_distance_max: f64,
    pub mode: PairingMode,
}

impl Default for PairingConfig {
    fn default() -> Self {
        Self {
            similar_r_min: 0.9,
            opposite_r_max: -0.5,
            alpha: 0.05,
            level_distance_max: 0.5,
            mode: PairingMode::LevelAndTrend,
        }
    }
}

impl PairingConfig {
    pub fn validate(&self) -> Result<()> {
        let ordered =
            -1.0 <= self.opposite_r_max && self.opposite_r_max < self.similar_r_min && self.similar_r_min <= 1.0;
        if !ordered {
            return Err(Error::InvalidConfig(format!(
                "need -1 <= opposite_r_max ({}) < similar_r_min ({}) <= 1",
                self.opposite_r_max, self.similar_r_min
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.level_distance_max.is_nan() || self.level_distance_max < 0.0 {
            return Err(Error::InvalidConfig("level_distance_max must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationTest {
    pub t_stat: f64,
    pub p_value: f64,
    /// `|r| = 1`: the statistic is infinite and `p_value` is reported as 0.
    pub perfect: bool,
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_some(v)
    } else {
        s.serialize_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairScore {
    pub country_a: String,
    pub country_b: String,
    pub r: f64,
    /// Infinite for perfect correlation; serialized as `null` in JSON.
    #[serde(serialize_with = "finite_or_null")]
    pub t_stat: f64,
    pub p_value: f64,
    pub level_distance: f64,
    pub verdict: Verdict,
    pub perfect: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PairReport {
    pub similar: Vec<PairScore>,
    pub opposite: Vec<PairScore>,
    /// Rows left out because they are constant.
    pub skipped: Vec<String>,
}

/// Sample Pearson correlation, clamped to `[-1, 1]`.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(Error::TooShort(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantSeries);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Two-sided significance of a correlation coefficient over `n` observations.
pub fn correlation_test(r: f64, n: usize) -> Result<CorrelationTest> {
    if n < 3 {
        return Err(Error::TooShort(n));
    }
    if r.is_nan() || r.abs() > 1.0 {
        return Err(Error::InvalidCorrelation(r));
    }
    if r.abs() == 1.0 {
        return Ok(CorrelationTest { t_stat: r * f64::INFINITY, p_value: 0.0, perfect: true });
    }
    let df = (n - 2) as f64;
    let t_stat = r * df.sqrt() / (1.0 - r * r).sqrt();
    Ok(CorrelationTest { t_stat, p_value: student_t_two_sided(t_stat, df), perfect: false })
}

fn is_constant(row: &[f64]) -> bool {
    row.iter().all(|&x| x == row[0])
}

/// Scores every unordered pair of non-constant rows, NEITHER included.
/// Returns the scores (canonically ordered) and the labels of skipped rows.
pub fn score_pairs(matrix: &DataMatrix, config: &PairingConfig) -> Result<(Vec<PairScore>, Vec<String>)> {
    config.validate()?;
    let (n, d) = (matrix.n_rows(), matrix.n_cols());
    if n < 2 {
        return Err(Error::TooFewCountries(n));
    }
    if d < 3 {
        return Err(Error::TooFewYears(d));
    }
    matrix.ensure_finite()?;

    let labels = matrix.labels();
    let constant: Vec<bool> = matrix.rows().map(is_constant).collect();
    let skipped = (0..n).filter(|&i| constant[i]).map(|i| labels[i].clone()).collect();

    let mut scores = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            if constant[i] || constant[j] {
                continue;
            }
            let (a, b) = if labels[i] <= labels[j] { (i, j) } else { (j, i) };
            let (ra, rb) = (matrix.row(a), matrix.row(b));
            let r = pearson_r(ra, rb)?;
            let test = correlation_test(r, d)?;
            let level_distance = euclidean(ra, rb) / (d as f64).sqrt();
            let significant = test.p_value < config.alpha;
            let verdict = if r >= config.similar_r_min
                && significant
                && (config.mode == PairingMode::Trend || level_distance <= config.level_distance_max)
            {
                Verdict::Similar
            } else if r <= config.opposite_r_max && significant {
                Verdict::Opposite
            } else {
                Verdict::Neither
            };
            scores.push(PairScore {
                country_a: labels[a].clone(),
                country_b: labels[b].clone(),
                r,
                t_stat: test.t_stat,
                p_value: test.p_value,
                level_distance,
                verdict,
                perfect: test.perfect,
            });
        }
    }
    scores.sort_by(canonical_order);
    Ok((scores, skipped))
}

fn verdict_rank(v: Verdict) -> u8 {
    match v {
        Verdict::Similar => 0,
        Verdict::Opposite => 1,
        Verdict::Neither => 2,
    }
}

/// SIMILAR by descending r, then OPPOSITE by ascending r, then NEITHER;
/// remaining ties by country names.
fn canonical_order(x: &PairScore, y: &PairScore) -> Ordering {
    verdict_rank(x.verdict)
        .cmp(&verdict_rank(y.verdict))
        .then_with(|| match x.verdict {
            Verdict::Similar => y.r.total_cmp(&x.r),
            _ => x.r.total_cmp(&y.r),
        })
        .then_with(|| (&x.country_a, &x.country_b).cmp(&(&y.country_a, &y.country_b)))
}

/// SIMILAR and OPPOSITE pairs of a preprocessed (imputed, standardized)
/// matrix; NEITHER pairs are dropped.
pub fn find_pairs(matrix: &DataMatrix, config: &PairingConfig) -> Result<PairReport> {
    let (scores, skipped) = score_pairs(matrix, config)?;
    let mut report = PairReport { skipped, ..PairReport::default() };
    for s in scores {
        match s.verdict {
            Verdict::Similar => report.similar.push(s),
            Verdict::Opposite => report.opposite.push(s),
            Verdict::Neither => {}
        }
    }
    Ok(report)
}

/// `country_a,country_b,r,t_stat,p_value,level_distance,verdict`
pub fn pairs_to_csv(pairs: &[PairScore]) -> String {
    let mut out = String::from("country_a,country_b,r,t_stat,p_value,level_distance,verdict\n");
    for p in pairs {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.country_a,
            p.country_b,
            p.r,
            p.t_stat,
            p.p_value,
            p.level_distance,
            p.verdict.as_str()
        ));
    }
    out
}
