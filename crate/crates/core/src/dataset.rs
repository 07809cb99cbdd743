//! Ingestion of per-country time series.
//!
//! Two CSV layouts are accepted:
//!
//! * wide: `country,<year>,<year>,...` with one row per country;
//! * long: `country,year,mmr` with one row per observation.
//!
//! Both produce a [`Dataset`], which [`to_matrix`] turns into the
//! [`DataMatrix`] every algorithm works on. Missing observations are carried
//! as `None` in a [`CountrySeries`] and as [`MISSING`] (NaN) in a matrix.

use std::collections::{HashMap, HashSet};

use csv::{ReaderBuilder, StringRecord, Trim};

use crate::error::{Error, Result};

/// Marker for an absent cell inside a [`DataMatrix`].
pub const MISSING: f64 = f64::NAN;

/// One country's yearly observations. Index `i` of `values` is year
/// `year_start + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountrySeries {
    name: String,
    year_start: i32,
    values: Vec<Option<f64>>,
}

impl CountrySeries {
    pub fn new(name: impl Into<String>, year_start: i32, values: Vec<Option<f64>>) -> Result<Self> {
        let name = name.into().trim().to_string();
        if name.is_empty() {
            return Err(Error::EmptyCountry(0));
        }
        if values.len() < 2 {
            return Err(Error::SeriesTooShort(values.len()));
        }
        for (i, v) in values.iter().enumerate() {
            if let Some(x) = v {
                if !x.is_finite() || *x < 0.0 {
                    return Err(Error::InvalidValue { line: 0, column: i + 1, value: *x });
                }
            }
        }
        Ok(Self { name, year_start, values })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn year_start(&self) -> i32 {
        self.year_start
    }

    pub fn year_end(&self) -> i32 {
        self.year_start + self.values.len() as i32 - 1
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }
}

/// A set of series sharing one contiguous year range.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    series: Vec<CountrySeries>,
    year_start: i32,
    year_end: i32,
}

impl Dataset {
    /// Builds a dataset over `year_start..=year_end`. An empty series list is
    /// allowed; [`to_matrix`] rejects it.
    pub fn new(year_start: i32, year_end: i32, series: Vec<CountrySeries>) -> Result<Self> {
        if year_end - year_start < 1 {
            return Err(Error::SeriesTooShort((year_end - year_start + 1).max(0) as usize));
        }
        let mut seen = HashSet::new();
        for s in &series {
            if s.year_start != year_start || s.year_end() != year_end {
                return Err(Error::HeaderMalformed(format!(
                    "series `{}` covers {}..={}, dataset covers {}..={}",
                    s.name,
                    s.year_start,
                    s.year_end(),
                    year_start,
                    year_end
                )));
            }
            if !seen.insert(s.name.as_str()) {
                return Err(Error::DuplicateCountry(s.name.clone()));
            }
        }
        Ok(Self { series, year_start, year_end })
    }

    pub fn series(&self) -> &[CountrySeries] {
        &self.series
    }

    pub fn year_start(&self) -> i32 {
        self.year_start
    }

    pub fn year_end(&self) -> i32 {
        self.year_end
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.year_start..=self.year_end
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }
}

/// Dense row-major matrix: rows are countries, columns are years.
///
/// Cells may hold [`MISSING`] until imputation. Algorithms call
/// [`DataMatrix::ensure_finite`] before touching the numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    labels: Vec<String>,
    columns: Vec<i32>,
    cells: Vec<f64>,
}

impl DataMatrix {
    pub fn new(labels: Vec<String>, columns: Vec<i32>, cells: Vec<f64>) -> Result<Self> {
        let expected = labels.len() * columns.len();
        if cells.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: cells.len() });
        }
        Ok(Self { labels, columns, cells })
    }

    /// Matrix from plain rows with generated labels `r0, r1, ...` and
    /// columns `0..d`. Handy for tests and for callers without year labels.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut cells = Vec::with_capacity(rows.len() * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: row.len() });
            }
            cells.extend_from_slice(row);
        }
        let labels = (0..rows.len()).map(|i| format!("r{i}")).collect();
        let columns = (0..d as i32).collect();
        Self::new(labels, columns, cells)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn columns(&self) -> &[i32] {
        &self.columns
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.cells[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics; a zero-column matrix still has n empty rows
        let d = self.n_cols();
        (0..self.n_rows()).map(move |i| &self.cells[i * d..(i + 1) * d])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.n_cols() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let d = self.n_cols();
        self.cells[i * d + j] = value;
    }

    pub fn is_missing(&self, i: usize, j: usize) -> bool {
        self.get(i, j).is_nan()
    }

    pub fn has_missing(&self) -> bool {
        self.cells.iter().any(|c| c.is_nan())
    }

    /// Fails with the first non-finite cell in row-major order.
    pub fn ensure_finite(&self) -> Result<()> {
        match self.cells.iter().position(|c| !c.is_finite()) {
            None => Ok(()),
            Some(p) => {
                let d = self.n_cols().max(1);
                Err(Error::NonFiniteCell { row: p / d, col: p % d })
            }
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Keeps only the rows whose index is listed, in the order given.
    pub fn select_rows(&self, indices: &[usize]) -> DataMatrix {
        let mut cells = Vec::with_capacity(indices.len() * self.n_cols());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            cells.extend_from_slice(self.row(i));
            labels.push(self.labels[i].clone());
        }
        DataMatrix { labels, columns: self.columns.clone(), cells }
    }
}

fn is_missing_token(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("NA")
}

/// Decimal or scientific notation only; rejects `inf`, `nan` and friends that
/// `f64::from_str` would otherwise accept.
fn parse_number(cell: &str) -> Option<f64> {
    let plain = cell.bytes().all(|b| b.is_ascii_digit() || matches!(b, b'+' | b'-' | b'.' | b'e' | b'E'));
    if !plain || !cell.bytes().any(|b| b.is_ascii_digit()) {
        return None;
    }
    cell.parse().ok()
}

fn parse_cell(cell: &str, line: usize, column: usize) -> Result<Option<f64>> {
    if is_missing_token(cell) {
        return Ok(None);
    }
    let value = parse_number(cell).ok_or_else(|| Error::NonNumericCell { line, column, value: cell.to_string() })?;
    if !value.is_finite() || value < 0.0 {
        return Err(Error::InvalidValue { line, column, value });
    }
    Ok(Some(value))
}

fn records(text: &str) -> Result<Vec<(usize, StringRecord)>> {
    if text.trim().is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut reader =
        ReaderBuilder::new().has_headers(false).flexible(true).trim(Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::HeaderMalformed(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        // a lone empty cell is a blank line
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        out.push((line, rec));
    }
    if out.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(out)
}

/// Parses the wide layout: header `country,<year>,...` with consecutive years.
pub fn parse_wide_csv(text: &str) -> Result<Dataset> {
    let recs = records(text)?;
    let (_, header) = &recs[0];
    if header.get(0) != Some("country") {
        return Err(Error::HeaderMalformed(format!(
            "first header cell must be `country`, found `{}`",
            header.get(0).unwrap_or("")
        )));
    }
    let mut years = Vec::with_capacity(header.len() - 1);
    for cell in header.iter().skip(1) {
        let year: i32 = cell.parse().map_err(|_| Error::HeaderMalformed(format!("`{cell}` is not a year")))?;
        if let Some(&prev) = years.last() {
            if year <= prev {
                return Err(Error::HeaderMalformed(format!("years not increasing at {year}")));
            }
            if year != prev + 1 {
                return Err(Error::HeaderMalformed(format!("years not consecutive: {prev} then {year}")));
            }
        }
        years.push(year);
    }
    if years.len() < 2 {
        return Err(Error::SeriesTooShort(years.len()));
    }

    let width = header.len();
    let mut series = Vec::with_capacity(recs.len() - 1);
    let mut seen = HashSet::new();
    for (line, rec) in &recs[1..] {
        if rec.len() != width {
            return Err(Error::RowArity { line: *line, expected: width, found: rec.len() });
        }
        let name = &rec[0];
        if name.is_empty() {
            return Err(Error::EmptyCountry(*line));
        }
        if !seen.insert(name.to_string()) {
            return Err(Error::DuplicateCountry(name.to_string()));
        }
        let values = rec
            .iter()
            .enumerate()
            .skip(1)
            .map(|(col, cell)| parse_cell(cell, *line, col))
            .collect::<Result<Vec<_>>>()?;
        series.push(CountrySeries { name: name.to_string(), year_start: years[0], values });
    }
    Dataset::new(years[0], *years.last().unwrap(), series)
}

/// Parses the long layout `country,year,mmr` and pivots it to wide form.
///
/// The year range is the observed min..=max; country order is first
/// appearance. Combinations never observed become missing.
pub fn parse_long_csv(text: &str) -> Result<Dataset> {
    let recs = records(text)?;
    let (_, header) = &recs[0];
    if header.len() != 3 || &header[0] != "country" || &header[1] != "year" || &header[2] != "mmr" {
        return Err(Error::HeaderMalformed("expected header `country,year,mmr`".into()));
    }
    let mut order: Vec<String> = Vec::new();
    let mut obs: HashMap<String, HashMap<i32, Option<f64>>> = HashMap::new();
    let (mut lo, mut hi) = (i32::MAX, i32::MIN);
    for (line, rec) in &recs[1..] {
        if rec.len() != 3 {
            return Err(Error::RowArity { line: *line, expected: 3, found: rec.len() });
        }
        let name = &rec[0];
        if name.is_empty() {
            return Err(Error::EmptyCountry(*line));
        }
        let year: i32 =
            rec[1].parse().map_err(|_| Error::NonNumericCell { line: *line, column: 1, value: rec[1].to_string() })?;
        let value = parse_cell(&rec[2], *line, 2)?;
        let per_country = obs.entry(name.to_string()).or_insert_with(|| {
            order.push(name.to_string());
            HashMap::new()
        });
        if per_country.insert(year, value).is_some() {
            return Err(Error::DuplicateObservation { country: name.to_string(), year });
        }
        lo = lo.min(year);
        hi = hi.max(year);
    }
    if order.is_empty() {
        return Err(Error::EmptyInput);
    }
    if hi == lo {
        return Err(Error::SeriesTooShort(1));
    }
    let series = order
        .into_iter()
        .map(|name| {
            let per_country = &obs[&name];
            let values = (lo..=hi).map(|y| per_country.get(&y).copied().flatten()).collect();
            CountrySeries { name, year_start: lo, values }
        })
        .collect();
    Dataset::new(lo, hi, series)
}

/// Serializes to the wide layout; missing cells are written as `NA` and
/// numbers in shortest round-trip form.
pub fn to_wide_csv(dataset: &Dataset) -> String {
    let mut out = String::from("country");
    for y in dataset.years() {
        out.push(',');
        out.push_str(&y.to_string());
    }
    out.push('\n');
    for s in dataset.series() {
        out.push_str(&s.name);
        for v in &s.values {
            out.push(',');
            match v {
                Some(x) => out.push_str(&x.to_string()),
                None => out.push_str("NA"),
            }
        }
        out.push('\n');
    }
    out
}

/// Stacks the dataset's series into an n×d matrix in dataset order.
pub fn to_matrix(dataset: &Dataset) -> Result<DataMatrix> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels = dataset.series().iter().map(|s| s.name.clone()).collect();
    let columns = dataset.years().collect();
    let cells = dataset.series().iter().flat_map(|s| s.values.iter().map(|v| v.unwrap_or(MISSING))).collect();
    DataMatrix::new(labels, columns, cells)
}

/// Inverse of [`to_matrix`] for matrices whose columns are consecutive years.
pub fn from_matrix(matrix: &DataMatrix) -> Result<Dataset> {
    let cols = matrix.columns();
    if cols.len() < 2 {
        return Err(Error::SeriesTooShort(cols.len()));
    }
    if cols.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::HeaderMalformed("matrix columns are not consecutive years".into()));
    }
    let series = matrix
        .labels()
        .iter()
        .zip(matrix.rows())
        .map(|(name, row)| {
            let values = row.iter().map(|&x| if x.is_nan() { None } else { Some(x) }).collect();
            CountrySeries::new(name.clone(), cols[0], values)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(cols[0], *cols.last().unwrap(), series)
}
