use thiserror::Error;

/// Every failure the library can report.
///
/// Variants are grouped by the stage that raises them; [`Error::code`] gives a
/// stable integer per variant for callers that cannot match on Rust enums.
#[derive(Debug, Error)]
pub enum Error {
    // ingestion
    #[error("input is empty")]
    EmptyInput,
    #[error("malformed header: {0}")]
    HeaderMalformed(String),
    #[error("line {line}: expected {expected} cells, found {found}")]
    RowArity { line: usize, expected: usize, found: usize },
    #[error("duplicate country `{0}`")]
    DuplicateCountry(String),
    #[error("duplicate observation for `{country}` in {year}")]
    DuplicateObservation { country: String, year: i32 },
    #[error("line {line}, column {column}: `{value}` is not a number, empty, or NA")]
    NonNumericCell { line: usize, column: usize, value: String },
    #[error("line {line}, column {column}: value {value} is negative or non-finite")]
    InvalidValue { line: usize, column: usize, value: f64 },
    #[error("country label is empty on line {0}")]
    EmptyCountry(usize),
    #[error("series need at least two years, found {0}")]
    SeriesTooShort(usize),
    #[error("dataset has no series")]
    EmptyDataset,

    // preprocessing
    #[error("column {0} has no present values")]
    AllMissingColumn(usize),
    #[error("row `{0}` has no present values")]
    AllMissingRow(String),
    #[error("matrix still contains missing cells")]
    MissingCellsPresent,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    // clustering
    #[error("k must be at least 1")]
    KZero,
    #[error("k = {k} exceeds the number of rows ({n})")]
    KTooLarge { k: usize, n: usize },
    #[error("k = {k} outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("cell ({row}, {col}) is not finite")]
    NonFiniteCell { row: usize, col: usize },
    #[error("label {label} at row {row} is out of range for {k} clusters")]
    LabelOutOfRange { row: usize, label: usize, k: usize },
    #[error("silhouette needs at least two clusters")]
    SingleCluster,
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },

    // pairing
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("series is constant")]
    ConstantSeries,
    #[error("need at least 3 observations, found {0}")]
    TooShort(usize),
    #[error("correlation {0} outside [-1, 1]")]
    InvalidCorrelation(f64),
    #[error("need at least 2 countries, found {0}")]
    TooFewCountries(usize),
    #[error("need at least 3 years, found {0}")]
    TooFewYears(usize),

    // configuration
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    // persistence
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersionMismatch { found: u64, expected: u64 },
    #[error("corrupt document: {0}")]
    CorruptDocument(String),
    #[error("model invariant violated: {0}")]
    InvariantViolation(String),
    #[error("year range {found_start}..={found_end} does not match model range {expected_start}..={expected_end}")]
    YearRangeMismatch { expected_start: i32, expected_end: i32, found_start: i32, found_end: i32 },
}

impl Error {
    /// Stable numeric code, grouped in hundreds by stage.
    pub fn code(&self) -> i32 {
        match self {
            Error::EmptyInput => 100,
            Error::HeaderMalformed(_) => 101,
            Error::RowArity { .. } => 102,
            Error::DuplicateCountry(_) => 103,
            Error::DuplicateObservation { .. } => 104,
            Error::NonNumericCell { .. } => 105,
            Error::InvalidValue { .. } => 106,
            Error::EmptyCountry(_) => 107,
            Error::SeriesTooShort(_) => 108,
            Error::EmptyDataset => 109,
            Error::AllMissingColumn(_) => 200,
            Error::AllMissingRow(_) => 201,
            Error::MissingCellsPresent => 202,
            Error::DimensionMismatch { .. } => 203,
            Error::KZero => 300,
            Error::KTooLarge { .. } => 301,
            Error::KOutOfRange { .. } => 302,
            Error::NonFiniteCell { .. } => 303,
            Error::LabelOutOfRange { .. } => 304,
            Error::SingleCluster => 305,
            Error::EmptyCluster(_) => 306,
            Error::TooFewRows { .. } => 307,
            Error::LengthMismatch(..) => 400,
            Error::ConstantSeries => 401,
            Error::TooShort(_) => 402,
            Error::InvalidCorrelation(_) => 403,
            Error::TooFewCountries(_) => 404,
            Error::TooFewYears(_) => 405,
            Error::InvalidConfig(_) => 500,
            Error::Io(_) => 600,
            Error::SchemaVersionMismatch { .. } => 601,
            Error::CorruptDocument(_) => 602,
            Error::InvariantViolation(_) => 603,
            Error::YearRangeMismatch { .. } => 604,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
