use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty-db: the transaction database has no rows")]
    EmptyDb,

    #[error("arity: expected an itemset of {expected} items, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("zero-antecedent: the antecedent never occurs")]
    ZeroAntecedent,

    #[error("degenerate-consequent: consequent support is {support}, CPIR denominator vanishes")]
    DegenerateConsequent { support: f64 },

    #[error("unknown item id {0}")]
    UnknownItem(u32),

    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("csv: missing header row")]
    MissingHeader,

    #[error("csv: row {row} has {got} cells, header has {expected}")]
    RaggedRow { row: usize, expected: usize, got: usize },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema: {0}")]
    Schema(String),

    #[error("value {value:?} of attribute {attribute} (row {row}) is outside the declared domain")]
    OutOfDomain {
        attribute: String,
        row: usize,
        value: String,
    },

    #[error("unknown dataset tag {0:?}")]
    UnknownDataset(String),

    #[error("oracle-too-large: {items} distinct items exceeds the limit of {limit}")]
    OracleTooLarge { items: usize, limit: usize },

    #[error("frequent itemsets were mined from database {found}, not {expected}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("prefilter report and frequent itemsets come from different jobs")]
    JobMismatch,

    #[error("frequent itemsets are incomplete: missing count for {0}")]
    IncompleteItemsets(String),

    #[error("stratification: class {class:?} has {count} rows, fewer than {folds} folds")]
    Stratification {
        class: String,
        count: usize,
        folds: usize,
    },

    #[error("no-rules: the rule set is empty")]
    NoRules,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
