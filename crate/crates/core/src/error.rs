use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("layer {index}: output dim {out} does not match layer {} input dim {next_in}", index + 1)]
    ShapeChain {
        index: usize,
        out: usize,
        next_in: usize,
    },
    #[error("layer {index}: {reason}")]
    InvalidLayer { index: usize, reason: String },
    #[error("input has {got} columns, network expects {expected}")]
    InputDim { got: usize, expected: usize },
    #[error("non-finite value produced at layer {index}")]
    NonFinite { index: usize },
    #[error("non-finite input value at row {row}")]
    NonFiniteInput { row: usize },
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    TrainDiverged { epoch: usize },
    #[error("invalid training config: {0}")]
    InvalidTrainConfig(String),
    #[error("empty {0} split")]
    EmptySplit(&'static str),
    #[error("sizing: budget {np} below output layer size {nc}")]
    BudgetBelowOutput { np: usize, nc: usize },
    #[error("sizing: {0}")]
    InvalidSizing(String),
    #[error("epsilon must be > 0, got {0}")]
    InvalidEpsilon(f64),
    #[error("unit index ({layer}, {unit}) out of range")]
    UnitIndex { layer: usize, unit: usize },
    #[error("prune plan does not match network: {0}")]
    PlanMismatch(String),
    #[error("metrics: {0}")]
    Metrics(String),
    #[error("dataset: {0}")]
    Data(String),
    #[error("csv parse error at row {row}: {reason}")]
    CsvRow { row: usize, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
