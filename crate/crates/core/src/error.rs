use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("a stage-failure parameter needs at least one stage")]
    ZeroStages,

    #[error("parameter {param}: partition chain is empty")]
    EmptyChain { param: usize },

    #[error("parameter {param}, level {level}: {detail}")]
    BadPartition {
        param: usize,
        level: usize,
        detail: String,
    },

    #[error(
        "parameter {param}: level {level} does not refine level {prev}: outcomes {a} and {b} are \
         separated at level {prev} but share a block at level {level}",
        prev = .level - 1
    )]
    RefinementViolation {
        param: usize,
        level: usize,
        a: u32,
        b: u32,
    },

    #[error("parameter {param}: bad schedule: {detail}")]
    BadSchedule { param: usize, detail: String },

    #[error("{what} {value} out of range (max {max})")]
    OutOfRange {
        what: &'static str,
        value: u64,
        max: u64,
    },

    #[error("the parameter list is empty")]
    NoParameters,

    #[error("scenario space has {cardinality} scenarios, above the limit of {limit}")]
    SizeLimit { cardinality: u128, limit: u64 },

    #[error("cannot sample {requested} scenarios from a space of {available}")]
    SampleCount { requested: u64, available: u128 },

    #[error("scenario {id}: {detail}")]
    BadScenario { id: usize, detail: String },

    #[error("scenario {0} compared with itself; no differentiating event exists")]
    IdenticalScenarios(usize),

    #[error("the scenario set has no exogenous-scheduled parameters")]
    NoExogenous,

    #[error("the scenario set is empty")]
    EmptyScenarioSet,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("graph does not belong to this scenario set: {0}")]
    GraphMismatch(String),

    #[error("exhaustive search supports at most {cap} scenarios, got {size}")]
    OracleCapExceeded { size: usize, cap: usize },

    #[error("necessity check requires a sufficient graph; {violations} blocks are disconnected")]
    NotSufficient { violations: usize },

    #[error("case study: {0}")]
    Case(String),

    #[error("parameter {param} is exogenous-scheduled; the clinical-trial model only supports endogenous parameters")]
    ExogenousInModel { param: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
