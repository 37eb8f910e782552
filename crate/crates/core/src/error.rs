use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {context}: {left:?} vs {right:?}")]
    Shape {
        context: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("layer chain broken between layer {index} ({out_dim} outputs) and layer {next} ({in_dim} inputs)")]
    Chain {
        index: usize,
        next: usize,
        out_dim: usize,
        in_dim: usize,
    },
    #[error("weight mask selects no entries")]
    DegenerateMask,
    #[error("forward cache does not match the network: {0}")]
    StaleCache(&'static str),
    #[error("training diverged at epoch {epoch}: non-finite {what}")]
    Divergence { epoch: usize, what: &'static str },
    #[error("schema has no columns")]
    EmptySchema,
    #[error("column `{0}` has no observed values and cannot be encoded")]
    UnencodableColumn(String),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("dataset needs at least {needed} {what}, found {found}")]
    TooSmall {
        what: &'static str,
        needed: usize,
        found: usize,
    },
    #[error("no cells to score")]
    NoCellsToScore,
    #[error("error ratio undefined: competitor mean error is zero")]
    UndefinedRatio,
    #[error("empty input to {0}")]
    Empty(&'static str),
    #[error("dataset has no missing cells")]
    NothingToImpute,
    #[error("imputation run {run} failed: {source}")]
    Run {
        run: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
    #[error("column `{0}` not found")]
    UnknownColumn(String),
    #[error("column `{column}`: cannot parse `{value}` as a number")]
    UnparseableNumber { column: String, value: String },
    #[error("column `{column}`: unknown label `{value}`")]
    UnknownLabel { column: String, value: String },
    #[error("dataset already has missing cells; induction needs complete data")]
    NotComplete,
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: &'static str) -> Self {
        Error::InvalidParameter { name, reason }
    }
}
