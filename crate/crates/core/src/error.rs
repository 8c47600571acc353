use thiserror::Error;

/// Errors raised by the library. Each variant names the module that raised it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("seqcore: index {index} out of range (explicit table has {len} rows)")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("seqcore: term {index} is not representable ({what})")]
    NotRepresentable { index: usize, what: &'static str },

    #[error("{module}: domain error: {message}")]
    Domain {
        module: &'static str,
        message: String,
    },

    #[error("seqcore: eta condition fails at index {index}: {detail}")]
    EtaViolation { index: usize, detail: String },

    #[error("{module}: depth {depth} exceeds the native cap (log b = {log_b:.3} > log cap = {log_cap:.3})")]
    DepthCap {
        module: &'static str,
        depth: usize,
        log_b: f64,
        log_cap: f64,
    },

    #[error("weierfn: accuracy {target:e} infeasible; depth cap binds at N = {max_depth} with tail bound {best:e}")]
    InfeasibleAccuracy {
        target: f64,
        max_depth: usize,
        best: f64,
    },

    #[error("{module}: scale r = {r:e} outside validity window [{min:e}, {max:e}]")]
    ValidityWindow {
        module: &'static str,
        r: f64,
        min: f64,
        max: f64,
    },

    #[error("theory: scale r = {r:e} is not bracketed by the generated frequencies")]
    ScaleRange { r: f64 },

    #[error(
        "cantor: generation {generation} parent {parent} has {children} children (need at least 2)"
    )]
    Branching {
        generation: usize,
        parent: usize,
        children: usize,
    },

    #[error("cantor: no interval ({generation}, {j})")]
    UnknownInterval { generation: usize, j: i64 },

    #[error("{module}: {requested} {what} requested (limit {limit}); use a coarser request")]
    TooManySamples {
        module: &'static str,
        what: &'static str,
        requested: u64,
        limit: u64,
    },

    #[error("weierfn: invalid base function: {0}")]
    InvalidBaseFunction(String),

    #[error("{module}: theorem assumption violated: {detail}")]
    AssumptionViolation {
        module: &'static str,
        detail: String,
    },

    #[error("spec json: {0}")]
    Json(String),
}

impl Error {
    pub(crate) fn domain(module: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            module,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
