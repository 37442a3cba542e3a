use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("svd did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("rank {rank} out of range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("no rank in 1..={r_max} satisfies the {constraint} constraint")]
    NoRankSatisfies { r_max: usize, constraint: &'static str },

    #[error("coincident centers for clusters {0} and {1}")]
    CoincidentCenters(usize, usize),

    #[error("degenerate ellipse: {0}")]
    DegenerateEllipse(String),

    #[error("band overflow: archetype '{archetype}' needs {requested} cells, band holds {available}")]
    BandOverflow {
        archetype: String,
        requested: usize,
        available: usize,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable identifier used in machine-readable CLI errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } | Error::Stream(_) => "io",
            Error::Schema(_) => "schema",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::NonFinite { .. } => "non_finite",
            Error::NoConvergence { .. } => "no_convergence",
            Error::RankOutOfRange { .. } => "rank_out_of_range",
            Error::Undefined(_) => "undefined",
            Error::NoRankSatisfies { .. } => "no_rank_satisfies",
            Error::CoincidentCenters(..) => "coincident_centers",
            Error::DegenerateEllipse(_) => "degenerate_ellipse",
            Error::BandOverflow { .. } => "band_overflow",
        }
    }
}
