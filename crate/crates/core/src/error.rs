//! Crate-wide error type.

/// Errors reported by dataset construction, fitting, and inference.
///
/// Pipeline stages wrap their causes in [`Error::Stage`] so a failure deep in
/// a bootstrap replicate still names where it happened.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite {what} at row {row}")]
    NonFinite { what: &'static str, row: usize },

    #[error("invalid quantile grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("design matrix is rank deficient (rank {rank} < p = {p})")]
    RankDeficient { rank: usize, p: usize },

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("bandwidth {h} pushes level {tau} outside (0, 1)")]
    BandwidthOutOfRange { h: f64, tau: f64 },

    #[error("coefficient set has no cached off-grid fits; refit with a bandwidth")]
    MissingOffGridFits,

    #[error("degenerate density estimate: all {total} cells hit the floor")]
    DegenerateDensity { total: usize },

    #[error("{failed} of {total} replicates failed (limit {limit_percent}%)")]
    TooManyFailures {
        failed: usize,
        total: usize,
        limit_percent: u32,
    },

    #[error("singular linear system")]
    Singular,

    #[error("oracle limit exceeded: {0}")]
    OracleLimit(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }
}
