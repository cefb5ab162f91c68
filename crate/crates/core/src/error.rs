use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("supercritical model: Λp = {branching} violates Λp < 1")]
    SupercriticalModel { branching: f64 },

    #[error("linear solve failed: {0}")]
    SpectralFailure(String),

    #[error("simulation aborted after {count} events (cap {cap})")]
    ExplosionAbort { count: u64, cap: u64 },

    #[error("cluster oracle precondition violated: {0}")]
    OracleDomainError(String),

    #[error("expected-count series did not converge after {terms} terms")]
    SeriesFailure { terms: usize },

    #[error("degenerate block schedule: floor(t^(1-4/(q+1))) = 0 for t = {t}, q = {q}")]
    DegenerateSchedule { t: f64, q: u32 },

    #[error("no single dominant rate term (ratio {ratio:.3} below threshold {threshold})")]
    MixedRegime { ratio: f64, threshold: f64 },

    #[error("degenerate plug-in estimate: {0}")]
    DegenerateEstimate(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
