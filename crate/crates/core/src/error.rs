use thiserror::Error;

/// Errors raised by mesh construction, assembly and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid surface specification: {0}")]
    InvalidSpec(String),

    #[error("surface is not embedded: epsilon * max|rho| = {value:.6} must be < 1")]
    Embedding { value: f64 },

    #[error("profile is not positive on (-1, 1): f({at}) = {value}")]
    ProfileNotPositive { at: f64, value: f64 },

    #[error("profile is not normalized: 2*pi*integral(f) = {integral:.12}, expected 1")]
    ProfileNotNormalized { integral: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate panel {index} (area {area:e})")]
    DegeneratePanel { index: usize, area: f64 },

    #[error("kappa must be non-negative, got {0}")]
    NegativeKappa(f64),

    #[error("insufficient quadrature order {order} for n_max = {n_max}")]
    QuadratureOrder { order: usize, n_max: usize },

    #[error("harmonic index out of range: n = {n}, m = {m}")]
    HarmonicIndex { n: i64, m: i64 },

    #[error("iteration did not converge after {iterations} steps (last change {change:e})")]
    NonConvergence { iterations: usize, change: f64 },

    #[error("no sign change of lambda_max - 1 on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("linear system is singular or not positive definite")]
    Singular,

    #[error("density weight is not admissible: {0}")]
    BadWeight(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
