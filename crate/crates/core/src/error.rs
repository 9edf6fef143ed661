use thiserror::Error;

/// Errors raised by the numerical modules.
///
/// Variants carry enough context to be written into a failing CSV row by the
/// harness; they are never used for control flow inside the kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("condition number {cond:.3e} exceeds cap {cap:.1e}")]
    IllConditioned { cond: f64, cap: f64 },

    #[error("non-finite entry encountered")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-PD sample at grid point {index}")]
    NonPdSample { index: usize },

    #[error("heat slice at t = {t:.3e} is not positive definite at point {index} (grid too coarse for the weight)")]
    SliceNotPd { t: f64, index: usize },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("power iteration did not converge after {iters} iterations (last gap {gap:.3e})")]
    NoConvergence { iters: usize, gap: f64 },

    #[error("field has non-zero mean {mean:.3e} (relative to norm)")]
    NonZeroMean { mean: f64 },

    #[error("time-truncation bound {bound:.3e} exceeds 1% of the integral {value:.3e}")]
    TailTooLarge { bound: f64, value: f64 },

    #[error("dense size cap exceeded: {0}")]
    SizeCap(String),

    #[error("averaged point lies outside the domain (margins x {x_margin:.3e}, y {y_margin:.3e}, lower {lower_margin:.3e}, upper {upper_margin:.3e})")]
    OutsideDomain {
        x_margin: f64,
        y_margin: f64,
        lower_margin: f64,
        upper_margin: f64,
    },

    #[error("sampler could not reach the band around delta = {delta} after {attempts} attempts")]
    BandMiss { delta: f64, attempts: usize },

    #[error("invalid config: {0}")]
    Config(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
