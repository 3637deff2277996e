use thiserror::Error;

/// Errors raised by schedule construction, evaluation and integration.
#[derive(Debug, Error)]
pub enum Error {
    #[error("problem size must be at least 2, got {0}")]
    InvalidProblemSize(u64),

    #[error("energy gap {gap:e} is below the floor {floor:e}")]
    DegenerateGap { gap: f64, floor: f64 },

    #[error("time {t} lies outside [0, {t_f}]")]
    TimeOutOfRange { t: f64, t_f: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("vector is not unit length (|n| = {norm})")]
    NonUnitVector { norm: f64 },

    #[error(
        "resolution guard violated at t = {t}: max(gap, |dtheta/dt|) * dt = {product} (limit 0.1)"
    )]
    Resolution { t: f64, product: f64 },

    #[error("schedule diverges at t = {t}: A = {a:e}, B = {b:e} (bound {bound:e})")]
    Divergence { t: f64, a: f64, b: f64, bound: f64 },

    #[error("line {line}: {message}")]
    Format { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Format {
                line,
                message: format!("{other:?}"),
            },
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
