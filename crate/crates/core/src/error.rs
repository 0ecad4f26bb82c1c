use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidMeasure(String),

    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },

    #[error("linear system is singular or ill-conditioned (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("residual {residual:.3e} exceeds tolerance {tolerance:.3e} (condition estimate {condition:.3e})")]
    IllConditioned {
        residual: f64,
        tolerance: f64,
        condition: f64,
    },

    #[error("lambda = {re} + {im}i is within pole-proximity of a Wronskian zero (|W| = {wronskian:.3e})")]
    PoleProximity { re: f64, im: f64, wronskian: f64 },

    #[error("ODE step size underflow at x = {0}")]
    StepUnderflow(f64),

    #[error("contour passes too close to a zero after {0} retries")]
    ContourRetries(usize),

    #[error("time step {dt} exceeds the stability bound {bound}")]
    Cfl { dt: f64, bound: f64 },

    #[error("wave data support/box violation: {0}")]
    BoxViolation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
