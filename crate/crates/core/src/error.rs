use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field mismatch: {0}")]
    FieldMismatch(String),

    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },

    #[error("unknown potential `{0}` (expected one of old_baby, half_U_squared, bps_test)")]
    UnknownPotential(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("potential is negative at node {node} (u = {u}, v = {v}, V = {value:e})")]
    NegativePotential { node: usize, u: f64, v: f64, value: f64 },

    #[error("H2 is not harmonic: Laplace residual {residual:.6} exceeds {tolerance:e}")]
    NotHarmonic { residual: f64, tolerance: f64 },

    #[error("harmonic conjugate is path dependent: discrepancy {discrepancy:e} at (u, v) = ({u}, {v})")]
    PathDependent { discrepancy: f64, u: f64, v: f64 },

    #[error("profile blew up (f > 1e12) at r = {radius}")]
    BlowUp { radius: f64 },

    #[error("step size underflow at r = {radius}")]
    StepUnderflow { radius: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
