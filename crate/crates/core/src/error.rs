use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid spectral point: kappa = {kappa}, kpar = {kpar}")]
    InvalidSpectralPoint { kappa: f64, kpar: f64 },

    #[error("axial constants for {material} at (kappa = {kappa}, kpar = {kpar}): {reason}")]
    SecularSolve {
        material: String,
        kappa: f64,
        kpar: f64,
        reason: String,
    },

    #[error("singular dynamical matrix (condition number {condition:e}) at (kappa = {kappa}, kpar = {kpar})")]
    SingularDynamicalMatrix {
        condition: f64,
        kappa: f64,
        kpar: f64,
    },

    #[error("propagation exponent {exponent} exceeds the representable range")]
    PropagationOverflow { exponent: f64 },

    #[error("transfer product over {span:?} is not finite")]
    TransferOverflow { span: (usize, usize) },

    #[error("reflection denominator vanished ({denominator:e})")]
    VanishingDenominator { denominator: f64 },

    #[error("round-trip operator has spectral radius {radius} >= 1")]
    Gain { radius: f64 },

    #[error(
        "quadrature did not converge: estimate {estimate:e} +/- {error:e} after {nodes} nodes"
    )]
    NonConvergence {
        estimate: f64,
        error: f64,
        nodes: usize,
    },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
