use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid interval [{a}, {b}]: need a < b")]
    InvalidInterval { a: f64, b: f64 },

    #[error("too few points: {got} (need at least {min})")]
    TooFewPoints { got: usize, min: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("point {coords:?} has no match in the parent domain")]
    UnmatchedPoint { coords: Vec<f64> },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value at point {index}")]
    NonFinite { index: usize },

    #[error("Hölder exponent {0} outside its admissible range")]
    InvalidExponent(f64),

    #[error("point index {index} out of range for a domain of {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unknown quadrature scheme `{0}`")]
    UnknownScheme(String),

    #[error("unstable rule: weight {weight} at node {index} is negative")]
    UnstableRule { index: usize, weight: f64 },

    #[error("unknown kernel `{0}`")]
    UnknownKernel(String),

    #[error("invalid kernel parameters for `{name}`: {reason}")]
    InvalidKernelParams { name: String, reason: String },

    #[error("kernel derivative of order {0} is not available")]
    MissingDerivative(usize),

    #[error("non-finite kernel value at target point {x} and source point {y}")]
    NonFiniteKernel { x: usize, y: usize },

    #[error("value at point {index} lies {distance} outside the admissible set")]
    OutsideAdmissibleSet { index: usize, distance: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular linearization at Newton iterate {iterate} (condition estimate {condition:e})")]
    SingularLinearization { iterate: usize, condition: f64 },

    #[error("malformed CSV at line {line}: {reason}")]
    Csv { line: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            kind => Error::Csv {
                line,
                reason: format!("{kind:?}"),
            },
        }
    }
}
