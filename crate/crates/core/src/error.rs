use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("polynomial is not monic with integer coefficients: {0}")]
    NotMonicInteger(String),
    #[error("polynomial has a repeated root (zero discriminant)")]
    RepeatedRoot,
    #[error("polynomial is reducible over Q: {0}")]
    Reducible(String),
    #[error("polynomial has degree {0}; degree at least 2 is required")]
    DegreeTooSmall(usize),
    #[error("root isolation failed: {0}")]
    RootIsolation(String),
    #[error("element is not a unit: {0}")]
    NotAUnit(String),
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),
    #[error("generators are multiplicatively dependent: {0}")]
    DependentGenerators(String),
    #[error("no invariant lattice found: {0}")]
    Lattice(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid slice: {0}")]
    InvalidSlice(String),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("precision degraded at n = {n:?}: error radius {radius:e} exceeds 2^-32")]
    Degraded { n: Vec<i64>, radius: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
