use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("odd resolution: N = {0:?} (every axis must be even and >= 4)")]
    OddResolution([usize; 3]),
    #[error("fields live on different lattices")]
    LatticeMismatch,
    #[error("shape mismatch: expected {expected} samples, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("spectrum cutoff {cutoff} exceeds the largest retained shell {max}")]
    CutoffExceedsLattice { cutoff: f64, max: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("lattice {0:?} exceeds the convolution oracle size guard ({1} points)")]
    OracleTooLarge([usize; 3], usize),
    #[error("blow-up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },
    #[error("history covers [{start}, {end}] but t = {t} was requested")]
    InsufficientHistory { start: f64, end: f64, t: f64 },
    #[error("trajectory spans {span} but the window is {window}")]
    TrajectoryTooShort { span: f64, window: f64 },
    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),
    #[error("N0 = {n0} requires eigenvalue index {needed} but the lattice only has {available} degrees of freedom")]
    SpectrumExhausted {
        n0: usize,
        needed: usize,
        available: usize,
    },
}
