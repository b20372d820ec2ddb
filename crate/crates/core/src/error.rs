use thiserror::Error;

use crate::fields::ChartId;

/// Error categories reported by the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("compactification chart needs y > 0, got y = {0}")]
    NonPositiveY(f64),
    #[error("point lies at infinity (w = {0}); the map is undefined there")]
    AtInfinity(f64),
    #[error("chart mismatch: expected {expected:?}, got {found:?}")]
    ChartMismatch { expected: ChartId, found: ChartId },
    #[error("singular matrix (pivot {pivot})")]
    Singular { pivot: usize },
    #[error("matrix has a complex-conjugate eigenvalue pair")]
    ComplexEigenvalues,
    #[error("equilibrium is not a saddle with one stable and two unstable eigenvalues: {0:?}")]
    NotSaddle([f64; 3]),
    #[error("eigenvalue ordering changed between continuation steps")]
    EigenvalueCollision,
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),
    #[error("root not bracketed on [{lo}, {hi}]")]
    RootNotBracketed { lo: f64, hi: f64 },
    #[error("initial data too coarse for the mesh (relative interpolation error {0:.3e})")]
    MeshTooCoarse(f64),
    #[error("Newton did not converge; residual history {history:?}")]
    NoConvergence { history: Vec<f64> },
    #[error("singular Jacobian in Newton iteration")]
    SingularJacobian,
    #[error("boundary value problem is ill-posed: {conditions} conditions for {unknowns} unknowns")]
    IllPosed { conditions: usize, unknowns: usize },
    #[error("only {found} section crossings found, needed {needed}")]
    NotEnoughCrossings { found: usize, needed: usize },
    #[error("segment endpoint is not in the section (|x| = {0:.3e})")]
    EndpointNotInSection(f64),
    #[error("no zero of the Lin gap found on the computed branch")]
    NoZeroInRange,
    #[error("stable Floquet multiplier is not real")]
    NoRealStableMultiplier,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Name of the error category.
    pub fn category(&self) -> &'static str {
        match self {
            Error::NonPositiveY(..) => "NonPositiveY",
            Error::AtInfinity(..) => "AtInfinity",
            Error::ChartMismatch { .. } => "ChartMismatch",
            Error::Singular { .. } => "Singular",
            Error::ComplexEigenvalues => "ComplexEigenvalues",
            Error::NotSaddle(..) => "NotSaddle",
            Error::EigenvalueCollision => "EigenvalueCollision",
            Error::StepUnderflow { .. } => "StepUnderflow",
            Error::MaxSteps(..) => "MaxSteps",
            Error::RootNotBracketed { .. } => "RootNotBracketed",
            Error::MeshTooCoarse(..) => "MeshTooCoarse",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::SingularJacobian => "SingularJacobian",
            Error::IllPosed { .. } => "IllPosed",
            Error::NotEnoughCrossings { .. } => "NotEnoughCrossings",
            Error::EndpointNotInSection(..) => "EndpointNotInSection",
            Error::NoZeroInRange => "NoZeroInRange",
            Error::NoRealStableMultiplier => "NoRealStableMultiplier",
            Error::InvalidInput(..) => "InvalidInput",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
