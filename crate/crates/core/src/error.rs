use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("derivative order {requested} exceeds the available order {available}")]
    OrderExceeded { requested: usize, available: usize },
    #[error("smoothing width must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("interval [{a}, {b}] is inverted")]
    IntervalInverted { a: f64, b: f64 },
    #[error("curve endpoint is zero")]
    ZeroEndpoint,
    #[error("function equals the avoided value {0} at an interval endpoint")]
    EndpointHitsLambda(num_complex::Complex64),
    #[error("could not construct a rejoined function avoiding {0}")]
    RejoinFailed(num_complex::Complex64),
    #[error("the value {0} is attained (or approached) by the element")]
    ValueAttained(num_complex::Complex64),
    #[error("scalar part equals {0}")]
    ScalarEqualsLambda(num_complex::Complex64),
    #[error("point {0} lies outside the half-line domain")]
    OutsideDomain(f64),
    #[error("norm integral did not converge: estimate {estimate:e} above tolerance {tol:e}")]
    NormNotConverged { estimate: f64, tol: f64 },
    #[error("function is not in the decaying algebra ({0})")]
    NotInAlgebra(String),

    #[error("matrix dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix must have dimension at least 1")]
    EmptyMatrix,
    #[error("non-finite matrix entry")]
    NonFiniteEntry,
    #[error("shift {0} is singular (pivot below threshold)")]
    SingularShift(num_complex::Complex64),
    #[error("real shift {0} lies inside the declared spectral enclosure")]
    RealShiftInsideSpectrum(f64),
    #[error("conditioner matrix is singular")]
    SingularConditioner,
    #[error("eigenvalue list must be non-empty and finite")]
    InvalidSpectrum,
    #[error("resolvent grid touches the real axis")]
    GridTouchesAxis,

    #[error("Taylor order n = {n} is insufficient: {reason}")]
    InsufficientOrder { n: usize, reason: String },
    #[error("invalid quadrature specification: {0}")]
    InvalidQuadrature(String),
    #[error("contour radius margin must be positive, got {0}")]
    EpsilonNonPositive(f64),
    #[error("a spectral enclosure is required")]
    EnclosureMissing,
    #[error("interval [{lo}, {hi}] does not enclose the spectrum")]
    IntervalDoesNotEncloseSpectrum { lo: f64, hi: f64 },
    #[error("spectrum is not contained in [0, inf)")]
    SpectrumNotSemibounded,
    #[error("time {0} is outside (0, 1]")]
    TimeOutOfRange(f64),
    #[error("{0} is not an eigenvalue of the operator")]
    NotAnEigenvalue(f64),

    #[error("truncation order K = {0} is too large (max 24)")]
    KTooLarge(usize),
    #[error("cut-off does not have the required plateau shape: {0}")]
    CutoffShapeInvalid(String),

    #[error("parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
