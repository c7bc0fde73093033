use thiserror::Error;

/// Every typed failure the library can report.
///
/// Variants split into validation problems (bad input) and numerical
/// failures (a computation could not meet its tolerance); see
/// [`Error::is_numerical`].
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("nonpositive specific volume v = {0}")]
    NonpositiveVolume(f64),
    #[error("nonpositive internal energy e = {0}")]
    NonpositiveInternalEnergy(f64),
    #[error("state is {distance:.3e} away from equilibrium, limit {limit:.3e}")]
    FarFromEquilibrium { distance: f64, limit: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid field state: {0}")]
    InvalidState(String),

    #[error("root residual {residual:.3e} exceeds {limit:.3e} at eta = {eta}")]
    RootResidualTooLarge { eta: f64, residual: f64, limit: f64 },
    #[error("ambiguous branch matching between eta = {from} and eta = {to}")]
    AmbiguousBranch { from: f64, to: f64 },
    #[error("spectral gap violated: max Re(lambda) = {max_re:.3e} at eta = {eta}")]
    GapViolation { eta: f64, max_re: f64 },
    #[error("grid under-resolved: dx = {dx:.3e} > required {required:.3e}")]
    UnderResolved { dx: f64, required: f64 },
    #[error("no feasible K triple within the search budget")]
    NoFeasibleK,

    #[error("explicit time step violates CFL: dt = {dt:.3e} > {limit:.3e}")]
    CflFailure { dt: f64, limit: f64 },
    #[error("conductivity not bounded away from zero: min = {0:.3e}")]
    SingularConductivity(f64),
    #[error("no Gaussian envelope with C <= 1e4")]
    NoEnvelope,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("vacuum approached: min(1 + V) = {0:.3e}")]
    VacuumApproached(f64),
    #[error("Picard iteration does not contract: ratios {0:?}")]
    NoContraction(Vec<f64>),
    #[error("time step underflow at t = {t}: dt = {dt:.3e}")]
    StepSizeUnderflow { t: f64, dt: f64 },
    #[error("smallness lost at seam: G = {value:.3e} >= {limit:.3e}")]
    SmallnessLost { value: f64, limit: f64 },

    #[error("derivative fields missing for stopping-time functional")]
    MissingDerivatives,
    #[error("decay fit needs >= 8 samples spanning a decade: {0}")]
    InsufficientSpan(String),
}

impl Error {
    /// True for failures of a numerical procedure, false for rejected input.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidParameter(_)
                | Error::NonpositiveVolume(_)
                | Error::NonpositiveInternalEnergy(_)
                | Error::FarFromEquilibrium { .. }
                | Error::InvalidGrid(_)
                | Error::InvalidState(_)
                | Error::GridMismatch(_)
                | Error::MissingDerivatives
                | Error::InsufficientSpan(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
