use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("mode list is empty")]
    EmptyModes,
    #[error("mode {mode} has zero dimension")]
    ZeroDimension { mode: usize },
    #[error("mode index {mode} out of range for {n_modes} modes")]
    ModeOutOfRange { mode: usize, n_modes: usize },
    #[error("operands live on different bases")]
    BasisMismatch,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("integration unstable at t = {time}: {reason}; reduce dt")]
    Unstable { time: f64, reason: String },
    #[error("mean-field amplitude diverged at t = {time}")]
    Divergence { time: f64 },
    #[error("occupation {value:e} on mode {mode} is negative beyond tolerance; integrator health check failed")]
    NegativeOccupation { mode: usize, value: f64 },
    #[error("matrix is not unitary (max |W^dag W - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("matrix is not Hermitian (max |A - A^dag| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("vacuum condition almost never satisfied (probability {probability:e})")]
    VacuumConditionUnlikely { probability: f64 },
    #[error("state norm {norm:e} is too small to renormalize")]
    NearZeroNorm { norm: f64 },
    #[error("expected a single-mode state, got {n_modes} modes")]
    NotSingleMode { n_modes: usize },
    #[error("Wigner grids have different geometry")]
    GridMismatch,
    #[error("Wigner error denominator vanishes")]
    ZeroDenominator,
    #[error("grid too small: {leakage:e} of the Wigner weight falls outside")]
    GridTooSmall { leakage: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("every vacuum conditioning fell below the probability floor {floor:e}")]
    ConditioningFailed { floor: f64 },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
