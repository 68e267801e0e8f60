use thiserror::Error;

pub type Result<T, E = TcmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum TcmError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("negative operator order {0} (inverse powers are not supported)")]
    NegativeOrder(f64),

    #[error("viscosity law returned {value} at theta = {theta}, below the floor {floor}")]
    ViscosityFloor { theta: f64, value: f64, floor: f64 },

    #[error("non-finite coefficient in {field} at t = {time}")]
    BlowUp { time: f64, field: &'static str },

    #[error("negative radicand {value} in functional {functional}")]
    NegativeRadicand { functional: &'static str, value: f64 },

    #[error("equivalence band violated for {functional}: squared value {squared}, cross-free sum {sum}")]
    BandViolation { functional: &'static str, squared: f64, sum: f64 },

    #[error("decay fit needs at least {needed} samples in the window, found {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("non-positive value {value} at t = {time} inside the fit window")]
    NonPositiveValue { time: f64, value: f64 },

    #[error("invalid fit window [{0}, {1}]")]
    InvalidWindow(f64, f64),

    #[error("sink rejected record: {0}")]
    Sink(String),
}

impl TcmError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        TcmError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
