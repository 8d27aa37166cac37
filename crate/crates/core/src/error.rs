use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]: endpoints must be finite with lo < hi")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("orthonormality lost: residual {residual:e} exceeds {tolerance:e} (order {order}, {precision_digits} digits)")]
    OrthonormalityLost {
        residual: f64,
        tolerance: f64,
        order: usize,
        precision_digits: u32,
    },

    #[error("index {index} out of range 1..={order}")]
    IndexOutOfRange { index: usize, order: usize },

    #[error("point {t} outside [{lo}, {hi}]")]
    PointOutsideInterval { t: f64, lo: f64, hi: f64 },

    #[error("parameter t = {t} outside [{lo}, {hi}]")]
    ParameterOutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("integer overflow in expansion coefficient ({k}, {l})")]
    Overflow { k: usize, l: usize },

    #[error("basis interval [{basis_lo}, {basis_hi}] does not match the family target interval [{target_lo}, {target_hi}]")]
    BasisMismatch {
        basis_lo: f64,
        basis_hi: f64,
        target_lo: f64,
        target_hi: f64,
    },

    #[error("invalid selection constant A = {a}: {reason}")]
    InvalidA { a: f64, reason: String },

    #[error("clipped estimate integrates to zero")]
    DegenerateEstimate,

    #[error("density value {value} at t = {t} exceeds the declared sup bound {bound}")]
    EnvelopeViolation { t: f64, value: f64, bound: f64 },

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
