use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AtlasError {
    #[error("point at infinity is not nilpotent: {detail}")]
    NotNilpotentAtInfinity { detail: String },

    #[error("not of saddle type: B = {b} (need B > 1)")]
    NotSaddleType { b: f64 },

    #[error("singular points are not isolated: components share the factor {factor}")]
    NonIsolatedSingularities { factor: String },

    #[error("degenerate blow-up at a = 1/2")]
    DegenerateBlowup,

    #[error("unknown chart: {0}")]
    UnknownChart(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("argument must be positive, got {0}")]
    NonpositiveArgument(f64),

    #[error("state norm exceeded {bound:e} at t = {t}")]
    BlowupDetected { t: f64, bound: f64 },

    #[error("step size {h:e} underflowed at t = {t}")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step budget exhausted at t = {t}")]
    TooManySteps { t: f64 },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("no crossing of section {section} before t = {tmax}")]
    NoCrossing { section: String, tmax: f64 },

    #[error("tangential crossing of section {section}: normal velocity {vn:e}")]
    TangentialCrossing { section: String, vn: f64 },

    #[error("orbit did not return to section {section}")]
    NoReturn { section: String },

    #[error("not a hyperbolic saddle: eigenvalues {l1}, {l2}")]
    NotASaddle { l1: f64, l2: f64 },

    #[error("eta must be positive, got {0}")]
    NonpositiveEta(f64),

    #[error("B = {0} is excluded (B must differ from 0 and 1/2)")]
    ExcludedB(String),

    #[error("singular point on the invariant parabola: 1 - B*delta^2 = {0} <= 0")]
    SingularOnParabola(f64),

    #[error("separatrix from {from} is ambiguous between {first} and {second}")]
    UnresolvedConnection {
        from: String,
        first: String,
        second: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl AtlasError {
    /// Validation failures (bad parameters) as opposed to numerical ones.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            AtlasError::NotSaddleType { .. }
                | AtlasError::ExcludedB(_)
                | AtlasError::SingularOnParabola(_)
                | AtlasError::NonpositiveArgument(_)
                | AtlasError::NonpositiveEta(_)
                | AtlasError::DegenerateBlowup
                | AtlasError::UnknownChart(_)
                | AtlasError::InvalidInput(_)
                | AtlasError::Parse(_)
                | AtlasError::NotNilpotentAtInfinity { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, AtlasError>;
