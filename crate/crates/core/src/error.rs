use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid sparse spec: {0}")]
    Spec(String),
    #[error("precision floor: requested {requested} fractional bits, at least {floor} required")]
    PrecisionFloor { requested: u64, floor: u64 },
    #[error("guard: {0}")]
    Guard(String),
    #[error("outside the small-coupling regime: |v_k| + v_k^2 = {0} >= 1")]
    Regime(f64),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("no growth: {0}")]
    NoGrowth(String),
    #[error("hypothesis not met: {0}")]
    Hypothesis(String),
    #[error("phase function not monotone near k = {0}")]
    Monotonicity(f64),
    #[error("size cap exceeded: {0}")]
    Size(String),
    #[error("numerical guard: {0}")]
    Numerical(String),
}

impl Error {
    /// Stable machine-readable name, used by the CLI's JSON error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "DomainError",
            Error::Spec(_) => "SpecError",
            Error::PrecisionFloor { .. } => "PrecisionFloor",
            Error::Guard(_) => "GuardError",
            Error::Regime(_) => "RegimeError",
            Error::Fit(_) => "FitError",
            Error::NoGrowth(_) => "NoGrowthError",
            Error::Hypothesis(_) => "HypothesisError",
            Error::Monotonicity(_) => "MonotonicityError",
            Error::Size(_) => "SizeError",
            Error::Numerical(_) => "NumericalGuard",
        }
    }
}
