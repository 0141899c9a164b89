use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside its admissible domain.
    #[error("`{name}` = {value} is out of domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// Structural input problems (grid shapes, indices, strategy parameters).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("lag {r} is outside the tabulated range [0, {max}]")]
    Range { r: f64, max: usize },

    #[error("field became non-finite at step {step} (max |u| before the step: {last_max:e})")]
    NonFinite { step: usize, last_max: f64 },

    #[error("rational fit failed for gamma={gamma}, alpha={alpha}, beta={beta}: {reason}")]
    FitFailure {
        gamma: f64,
        alpha: usize,
        beta: usize,
        reason: String,
    },

    #[error("rational fit for gamma={gamma}, alpha={alpha}, beta={beta} has a denominator root at r={root} inside [0, {m}]")]
    DenominatorRoot {
        gamma: f64,
        alpha: usize,
        beta: usize,
        root: f64,
        m: usize,
    },

    #[error("expression is singular at gamma={gamma}, r={r}")]
    Singular { gamma: f64, r: f64 },
}

impl Error {
    /// True for errors raised while a simulation is running, as opposed to
    /// errors in the inputs that describe it.
    pub fn is_runtime(&self) -> bool {
        matches!(self, Error::NonFinite { .. })
    }
}
