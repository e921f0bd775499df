use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the interval on which the operation is defined.
    #[error("{name} = {value} is outside {bound}")]
    Domain {
        name: &'static str,
        value: f64,
        bound: &'static str,
    },

    #[error("gamma(x) diverges at x = 0")]
    Divergence,

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("non-finite noise increment {0}")]
    NonFiniteNoise(f64),

    #[error("explicit scheme unstable: {steps} steps requested, at least {required} required")]
    Unstable { steps: usize, required: usize },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("pseudo-time iteration did not converge after {iterations} iterations (last update {last_update:e})")]
    NoConvergence { iterations: usize, last_update: f64 },

    #[error("{censored} of {total} trajectories hit the cutoff time {cutoff}; raise the cutoff")]
    Censored {
        censored: usize,
        total: usize,
        cutoff: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("policy table: {0}")]
    PolicyTable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, bound: &'static str) -> Self {
        Error::Domain { name, value, bound }
    }
}
