use thiserror::Error;

/// Errors raised by the simulation, analysis and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A model or scaling parameter violates one of the standing hypotheses.
    /// `label` names the hypothesis (e.g. `H.2`).
    #[error("{label}: {message}")]
    Hypothesis { label: &'static str, message: String },

    #[error("grid or time axis mismatch: {0}")]
    AxisMismatch(String),

    /// Integration produced a non-finite or runaway state.
    #[error("blow-up at time index {time_index} (t = {time}): |u| reached {value:e}")]
    BlowUp {
        time_index: usize,
        time: f64,
        value: f64,
    },

    /// The noise coefficient along the reference path drops below the
    /// configured floor, so the control cannot be recovered by inversion.
    #[error("degenerate noise: min |sigma(u0)| = {min_sigma:e} is below the floor {floor:e}")]
    DegenerateNoise { min_sigma: f64, floor: f64 },

    /// Target path does not start at zero; it lies outside the reachable set
    /// of the skeleton equation and its rate is +infinity.
    #[error("inadmissible target: |g(0)| = {0:e} (rate is +inf)")]
    InadmissibleTarget(f64),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("study precondition failed: {0}")]
    Study(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
