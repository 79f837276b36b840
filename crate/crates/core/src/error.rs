use thiserror::Error;

/// Errors raised by the link simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate LFSR seed: an all-zero register never leaves the zero state")]
    DegenerateSeed,

    #[error("unsupported PRBS register order {0}; supported orders are 7, 9, 11, 15, 23, 31")]
    UnsupportedOrder(u32),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty bit sequence")]
    EmptySequence,

    #[error("filter cutoff {cutoff_hz} Hz is not below the Nyquist frequency {nyquist_hz} Hz")]
    CutoffAboveNyquist { cutoff_hz: f64, nyquist_hz: f64 },

    #[error("waveform mismatch: {0}")]
    Mismatch(String),

    #[error("degenerate pattern: the eye needs at least two traces of each bit class")]
    DegeneratePattern,

    #[error("paper-compat margin undefined: P_R/S in dBm must be a positive ratio")]
    PaperMarginUndefined,

    #[error("Q target {q_target} is unreachable even at the minimal range (Q = {q_at_min})")]
    Unreachable { q_target: f64, q_at_min: f64 },

    #[error("unknown weather preset `{0}`; available presets: rain, fog, clear")]
    UnknownPreset(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps `self` with the name of the pipeline stage that raised it.
    pub fn at(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad user input rather than a failed run.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Stage { source, .. } => source.is_config_error(),
            Error::Config(_)
            | Error::UnknownPreset(_)
            | Error::InvalidParameter { .. }
            | Error::UnsupportedOrder(_)
            | Error::DegenerateSeed
            | Error::CutoffAboveNyquist { .. } => true,
            _ => false,
        }
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
