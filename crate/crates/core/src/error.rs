use thiserror::Error;

/// Errors raised by the analyses.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("state bound of {bound} markings exceeded")]
    StateBoundExceeded { bound: usize },

    #[error("{count} candidate distributions exceed the cap of {cap}")]
    CandidateCapExceeded { count: u128, cap: usize },

    #[error("analysis cancelled")]
    Cancelled,

    #[error("step is not enabled at the given marking")]
    StepNotEnabled,

    #[error("marking is not stable: silent transition {transition} is enabled")]
    NotStable { transition: String },

    #[error("net is not contact-free: firing {transition} at {{{}}} would put a second token on a place", marking.join(", "))]
    ContactViolation {
        transition: String,
        marking: Vec<String>,
    },

    #[error("operation requires a plain net (injective labelling, no tau)")]
    NotPlain,

    #[error("operation requires a net without tau-labelled transitions")]
    HasTau,

    #[error("distribution covers {found} elements but the net has {expected}")]
    DistributionMismatch { expected: usize, found: usize },

    #[error("unknown element {0:?}")]
    UnknownElement(String),
}

impl Error {
    /// Errors that stem from a resource limit rather than from the input.
    /// Verdicts hit by these are reported as unknown.
    pub fn is_inconclusive(&self) -> bool {
        matches!(
            self,
            Error::StateBoundExceeded { .. } | Error::CandidateCapExceeded { .. } | Error::Cancelled
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
