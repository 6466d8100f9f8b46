use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::Result;

/// Three-valued verdict. `Unknown` is produced when an exploration bound,
/// candidate cap or cancellation cut a decision short; it is never folded
/// into `Yes` or `No`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }

    /// Lift a fallible boolean decision. Inconclusive errors become
    /// `Unknown`; any other error is passed through.
    pub fn decide(r: Result<bool>) -> Result<Self> {
        match r {
            Ok(b) => Ok(Self::from_bool(b)),
            Err(e) if e.is_inconclusive() => Ok(Verdict::Unknown),
            Err(e) => Err(e),
        }
    }

    pub fn is_decided(self) -> bool {
        self != Verdict::Unknown
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Verdict::Yes => Some(true),
            Verdict::No => Some(false),
            Verdict::Unknown => None,
        }
    }

    pub fn negate(self) -> Self {
        match self {
            Verdict::Yes => Verdict::No,
            Verdict::No => Verdict::Yes,
            Verdict::Unknown => Verdict::Unknown,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Unknown => "unknown",
        })
    }
}

/// Map an inconclusive error to `None`, keeping hard errors.
pub(crate) fn inconclusive_to_none<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_inconclusive() => Ok(None),
        Err(e) => Err(e),
    }
}
