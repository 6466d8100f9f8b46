//! Executable forms of the correctness arguments for the two
//! implementation constructions. Each check sweeps a finite state space
//! exhaustively and either passes or names a concrete counterexample.
//!
//! [`alpha`] covers the asynchronous implementation: the shift-back map
//! `τ^←`, the invariant `α` and the distance `d`. [`beta`] covers the
//! transition-controlled-choice implementation: `τ^⇐`, `τ^⟸`, its own
//! distance and the invariant `β`, and the five clauses that make `τ^⇐`
//! a branching bisimulation.

mod alpha;
mod beta;

pub use alpha::AlphaContext;
pub use beta::{BetaClause, BetaContext};

use serde::Serialize;

use crate::distribution::Distribution;
use crate::error::Result;
use crate::limits::Limits;
use crate::net::LabelledNet;
use crate::reach::validate;
use crate::semantics::readiness_equivalent;
use crate::verdict::Verdict;

/// A concrete reason a check failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    /// Which clause or property broke, e.g. `"clause 2"` or `"beta 5"`.
    pub clause: String,
    /// The marking at which it broke, by place name.
    pub marking: Vec<String>,
    pub detail: String,
}

/// Result of one exhaustive check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    /// Number of markings, steps or pairs examined.
    pub checked: usize,
    pub failure: Option<Failure>,
    /// Set when the check does not apply to the input.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

impl CheckOutcome {
    pub(crate) fn new(name: &'static str) -> Self {
        CheckOutcome {
            name,
            checked: 0,
            failure: None,
            skipped: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub(crate) fn fail(mut self, clause: impl Into<String>, marking: Vec<String>, detail: impl Into<String>) -> Self {
        self.failure = Some(Failure {
            clause: clause.into(),
            marking,
            detail: detail.into(),
        });
        self
    }
}

/// One line of a [`verify`] report.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyEntry {
    pub check: String,
    pub verdict: Verdict,
    pub checked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl VerifyEntry {
    fn from_outcome(prefix: &str, r: Result<CheckOutcome>) -> Result<Self> {
        match r {
            Ok(o) => Ok(VerifyEntry {
                check: format!("{prefix}{}", o.name),
                verdict: Verdict::from_bool(o.passed()),
                checked: o.checked,
                failure: o.failure,
                note: o.skipped,
            }),
            Err(e) if e.is_inconclusive() => Ok(VerifyEntry {
                check: prefix.trim_end_matches('/').to_string(),
                verdict: Verdict::Unknown,
                checked: 0,
                failure: None,
                note: Some(e.to_string()),
            }),
            Err(e) => Err(e),
        }
    }

    fn unknown(check: String, note: String) -> Self {
        VerifyEntry {
            check,
            verdict: Verdict::Unknown,
            checked: 0,
            failure: None,
            note: Some(note),
        }
    }
}

/// Runs every oracle on `net`: the asynchronous-implementation checks
/// for the finest distribution, and the TCC checks followed by a
/// cross-check of the TCC verdict against the readiness-equivalence
/// decision procedure. Resource limits turn individual entries into
/// `Unknown` instead of failing the whole report.
pub fn verify(net: &LabelledNet, limits: &Limits) -> Result<Vec<VerifyEntry>> {
    let report = validate(net, limits)?;
    if report.verdict != Verdict::Yes {
        let why = match &report.incomplete {
            Some(s) => s.clone(),
            None => "net is not a valid contact-free net".to_string(),
        };
        return Ok(vec![VerifyEntry {
            check: "validate".into(),
            verdict: report.verdict,
            checked: report.states,
            failure: None,
            note: Some(why),
        }]);
    }
    let mut out = Vec::new();

    let d = Distribution::finest(net);
    match AlphaContext::new(net, &d, limits) {
        Ok(ctx) => {
            let checks: [fn(&AlphaContext) -> Result<CheckOutcome>; 6] = [
                AlphaContext::check_alpha_characterization,
                AlphaContext::check_d_descent,
                AlphaContext::check_visible_projection,
                AlphaContext::check_weak_traces,
                AlphaContext::check_step_simulation,
                AlphaContext::check_normal_form_menus,
            ];
            for check in checks {
                out.push(VerifyEntry::from_outcome("async/", check(&ctx))?);
            }
        }
        Err(e) if e.is_inconclusive() => out.push(VerifyEntry::unknown("async".into(), e.to_string())),
        Err(e) => return Err(e),
    }

    match BetaContext::new(net, limits) {
        Ok(ctx) => {
            out.push(VerifyEntry::from_outcome("tcc/", ctx.check_beta_sweep())?);
            let clauses = VerifyEntry::from_outcome("tcc/", ctx.check_branching_clauses())?;
            let passed = clauses.verdict == Verdict::Yes;
            out.push(clauses);
            if passed {
                let eq = Verdict::decide(
                    readiness_equivalent(ctx.source(), &ctx.tcc().net, limits).map(|e| e.is_equivalent()),
                )?;
                out.push(VerifyEntry {
                    check: "tcc/equivalence_cross_check".into(),
                    verdict: eq,
                    checked: 1,
                    failure: None,
                    note: None,
                });
            }
        }
        Err(e) if e.is_inconclusive() => out.push(VerifyEntry::unknown("tcc".into(), e.to_string())),
        Err(e) => return Err(e),
    }
    Ok(out)
}
