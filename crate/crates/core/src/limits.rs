//! Exploration limits, cooperative cancellation and the data-parallel
//! execution switch.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};

pub const DEFAULT_STATE_BOUND: usize = 1_000_000;
pub const DEFAULT_CANDIDATE_CAP: usize = 1_000_000;

/// Shared flag checked by long-running searches.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::Relaxed);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }
}

/// How batch work (candidate distributions, corpus sweeps) is evaluated.
/// `Parallel` degrades to sequential when the `parallel` feature is off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Debug, Clone)]
pub struct Limits {
    /// Maximum number of markings any single exploration may visit.
    pub state_bound: usize,
    /// Maximum number of canonical distributions enumerated per search.
    pub candidate_cap: usize,
    pub cancel: Option<CancelToken>,
    pub execution: Execution,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            state_bound: DEFAULT_STATE_BOUND,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
            cancel: None,
            execution: Execution::default(),
        }
    }
}

impl Limits {
    pub fn with_state_bound(state_bound: usize) -> Self {
        Self {
            state_bound,
            ..Self::default()
        }
    }

    pub fn sequential(mut self) -> Self {
        self.execution = Execution::Sequential;
        self
    }

    pub fn with_cancel(mut self, token: CancelToken) -> Self {
        self.cancel = Some(token);
        self
    }

    pub(crate) fn check_cancelled(&self) -> Result<()> {
        match &self.cancel {
            Some(t) if t.is_cancelled() => Err(Error::Cancelled),
            _ => Ok(()),
        }
    }

    pub(crate) fn check_states(&self, visited: usize) -> Result<()> {
        if visited > self.state_bound {
            return Err(Error::StateBoundExceeded {
                bound: self.state_bound,
            });
        }
        if visited.is_multiple_of(1024) {
            self.check_cancelled()?;
        }
        Ok(())
    }
}

/// Order-preserving map over a batch of independent work items.
pub fn par_map<T, R, F>(execution: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if execution == Execution::Parallel {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = execution;
    items.iter().map(f).collect()
}

/// First item (in input order) for which `f` yields `Some`. The parallel
/// path returns the same item as the sequential one.
pub fn par_find_first<T, R, F>(execution: Execution, items: &[T], f: F) -> Option<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Option<R> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if execution == Execution::Parallel {
        use rayon::prelude::*;
        return items.par_iter().find_map_first(f);
    }
    let _ = execution;
    items.iter().find_map(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let xs: Vec<u32> = (0..500).collect();
        let a = par_map(Execution::Parallel, &xs, |x| x * 3);
        let b = par_map(Execution::Sequential, &xs, |x| x * 3);
        assert_eq!(a, b);
        let fa = par_find_first(Execution::Parallel, &xs, |&x| (x % 97 == 96).then_some(x));
        let fb = par_find_first(Execution::Sequential, &xs, |&x| (x % 97 == 96).then_some(x));
        assert_eq!(fa, Some(96));
        assert_eq!(fa, fb);
    }

    #[test]
    fn cancellation_is_observed() {
        let token = CancelToken::new();
        let limits = Limits::default().with_cancel(token.clone());
        assert!(limits.check_cancelled().is_ok());
        token.cancel();
        assert_eq!(limits.check_cancelled(), Err(Error::Cancelled));
    }

    #[test]
    fn state_bound_is_inclusive() {
        let limits = Limits::with_state_bound(3);
        assert!(limits.check_states(3).is_ok());
        assert!(matches!(
            limits.check_states(4),
            Err(Error::StateBoundExceeded { bound: 3 })
        ));
    }
}
