use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use orsched_core::{Clock, SolverConfig};
use serde::{Deserialize, Serialize};

/// Wall-clock time since construction, with optional cancellation.
#[derive(Debug, Clone)]
pub struct WallClock {
    start: Instant,
    cancel: Option<Arc<AtomicBool>>,
}

impl WallClock {
    pub fn start() -> Self {
        Self {
            start: Instant::now(),
            cancel: None,
        }
    }

    pub fn with_cancel(cancel: Arc<AtomicBool>) -> Self {
        Self {
            start: Instant::now(),
            cancel: Some(cancel),
        }
    }
}

impl Clock for WallClock {
    fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn cancelled(&self) -> bool {
        self.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed))
    }
}

/// What stops a search: elapsed seconds, or an iteration count for
/// machine-independent, reproducible runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Seconds(f64),
    Iterations(u64),
}

impl Budget {
    pub fn config(self, seed: u64) -> SolverConfig {
        match self {
            Budget::Seconds(s) => SolverConfig {
                time_limit: s,
                seed,
                ..SolverConfig::default()
            },
            Budget::Iterations(n) => SolverConfig::iterations(seed, n),
        }
    }
}

impl std::fmt::Display for Budget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Budget::Seconds(s) => write!(f, "{s} s"),
            Budget::Iterations(n) => write!(f, "{n} iterations"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancellation_is_observed() {
        let flag = Arc::new(AtomicBool::new(false));
        let clock = WallClock::with_cancel(flag.clone());
        assert!(!clock.cancelled());
        flag.store(true, Ordering::Relaxed);
        assert!(clock.cancelled());
        assert!(!WallClock::start().cancelled());
    }

    #[test]
    fn iteration_budgets_ignore_time() {
        let c = Budget::Iterations(500).config(7);
        assert_eq!(c.max_iterations, Some(500));
        assert!(c.time_limit.is_infinite());
        assert_eq!(Budget::Seconds(3.0).config(1).time_limit, 3.0);
    }
}
