//! Tolerances and search budgets.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Width below which an interval counts as exact.
    pub exactness: f64,
    /// Tolerance for reported numeric identities.
    pub report: f64,
    /// Slack used by three-valued verdicts.
    pub verdict: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exactness: 1e-10,
            report: 1e-8,
            verdict: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if self.exactness > 0.0 && self.report > 0.0 && self.verdict > 0.0 {
            Ok(())
        } else {
            invalid("all tolerances must be positive")
        }
    }
}

/// Work limits for randomized searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub restarts: usize,
    pub iterations: usize,
    pub level_cap: usize,
    pub depth: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            restarts: 32,
            iterations: 200,
            level_cap: 3,
            depth: 40,
        }
    }
}

impl Budget {
    /// Budget used inside norm oracles that run a search per evaluation.
    pub fn oracle() -> Self {
        Budget {
            restarts: 6,
            iterations: 60,
            ..Budget::default()
        }
    }

    pub fn light() -> Self {
        Budget {
            restarts: 8,
            iterations: 80,
            ..Budget::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts >= 1 && self.iterations >= 1 && self.level_cap >= 1 && self.depth >= 1 {
            Ok(())
        } else {
            invalid("all budgets must be at least 1")
        }
    }
}

/// Seeded search settings carried by spaces whose norms are variational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Search {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for Search {
    fn default() -> Self {
        Search {
            restarts: 6,
            iterations: 60,
            seed: 0,
        }
    }
}

impl Search {
    pub fn from_budget(b: &Budget, seed: u64) -> Self {
        Search {
            restarts: b.restarts,
            iterations: b.iterations,
            seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}
