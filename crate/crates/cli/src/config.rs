use std::path::{Path, PathBuf};

use opspace::config::{Budget, Tolerances};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub budgets: Budget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            tolerances: Tolerances::default(),
            budgets: Budget::default(),
            output: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = crate::read(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.tolerances
            .validate()
            .and_then(|_| self.budgets.validate())
            .map_err(|e| CliError::Parse(format!("config: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_is_required() {
        assert!(serde_json::from_str::<RunConfig>("{}").is_err());
        let c: RunConfig = serde_json::from_str(r#"{"seed": 3}"#).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.budgets, Budget::default());
    }

    #[test]
    fn rejects_nonpositive_tolerance_and_zero_budget() {
        let mut c = RunConfig::default();
        c.tolerances.verdict = 0.0;
        assert!(matches!(c.validate(), Err(CliError::Parse(_))));
        let mut c = RunConfig::default();
        c.budgets.restarts = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn unknown_fields_are_errors() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"seed": 1, "sed": 2}"#).is_err());
    }
}
