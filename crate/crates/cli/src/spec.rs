use std::path::Path;

use anyhow::{Context, Result};
use nmpg::problems::BuiltinProblem;
use nmpg::SolverConfig;
use serde::{Deserialize, Serialize};

/// A solve request: which built-in problem and which solver settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub problem: BuiltinProblem,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl RunSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read spec {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("malformed spec {}", path.display()))
    }
}
