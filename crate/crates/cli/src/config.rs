//! Optional TOML job file. Keys mirror the long flag names; flags given on
//! the command line win over the file, and the file wins over the defaults.
//!
//! ```toml
//! schema = "builtin:dataset2"
//! algorithm = ["apriori", "faster"]
//! min-support = 0.7
//! exception-range = [0.2, 0.4]
//! seed = 7
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

impl OneOrMany {
    pub fn into_vec(self) -> Vec<String> {
        match self {
            OneOrMany::One(s) => vec![s],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct JobConfig {
    pub input: Option<Vec<PathBuf>>,
    pub schema: Option<String>,
    pub target: Option<String>,
    pub algorithm: Option<OneOrMany>,
    pub model: Option<OneOrMany>,
    pub min_support: Option<f64>,
    pub min_confidence: Option<f64>,
    pub min_cpir: Option<f64>,
    pub min_prob: Option<f64>,
    pub exception_range: Option<(f64, f64)>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub folds: Option<usize>,
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<JobConfig, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}
