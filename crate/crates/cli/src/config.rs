//! Optional TOML run configuration. Sections follow the library modules;
//! every key can be overridden on the command line.
//!
//! ```toml
//! [cli]
//! predictors = "x.csv"
//! responses = "y.csv"
//! method = "rfopg"
//! d0 = 2
//!
//! [kernels]
//! family = "laplacian"
//! gamma = "auto"
//!
//! [inverse_ensemble]
//! slices = 8
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// A number or the string `"auto"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AutoOr<T> {
    Value(T),
    Text(String),
}

impl<T: ToString> AutoOr<T> {
    pub fn as_arg(&self) -> String {
        match self {
            AutoOr::Value(v) => v.to_string(),
            AutoOr::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliSection {
    pub predictors: Option<PathBuf>,
    pub responses: Option<PathBuf>,
    pub kind: Option<String>,
    pub truth: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub method: Option<String>,
    pub d0: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub family: Option<String>,
    pub gamma: Option<AutoOr<f64>>,
    pub metric: Option<String>,
    pub allow_indefinite: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentSection {
    pub iht_r: Option<usize>,
    pub phd_ranking: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InverseSection {
    pub slices: Option<AutoOr<usize>>,
    pub scheme: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForwardSection {
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub model: Option<String>,
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub m: Option<usize>,
    pub noise: Option<f64>,
    pub reps: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub cli: CliSection,
    pub kernels: KernelSection,
    pub moment_ensemble: MomentSection,
    pub inverse_ensemble: InverseSection,
    pub forward_ensemble: ForwardSection,
    pub simulate: SimulateSection,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let cfg: RunConfig = toml::from_str(
            r#"
            [cli]
            method = "fsir"
            d0 = 2
            [kernels]
            gamma = 0.5
            [inverse_ensemble]
            slices = "auto"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.cli.method.as_deref(), Some("fsir"));
        assert_eq!(cfg.kernels.gamma.unwrap().as_arg(), "0.5");
        assert_eq!(cfg.inverse_ensemble.slices.unwrap().as_arg(), "auto");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[cli]\nmethd = \"fols\"").is_err());
    }
}
