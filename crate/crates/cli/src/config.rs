use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hideseek::backend::BackendKind;
use hideseek::{Error, HideStrategy, RecognizerConfig, Result, SeekConfig};
use hideseek_gateway::GatewayConfig;
use serde::Deserialize;

/// Settings shared by every subcommand; flags override them.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub seed: Option<u64>,
    pub strategy: Option<HideStrategy>,
    pub recognizer: RecognizerConfig,
    pub seek: SeekConfig,
    /// Upstream used by `--backend remote`.
    pub remote: Option<BackendKind>,
    pub target_language: Option<String>,
    pub lexicon: Option<PathBuf>,
    pub keywords: Option<BTreeMap<String, Vec<String>>>,
    pub gateway: Option<GatewayConfig>,
}

impl CliConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(CliConfig::default());
        };
        let src = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cfg: CliConfig = toml::from_str(&src).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.recognizer.validate()?;
        cfg.seek.validate()?;
        if let Some(g) = &cfg.gateway {
            g.validate()?;
        }
        Ok(cfg)
    }
}
