use std::path::Path;

use hideseek::backend::BackendKind;
use hideseek::{Error, HideStrategy, RecognizerConfig, Result, SeekConfig};
use serde::{Deserialize, Serialize};

pub const DEFAULT_ENTITY_HEADER: &str = "x-has-entities";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewayConfig {
    #[serde(default = "default_listen")]
    pub listen: String,
    pub upstream: BackendKind,
    /// With hiding off the gateway forwards bodies untouched.
    #[serde(default = "yes")]
    pub hiding: bool,
    #[serde(default = "yes")]
    pub hide_system: bool,
    #[serde(default = "default_strategy")]
    pub strategy: HideStrategy,
    #[serde(default)]
    pub seed: u64,
    pub numeric_jitter: Option<f64>,
    pub date_shift_days: Option<i64>,
    #[serde(default)]
    pub recognizer: RecognizerConfig,
    #[serde(default)]
    pub seek: SeekConfig,
    #[serde(default = "default_header")]
    pub entity_header: String,
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}

fn yes() -> bool {
    true
}

fn default_strategy() -> HideStrategy {
    HideStrategy::generative()
}

fn default_header() -> String {
    DEFAULT_ENTITY_HEADER.into()
}

impl GatewayConfig {
    pub fn new(upstream: BackendKind) -> Self {
        GatewayConfig {
            listen: default_listen(),
            upstream,
            hiding: true,
            hide_system: true,
            strategy: default_strategy(),
            seed: 0,
            numeric_jitter: None,
            date_shift_days: None,
            recognizer: RecognizerConfig::default(),
            seek: SeekConfig::default(),
            entity_header: default_header(),
        }
    }

    pub fn from_toml(src: &str) -> Result<Self> {
        let cfg: GatewayConfig = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&src)
    }

    pub fn validate(&self) -> Result<()> {
        self.recognizer.validate()?;
        self.seek.validate()?;
        if self.entity_header.parse::<axum::http::HeaderName>().is_err() {
            return Err(Error::Config(format!("bad header name {:?}", self.entity_header)));
        }
        if let Some(j) = self.numeric_jitter {
            if !(j > 0.0 && j < 1.0) {
                return Err(Error::Config(format!("numeric_jitter must be in (0, 1), got {j}")));
            }
        }
        if let Some(d) = self.date_shift_days {
            if d < 1 {
                return Err(Error::Config(format!("date_shift_days must be positive, got {d}")));
            }
        }
        Ok(())
    }
}
