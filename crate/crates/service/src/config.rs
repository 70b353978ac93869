use std::path::Path;

use serde::{Deserialize, Serialize};
use tripgate::matcher::MatchParams;

use crate::ServiceError;

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

fn default_bind() -> String {
    DEFAULT_BIND.to_string()
}

/// Service configuration, read from TOML:
///
/// ```toml
/// bind = "127.0.0.1:8080"
///
/// [matching]
/// emission_sigma_m = 15.0
///
/// [[corpora]]
/// name = "cs1"
/// network = "fixtures/case-study-1/network.geojson"
/// trips = "fixtures/case-study-1/trips.csv"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    #[serde(default)]
    pub matching: MatchParams,
    #[serde(default)]
    pub corpora: Vec<CorpusConfig>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: default_bind(),
            matching: MatchParams::default(),
            corpora: Vec::new(),
        }
    }
}

/// One corpus: a network (fixture name or GeoJSON path), a trips file and,
/// optionally, station counts and a pre-matched paths file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub name: String,
    pub network: String,
    pub trips: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched: Option<String>,
}

impl ServiceConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ServiceError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))?;
        cfg.matching.validate().map_err(ServiceError::Config)?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ServiceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}
