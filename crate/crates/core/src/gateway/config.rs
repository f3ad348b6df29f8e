//! Role → backend mapping, read from the `[backends.<role>]` tables of a
//! TOML file. `FACTSEARCH_<ROLE>_ENDPOINT` environment variables override a
//! role with a remote endpoint.
//!
//! ```toml
//! [backends.ner]
//! kind = "stub"
//! stub_seed = 7
//!
//! [backends.nli]
//! kind = "remote"
//! endpoint = "http://127.0.0.1:8101/nli"
//! timeout_ms = 10000
//! max_in_flight = 4
//! ```

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::remote::{RemoteBackend, DEFAULT_TIMEOUT};
use super::stub::StubBackend;
use super::{ClaimModel, DenseModel, Gateway, NerModel, NliModel, QuestionModel, Role};
use crate::lexical::InvertedIndex;

const DEFAULT_MAX_IN_FLIGHT: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("backend {role}: remote backends need an endpoint")]
    MissingEndpoint { role: Role },
    #[error("backend {role}: stub backends need a stub_seed")]
    MissingSeed { role: Role },
    #[error("backend {role} is not configured")]
    MissingRole { role: Role },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid backend config: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Remote,
    Stub,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stub_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_in_flight: Option<usize>,
}

impl BackendConfig {
    pub fn stub(seed: u64) -> Self {
        BackendConfig {
            kind: BackendKind::Stub,
            endpoint: None,
            stub_seed: Some(seed),
            timeout_ms: None,
            max_in_flight: None,
        }
    }

    pub fn remote(endpoint: impl Into<String>) -> Self {
        BackendConfig {
            kind: BackendKind::Remote,
            endpoint: Some(endpoint.into()),
            stub_seed: None,
            timeout_ms: None,
            max_in_flight: None,
        }
    }

    pub fn validate(&self, role: Role) -> Result<(), ConfigError> {
        match self.kind {
            BackendKind::Remote if self.endpoint.as_deref().is_none_or(str::is_empty) => {
                Err(ConfigError::MissingEndpoint { role })
            }
            BackendKind::Stub if self.stub_seed.is_none() => Err(ConfigError::MissingSeed { role }),
            _ => Ok(()),
        }
    }

    fn remote_backend(&self, role: Role) -> RemoteBackend {
        RemoteBackend::new(
            role,
            self.endpoint.clone().unwrap_or_default(),
            self.timeout_ms.map(Duration::from_millis).unwrap_or(DEFAULT_TIMEOUT),
            self.max_in_flight.unwrap_or(DEFAULT_MAX_IN_FLIGHT),
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BackendsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ner: Option<BackendConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qg: Option<BackendConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cg: Option<BackendConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense: Option<BackendConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nli: Option<BackendConfig>,
}

#[derive(Deserialize)]
struct FileWithBackends {
    #[serde(default)]
    backends: BackendsConfig,
}

impl BackendsConfig {
    pub fn all_stub(seed: u64) -> Self {
        BackendsConfig {
            ner: Some(BackendConfig::stub(seed)),
            qg: Some(BackendConfig::stub(seed)),
            cg: Some(BackendConfig::stub(seed)),
            dense: Some(BackendConfig::stub(seed)),
            nli: Some(BackendConfig::stub(seed)),
        }
    }

    /// Reads the `[backends]` table of a TOML document.
    pub fn from_toml(src: &str) -> Result<Self, ConfigError> {
        let file: FileWithBackends = toml::from_str(src)?;
        Ok(file.backends)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&src)
    }

    pub fn get(&self, role: Role) -> Option<&BackendConfig> {
        match role {
            Role::Ner => self.ner.as_ref(),
            Role::Qg => self.qg.as_ref(),
            Role::Cg => self.cg.as_ref(),
            Role::Dense => self.dense.as_ref(),
            Role::Nli => self.nli.as_ref(),
        }
    }

    pub fn set(&mut self, role: Role, cfg: BackendConfig) {
        let slot = match role {
            Role::Ner => &mut self.ner,
            Role::Qg => &mut self.qg,
            Role::Cg => &mut self.cg,
            Role::Dense => &mut self.dense,
            Role::Nli => &mut self.nli,
        };
        *slot = Some(cfg);
    }

    /// Applies `FACTSEARCH_<ROLE>_ENDPOINT` overrides from `lookup`.
    pub fn apply_env_with(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        for role in Role::ALL {
            let var = format!("FACTSEARCH_{}_ENDPOINT", role.as_str().to_uppercase());
            if let Some(endpoint) = lookup(&var).filter(|e| !e.is_empty()) {
                let mut cfg = self.get(role).cloned().unwrap_or_else(|| BackendConfig::remote(""));
                cfg.kind = BackendKind::Remote;
                cfg.endpoint = Some(endpoint);
                self.set(role, cfg);
            }
        }
    }

    pub fn apply_env(&mut self) {
        self.apply_env_with(|k| std::env::var(k).ok());
    }

    /// Builds a gateway; stub dense backends search `index`.
    pub fn build_gateway(&self, index: Option<Arc<InvertedIndex>>) -> Result<Gateway, ConfigError> {
        let mut cfgs = Vec::with_capacity(5);
        for role in Role::ALL {
            let cfg = self.get(role).ok_or(ConfigError::MissingRole { role })?;
            cfg.validate(role)?;
            cfgs.push(cfg);
        }
        let stub = |cfg: &BackendConfig| {
            let seed = cfg.stub_seed.unwrap_or_default();
            Arc::new(match &index {
                Some(idx) => StubBackend::with_index(seed, idx.clone()),
                None => StubBackend::new(seed),
            })
        };
        let ner: Arc<dyn NerModel> = match cfgs[0].kind {
            BackendKind::Stub => stub(cfgs[0]),
            BackendKind::Remote => Arc::new(cfgs[0].remote_backend(Role::Ner)),
        };
        let qg: Arc<dyn QuestionModel> = match cfgs[1].kind {
            BackendKind::Stub => stub(cfgs[1]),
            BackendKind::Remote => Arc::new(cfgs[1].remote_backend(Role::Qg)),
        };
        let cg: Arc<dyn ClaimModel> = match cfgs[2].kind {
            BackendKind::Stub => stub(cfgs[2]),
            BackendKind::Remote => Arc::new(cfgs[2].remote_backend(Role::Cg)),
        };
        let dense: Arc<dyn DenseModel> = match cfgs[3].kind {
            BackendKind::Stub => stub(cfgs[3]),
            BackendKind::Remote => Arc::new(cfgs[3].remote_backend(Role::Dense)),
        };
        let nli: Arc<dyn NliModel> = match cfgs[4].kind {
            BackendKind::Stub => stub(cfgs[4]),
            BackendKind::Remote => Arc::new(cfgs[4].remote_backend(Role::Nli)),
        };
        Ok(Gateway::new(ner, qg, cg, dense, nli))
    }
}
