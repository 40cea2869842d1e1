use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use fsm_core::fusion::FusionConfig;
use fsm_core::gateway::{Backend, GatewayConfig};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid value for {key}: {value:?}")]
    Env { key: String, value: String },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    host: Option<IpAddr>,
    port: Option<u16>,
    data_dir: Option<PathBuf>,
    registry: Option<PathBuf>,
    #[serde(default)]
    fusion: FileFusion,
    #[serde(default)]
    llm: FileLlm,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileFusion {
    correlation_window_secs: Option<i64>,
    merge_gap_secs: Option<i64>,
    resolve_on_ok: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileLlm {
    backend: Option<String>,
    base_url: Option<String>,
    model: Option<String>,
    allow_manual_egress: Option<bool>,
    timeout_secs: Option<u64>,
    max_in_flight: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub host: IpAddr,
    pub port: u16,
    pub data_dir: PathBuf,
    /// Defaults to `<data_dir>/registry.json`.
    pub registry: Option<PathBuf>,
    pub fusion: FusionConfig,
    pub gateway: GatewayConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            data_dir: PathBuf::from("data"),
            registry: None,
            fusion: FusionConfig::default(),
            gateway: GatewayConfig::default(),
        }
    }
}

fn env_parse<T: std::str::FromStr>(get: &impl Fn(&str) -> Option<String>, key: &str) -> Result<Option<T>, ConfigError> {
    match get(key) {
        None => Ok(None),
        Some(v) => v.trim().parse().map(Some).map_err(|_| ConfigError::Env { key: key.into(), value: v }),
    }
}

impl ServiceConfig {
    pub fn addr(&self) -> SocketAddr {
        SocketAddr::new(self.host, self.port)
    }

    pub fn registry_path(&self) -> PathBuf {
        self.registry.clone().unwrap_or_else(|| self.data_dir.join("registry.json"))
    }

    /// Reads `path` (if any) and applies `FSM_*` environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        Self::load_with(path, |k| std::env::var(k).ok())
    }

    pub fn load_with(path: Option<&Path>, get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let file = match path {
            None => FileConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.into(), source })?;
                toml::from_str(&text).map_err(|e| ConfigError::Parse { path: p.into(), message: e.to_string() })?
            }
        };
        let mut cfg = Self::default();
        let base = path.and_then(Path::parent).unwrap_or(Path::new(""));
        cfg.host = file.host.unwrap_or(cfg.host);
        cfg.port = file.port.unwrap_or(cfg.port);
        if let Some(d) = file.data_dir {
            cfg.data_dir = base.join(d);
        }
        cfg.registry = file.registry.map(|r| base.join(r));
        let f = file.fusion;
        cfg.fusion.correlation_window_secs = f.correlation_window_secs.unwrap_or(cfg.fusion.correlation_window_secs);
        cfg.fusion.merge_gap_secs = f.merge_gap_secs.unwrap_or(cfg.fusion.merge_gap_secs);
        cfg.fusion.resolve_on_ok = f.resolve_on_ok.unwrap_or(cfg.fusion.resolve_on_ok);

        let l = file.llm;
        if let Some(b) = l.backend {
            cfg.gateway.backend = Backend::parse(&b).ok_or_else(|| ConfigError::Parse {
                path: path.map(Path::to_path_buf).unwrap_or_default(),
                message: format!("llm.backend must be remote or stub, got {b:?}"),
            })?;
        }
        cfg.gateway.base_url = l.base_url.unwrap_or(cfg.gateway.base_url);
        cfg.gateway.model = l.model.unwrap_or(cfg.gateway.model);
        cfg.gateway.allow_manual_egress = l.allow_manual_egress.unwrap_or(cfg.gateway.allow_manual_egress);
        if let Some(t) = l.timeout_secs {
            cfg.gateway.timeout = std::time::Duration::from_secs(t);
        }
        cfg.gateway.max_in_flight = l.max_in_flight.unwrap_or(cfg.gateway.max_in_flight);

        if let Some(port) = env_parse(&get, "FSM_PORT")? {
            cfg.port = port;
        }
        if let Some(dir) = get("FSM_DATA_DIR") {
            cfg.data_dir = PathBuf::from(dir);
        }
        if let Some(w) = env_parse(&get, "FSM_CORRELATION_WINDOW_SECS")? {
            cfg.fusion.correlation_window_secs = w;
        }
        if let Some(g) = env_parse(&get, "FSM_MERGE_GAP_SECS")? {
            cfg.fusion.merge_gap_secs = g;
        }
        let env_gateway = GatewayConfig::from_lookup(&get).map_err(|e| ConfigError::Env {
            key: "FSM_LLM_BACKEND".into(),
            value: e.to_string(),
        })?;
        if get("FSM_LLM_BACKEND").is_some() {
            cfg.gateway.backend = env_gateway.backend;
        }
        if get("FSM_LLM_BASE_URL").is_some() {
            cfg.gateway.base_url = env_gateway.base_url;
        }
        if get("FSM_LLM_MODEL").is_some() {
            cfg.gateway.model = env_gateway.model;
        }
        if env_gateway.api_key.is_some() {
            cfg.gateway.api_key = env_gateway.api_key;
        }
        if get("FSM_ALLOW_MANUAL_EGRESS").is_some() {
            cfg.gateway.allow_manual_egress = env_gateway.allow_manual_egress;
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_bind_localhost() {
        let cfg = ServiceConfig::load_with(None, |_| None).unwrap();
        assert_eq!(cfg.addr().to_string(), "127.0.0.1:8080");
        assert_eq!(cfg.registry_path(), PathBuf::from("data/registry.json"));
        assert_eq!(cfg.gateway.backend, Backend::Stub);
    }

    #[test]
    fn file_then_env() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fsm.toml");
        std::fs::write(
            &path,
            "port = 9000\ndata_dir = \"d\"\n[fusion]\nmerge_gap_secs = 600\n[llm]\nbackend = \"remote\"\n",
        )
        .unwrap();
        let cfg = ServiceConfig::load_with(Some(&path), |k| match k {
            "FSM_PORT" => Some("9100".into()),
            "FSM_CORRELATION_WINDOW_SECS" => Some("60".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(cfg.port, 9100);
        assert_eq!(cfg.data_dir, dir.path().join("d"));
        assert_eq!(cfg.fusion.merge_gap_secs, 600);
        assert_eq!(cfg.fusion.correlation_window_secs, 60);
        assert_eq!(cfg.gateway.backend, Backend::Remote);
    }

    #[test]
    fn bad_values_are_reported() {
        assert!(matches!(
            ServiceConfig::load_with(None, |k| (k == "FSM_PORT").then(|| "http".into())),
            Err(ConfigError::Env { .. })
        ));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fsm.toml");
        std::fs::write(&path, "prot = 1\n").unwrap();
        assert!(matches!(ServiceConfig::load_with(Some(&path), |_| None), Err(ConfigError::Parse { .. })));
    }
}
