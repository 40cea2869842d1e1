//! Model access: chat completion and frame captioning behind one handle.
//!
//! The `Stub` backend is pure and deterministic; the `Remote` backend speaks
//! the OpenAI-style `/v1/chat/completions` protocol that most local model
//! servers expose.

mod prompt;
mod remote;
mod stub;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::Semaphore;

pub use prompt::{render_prompt, required_slots, Slot, Slots};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GatewayError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("backend timed out")]
    Timeout,
    #[error("malformed backend reply: {0}")]
    MalformedBackendReply(String),
    #[error("no sidecar at {0}")]
    NoSidecar(PathBuf),
    #[error("unparsable caption reply: {0}")]
    UnparsableReply(String),
    #[error("missing slot {name}")]
    MissingSlot { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Backend {
    Remote,
    Stub,
}

impl Backend {
    pub fn parse(text: &str) -> Option<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "remote" => Some(Self::Remote),
            "stub" => Some(Self::Stub),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    Availability,
    FaultStatus,
    CauseAnalysis,
    ComprehensiveReport,
    PreventionAdvice,
}

impl TemplateId {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Availability => "availability",
            Self::FaultStatus => "fault_status",
            Self::CauseAnalysis => "cause_analysis",
            Self::ComprehensiveReport => "comprehensive_report",
            Self::PreventionAdvice => "prevention_advice",
        }
    }
}

/// Where a context block's text came from. Manual text is withheld from
/// remote backends unless egress is explicitly allowed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    #[default]
    Telemetry,
    Manual,
}

/// A labeled piece of evidence. The label is the provenance id (event,
/// incident, device or manual entry) the model is asked to cite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBlock {
    pub label: String,
    pub text: String,
    #[serde(default)]
    pub origin: Origin,
}

impl ContextBlock {
    pub fn telemetry(label: impl Into<String>, text: impl Into<String>) -> Self {
        Self { label: label.into(), text: text.into(), origin: Origin::Telemetry }
    }

    pub fn manual(label: impl Into<String>, text: impl Into<String>) -> Self {
        Self { label: label.into(), text: text.into(), origin: Origin::Manual }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub template: TemplateId,
    pub system_prompt: String,
    pub user_prompt: String,
    pub context_blocks: Vec<ContextBlock>,
    pub max_tokens: u32,
    pub temperature: f64,
}

impl CompletionRequest {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.system_prompt.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("empty system_prompt".into()));
        }
        if self.user_prompt.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("empty user_prompt".into()));
        }
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(GatewayError::InvalidRequest("temperature outside [0, 1]".into()));
        }
        if let Some(b) = self.context_blocks.iter().find(|b| b.label.trim().is_empty()) {
            return Err(GatewayError::InvalidRequest(format!("unlabeled context block: {}", b.text)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    pub backend: Backend,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionResult {
    pub caption: String,
    pub overlay_timestamp_text: Option<String>,
    pub anomaly: bool,
}

#[derive(Debug, Clone)]
pub enum ImageInput {
    /// A frame on disk; the stub reads `<path>.meta.json` next to it.
    Path(PathBuf),
    Bytes(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatewayConfig {
    pub backend: Backend,
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub allow_manual_egress: bool,
    pub timeout: Duration,
    pub max_in_flight: usize,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Stub,
            base_url: "http://127.0.0.1:11434".into(),
            model: "llama3.2-vision".into(),
            api_key: None,
            allow_manual_egress: false,
            timeout: Duration::from_secs(30),
            max_in_flight: 4,
        }
    }
}

impl GatewayConfig {
    /// Defaults overridden by `FSM_LLM_*` and `FSM_ALLOW_MANUAL_EGRESS`.
    pub fn from_env() -> Result<Self, GatewayError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, GatewayError> {
        let mut cfg = Self::default();
        if let Some(b) = get("FSM_LLM_BACKEND") {
            cfg.backend = Backend::parse(&b)
                .ok_or_else(|| GatewayError::InvalidRequest(format!("FSM_LLM_BACKEND={b}")))?;
        }
        if let Some(url) = get("FSM_LLM_BASE_URL") {
            cfg.base_url = url;
        }
        if let Some(model) = get("FSM_LLM_MODEL") {
            cfg.model = model;
        }
        cfg.api_key = get("FSM_LLM_API_KEY").filter(|k| !k.is_empty());
        if let Some(flag) = get("FSM_ALLOW_MANUAL_EGRESS") {
            cfg.allow_manual_egress = matches!(flag.trim(), "1" | "true" | "yes");
        }
        Ok(cfg)
    }
}

/// Cheap to clone; clones share the in-flight limit.
#[derive(Debug, Clone)]
pub struct Gateway {
    config: Arc<GatewayConfig>,
    client: reqwest::Client,
    permits: Arc<Semaphore>,
}

impl Gateway {
    pub fn new(config: GatewayConfig) -> Self {
        let client = reqwest::Client::builder()
            .timeout(config.timeout)
            .build()
            .expect("http client builds");
        let permits = Arc::new(Semaphore::new(config.max_in_flight.max(1)));
        Self { config: Arc::new(config), client, permits }
    }

    pub fn stub() -> Self {
        Self::new(GatewayConfig::default())
    }

    pub fn backend(&self) -> Backend {
        self.config.backend
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub async fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        req.validate()?;
        match self.config.backend {
            Backend::Stub => Ok(CompletionResponse {
                text: stub::complete(req),
                backend: Backend::Stub,
                latency_ms: 0,
            }),
            Backend::Remote => {
                let _permit = self.permits.acquire().await.expect("semaphore never closed");
                let started = Instant::now();
                let text = remote::complete(&self.client, &self.config, req).await?;
                Ok(CompletionResponse {
                    text,
                    backend: Backend::Remote,
                    latency_ms: started.elapsed().as_millis() as u64,
                })
            }
        }
    }

    pub async fn caption_image(&self, input: &ImageInput) -> Result<CaptionResult, GatewayError> {
        if let ImageInput::Bytes(b) = input {
            if b.is_empty() {
                return Err(GatewayError::InvalidRequest("empty image".into()));
            }
        }
        let result = match self.config.backend {
            Backend::Stub => stub::caption(input)?,
            Backend::Remote => {
                let bytes = match input {
                    ImageInput::Bytes(b) => b.clone(),
                    ImageInput::Path(p) => std::fs::read(p)
                        .map_err(|e| GatewayError::InvalidRequest(format!("{}: {e}", p.display())))?,
                };
                let _permit = self.permits.acquire().await.expect("semaphore never closed");
                remote::caption(&self.client, &self.config, &bytes).await?
            }
        };
        if let Some(text) = &result.overlay_timestamp_text {
            crate::ingest::parse_overlay_timestamp(text)
                .map_err(|_| GatewayError::UnparsableReply(format!("overlay timestamp {text:?}")))?;
        }
        Ok(result)
    }
}
