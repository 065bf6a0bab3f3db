//! HTTP gateway to model endpoints: typed wire payloads, an on-disk response
//! cache, retries with deterministic jitter, per-endpoint rate limiting and
//! concurrency bounds, plus a mock server for offline development.

mod cache;
mod client;
pub mod mock;
mod prompts;
mod wire;

pub use cache::{CacheEntry, ResponseCache};
pub use client::{
    BlockingGateway, CachedResponse, ChatCompletion, Gateway, GatewayOptions, HeadlineBatch,
};
pub use prompts::{headline_prompt, split_headlines, PromptVariant, DEFAULT_FRAME_TEMPLATE};
pub use wire::{
    cache_key, ChatMessage, ChatRequest, ChatResponse, ClassifyRequest, ClassifyResponse,
    NerEntity, NerRequest, NerResponse, SentimentRequest, SentimentResponse, STANCE_LABELS,
};

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::model::ModelError;

/// What kind of request an endpoint serves; fixes the route and payload
/// shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndpointKind {
    Chat,
    Classifier,
    Ner,
    Sentiment,
}

impl EndpointKind {
    pub fn route(self) -> &'static str {
        match self {
            EndpointKind::Chat => "/chat",
            EndpointKind::Classifier => "/classify",
            EndpointKind::Ner => "/ner",
            EndpointKind::Sentiment => "/sentiment",
        }
    }
}

/// One configured upstream endpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndpointProfile {
    pub name: String,
    pub base_url: Url,
    pub kind: EndpointKind,
    /// Model identifier sent in chat payloads; defaults to the endpoint name.
    #[serde(default)]
    pub model: Option<String>,
    /// Environment variable holding the bearer token. Unset means the
    /// endpoint needs no auth; set but missing from the environment is an
    /// error surfaced before any request goes out.
    #[serde(default)]
    pub auth_env_var: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_requests_per_minute")]
    pub requests_per_minute: u32,
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_max_retries() -> u32 {
    3
}

fn default_requests_per_minute() -> u32 {
    600
}

impl EndpointProfile {
    pub fn new(name: &str, base_url: Url, kind: EndpointKind) -> Self {
        EndpointProfile {
            name: name.to_string(),
            base_url,
            kind,
            model: None,
            auth_env_var: None,
            timeout_ms: default_timeout_ms(),
            max_retries: default_max_retries(),
            requests_per_minute: default_requests_per_minute(),
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.name.trim().is_empty() {
            return Err(GatewayError::InvalidEndpoint(
                "endpoint name is empty".to_string(),
            ));
        }
        match self.base_url.scheme() {
            "http" | "https" => {}
            other => {
                return Err(GatewayError::InvalidEndpoint(format!(
                    "endpoint {}: unsupported scheme {other:?}",
                    self.name
                )));
            }
        }
        if self.timeout_ms == 0 {
            return Err(GatewayError::InvalidEndpoint(format!(
                "endpoint {}: timeout must be positive",
                self.name
            )));
        }
        if self.requests_per_minute == 0 {
            return Err(GatewayError::InvalidEndpoint(format!(
                "endpoint {}: requests_per_minute must be at least 1",
                self.name
            )));
        }
        Ok(())
    }

    /// Model identifier recorded in responses and sent in chat payloads.
    pub fn model_id(&self) -> &str {
        self.model.as_deref().unwrap_or(&self.name)
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }
}

/// Decoding parameters for generation endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            temperature: 0.0,
            top_p: 1.0,
            max_tokens: 150,
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if !self.temperature.is_finite() || !(0.0..=2.0).contains(&self.temperature) {
            return Err(GatewayError::InvalidEndpoint(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if !self.top_p.is_finite() || self.top_p <= 0.0 || self.top_p > 1.0 {
            return Err(GatewayError::InvalidEndpoint(format!(
                "top_p {} outside (0, 1]",
                self.top_p
            )));
        }
        if self.max_tokens == 0 {
            return Err(GatewayError::InvalidEndpoint(
                "max_tokens must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// Errors raised by the gateway.
#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("endpoint {0:?} is not configured")]
    UnknownEndpoint(String),
    #[error("endpoint {endpoint}: auth variable {env_var} is not set")]
    AuthMissing { endpoint: String, env_var: String },
    #[error("endpoint {endpoint}: timed out after {attempts} attempts")]
    Timeout { endpoint: String, attempts: u32 },
    #[error("endpoint {endpoint}: upstream status {status} after {attempts} attempts: {detail}")]
    Upstream {
        endpoint: String,
        status: u16,
        attempts: u32,
        detail: String,
    },
    #[error("endpoint {endpoint}: transport error: {detail}")]
    Transport { endpoint: String, detail: String },
    #[error("endpoint {endpoint}: response not cached and offline mode is on")]
    OfflineMiss { endpoint: String },
    #[error("classifier returned labels {found:?}, expected the four canonical stances")]
    LabelMismatch { found: Vec<String> },
    #[error("invalid payload from {endpoint}: {detail}")]
    InvalidPayload { endpoint: String, detail: String },
    #[error("completion carries no headline separator tags")]
    SeparatorNotFound,
    #[error("no recognizable frames in completion: {detail}")]
    FrameParse { detail: String },
    #[error("cache failure: {0}")]
    Cache(String),
    #[error("invalid endpoint config: {0}")]
    InvalidEndpoint(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
