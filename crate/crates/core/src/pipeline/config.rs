use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::gateway::{
    EndpointKind, EndpointProfile, GenerationParams, PromptVariant, DEFAULT_FRAME_TEMPLATE,
};
use crate::model::LanguageCode;

/// Default discretization threshold for stance scores.
pub const DEFAULT_TAU: f64 = 2.5;

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn default_cache_dir() -> PathBuf {
    PathBuf::from("cache")
}

fn default_concurrency() -> usize {
    4
}

fn default_retry_base_ms() -> u64 {
    250
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

fn default_prompt_variants() -> Vec<String> {
    vec!["base".to_string()]
}

fn default_top_p() -> f64 {
    1.0
}

fn default_opinion_max_tokens() -> u32 {
    150
}

fn default_headline_temperature() -> f64 {
    0.5
}

fn default_headline_max_tokens() -> u32 {
    400
}

fn default_headline_count() -> u32 {
    1000
}

fn default_top_k_entities() -> usize {
    10
}

fn default_bootstrap_resamples() -> u32 {
    10_000
}

fn default_bootstrap_level() -> f64 {
    0.95
}

fn default_low_confidence_threshold() -> f64 {
    0.5
}

/// Top-level run configuration, read from a TOML file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Directory that run artifacts are written under.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub pct: Option<PctConfig>,
    #[serde(default)]
    pub framing: Option<FramingConfig>,
    #[serde(default)]
    pub stats: StatsConfig,
    pub gateway: GatewayConfig,
}

/// Settings for the statement opinion audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PctConfig {
    /// JSONL statement bank path.
    pub statement_bank: PathBuf,
    pub languages: Vec<String>,
    /// Chat endpoints whose opinions are audited.
    pub endpoints: Vec<String>,
    /// Classifier endpoint that scores opinions against statements.
    pub classifier_endpoint: String,
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Prompt variant ids: built-in ids or keys of `variant_templates`.
    #[serde(default = "default_prompt_variants")]
    pub prompt_variants: Vec<String>,
    /// Extra prompt templates keyed by variant id.
    #[serde(default)]
    pub variant_templates: BTreeMap<String, String>,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_top_p")]
    pub top_p: f64,
    #[serde(default = "default_opinion_max_tokens")]
    pub max_tokens: u32,
}

impl PctConfig {
    pub fn generation_params(&self) -> GenerationParams {
        GenerationParams {
            temperature: self.temperature,
            top_p: self.top_p,
            max_tokens: self.max_tokens,
        }
    }

    /// Resolves a variant id against the custom templates, then the built-in
    /// set.
    pub fn resolve_variant(&self, id: &str) -> Option<PromptVariant> {
        if let Some(template) = self.variant_templates.get(id) {
            return Some(PromptVariant {
                id: id.to_string(),
                template: template.clone(),
            });
        }
        PromptVariant::builtin(id)
    }
}

/// Settings for the headline framing audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FramingConfig {
    /// JSON topic registry path.
    pub topics_file: PathBuf,
    /// JSON frame name list; the built-in registry when unset.
    #[serde(default)]
    pub frames_file: Option<PathBuf>,
    pub languages: Vec<String>,
    /// Chat endpoints that generate headlines.
    pub endpoints: Vec<String>,
    pub ner_endpoint: String,
    pub sentiment_endpoint: String,
    /// Chat endpoint that assigns frames to headlines.
    pub frame_endpoint: String,
    /// Override for the frame classification prompt.
    #[serde(default)]
    pub frame_prompt_template: Option<String>,
    /// Headlines requested per topic side.
    #[serde(default = "default_headline_count")]
    pub headline_count: u32,
    #[serde(default = "default_top_k_entities")]
    pub top_k_entities: usize,
    #[serde(default = "default_headline_temperature")]
    pub temperature: f64,
    #[serde(default = "default_top_p")]
    pub top_p: f64,
    #[serde(default = "default_headline_max_tokens")]
    pub max_tokens: u32,
    /// Pre-built headline corpus consumed instead of generating.
    #[serde(default)]
    pub corpus_file: Option<PathBuf>,
}

impl FramingConfig {
    pub fn generation_params(&self) -> GenerationParams {
        GenerationParams {
            temperature: self.temperature,
            top_p: self.top_p,
            max_tokens: self.max_tokens,
        }
    }

    pub fn frame_template(&self) -> &str {
        self.frame_prompt_template
            .as_deref()
            .unwrap_or(DEFAULT_FRAME_TEMPLATE)
    }
}

/// Settings for uncertainty and agreement statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsConfig {
    #[serde(default = "default_bootstrap_resamples")]
    pub bootstrap_resamples: u32,
    #[serde(default)]
    pub bootstrap_seed: u64,
    #[serde(default = "default_bootstrap_level")]
    pub bootstrap_level: f64,
    #[serde(default = "default_low_confidence_threshold")]
    pub low_confidence_threshold: f64,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            bootstrap_resamples: default_bootstrap_resamples(),
            bootstrap_seed: 0,
            bootstrap_level: default_bootstrap_level(),
            low_confidence_threshold: default_low_confidence_threshold(),
        }
    }
}

/// Endpoint roster and client knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GatewayConfig {
    #[serde(default = "default_cache_dir")]
    pub cache_dir: PathBuf,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default = "default_retry_base_ms")]
    pub retry_base_ms: u64,
    /// Retry jitter seed; falls back to the global seed flag when unset.
    #[serde(default)]
    pub jitter_seed: Option<u64>,
    #[serde(default)]
    pub endpoints: Vec<EndpointProfile>,
}

fn config_err(detail: impl Into<String>) -> PipelineError {
    PipelineError::Config(detail.into())
}

fn parse_languages(section: &str, raw: &[String]) -> Result<Vec<LanguageCode>, PipelineError> {
    if raw.is_empty() {
        return Err(config_err(format!("[{section}] languages is empty")));
    }
    raw.iter()
        .map(|code| {
            LanguageCode::new(code)
                .map_err(|e| config_err(format!("[{section}] languages: {e}")))
        })
        .collect()
}

impl RunConfig {
    /// Reads and validates a TOML config file. An unreadable path is a
    /// config error like any other, so it exits with the config code.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let config: RunConfig = toml::from_str(&raw)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    fn endpoint(&self, name: &str) -> Option<&EndpointProfile> {
        self.gateway.endpoints.iter().find(|p| p.name == name)
    }

    fn require_kind(
        &self,
        section: &str,
        field: &str,
        name: &str,
        kind: EndpointKind,
    ) -> Result<(), PipelineError> {
        match self.endpoint(name) {
            None => Err(config_err(format!(
                "[{section}] {field}: endpoint {name:?} is not declared under [gateway]"
            ))),
            Some(profile) if profile.kind != kind => Err(config_err(format!(
                "[{section}] {field}: endpoint {name:?} is not a {kind:?} endpoint"
            ))),
            Some(_) => Ok(()),
        }
    }

    /// Checks cross-references and value ranges across all sections.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.gateway.concurrency == 0 {
            return Err(config_err("[gateway] concurrency must be at least 1"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for profile in &self.gateway.endpoints {
            profile
                .validate()
                .map_err(|e| config_err(format!("[gateway] {e}")))?;
            if !seen.insert(&profile.name) {
                return Err(config_err(format!(
                    "[gateway] duplicate endpoint name {:?}",
                    profile.name
                )));
            }
        }

        if let Some(pct) = &self.pct {
            parse_languages("pct", &pct.languages)?;
            if pct.endpoints.is_empty() {
                return Err(config_err("[pct] endpoints is empty"));
            }
            for name in &pct.endpoints {
                self.require_kind("pct", "endpoints", name, EndpointKind::Chat)?;
            }
            self.require_kind(
                "pct",
                "classifier_endpoint",
                &pct.classifier_endpoint,
                EndpointKind::Classifier,
            )?;
            if !pct.tau.is_finite() || pct.tau <= 0.0 {
                return Err(config_err(format!(
                    "[pct] tau must be positive, got {}",
                    pct.tau
                )));
            }
            if pct.prompt_variants.is_empty() {
                return Err(config_err("[pct] prompt_variants is empty"));
            }
            for id in &pct.prompt_variants {
                if pct.resolve_variant(id).is_none() {
                    return Err(config_err(format!(
                        "[pct] prompt variant {id:?} is neither built in nor in variant_templates"
                    )));
                }
            }
            pct.generation_params()
                .validate()
                .map_err(|e| config_err(format!("[pct] {e}")))?;
        }

        if let Some(framing) = &self.framing {
            parse_languages("framing", &framing.languages)?;
            if framing.endpoints.is_empty() {
                return Err(config_err("[framing] endpoints is empty"));
            }
            for name in &framing.endpoints {
                self.require_kind("framing", "endpoints", name, EndpointKind::Chat)?;
            }
            self.require_kind(
                "framing",
                "ner_endpoint",
                &framing.ner_endpoint,
                EndpointKind::Ner,
            )?;
            self.require_kind(
                "framing",
                "sentiment_endpoint",
                &framing.sentiment_endpoint,
                EndpointKind::Sentiment,
            )?;
            self.require_kind(
                "framing",
                "frame_endpoint",
                &framing.frame_endpoint,
                EndpointKind::Chat,
            )?;
            if framing.headline_count == 0 {
                return Err(config_err("[framing] headline_count must be at least 1"));
            }
            if framing.top_k_entities == 0 {
                return Err(config_err("[framing] top_k_entities must be at least 1"));
            }
            framing
                .generation_params()
                .validate()
                .map_err(|e| config_err(format!("[framing] {e}")))?;
        }

        let stats = &self.stats;
        if stats.bootstrap_resamples == 0 {
            return Err(config_err("[stats] bootstrap_resamples must be at least 1"));
        }
        if !stats.bootstrap_level.is_finite()
            || stats.bootstrap_level <= 0.0
            || stats.bootstrap_level >= 1.0
        {
            return Err(config_err(format!(
                "[stats] bootstrap_level must lie in (0, 1), got {}",
                stats.bootstrap_level
            )));
        }
        if !stats.low_confidence_threshold.is_finite()
            || stats.low_confidence_threshold <= 0.0
            || stats.low_confidence_threshold > 1.0
        {
            return Err(config_err(format!(
                "[stats] low_confidence_threshold must lie in (0, 1], got {}",
                stats.low_confidence_threshold
            )));
        }
        Ok(())
    }

    /// Parsed language list for the opinion audit.
    pub fn pct_languages(&self) -> Result<Vec<LanguageCode>, PipelineError> {
        let pct = self.require_pct()?;
        parse_languages("pct", &pct.languages)
    }

    /// Parsed language list for the framing audit.
    pub fn framing_languages(&self) -> Result<Vec<LanguageCode>, PipelineError> {
        let framing = self.require_framing()?;
        parse_languages("framing", &framing.languages)
    }

    pub fn require_pct(&self) -> Result<&PctConfig, PipelineError> {
        self.pct
            .as_ref()
            .ok_or_else(|| config_err("config has no [pct] section"))
    }

    pub fn require_framing(&self) -> Result<&FramingConfig, PipelineError> {
        self.framing
            .as_ref()
            .ok_or_else(|| config_err("config has no [framing] section"))
    }

    /// Stable digest of the whole configuration; keys run identity.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_value(self)
            .expect("config serializes")
            .to_string();
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Run id derived from the config digest, used when none is given.
    pub fn default_run_id(&self) -> String {
        format!("run-{}", &self.digest()[..12])
    }
}
