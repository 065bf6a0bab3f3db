use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use tokio::sync::{Mutex, Semaphore};
use tokio::time::Instant;

use super::cache::{CacheEntry, ResponseCache};
use super::prompts::{headline_prompt, split_headlines};
use super::wire::{
    cache_key, ChatMessage, ChatRequest, ChatResponse, ClassifyRequest, ClassifyResponse,
    NerRequest, NerResponse, SentimentRequest, SentimentResponse, STANCE_LABELS,
};
use super::{EndpointProfile, GatewayError, GenerationParams};
use crate::framing::{
    EntityCategory, EntityMention, FrameRegistry, SentimentDistribution, SentimentMass,
};
use crate::model::{HeadlineRecord, LanguageCode, TopicStance};
use crate::stance::StanceConfidence;

/// Client-side knobs shared by every endpoint.
#[derive(Debug, Clone)]
pub struct GatewayOptions {
    /// In-flight request bound per endpoint.
    pub concurrency: usize,
    /// First retry delay; later retries double it.
    pub retry_base_ms: u64,
    /// Seed for deterministic retry jitter.
    pub jitter_seed: u64,
    /// Serve only from the cache; a miss is an error instead of a request.
    pub offline: bool,
}

impl Default for GatewayOptions {
    fn default() -> Self {
        GatewayOptions {
            concurrency: 4,
            retry_base_ms: 250,
            jitter_seed: 0,
            offline: false,
        }
    }
}

/// A response body plus where it came from. Replayed responses keep the
/// timestamp of the original fetch so repeated runs stay byte-identical.
#[derive(Debug, Clone)]
pub struct CachedResponse {
    pub body: serde_json::Value,
    pub retrieved_at: DateTime<Utc>,
    pub from_cache: bool,
}

/// A chat completion with its provenance.
#[derive(Debug, Clone)]
pub struct ChatCompletion {
    pub text: String,
    pub retrieved_at: DateTime<Utc>,
    pub from_cache: bool,
}

/// Headlines parsed out of one generation call.
#[derive(Debug, Clone)]
pub struct HeadlineBatch {
    pub records: Vec<HeadlineRecord>,
    pub requested: u32,
    /// How many headlines short of the request the completion came in.
    pub shortfall: u32,
    pub prompt_id: String,
}

#[derive(Debug)]
struct EndpointState {
    limiter: Semaphore,
    /// Next instant a request may be sent, advanced by `min_interval` per
    /// reserved slot.
    pacer: Mutex<Instant>,
    min_interval: Duration,
}

/// HTTP client over the configured endpoints.
///
/// Every request is keyed by endpoint, route, and canonical body and answered
/// from the on-disk cache when possible. Live calls respect a per-endpoint
/// concurrency bound and request rate, and retry transient failures with
/// exponential backoff plus deterministic jitter.
#[derive(Debug)]
pub struct Gateway {
    endpoints: BTreeMap<String, (EndpointProfile, EndpointState)>,
    http: reqwest::Client,
    cache: Arc<ResponseCache>,
    options: GatewayOptions,
    network_calls: AtomicU64,
}

const RETRYABLE_STATUSES: [u16; 5] = [429, 500, 502, 503, 504];

fn jitter_ms(seed: u64, key: &str, attempt: u32, ceiling: u64) -> u64 {
    if ceiling == 0 {
        return 0;
    }
    let mut hasher = Sha256::new();
    hasher.update(seed.to_be_bytes());
    hasher.update(key.as_bytes());
    hasher.update(attempt.to_be_bytes());
    let digest = hasher.finalize();
    let mut eight = [0u8; 8];
    eight.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(eight) % ceiling
}

fn truncate_detail(text: &str) -> String {
    text.chars().take(200).collect()
}

fn decode<T: DeserializeOwned>(endpoint: &str, body: serde_json::Value) -> Result<T, GatewayError> {
    serde_json::from_value(body).map_err(|e| GatewayError::InvalidPayload {
        endpoint: endpoint.to_string(),
        detail: e.to_string(),
    })
}

/// First twelve hex digits of the SHA-256 of `text`; used as a stable short
/// identifier for prompts.
pub(crate) fn short_digest(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    hex::encode(digest)[..12].to_string()
}

impl Gateway {
    pub fn new(
        profiles: Vec<EndpointProfile>,
        cache: Arc<ResponseCache>,
        options: GatewayOptions,
    ) -> Result<Self, GatewayError> {
        if options.concurrency == 0 {
            return Err(GatewayError::InvalidEndpoint(
                "gateway concurrency must be at least 1".to_string(),
            ));
        }
        let mut endpoints = BTreeMap::new();
        for profile in profiles {
            profile.validate()?;
            let min_interval =
                Duration::from_secs_f64(60.0 / f64::from(profile.requests_per_minute));
            let state = EndpointState {
                limiter: Semaphore::new(options.concurrency),
                pacer: Mutex::new(Instant::now()),
                min_interval,
            };
            if endpoints
                .insert(profile.name.clone(), (profile, state))
                .is_some()
            {
                return Err(GatewayError::InvalidEndpoint(
                    "duplicate endpoint name".to_string(),
                ));
            }
        }
        let http = reqwest::Client::builder()
            .build()
            .map_err(|e| GatewayError::InvalidEndpoint(format!("http client: {e}")))?;
        Ok(Gateway {
            endpoints,
            http,
            cache,
            options,
            network_calls: AtomicU64::new(0),
        })
    }

    pub fn profile(&self, endpoint: &str) -> Result<&EndpointProfile, GatewayError> {
        self.endpoints
            .get(endpoint)
            .map(|(profile, _)| profile)
            .ok_or_else(|| GatewayError::UnknownEndpoint(endpoint.to_string()))
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    /// How many live HTTP requests this gateway has sent, retries included.
    pub fn network_calls(&self) -> u64 {
        self.network_calls.load(Ordering::Relaxed)
    }

    async fn pace(&self, state: &EndpointState) {
        let wait = {
            let mut next = state.pacer.lock().await;
            let now = Instant::now();
            let slot = if *next > now { *next } else { now };
            *next = slot + state.min_interval;
            slot.duration_since(now)
        };
        if !wait.is_zero() {
            tokio::time::sleep(wait).await;
        }
    }

    async fn backoff(&self, key: &str, attempt: u32) {
        let base = self.options.retry_base_ms;
        let exponential = base.saturating_mul(1u64 << (attempt - 1).min(16));
        let jitter = jitter_ms(self.options.jitter_seed, key, attempt, base / 2 + 1);
        tokio::time::sleep(Duration::from_millis(exponential.saturating_add(jitter))).await;
    }

    /// Sends one request, consulting the cache first. The body is
    /// canonicalized before hashing so field order never splits the cache.
    pub async fn call<T: Serialize>(
        &self,
        endpoint: &str,
        request: &T,
    ) -> Result<CachedResponse, GatewayError> {
        let (profile, state) = self
            .endpoints
            .get(endpoint)
            .ok_or_else(|| GatewayError::UnknownEndpoint(endpoint.to_string()))?;
        let canonical = serde_json::to_value(request)
            .expect("request types serialize to JSON")
            .to_string();
        let route = profile.kind.route();
        let key = cache_key(&profile.name, route, &canonical);
        if let Some(entry) = self.cache.get(&profile.name, &key)? {
            return Ok(CachedResponse {
                body: entry.response_body,
                retrieved_at: entry.retrieved_at,
                from_cache: true,
            });
        }
        if self.options.offline {
            return Err(GatewayError::OfflineMiss {
                endpoint: profile.name.clone(),
            });
        }
        let token = match &profile.auth_env_var {
            Some(var) => Some(std::env::var(var).map_err(|_| GatewayError::AuthMissing {
                endpoint: profile.name.clone(),
                env_var: var.clone(),
            })?),
            None => None,
        };
        let url = format!("{}{route}", profile.base_url.as_str().trim_end_matches('/'));

        let _permit = state.limiter.acquire().await.expect("limiter stays open");
        let mut attempt: u32 = 0;
        let body = loop {
            attempt += 1;
            self.pace(state).await;
            self.network_calls.fetch_add(1, Ordering::Relaxed);
            let mut builder = self
                .http
                .post(&url)
                .timeout(profile.timeout())
                .header("content-type", "application/json")
                .body(canonical.clone());
            if let Some(token) = &token {
                builder = builder.bearer_auth(token);
            }
            match builder.send().await {
                Ok(response) => {
                    let status = response.status().as_u16();
                    if (200..300).contains(&status) {
                        let body: serde_json::Value = response.json().await.map_err(|e| {
                            GatewayError::InvalidPayload {
                                endpoint: profile.name.clone(),
                                detail: format!("response is not JSON: {e}"),
                            }
                        })?;
                        break body;
                    }
                    if RETRYABLE_STATUSES.contains(&status) && attempt <= profile.max_retries {
                        self.backoff(&key, attempt).await;
                        continue;
                    }
                    let detail = truncate_detail(&response.text().await.unwrap_or_default());
                    return Err(GatewayError::Upstream {
                        endpoint: profile.name.clone(),
                        status,
                        attempts: attempt,
                        detail,
                    });
                }
                Err(e) if e.is_timeout() => {
                    if attempt <= profile.max_retries {
                        self.backoff(&key, attempt).await;
                        continue;
                    }
                    return Err(GatewayError::Timeout {
                        endpoint: profile.name.clone(),
                        attempts: attempt,
                    });
                }
                Err(e) if e.is_connect() => {
                    if attempt <= profile.max_retries {
                        self.backoff(&key, attempt).await;
                        continue;
                    }
                    return Err(GatewayError::Transport {
                        endpoint: profile.name.clone(),
                        detail: e.to_string(),
                    });
                }
                Err(e) => {
                    return Err(GatewayError::Transport {
                        endpoint: profile.name.clone(),
                        detail: e.to_string(),
                    });
                }
            }
        };
        let retrieved_at = Utc::now();
        let entry = CacheEntry {
            endpoint: profile.name.clone(),
            route: route.to_string(),
            key,
            request_body: canonical,
            response_body: body.clone(),
            retrieved_at,
        };
        self.cache.put(&entry)?;
        Ok(CachedResponse {
            body,
            retrieved_at,
            from_cache: false,
        })
    }

    /// Completes a prompt on a chat endpoint. Empty completions are an error
    /// because every caller needs text to work with.
    pub async fn generate_text(
        &self,
        endpoint: &str,
        prompt: &str,
        params: GenerationParams,
    ) -> Result<ChatCompletion, GatewayError> {
        params.validate()?;
        let profile = self.profile(endpoint)?;
        let request = ChatRequest {
            model: profile.model_id().to_string(),
            messages: vec![ChatMessage::user(prompt)],
            temperature: params.temperature,
            top_p: params.top_p,
            max_tokens: params.max_tokens,
        };
        let response = self.call(endpoint, &request).await?;
        let parsed: ChatResponse = decode(endpoint, response.body)?;
        let text = parsed.text.trim().to_string();
        if text.is_empty() {
            return Err(GatewayError::InvalidPayload {
                endpoint: endpoint.to_string(),
                detail: "empty completion".to_string(),
            });
        }
        Ok(ChatCompletion {
            text,
            retrieved_at: response.retrieved_at,
            from_cache: response.from_cache,
        })
    }

    /// Scores an opinion against a statement on a zero-shot classifier
    /// endpoint, returning confidence over the four stance levels.
    pub async fn classify_stance(
        &self,
        endpoint: &str,
        statement_text: &str,
        opinion_text: &str,
    ) -> Result<StanceConfidence, GatewayError> {
        let request = ClassifyRequest {
            premise: opinion_text.to_string(),
            hypothesis: statement_text.to_string(),
            labels: STANCE_LABELS.iter().map(|s| s.to_string()).collect(),
        };
        let response = self.call(endpoint, &request).await?;
        let parsed: ClassifyResponse = decode(endpoint, response.body)?;
        if parsed.labels.len() != parsed.scores.len() {
            return Err(GatewayError::InvalidPayload {
                endpoint: endpoint.to_string(),
                detail: format!(
                    "{} labels but {} scores",
                    parsed.labels.len(),
                    parsed.scores.len()
                ),
            });
        }
        let expected: BTreeSet<&str> = STANCE_LABELS.iter().copied().collect();
        let found: BTreeSet<&str> = parsed.labels.iter().map(String::as_str).collect();
        if parsed.labels.len() != STANCE_LABELS.len() || found != expected {
            return Err(GatewayError::LabelMismatch {
                found: parsed.labels,
            });
        }
        let score_for = |label: &str| {
            let index = parsed
                .labels
                .iter()
                .position(|l| l == label)
                .expect("label set verified above");
            parsed.scores[index]
        };
        let confidences = [
            score_for("Strongly Agree"),
            score_for("Agree"),
            score_for("Disagree"),
            score_for("Strongly Disagree"),
        ];
        if confidences.iter().all(|v| *v == 0.0) {
            return Err(GatewayError::InvalidPayload {
                endpoint: endpoint.to_string(),
                detail: "classifier scored every stance at zero".to_string(),
            });
        }
        StanceConfidence::new(confidences[0], confidences[1], confidences[2], confidences[3])
            .map_err(|e| GatewayError::InvalidPayload {
                endpoint: endpoint.to_string(),
                detail: e.to_string(),
            })
    }

    /// Extracts entity mentions from a headline. Surfaces that canonicalize
    /// to nothing (pure punctuation) are dropped rather than treated as
    /// errors because upstream taggers emit them routinely.
    pub async fn extract_entities(
        &self,
        endpoint: &str,
        headline_id: &str,
        text: &str,
        language: &LanguageCode,
    ) -> Result<Vec<EntityMention>, GatewayError> {
        let request = NerRequest {
            text: text.to_string(),
            language: language.to_string(),
        };
        let response = self.call(endpoint, &request).await?;
        let parsed: NerResponse = decode(endpoint, response.body)?;
        let mut mentions = Vec::new();
        for entity in parsed.entities {
            let category = EntityCategory::parse(&entity.category);
            if let Ok(mention) = EntityMention::new(headline_id, &entity.surface, category) {
                mentions.push(mention);
            }
        }
        Ok(mentions)
    }

    /// Scores a headline's sentiment and normalizes the raw masses into a
    /// distribution.
    pub async fn classify_sentiment(
        &self,
        endpoint: &str,
        text: &str,
    ) -> Result<SentimentDistribution, GatewayError> {
        let request = SentimentRequest {
            text: text.to_string(),
        };
        let response = self.call(endpoint, &request).await?;
        let parsed: SentimentResponse = decode(endpoint, response.body)?;
        let mass = SentimentMass {
            positive: parsed.positive,
            negative: parsed.negative,
            neutral: parsed.neutral,
        };
        SentimentDistribution::from_raw(mass).map_err(|e| GatewayError::InvalidPayload {
            endpoint: endpoint.to_string(),
            detail: e.to_string(),
        })
    }

    /// Asks a chat endpoint to frame a headline and parses the reply against
    /// the registry. Unrecognized names are skipped; a reply with no
    /// recognizable frame at all is an error.
    pub async fn classify_frames(
        &self,
        endpoint: &str,
        headline_text: &str,
        registry: &FrameRegistry,
        template: &str,
        params: GenerationParams,
    ) -> Result<BTreeSet<String>, GatewayError> {
        let prompt = template
            .replace("{frames}", &registry.names().join(", "))
            .replace("{headline}", headline_text);
        let completion = self.generate_text(endpoint, &prompt, params).await?;
        let mut frames = BTreeSet::new();
        for piece in completion.text.split([';', ',', '\n']) {
            if let Ok(name) = registry.resolve(piece) {
                frames.insert(name.to_string());
            }
        }
        if frames.is_empty() {
            return Err(GatewayError::FrameParse {
                detail: truncate_detail(&completion.text),
            });
        }
        Ok(frames)
    }

    /// Generates headlines for one topic side and splits them on the stance
    /// tag. Over-delivery is truncated to the request; under-delivery is
    /// reported as a shortfall rather than an error.
    pub async fn generate_headlines(
        &self,
        endpoint: &str,
        topic_stance: &TopicStance,
        language: &LanguageCode,
        count: u32,
        params: GenerationParams,
    ) -> Result<HeadlineBatch, GatewayError> {
        let tag = topic_stance.tag_in(language)?.to_string();
        let prompt = headline_prompt(count, &tag, &topic_stance.topic);
        let prompt_id = short_digest(&prompt);
        let completion = self.generate_text(endpoint, &prompt, params).await?;
        let titles = split_headlines(&completion.text, &tag);
        if titles.is_empty() {
            return Err(GatewayError::SeparatorNotFound);
        }
        let model_id = self.profile(endpoint)?.model_id().to_string();
        let records: Vec<HeadlineRecord> = titles
            .into_iter()
            .take(count as usize)
            .enumerate()
            .map(|(index, text)| HeadlineRecord {
                id: format!("{prompt_id}-{:04}", index + 1),
                topic: topic_stance.topic.clone(),
                stance: topic_stance.stance,
                language: language.clone(),
                model_id: model_id.clone(),
                text,
                generation_prompt_id: prompt_id.clone(),
            })
            .collect();
        let shortfall = count.saturating_sub(records.len() as u32);
        Ok(HeadlineBatch {
            records,
            requested: count,
            shortfall,
            prompt_id,
        })
    }
}

/// Synchronous facade over [`Gateway`] for callers without a runtime.
#[derive(Debug)]
pub struct BlockingGateway {
    runtime: tokio::runtime::Runtime,
    inner: Gateway,
}

impl BlockingGateway {
    pub fn new(
        profiles: Vec<EndpointProfile>,
        cache: Arc<ResponseCache>,
        options: GatewayOptions,
    ) -> Result<Self, GatewayError> {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .map_err(|e| GatewayError::InvalidEndpoint(format!("async runtime: {e}")))?;
        let inner = Gateway::new(profiles, cache, options)?;
        Ok(BlockingGateway { runtime, inner })
    }

    pub fn inner(&self) -> &Gateway {
        &self.inner
    }

    /// Runs a future built over [`Self::inner`] to completion, so callers can
    /// batch concurrent requests without owning a runtime.
    pub fn run<F: std::future::Future>(&self, future: F) -> F::Output {
        self.runtime.block_on(future)
    }

    pub fn profile(&self, endpoint: &str) -> Result<&EndpointProfile, GatewayError> {
        self.inner.profile(endpoint)
    }

    pub fn cache(&self) -> &ResponseCache {
        self.inner.cache()
    }

    pub fn network_calls(&self) -> u64 {
        self.inner.network_calls()
    }

    pub fn generate_text(
        &self,
        endpoint: &str,
        prompt: &str,
        params: GenerationParams,
    ) -> Result<ChatCompletion, GatewayError> {
        self.runtime
            .block_on(self.inner.generate_text(endpoint, prompt, params))
    }

    pub fn classify_stance(
        &self,
        endpoint: &str,
        statement_text: &str,
        opinion_text: &str,
    ) -> Result<StanceConfidence, GatewayError> {
        self.runtime
            .block_on(self.inner.classify_stance(endpoint, statement_text, opinion_text))
    }

    pub fn extract_entities(
        &self,
        endpoint: &str,
        headline_id: &str,
        text: &str,
        language: &LanguageCode,
    ) -> Result<Vec<EntityMention>, GatewayError> {
        self.runtime
            .block_on(self.inner.extract_entities(endpoint, headline_id, text, language))
    }

    pub fn classify_sentiment(
        &self,
        endpoint: &str,
        text: &str,
    ) -> Result<SentimentDistribution, GatewayError> {
        self.runtime
            .block_on(self.inner.classify_sentiment(endpoint, text))
    }

    pub fn classify_frames(
        &self,
        endpoint: &str,
        headline_text: &str,
        registry: &FrameRegistry,
        template: &str,
        params: GenerationParams,
    ) -> Result<BTreeSet<String>, GatewayError> {
        self.runtime.block_on(self.inner.classify_frames(
            endpoint,
            headline_text,
            registry,
            template,
            params,
        ))
    }

    pub fn generate_headlines(
        &self,
        endpoint: &str,
        topic_stance: &TopicStance,
        language: &LanguageCode,
        count: u32,
        params: GenerationParams,
    ) -> Result<HeadlineBatch, GatewayError> {
        self.runtime.block_on(self.inner.generate_headlines(
            endpoint,
            topic_stance,
            language,
            count,
            params,
        ))
    }
}
