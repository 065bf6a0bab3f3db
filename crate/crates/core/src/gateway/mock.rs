//! In-process mock of the four endpoint kinds.
//!
//! Replies are pure functions of the request body (seeded by an FNV-1a hash),
//! so runs against the mock are reproducible without any fixture files. A
//! scenario can inject failures, latency, and malformed classifier output to
//! exercise the gateway's error handling.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use url::Url;

use super::wire::STANCE_LABELS;
use super::{EndpointKind, EndpointProfile};

/// Inject an HTTP failure for matching requests.
#[derive(Debug, Clone)]
pub struct FailRule {
    /// Substrings that must all appear in the raw request body.
    pub contains: Vec<String>,
    pub status: u16,
    /// How many times to fire; `None` fires forever.
    pub times: Option<u32>,
}

/// A fixed chat reply for prompts containing a marker.
#[derive(Debug, Clone)]
pub struct CannedReply {
    pub contains: String,
    pub text: String,
}

/// Behavior knobs for one mock server instance.
#[derive(Debug, Clone)]
pub struct MockScenario {
    pub fail_rules: Vec<FailRule>,
    /// Delay applied to every request before responding.
    pub latency: Option<Duration>,
    /// Classifier scores in canonical label order, overriding the
    /// premise-driven scoring.
    pub force_stance: Option<[f64; 4]>,
    /// Return classifier labels in reversed order.
    pub shuffle_classifier_labels: bool,
    /// Omit the last classifier label and score.
    pub drop_classifier_label: bool,
    /// Multiplier on raw sentiment masses.
    pub sentiment_scale: f64,
    /// Checked before any synthesized chat reply.
    pub canned_chat: Vec<CannedReply>,
}

impl Default for MockScenario {
    fn default() -> Self {
        MockScenario {
            fail_rules: Vec::new(),
            latency: None,
            force_stance: None,
            shuffle_classifier_labels: false,
            drop_classifier_label: false,
            sentiment_scale: 1.0,
            canned_chat: Vec::new(),
        }
    }
}

/// Entities the mock salts headlines with and its tagger recognizes.
pub const ENTITY_POOL: [(&str, &str); 11] = [
    ("Pakistan", "LOC"),
    ("Supreme Court", "ORG"),
    ("Punjab", "LOC"),
    ("Karachi", "LOC"),
    ("Parliament", "ORG"),
    ("Senate", "ORG"),
    ("National Assembly", "ORG"),
    ("Human Rights Commission", "ORG"),
    ("Lahore", "LOC"),
    ("Islamabad", "LOC"),
    ("Election Commission", "ORG"),
];

/// Keywords the mock sentiment scorer counts as positive mass.
pub const POSITIVE_WORDS: [&str; 7] = [
    "praised", "wins", "support", "progress", "hope", "improves", "benefits",
];

/// Keywords the mock sentiment scorer counts as negative mass.
pub const NEGATIVE_WORDS: [&str; 6] = [
    "crisis",
    "under fire",
    "fails",
    "condemned",
    "fears",
    "threat",
];

const HEADLINE_PHRASES: [&str; 13] = [
    "praised for progress on",
    "wins support over",
    "sees hope in",
    "improves outlook for",
    "benefits communities through",
    "under fire over",
    "faces crisis over",
    "fails to address",
    "condemned over",
    "fears grow over",
    "debates",
    "reviews policy on",
    "weighs options on",
];

const OPINION_PHRASES: [&str; 4] = [
    "I strongly agree with this statement because it matches my assessment of the evidence.",
    "I agree with this statement on balance, though some caveats apply.",
    "I disagree with this statement because the reasoning does not hold up.",
    "I strongly disagree with this statement and consider it harmful on the merits.",
];

fn fnv1a(text: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in text.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

fn synth_headline(topic: &str, tag: &str, index: u32) -> String {
    let hash = fnv1a(&format!("{topic}|{tag}|{index}"));
    let (entity, _) = ENTITY_POOL[(hash % ENTITY_POOL.len() as u64) as usize];
    let phrase = HEADLINE_PHRASES[((hash >> 8) % HEADLINE_PHRASES.len() as u64) as usize];
    format!("{entity} {phrase} {topic}")
}

fn headline_reply(prompt: &str) -> Option<String> {
    let rest = prompt.strip_prefix("Write ")?;
    let (count_str, rest) = rest.split_once(' ')?;
    let count: u32 = count_str.parse().ok()?;
    let (tag, rest) = rest.split_once(" news headlines about the topic of ")?;
    let (topic, _) = rest.split_once(". Separate each with a tag")?;
    let mut reply = String::new();
    for index in 0..count {
        let title = synth_headline(topic, tag, index);
        reply.push_str(tag);
        reply.push_str(" Title: ");
        reply.push_str(&title);
        reply.push('\n');
    }
    Some(reply)
}

fn frame_reply(prompt: &str) -> Option<String> {
    let start = prompt.find("policy frames: ")? + "policy frames: ".len();
    let rest = &prompt[start..];
    let end = rest.find(". Reply")?;
    let options: Vec<&str> = rest[..end].split(", ").collect();
    if options.is_empty() {
        return None;
    }
    let hash = fnv1a(prompt);
    let take = 1 + (hash % 2) as usize;
    let first = ((hash >> 8) % options.len() as u64) as usize;
    let picked: Vec<&str> = (0..take)
        .map(|offset| options[(first + offset) % options.len()])
        .collect();
    Some(picked.join("; "))
}

fn opinion_reply(prompt: &str) -> String {
    // High bits of the hash, because the low bits of FNV-1a stay correlated
    // across prompts that share a long suffix.
    OPINION_PHRASES[((fnv1a(prompt) >> 16) % 4) as usize].to_string()
}

fn chat_reply(scenario: &MockScenario, prompt: &str) -> String {
    for canned in &scenario.canned_chat {
        if prompt.contains(&canned.contains) {
            return canned.text.clone();
        }
    }
    if let Some(reply) = headline_reply(prompt) {
        return reply;
    }
    if let Some(reply) = frame_reply(prompt) {
        return reply;
    }
    opinion_reply(prompt)
}

fn stance_scores(scenario: &MockScenario, premise: &str) -> [f64; 4] {
    if let Some(forced) = scenario.force_stance {
        return forced;
    }
    let lower = premise.to_lowercase();
    let dominant = if lower.contains("strongly agree") {
        0
    } else if lower.contains("strongly disagree") {
        3
    } else if lower.contains("disagree") {
        2
    } else if lower.contains("agree") {
        1
    } else {
        (fnv1a(premise) % 4) as usize
    };
    let hash = fnv1a(premise);
    let mut scores = [0.0_f64; 4];
    scores[dominant] = 0.55 + ((hash % 40) as f64) / 100.0;
    let minor = [0.10, 0.05, 0.02];
    let mut next = 0;
    for (index, slot) in scores.iter_mut().enumerate() {
        if index != dominant {
            *slot = minor[next];
            next += 1;
        }
    }
    scores
}

/// Per-route request counters.
#[derive(Debug, Default)]
pub struct RouteCounters {
    chat: AtomicU64,
    classify: AtomicU64,
    ner: AtomicU64,
    sentiment: AtomicU64,
}

impl RouteCounters {
    fn bump(&self, route: &str) {
        self.slot(route).fetch_add(1, Ordering::Relaxed);
    }

    fn slot(&self, route: &str) -> &AtomicU64 {
        match route {
            "/chat" => &self.chat,
            "/classify" => &self.classify,
            "/ner" => &self.ner,
            _ => &self.sentiment,
        }
    }

    pub fn for_route(&self, route: &str) -> u64 {
        self.slot(route).load(Ordering::Relaxed)
    }

    pub fn total(&self) -> u64 {
        self.chat.load(Ordering::Relaxed)
            + self.classify.load(Ordering::Relaxed)
            + self.ner.load(Ordering::Relaxed)
            + self.sentiment.load(Ordering::Relaxed)
    }
}

#[derive(Debug)]
struct ServerState {
    scenario: MockScenario,
    counters: Arc<RouteCounters>,
    fail_remaining: Mutex<Vec<Option<u32>>>,
}

impl ServerState {
    async fn gate(&self, route: &str, body: &str) -> Option<StatusCode> {
        self.counters.bump(route);
        if let Some(latency) = self.scenario.latency {
            tokio::time::sleep(latency).await;
        }
        let mut remaining = self.fail_remaining.lock().expect("fail rule lock");
        for (rule, left) in self.scenario.fail_rules.iter().zip(remaining.iter_mut()) {
            if !rule.contains.iter().all(|needle| body.contains(needle)) {
                continue;
            }
            match left {
                Some(0) => continue,
                Some(n) => *n -= 1,
                None => {}
            }
            return Some(
                StatusCode::from_u16(rule.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR),
            );
        }
        None
    }
}

async fn chat_handler(State(state): State<Arc<ServerState>>, body: String) -> Response {
    if let Some(status) = state.gate("/chat", &body).await {
        return (status, "injected failure").into_response();
    }
    let request: serde_json::Value = match serde_json::from_str(&body) {
        Ok(value) => value,
        Err(_) => return (StatusCode::BAD_REQUEST, "body is not JSON").into_response(),
    };
    let prompt = request["messages"][0]["content"].as_str().unwrap_or("");
    let text = chat_reply(&state.scenario, prompt);
    Json(serde_json::json!({ "text": text })).into_response()
}

async fn classify_handler(State(state): State<Arc<ServerState>>, body: String) -> Response {
    if let Some(status) = state.gate("/classify", &body).await {
        return (status, "injected failure").into_response();
    }
    let request: serde_json::Value = match serde_json::from_str(&body) {
        Ok(value) => value,
        Err(_) => return (StatusCode::BAD_REQUEST, "body is not JSON").into_response(),
    };
    let premise = request["premise"].as_str().unwrap_or("");
    let scores = stance_scores(&state.scenario, premise);
    let mut pairs: Vec<(String, f64)> = STANCE_LABELS
        .iter()
        .zip(scores)
        .map(|(label, score)| (label.to_string(), score))
        .collect();
    if state.scenario.shuffle_classifier_labels {
        pairs.reverse();
    }
    if state.scenario.drop_classifier_label {
        pairs.pop();
    }
    let labels: Vec<String> = pairs.iter().map(|(label, _)| label.clone()).collect();
    let scores: Vec<f64> = pairs.iter().map(|(_, score)| *score).collect();
    Json(serde_json::json!({ "labels": labels, "scores": scores })).into_response()
}

async fn ner_handler(State(state): State<Arc<ServerState>>, body: String) -> Response {
    if let Some(status) = state.gate("/ner", &body).await {
        return (status, "injected failure").into_response();
    }
    let request: serde_json::Value = match serde_json::from_str(&body) {
        Ok(value) => value,
        Err(_) => return (StatusCode::BAD_REQUEST, "body is not JSON").into_response(),
    };
    let text = request["text"].as_str().unwrap_or("");
    let mut found: Vec<(usize, &str, &str)> = Vec::new();
    for (surface, category) in ENTITY_POOL {
        for (position, _) in text.match_indices(surface) {
            found.push((position, surface, category));
        }
    }
    found.sort();
    let entities: Vec<serde_json::Value> = found
        .into_iter()
        .map(|(_, surface, category)| {
            serde_json::json!({ "surface": surface, "category": category })
        })
        .collect();
    Json(serde_json::json!({ "entities": entities })).into_response()
}

async fn sentiment_handler(State(state): State<Arc<ServerState>>, body: String) -> Response {
    if let Some(status) = state.gate("/sentiment", &body).await {
        return (status, "injected failure").into_response();
    }
    let request: serde_json::Value = match serde_json::from_str(&body) {
        Ok(value) => value,
        Err(_) => return (StatusCode::BAD_REQUEST, "body is not JSON").into_response(),
    };
    let text = request["text"].as_str().unwrap_or("").to_lowercase();
    let positive: usize = POSITIVE_WORDS
        .iter()
        .map(|word| text.matches(word).count())
        .sum();
    let negative: usize = NEGATIVE_WORDS
        .iter()
        .map(|word| text.matches(word).count())
        .sum();
    let scale = state.scenario.sentiment_scale;
    Json(serde_json::json!({
        "positive": positive as f64 * scale,
        "negative": negative as f64 * scale,
        "neutral": scale,
    }))
    .into_response()
}

/// A mock endpoint server on a loopback port, running on its own thread so
/// both sync and async callers can use it.
#[derive(Debug)]
pub struct MockServer {
    addr: SocketAddr,
    counters: Arc<RouteCounters>,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl MockServer {
    pub fn start(scenario: MockScenario) -> Self {
        Self::start_on(scenario, 0)
    }

    /// Starts the server on a fixed loopback port; port 0 picks a free one.
    pub fn start_on(scenario: MockScenario, port: u16) -> Self {
        let counters = Arc::new(RouteCounters::default());
        let fail_remaining = scenario.fail_rules.iter().map(|rule| rule.times).collect();
        let state = Arc::new(ServerState {
            scenario,
            counters: Arc::clone(&counters),
            fail_remaining: Mutex::new(fail_remaining),
        });
        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let (shutdown_tx, shutdown_rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let runtime = tokio::runtime::Builder::new_current_thread()
                .enable_all()
                .build()
                .expect("mock server runtime");
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(("127.0.0.1", port))
                    .await
                    .expect("bind loopback");
                let addr = listener.local_addr().expect("local addr");
                addr_tx.send(addr).expect("report addr");
                let app = Router::new()
                    .route("/chat", post(chat_handler))
                    .route("/classify", post(classify_handler))
                    .route("/ner", post(ner_handler))
                    .route("/sentiment", post(sentiment_handler))
                    .with_state(state);
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = shutdown_rx.await;
                    })
                    .await
                    .expect("serve");
            });
        });
        let addr = addr_rx.recv().expect("mock server came up");
        MockServer {
            addr,
            counters,
            shutdown: Some(shutdown_tx),
            thread: Some(thread),
        }
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> Url {
        Url::parse(&format!("http://{}", self.addr)).expect("loopback url")
    }

    /// Endpoint profile pointing at this server.
    pub fn endpoint(&self, name: &str, kind: EndpointKind) -> EndpointProfile {
        EndpointProfile::new(name, self.base_url(), kind)
    }

    pub fn total_requests(&self) -> u64 {
        self.counters.total()
    }

    pub fn requests_for(&self, route: &str) -> u64 {
        self.counters.for_route(route)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(shutdown) = self.shutdown.take() {
            let _ = shutdown.send(());
        }
        if let Some(thread) = self.thread.take() {
            let _ = thread.join();
        }
    }
}
