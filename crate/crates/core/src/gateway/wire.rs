use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Canonical stance labels, in the order classifier payloads request them.
pub const STANCE_LABELS: [&str; 4] = ["Strongly Agree", "Agree", "Disagree", "Strongly Disagree"];

/// Chat completion request body.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: &str) -> Self {
        ChatMessage {
            role: "user".to_string(),
            content: content.to_string(),
        }
    }
}

/// Chat completion response body.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
}

/// Zero-shot stance classification request body.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub premise: String,
    pub hypothesis: String,
    pub labels: Vec<String>,
}

/// Stance classification response: parallel label and score arrays, in
/// whatever order the upstream chose.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub labels: Vec<String>,
    pub scores: Vec<f64>,
}

/// Named entity recognition request body.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NerRequest {
    pub text: String,
    pub language: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NerResponse {
    pub entities: Vec<NerEntity>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NerEntity {
    pub surface: String,
    pub category: String,
}

/// Sentiment scoring request body.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SentimentRequest {
    pub text: String,
}

/// Raw sentiment scores; nonnegative but not necessarily normalized.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SentimentResponse {
    pub positive: f64,
    pub negative: f64,
    pub neutral: f64,
}

/// Cache key for a request: hex SHA-256 over the endpoint name, route, and
/// canonical request body.
///
/// Bodies are canonicalized by serializing through [`serde_json::Value`],
/// which holds object members in sorted key order, so semantically equal
/// requests always share a key.
pub fn cache_key(endpoint: &str, route: &str, canonical_body: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(endpoint.as_bytes());
    hasher.update(b"\n");
    hasher.update(route.as_bytes());
    hasher.update(b"\n");
    hasher.update(canonical_body.as_bytes());
    hex::encode(hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chat_request_serializes_with_sorted_keys_through_value() {
        let request = ChatRequest {
            model: "m1".to_string(),
            messages: vec![ChatMessage::user("hello")],
            temperature: 0.0,
            top_p: 1.0,
            max_tokens: 150,
        };
        let canonical = serde_json::to_value(&request).unwrap().to_string();
        assert_eq!(
            canonical,
            "{\"max_tokens\":150,\"messages\":[{\"content\":\"hello\",\"role\":\"user\"}],\
             \"model\":\"m1\",\"temperature\":0.0,\"top_p\":1.0}"
        );
    }

    #[test]
    fn cache_keys_separate_endpoints_routes_and_bodies() {
        let a = cache_key("ep1", "/chat", "{}");
        assert_eq!(a.len(), 64);
        assert_ne!(a, cache_key("ep2", "/chat", "{}"));
        assert_ne!(a, cache_key("ep1", "/classify", "{}"));
        assert_ne!(a, cache_key("ep1", "/chat", "{\"x\":1}"));
        assert_eq!(a, cache_key("ep1", "/chat", "{}"));
    }

    #[test]
    fn key_order_in_source_structs_does_not_matter() {
        let one: serde_json::Value =
            serde_json::from_str("{\"b\":1,\"a\":{\"d\":2,\"c\":3}}").unwrap();
        let two: serde_json::Value =
            serde_json::from_str("{\"a\":{\"c\":3,\"d\":2},\"b\":1}").unwrap();
        assert_eq!(one.to_string(), two.to_string());
    }
}
