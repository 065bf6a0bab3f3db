use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use super::ModelError;

/// Lowercase language code used to key statement translations, stance tags,
/// and prompt construction.
///
/// Codes are one to eight ASCII lowercase letters. The six codes with
/// built-in display names are `en`, `ur`, `pa`, `sd`, `ps`, and `bal`; any
/// other code renders as itself in prompts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct LanguageCode(String);

impl LanguageCode {
    pub fn new(code: &str) -> Result<Self, ModelError> {
        if code.is_empty() || code.len() > 8 {
            return Err(ModelError::InvalidLanguage {
                code: code.to_string(),
                detail: "expected one to eight characters".to_string(),
            });
        }
        if !code.bytes().all(|b| b.is_ascii_lowercase()) {
            return Err(ModelError::InvalidLanguage {
                code: code.to_string(),
                detail: "expected ASCII lowercase letters".to_string(),
            });
        }
        Ok(LanguageCode(code.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Human-readable name substituted for `{language}` in prompt templates.
    pub fn display_name(&self) -> &str {
        match self.0.as_str() {
            "en" => "English",
            "ur" => "Urdu",
            "pa" => "Punjabi",
            "sd" => "Sindhi",
            "ps" => "Pashto",
            "bal" => "Balochi",
            other => other,
        }
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for LanguageCode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LanguageCode::new(s)
    }
}

impl<'de> Deserialize<'de> for LanguageCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        LanguageCode::new(&raw).map_err(D::Error::custom)
    }
}
