use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LanguageCode, ModelError, Stance};

/// One side of a debate topic with its per-language stance tags.
///
/// The tag text is what headline prompts interpolate for `{stance}`, for
/// example "Pro Abortion Rights" versus "Abortion Should Be Prohibited".
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopicStance {
    pub topic: String,
    pub stance: Stance,
    pub tag_text_by_language: BTreeMap<LanguageCode, String>,
}

impl TopicStance {
    pub fn tag_in(&self, language: &LanguageCode) -> Result<&str, ModelError> {
        self.tag_text_by_language
            .get(language)
            .map(String::as_str)
            .ok_or_else(|| ModelError::MissingStanceTag {
                topic: self.topic.clone(),
                stance: self.stance,
                language: language.clone(),
            })
    }
}

/// A debate topic with both of its stance tag sets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopicEntry {
    pub topic: String,
    pub proponent_tag: BTreeMap<LanguageCode, String>,
    pub opponent_tag: BTreeMap<LanguageCode, String>,
}

/// The configured topic list. Every topic carries exactly two stances.
#[derive(Debug, Clone)]
pub struct TopicRegistry {
    entries: Vec<TopicEntry>,
}

impl TopicRegistry {
    pub fn from_entries(entries: Vec<TopicEntry>) -> Result<Self, ModelError> {
        let mut seen = std::collections::BTreeSet::new();
        for entry in &entries {
            if entry.topic.trim().is_empty() {
                return Err(ModelError::EmptyText {
                    context: "topic name".to_string(),
                });
            }
            if !seen.insert(entry.topic.clone()) {
                return Err(ModelError::DuplicateTopic {
                    topic: entry.topic.clone(),
                });
            }
            for (stance, tags) in [
                (Stance::Proponent, &entry.proponent_tag),
                (Stance::Opponent, &entry.opponent_tag),
            ] {
                for (language, tag) in tags {
                    if tag.trim().is_empty() {
                        return Err(ModelError::EmptyText {
                            context: format!(
                                "{stance} tag for topic {} language {language}",
                                entry.topic
                            ),
                        });
                    }
                }
            }
        }
        Ok(TopicRegistry { entries })
    }

    /// Reads a registry from a JSON file holding an array of topic entries.
    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let file = File::open(path).map_err(|e| ModelError::io(path, e))?;
        let entries: Vec<TopicEntry> = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| ModelError::malformed(&path.display().to_string(), 1, e.to_string()))?;
        Self::from_entries(entries)
    }

    pub fn entries(&self) -> &[TopicEntry] {
        &self.entries
    }

    pub fn contains(&self, topic: &str) -> bool {
        self.entries.iter().any(|e| e.topic == topic)
    }

    pub fn resolve(&self, topic: &str) -> Result<&TopicEntry, ModelError> {
        self.entries
            .iter()
            .find(|e| e.topic == topic)
            .ok_or_else(|| ModelError::UnknownTopic {
                topic: topic.to_string(),
            })
    }

    /// Builds the [`TopicStance`] for one side of a registered topic.
    pub fn stance_of(&self, topic: &str, stance: Stance) -> Result<TopicStance, ModelError> {
        let entry = self.resolve(topic)?;
        let tags = match stance {
            Stance::Proponent => &entry.proponent_tag,
            Stance::Opponent => &entry.opponent_tag,
        };
        Ok(TopicStance {
            topic: entry.topic.clone(),
            stance,
            tag_text_by_language: tags.clone(),
        })
    }
}
