use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LanguageCode, ModelError, TopicRegistry};

/// Which side of a topic a headline was generated to support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stance {
    Proponent,
    Opponent,
}

impl Stance {
    pub fn all() -> [Stance; 2] {
        [Stance::Proponent, Stance::Opponent]
    }

    pub fn label(self) -> &'static str {
        match self {
            Stance::Proponent => "proponent",
            Stance::Opponent => "opponent",
        }
    }
}

impl std::fmt::Display for Stance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One generated headline with its provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeadlineRecord {
    pub id: String,
    pub topic: String,
    pub stance: Stance,
    pub language: LanguageCode,
    pub model_id: String,
    pub text: String,
    pub generation_prompt_id: String,
}

/// Reads a headline corpus from a JSONL file and validates it against the
/// topic registry.
pub fn load_headline_corpus(
    path: &Path,
    registry: &TopicRegistry,
) -> Result<Vec<HeadlineRecord>, ModelError> {
    let file = File::open(path).map_err(|e| ModelError::io(path, e))?;
    read_headline_corpus(
        BufReader::new(file),
        &path.display().to_string(),
        registry,
    )
}

pub fn read_headline_corpus(
    reader: impl BufRead,
    origin: &str,
    registry: &TopicRegistry,
) -> Result<Vec<HeadlineRecord>, ModelError> {
    let mut records = Vec::new();
    let mut seen_ids: BTreeSet<String> = BTreeSet::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| ModelError::malformed(origin, index + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: HeadlineRecord = serde_json::from_str(&line)
            .map_err(|e| ModelError::malformed(origin, index + 1, e.to_string()))?;
        if !seen_ids.insert(record.id.clone()) {
            return Err(ModelError::DuplicateHeadline { id: record.id });
        }
        if !registry.contains(&record.topic) {
            return Err(ModelError::UnknownTopic {
                topic: record.topic,
            });
        }
        if record.text.trim().is_empty() {
            return Err(ModelError::EmptyText {
                context: format!("headline {}", record.id),
            });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_headline_corpus(
    records: &[HeadlineRecord],
    writer: &mut impl Write,
) -> std::io::Result<()> {
    for record in records {
        let line = serde_json::to_string(record)?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}
