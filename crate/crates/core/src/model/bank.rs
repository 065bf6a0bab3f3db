use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{LanguageCode, ModelError};

/// Compass axis a statement contributes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Economic,
    Social,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::Economic => "economic",
            Axis::Social => "social",
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One test statement with its per-language renderings.
///
/// `direction` is `1` when agreement moves the axis score in the positive
/// direction and `-1` when it moves it negative. The mapping ships as a
/// documented project convention and can be overridden in the bank file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PctStatement {
    pub id: u32,
    pub axis: Axis,
    pub direction: i8,
    pub text: BTreeMap<LanguageCode, String>,
}

impl PctStatement {
    pub fn text_in(&self, language: &LanguageCode) -> Option<&str> {
        self.text.get(language).map(String::as_str)
    }
}

/// One raw model reply to a statement prompt.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelResponse {
    pub statement_id: u32,
    pub model_id: String,
    pub language: LanguageCode,
    pub prompt_variant_id: String,
    pub text: String,
    pub retrieved_at: DateTime<Utc>,
}

/// A validated set of statements sharing one language census.
///
/// Statements are held sorted by id. Every statement carries text for every
/// language the bank declares; the declared set is the union observed at load
/// time, so a single statement missing one translation fails validation.
#[derive(Debug, Clone)]
pub struct StatementBank {
    statements: Vec<PctStatement>,
    languages: BTreeSet<LanguageCode>,
}

impl StatementBank {
    pub fn from_statements(mut statements: Vec<PctStatement>) -> Result<Self, ModelError> {
        if statements.is_empty() {
            return Err(ModelError::EmptyBank);
        }
        statements.sort_by_key(|s| s.id);
        let mut languages: BTreeSet<LanguageCode> = BTreeSet::new();
        let mut last_id = 0u32;
        for statement in &statements {
            if statement.id < 1 || statement.id > 62 {
                return Err(ModelError::StatementIdRange { id: statement.id });
            }
            if statement.id == last_id {
                return Err(ModelError::DuplicateStatement { id: statement.id });
            }
            last_id = statement.id;
            if statement.direction != 1 && statement.direction != -1 {
                return Err(ModelError::InvalidDirection {
                    id: statement.id,
                    value: statement.direction,
                });
            }
            for (language, text) in &statement.text {
                if text.trim().is_empty() {
                    return Err(ModelError::EmptyText {
                        context: format!("statement {} text for {}", statement.id, language),
                    });
                }
                languages.insert(language.clone());
            }
        }
        for statement in &statements {
            for language in &languages {
                if !statement.text.contains_key(language) {
                    return Err(ModelError::MissingLanguage {
                        id: statement.id,
                        language: language.clone(),
                    });
                }
            }
        }
        Ok(StatementBank {
            statements,
            languages,
        })
    }

    /// Reads a bank from a JSONL file, one statement object per line.
    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let file = File::open(path).map_err(|e| ModelError::io(path, e))?;
        Self::from_reader(BufReader::new(file), &path.display().to_string())
    }

    pub fn from_reader(reader: impl BufRead, origin: &str) -> Result<Self, ModelError> {
        let mut statements = Vec::new();
        for (index, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| ModelError::malformed(origin, index + 1, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let statement: PctStatement = serde_json::from_str(&line)
                .map_err(|e| ModelError::malformed(origin, index + 1, e.to_string()))?;
            statements.push(statement);
        }
        Self::from_statements(statements)
    }

    /// Writes the bank back out as JSONL, sorted by id.
    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let file = File::create(path).map_err(|e| ModelError::io(path, e))?;
        let mut writer = BufWriter::new(file);
        self.to_writer(&mut writer)
            .map_err(|e| ModelError::io(path, e))
    }

    pub fn to_writer(&self, writer: &mut impl Write) -> std::io::Result<()> {
        for statement in &self.statements {
            let line = serde_json::to_string(statement)?;
            writeln!(writer, "{line}")?;
        }
        Ok(())
    }

    pub fn statements(&self) -> &[PctStatement] {
        &self.statements
    }

    pub fn languages(&self) -> &BTreeSet<LanguageCode> {
        &self.languages
    }

    pub fn get(&self, id: u32) -> Option<&PctStatement> {
        self.statements
            .binary_search_by_key(&id, |s| s.id)
            .ok()
            .map(|i| &self.statements[i])
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }
}
