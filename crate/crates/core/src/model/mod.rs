//! Shared domain types: statement banks, headline corpora, topic registries,
//! and language codes, plus the line-delimited loaders that validate them.

mod bank;
mod corpus;
mod language;
mod topics;

pub use bank::{Axis, ModelResponse, PctStatement, StatementBank};
pub use corpus::{
    load_headline_corpus, read_headline_corpus, write_headline_corpus, HeadlineRecord, Stance,
};
pub use language::LanguageCode;
pub use topics::{TopicEntry, TopicRegistry, TopicStance};

use thiserror::Error;

/// Errors raised while loading or validating domain data files.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin} line {line}: {detail}")]
    MalformedFile {
        origin: String,
        line: usize,
        detail: String,
    },
    #[error("duplicate statement id {id}")]
    DuplicateStatement { id: u32 },
    #[error("duplicate headline id {id:?}")]
    DuplicateHeadline { id: String },
    #[error("duplicate topic {topic:?}")]
    DuplicateTopic { topic: String },
    #[error("statement id {id} outside the supported range 1..=62")]
    StatementIdRange { id: u32 },
    #[error("statement {id} has direction {value}, expected 1 or -1")]
    InvalidDirection { id: u32, value: i8 },
    #[error("statement {id} is missing text for language {language}")]
    MissingLanguage { id: u32, language: LanguageCode },
    #[error("statement bank holds no statements")]
    EmptyBank,
    #[error("{context} has empty text")]
    EmptyText { context: String },
    #[error("unknown topic {topic:?}")]
    UnknownTopic { topic: String },
    #[error("topic {topic:?} has no {stance} tag for language {language}")]
    MissingStanceTag {
        topic: String,
        stance: Stance,
        language: LanguageCode,
    },
    #[error("invalid language code {code:?}: {detail}")]
    InvalidLanguage { code: String, detail: String },
}

impl ModelError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        ModelError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn malformed(origin: &str, line: usize, detail: impl Into<String>) -> Self {
        ModelError::MalformedFile {
            origin: origin.to_string(),
            line,
            detail: detail.into(),
        }
    }
}
