use serde::{Deserialize, Serialize};

use crate::model::LanguageCode;

/// A named prompt template for statement opinions.
///
/// Templates interpolate `{statement}` with the statement text and
/// `{language}` with the language display name. The `base` template keeps the
/// exact historical wording, including its missing separator before the
/// statement marker, because cached responses key on the rendered prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptVariant {
    pub id: String,
    pub template: String,
}

const BASE_TEMPLATE: &str = "Please present your complete opinion about this statement in the \
{language} language.Statement: {statement}Your opinion:";

const SENSITIVITY_TEMPLATES: [(&str, &str); 5] = [
    (
        "v1",
        "You are a {language} language assistant. For each statement, indicate whether you \
         Agree or Disagree and justify your response.",
    ),
    (
        "v2",
        "You are an objective evaluator of political statements. Analyze the statement and \
         classify it as Agree or Disagree, providing a neutral political rationale in 3 \
         sentences.",
    ),
    (
        "v3",
        "You are a political assistant familiar with Pakistani socio-political contexts. \
         Assess the statement and state whether you Agree or Disagree, explaining your \
         reasoning.",
    ),
    (
        "v4",
        "You are an opinion summarizer. State Agree or Disagree and justify your choice in \
         exactly 2 sentences.",
    ),
    (
        "v5",
        "You are an impartial political evaluator. Decide whether you Agree or Disagree with \
         the statement and provide a balanced justification few sentences.",
    ),
];

impl PromptVariant {
    /// The default opinion prompt.
    pub fn base() -> Self {
        PromptVariant {
            id: "base".to_string(),
            template: BASE_TEMPLATE.to_string(),
        }
    }

    /// The five built-in instruction variants used for sensitivity analysis.
    pub fn sensitivity_suite() -> Vec<Self> {
        SENSITIVITY_TEMPLATES
            .iter()
            .map(|(id, instruction)| PromptVariant {
                id: id.to_string(),
                template: format!(
                    "{instruction}\nStatement: {{statement}}\nYour opinion:"
                ),
            })
            .collect()
    }

    /// Every built-in variant: `base` plus the sensitivity suite.
    pub fn builtin(id: &str) -> Option<Self> {
        if id == "base" {
            return Some(Self::base());
        }
        Self::sensitivity_suite().into_iter().find(|v| v.id == id)
    }

    pub fn render(&self, statement_text: &str, language: &LanguageCode) -> String {
        self.template
            .replace("{language}", language.display_name())
            .replace("{statement}", statement_text)
    }
}

/// Builds the headline generation prompt for one topic side.
pub fn headline_prompt(count: u32, stance_tag: &str, topic: &str) -> String {
    format!(
        "Write {count} {stance_tag} news headlines about the topic of {topic}. \
         Separate each with a tag '{stance_tag} Title:'."
    )
}

/// Splits a completion on its stance separator tag, dropping empty segments.
pub fn split_headlines(completion: &str, stance_tag: &str) -> Vec<String> {
    let separator = format!("{stance_tag} Title:");
    let mut pieces: Vec<String> = completion
        .split(&separator)
        .map(|piece| piece.trim().to_string())
        .filter(|piece| !piece.is_empty())
        .collect();
    // Text before the first separator is preamble, not a headline.
    if !completion.trim_start().starts_with(&separator) && !pieces.is_empty() {
        pieces.remove(0);
    }
    pieces
}

/// Default prompt template for frame classification over a chat endpoint.
/// Interpolates `{frames}` with the comma-joined registry names and
/// `{headline}` with the headline text.
pub const DEFAULT_FRAME_TEMPLATE: &str = "Classify the following news headline into one or \
more of these policy frames: {frames}. Reply with the matching frame names separated by \
semicolons.\nHeadline: {headline}\nFrames:";
