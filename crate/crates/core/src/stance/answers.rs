use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{OrdinalStance, StanceError};
use crate::model::StatementBank;

/// One answer sheet line: a statement id with its ordinal Likert label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertAnswer {
    pub statement_id: u32,
    pub ordinal_label: u8,
}

/// Writes a complete answer sheet for the bank, one JSON object per line in
/// ascending statement id order.
///
/// Every statement in the bank must have an answer and every answer must
/// reference a bank statement, so partial sheets fail loudly instead of
/// exporting silently truncated output.
pub fn export_likert_answers(
    bank: &StatementBank,
    answers: &BTreeMap<u32, OrdinalStance>,
    writer: &mut impl Write,
) -> Result<(), StanceError> {
    for id in answers.keys() {
        if bank.get(*id).is_none() {
            return Err(StanceError::UnknownStatement { id: *id });
        }
    }
    for statement in bank.statements() {
        let ordinal = answers
            .get(&statement.id)
            .ok_or(StanceError::MissingStatement { id: statement.id })?;
        let line = serde_json::to_string(&LikertAnswer {
            statement_id: statement.id,
            ordinal_label: ordinal.label(),
        })?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

/// Reads an answer sheet, enforcing the format contract: valid labels,
/// no duplicate ids, ascending id order.
pub fn load_likert_answers(
    reader: impl BufRead,
    origin: &str,
) -> Result<BTreeMap<u32, OrdinalStance>, StanceError> {
    let mut answers = BTreeMap::new();
    let mut last_id = 0u32;
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let answer: LikertAnswer =
            serde_json::from_str(&line).map_err(|e| StanceError::MalformedAnswers {
                origin: origin.to_string(),
                line: index + 1,
                detail: e.to_string(),
            })?;
        let ordinal = OrdinalStance::from_label(answer.ordinal_label)?;
        if answers.contains_key(&answer.statement_id) {
            return Err(StanceError::DuplicateAnswer {
                id: answer.statement_id,
            });
        }
        if answer.statement_id <= last_id {
            return Err(StanceError::MalformedAnswers {
                origin: origin.to_string(),
                line: index + 1,
                detail: format!(
                    "statement id {} breaks ascending order",
                    answer.statement_id
                ),
            });
        }
        last_id = answer.statement_id;
        answers.insert(answer.statement_id, ordinal);
    }
    Ok(answers)
}

/// Checks that an answer map covers a bank exactly.
pub fn check_answers_cover_bank(
    bank: &StatementBank,
    answers: &BTreeMap<u32, OrdinalStance>,
) -> Result<(), StanceError> {
    for id in answers.keys() {
        if bank.get(*id).is_none() {
            return Err(StanceError::UnknownStatement { id: *id });
        }
    }
    for statement in bank.statements() {
        if !answers.contains_key(&statement.id) {
            return Err(StanceError::MissingStatement { id: statement.id });
        }
    }
    Ok(())
}
