use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Domain, EvalError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaItem {
    pub id: String,
    pub question: String,
    pub ground_truth: String,
    pub domain: Domain,
}

/// One line of an answers file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerRecord {
    pub id: String,
    pub answer: String,
    pub pipeline: String,
    pub trace_digest: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawItem {
    id: String,
    question: String,
    ground_truth: String,
    domain: String,
}

pub fn load_testset(path: &Path) -> Result<Vec<QaItem>, EvalError> {
    if !path.is_file() {
        return Err(EvalError::MissingFile(path.display().to_string()));
    }
    parse_testset(&std::fs::read_to_string(path)?)
}

/// Parses line-delimited `{id, question, ground_truth, domain}` records.
/// Blank lines are skipped; line numbers in errors are 1-based.
pub fn parse_testset(content: &str) -> Result<Vec<QaItem>, EvalError> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut items = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawItem = serde_json::from_str(line).map_err(|e| EvalError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        for (field, value) in [
            ("id", &raw.id),
            ("question", &raw.question),
            ("ground_truth", &raw.ground_truth),
        ] {
            if value.trim().is_empty() {
                return Err(EvalError::Malformed {
                    line: line_no,
                    message: format!("field {field} is empty"),
                });
            }
        }
        let domain = Domain::from_label(&raw.domain).ok_or_else(|| EvalError::UnknownDomain {
            line: line_no,
            label: raw.domain.clone(),
        })?;
        if let Some(&first) = seen.get(&raw.id) {
            return Err(EvalError::DuplicateId {
                id: raw.id,
                first,
                second: line_no,
            });
        }
        seen.insert(raw.id.clone(), line_no);
        items.push(QaItem {
            id: raw.id,
            question: raw.question,
            ground_truth: raw.ground_truth,
            domain,
        });
    }
    Ok(items)
}
