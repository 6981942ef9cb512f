//! Parser for the relevance checker's reply.
//!
//! Expected shape:
//!
//! ```text
//! VERDICT: IRRELEVANT
//! REFINED_QUERY: <rewritten question>
//! ```
//!
//! The first line of the form `VERDICT: RELEVANT|IRRELEVANT` (keyword and
//! value case-insensitive) decides. An IRRELEVANT verdict needs a later
//! `REFINED_QUERY:` line. Anything else fails open: the verdict becomes
//! RELEVANT and `parse_failed` is set, so the pipeline proceeds to generation
//! instead of looping on garbage.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Relevant,
    Irrelevant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceVerdict {
    pub verdict: Verdict,
    pub refined_query: Option<String>,
    pub parse_failed: bool,
    pub raw_response: String,
}

impl RelevanceVerdict {
    fn fail_open(raw: &str) -> Self {
        Self {
            verdict: Verdict::Relevant,
            refined_query: None,
            parse_failed: true,
            raw_response: raw.to_string(),
        }
    }

    /// True when the checker asked for another retrieval round.
    pub fn wants_refinement(&self) -> bool {
        self.verdict == Verdict::Irrelevant && self.refined_query.is_some()
    }
}

fn strip_prefix_ignore_case<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    let head = s.get(..prefix.len())?;
    head.eq_ignore_ascii_case(prefix).then(|| &s[prefix.len()..])
}

fn verdict_line(line: &str) -> Option<Verdict> {
    let rest = strip_prefix_ignore_case(line.trim_start(), "VERDICT:")?;
    let value = rest.trim();
    if value.eq_ignore_ascii_case("RELEVANT") {
        Some(Verdict::Relevant)
    } else if value.eq_ignore_ascii_case("IRRELEVANT") {
        Some(Verdict::Irrelevant)
    } else {
        None
    }
}

fn refined_line(line: &str) -> Option<String> {
    let rest = line.trim_start().strip_prefix("REFINED_QUERY:")?;
    let q = rest.trim();
    (!q.is_empty()).then(|| q.to_string())
}

/// Total, deterministic parse of a checker reply.
pub fn parse_verdict(raw: &str) -> RelevanceVerdict {
    let mut lines = raw.lines();
    let Some(verdict) = lines.by_ref().find_map(verdict_line) else {
        return RelevanceVerdict::fail_open(raw);
    };
    match verdict {
        Verdict::Relevant => RelevanceVerdict {
            verdict,
            refined_query: None,
            parse_failed: false,
            raw_response: raw.to_string(),
        },
        Verdict::Irrelevant => match lines.find_map(refined_line) {
            Some(q) => RelevanceVerdict {
                verdict,
                refined_query: Some(q),
                parse_failed: false,
                raw_response: raw.to_string(),
            },
            None => RelevanceVerdict::fail_open(raw),
        },
    }
}
