//! Evaluation harness: QA testsets, embedding-similarity scoring, human
//! rating aggregation and side-by-side pipeline reports.

mod human;
mod report;
mod similarity;
mod testset;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::EmbedError;

pub use human::{aggregate_human_scores, HumanRatings, HumanSummary};
pub use report::{compare_pipelines, format_delta, format_mu_sigma, ComparisonRow, ComparisonTable};
pub use similarity::{mean_and_std, semantic_similarity_eval, EvalReport, ItemScore};
pub use testset::{load_testset, parse_testset, AnswerRecord, QaItem};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("testset line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("testset line {line}: unknown domain label {label:?}")]
    UnknownDomain { line: usize, label: String },
    #[error("duplicate item id {id:?} on lines {first} and {second}")]
    DuplicateId { id: String, first: usize, second: usize },
    #[error("no answer for item {0:?}")]
    MissingAnswer(String),
    #[error("answer for item {0:?} is empty")]
    EmptyAnswer(String),
    #[error("nothing to evaluate: {0}")]
    Empty(&'static str),
    #[error("rating {rating} for response {response:?} is outside 1..=5")]
    RatingOutOfRange { response: String, rating: u8 },
    #[error("response {response:?} has {found} ratings, expected {expected}")]
    RaggedRatings {
        response: String,
        expected: usize,
        found: usize,
    },
    #[error("reports cover different item ids ({0})")]
    IdMismatch(String),
    #[error("embedding failed: {0}")]
    Embed(#[from] EmbedError),
    #[error("testset file not found: {0}")]
    MissingFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Question categories of the evaluation set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Factual,
    Temporal,
    GazetteSearch,
    BanglaDialect,
    Statistical,
    GrammarSpellError,
    OutOfContext,
    Others,
}

impl Domain {
    pub const ALL: [Domain; 8] = [
        Domain::Factual,
        Domain::Temporal,
        Domain::GazetteSearch,
        Domain::BanglaDialect,
        Domain::Statistical,
        Domain::GrammarSpellError,
        Domain::OutOfContext,
        Domain::Others,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Domain::Factual => "factual",
            Domain::Temporal => "temporal",
            Domain::GazetteSearch => "gazette_search",
            Domain::BanglaDialect => "bangla_dialect",
            Domain::Statistical => "statistical",
            Domain::GrammarSpellError => "grammar_spell_error",
            Domain::OutOfContext => "out_of_context",
            Domain::Others => "others",
        }
    }

    /// Column heading used in rendered reports.
    pub fn title(self) -> &'static str {
        match self {
            Domain::Factual => "Factual Question",
            Domain::Temporal => "Temporal Changes",
            Domain::GazetteSearch => "Gazette Search",
            Domain::BanglaDialect => "Bangla Dialect",
            Domain::Statistical => "Statistical Question",
            Domain::GrammarSpellError => "Grammar/Spell Error",
            Domain::OutOfContext => "Out of Context",
            Domain::Others => "Others",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.label() == label)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}
