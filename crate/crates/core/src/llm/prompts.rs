//! Prompt templates for the generator and the relevance checker.
//!
//! A template file has an optional `[system]` section followed by a
//! `[user]` section. Placeholders `{query}`, `{chunks}` and `{language}` are
//! substituted in a single pass, so text inside a query is never
//! re-interpreted as a placeholder.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LlmError;

/// Language of the instruction text sent to the models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PromptLanguage {
    Bn,
    #[default]
    En,
}

impl PromptLanguage {
    pub fn code(self) -> &'static str {
        match self {
            PromptLanguage::Bn => "bn",
            PromptLanguage::En => "en",
        }
    }
}

impl std::str::FromStr for PromptLanguage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bn" => Ok(PromptLanguage::Bn),
            "en" => Ok(PromptLanguage::En),
            other => Err(format!("unknown prompt language {other:?} (expected bn or en)")),
        }
    }
}

/// Joins chunk texts with a `---` line between consecutive chunks.
pub const CHUNK_DELIMITER: &str = "\n---\n";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

impl PromptTemplate {
    pub fn parse(source: &str) -> Result<Self, LlmError> {
        let source = source.replace("\r\n", "\n");
        let (system, user) = match source.split_once("\n[user]\n") {
            Some((head, user)) => {
                let system = head
                    .trim_start()
                    .strip_prefix("[system]")
                    .ok_or_else(|| LlmError::Template("expected a [system] section before [user]".into()))?;
                (system.trim().to_string(), user)
            }
            None => match source.trim_start().strip_prefix("[user]\n") {
                Some(user) => (String::new(), user),
                None => (String::new(), source.as_str()),
            },
        };
        let user = user.trim_end().to_string();
        if !user.contains("{query}") {
            return Err(LlmError::Template("user section must contain {query}".into()));
        }
        Ok(Self { system, user })
    }

    pub fn render(&self, query: &str, chunks: &[&str], language: &str) -> RenderedPrompt {
        let joined = chunks.join(CHUNK_DELIMITER);
        let vars = [("query", query), ("chunks", joined.as_str()), ("language", language)];
        RenderedPrompt {
            system: substitute(&self.system, &vars),
            user: substitute(&self.user, &vars),
        }
    }
}

fn substitute(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = vars.iter().find_map(|(name, value)| {
            after
                .strip_prefix(name)
                .and_then(|t| t.strip_prefix('}'))
                .map(|tail| (value, tail))
        });
        match hit {
            Some((value, tail)) => {
                out.push_str(value);
                rest = tail;
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Generator and checker templates in both instruction languages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub generator_bn: PromptTemplate,
    pub generator_en: PromptTemplate,
    pub checker_bn: PromptTemplate,
    pub checker_en: PromptTemplate,
}

impl Default for PromptSet {
    fn default() -> Self {
        let parse = |s: &str| PromptTemplate::parse(s).expect("bundled template is valid");
        Self {
            generator_bn: parse(include_str!("../../templates/generator.bn.txt")),
            generator_en: parse(include_str!("../../templates/generator.en.txt")),
            checker_bn: parse(include_str!("../../templates/checker.bn.txt")),
            checker_en: parse(include_str!("../../templates/checker.en.txt")),
        }
    }
}

impl PromptSet {
    /// Loads `generator.{bn,en}.txt` and `checker.{bn,en}.txt` from `dir`,
    /// falling back to the bundled template for any file that is absent.
    pub fn load_dir(dir: &Path) -> Result<Self, LlmError> {
        let mut set = Self::default();
        for (name, slot) in [
            ("generator.bn.txt", &mut set.generator_bn),
            ("generator.en.txt", &mut set.generator_en),
            ("checker.bn.txt", &mut set.checker_bn),
            ("checker.en.txt", &mut set.checker_en),
        ] {
            let path = dir.join(name);
            if path.exists() {
                let src = std::fs::read_to_string(&path)
                    .map_err(|e| LlmError::Template(format!("{}: {e}", path.display())))?;
                *slot = PromptTemplate::parse(&src)
                    .map_err(|e| LlmError::Template(format!("{}: {e}", path.display())))?;
            }
        }
        Ok(set)
    }

    pub fn generator(&self, lang: PromptLanguage) -> &PromptTemplate {
        match lang {
            PromptLanguage::Bn => &self.generator_bn,
            PromptLanguage::En => &self.generator_en,
        }
    }

    pub fn checker(&self, lang: PromptLanguage) -> &PromptTemplate {
        match lang {
            PromptLanguage::Bn => &self.checker_bn,
            PromptLanguage::En => &self.checker_en,
        }
    }
}

/// Name of the query's language, written in the instruction language.
/// A query containing any Bengali-script letter counts as Bangla.
pub fn language_name(query: &str, instructions: PromptLanguage) -> &'static str {
    let bangla = query.chars().any(|c| ('\u{0980}'..='\u{09FF}').contains(&c));
    match (instructions, bangla) {
        (PromptLanguage::En, true) => "Bangla",
        (PromptLanguage::En, false) => "English",
        (PromptLanguage::Bn, true) => "বাংলা",
        (PromptLanguage::Bn, false) => "ইংরেজি",
    }
}
