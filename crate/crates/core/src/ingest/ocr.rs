//! External OCR orchestration.
//!
//! Rasterizing pages and recognizing Bangla/English text happen inside an
//! external command. This module only runs that command once per page image
//! and stitches the per-page outputs together.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use super::IngestError;

/// Inserted between consecutive pages of OCR output.
pub const PAGE_SEPARATOR: char = '\x0c';

/// Runs `ocr_command_template` over every page of `source_path` and returns
/// the page texts joined by form feeds, in page order.
///
/// `source_path` is either a single page image or a directory of page images
/// (pages ordered by file name, with digit runs compared numerically). The
/// template is executed through the platform shell after substituting the
/// quoted `{input}` page path and `{output}` text path.
pub fn preprocess_document(source_path: &Path, ocr_command_template: &str) -> Result<String, IngestError> {
    if !ocr_command_template.contains("{input}") || !ocr_command_template.contains("{output}") {
        return Err(IngestError::InvalidTemplate(ocr_command_template.to_string()));
    }
    if !source_path.exists() {
        return Err(IngestError::MissingFile(source_path.display().to_string()));
    }
    let pages = page_files(source_path)?;
    if pages.is_empty() {
        return Err(IngestError::EmptyOcrOutput(source_path.display().to_string()));
    }

    let scratch = tempfile::tempdir()?;
    let mut texts = Vec::with_capacity(pages.len());
    for (i, page) in pages.iter().enumerate() {
        let out_path = scratch.path().join(format!("page-{:05}.txt", i + 1));
        let command = ocr_command_template
            .replace("{input}", &shell_quote(&page.to_string_lossy()))
            .replace("{output}", &shell_quote(&out_path.to_string_lossy()));
        tracing::debug!(page = i + 1, %command, "running OCR command");
        let output = shell(&command).output()?;
        if !output.status.success() {
            return Err(IngestError::OcrFailed {
                page: i + 1,
                status: output
                    .status
                    .code()
                    .map_or_else(|| "signal".to_string(), |c| c.to_string()),
                stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
            });
        }
        let text = match fs::read(&out_path) {
            Ok(bytes) => String::from_utf8_lossy(&bytes).into_owned(),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(e.into()),
        };
        texts.push(text);
    }
    if texts.iter().all(|t| t.trim().is_empty()) {
        return Err(IngestError::EmptyOcrOutput(source_path.display().to_string()));
    }
    Ok(texts.join(&PAGE_SEPARATOR.to_string()))
}

fn page_files(source: &Path) -> Result<Vec<PathBuf>, IngestError> {
    if source.is_file() {
        return Ok(vec![source.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(source)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .filter(|p| {
            !p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with('.'))
        })
        .collect();
    files.sort_by_cached_key(|p| natural_key(&p.file_name().unwrap_or_default().to_string_lossy()));
    Ok(files)
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
enum KeyPart {
    Num(u128, usize),
    Text(String),
}

/// Sort key that orders "page2" before "page10".
fn natural_key(name: &str) -> Vec<KeyPart> {
    let mut parts = Vec::new();
    let mut chars = name.chars().peekable();
    while let Some(&c) = chars.peek() {
        let digit = c.is_ascii_digit();
        let mut run = String::new();
        while let Some(&c) = chars.peek() {
            if c.is_ascii_digit() != digit {
                break;
            }
            run.push(c);
            chars.next();
        }
        parts.push(if digit {
            KeyPart::Num(run.parse().unwrap_or(u128::MAX), run.len())
        } else {
            KeyPart::Text(run)
        });
    }
    parts
}

#[cfg(unix)]
fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

#[cfg(not(unix))]
fn shell_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\\\""))
}

#[cfg(unix)]
fn shell(command: &str) -> Command {
    let mut c = Command::new("sh");
    c.arg("-c").arg(command);
    c
}

#[cfg(not(unix))]
fn shell(command: &str) -> Command {
    let mut c = Command::new("cmd");
    c.arg("/C").arg(command);
    c
}
