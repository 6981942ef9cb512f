//! Line-delimited JSON document manifests.

use std::collections::HashMap;
use std::path::Path;

use super::{DocumentMeta, IngestError};

pub fn load_manifest(path: &Path) -> Result<Vec<DocumentMeta>, IngestError> {
    if !path.exists() {
        return Err(IngestError::MissingFile(path.display().to_string()));
    }
    parse_manifest(&std::fs::read_to_string(path)?)
}

/// Parses one `DocumentMeta` per non-blank line. Line numbers in errors are
/// 1-based.
pub fn parse_manifest(content: &str) -> Result<Vec<DocumentMeta>, IngestError> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut metas = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let meta: DocumentMeta = serde_json::from_str(line).map_err(|e| IngestError::Manifest {
            line: line_no,
            message: e.to_string(),
        })?;
        meta.validate().map_err(|message| IngestError::Manifest {
            line: line_no,
            message,
        })?;
        if let Some(&first) = seen.get(&meta.doc_id) {
            return Err(IngestError::DuplicateDocId {
                doc_id: meta.doc_id,
                first,
                second: line_no,
            });
        }
        seen.insert(meta.doc_id.clone(), line_no);
        metas.push(meta);
    }
    Ok(metas)
}
