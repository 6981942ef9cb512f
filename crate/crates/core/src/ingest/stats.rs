use std::fmt;

use serde::{Deserialize, Serialize};

use super::{DocumentMeta, IngestError};

/// Page-count statistics over a set of documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub total_docs: usize,
    pub total_pages: u64,
    pub min_pages: u32,
    pub max_pages: u32,
    pub mean_pages: f64,
}

pub fn corpus_stats(metas: &[DocumentMeta]) -> Result<StatsReport, IngestError> {
    let first = metas.first().ok_or(IngestError::EmptyDocumentList)?;
    let (mut min_pages, mut max_pages, mut total_pages) = (first.page_count, first.page_count, 0u64);
    for m in metas {
        min_pages = min_pages.min(m.page_count);
        max_pages = max_pages.max(m.page_count);
        total_pages += u64::from(m.page_count);
    }
    Ok(StatsReport {
        total_docs: metas.len(),
        total_pages,
        min_pages,
        max_pages,
        mean_pages: total_pages as f64 / metas.len() as f64,
    })
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = [
            ("Total Documents", self.total_docs.to_string()),
            ("Total Pages", self.total_pages.to_string()),
            ("Minimum Pages in a Document", self.min_pages.to_string()),
            ("Maximum Pages in a Document", self.max_pages.to_string()),
            ("Average Pages per Document", format!("{:.2}", self.mean_pages)),
        ];
        writeln!(f, "{:<30} {:>8}", "Metric", "Value")?;
        for (k, v) in rows {
            writeln!(f, "{k:<30} {v:>8}")?;
        }
        Ok(())
    }
}
