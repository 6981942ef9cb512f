use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Domain, EvalError, EvalReport};

/// `0.76 ± 0.114`
pub fn format_mu_sigma(mean: f64, std: f64) -> String {
    format!("{mean:.2} ± {std:.3}")
}

/// `+0.06`
pub fn format_delta(delta: f64) -> String {
    // avoid "-0.00" for deltas that round to zero
    let rounded = (delta * 100.0).round() / 100.0;
    if rounded == 0.0 {
        return "+0.00".to_string();
    }
    format!("{delta:+.2}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub vanilla: f64,
    pub advanced: f64,
    pub delta: f64,
}

impl ComparisonRow {
    fn new(vanilla: f64, advanced: f64) -> Self {
        Self {
            vanilla,
            advanced,
            delta: advanced - vanilla,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub vanilla_std: f64,
    pub advanced_std: f64,
    pub overall: ComparisonRow,
    pub domains: BTreeMap<Domain, ComparisonRow>,
    pub human: Option<ComparisonRow>,
}

/// Pairs two reports computed over the same items.
pub fn compare_pipelines(vanilla: &EvalReport, advanced: &EvalReport) -> Result<ComparisonTable, EvalError> {
    let ids = |r: &EvalReport| r.per_item.iter().map(|s| s.id.clone()).collect::<BTreeSet<_>>();
    let (left, right) = (ids(vanilla), ids(advanced));
    if left != right || left.len() != vanilla.per_item.len() || right.len() != advanced.per_item.len() {
        let diff: Vec<_> = left.symmetric_difference(&right).take(5).cloned().collect();
        return Err(EvalError::IdMismatch(if diff.is_empty() {
            "duplicate ids".to_string()
        } else {
            diff.join(", ")
        }));
    }
    let mut domains = BTreeMap::new();
    for (domain, v) in &vanilla.domain_means {
        let a = advanced
            .domain_means
            .get(domain)
            .ok_or_else(|| EvalError::IdMismatch(format!("domain {domain} missing")))?;
        domains.insert(*domain, ComparisonRow::new(*v, *a));
    }
    if domains.len() != advanced.domain_means.len() {
        return Err(EvalError::IdMismatch("domain labels differ".to_string()));
    }
    Ok(ComparisonTable {
        vanilla_std: vanilla.std,
        advanced_std: advanced.std,
        overall: ComparisonRow::new(vanilla.mean, advanced.mean),
        domains,
        human: None,
    })
}

impl ComparisonTable {
    pub fn with_human(mut self, vanilla: f64, advanced: f64) -> Self {
        self.human = Some(ComparisonRow::new(vanilla, advanced));
        self
    }

    /// Plain-text rendering: an overall block then one row per domain.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut header = vec!["Pipeline".to_string(), "Cosine (μ ± σ)".to_string()];
        if self.human.is_some() {
            header.push("Human".to_string());
        }
        let mut rows = vec![header];
        let mut vanilla = vec![
            "Vanilla RAG".to_string(),
            format_mu_sigma(self.overall.vanilla, self.vanilla_std),
        ];
        let mut advanced = vec![
            "Advanced RAG".to_string(),
            format_mu_sigma(self.overall.advanced, self.advanced_std),
        ];
        let mut delta = vec!["Delta".to_string(), format_delta(self.overall.delta)];
        if let Some(h) = &self.human {
            vanilla.push(format!("{:.2}", h.vanilla));
            advanced.push(format!("{:.2}", h.advanced));
            delta.push(format_delta(h.delta));
        }
        rows.extend([vanilla, advanced, delta]);
        write_aligned(&mut out, &rows);

        out.push('\n');
        let mut rows = vec![vec![
            "Domain".to_string(),
            "Vanilla".to_string(),
            "Advanced".to_string(),
            "Delta".to_string(),
        ]];
        for (domain, row) in &self.domains {
            rows.push(vec![
                domain.title().to_string(),
                format!("{:.2}", row.vanilla),
                format!("{:.2}", row.advanced),
                format_delta(row.delta),
            ]);
        }
        write_aligned(&mut out, &rows);
        out
    }
}

fn write_aligned(out: &mut String, rows: &[Vec<String>]) {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c + 1 == row.len() {
                line.push_str(cell);
            } else {
                let pad = widths[c] - cell.chars().count() + 2;
                let _ = write!(line, "{cell}{}", " ".repeat(pad));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
}
