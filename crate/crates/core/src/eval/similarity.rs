use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{Domain, EvalError, QaItem};
use crate::embedding::{cosine_similarity, Embedder};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemScore {
    pub id: String,
    pub domain: Domain,
    pub score: f64,
}

/// Mean (μ) and population standard deviation (σ) of answer/ground-truth
/// cosine similarities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_item: Vec<ItemScore>,
    pub mean: f64,
    pub std: f64,
    pub domain_means: BTreeMap<Domain, f64>,
    pub n_items: usize,
}

/// Arithmetic mean and population standard deviation.
pub fn mean_and_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

impl EvalReport {
    /// Aggregates per-item scores (kept in the given order).
    pub fn from_scores(per_item: Vec<ItemScore>) -> Result<Self, EvalError> {
        let scores: Vec<f64> = per_item.iter().map(|s| s.score).collect();
        let (mean, std) = mean_and_std(&scores).ok_or(EvalError::Empty("no items"))?;
        let mut grouped: BTreeMap<Domain, Vec<f64>> = BTreeMap::new();
        for s in &per_item {
            grouped.entry(s.domain).or_default().push(s.score);
        }
        let domain_means = grouped
            .into_iter()
            .map(|(d, v)| (d, v.iter().sum::<f64>() / v.len() as f64))
            .collect();
        Ok(Self {
            n_items: per_item.len(),
            per_item,
            mean,
            std,
            domain_means,
        })
    }
}

/// Scores each item as cosine(embed(answer), embed(ground_truth)).
pub fn semantic_similarity_eval(
    answers: &HashMap<String, String>,
    items: &[QaItem],
    embedder: &dyn Embedder,
) -> Result<EvalReport, EvalError> {
    if items.is_empty() {
        return Err(EvalError::Empty("no items"));
    }
    let mut texts = Vec::with_capacity(items.len() * 2);
    for item in items {
        let answer = answers
            .get(&item.id)
            .ok_or_else(|| EvalError::MissingAnswer(item.id.clone()))?;
        if answer.trim().is_empty() {
            return Err(EvalError::EmptyAnswer(item.id.clone()));
        }
        texts.push(answer.clone());
    }
    texts.extend(items.iter().map(|i| i.ground_truth.clone()));
    let vectors = embedder.embed(&texts)?;
    let (answer_vecs, truth_vecs) = vectors.split_at(items.len());
    let per_item = items
        .iter()
        .zip(answer_vecs.iter().zip(truth_vecs))
        .map(|(item, (a, t))| {
            Ok(ItemScore {
                id: item.id.clone(),
                domain: item.domain,
                score: cosine_similarity(a, t)?,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    EvalReport::from_scores(per_item)
}
