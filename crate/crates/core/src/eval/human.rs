use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// 1–5 ratings per response, one per evaluator.
///
/// 1 incorrect and very poor quality, 2 mostly incorrect and poor quality,
/// 3 partially correct and average quality, 4 mostly correct and good
/// quality, 5 fully correct and excellent quality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct HumanRatings {
    pub per_response: BTreeMap<String, Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanSummary {
    pub per_response_mean: BTreeMap<String, f64>,
    pub overall: f64,
}

/// Averages each response over its evaluators, then averages those means.
pub fn aggregate_human_scores(ratings: &HumanRatings) -> Result<HumanSummary, EvalError> {
    let mut evaluators = None;
    let mut per_response_mean = BTreeMap::new();
    for (response, scores) in &ratings.per_response {
        if scores.is_empty() {
            return Err(EvalError::Empty("response without ratings"));
        }
        let expected = *evaluators.get_or_insert(scores.len());
        if scores.len() != expected {
            return Err(EvalError::RaggedRatings {
                response: response.clone(),
                expected,
                found: scores.len(),
            });
        }
        if let Some(&bad) = scores.iter().find(|r| !(1..=5).contains(*r)) {
            return Err(EvalError::RatingOutOfRange {
                response: response.clone(),
                rating: bad,
            });
        }
        let mean = scores.iter().map(|&r| f64::from(r)).sum::<f64>() / scores.len() as f64;
        per_response_mean.insert(response.clone(), mean);
    }
    if per_response_mean.is_empty() {
        return Err(EvalError::Empty("no ratings"));
    }
    let overall = per_response_mean.values().sum::<f64>() / per_response_mean.len() as f64;
    Ok(HumanSummary {
        per_response_mean,
        overall,
    })
}
