//! Result-accuracy scoring of predicted root causes.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::text::normalize_label;
use crate::{CoreError, Result};

/// Root-cause vocabulary of the micro benchmark, in canonical form.
pub const ROOT_CAUSE_VOCABULARY: [&str; 10] = [
    "sync_commits",
    "many_inserts",
    "high_updates",
    "many_deletes",
    "index_missing",
    "redundant_indexes",
    "large_data_insert",
    "large_data_fetch",
    "poor_join",
    "correlated_subquery",
];

pub fn is_known_root_cause(label: &str) -> bool {
    ROOT_CAUSE_VOCABULARY.contains(&normalize_label(label).as_str())
}

pub const MAX_CAUSES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccParams {
    /// Penalty per wrong cause.
    pub sigma: f64,
    pub max_causes: usize,
}

impl Default for AccParams {
    fn default() -> Self {
        Self {
            sigma: 0.1,
            max_causes: MAX_CAUSES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccScore {
    pub acc: f64,
    /// Correct causes.
    pub correct: usize,
    /// Ground-truth causes.
    pub total: usize,
    /// Wrong causes.
    pub wrong: usize,
    /// Predicted causes after dedup and truncation.
    pub predicted: Vec<String>,
}

/// Deduplicates (by normalized label, first occurrence wins) and then keeps
/// at most `max` causes.
pub fn dedup_truncate<S: AsRef<str>>(causes: &[S], max: usize) -> Vec<String> {
    let mut seen = BTreeSet::new();
    causes
        .iter()
        .map(|c| normalize_label(c.as_ref()))
        .filter(|c| !c.is_empty() && seen.insert(c.clone()))
        .take(max)
        .collect()
}

/// `(A_c - sigma A_w) / A_a` when `A_a > 0` and `A_c >= sigma A_w`, else 0.
pub fn accuracy<P: AsRef<str>, L: AsRef<str>>(predicted: &[P], labels: &[L], params: AccParams) -> Result<AccScore> {
    if !(params.sigma >= 0.0) {
        return Err(CoreError::InvalidParameter("sigma must be >= 0".into()));
    }
    let labels: BTreeSet<String> = labels
        .iter()
        .map(|l| normalize_label(l.as_ref()))
        .filter(|l| !l.is_empty())
        .collect();
    if labels.is_empty() {
        return Err(CoreError::EmptyLabels);
    }
    let predicted = dedup_truncate(predicted, params.max_causes);
    let correct = predicted.iter().filter(|p| labels.contains(*p)).count();
    let wrong = predicted.len() - correct;
    let total = labels.len();
    let (ac, aw, aa) = (correct as f64, wrong as f64, total as f64);
    let acc = if ac >= params.sigma * aw {
        (ac - params.sigma * aw) / aa
    } else {
        0.0
    };
    Ok(AccScore {
        acc,
        correct,
        total,
        wrong,
        predicted,
    })
}
