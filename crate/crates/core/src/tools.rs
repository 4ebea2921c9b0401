//! Tool specifications and similarity-based top-k selection.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgSpec {
    pub name: String,
    /// Semantic type, e.g. `start_time`, `metric_name`, `text`.
    #[serde(rename = "type")]
    pub semantic_type: String,
    #[serde(default)]
    pub required: bool,
}

/// One API inside the categories / tools / APIs hierarchy.
///
/// `description` is the utilization specification shown to the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub category: String,
    pub tool: String,
    #[serde(rename = "api")]
    pub api_name: String,
    pub description: String,
    #[serde(default, rename = "args")]
    pub arg_schema: Vec<ArgSpec>,
}

impl ToolSpec {
    /// `category / tool / api`
    pub fn hierarchy_line(&self) -> String {
        format!("{} / {} / {}", self.category, self.tool, self.api_name)
    }

    /// Name, function description and argument list as shown in prompts.
    pub fn render(&self) -> String {
        let args: Vec<String> = self
            .arg_schema
            .iter()
            .map(|a| {
                format!(
                    "{}: {}{}",
                    a.name,
                    a.semantic_type,
                    if a.required { "" } else { " (optional)" }
                )
            })
            .collect();
        format!("- {}({}): {}", self.api_name, args.join(", "), self.description)
    }
}

/// Indices of the `k` best scores: descending score, ties by ascending name.
pub fn top_k_by_score(scored: &[(&str, f64)], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| {
        scored[b]
            .1
            .total_cmp(&scored[a].1)
            .then_with(|| scored[a].0.cmp(scored[b].0))
    });
    order.truncate(k);
    order
}
