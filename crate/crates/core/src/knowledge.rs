//! Knowledge chunks and their clusters.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Who decided to keep a chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeptBy {
    Llm,
    Manual,
}

/// A named unit of diagnosis experience.
///
/// `metrics` is the retrieval key matched against abnormal metrics; `steps`
/// is the analysis procedure a model follows when the chunk is applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeChunk {
    pub name: String,
    pub content: String,
    pub metrics: Vec<String>,
    pub steps: String,
    #[serde(default)]
    pub source_block: Option<usize>,
    #[serde(default = "default_kept_by")]
    pub kept_by: KeptBy,
}

fn default_kept_by() -> KeptBy {
    KeptBy::Llm
}

/// The four-field chunk format models are asked to emit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChunkPayload {
    pub name: String,
    pub content: String,
    pub metrics: Vec<String>,
    pub steps: String,
}

impl ChunkPayload {
    /// A payload is usable when it has a name and at least one non-blank metric.
    pub fn is_well_formed(&self) -> bool {
        !self.name.trim().is_empty() && self.metrics.iter().any(|m| !m.trim().is_empty())
    }

    pub fn into_chunk(self, source_block: Option<usize>, kept_by: KeptBy) -> KnowledgeChunk {
        KnowledgeChunk {
            name: self.name.trim().into(),
            content: self.content,
            metrics: self
                .metrics
                .into_iter()
                .filter(|m| !m.trim().is_empty())
                .collect(),
            steps: self.steps,
            source_block,
            kept_by,
        }
    }
}

impl KnowledgeChunk {
    /// Text embedded when clustering chunks.
    pub fn embedding_text(&self) -> String {
        let mut s = self.name.clone();
        s.push('\n');
        s.push_str(&self.content);
        s
    }
}

/// One DBSCAN cluster of chunks with their 3-D PCA coordinates.
///
/// `cluster_id` is `-1` for the noise group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkCluster {
    pub cluster_id: i64,
    pub member_chunk_ids: Vec<String>,
    pub member_coords_3d: Vec<[f64; 3]>,
    pub centroid_coords_3d: [f64; 3],
}
