//! Documents to knowledge: chapter split, summary tree, extraction and
//! clustering.

use std::collections::BTreeSet;
use std::path::Path;

use dbot_core::chapters::{split_chapters, DocumentTree, DEFAULT_MAX_BLOCK_SIZE};
use dbot_core::cluster::{dbscan_with, DEFAULT_EPS, DEFAULT_MIN_PTS, NOISE};
use dbot_core::knowledge::{ChunkCluster, KeptBy, KnowledgeChunk};
use dbot_core::linalg::{cosine, cosine_distance};
use dbot_core::pca::pca_project;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::Gateway;
use crate::io;
use crate::prompts::{self, ExtractInput};

pub const DEFAULT_K_SIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DocLearningConfig {
    pub max_block_size: usize,
    /// Summary-similar blocks shown at extraction.
    pub k_sim: usize,
    pub eps: f64,
    pub min_pts: usize,
}

impl Default for DocLearningConfig {
    fn default() -> Self {
        Self {
            max_block_size: DEFAULT_MAX_BLOCK_SIZE,
            k_sim: DEFAULT_K_SIM,
            eps: DEFAULT_EPS,
            min_pts: DEFAULT_MIN_PTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryNode {
    pub block_id: usize,
    pub summary: String,
    /// The summary call failed; `summary` is empty.
    pub missing: bool,
}

/// One summary per block. The root is summarized by its title; every other
/// block gets a summarize prompt containing its text.
pub fn build_summary_tree(gateway: &Gateway, tree: &DocumentTree) -> Vec<SummaryNode> {
    tree.preorder()
        .into_iter()
        .map(|id| {
            let block = &tree.blocks[id];
            if block.parent.is_none() {
                return SummaryNode {
                    block_id: id,
                    summary: block.title.clone(),
                    missing: false,
                };
            }
            let body = if block.content.trim().is_empty() {
                let sections: Vec<&str> = block.children.iter().map(|&c| tree.blocks[c].title.as_str()).collect();
                format!("(no body text; sections: {})", sections.join(", "))
            } else {
                block.content.clone()
            };
            let p = prompts::summarize_block(&block.title, &body);
            match gateway.ask(&p.preamble, &p.user) {
                Ok(s) if !s.trim().is_empty() => SummaryNode {
                    block_id: id,
                    summary: s.trim().to_string(),
                    missing: false,
                },
                Ok(_) => missing(id, "empty answer"),
                Err(e) => missing(id, &e.to_string()),
            }
        })
        .collect()
}

fn missing(id: usize, why: &str) -> SummaryNode {
    log::warn!("summary of block {id} missing: {why}");
    SummaryNode {
        block_id: id,
        summary: String::new(),
        missing: true,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManualQueueEntry {
    pub document: String,
    pub block_id: usize,
    pub block_title: String,
    /// `redundant` or `duplicate_name`.
    pub reason: String,
    pub chunk: Option<KnowledgeChunk>,
    pub response: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub chunks: Vec<KnowledgeChunk>,
    pub manual_queue: Vec<ManualQueueEntry>,
    /// Blocks whose answer could not be parsed, with the reason.
    pub skipped: Vec<(usize, String)>,
}

/// Ids of the `k` other blocks whose summaries are most similar to `id`'s.
fn similar_blocks(embeddings: &[(usize, Vec<f64>)], id: usize, k: usize) -> Vec<usize> {
    let Some((_, own)) = embeddings.iter().find(|(b, _)| *b == id) else {
        return Vec::new();
    };
    let mut scored: Vec<(usize, f64)> = embeddings
        .iter()
        .filter(|(b, _)| *b != id)
        .map(|(b, e)| (*b, cosine(own, e).unwrap_or(f64::NEG_INFINITY)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.into_iter().take(k).map(|(b, _)| b).collect()
}

/// Runs the extraction prompt on every non-root block. `existing` holds
/// names already in the knowledge base; a candidate reusing one goes to the
/// manual queue.
pub fn extract_knowledge(
    gateway: &Gateway,
    document: &str,
    tree: &DocumentTree,
    summaries: &[SummaryNode],
    k_sim: usize,
    existing: &mut BTreeSet<String>,
) -> Extraction {
    let summary_of = |id: usize| {
        summaries
            .iter()
            .find(|s| s.block_id == id)
            .map(|s| s.summary.as_str())
            .unwrap_or("")
    };
    let embeddings: Vec<(usize, Vec<f64>)> = summaries
        .iter()
        .filter(|s| !s.missing && tree.blocks[s.block_id].parent.is_some())
        .filter_map(|s| gateway.embed(&s.summary).ok().map(|e| (s.block_id, e)))
        .collect();

    let mut out = Extraction::default();
    for id in tree.preorder().into_iter().skip(1) {
        let block = &tree.blocks[id];
        let children: Vec<(&str, &str)> = block
            .children
            .iter()
            .map(|&c| (tree.blocks[c].title.as_str(), tree.blocks[c].content.as_str()))
            .collect();
        if block.content.trim().is_empty() && children.iter().all(|(_, c)| c.trim().is_empty()) {
            continue;
        }
        let similar: Vec<(&str, &str)> = similar_blocks(&embeddings, id, k_sim)
            .into_iter()
            .map(|b| (tree.blocks[b].title.as_str(), summary_of(b)))
            .collect();
        let existing_names: Vec<&str> = existing.iter().map(String::as_str).collect();
        let p = prompts::extract_knowledge(&ExtractInput {
            title: &block.title,
            summary: summary_of(id),
            content: &block.content,
            children,
            similar,
            existing_names,
        });
        let response = match gateway.ask(&p.preamble, &p.user) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("extraction for block {id} ({}) failed: {e}", block.title);
                out.skipped.push((id, e.to_string()));
                continue;
            }
        };
        let answer = match prompts::parse_extract_answer(&response) {
            Ok(a) => a,
            Err(e) => {
                log::warn!("skipping block {id} ({}): {}", block.title, Error::ParseFailure(e.clone()));
                out.skipped.push((id, e));
                continue;
            }
        };
        let entry = |reason: &str, chunk: Option<KnowledgeChunk>| ManualQueueEntry {
            document: document.to_string(),
            block_id: id,
            block_title: block.title.clone(),
            reason: reason.into(),
            chunk,
            response: response.clone(),
        };
        if answer.redundant {
            if answer.payloads.is_empty() {
                out.manual_queue.push(entry("redundant", None));
            }
            for p in answer.payloads {
                out.manual_queue.push(entry("redundant", Some(p.into_chunk(Some(id), KeptBy::Manual))));
            }
            continue;
        }
        for p in answer.payloads {
            let chunk = p.into_chunk(Some(id), KeptBy::Llm);
            if existing.insert(chunk.name.clone()) {
                out.chunks.push(chunk);
            } else {
                let mut queued = chunk;
                queued.kept_by = KeptBy::Manual;
                out.manual_queue.push(entry("duplicate_name", Some(queued)));
            }
        }
    }
    out
}

/// Embeds `name + content` of each chunk, clusters by cosine distance and
/// attaches 3-D principal-component coordinates. The noise group (id -1)
/// comes first when present.
pub fn cluster_chunks(gateway: &Gateway, chunks: &[KnowledgeChunk], eps: f64, min_pts: usize) -> Result<Vec<ChunkCluster>> {
    if chunks.is_empty() {
        return Err(Error::Config("no knowledge chunks to cluster".into()));
    }
    let vectors = chunks
        .iter()
        .map(|c| gateway.embed(&c.embedding_text()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let labels = dbscan_with(&vectors, eps, min_pts, cosine_distance)?;
    let k = vectors.len().min(3);
    let projection = pca_project(&vectors, k)?;
    let coords: Vec<[f64; 3]> = projection
        .coords
        .iter()
        .map(|row| {
            let mut c = [0.0; 3];
            for (dst, src) in c.iter_mut().zip(row) {
                *dst = *src;
            }
            c
        })
        .collect();
    let max_label = labels.iter().copied().max().unwrap_or(NOISE);
    let mut clusters = Vec::new();
    for id in NOISE..=max_label {
        let members: Vec<usize> = (0..chunks.len()).filter(|&i| labels[i] == id).collect();
        if members.is_empty() {
            continue;
        }
        let member_coords: Vec<[f64; 3]> = members.iter().map(|&i| coords[i]).collect();
        let mut centroid = [0.0; 3];
        for c in &member_coords {
            for d in 0..3 {
                centroid[d] += c[d] / members.len() as f64;
            }
        }
        clusters.push(ChunkCluster {
            cluster_id: id,
            member_chunk_ids: members.iter().map(|&i| chunks[i].name.clone()).collect(),
            member_coords_3d: member_coords,
            centroid_coords_3d: centroid,
        });
    }
    Ok(clusters)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DocLearningOutput {
    pub chunks: Vec<KnowledgeChunk>,
    pub clusters: Vec<ChunkCluster>,
    pub manual_queue: Vec<ManualQueueEntry>,
    pub skipped_blocks: usize,
}

/// Full pipeline over `(title, text)` documents, processed in order.
pub fn learn_documents(gateway: &Gateway, documents: &[(String, String)], config: &DocLearningConfig) -> Result<DocLearningOutput> {
    let mut existing = BTreeSet::new();
    let mut out = DocLearningOutput::default();
    for (title, text) in documents {
        let tree = split_chapters(title, text, config.max_block_size)?;
        let summaries = build_summary_tree(gateway, &tree);
        let ex = extract_knowledge(gateway, title, &tree, &summaries, config.k_sim, &mut existing);
        out.chunks.extend(ex.chunks);
        out.manual_queue.extend(ex.manual_queue);
        out.skipped_blocks += ex.skipped.len();
    }
    if !out.chunks.is_empty() {
        out.clusters = cluster_chunks(gateway, &out.chunks, config.eps, config.min_pts)?;
    }
    Ok(out)
}

/// `*.md` and `*.txt` files of `dir`, sorted by file name; titles are the
/// file stems.
pub fn read_documents(dir: &Path) -> Result<Vec<(String, String)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if path.is_file() && matches!(ext, "md" | "markdown" | "txt") {
            paths.push(path);
        }
    }
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let title = p.file_stem().and_then(|s| s.to_str()).unwrap_or("document").to_string();
            Ok((title, io::read_to_string(&p)?))
        })
        .collect()
}
