//! A validated set of knowledge chunks with BM25 statistics.

use std::collections::BTreeMap;
use std::path::Path;

use dbot_core::bm25::{rank_chunks, Bm25Params, CorpusStats};
use dbot_core::knowledge::KnowledgeChunk;
use dbot_core::metrics::AbnormalQuery;

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KnowledgeBase {
    chunks: Vec<KnowledgeChunk>,
    index: BTreeMap<String, usize>,
    stats: Option<CorpusStats>,
    params: Bm25Params,
}


impl KnowledgeBase {
    /// Names must be unique and every chunk needs at least one metric.
    pub fn new(chunks: Vec<KnowledgeChunk>, params: Bm25Params) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, c) in chunks.iter().enumerate() {
            if c.name.trim().is_empty() {
                return Err(Error::Config("knowledge chunk with an empty name".into()));
            }
            if !c.metrics.iter().any(|m| !m.trim().is_empty()) {
                return Err(Error::Config(format!("knowledge chunk `{}` has no metrics", c.name)));
            }
            if index.insert(c.name.clone(), i).is_some() {
                return Err(Error::DuplicateChunk(c.name.clone()));
            }
        }
        let stats = if chunks.is_empty() {
            None
        } else {
            Some(CorpusStats::from_chunks(&chunks, params)?)
        };
        Ok(Self {
            chunks,
            index,
            stats,
            params,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let chunks: Vec<KnowledgeChunk> = io::read_json(path)?;
        Self::new(chunks, Bm25Params::default()).map_err(|e| match e {
            Error::Config(m) => Error::parse(path, m),
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_json(path, &self.chunks)
    }

    pub fn chunks(&self) -> &[KnowledgeChunk] {
        &self.chunks
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn stats(&self) -> Option<&CorpusStats> {
        self.stats.as_ref()
    }

    pub fn get(&self, name: &str) -> Option<&KnowledgeChunk> {
        self.index.get(name).map(|&i| &self.chunks[i])
    }

    /// Chunks named in `names`, in the base's order.
    pub fn subset<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        for n in names {
            if !self.index.contains_key(n.as_ref()) {
                return Err(Error::UnknownChunk(n.as_ref().to_string()));
            }
        }
        let keep: Vec<KnowledgeChunk> = self
            .chunks
            .iter()
            .filter(|c| names.iter().any(|n| n.as_ref() == c.name))
            .cloned()
            .collect();
        Self::new(keep, self.params)
    }

    /// Top `top_n` chunks for the abnormal metrics in `query`.
    pub fn rank(&self, query: &AbnormalQuery, top_n: usize) -> Vec<(String, f64)> {
        match &self.stats {
            Some(stats) => rank_chunks(query, &self.chunks, stats, top_n),
            None => Vec::new(),
        }
    }
}
