//! BM25 ranking of knowledge chunks by their `metrics` attribute.
//!
//! Each chunk is a "document" whose terms are its metric names; the query is
//! the set of abnormal metrics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::knowledge::KnowledgeChunk;
use crate::metrics::AbnormalQuery;
use crate::text::normalize_metric;
use crate::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// Total number of chunks.
    pub n: usize,
    /// Number of chunks whose metric list contains each metric.
    pub doc_freq: BTreeMap<String, usize>,
    /// Mean metric-list length.
    pub avg_dl: f64,
    pub k1: f64,
    pub b: f64,
}

impl CorpusStats {
    pub fn from_metric_lists<'a, I>(lists: I, params: Bm25Params) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut n = 0usize;
        let mut total_len = 0usize;
        let mut doc_freq = BTreeMap::new();
        for list in lists {
            n += 1;
            total_len += list.len();
            let distinct: BTreeSet<String> = list.iter().map(|m| normalize_metric(m)).collect();
            for m in distinct {
                *doc_freq.entry(m).or_insert(0) += 1;
            }
        }
        let stats = Self {
            n,
            doc_freq,
            avg_dl: if n == 0 { 0.0 } else { total_len as f64 / n as f64 },
            k1: params.k1,
            b: params.b,
        };
        stats.validate()?;
        Ok(stats)
    }

    pub fn from_chunks(chunks: &[KnowledgeChunk], params: Bm25Params) -> Result<Self> {
        Self::from_metric_lists(chunks.iter().map(|c| c.metrics.as_slice()), params)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(CoreError::InvalidParameter(msg.into()));
        if self.n == 0 {
            return bad("corpus must hold at least one chunk");
        }
        if self.doc_freq.values().any(|&f| f > self.n) {
            return bad("document frequency exceeds corpus size");
        }
        if !(self.avg_dl > 0.0) {
            return bad("average metric-list length must be positive");
        }
        if !(self.k1 >= 0.0) || !(0.0..=1.0).contains(&self.b) {
            return bad("k1 must be >= 0 and b within [0, 1]");
        }
        Ok(())
    }

    /// `ln((N - n + 0.5) / (n + 0.5) + 1)`; unknown metrics use `n = 0`.
    pub fn idf(&self, metric: &str) -> f64 {
        let n = self.doc_freq.get(&normalize_metric(metric)).copied().unwrap_or(0);
        idf(self.n, n)
    }
}

pub fn idf(total: usize, containing: usize) -> f64 {
    let (total, containing) = (total as f64, containing as f64);
    libm::log((total - containing + 0.5) / (containing + 0.5) + 1.0)
}

/// BM25 score of a metric list against a query set.
pub fn score_metrics<'q, Q>(metrics: &[String], query: Q, stats: &CorpusStats) -> f64
where
    Q: IntoIterator<Item = &'q String>,
{
    let normalized: Vec<String> = metrics.iter().map(|m| normalize_metric(m)).collect();
    let doc_len = normalized.len() as f64;
    let norm = stats.k1 * (1.0 - stats.b + stats.b * doc_len / stats.avg_dl);
    query
        .into_iter()
        .map(|q| {
            let q = normalize_metric(q);
            let f = normalized.iter().filter(|m| **m == q).count() as f64;
            if f == 0.0 {
                0.0
            } else {
                stats.idf(&q) * f * (stats.k1 + 1.0) / (f + norm)
            }
        })
        .sum()
}

pub fn bm25_score(chunk: &KnowledgeChunk, query: &AbnormalQuery, stats: &CorpusStats) -> f64 {
    score_metrics(&chunk.metrics, &query.metrics, stats)
}

/// Top-`top_n` chunks by descending score, ties by ascending name.
/// Chunks scoring zero are left out.
pub fn rank_chunks(
    query: &AbnormalQuery,
    chunks: &[KnowledgeChunk],
    stats: &CorpusStats,
    top_n: usize,
) -> Vec<(String, f64)> {
    let mut scored: Vec<(String, f64)> = chunks
        .iter()
        .map(|c| (c.name.clone(), bm25_score(c, query, stats)))
        .filter(|(_, s)| *s > 0.0)
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(top_n);
    scored
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::KeptBy;
    use crate::metrics::TimeWindow;
    use alloc::string::ToString;
    use alloc::vec;

    fn chunk(name: &str, metrics: &[&str]) -> KnowledgeChunk {
        KnowledgeChunk {
            name: name.into(),
            content: String::new(),
            metrics: metrics.iter().map(|m| m.to_string()).collect(),
            steps: String::new(),
            source_block: None,
            kept_by: KeptBy::Llm,
        }
    }

    fn query(metrics: &[&str]) -> AbnormalQuery {
        AbnormalQuery::new(metrics.iter().copied(), TimeWindow::new(0, 1).unwrap())
    }

    #[test]
    fn idf_hand_values() {
        assert!((idf(10, 3) - 1.1451).abs() < 1e-4);
        assert!((idf(1, 1) - 0.2877).abs() < 1e-4);
        assert!((idf(10, 0) - libm::log(22.0)).abs() < 1e-12);
    }

    #[test]
    fn no_overlap_scores_zero() {
        let chunks = vec![chunk("a", &["cpu"]), chunk("b", &["mem"])];
        let stats = CorpusStats::from_chunks(&chunks, Bm25Params::default()).unwrap();
        assert_eq!(bm25_score(&chunks[0], &query(&["disk"]), &stats), 0.0);
    }

    #[test]
    fn single_hit_at_average_length_equals_idf() {
        let chunks = vec![chunk("a", &["cpu", "mem"]), chunk("b", &["io", "lock"])];
        let stats = CorpusStats::from_chunks(&chunks, Bm25Params::default()).unwrap();
        let s = bm25_score(&chunks[0], &query(&["cpu"]), &stats);
        assert!((s - stats.idf("cpu")).abs() < 1e-9);
    }

    #[test]
    fn repeated_metric_scores_higher() {
        let chunks = vec![chunk("a", &["cpu", "mem", "io"]), chunk("b", &["cpu", "cpu", "io"])];
        let stats = CorpusStats::from_chunks(&chunks, Bm25Params::default()).unwrap();
        let q = query(&["cpu"]);
        assert!(bm25_score(&chunks[1], &q, &stats) > bm25_score(&chunks[0], &q, &stats));
    }

    #[test]
    fn ranking_orders_and_filters() {
        let chunks = vec![
            chunk("zeta", &["cpu"]),
            chunk("alpha", &["cpu"]),
            chunk("mid", &["cpu", "mem"]),
            chunk("none", &["disk"]),
        ];
        let stats = CorpusStats::from_chunks(&chunks, Bm25Params::default()).unwrap();
        let ranked = rank_chunks(&query(&["cpu", "mem"]), &chunks, &stats, 10);
        let names: Vec<&str> = ranked.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["mid", "alpha", "zeta"]);
        assert_eq!(rank_chunks(&query(&["cpu"]), &chunks, &stats, 1).len(), 1);
    }

    #[test]
    fn invalid_stats_rejected() {
        assert!(CorpusStats::from_chunks(&[], Bm25Params::default()).is_err());
        let chunks = vec![chunk("a", &["cpu"])];
        assert!(CorpusStats::from_chunks(&chunks, Bm25Params { k1: 1.2, b: 1.5 }).is_err());
    }

    #[test]
    fn metric_matching_ignores_case_and_padding() {
        let chunks = vec![chunk("a", &[" CPU_Usage "])];
        let stats = CorpusStats::from_chunks(&chunks, Bm25Params::default()).unwrap();
        assert!(bm25_score(&chunks[0], &query(&["cpu_usage"]), &stats) > 0.0);
    }
}
