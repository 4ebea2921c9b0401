//! Logistic relevance scorer over concatenated (context, tool) embeddings.
//!
//! `p = sigmoid(w . [emb(s); emb(t)] + bias)`, trained by full-batch gradient
//! descent on the summed binary cross-entropy
//! `L = -sum y ln p + (1 - y) ln(1 - p)`. Embeddings are inputs here; only
//! the scoring head is learned.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{CoreError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatcherModel {
    /// `2 * dim` feature weights followed by the bias.
    pub weights: Vec<f64>,
    pub dim: usize,
}

/// A labelled training pair in feature form.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: bool,
}

impl Example {
    pub fn new(context: &[f64], tool: &[f64], label: bool) -> Self {
        Self {
            features: pair_features(context, tool),
            label,
        }
    }
}

pub fn pair_features(context: &[f64], tool: &[f64]) -> Vec<f64> {
    let mut f = Vec::with_capacity(context.len() + tool.len());
    f.extend_from_slice(context);
    f.extend_from_slice(tool);
    f
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + libm::log1p(libm::exp(-z.abs()))
}

fn logit(weights: &[f64], features: &[f64]) -> f64 {
    let (w, bias) = weights.split_at(weights.len() - 1);
    w.iter().zip(features).map(|(a, b)| a * b).sum::<f64>() + bias[0]
}

impl MatcherModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; 2 * dim + 1],
            dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != 2 * self.dim + 1 {
            return Err(CoreError::DimensionMismatch {
                expected: 2 * self.dim + 1,
                found: self.weights.len(),
            });
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(CoreError::InvalidParameter("non-finite matcher weight".into()));
        }
        Ok(())
    }

    /// Predicted relevance in `(0, 1)`.
    pub fn predict(&self, context: &[f64], tool: &[f64]) -> Result<f64> {
        if context.len() != self.dim || tool.len() != self.dim {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim,
                found: if context.len() != self.dim { context.len() } else { tool.len() },
            });
        }
        Ok(sigmoid(logit(&self.weights, &pair_features(context, tool))))
    }
}

/// Summed cross-entropy of `weights` over `examples`.
pub fn loss(weights: &[f64], examples: &[Example]) -> f64 {
    examples
        .iter()
        .map(|ex| {
            let z = logit(weights, &ex.features);
            // -[y ln s(z) + (1-y) ln(1-s(z))] = softplus(z) - y z
            softplus(z) - if ex.label { z } else { 0.0 }
        })
        .sum()
}

/// Analytic gradient of [`loss`].
pub fn gradient(weights: &[f64], examples: &[Example]) -> Vec<f64> {
    let mut g = vec![0.0; weights.len()];
    let bias = weights.len() - 1;
    for ex in examples {
        let r = sigmoid(logit(weights, &ex.features)) - if ex.label { 1.0 } else { 0.0 };
        for (gi, x) in g[..bias].iter_mut().zip(&ex.features) {
            *gi += r * x;
        }
        g[bias] += r;
    }
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub model: MatcherModel,
    /// Loss before training followed by the loss after every epoch.
    pub losses: Vec<f64>,
    /// Only one label class was present.
    pub degenerate: bool,
}

impl TrainReport {
    pub fn initial_loss(&self) -> f64 {
        self.losses[0]
    }

    /// Loss of the returned model.
    pub fn final_loss(&self) -> f64 {
        self.losses.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Full-batch gradient descent from zero weights.
///
/// The returned model is the lowest-loss iterate, so its loss never exceeds
/// the starting loss even when `learning_rate` is too large to descend.
pub fn train(examples: &[Example], dim: usize, epochs: usize, learning_rate: f64) -> Result<TrainReport> {
    if examples.is_empty() {
        return Err(CoreError::EmptyDataset);
    }
    if let Some(bad) = examples.iter().find(|e| e.features.len() != 2 * dim) {
        return Err(CoreError::DimensionMismatch {
            expected: 2 * dim,
            found: bad.features.len(),
        });
    }
    if !(learning_rate > 0.0) || !learning_rate.is_finite() {
        return Err(CoreError::InvalidParameter("learning rate must be positive".into()));
    }
    let positives = examples.iter().filter(|e| e.label).count();
    let degenerate = positives == 0 || positives == examples.len();

    let mut weights = vec![0.0; 2 * dim + 1];
    let mut best = weights.clone();
    let mut best_loss = loss(&weights, examples);
    let mut losses = Vec::with_capacity(epochs + 1);
    losses.push(best_loss);
    for _ in 0..epochs {
        let g = gradient(&weights, examples);
        weights.iter_mut().zip(&g).for_each(|(w, gi)| *w -= learning_rate * gi);
        let l = loss(&weights, examples);
        losses.push(l);
        if l < best_loss {
            best_loss = l;
            best.clone_from(&weights);
        }
    }
    Ok(TrainReport {
        model: MatcherModel { weights: best, dim },
        losses,
        degenerate,
    })
}
