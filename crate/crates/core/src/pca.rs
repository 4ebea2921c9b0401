//! Principal component projection.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, symmetric_eigen};
use crate::{CoreError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    /// One `k`-dimensional row per input vector.
    pub coords: Vec<Vec<f64>>,
    /// Unit principal axes, strongest first (fewer than `k` when `d < k`).
    pub components: Vec<Vec<f64>>,
    /// Variance along each returned axis.
    pub explained_variance: Vec<f64>,
    /// Share of total variance kept by the returned axes; 0 when there is none.
    pub retained_variance_ratio: f64,
}

/// Projects mean-centred `vectors` onto their top-`k` principal components.
pub fn pca_project(vectors: &[Vec<f64>], k: usize) -> Result<Projection> {
    if k == 0 {
        return Err(CoreError::InvalidParameter("k must be positive".into()));
    }
    if vectors.len() < k {
        return Err(CoreError::InsufficientData {
            needed: k,
            got: vectors.len(),
        });
    }
    let d = vectors[0].len();
    if let Some(bad) = vectors.iter().find(|v| v.len() != d) {
        return Err(CoreError::DimensionMismatch {
            expected: d,
            found: bad.len(),
        });
    }
    let n = vectors.len() as f64;

    let degenerate = || Projection {
        coords: vec![vec![0.0; k]; vectors.len()],
        components: Vec::new(),
        explained_variance: Vec::new(),
        retained_variance_ratio: 0.0,
    };
    if d == 0 || vectors.iter().all(|v| *v == vectors[0]) {
        return Ok(degenerate());
    }

    let mut mean = vec![0.0; d];
    for v in vectors {
        mean.iter_mut().zip(v).for_each(|(m, x)| *m += x / n);
    }
    let centred: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| v.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();

    let mut cov = vec![0.0; d * d];
    for row in &centred {
        for i in 0..d {
            if row[i] == 0.0 {
                continue;
            }
            for j in i..d {
                cov[i * d + j] += row[i] * row[j] / n;
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            cov[i * d + j] = cov[j * d + i];
        }
    }
    let total: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    let scale = 1.0 + dot(&mean, &mean);
    if total <= 1e-24 * scale {
        return Ok(degenerate());
    }

    let (values, vectors_) = symmetric_eigen(&cov, d);
    let kept = k.min(d);
    let components: Vec<Vec<f64>> = vectors_.into_iter().take(kept).collect();
    let explained_variance: Vec<f64> = values.iter().take(kept).map(|v| v.max(0.0)).collect();
    let coords = centred
        .iter()
        .map(|row| {
            let mut c: Vec<f64> = components.iter().map(|axis| dot(row, axis)).collect();
            c.resize(k, 0.0);
            c
        })
        .collect();
    let retained = (explained_variance.iter().sum::<f64>() / total).clamp(0.0, 1.0);
    Ok(Projection {
        coords,
        components,
        explained_variance,
        retained_variance_ratio: retained,
    })
}
