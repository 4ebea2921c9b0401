//! Density-based clustering (DBSCAN).

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::euclidean;
use crate::{CoreError, Result};

pub const NOISE: i64 = -1;
pub const DEFAULT_EPS: f64 = 0.4;
pub const DEFAULT_MIN_PTS: usize = 3;

/// DBSCAN under Euclidean distance.
pub fn dbscan(points: &[Vec<f64>], eps: f64, min_pts: usize) -> Result<Vec<i64>> {
    dbscan_with(points, eps, min_pts, euclidean)
}

/// DBSCAN under an arbitrary distance.
///
/// A point is core when at least `min_pts` points (itself included) lie within
/// `eps`. Clusters are numbered `0..` in order of their lowest-index core
/// point; border points join the first cluster that reaches them; everything
/// else is [`NOISE`].
pub fn dbscan_with<D>(points: &[Vec<f64>], eps: f64, min_pts: usize, distance: D) -> Result<Vec<i64>>
where
    D: Fn(&[f64], &[f64]) -> f64,
{
    if !(eps > 0.0) {
        return Err(CoreError::InvalidParameter("eps must be positive".into()));
    }
    if min_pts == 0 {
        return Err(CoreError::InvalidParameter("min_pts must be at least 1".into()));
    }
    if let Some(first) = points.first() {
        if let Some(bad) = points.iter().find(|p| p.len() != first.len()) {
            return Err(CoreError::DimensionMismatch {
                expected: first.len(),
                found: bad.len(),
            });
        }
    }

    let neighbours = |i: usize| -> Vec<usize> {
        (0..points.len())
            .filter(|&j| distance(&points[i], &points[j]) <= eps)
            .collect()
    };

    const UNSEEN: i64 = -2;
    let mut labels = vec![UNSEEN; points.len()];
    let mut next = 0i64;
    for start in 0..points.len() {
        if labels[start] != UNSEEN {
            continue;
        }
        let seeds = neighbours(start);
        if seeds.len() < min_pts {
            labels[start] = NOISE;
            continue;
        }
        let cluster = next;
        next += 1;
        labels[start] = cluster;
        let mut queue: VecDeque<usize> = seeds.into_iter().collect();
        while let Some(p) = queue.pop_front() {
            if labels[p] == NOISE {
                labels[p] = cluster;
            }
            if labels[p] != UNSEEN {
                continue;
            }
            labels[p] = cluster;
            let reach = neighbours(p);
            if reach.len() >= min_pts {
                queue.extend(reach);
            }
        }
    }
    Ok(labels)
}
