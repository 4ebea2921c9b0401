//! Two-sample Kolmogorov-Smirnov statistic.

use alloc::vec::Vec;

use crate::{CoreError, Result};

/// `D = sup_x |F_a(x) - F_b(x)|` over the two empirical CDFs.
///
/// Both samples must be non-empty and free of NaN.
pub fn ks_statistic(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(CoreError::EmptySample);
    }
    if sample_a.iter().chain(sample_b).any(|x| x.is_nan()) {
        return Err(CoreError::InvalidParameter("sample contains NaN".into()));
    }
    let mut a: Vec<f64> = sample_a.to_vec();
    let mut b: Vec<f64> = sample_b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);

    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // step both CDFs past the next distinct value
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d.min(1.0))
}
