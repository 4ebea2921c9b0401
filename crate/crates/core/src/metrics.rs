//! Metric time series and abnormal-metric detection.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ks::ks_statistic;
use crate::text::normalize_metric;
use crate::{CoreError, Result};

pub const DEFAULT_KS_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub metric_name: String,
    pub timestamps: Vec<i64>,
    pub values: Vec<f64>,
}

impl MetricSeries {
    pub fn validate(&self) -> Result<()> {
        if self.timestamps.is_empty() {
            return Err(CoreError::EmptySample);
        }
        if self.timestamps.len() != self.values.len() {
            return Err(CoreError::DimensionMismatch {
                expected: self.timestamps.len(),
                found: self.values.len(),
            });
        }
        if self.timestamps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CoreError::InvalidParameter(alloc::format!(
                "timestamps of `{}` are not strictly increasing",
                self.metric_name
            )));
        }
        Ok(())
    }

    /// Values whose timestamp lies in `[start, end]`.
    pub fn values_between(&self, start: i64, end: i64) -> Vec<f64> {
        self.timestamps
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| (start..=end).contains(*t))
            .map(|(_, v)| *v)
            .collect()
    }

    fn restricted(&self, start: i64, end: i64) -> MetricSeries {
        let (timestamps, values) = self
            .timestamps
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| (start..=end).contains(*t))
            .map(|(t, v)| (*t, *v))
            .unzip();
        MetricSeries {
            metric_name: self.metric_name.clone(),
            timestamps,
            values,
        }
    }
}

/// Anomaly window in epoch seconds, `start < end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start_time: i64,
    pub end_time: i64,
}

impl TimeWindow {
    pub fn new(start_time: i64, end_time: i64) -> Result<Self> {
        if start_time >= end_time {
            return Err(CoreError::InvalidParameter(alloc::format!(
                "window start {start_time} is not before end {end_time}"
            )));
        }
        Ok(Self { start_time, end_time })
    }

    /// The equal-length window immediately preceding this one.
    pub fn preceding(&self) -> TimeWindow {
        let len = self.end_time - self.start_time;
        TimeWindow {
            start_time: self.start_time - len,
            end_time: self.start_time - 1,
        }
    }
}

/// The set of abnormal metrics `Q` used as the retrieval query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbnormalQuery {
    pub metrics: BTreeSet<String>,
    pub window: TimeWindow,
}

impl AbnormalQuery {
    pub fn new<I, S>(metrics: I, window: TimeWindow) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            metrics: metrics.into_iter().map(|m| normalize_metric(m.as_ref())).collect(),
            window,
        }
    }
}

/// KS thresholds with optional per-metric overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsThresholds {
    pub default: f64,
    #[serde(default)]
    pub per_metric: BTreeMap<String, f64>,
}

impl Default for KsThresholds {
    fn default() -> Self {
        Self::uniform(DEFAULT_KS_THRESHOLD)
    }
}

impl KsThresholds {
    pub fn uniform(threshold: f64) -> Self {
        Self {
            default: threshold,
            per_metric: BTreeMap::new(),
        }
    }

    pub fn for_metric(&self, metric: &str) -> f64 {
        self.per_metric
            .get(&normalize_metric(metric))
            .copied()
            .unwrap_or(self.default)
    }
}

/// Flags every metric whose window distribution departs from its reference.
///
/// A metric is abnormal iff `ks_statistic(reference, window) > threshold`.
/// Every window series needs a reference series with the same (normalized)
/// name.
pub fn detect_abnormal_metrics(
    reference: &[MetricSeries],
    anomaly_window: &[MetricSeries],
    thresholds: &KsThresholds,
    window: TimeWindow,
) -> Result<AbnormalQuery> {
    let by_name: BTreeMap<String, &MetricSeries> = reference
        .iter()
        .map(|s| (normalize_metric(&s.metric_name), s))
        .collect();
    let mut metrics = BTreeSet::new();
    for series in anomaly_window {
        let name = normalize_metric(&series.metric_name);
        let reference = by_name
            .get(&name)
            .ok_or_else(|| CoreError::MissingCounterpartSeries(series.metric_name.clone()))?;
        let d = ks_statistic(&reference.values, &series.values)?;
        if d > thresholds.for_metric(&name) {
            metrics.insert(name);
        }
    }
    Ok(AbnormalQuery { metrics, window })
}

/// Cuts full series into (reference, anomaly) lists around `window`.
///
/// Series with no samples in either window are dropped from both lists.
pub fn split_reference_and_window(
    series: &[MetricSeries],
    window: TimeWindow,
) -> (Vec<MetricSeries>, Vec<MetricSeries>) {
    let before = window.preceding();
    series
        .iter()
        .map(|s| {
            (
                s.restricted(before.start_time, before.end_time),
                s.restricted(window.start_time, window.end_time),
            )
        })
        .filter(|(r, w)| !r.values.is_empty() && !w.values.is_empty())
        .unzip()
}
