//! Alert input and the anomaly profile built from it.

use std::path::Path;

use chrono::DateTime;
use dbot_core::metrics::{
    detect_abnormal_metrics, split_reference_and_window, AbnormalQuery, KsThresholds, MetricSeries, TimeWindow,
};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub name: String,
    #[serde(default)]
    pub severity: String,
    #[serde(default)]
    pub summary: String,
}

/// `{start_time, end_time, alerts: [{name, severity, summary}]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertFile {
    pub start_time: i64,
    pub end_time: i64,
    #[serde(default)]
    pub alerts: Vec<Alert>,
}

impl AlertFile {
    pub fn load(path: &Path) -> Result<Self> {
        io::read_json(path)
    }

    pub fn window(&self) -> Result<TimeWindow> {
        Ok(TimeWindow::new(self.start_time, self.end_time)?)
    }
}

/// Title, date and description used by prompts and the final report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyProfile {
    pub title: String,
    pub anomaly_date: String,
    pub description: String,
    pub query: AbnormalQuery,
}

pub fn format_epoch(ts: i64) -> String {
    match DateTime::from_timestamp(ts, 0) {
        Some(t) => t.format("%Y-%m-%d %H:%M:%S UTC").to_string(),
        None => ts.to_string(),
    }
}

pub fn profile(alert: &AlertFile, query: AbnormalQuery) -> AnomalyProfile {
    let names: Vec<&str> = alert.alerts.iter().map(|a| a.name.as_str()).collect();
    let title = if names.is_empty() {
        format!("Anomaly at {}", format_epoch(alert.start_time))
    } else {
        format!("Diagnosis of {}", names.join(", "))
    };
    let mut description = String::new();
    for a in &alert.alerts {
        if !description.is_empty() {
            description.push('\n');
        }
        if a.severity.is_empty() {
            description.push_str(&a.name);
        } else {
            description.push_str(&format!("[{}] {}", a.severity, a.name));
        }
        if !a.summary.is_empty() {
            description.push_str(": ");
            description.push_str(&a.summary);
        }
    }
    if description.is_empty() {
        description = format!(
            "Anomaly between {} and {}",
            format_epoch(alert.start_time),
            format_epoch(alert.end_time)
        );
    }
    AnomalyProfile {
        title,
        anomaly_date: format_epoch(alert.start_time),
        description,
        query,
    }
}

/// Abnormal metrics of `series` in `window`, against the preceding window.
pub fn abnormal_query(series: &[MetricSeries], window: TimeWindow, thresholds: &KsThresholds) -> Result<AbnormalQuery> {
    for s in series {
        s.validate()?;
    }
    let (reference, current) = split_reference_and_window(series, window);
    Ok(detect_abnormal_metrics(&reference, &current, thresholds, window)?)
}

pub fn load_metrics(path: &Path) -> Result<Vec<MetricSeries>> {
    io::read_jsonl(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_from_alerts() {
        let alert = AlertFile {
            start_time: 1684600070,
            end_time: 1684600074,
            alerts: vec![Alert {
                name: "Load_High".into(),
                severity: "CRIT".into(),
                summary: "node load above 4".into(),
            }],
        };
        let p = profile(&alert, AbnormalQuery::new(["cpu"], alert.window().unwrap()));
        assert_eq!(p.title, "Diagnosis of Load_High");
        assert_eq!(p.anomaly_date, "2023-05-20 16:27:50 UTC");
        assert_eq!(p.description, "[CRIT] Load_High: node load above 4");
    }

    #[test]
    fn profile_without_alerts() {
        let alert = AlertFile { start_time: 0, end_time: 60, alerts: vec![] };
        let p = profile(&alert, AbnormalQuery::new(Vec::<String>::new(), alert.window().unwrap()));
        assert_eq!(p.title, "Anomaly at 1970-01-01 00:00:00 UTC");
        assert!(p.description.starts_with("Anomaly between"));
    }

    #[test]
    fn detects_shifted_metric() {
        let ts: Vec<i64> = (0..20).collect();
        let calm: Vec<f64> = (0..20).map(|i| (i % 3) as f64).collect();
        let mut shifted = calm.clone();
        for v in &mut shifted[10..] {
            *v += 100.0;
        }
        let series = vec![
            MetricSeries { metric_name: "cpu_usage".into(), timestamps: ts.clone(), values: shifted },
            MetricSeries { metric_name: "disk_io".into(), timestamps: ts, values: calm },
        ];
        let q = abnormal_query(&series, TimeWindow::new(10, 20).unwrap(), &KsThresholds::default()).unwrap();
        assert_eq!(q.metrics.into_iter().collect::<Vec<_>>(), ["cpu_usage"]);
    }
}
