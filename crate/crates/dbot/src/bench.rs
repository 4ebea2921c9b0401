//! Micro-benchmark harness: case loading, parallel runs and result tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use dbot_core::accuracy::{self, AccParams};
use dbot_core::metrics::KsThresholds;
use dbot_core::text::normalize_label;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anomaly::AlertFile;
use crate::collab::CollabConfig;
use crate::error::{Error, Result};
use crate::gateway::Gateway;
use crate::io;
use crate::pipeline::{self, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Application {
    IoT,
    #[serde(rename = "E-Commerce")]
    ECommerce,
    Financial,
    BusinessIntel,
    FileSharing,
    SocialMedia,
}

impl Application {
    pub const ALL: [Application; 6] = [
        Application::IoT,
        Application::ECommerce,
        Application::Financial,
        Application::BusinessIntel,
        Application::FileSharing,
        Application::SocialMedia,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Application::IoT => "IoT",
            Application::ECommerce => "E-Commerce",
            Application::Financial => "Financial",
            Application::BusinessIntel => "BusinessIntel",
            Application::FileSharing => "FileSharing",
            Application::SocialMedia => "SocialMedia",
        }
    }
}

impl fmt::Display for Application {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-case inputs. Relative paths resolve against the cases file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFixtures {
    pub rules: PathBuf,
    pub tools: PathBuf,
    pub knowledge: PathBuf,
    #[serde(default)]
    pub executor: Option<PathBuf>,
    #[serde(default)]
    pub metrics: Option<PathBuf>,
    #[serde(default)]
    pub experts: Option<PathBuf>,
}

impl CaseFixtures {
    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.rules);
        join(&mut self.tools);
        join(&mut self.knowledge);
        for p in [&mut self.executor, &mut self.metrics, &mut self.experts].into_iter().flatten() {
            join(p);
        }
    }

    fn paths(&self) -> Vec<&Path> {
        let mut v = vec![self.rules.as_path(), self.tools.as_path(), self.knowledge.as_path()];
        v.extend([&self.executor, &self.metrics, &self.experts].into_iter().flatten().map(|p| p.as_path()));
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkCase {
    pub case_id: String,
    pub application: Application,
    pub description: String,
    pub labels: Vec<String>,
    pub anomaly: AlertFile,
    pub fixtures: CaseFixtures,
    /// Human-judged accuracy, carried through unchanged.
    #[serde(default)]
    pub heval: Option<f64>,
}

fn violation(case_id: &str, message: impl Into<String>) -> Error {
    Error::SchemaViolation {
        case_id: case_id.to_string(),
        message: message.into(),
    }
}

impl BenchmarkCase {
    pub fn validate(&self) -> Result<()> {
        let id = &self.case_id;
        if id.trim().is_empty() {
            return Err(violation(id, "empty case_id"));
        }
        if self.labels.is_empty() {
            return Err(violation(id, "labels must not be empty"));
        }
        for l in &self.labels {
            if !accuracy::is_known_root_cause(l) {
                return Err(violation(id, format!("unknown root cause label {l:?}")));
            }
        }
        if let Some(h) = self.heval {
            if !(0.0..=1.0).contains(&h) {
                return Err(violation(id, "heval must be in [0, 1]"));
            }
        }
        if self.anomaly.end_time <= self.anomaly.start_time {
            return Err(violation(id, "anomaly end_time must be after start_time"));
        }
        for p in self.fixtures.paths() {
            if !p.exists() {
                return Err(violation(id, format!("fixture {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

/// Loads and validates a cases file.
pub fn load_cases(path: &Path) -> Result<Vec<BenchmarkCase>> {
    let mut cases: Vec<BenchmarkCase> = io::read_json(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut ids = BTreeSet::new();
    for c in &mut cases {
        c.fixtures.resolve(base);
        c.validate()?;
        if !ids.insert(c.case_id.clone()) {
            return Err(violation(&c.case_id, "duplicate case_id"));
        }
    }
    let counts = application_counts(&cases);
    for (app, n) in &counts {
        log::info!("{app}: {n} case(s)");
    }
    Ok(cases)
}

pub fn application_counts(cases: &[BenchmarkCase]) -> BTreeMap<Application, usize> {
    let mut m = BTreeMap::new();
    for c in cases {
        *m.entry(c.application).or_insert(0) += 1;
    }
    m
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchConfig {
    pub seed: u64,
    pub collab: CollabConfig,
    pub ks: KsThresholds,
    pub acc: AccParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: String,
    pub application: Application,
    pub predicted: Vec<String>,
    pub a_c: usize,
    pub a_a: usize,
    pub a_w: usize,
    pub acc: f64,
    pub heval: Option<f64>,
    /// Set when the case failed to run; such cases score 0 and are left out
    /// of the means.
    pub error: Option<String>,
}

pub fn run_case(case: &BenchmarkCase, config: &BenchConfig) -> Result<CaseResult> {
    let f = &case.fixtures;
    let gateway = Gateway::scripted_from_file(&f.rules, config.seed)?;
    let run = RunConfig {
        metrics: f.metrics.clone(),
        rules: Some(f.rules.clone()),
        executor: f.executor.clone(),
        experts: f.experts.clone(),
        description: Some(case.description.clone()),
        seed: Some(config.seed),
        collab: config.collab.clone(),
        ks: config.ks.clone(),
        ..RunConfig::new(&f.knowledge, &f.tools)
    };
    let out = pipeline::diagnose_alert(&gateway, &run, &case.anomaly)?;
    let score = accuracy::accuracy(&out.report.root_causes, &case.labels, config.acc)?;
    Ok(CaseResult {
        case_id: case.case_id.clone(),
        application: case.application,
        predicted: score.predicted,
        a_c: score.correct,
        a_a: score.total,
        a_w: score.wrong,
        acc: score.acc,
        heval: case.heval,
        error: None,
    })
}

/// Runs every case in parallel; results come back in input order.
pub fn run_benchmark(cases: &[BenchmarkCase], config: &BenchConfig) -> Vec<CaseResult> {
    cases
        .par_iter()
        .map(|c| {
            run_case(c, config).unwrap_or_else(|e| {
                log::error!("case {} failed: {e}", c.case_id);
                CaseResult {
                    case_id: c.case_id.clone(),
                    application: c.application,
                    predicted: Vec::new(),
                    a_c: 0,
                    a_a: c.labels.iter().map(|l| normalize_label(l)).collect::<BTreeSet<_>>().len(),
                    a_w: 0,
                    acc: 0.0,
                    heval: c.heval,
                    error: Some(e.to_string()),
                }
            })
        })
        .collect()
}

/// Mean Acc and HEval over the cases that ran.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanRow {
    pub cases: usize,
    pub acc: Option<f64>,
    pub heval: Option<f64>,
}

pub fn mean_row<'a>(results: impl IntoIterator<Item = &'a CaseResult>) -> MeanRow {
    let ok: Vec<&CaseResult> = results.into_iter().filter(|r| r.error.is_none()).collect();
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let accs: Vec<f64> = ok.iter().map(|r| r.acc).collect();
    let hevals: Vec<f64> = ok.iter().filter_map(|r| r.heval).collect();
    MeanRow {
        cases: ok.len(),
        acc: mean(&accs),
        heval: mean(&hevals),
    }
}

fn fmt4(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_default()
}

pub fn results_csv(results: &[CaseResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(["case_id", "application", "predicted", "a_c", "a_a", "a_w", "acc", "heval", "error"])
        .map_err(csv_err)?;
    for r in results {
        w.write_record([
            r.case_id.clone(),
            r.application.to_string(),
            r.predicted.join(";"),
            r.a_c.to_string(),
            r.a_a.to_string(),
            r.a_w.to_string(),
            format!("{:.4}", r.acc),
            fmt4(r.heval),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    let m = mean_row(results);
    w.write_record(["mean", "", "", "", "", "", &fmt4(m.acc), &fmt4(m.heval), ""])
        .map_err(csv_err)?;
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(format!("csv: {e}")))
}

pub fn results_markdown(results: &[CaseResult]) -> String {
    let mut s = String::from("# Benchmark results\n\n| Application | Cases | Mean Acc | Mean HEval |\n|---|---|---|---|\n");
    let mut by_app: BTreeMap<Application, Vec<&CaseResult>> = BTreeMap::new();
    for r in results {
        by_app.entry(r.application).or_default().push(r);
    }
    for (app, rs) in &by_app {
        let m = mean_row(rs.iter().copied());
        s.push_str(&format!("| {app} | {} | {} | {} |\n", m.cases, fmt4(m.acc), fmt4(m.heval)));
    }
    let m = mean_row(results);
    s.push_str(&format!("| All | {} | {} | {} |\n", m.cases, fmt4(m.acc), fmt4(m.heval)));
    let failed: Vec<&CaseResult> = results.iter().filter(|r| r.error.is_some()).collect();
    if !failed.is_empty() {
        s.push_str("\n## Failed cases\n\n");
        for r in failed {
            s.push_str(&format!("- {}: {}\n", r.case_id, r.error.as_deref().unwrap_or_default()));
        }
    }
    s
}

pub fn write_results(out: &Path, results: &[CaseResult]) -> Result<()> {
    io::write_string(&out.join("results.csv"), &results_csv(results)?)?;
    io::write_string(&out.join("results.md"), &results_markdown(results))
}
