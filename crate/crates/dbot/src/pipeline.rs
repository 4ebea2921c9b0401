//! Run configuration and the end-to-end diagnose pipeline shared by the CLI
//! and the benchmark harness.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dbot_core::knowledge::ChunkCluster;
use dbot_core::matcher::MatcherModel;
use dbot_core::metrics::{AbnormalQuery, KsThresholds, TimeWindow};
use serde_json::Value;

use crate::anomaly::{self, AlertFile, AnomalyProfile};
use crate::bus::BusMessage;
use crate::collab::{self, CollabConfig, CollabInputs, DiagnosisReport, ExpertProfile, ExpertRun};
use crate::error::{Error, Result};
use crate::gateway::{Gateway, HttpConfig};
use crate::io;
use crate::knowledge::KnowledgeBase;
use crate::search::OutcomeStatus;
use crate::toolkit::{NoExecutor, ScriptedExecutor, ToolExecutor, ToolRegistry, DEFAULT_P_MIN};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub knowledge: PathBuf,
    pub tools: PathBuf,
    /// Metric series JSONL; without it no metric is considered abnormal.
    pub metrics: Option<PathBuf>,
    /// Scripted gateway rules; without them the HTTP backend is used.
    pub rules: Option<PathBuf>,
    pub executor: Option<PathBuf>,
    pub alert: Option<PathBuf>,
    pub start: Option<i64>,
    pub end: Option<i64>,
    /// Expert profiles or chunk clusters (JSON array of either).
    pub experts: Option<PathBuf>,
    /// Trained relevance scorer used as a tool-matching post-filter.
    pub matcher: Option<PathBuf>,
    pub p_min: f64,
    /// Replaces the alert-derived description.
    pub description: Option<String>,
    pub seed: Option<u64>,
    pub collab: CollabConfig,
    pub ks: KsThresholds,
}

impl RunConfig {
    pub fn new(knowledge: impl Into<PathBuf>, tools: impl Into<PathBuf>) -> Self {
        Self {
            knowledge: knowledge.into(),
            tools: tools.into(),
            metrics: None,
            rules: None,
            executor: None,
            alert: None,
            start: None,
            end: None,
            experts: None,
            matcher: None,
            p_min: DEFAULT_P_MIN,
            description: None,
            seed: None,
            collab: CollabConfig::default(),
            ks: KsThresholds::default(),
        }
    }

    /// Checks every path exists and the seed/window requirements.
    pub fn validate(&self) -> Result<()> {
        let required = [Some(&self.knowledge), Some(&self.tools)];
        let optional = [&self.metrics, &self.rules, &self.executor, &self.alert, &self.experts, &self.matcher];
        for p in required.into_iter().chain(optional.iter().map(|p| p.as_ref())).flatten() {
            if !p.exists() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        if self.rules.is_some() && self.seed.is_none() {
            return Err(Error::Config("a seed is required with scripted rules".into()));
        }
        if self.alert.is_none() && (self.start.is_none() || self.end.is_none()) {
            return Err(Error::Config("give an alert file or both --start and --end".into()));
        }
        if !(0.0..=1.0).contains(&self.p_min) {
            return Err(Error::Config("p_min must be in [0, 1]".into()));
        }
        self.collab.search.validate()
    }

    /// The alert file with `start`/`end` overrides applied.
    pub fn load_alert(&self) -> Result<AlertFile> {
        let mut alert = match &self.alert {
            Some(p) => AlertFile::load(p)?,
            None => AlertFile {
                start_time: 0,
                end_time: 0,
                alerts: Vec::new(),
            },
        };
        if let Some(s) = self.start {
            alert.start_time = s;
        }
        if let Some(e) = self.end {
            alert.end_time = e;
        }
        Ok(alert)
    }
}

/// Scripted gateway when `rules` is given, otherwise HTTP from the environment.
pub fn build_gateway(rules: Option<&Path>, seed: Option<u64>) -> Result<Gateway> {
    match rules {
        Some(path) => {
            let seed = seed.ok_or_else(|| Error::Config("a seed is required with scripted rules".into()))?;
            Gateway::scripted_from_file(path, seed)
        }
        None => Ok(Gateway::http(HttpConfig::from_env()?, seed.unwrap_or(0))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseOutput {
    pub profile: AnomalyProfile,
    pub report: DiagnosisReport,
    pub experts: Vec<ExpertRun>,
    pub bus_log: Vec<BusMessage>,
    pub status: OutcomeStatus,
}

/// Loads an experts file holding either profiles or chunk clusters.
pub fn load_experts(
    path: &Path,
    gateway: &Gateway,
    knowledge: &KnowledgeBase,
    registry: &ToolRegistry,
) -> Result<Vec<ExpertProfile>> {
    let value: Value = io::read_json(path)?;
    let looks_like_profiles = value
        .as_array()
        .and_then(|a| a.first())
        .is_some_and(|v| v.get("prompt_template").is_some());
    if looks_like_profiles {
        let experts: Vec<ExpertProfile> = serde_json::from_value(value).map_err(|e| Error::parse(path, e))?;
        for e in &experts {
            knowledge.subset(&e.chunk_ids)?;
            registry.subset(&e.tool_apis)?;
        }
        Ok(experts)
    } else {
        let clusters: Vec<ChunkCluster> = serde_json::from_value(value).map_err(|e| Error::parse(path, e))?;
        collab::prepare_experts(gateway, &clusters, knowledge, registry)
    }
}

pub fn diagnose(config: &RunConfig) -> Result<DiagnoseOutput> {
    config.validate()?;
    let gateway = build_gateway(config.rules.as_deref(), config.seed)?;
    diagnose_with(&gateway, config)
}

/// The pipeline with a caller-supplied gateway.
pub fn diagnose_with(gateway: &Gateway, config: &RunConfig) -> Result<DiagnoseOutput> {
    let alert = config.load_alert()?;
    diagnose_alert(gateway, config, &alert)
}

/// The pipeline for an already loaded alert; `config.alert`, `start` and
/// `end` are ignored.
pub fn diagnose_alert(gateway: &Gateway, config: &RunConfig, alert: &AlertFile) -> Result<DiagnoseOutput> {
    let knowledge = KnowledgeBase::load(&config.knowledge)?;
    let registry = ToolRegistry::load(&config.tools)?;
    let executor: Box<dyn ToolExecutor> = match &config.executor {
        Some(p) => Box::new(ScriptedExecutor::load(p)?),
        None => Box::new(NoExecutor),
    };

    let window = TimeWindow::new(alert.start_time, alert.end_time)?;
    let query = match &config.metrics {
        Some(p) => anomaly::abnormal_query(&anomaly::load_metrics(p)?, window, &config.ks)?,
        None => AbnormalQuery::new(Vec::<String>::new(), window),
    };
    let mut profile = anomaly::profile(alert, query);
    if let Some(d) = &config.description {
        profile.description = d.clone();
    }

    let mut experts = match &config.experts {
        Some(p) => load_experts(p, gateway, &knowledge, &registry)?,
        None => Vec::new(),
    };
    if experts.is_empty() {
        experts.push(collab::general_expert(&knowledge, &registry));
    }
    let selected: Vec<ExpertProfile> = collab::assign_experts(gateway, &profile.description, &experts, &knowledge)?
        .into_iter()
        .map(|i| experts[i].clone())
        .collect();
    log::info!(
        "selected experts: {}",
        selected.iter().map(|e| e.name.as_str()).collect::<Vec<_>>().join(", ")
    );

    let relevance = match &config.matcher {
        Some(p) => Some((io::read_json::<MatcherModel>(p)?, config.p_min)),
        None => None,
    };
    let args = BTreeMap::new();
    let result = collab::run_collaboration(
        CollabInputs {
            gateway,
            knowledge: &knowledge,
            registry: &registry,
            executor: executor.as_ref(),
            profile: &profile,
            args: &args,
            relevance: relevance.as_ref(),
        },
        &selected,
        &config.collab,
    )?;
    let status = if result.report.root_causes.is_empty() {
        OutcomeStatus::Inconclusive
    } else {
        OutcomeStatus::Concluded
    };
    Ok(DiagnoseOutput {
        profile,
        report: result.report,
        experts: result.experts,
        bus_log: result.bus_log,
        status,
    })
}

/// File-name-safe form of an expert name.
pub fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    let s = s.trim_matches('_').to_string();
    if s.is_empty() {
        "expert".into()
    } else {
        s
    }
}

/// Writes report.md, report.json, transcripts/<expert>.jsonl and bus.jsonl.
pub fn write_outputs(out: &Path, result: &DiagnoseOutput) -> Result<()> {
    io::write_string(&out.join("report.md"), &result.report.to_markdown())?;
    io::write_json(&out.join("report.json"), &result.report)?;
    for run in &result.experts {
        let path = out.join("transcripts").join(format!("{}.jsonl", slug(&run.profile.name)));
        io::write_jsonl(&path, &run.outcome.transcript)?;
    }
    io::write_jsonl(&out.join("bus.jsonl"), &result.bus_log)
}
