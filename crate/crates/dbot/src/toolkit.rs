//! Tool registry, invocation, similarity matching and the relevance scorer.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use dbot_core::linalg::cosine;
use dbot_core::matcher::{self, Example, MatcherModel, TrainReport};
use dbot_core::tools::{top_k_by_score, ToolSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::gateway::{Gateway, GatewayError};
use crate::io;

pub const DEFAULT_P_MIN: f64 = 0.5;

/// Semantic argument types whose values must be integers (epoch seconds).
const INTEGER_TYPES: [&str; 2] = ["start_time", "end_time"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToolRegistry {
    tools: Vec<ToolSpec>,
    by_api: BTreeMap<String, usize>,
}

impl ToolRegistry {
    /// Parses a JSON manifest `[{"category","tool","api","description","args"}]`.
    pub fn register_tools(manifest: &str) -> Result<Self> {
        let specs: Vec<ToolSpec> =
            serde_json::from_str(manifest).map_err(|e| Error::MalformedManifest(e.to_string()))?;
        let mut reg = Self::default();
        for spec in specs {
            reg.register(spec)?;
        }
        Ok(reg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = io::read_to_string(path)?;
        Self::register_tools(&text)
    }

    /// APIs are invoked by name, so an api name may appear only once even
    /// under different tools.
    pub fn register(&mut self, spec: ToolSpec) -> Result<()> {
        if spec.description.trim().is_empty() {
            return Err(Error::MalformedManifest(format!("`{}` has an empty description", spec.api_name)));
        }
        if spec.api_name.trim().is_empty() || spec.category.trim().is_empty() || spec.tool.trim().is_empty() {
            return Err(Error::MalformedManifest("category, tool and api must be non-empty".into()));
        }
        let mut seen = BTreeSet::new();
        for a in &spec.arg_schema {
            if !seen.insert(a.name.as_str()) {
                return Err(Error::MalformedManifest(format!("`{}` repeats argument `{}`", spec.api_name, a.name)));
            }
        }
        if self.by_api.contains_key(&spec.api_name) {
            return Err(Error::DuplicateApi(spec.api_name));
        }
        self.by_api.insert(spec.api_name.clone(), self.tools.len());
        self.tools.push(spec);
        Ok(())
    }

    pub fn tools(&self) -> &[ToolSpec] {
        &self.tools
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn get(&self, api: &str) -> Option<&ToolSpec> {
        self.by_api.get(api).map(|&i| &self.tools[i])
    }

    /// `category / tool / api` lines in registration order.
    pub fn hierarchy_lines(&self) -> Vec<String> {
        self.tools.iter().map(ToolSpec::hierarchy_line).collect()
    }

    pub fn subset<S: AsRef<str>>(&self, apis: &[S]) -> Result<Self> {
        let mut reg = Self::default();
        for api in apis {
            let spec = self.get(api.as_ref()).ok_or_else(|| Error::UnknownApi(api.as_ref().to_string()))?;
            if !reg.by_api.contains_key(&spec.api_name) {
                reg.register(spec.clone())?;
            }
        }
        Ok(reg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CallStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCallResult {
    pub api_name: String,
    pub request_args: BTreeMap<String, Value>,
    pub observation: String,
    pub status: CallStatus,
}

/// Runs a validated tool call. `Err` carries the diagnostic for a failed call.
pub trait ToolExecutor: Send + Sync {
    fn execute(&self, spec: &ToolSpec, args: &BTreeMap<String, Value>) -> std::result::Result<String, String>;
}

/// Executor that refuses every call; used when no executor is configured.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoExecutor;

impl ToolExecutor for NoExecutor {
    fn execute(&self, spec: &ToolSpec, _: &BTreeMap<String, Value>) -> std::result::Result<String, String> {
        Err(format!("no executor configured for `{}`", spec.api_name))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedCall {
    pub api: String,
    /// `None` matches any arguments.
    #[serde(default)]
    pub args: Option<BTreeMap<String, Value>>,
    pub observation: String,
    #[serde(default = "ok_status")]
    pub status: CallStatus,
}

fn ok_status() -> CallStatus {
    CallStatus::Ok
}

/// Fixture executor: first entry whose api and (if given) arguments match.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScriptedExecutor {
    calls: Vec<ScriptedCall>,
}

impl ScriptedExecutor {
    pub fn new(calls: Vec<ScriptedCall>) -> Self {
        Self { calls }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::new(io::read_json(path)?))
    }
}

impl ToolExecutor for ScriptedExecutor {
    fn execute(&self, spec: &ToolSpec, args: &BTreeMap<String, Value>) -> std::result::Result<String, String> {
        let hit = self
            .calls
            .iter()
            .find(|c| c.api == spec.api_name && c.args.as_ref().is_none_or(|a| a == args));
        match hit {
            Some(c) if c.status == CallStatus::Ok => Ok(c.observation.clone()),
            Some(c) => Err(c.observation.clone()),
            None => Err(format!(
                "no scripted observation for {}({})",
                spec.api_name,
                serde_json::to_string(args).unwrap_or_default()
            )),
        }
    }
}

fn check_args(spec: &ToolSpec, args: &BTreeMap<String, Value>) -> std::result::Result<(), String> {
    for name in args.keys() {
        if !spec.arg_schema.iter().any(|a| &a.name == name) {
            return Err(format!("unknown argument `{name}` for {}", spec.api_name));
        }
    }
    for a in &spec.arg_schema {
        match args.get(&a.name) {
            None if a.required => return Err(format!("missing required argument `{}` for {}", a.name, spec.api_name)),
            Some(v) if INTEGER_TYPES.contains(&a.semantic_type.as_str()) && !v.is_i64() => {
                return Err(format!("argument `{}` of {} must be an integer timestamp", a.name, spec.api_name))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Validates `args` against the schema, then runs the executor. Schema
/// violations and executor failures both come back as `status = failed`.
pub fn invoke(
    registry: &ToolRegistry,
    api: &str,
    args: &BTreeMap<String, Value>,
    executor: &dyn ToolExecutor,
) -> Result<ToolCallResult> {
    let spec = registry.get(api).ok_or_else(|| Error::UnknownApi(api.to_string()))?;
    let outcome = check_args(spec, args).and_then(|()| executor.execute(spec, args));
    let (observation, status) = match outcome {
        Ok(obs) => (obs, CallStatus::Ok),
        Err(diag) if diag.trim().is_empty() => (format!("{api} failed"), CallStatus::Failed),
        Err(diag) => (diag, CallStatus::Failed),
    };
    Ok(ToolCallResult {
        api_name: api.to_string(),
        request_args: args.clone(),
        observation,
        status,
    })
}

/// Cosine similarity between a context and a tool's utilization specification.
pub fn sim(gateway: &Gateway, context: &str, tool: &ToolSpec) -> Result<f64> {
    let c = gateway.embed(context)?;
    let t = gateway.embed(&tool.description)?;
    Ok(cosine(&c, &t)?)
}

/// Registry with cached description embeddings.
#[derive(Debug, Clone)]
pub struct ToolIndex {
    registry: ToolRegistry,
    embeddings: Vec<Vec<f64>>,
    filter: Option<(MatcherModel, f64)>,
}

impl ToolIndex {
    pub fn build(gateway: &Gateway, registry: ToolRegistry) -> Result<Self> {
        let embeddings = registry
            .tools()
            .iter()
            .map(|t| gateway.embed(&t.description))
            .collect::<std::result::Result<_, GatewayError>>()?;
        Ok(Self {
            registry,
            embeddings,
            filter: None,
        })
    }

    /// Drops matches whose predicted relevance is below `p_min`.
    pub fn with_relevance_filter(mut self, model: MatcherModel, p_min: f64) -> Result<Self> {
        model.validate()?;
        self.filter = Some((model, p_min));
        Ok(self)
    }

    pub fn registry(&self) -> &ToolRegistry {
        &self.registry
    }

    /// Top-`k` tools by cosine similarity, ties by ascending api name.
    pub fn match_tools(&self, gateway: &Gateway, context: &str, k: usize) -> Result<Vec<(ToolSpec, f64)>> {
        if self.registry.is_empty() {
            return Err(Error::EmptyRegistry);
        }
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let c = gateway.embed(context)?;
        let scores = self
            .embeddings
            .iter()
            .map(|t| cosine(&c, t))
            .collect::<std::result::Result<Vec<f64>, _>>()?;
        let keyed: Vec<(&str, f64)> = self
            .registry
            .tools()
            .iter()
            .zip(&scores)
            .map(|(t, &s)| (t.api_name.as_str(), s))
            .collect();
        let mut out = Vec::new();
        for i in top_k_by_score(&keyed, k) {
            if let Some((model, p_min)) = &self.filter {
                if model.predict(&c, &self.embeddings[i])? < *p_min {
                    continue;
                }
            }
            out.push((self.registry.tools()[i].clone(), scores[i]));
        }
        Ok(out)
    }
}

/// One-off matching without a prebuilt index.
pub fn match_tools(gateway: &Gateway, registry: &ToolRegistry, context: &str, k: usize) -> Result<Vec<(ToolSpec, f64)>> {
    ToolIndex::build(gateway, registry.clone())?.match_tools(gateway, context, k)
}

/// Selected specs as they appear in prompts.
pub fn render_tools(tools: &[(ToolSpec, f64)]) -> String {
    tools.iter().map(|(t, _)| t.render()).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub context: String,
    pub tool_api: String,
    pub label: u8,
}

/// Embeds every pair (context and tool description) and trains the scorer.
pub fn train_matcher(
    gateway: &Gateway,
    registry: &ToolRegistry,
    dataset: &[LabeledPair],
    epochs: usize,
    learning_rate: f64,
) -> Result<TrainReport> {
    let mut examples = Vec::with_capacity(dataset.len());
    let mut dim = None;
    for pair in dataset {
        let tool = registry
            .get(&pair.tool_api)
            .ok_or_else(|| Error::UnknownApi(pair.tool_api.clone()))?;
        if pair.label > 1 {
            return Err(Error::Config(format!("label {} is not 0 or 1", pair.label)));
        }
        let c = gateway.embed(&pair.context)?;
        let t = gateway.embed(&tool.description)?;
        dim.get_or_insert(c.len());
        examples.push(Example::new(&c, &t, pair.label == 1));
    }
    let report = matcher::train(&examples, dim.unwrap_or(0), epochs, learning_rate)?;
    if report.degenerate {
        log::warn!("matcher training data has a single label class");
    }
    Ok(report)
}

pub fn predict_relevance(gateway: &Gateway, model: &MatcherModel, context: &str, tool: &ToolSpec) -> Result<f64> {
    let c = gateway.embed(context)?;
    let t = gateway.embed(&tool.description)?;
    Ok(model.predict(&c, &t)?)
}
