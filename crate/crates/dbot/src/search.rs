//! Single-expert tree-search diagnosis.
//!
//! One turn executes one action. Each turn selects a node by UCT descent;
//! an executed, unexpanded node is expanded first (one child per matched tool
//! and per ranked knowledge chunk) and selection repeats, so the executed node
//! is always a fresh child. After execution the node is reflected on, which
//! may prune it or record root causes. Evaluators vote on the current leaves
//! every `vote_every` turns and once more at the end.

use std::collections::{BTreeMap, BTreeSet};

use dbot_core::accuracy::MAX_CAUSES;
use dbot_core::metrics::AbnormalQuery;
use dbot_core::text::{normalize_label, truncate_words};
use dbot_core::tools::ToolSpec;
use dbot_core::tree::{Action, DiagnosisTree, NodeId};
use dbot_core::CoreError;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::gateway::Gateway;
use crate::knowledge::KnowledgeBase;
use crate::prompts::{self, LeafView, StepContext};
use crate::toolkit::{invoke, CallStatus, ToolExecutor, ToolIndex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// UCT exploration constant.
    pub c: f64,
    pub max_turns: usize,
    pub n_evaluators: usize,
    pub top_k_tools: usize,
    pub top_n_knowledge: usize,
    pub vote_every: usize,
    /// Nodes at this depth are never expanded.
    pub max_depth: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            c: 1.4,
            max_turns: 20,
            n_evaluators: 3,
            top_k_tools: 5,
            top_n_knowledge: 3,
            vote_every: 5,
            max_depth: 8,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad("exploration constant must be positive");
        }
        if self.max_turns == 0 {
            return bad("max_turns must be at least 1");
        }
        if self.n_evaluators.is_multiple_of(2) {
            return bad("n_evaluators must be odd");
        }
        if self.vote_every == 0 {
            return bad("vote_every must be at least 1");
        }
        if self.top_k_tools + self.top_n_knowledge == 0 {
            return bad("top_k_tools and top_n_knowledge cannot both be 0");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1");
        }
        Ok(())
    }
}

/// What the searcher knows about the anomaly.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyContext {
    pub description: String,
    pub query: AbnormalQuery,
    /// Extra tool argument values, looked up by argument name and then by
    /// semantic type.
    pub args: BTreeMap<String, Value>,
}

impl AnomalyContext {
    pub fn new(description: impl Into<String>, query: AbnormalQuery) -> Self {
        Self {
            description: description.into(),
            query,
            args: BTreeMap::new(),
        }
    }

    /// Arguments for `spec`, filled from the window, the abnormal metrics and `args`.
    pub fn fill_args(&self, spec: &ToolSpec) -> BTreeMap<String, Value> {
        let mut out = BTreeMap::new();
        for a in &spec.arg_schema {
            let value = self.args.get(&a.name).cloned().or_else(|| match a.semantic_type.as_str() {
                "start_time" => Some(json!(self.query.window.start_time)),
                "end_time" => Some(json!(self.query.window.end_time)),
                "metric" | "metric_name" => self.query.metrics.iter().next().map(|m| json!(m)),
                other => self.args.get(other).cloned(),
            });
            if let Some(v) = value {
                out.insert(a.name.clone(), v);
            }
        }
        out
    }

    fn metric_names(&self) -> Vec<&str> {
        self.query.metrics.iter().map(String::as_str).collect()
    }
}

/// Borrowed resources one search step needs.
#[derive(Clone, Copy)]
pub struct SearchEnv<'a> {
    pub gateway: &'a Gateway,
    pub tools: &'a ToolIndex,
    pub knowledge: &'a KnowledgeBase,
    pub executor: &'a dyn ToolExecutor,
    pub anomaly: &'a AnomalyContext,
}

/// One line of the diagnosis record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub thought: String,
    pub action: String,
    pub action_input: Value,
    pub observation: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeStatus {
    Concluded,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisOutcome {
    pub root_causes: Vec<String>,
    pub solutions: Vec<String>,
    pub winning_leaf: Option<NodeId>,
    pub winning_votes: u64,
    pub transcript: Vec<TranscriptRecord>,
    pub status: OutcomeStatus,
}

/// Keeps the first spelling of each label (compared after normalization),
/// at most `max` of them.
pub fn merge_labels<I, S>(labels: I, max: usize) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for l in labels {
        let l = l.as_ref().trim();
        if l.is_empty() || out.len() == max {
            continue;
        }
        if seen.insert(normalize_label(l)) {
            out.push(l.to_string());
        }
    }
    out
}

fn dedup_texts(texts: Vec<String>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    texts.into_iter().filter(|t| seen.insert(t.clone())).collect()
}

/// Stepwise driver for one expert's tree.
#[derive(Debug, Clone)]
pub struct TreeSearcher {
    expert: String,
    preamble: String,
    config: SearchConfig,
    tree: DiagnosisTree,
    transcript: Vec<TranscriptRecord>,
    turns: usize,
    turn_limit: usize,
    last_ballot: Option<usize>,
    findings: Vec<String>,
    advice: Vec<String>,
    stalled: bool,
}

impl TreeSearcher {
    pub fn new(expert: impl Into<String>, preamble: impl Into<String>, anomaly: &AnomalyContext, config: SearchConfig) -> Result<Self> {
        config.validate()?;
        let root_obs = format!(
            "{}\nAbnormal metrics: {}",
            anomaly.description,
            if anomaly.query.metrics.is_empty() {
                "none".to_string()
            } else {
                anomaly.metric_names().join(", ")
            }
        );
        Ok(Self {
            expert: expert.into(),
            preamble: preamble.into(),
            turn_limit: config.max_turns,
            config,
            tree: DiagnosisTree::new(root_obs),
            transcript: Vec::new(),
            turns: 0,
            last_ballot: None,
            findings: Vec::new(),
            advice: Vec::new(),
            stalled: false,
        })
    }

    pub fn expert(&self) -> &str {
        &self.expert
    }

    pub fn tree(&self) -> &DiagnosisTree {
        &self.tree
    }

    pub fn transcript(&self) -> &[TranscriptRecord] {
        &self.transcript
    }

    pub fn turns(&self) -> usize {
        self.turns
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    /// True once the budget is spent or nothing is left to explore.
    pub fn is_done(&self) -> bool {
        self.stalled || self.turns >= self.turn_limit
    }

    /// Findings shown in every later prompt.
    pub fn add_finding(&mut self, finding: impl Into<String>) {
        self.findings.push(finding.into());
    }

    /// Review advice shown in every later prompt.
    pub fn add_advice(&mut self, advice: Vec<String>) {
        self.advice.extend(advice);
    }

    /// Grants `extra_turns` more turns guided by `advice`.
    pub fn refine(&mut self, advice: Vec<String>, extra_turns: usize) {
        self.advice.extend(advice);
        self.turn_limit = self.turns + extra_turns;
        self.stalled = false;
    }

    /// Runs one turn. `None` means the search is finished.
    pub fn step(&mut self, env: &SearchEnv<'_>) -> Result<Option<TranscriptRecord>> {
        if self.is_done() {
            return Ok(None);
        }
        loop {
            let id = match self.tree.select(self.config.c) {
                Ok(id) => id,
                Err(CoreError::AllPruned) => {
                    self.stalled = true;
                    return Ok(None);
                }
                Err(e) => return Err(e.into()),
            };
            if self.tree.node(id)?.executed {
                self.expand(env, id)?;
                continue;
            }
            let record = self.execute(env, id)?;
            self.turns += 1;
            self.tree.record_visit(id)?;
            self.transcript.push(record.clone());
            if self.turns.is_multiple_of(self.config.vote_every) {
                self.ballot(env)?;
            }
            return Ok(Some(record));
        }
    }

    fn expand(&mut self, env: &SearchEnv<'_>, id: NodeId) -> Result<()> {
        let on_path: BTreeSet<String> = self.tree.path_action_keys(id)?.into_iter().collect();
        let mut candidates = Vec::new();
        if self.tree.depth(id)? < self.config.max_depth {
            let node = self.tree.node(id)?;
            let mut context = format!("{}\n{}", env.anomaly.description, node.observation);
            if let Some(r) = &node.reflection {
                context.push('\n');
                context.push_str(r);
            }
            if self.config.top_k_tools > 0 && !env.tools.registry().is_empty() {
                for (spec, _) in env.tools.match_tools(env.gateway, &context, self.config.top_k_tools)? {
                    let args = env.anomaly.fill_args(&spec);
                    candidates.push(Action::ToolCall {
                        api: spec.api_name,
                        args,
                    });
                }
            }
            if self.config.top_n_knowledge > 0 {
                for (name, _) in env.knowledge.rank(&env.anomaly.query, self.config.top_n_knowledge) {
                    candidates.push(Action::KnowledgeApply { chunk_name: name });
                }
            }
        }
        for action in candidates {
            if !on_path.contains(&action.key()) {
                self.tree.add_child(id, action)?;
            }
        }
        self.tree.node_mut(id)?.expanded = true;
        Ok(())
    }

    fn context<'a>(&'a self, env: &SearchEnv<'a>, id: NodeId) -> Result<StepContext<'a>> {
        let path = self.tree.path(id)?;
        let ancestors = &path[1..path.len() - 1];
        Ok(StepContext {
            description: &env.anomaly.description,
            abnormal_metrics: env.anomaly.metric_names(),
            previous_actions: ancestors.iter().map(|&n| self.tree.nodes()[n].action.label()).collect(),
            inherited_reflections: ancestors
                .iter()
                .filter_map(|&n| self.tree.nodes()[n].reflection.as_deref())
                .collect(),
            findings: &self.findings,
            advice: &self.advice,
        })
    }

    fn execute(&mut self, env: &SearchEnv<'_>, id: NodeId) -> Result<TranscriptRecord> {
        let action = self.tree.node(id)?.action.clone();
        let (thought, action_input, observation, failed, mut causes, mut solutions) = match &action {
            Action::ToolCall { api, args } => {
                let spec = env.tools.registry().get(api);
                let thought = match spec {
                    Some(s) => format!("Use {api}: {}", truncate_words(&s.description, 20)),
                    None => format!("Use {api}"),
                };
                let (obs, failed) = match invoke(env.tools.registry(), api, args, env.executor) {
                    Ok(r) => (r.observation, r.status == CallStatus::Failed),
                    Err(e) => (e.to_string(), true),
                };
                (thought, json!(args), obs, failed, Vec::new(), Vec::new())
            }
            Action::KnowledgeApply { chunk_name } => {
                let input = json!({ "chunk": chunk_name });
                match env.knowledge.get(chunk_name) {
                    None => (
                        format!("Apply knowledge {chunk_name}"),
                        input,
                        format!("unknown knowledge chunk `{chunk_name}`"),
                        true,
                        Vec::new(),
                        Vec::new(),
                    ),
                    Some(chunk) => {
                        let thought = format!("Apply knowledge {chunk_name}: {}", truncate_words(&chunk.content, 20));
                        let p = prompts::apply_knowledge(&self.preamble, &self.context(env, id)?, chunk);
                        match env.gateway.ask(&p.preamble, &p.user) {
                            Ok(text) => {
                                let c = prompts::parse_causes(&text);
                                let s = prompts::parse_solutions(&text);
                                (thought, input, text, false, c, s)
                            }
                            Err(e) => (thought, input, format!("knowledge analysis failed: {e}"), true, Vec::new(), Vec::new()),
                        }
                    }
                }
            }
            Action::Root => unreachable!("the root is executed at construction"),
        };

        let p = prompts::reflect(
            &self.preamble,
            &self.context(env, id)?,
            &action.label(),
            &action_input.to_string(),
            &observation,
        );
        let reflection = match env.gateway.ask(&p.preamble, &p.user) {
            Ok(text) => Some(prompts::parse_reflection(&text)),
            Err(e) => {
                log::warn!("{}: reflection on `{}` failed: {e}", self.expert, action.label());
                None
            }
        };
        let mut pruned = false;
        let mut reflection_text = None;
        if let Some(r) = reflection {
            pruned = r.prune;
            causes.extend(r.causes);
            solutions.extend(r.solutions);
            reflection_text = Some(r.text);
        }
        let node = self.tree.node_mut(id)?;
        node.executed = true;
        node.failed = failed;
        node.observation = observation.clone();
        node.reflection = reflection_text;
        node.pruned = pruned;
        if !pruned {
            node.found_causes = merge_labels(&causes, MAX_CAUSES);
            node.solutions = dedup_texts(solutions);
        }
        Ok(TranscriptRecord {
            thought,
            action: action.label(),
            action_input,
            observation,
        })
    }

    fn leaf_views(&self) -> Result<Vec<LeafView>> {
        self.tree
            .leaves()
            .into_iter()
            .map(|id| {
                let n = self.tree.node(id)?;
                let path = self.tree.path(id)?;
                Ok(LeafView {
                    id,
                    causes: n.found_causes.clone(),
                    path: path[1..].iter().map(|&p| self.tree.nodes()[p].action.label()).collect(),
                    observation: truncate_words(&n.observation, 30),
                })
            })
            .collect()
    }

    fn ballot(&mut self, env: &SearchEnv<'_>) -> Result<()> {
        self.last_ballot = Some(self.turns);
        let leaves = self.leaf_views()?;
        if leaves.is_empty() {
            return Ok(());
        }
        let ids: BTreeSet<NodeId> = leaves.iter().map(|l| l.id).collect();
        let scenario = format!(
            "{} (abnormal metrics: {})",
            env.anomaly.description,
            if env.anomaly.query.metrics.is_empty() {
                "none".to_string()
            } else {
                env.anomaly.metric_names().join(", ")
            }
        );
        let n = self.config.n_evaluators;
        let mut tally: BTreeMap<NodeId, u64> = BTreeMap::new();
        for i in 1..=n {
            let p = prompts::vote(&self.preamble, i, n, &scenario, &leaves);
            match env.gateway.ask(&p.preamble, &p.user) {
                Ok(text) => match prompts::parse_vote(&text, &ids) {
                    Some(leaf) => *tally.entry(leaf).or_insert(0) += 1,
                    None => log::debug!("{}: evaluator {i} abstained", self.expert),
                },
                Err(e) => log::warn!("{}: evaluator {i} failed: {e}", self.expert),
            }
        }
        self.tree.apply_ballot(&tally, n as u64)?;
        Ok(())
    }

    /// Final vote (unless one just happened) and the winning leaf's result.
    pub fn finish(&mut self, env: &SearchEnv<'_>) -> Result<DiagnosisOutcome> {
        if self.turns > 0 && self.last_ballot != Some(self.turns) {
            self.ballot(env)?;
        }
        Ok(self.outcome())
    }

    /// Result of the current best leaf without voting.
    pub fn outcome(&self) -> DiagnosisOutcome {
        let best = self.tree.best_leaf();
        let (root_causes, solutions, votes) = match best.and_then(|id| self.tree.node(id).ok()) {
            Some(n) => (n.found_causes.clone(), n.solutions.clone(), n.votes),
            None => (Vec::new(), Vec::new(), 0),
        };
        DiagnosisOutcome {
            status: if root_causes.is_empty() {
                OutcomeStatus::Inconclusive
            } else {
                OutcomeStatus::Concluded
            },
            root_causes,
            solutions,
            winning_leaf: best,
            winning_votes: votes,
            transcript: self.transcript.clone(),
        }
    }
}

/// Runs one expert to completion.
pub fn run_diagnosis(env: &SearchEnv<'_>, expert: &str, preamble: &str, config: SearchConfig) -> Result<DiagnosisOutcome> {
    let mut s = TreeSearcher::new(expert, preamble, env.anomaly, config)?;
    while s.step(env)?.is_some() {}
    s.finish(env)
}
