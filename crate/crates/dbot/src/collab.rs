//! Multi-expert diagnosis: expert preparation and assignment, round-robin
//! search with findings exchanged over the bus, running summaries,
//! cross-review, refinement and the final report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use dbot_core::accuracy::MAX_CAUSES;
use dbot_core::knowledge::ChunkCluster;
use dbot_core::linalg::cosine;
use dbot_core::matcher::MatcherModel;
use dbot_core::text::{normalize_label, truncate_words};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::anomaly::AnomalyProfile;
use crate::bus::{Bus, BusMessage, Subscription, FINDINGS_TOPIC};
use crate::error::{Error, Result};
use crate::gateway::Gateway;
use crate::knowledge::KnowledgeBase;
use crate::prompts;
use crate::search::{AnomalyContext, DiagnosisOutcome, SearchConfig, SearchEnv, TranscriptRecord, TreeSearcher};
use crate::toolkit::{ToolExecutor, ToolIndex, ToolRegistry};

pub const TOOLS_PER_EXPERT: usize = 5;
pub const FALLBACK_EXPERTS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertProfile {
    pub name: String,
    pub cluster_id: i64,
    pub chunk_ids: Vec<String>,
    pub tool_apis: Vec<String>,
    pub prompt_template: String,
}

/// One expert holding every chunk and tool.
pub fn general_expert(knowledge: &KnowledgeBase, registry: &ToolRegistry) -> ExpertProfile {
    let chunk_ids: Vec<String> = knowledge.chunks().iter().map(|c| c.name.clone()).collect();
    let tool_apis: Vec<String> = registry.tools().iter().map(|t| t.api_name.clone()).collect();
    let name = "General Expert".to_string();
    let prompt_template = prompts::expert_template(
        &name,
        &chunk_ids.iter().map(String::as_str).collect::<Vec<_>>(),
        &tool_apis.iter().map(String::as_str).collect::<Vec<_>>(),
    );
    ExpertProfile {
        name,
        cluster_id: -1,
        chunk_ids,
        tool_apis,
        prompt_template,
    }
}

/// One profile per non-noise cluster, named by the model and equipped with
/// the tools closest to the cluster's knowledge.
pub fn prepare_experts(
    gateway: &Gateway,
    clusters: &[ChunkCluster],
    knowledge: &KnowledgeBase,
    registry: &ToolRegistry,
) -> Result<Vec<ExpertProfile>> {
    let index = if registry.is_empty() {
        None
    } else {
        Some(ToolIndex::build(gateway, registry.clone())?)
    };
    let mut sorted: Vec<&ChunkCluster> = clusters.iter().filter(|c| c.cluster_id >= 0).collect();
    sorted.sort_by_key(|c| c.cluster_id);
    let mut names = BTreeSet::new();
    let mut experts = Vec::new();
    for cluster in sorted {
        let mut contents = String::new();
        for id in &cluster.member_chunk_ids {
            let chunk = knowledge.get(id).ok_or_else(|| Error::UnknownChunk(id.clone()))?;
            let _ = writeln!(contents, "{}: {}", chunk.name, chunk.content);
        }
        let chunk_names: Vec<&str> = cluster.member_chunk_ids.iter().map(String::as_str).collect();
        let p = prompts::name_expert(&chunk_names, &contents);
        let mut name = match gateway.ask(&p.preamble, &p.user) {
            Ok(text) => prompts::parse_expert_name(&text),
            Err(e) => {
                log::warn!("naming cluster {} failed: {e}", cluster.cluster_id);
                None
            }
        }
        .unwrap_or_else(|| format!("Expert {}", cluster.cluster_id));
        if !names.insert(name.to_lowercase()) {
            name = format!("{name} {}", cluster.cluster_id);
            names.insert(name.to_lowercase());
        }
        let tool_apis: Vec<String> = match &index {
            Some(ix) if !contents.trim().is_empty() => ix
                .match_tools(gateway, &contents, TOOLS_PER_EXPERT)?
                .into_iter()
                .map(|(t, _)| t.api_name)
                .collect(),
            _ => Vec::new(),
        };
        let prompt_template = prompts::expert_template(
            &name,
            &chunk_names,
            &tool_apis.iter().map(String::as_str).collect::<Vec<_>>(),
        );
        experts.push(ExpertProfile {
            name,
            cluster_id: cluster.cluster_id,
            chunk_ids: cluster.member_chunk_ids.clone(),
            tool_apis,
            prompt_template,
        });
    }
    Ok(experts)
}

fn centroid(gateway: &Gateway, expert: &ExpertProfile, knowledge: &KnowledgeBase) -> Option<Vec<f64>> {
    let mut sum: Option<Vec<f64>> = None;
    let texts: Vec<String> = if expert.chunk_ids.is_empty() {
        vec![expert.prompt_template.clone()]
    } else {
        expert
            .chunk_ids
            .iter()
            .filter_map(|id| knowledge.get(id).map(|c| c.embedding_text()))
            .collect()
    };
    for t in texts {
        let v = gateway.embed(&t).ok()?;
        match &mut sum {
            None => sum = Some(v),
            Some(s) => s.iter_mut().zip(&v).for_each(|(a, b)| *a += b),
        }
    }
    sum
}

/// Indices of the experts to run. The model's named choice wins; otherwise
/// the two experts whose knowledge centroid is closest to the description.
pub fn assign_experts(
    gateway: &Gateway,
    description: &str,
    experts: &[ExpertProfile],
    knowledge: &KnowledgeBase,
) -> Result<Vec<usize>> {
    match experts.len() {
        0 => return Err(Error::Config("no experts to assign".into())),
        1 => return Ok(vec![0]),
        _ => {}
    }
    let roster: Vec<(&str, &str)> = experts.iter().map(|e| (e.name.as_str(), e.prompt_template.as_str())).collect();
    let p = prompts::assign_experts(description, &roster);
    if let Ok(answer) = gateway.ask(&p.preamble, &p.user) {
        let answer = answer.to_lowercase();
        let chosen: Vec<usize> = (0..experts.len())
            .filter(|&i| answer.contains(&experts[i].name.to_lowercase()))
            .collect();
        if !chosen.is_empty() {
            return Ok(chosen);
        }
    }
    log::info!("expert assignment fell back to centroid similarity");
    let desc = gateway.embed(description).ok();
    let mut scored: Vec<(usize, f64)> = experts
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let s = match (&desc, centroid(gateway, e, knowledge)) {
                (Some(d), Some(c)) => cosine(d, &c).unwrap_or(f64::NEG_INFINITY),
                _ => f64::NEG_INFINITY,
            };
            (i, s)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut chosen: Vec<usize> = scored.into_iter().take(FALLBACK_EXPERTS).map(|(i, _)| i).collect();
    chosen.sort_unstable();
    Ok(chosen)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningSummary {
    pub expert: String,
    pub lines: Vec<String>,
}

impl RunningSummary {
    pub fn new(expert: impl Into<String>) -> Self {
        Self {
            expert: expert.into(),
            lines: Vec::new(),
        }
    }
}

fn fallback_line(record: &TranscriptRecord) -> String {
    format!(
        "- Executed {} and observed {}",
        record.action,
        truncate_words(&record.observation, 20)
    )
}

/// Folds `record` into `prev` with one model call; on failure appends a
/// fixed-format line instead.
pub fn summarize_record(gateway: &Gateway, preamble: &str, prev: &RunningSummary, record: &TranscriptRecord) -> RunningSummary {
    let record_json = serde_json::to_string(record).expect("records serialize");
    let p = prompts::summarize_record(preamble, &prev.lines, &record_json);
    let lines = match gateway.ask(&p.preamble, &p.user) {
        Ok(text) => prompts::parse_summary_lines(&text),
        Err(e) => {
            log::debug!("{}: summary call failed: {e}", prev.expert);
            None
        }
    };
    let lines = lines.unwrap_or_else(|| {
        let mut l = prev.lines.clone();
        l.push(fallback_line(record));
        l
    });
    RunningSummary {
        expert: prev.expert.clone(),
        lines,
    }
}

/// The six report fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisReport {
    pub title: String,
    pub anomaly_date: String,
    pub description: String,
    pub root_causes: Vec<String>,
    pub solutions: Vec<String>,
    pub diagnosis_process: String,
}

impl DiagnosisReport {
    pub fn to_markdown(&self) -> String {
        let mut s = format!("# {}\n\n**Anomaly date:** {}\n\n## Description\n\n{}\n\n## Root causes\n\n", self.title, self.anomaly_date, self.description);
        if self.root_causes.is_empty() {
            s.push_str("No root cause identified (inconclusive).\n");
        }
        for (i, c) in self.root_causes.iter().enumerate() {
            let _ = writeln!(s, "{}. {c}", i + 1);
        }
        s.push_str("\n## Solutions\n\n");
        if self.solutions.is_empty() {
            s.push_str("None proposed.\n");
        }
        for sol in &self.solutions {
            let _ = writeln!(s, "- {sol}");
        }
        s.push_str("\n## Diagnosis process\n\n");
        s.push_str(&self.diagnosis_process);
        s.push('\n');
        s
    }
}

/// One expert's contribution to the report.
pub struct ExpertResult<'a> {
    pub name: &'a str,
    pub outcome: &'a DiagnosisOutcome,
    pub summary: &'a RunningSummary,
}

/// Causes are merged by normalized label and ordered by the votes of the
/// leaves that found them (ties: first appearance), at most four.
pub fn generate_report(profile: &AnomalyProfile, results: &[ExpertResult<'_>]) -> DiagnosisReport {
    struct Entry {
        label: String,
        votes: u64,
        first: usize,
        solutions: Vec<String>,
    }
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    let mut order = 0usize;
    for r in results {
        for cause in &r.outcome.root_causes {
            let e = entries.entry(normalize_label(cause)).or_insert_with(|| {
                order += 1;
                Entry {
                    label: cause.clone(),
                    votes: 0,
                    first: order,
                    solutions: Vec::new(),
                }
            });
            e.votes += r.outcome.winning_votes;
            for s in &r.outcome.solutions {
                if !e.solutions.contains(s) {
                    e.solutions.push(s.clone());
                }
            }
        }
    }
    let mut ranked: Vec<Entry> = entries.into_values().collect();
    ranked.sort_by(|a, b| b.votes.cmp(&a.votes).then(a.first.cmp(&b.first)));
    ranked.truncate(MAX_CAUSES);

    let mut process = String::new();
    for r in results {
        if !process.is_empty() {
            process.push('\n');
        }
        let _ = writeln!(process, "### {}\n", r.name);
        if r.summary.lines.is_empty() {
            process.push_str("- No actions were taken.\n");
        }
        for l in &r.summary.lines {
            let _ = writeln!(process, "{l}");
        }
    }
    DiagnosisReport {
        title: profile.title.clone(),
        anomaly_date: profile.anomaly_date.clone(),
        description: profile.description.clone(),
        root_causes: ranked.iter().map(|e| e.label.clone()).collect(),
        solutions: ranked
            .iter()
            .filter(|e| !e.solutions.is_empty())
            .map(|e| format!("{}: {}", e.label, e.solutions.join("; ")))
            .collect(),
        diagnosis_process: process.trim_end().to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollabConfig {
    pub search: SearchConfig,
    /// Extra turns an expert gets after receiving review advice.
    pub refine_budget: usize,
    pub review_rounds: usize,
}

impl Default for CollabConfig {
    fn default() -> Self {
        Self {
            search: SearchConfig::default(),
            refine_budget: 5,
            review_rounds: 1,
        }
    }
}

/// Shared inputs of a collaborative run.
#[derive(Clone, Copy)]
pub struct CollabInputs<'a> {
    pub gateway: &'a Gateway,
    pub knowledge: &'a KnowledgeBase,
    pub registry: &'a ToolRegistry,
    pub executor: &'a dyn ToolExecutor,
    pub profile: &'a AnomalyProfile,
    pub args: &'a BTreeMap<String, Value>,
    /// Optional relevance post-filter for tool matching: model and `p_min`.
    pub relevance: Option<&'a (MatcherModel, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertRun {
    pub profile: ExpertProfile,
    pub outcome: DiagnosisOutcome,
    pub summary: RunningSummary,
    pub advice: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollabResult {
    pub report: DiagnosisReport,
    pub experts: Vec<ExpertRun>,
    pub bus_log: Vec<BusMessage>,
}

struct Seat {
    profile: ExpertProfile,
    knowledge: KnowledgeBase,
    tools: ToolIndex,
    anomaly: AnomalyContext,
    searcher: TreeSearcher,
    summary: RunningSummary,
    subscription: Subscription,
    advice: Vec<String>,
}

impl Seat {
    /// Runs `f` on the searcher with an environment borrowed from the seat.
    fn with_searcher<T>(&mut self, inputs: &CollabInputs<'_>, f: impl FnOnce(&mut TreeSearcher, &SearchEnv<'_>) -> T) -> T {
        let env = SearchEnv {
            gateway: inputs.gateway,
            tools: &self.tools,
            knowledge: &self.knowledge,
            executor: inputs.executor,
            anomaly: &self.anomaly,
        };
        f(&mut self.searcher, &env)
    }

    /// Moves delivered findings into the searcher; returns advice addressed
    /// to this expert.
    fn deliver(&mut self) -> Vec<String> {
        let mut advice = Vec::new();
        for m in self.subscription.drain() {
            if m.publisher == self.profile.name {
                continue;
            }
            if m.topic == FINDINGS_TOPIC {
                self.searcher.add_finding(format!("{}: {}", m.publisher, m.payload));
            } else {
                advice.push(format!("{}: {}", m.publisher, m.payload));
            }
        }
        advice
    }
}

/// Round-robin scheduling until every expert is done.
fn run_round(seats: &mut [Seat], inputs: &CollabInputs<'_>, bus: &Bus, tick: &mut u64) -> Result<()> {
    loop {
        let mut progressed = false;
        for seat in seats.iter_mut() {
            if seat.searcher.is_done() {
                continue;
            }
            let late_advice = seat.deliver();
            if !late_advice.is_empty() {
                seat.searcher.add_advice(late_advice.clone());
                seat.advice.extend(late_advice);
            }
            let record = seat.with_searcher(inputs, |s, env| s.step(env))?;
            if let Some(record) = record {
                progressed = true;
                seat.summary = summarize_record(inputs.gateway, &seat.profile.prompt_template, &seat.summary, &record);
                let payload = seat.summary.lines.last().cloned().unwrap_or_else(|| fallback_line(&record));
                bus.publish(&seat.profile.name, FINDINGS_TOPIC, payload, *tick)?;
            }
        }
        if !progressed {
            return Ok(());
        }
        *tick += 1;
    }
}

fn finish_all(seats: &mut [Seat], inputs: &CollabInputs<'_>) -> Result<Vec<DiagnosisOutcome>> {
    let mut out = Vec::with_capacity(seats.len());
    for seat in seats.iter_mut() {
        out.push(seat.with_searcher(inputs, |s, env| s.finish(env))?);
    }
    Ok(out)
}

/// Runs the selected experts together and writes the report.
pub fn run_collaboration(inputs: CollabInputs<'_>, experts: &[ExpertProfile], config: &CollabConfig) -> Result<CollabResult> {
    if experts.is_empty() {
        return Err(Error::Config("no experts selected".into()));
    }
    config.search.validate()?;
    let bus = Bus::new();
    let mut seats = Vec::with_capacity(experts.len());
    for e in experts {
        let knowledge = inputs.knowledge.subset(&e.chunk_ids)?;
        let mut tools = ToolIndex::build(inputs.gateway, inputs.registry.subset(&e.tool_apis)?)?;
        if let Some((model, p_min)) = inputs.relevance {
            tools = tools.with_relevance_filter(model.clone(), *p_min)?;
        }
        let mut anomaly = AnomalyContext::new(inputs.profile.description.clone(), inputs.profile.query.clone());
        anomaly.args = inputs.args.clone();
        let searcher = TreeSearcher::new(&e.name, &e.prompt_template, &anomaly, config.search.clone())?;
        seats.push(Seat {
            subscription: bus.subscribe(&e.name, &[FINDINGS_TOPIC, e.name.as_str()])?,
            profile: e.clone(),
            knowledge,
            tools,
            anomaly,
            searcher,
            summary: RunningSummary::new(&e.name),
            advice: Vec::new(),
        });
    }

    let mut tick = 0u64;
    run_round(&mut seats, &inputs, &bus, &mut tick)?;
    let mut outcomes = finish_all(&mut seats, &inputs)?;

    if seats.len() > 1 {
        for _ in 0..config.review_rounds {
            for r in 0..seats.len() {
                for t in 0..seats.len() {
                    if r == t {
                        continue;
                    }
                    let p = prompts::review(
                        &seats[r].profile.prompt_template,
                        &seats[t].profile.name,
                        &seats[t].summary.lines,
                        &outcomes[t].root_causes,
                    );
                    match inputs.gateway.ask(&p.preamble, &p.user) {
                        Ok(text) if !text.trim().is_empty() => {
                            bus.publish(&seats[r].profile.name, &seats[t].profile.name, text.trim(), tick)?;
                        }
                        Ok(_) => {}
                        Err(e) => log::warn!("{} could not review {}: {e}", seats[r].profile.name, seats[t].profile.name),
                    }
                }
            }
            for seat in seats.iter_mut() {
                let advice = seat.deliver();
                if !advice.is_empty() {
                    seat.searcher.refine(advice.clone(), config.refine_budget);
                    seat.advice.extend(advice);
                }
            }
            run_round(&mut seats, &inputs, &bus, &mut tick)?;
            outcomes = finish_all(&mut seats, &inputs)?;
        }
    }
    bus.close();

    let results: Vec<ExpertResult<'_>> = seats
        .iter()
        .zip(&outcomes)
        .map(|(s, o)| ExpertResult {
            name: &s.profile.name,
            outcome: o,
            summary: &s.summary,
        })
        .collect();
    let report = generate_report(inputs.profile, &results);
    let experts = seats
        .into_iter()
        .zip(outcomes)
        .map(|(s, outcome)| ExpertRun {
            profile: s.profile,
            outcome,
            summary: s.summary,
            advice: s.advice,
        })
        .collect();
    Ok(CollabResult {
        report,
        experts,
        bus_log: bus.log(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::ScriptedRule;
    use crate::search::OutcomeStatus;
    use dbot_core::bm25::Bm25Params;
    use dbot_core::knowledge::{KeptBy, KnowledgeChunk};
    use dbot_core::metrics::{AbnormalQuery, TimeWindow};
    use dbot_core::tools::ToolSpec;
    use serde_json::json;

    fn chunk(name: &str, content: &str) -> KnowledgeChunk {
        KnowledgeChunk {
            name: name.into(),
            content: content.into(),
            metrics: vec!["cpu_usage".into()],
            steps: "check".into(),
            source_block: None,
            kept_by: KeptBy::Llm,
        }
    }

    fn kb() -> KnowledgeBase {
        KnowledgeBase::new(
            vec![chunk("cpu_hot", "cpu usage high from heavy queries"), chunk("io_wait", "disk io wait")],
            Bm25Params::default(),
        )
        .unwrap()
    }

    fn expert(name: &str, chunks: &[&str]) -> ExpertProfile {
        ExpertProfile {
            name: name.into(),
            cluster_id: 0,
            chunk_ids: chunks.iter().map(|c| c.to_string()).collect(),
            tool_apis: vec![],
            prompt_template: format!("Role: {name}"),
        }
    }

    fn record() -> TranscriptRecord {
        TranscriptRecord {
            thought: "Now that I have the start and end time of the anomaly, I need to diagnose the causes".into(),
            action: "is_abnormal_metric".into(),
            action_input: json!({"start_time": 1684600070, "end_time": 1684600074, "metric": "cpu_usage"}),
            observation: "The metric is abnormal".into(),
        }
    }

    #[test]
    fn summary_uses_model_answer() {
        let g = Gateway::scripted(
            vec![ScriptedRule::new(
                "### Task: summarize record",
                "- I know the start and end time of the anomaly.\n- The cpu_usage metric is abnormal.",
            )
            .unwrap()],
            0,
        );
        let prev = RunningSummary {
            expert: "CPU Expert".into(),
            lines: vec!["- I know the start and end time of the anomaly.".into()],
        };
        let next = summarize_record(&g, "", &prev, &record());
        assert_eq!(next.lines.len(), 2);
        assert_eq!(next.lines[0], prev.lines[0]);
        assert!(next.lines[1].contains("cpu_usage"));
        assert!(g.prompt_history()[0].contains("The metric is abnormal"));
    }

    #[test]
    fn summary_fallback_on_gateway_failure() {
        let g = Gateway::scripted(vec![], 0);
        let next = summarize_record(&g, "", &RunningSummary::new("x"), &record());
        assert_eq!(next.lines, ["- Executed is_abnormal_metric and observed The metric is abnormal"]);
    }

    #[test]
    fn assignment_by_name_and_fallback() {
        let experts = [expert("CPU Expert", &["cpu_hot"]), expert("IO Expert", &["io_wait"]), expert("Lock Expert", &[])];
        let g = Gateway::scripted(vec![ScriptedRule::new("Load_High", "CPU Expert").unwrap()], 0);
        assert_eq!(assign_experts(&g, "Load_High alert", &experts, &kb()).unwrap(), [0]);

        let garbage = Gateway::scripted(vec![ScriptedRule::new("", "???").unwrap()], 0);
        let chosen = assign_experts(&garbage, "cpu usage high", &experts, &kb()).unwrap();
        assert_eq!(chosen.len(), 2);
        assert!(chosen.contains(&0));

        let one = [expert("Solo Expert", &[])];
        assert_eq!(assign_experts(&garbage, "x", &one, &kb()).unwrap(), [0]);
    }

    #[test]
    fn prepare_experts_per_cluster() {
        let g = Gateway::scripted(vec![ScriptedRule::new("cpu_hot", "CPU Expert").unwrap()], 0);
        let mut reg = ToolRegistry::default();
        reg.register(ToolSpec {
            category: "monitoring".into(),
            tool: "metrics".into(),
            api_name: "cpu_check".into(),
            description: "check cpu usage".into(),
            arg_schema: vec![],
        })
        .unwrap();
        let clusters = vec![
            ChunkCluster { cluster_id: 1, member_chunk_ids: vec!["io_wait".into()], member_coords_3d: vec![[0.0; 3]], centroid_coords_3d: [0.0; 3] },
            ChunkCluster { cluster_id: 0, member_chunk_ids: vec!["cpu_hot".into()], member_coords_3d: vec![[0.0; 3]], centroid_coords_3d: [0.0; 3] },
            ChunkCluster { cluster_id: -1, member_chunk_ids: vec![], member_coords_3d: vec![], centroid_coords_3d: [0.0; 3] },
        ];
        let experts = prepare_experts(&g, &clusters, &kb(), &reg).unwrap();
        let names: Vec<&str> = experts.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names, ["CPU Expert", "Expert 1"]);
        assert_eq!(experts[0].tool_apis, ["cpu_check"]);
        assert!(experts[0].prompt_template.starts_with("Role:"));
    }

    fn outcome(causes: &[&str], votes: u64, solutions: &[&str]) -> DiagnosisOutcome {
        DiagnosisOutcome {
            root_causes: causes.iter().map(|c| c.to_string()).collect(),
            solutions: solutions.iter().map(|c| c.to_string()).collect(),
            winning_leaf: Some(1),
            winning_votes: votes,
            transcript: vec![],
            status: OutcomeStatus::Concluded,
        }
    }

    #[test]
    fn report_merges_by_votes() {
        let profile = AnomalyProfile {
            title: "t".into(),
            anomaly_date: "d".into(),
            description: "desc".into(),
            query: AbnormalQuery::new(["cpu"], TimeWindow::new(0, 1).unwrap()),
        };
        let a = outcome(&["poor join"], 1, &["rewrite"]);
        let b = outcome(&["large data fetch", "Poor_Join"], 3, &["limit"]);
        let s = RunningSummary::new("x");
        let report = generate_report(
            &profile,
            &[
                ExpertResult { name: "A", outcome: &a, summary: &s },
                ExpertResult { name: "B", outcome: &b, summary: &s },
            ],
        );
        assert_eq!(report.root_causes, ["poor join", "large data fetch"]);
        assert_eq!(report.solutions, ["poor join: rewrite; limit", "large data fetch: limit"]);
        assert!(report.to_markdown().contains("1. poor join"));
        assert!(report.diagnosis_process.contains("### B"));
    }
}
