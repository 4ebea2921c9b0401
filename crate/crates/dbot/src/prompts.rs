//! Prompt text and response parsing.
//!
//! Every prompt carries a `### Task: <name>` marker so scripted rules can
//! target one kind of call without depending on the rest of the wording.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use dbot_core::knowledge::{ChunkPayload, KnowledgeChunk};
use dbot_core::tree::NodeId;
use regex::Regex;
use serde_json::Value;

pub const TASK_SUMMARIZE: &str = "### Task: summarize";
pub const TASK_EXTRACT: &str = "### Task: extract";
pub const TASK_APPLY_KNOWLEDGE: &str = "### Task: apply knowledge";
pub const TASK_REFLECT: &str = "### Task: reflect";
pub const TASK_VOTE: &str = "### Task: vote";
pub const TASK_SUMMARIZE_RECORD: &str = "### Task: summarize record";
pub const TASK_ASSIGN: &str = "### Task: assign experts";
pub const TASK_REVIEW: &str = "### Task: review";
pub const TASK_NAME_EXPERT: &str = "### Task: name expert";

pub const P_SUMMARIZE: &str = "Summarize the provided chunk briefly. Your summary will serve as an index \
for others to find technical details related to database maintenance. Pay attention to examples even if \
the chunks cover other topics.";

pub const P_EXTRACT: &str = "Given a chunk summary, extract diagnosis experience from the chunk. If uncertain, \
explore diagnosis experience in chunks from child nodes or chunks with similar summaries.";

pub const P_REVIEW: &str = "Please review the above diagnosis results, and give necessary advice to correct \
the incorrect analysis or unclear results.";

const DOC_PREAMBLE: &str = "You are a database maintenance engineer organizing documentation into reusable diagnosis knowledge.";
const ASSIGNER_PREAMBLE: &str = "You are the expert assigner of a database diagnosis team.";

/// A ready-to-send prompt: role preamble plus one user turn.
#[derive(Debug, Clone, PartialEq)]
pub struct Prompt {
    pub preamble: String,
    pub user: String,
}

impl Prompt {
    fn new(preamble: impl Into<String>, user: String) -> Self {
        Self {
            preamble: preamble.into(),
            user,
        }
    }
}

pub fn summarize_block(title: &str, content: &str) -> Prompt {
    Prompt::new(
        DOC_PREAMBLE,
        format!("{TASK_SUMMARIZE}\n{P_SUMMARIZE}\n\nChunk title: {title}\nChunk:\n{content}"),
    )
}

pub struct ExtractInput<'a> {
    pub title: &'a str,
    pub summary: &'a str,
    pub content: &'a str,
    pub children: Vec<(&'a str, &'a str)>,
    pub similar: Vec<(&'a str, &'a str)>,
    pub existing_names: Vec<&'a str>,
}

pub fn extract_knowledge(input: &ExtractInput<'_>) -> Prompt {
    let mut s = format!("{TASK_EXTRACT}\n{P_EXTRACT}\n\n");
    s.push_str("Answer KEEP or REDUNDANT on the first line: REDUNDANT if the experience is likely already \
covered by the existing knowledge listed below. Then give each piece of experience as one JSON object with \
exactly the fields \"name\", \"content\", \"metrics\" (list of metric names) and \"steps\".\n\n");
    s.push_str(&format!("Chunk title: {}\nChunk summary: {}\nChunk:\n{}\n", input.title, input.summary, input.content));
    if !input.children.is_empty() {
        s.push_str("\nChild chunks:\n");
        for (title, content) in &input.children {
            s.push_str(&format!("[{title}]\n{content}\n"));
        }
    }
    if !input.similar.is_empty() {
        s.push_str("\nChunks with similar summaries:\n");
        for (title, summary) in &input.similar {
            s.push_str(&format!("[{title}] {summary}\n"));
        }
    }
    s.push_str("\nExisting knowledge: ");
    if input.existing_names.is_empty() {
        s.push_str("none");
    } else {
        s.push_str(&input.existing_names.join(", "));
    }
    Prompt::new(DOC_PREAMBLE, s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractAnswer {
    pub redundant: bool,
    pub payloads: Vec<ChunkPayload>,
}

/// Parses a KEEP/REDUNDANT verdict followed by zero or more chunk objects
/// (separate objects or one JSON array). A response with no JSON at all
/// yields zero chunks; JSON that does not fit the chunk format is an error.
pub fn parse_extract_answer(text: &str) -> Result<ExtractAnswer, String> {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let redundant = first.trim_start().to_ascii_uppercase().starts_with("REDUNDANT");
    let Some(start) = text.find(['{', '[']) else {
        return Ok(ExtractAnswer {
            redundant,
            payloads: Vec::new(),
        });
    };
    let mut payloads = Vec::new();
    for value in serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>() {
        let value = value.map_err(|e| e.to_string())?;
        let items = match value {
            Value::Array(items) => items,
            other => vec![other],
        };
        for item in items {
            let p: ChunkPayload = serde_json::from_value(item).map_err(|e| e.to_string())?;
            if !p.is_well_formed() {
                return Err(format!("chunk {:?} has no name or no metrics", p.name));
            }
            payloads.push(p);
        }
    }
    Ok(ExtractAnswer { redundant, payloads })
}

pub fn name_expert(chunk_names: &[&str], chunk_contents: &str) -> Prompt {
    Prompt::new(
        ASSIGNER_PREAMBLE,
        format!(
            "{TASK_NAME_EXPERT}\nGive a short role name ending in \"Expert\" for a diagnosis expert owning this \
knowledge. Answer with the name only.\n\nKnowledge: {}\n{}",
            chunk_names.join(", "),
            chunk_contents
        ),
    )
}

/// First line of a naming answer, if it looks like a role name.
pub fn parse_expert_name(text: &str) -> Option<String> {
    let line = text.lines().map(str::trim).find(|l| !l.is_empty())?;
    let name = line.trim_matches(|c: char| c == '"' || c == '\'' || c == '.' || c == '*').trim();
    (!name.is_empty() && name.split_whitespace().count() <= 6).then(|| name.to_string())
}

/// Role, task and steps of an expert.
pub fn expert_template(name: &str, knowledge: &[&str], tools: &[&str]) -> String {
    format!(
        "Role: You are the {name} of a database diagnosis team.\n\
Task: Find the root causes of the reported anomaly and propose solutions, using your knowledge ({}) and tools ({}).\n\
Steps: 1. Check which metrics are abnormal. 2. Call tools or apply knowledge to narrow down the cause. \
3. State each root cause and its solution. 4. Share findings with the other experts.",
        if knowledge.is_empty() { "none".to_string() } else { knowledge.join(", ") },
        if tools.is_empty() { "none".to_string() } else { tools.join(", ") },
    )
}

/// Everything a node-level prompt may show the model.
pub struct StepContext<'a> {
    pub description: &'a str,
    pub abnormal_metrics: Vec<&'a str>,
    pub previous_actions: Vec<String>,
    pub inherited_reflections: Vec<&'a str>,
    pub findings: &'a [String],
    pub advice: &'a [String],
}

impl StepContext<'_> {
    fn render(&self, s: &mut String) {
        s.push_str(&format!("Anomaly: {}\n", self.description));
        s.push_str("Abnormal metrics: ");
        s.push_str(&join_or_none(&self.abnormal_metrics));
        s.push('\n');
        if !self.inherited_reflections.is_empty() {
            s.push_str("Reflections so far:\n");
            for r in &self.inherited_reflections {
                s.push_str(&format!("- {r}\n"));
            }
        }
        if !self.findings.is_empty() {
            s.push_str("Findings from other experts:\n");
            for f in self.findings {
                s.push_str(&format!("- {f}\n"));
            }
        }
        if !self.advice.is_empty() {
            s.push_str("Review advice:\n");
            for a in self.advice {
                s.push_str(&format!("- {a}\n"));
            }
        }
        s.push_str("Previous actions: ");
        s.push_str(&join_or_none(&self.previous_actions));
        s.push('\n');
    }
}

fn join_or_none<S: AsRef<str>>(items: &[S]) -> String {
    if items.is_empty() {
        "none".into()
    } else {
        items.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(", ")
    }
}

pub fn apply_knowledge(preamble: &str, ctx: &StepContext<'_>, chunk: &KnowledgeChunk) -> Prompt {
    let mut s = format!("{TASK_APPLY_KNOWLEDGE}\n");
    ctx.render(&mut s);
    s.push_str(&format!(
        "Current action: apply_knowledge:{}\nKnowledge: {}\nMetrics: {}\nSteps: {}\n\n\
Follow the steps against the anomaly and report your analysis. State any root cause as \"Root cause: <cause>\" \
and any fix as \"Solution: <fix>\".",
        chunk.name,
        chunk.content,
        chunk.metrics.join(", "),
        chunk.steps
    ));
    Prompt::new(preamble, s)
}

pub fn reflect(preamble: &str, ctx: &StepContext<'_>, action: &str, action_input: &str, observation: &str) -> Prompt {
    let mut s = format!("{TASK_REFLECT}\n");
    ctx.render(&mut s);
    s.push_str(&format!(
        "Current action: {action}\nAction input: {action_input}\nObservation: {observation}\n\n\
Reflect on this step. If it gives no useful information for the diagnosis, answer \"PRUNE: no useful information\". \
Otherwise state any root cause as \"Root cause: <cause>\" and any fix as \"Solution: <fix>\"."
    ));
    Prompt::new(preamble, s)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Reflection {
    pub text: String,
    pub prune: bool,
    pub causes: Vec<String>,
    pub solutions: Vec<String>,
}

static CAUSE_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?im)^\s*[-*]?\s*root cause\s*:\s*(.+?)\s*$").unwrap());
static SOLUTION_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?im)^\s*[-*]?\s*solution\s*:\s*(.+?)\s*$").unwrap());
static VOTE_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bvote\s*:\s*(?:\[?leaf\s*)?(\d+)").unwrap());
static LEAF_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^\W*(?:leaf\s*)?(\d+)\W*$").unwrap());

/// `Root cause:` lines; a trailing period is dropped.
pub fn parse_causes(text: &str) -> Vec<String> {
    CAUSE_RE
        .captures_iter(text)
        .map(|c| c[1].trim_end_matches('.').trim().to_string())
        .filter(|c| !c.is_empty())
        .collect()
}

pub fn parse_solutions(text: &str) -> Vec<String> {
    SOLUTION_RE
        .captures_iter(text)
        .map(|c| c[1].trim().to_string())
        .filter(|c| !c.is_empty())
        .collect()
}

pub fn parse_reflection(text: &str) -> Reflection {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("").trim();
    let prune = first.to_ascii_uppercase().starts_with("PRUNE")
        || text.to_ascii_lowercase().contains("no useful information");
    Reflection {
        text: text.trim().to_string(),
        prune,
        causes: if prune { Vec::new() } else { parse_causes(text) },
        solutions: if prune { Vec::new() } else { parse_solutions(text) },
    }
}

pub struct LeafView {
    pub id: NodeId,
    pub causes: Vec<String>,
    pub path: Vec<String>,
    pub observation: String,
}

pub fn vote(preamble: &str, evaluator: usize, n_evaluators: usize, scenario: &str, leaves: &[LeafView]) -> Prompt {
    let mut s = format!(
        "{TASK_VOTE}\nYou are evaluator {evaluator} of {n_evaluators}. Given the scenario and the historical \
actions below, vote for the most promising leaf. Answer \"Vote: <leaf id>\".\n\nScenario: {scenario}\n"
    );
    for leaf in leaves {
        s.push_str(&format!(
            "[Leaf {}] causes: {} | path: {} | observation: {}\n",
            leaf.id,
            join_or_none(&leaf.causes),
            leaf.path.join(" -> "),
            leaf.observation
        ));
    }
    Prompt::new(preamble, s)
}

/// The leaf an evaluator voted for; anything unparseable or not on the
/// ballot is an abstention.
pub fn parse_vote(text: &str, ballot: &BTreeSet<NodeId>) -> Option<NodeId> {
    let id = VOTE_RE
        .captures(text)
        .or_else(|| LEAF_RE.captures(text.trim()))
        .and_then(|c| c[1].parse::<NodeId>().ok())?;
    ballot.contains(&id).then_some(id)
}

pub fn summarize_record(preamble: &str, previous: &[String], record_json: &str) -> Prompt {
    let prev = if previous.is_empty() {
        "(empty)".to_string()
    } else {
        previous.join("\n")
    };
    Prompt::new(
        preamble,
        format!(
            "{TASK_SUMMARIZE_RECORD}\nIncorporate the main idea of the new record into the running summary. \
Answer with the full updated summary, one line per point starting with \"- \".\n\nRunning summary:\n{prev}\n\nNew record:\n{record_json}"
        ),
    )
}

/// Summary lines from an answer; `None` when nothing usable came back.
pub fn parse_summary_lines(text: &str) -> Option<Vec<String>> {
    let lines: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| if l.starts_with("- ") { l.to_string() } else { format!("- {}", l.trim_start_matches(['-', '*']).trim()) })
        .collect();
    (!lines.is_empty()).then_some(lines)
}

pub fn assign_experts(description: &str, experts: &[(&str, &str)]) -> Prompt {
    let mut s = format!(
        "{TASK_ASSIGN}\nSelect the experts most relevant to the anomaly below. Answer with their names, comma separated.\n\nAnomaly: {description}\nExperts:\n"
    );
    for (name, template) in experts {
        let role = template.lines().next().unwrap_or_default();
        s.push_str(&format!("- {name}: {role}\n"));
    }
    Prompt::new(ASSIGNER_PREAMBLE, s)
}

pub fn review(preamble: &str, target: &str, summary: &[String], causes: &[String]) -> Prompt {
    Prompt::new(
        preamble,
        format!(
            "{TASK_REVIEW}\nDiagnosis results of {target}:\n{}\nRoot causes: {}\n\n{P_REVIEW}",
            if summary.is_empty() { "(no summary)".to_string() } else { summary.join("\n") },
            join_or_none(causes)
        ),
    )
}
