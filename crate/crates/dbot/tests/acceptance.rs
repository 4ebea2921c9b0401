//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Every expected value is produced by an oracle written here, independently
//! of the library code under test.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use dbot::anomaly::{self, AlertFile};
use dbot::bus::Bus;
use dbot::collab::{self, CollabConfig, CollabInputs};
use dbot::gateway::{Gateway, ScriptedRule};
use dbot::io;
use dbot::knowledge::KnowledgeBase;
use dbot::pipeline::{self, RunConfig};
use dbot::search::SearchConfig;
use dbot::toolkit::{CallStatus, ScriptedCall, ScriptedExecutor, ToolIndex, ToolRegistry};
use dbot_core::accuracy::{self, AccParams, ROOT_CAUSE_VOCABULARY};
use dbot_core::bm25::{self, Bm25Params, CorpusStats};
use dbot_core::bm25::score_metrics;
use dbot_core::cluster::{dbscan, NOISE};
use dbot_core::knowledge::{KeptBy, KnowledgeChunk};
use dbot_core::ks::ks_statistic;
use dbot_core::matcher::{self, Example};
use dbot_core::metrics::{AbnormalQuery, TimeWindow};
use dbot_core::pca::pca_project;
use dbot_core::tools::{ArgSpec, ToolSpec};
use dbot_core::tree::{uct, Action, DiagnosisTree, NodeId};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn idf_oracle(n: usize, containing: usize) -> f64 {
    let (n, c) = (n as f64, containing as f64);
    ((n - c + 0.5) / (c + 0.5) + 1.0).ln()
}

// 1
fn bm25_algebra() -> Outcome {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let params = Bm25Params::default();
    for _ in 0..200 {
        let n_chunks = rng.gen_range(1..=100);
        let vocab: Vec<String> = (0..rng.gen_range(4..30)).map(|i| format!("m{i}")).collect();
        // equal lengths and distinct metrics give f = 1 and |D| = avgDL for every chunk
        let len = rng.gen_range(1..=vocab.len().min(6));
        let lists: Vec<Vec<String>> = (0..n_chunks)
            .map(|_| vocab.choose_multiple(&mut rng, len).cloned().collect())
            .collect();
        let stats = CorpusStats::from_metric_lists(lists.iter().map(Vec::as_slice), params).map_err(|e| e.to_string())?;
        for list in lists.iter().take(10) {
            for term in list {
                let containing = lists.iter().filter(|l| l.contains(term)).count();
                let want = idf_oracle(n_chunks, containing);
                let got = score_metrics(list, [term], &stats);
                check!((got - want).abs() < 1e-9, "f=1, |D|=avgDL: score {got} != idf {want}");
            }
        }

        // additivity over a disjoint split, on ragged lists with repeats
        let ragged: Vec<Vec<String>> = (0..n_chunks)
            .map(|_| (0..rng.gen_range(1..8)).map(|_| vocab.choose(&mut rng).unwrap().clone()).collect())
            .collect();
        let stats = CorpusStats::from_metric_lists(ragged.iter().map(Vec::as_slice), params).map_err(|e| e.to_string())?;
        let q_len = rng.gen_range(1..vocab.len());
        let mut query: Vec<String> = vocab.choose_multiple(&mut rng, q_len).cloned().collect();
        query.shuffle(&mut rng);
        let cut = rng.gen_range(0..=query.len());
        let (q1, q2) = query.split_at(cut);
        for doc in ragged.iter().take(10) {
            let whole = score_metrics(doc, &query, &stats);
            let parts = score_metrics(doc, q1, &stats) + score_metrics(doc, q2, &stats);
            check!((whole - parts).abs() < 1e-9, "additivity: {whole} != {parts}");
        }
    }
    let elapsed = started.elapsed();
    check!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(())
}

// 2
fn idf_hand_values() -> Outcome {
    // ln(7.5/3.5 + 1), ln(0.5/1.5 + 1), ln(10.5/0.5 + 1) = ln 22, worked by hand
    for (n, c, want) in [(10, 3, 1.1451), (1, 1, 0.2877), (10, 0, 22f64.ln())] {
        let got = bm25::idf(n, c);
        check!((got - want).abs() < 1e-4, "idf(N={n}, n={c}) = {got}, want {want}");
    }
    Ok(())
}

/// Straight-line accuracy: dedup, cap at 4, then the piecewise formula.
fn acc_oracle(predicted: &[String], labels: &[String]) -> f64 {
    let mut kept: Vec<&String> = Vec::new();
    for p in predicted {
        if !kept.contains(&p) {
            kept.push(p);
        }
    }
    kept.truncate(4);
    let truth: BTreeSet<&String> = labels.iter().collect();
    let a_c = kept.iter().filter(|p| truth.contains(*p)).count() as f64;
    let a_w = kept.len() as f64 - a_c;
    let a_a = truth.len() as f64;
    if a_a > 0.0 && a_c >= 0.1 * a_w {
        (a_c - 0.1 * a_w) / a_a
    } else {
        0.0
    }
}

// 3
fn acc_formula() -> Outcome {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let params = AccParams::default();
    for (p, l, want) in [
        (s(&["x", "y"]), s(&["x", "y"]), 1.0),
        (s(&["x", "y", "z"]), s(&["x", "y"]), 0.95),
        (s(&["z"]), s(&["x"]), 0.0),
    ] {
        let got = accuracy::accuracy(&p, &l, params).map_err(|e| e.to_string())?.acc;
        check!((got - want).abs() < 1e-12, "worked case {p:?} vs {l:?}: {got} != {want}");
    }
    let mut rng = StdRng::seed_from_u64(3);
    let pool: Vec<String> = ROOT_CAUSE_VOCABULARY.iter().map(|v| v.to_string()).collect();
    for i in 0..1000 {
        let labels: Vec<String> = (0..rng.gen_range(1..=4)).map(|_| pool.choose(&mut rng).unwrap().clone()).collect();
        let predicted: Vec<String> = (0..rng.gen_range(0..=8)).map(|_| pool.choose(&mut rng).unwrap().clone()).collect();
        let got = accuracy::accuracy(&predicted, &labels, params).map_err(|e| e.to_string())?.acc;
        let want = acc_oracle(&predicted, &labels);
        check!(got == want, "draw {i}: {predicted:?} vs {labels:?}: {got} != {want}");
    }
    Ok(())
}

fn uct_oracle(wins: f64, visits: u64, parent: u64, c: f64) -> f64 {
    if visits == 0 {
        f64::INFINITY
    } else if parent == 0 {
        wins / visits as f64
    } else {
        wins / visits as f64 + c * (2.0 * (parent as f64).ln() / visits as f64).sqrt()
    }
}

/// Whether the subtree under `id` still holds a node worth selecting.
fn has_target(tree: &DiagnosisTree, id: NodeId) -> bool {
    let n = &tree.nodes()[id];
    if n.pruned {
        return false;
    }
    let pending = !n.executed || (!n.expanded && n.found_causes.is_empty());
    pending || n.children.iter().any(|&c| has_target(tree, c))
}

fn select_oracle(tree: &DiagnosisTree, c: f64) -> Option<NodeId> {
    if !has_target(tree, 0) {
        return None;
    }
    let mut cur = 0;
    loop {
        let n = &tree.nodes()[cur];
        if !n.executed || (!n.expanded && n.found_causes.is_empty()) {
            return Some(cur);
        }
        let mut scored: Vec<(f64, NodeId)> = n
            .children
            .iter()
            .filter(|&&ch| has_target(tree, ch))
            .map(|&ch| {
                let x = &tree.nodes()[ch];
                (uct_oracle(x.wins, x.visits, n.visits, c), ch)
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        cur = scored.first()?.1;
    }
}

fn random_tree(rng: &mut StdRng) -> DiagnosisTree {
    let mut tree = DiagnosisTree::new("anomaly");
    let size = rng.gen_range(1..=100);
    for i in 1..size {
        let parent = rng.gen_range(0..i);
        tree.add_child(parent, Action::KnowledgeApply { chunk_name: format!("k{i}") }).unwrap();
    }
    for id in 0..size {
        let has_children = !tree.nodes()[id].children.is_empty();
        let n = tree.node_mut(id).unwrap();
        // coarse values so that UCT ties happen
        n.visits = rng.gen_range(0..6);
        n.wins = rng.gen_range(0..=n.visits * 2) as f64;
        n.pruned = id != 0 && rng.gen_bool(0.15);
        n.executed = id == 0 || has_children || rng.gen_bool(0.6);
        n.expanded = has_children || (n.executed && rng.gen_bool(0.3));
        if rng.gen_bool(0.1) {
            n.found_causes = vec!["poor join".into()];
        }
    }
    tree
}

// 4
fn uct_select() -> Outcome {
    let v = uct(3.0, 4, 10, 1.4);
    // 0.75 + 1.4 sqrt(2 ln 10 / 4)
    check!((v - 2.2522).abs() < 1e-3, "uct(3, 4, 10, 1.4) = {v}");
    let mut rng = StdRng::seed_from_u64(4);
    for i in 0..200 {
        let tree = random_tree(&mut rng);
        let c = [0.0, 1.4, rng.gen_range(0.0..3.0)][i % 3];
        let got = tree.select(c).ok();
        let want = select_oracle(&tree, c);
        check!(got == want, "tree {i} ({} nodes, c={c}): select {got:?}, oracle {want:?}", tree.len());
    }
    Ok(())
}

fn chunk(name: &str, metrics: &[&str], content: &str) -> KnowledgeChunk {
    KnowledgeChunk {
        name: name.into(),
        content: content.into(),
        metrics: metrics.iter().map(|m| m.to_string()).collect(),
        steps: "check the metric".into(),
        source_block: None,
        kept_by: KeptBy::Manual,
    }
}

struct RandomScenario {
    rules: Vec<ScriptedRule>,
    registry: ToolRegistry,
    executor: ScriptedExecutor,
    knowledge: KnowledgeBase,
    config: CollabConfig,
}

fn random_scenario(rng: &mut StdRng) -> RandomScenario {
    let words = ["cpu", "memory", "lock", "index", "query", "disk", "network", "vacuum", "join", "commit"];
    let n_tools = rng.gen_range(2..=6);
    let apis: Vec<String> = (0..n_tools).map(|i| format!("api_{i}")).collect();
    let mut registry = ToolRegistry::default();
    for api in &apis {
        let w: Vec<&str> = words.choose_multiple(rng, 3).copied().collect();
        registry
            .register(ToolSpec {
                category: "diagnosis".into(),
                tool: "generated".into(),
                api_name: api.clone(),
                description: format!("inspect {} {} and {} statistics", w[0], w[1], w[2]),
                arg_schema: vec![
                    ArgSpec { name: "start_time".into(), semantic_type: "start_time".into(), required: true },
                    ArgSpec { name: "end_time".into(), semantic_type: "end_time".into(), required: true },
                ],
            })
            .unwrap();
    }
    let executor = ScriptedExecutor::new(
        apis.iter()
            .map(|api| ScriptedCall {
                api: api.clone(),
                args: None,
                observation: format!("{api} saw {}", words.choose(rng).unwrap()),
                status: if rng.gen_bool(0.15) { CallStatus::Failed } else { CallStatus::Ok },
            })
            .collect(),
    );
    let knowledge = KnowledgeBase::new(
        (0..rng.gen_range(0..3))
            .map(|i| chunk(&format!("chunk_{i}"), &["cpu_usage"], "cpu heavy statements"))
            .collect(),
        Bm25Params::default(),
    )
    .unwrap();

    let mut rules = Vec::new();
    if rng.gen_bool(0.5) {
        rules.push(ScriptedRule::new(r"re:(?s)### Task: vote.*\[Leaf (\d+)\] causes: [a-z]", "Vote: $1").unwrap());
    }
    let prevs: Vec<String> = std::iter::once("none".to_string()).chain(apis.iter().cloned()).collect();
    for prev in &prevs {
        for api in apis.iter().filter(|a| *a != prev) {
            let answer = match rng.gen_range(0..4) {
                0 => "keep looking".to_string(),
                1 => "PRUNE: no useful information".to_string(),
                2 => format!(
                    "Root cause: {}\nSolution: fix it",
                    ROOT_CAUSE_VOCABULARY.choose(rng).unwrap().replace('_', " ")
                ),
                _ => continue,
            };
            rules.push(ScriptedRule::new(&format!("Previous actions: {prev}\nCurrent action: {api}"), &answer).unwrap());
        }
    }
    let apply = if rng.gen_bool(0.5) { "Root cause: poor join" } else { "nothing relevant" };
    rules.push(ScriptedRule::new("### Task: apply knowledge", apply).unwrap());
    if rng.gen_bool(0.5) {
        rules.push(ScriptedRule::new("### Task: summarize record", "- progress noted").unwrap());
    }
    rules.push(if rng.gen_bool(0.5) {
        ScriptedRule::new(r"re:(?s)### Task: vote.*\[Leaf (\d+)\]", "Vote: $1").unwrap()
    } else {
        ScriptedRule::new("### Task: vote", "abstain").unwrap()
    });
    let fallback = if rng.gen_bool(0.5) { "PRUNE: no useful information" } else { "keep looking" };
    rules.push(ScriptedRule::new("### Task: reflect", fallback).unwrap());

    let config = CollabConfig {
        search: SearchConfig {
            max_turns: rng.gen_range(1..=20),
            vote_every: rng.gen_range(1..=5),
            max_depth: rng.gen_range(2..=8),
            c: rng.gen_range(0.0..2.0),
            ..SearchConfig::default()
        },
        ..CollabConfig::default()
    };
    RandomScenario {
        rules,
        registry,
        executor,
        knowledge,
        config,
    }
}

/// Transcript JSONL, report markdown and bus log of one run.
fn run_scenario(s: &RandomScenario, seed: u64) -> Result<(usize, String), String> {
    let gateway = Gateway::scripted(s.rules.clone(), seed);
    let alert = AlertFile {
        start_time: 1_684_600_070,
        end_time: 1_684_600_130,
        alerts: vec![],
    };
    let window = TimeWindow::new(alert.start_time, alert.end_time).unwrap();
    let profile = anomaly::profile(&alert, AbnormalQuery::new(["cpu_usage"], window));
    let expert = collab::general_expert(&s.knowledge, &s.registry);
    let args = BTreeMap::new();
    let result = collab::run_collaboration(
        CollabInputs {
            gateway: &gateway,
            knowledge: &s.knowledge,
            registry: &s.registry,
            executor: &s.executor,
            profile: &profile,
            args: &args,
            relevance: None,
        },
        &[expert],
        &s.config,
    )
    .map_err(|e| e.to_string())?;
    let transcript = &result.experts[0].outcome.transcript;
    let bytes = format!(
        "{}\n{}\n{}",
        io::to_jsonl(transcript),
        result.report.to_markdown(),
        io::to_jsonl(&result.bus_log)
    );
    Ok((transcript.len(), bytes))
}

// 5
fn termination_and_determinism() -> Outcome {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(5);
    for i in 0..50 {
        let s = random_scenario(&mut rng);
        let seed = rng.gen();
        let (turns, a) = run_scenario(&s, seed)?;
        let (_, b) = run_scenario(&s, seed)?;
        check!(turns <= s.config.search.max_turns, "fixture {i}: {turns} turns > {}", s.config.search.max_turns);
        check!(a == b, "fixture {i}: runs differ");
    }
    let elapsed = started.elapsed();
    check!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(())
}

fn fixture_run(case: &str, with_experts: bool) -> RunConfig {
    let f = fixtures().join(case);
    RunConfig {
        metrics: Some(f.join("metrics.jsonl")),
        rules: Some(f.join("rules.json")),
        executor: Some(f.join("executor.json")),
        alert: Some(f.join("alert.json")),
        experts: with_experts.then(|| f.join("experts.json")),
        seed: Some(42),
        ..RunConfig::new(f.join("knowledge.json"), f.join("tools.json"))
    }
}

// 6
fn single_cause_end_to_end() -> Outcome {
    let out = pipeline::diagnose(&fixture_run("single_cause", false)).map_err(|e| e.to_string())?;
    check!(out.report.root_causes == ["large data fetch"], "root causes {:?}", out.report.root_causes);
    let turns = out.experts[0].outcome.transcript.len();
    check!(turns <= 20, "{turns} turns");
    Ok(())
}

// 7
fn multi_cause_union() -> Outcome {
    let team = pipeline::diagnose(&fixture_run("multi_cause", true)).map_err(|e| e.to_string())?;
    let found: BTreeSet<&str> = team.report.root_causes.iter().map(String::as_str).collect();
    check!(
        found == BTreeSet::from(["large data fetch", "redundant indexes"]),
        "collaborative causes {found:?}"
    );
    let solo = pipeline::diagnose(&fixture_run("multi_cause", false)).map_err(|e| e.to_string())?;
    check!(solo.report.root_causes.len() <= 1, "single expert causes {:?}", solo.report.root_causes);
    Ok(())
}

fn random_examples(rng: &mut StdRng, n: usize, dim: usize) -> Vec<Example> {
    (0..n)
        .map(|_| {
            let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let t: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            Example::new(&c, &t, rng.gen_bool(0.5))
        })
        .collect()
}

// 8
fn gradient_check() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let dim = 6;
    let examples = random_examples(&mut rng, 30, dim);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let w: Vec<f64> = (0..2 * dim + 1).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let analytic = matcher::gradient(&w, &examples);
        for i in 0..w.len() {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[i] += h;
            down[i] -= h;
            let numeric = (matcher::loss(&up, &examples) - matcher::loss(&down, &examples)) / (2.0 * h);
            let rel = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    check!(worst < 1e-4, "max relative error {worst:e}");

    // separable: label is the sign of the first context feature
    let separable: Vec<Example> = (0..40)
        .map(|i| {
            let x = if i % 2 == 0 { rng.gen_range(0.2..1.0) } else { rng.gen_range(-1.0..-0.2) };
            let mut c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.1..0.1)).collect();
            c[0] = x;
            let t: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.1..0.1)).collect();
            Example::new(&c, &t, x > 0.0)
        })
        .collect();
    let report = matcher::train(&separable, dim, 300, 0.01).map_err(|e| e.to_string())?;
    for (i, pair) in report.losses.windows(2).enumerate() {
        check!(pair[1] <= pair[0], "loss rose at epoch {}: {} -> {}", i + 1, pair[0], pair[1]);
    }
    check!(report.final_loss() < report.initial_loss(), "loss did not fall");
    Ok(())
}

fn dbscan_oracle(points: &[Vec<f64>], eps: f64, min_pts: usize) -> Vec<i64> {
    let n = points.len();
    let close = |i: usize, j: usize| {
        points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() <= eps
    };
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| close(i, j)).count() >= min_pts).collect();
    // density-connected components of core points, numbered by lowest member
    let mut comp = vec![usize::MAX; n];
    for i in 0..n {
        if core[i] {
            comp[i] = i;
        }
    }
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if core[i] && core[j] && close(i, j) && comp[j] < comp[i] {
                    comp[i] = comp[j];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut ids: Vec<usize> = comp.iter().copied().filter(|&c| c != usize::MAX).collect();
    ids.sort_unstable();
    ids.dedup();
    let label_of = |c: usize| ids.iter().position(|&x| x == c).unwrap() as i64;
    (0..n)
        .map(|i| {
            if core[i] {
                label_of(comp[i])
            } else {
                // a border point joins the earliest cluster among its core neighbours
                (0..n)
                    .filter(|&j| core[j] && close(i, j))
                    .map(|j| label_of(comp[j]))
                    .min()
                    .unwrap_or(NOISE)
            }
        })
        .collect()
}

// 9
fn dbscan_pca_oracles() -> Outcome {
    let mut rng = StdRng::seed_from_u64(9);
    for i in 0..100 {
        let n = rng.gen_range(1..=50);
        let centres: Vec<[f64; 2]> = (0..rng.gen_range(1..5)).map(|_| [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)]).collect();
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let c = centres.choose(&mut rng).unwrap();
                vec![c[0] + rng.gen_range(-1.0..1.0), c[1] + rng.gen_range(-1.0..1.0)]
            })
            .collect();
        let eps = rng.gen_range(0.2..1.5);
        let min_pts = rng.gen_range(1..6);
        let got = dbscan(&points, eps, min_pts).map_err(|e| e.to_string())?;
        let want = dbscan_oracle(&points, eps, min_pts);
        check!(got == want, "instance {i} (n={n}, eps={eps}, min_pts={min_pts}): {got:?} != {want:?}");
    }

    // rank-3 data in 12 dimensions
    let d = 12;
    let basis: Vec<Vec<f64>> = (0..3).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let data: Vec<Vec<f64>> = (0..40)
        .map(|_| {
            let z: Vec<f64> = (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect();
            (0..d).map(|j| (0..3).map(|k| z[k] * basis[k][j]).sum::<f64>() + 3.0).collect()
        })
        .collect();
    let p = pca_project(&data, 3).map_err(|e| e.to_string())?;
    check!((p.retained_variance_ratio - 1.0).abs() < 1e-6, "retained ratio {}", p.retained_variance_ratio);

    // explained variance shares against a dense eigen-decomposition of the covariance
    let m = nalgebra::DMatrix::from_fn(data.len(), d, |r, c| data[r][c]);
    let mean = m.row_mean();
    let centred = nalgebra::DMatrix::from_fn(data.len(), d, |r, c| m[(r, c)] - mean[c]);
    let cov = centred.transpose() * &centred;
    let mut eig: Vec<f64> = cov.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    let top: f64 = eig[..3].iter().sum();
    let ours: f64 = p.explained_variance.iter().sum();
    for (k, (v, e)) in p.explained_variance.iter().zip(&eig).enumerate() {
        let (a, b) = (v / ours, e / top);
        check!((a - b).abs() < 1e-6, "component {k}: share {a} vs {b}");
    }
    Ok(())
}

fn ks_oracle(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
    a.iter().chain(b).map(|&x| (cdf(a, x) - cdf(b, x)).abs()).fold(0.0, f64::max)
}

// 10
fn ks_test() -> Outcome {
    let ks = |a: &[f64], b: &[f64]| ks_statistic(a, b).map_err(|e| e.to_string());
    check!(ks(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0])? == 0.0, "identical samples");
    check!(ks(&[1.0, 2.0], &[5.0, 6.0, 7.0])? == 1.0, "disjoint samples");
    check!((ks(&[1.0, 2.0], &[1.0, 3.0])? - 0.5).abs() < 1e-12, "{{1,2}} vs {{1,3}}");
    let mut rng = StdRng::seed_from_u64(10);
    for i in 0..100 {
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(0..20) as f64 / 2.0).collect() };
        let a = draw(1 + i % 17);
        let b = draw(1 + (i * 7) % 23);
        let (ab, ba) = (ks(&a, &b)?, ks(&b, &a)?);
        check!(ab == ba, "pair {i}: D(a,b)={ab} D(b,a)={ba}");
        let want = ks_oracle(&a, &b);
        check!((ab - want).abs() < 1e-12, "pair {i}: D={ab}, oracle {want}");
    }
    Ok(())
}

// 11
fn bus_contract() -> Outcome {
    const PUBLISHERS: usize = 4;
    const PER: u64 = 100;
    let bus = Arc::new(Bus::new());
    let subs: Vec<_> = (0..3)
        .map(|i| bus.subscribe(&format!("sub{i}"), &["findings"]).unwrap())
        .collect();
    let readers: Vec<_> = subs
        .into_iter()
        .map(|s| {
            thread::spawn(move || {
                let mut got = Vec::new();
                while got.len() < PUBLISHERS * PER as usize {
                    match s.recv_timeout(Duration::from_secs(5)) {
                        Some(m) => got.push(m),
                        None => break,
                    }
                }
                got
            })
        })
        .collect();
    let writers: Vec<_> = (0..PUBLISHERS)
        .map(|p| {
            let bus = Arc::clone(&bus);
            thread::spawn(move || {
                for i in 0..PER {
                    bus.publish(&format!("pub{p}"), "findings", format!("{p}:{i}"), i).unwrap();
                }
            })
        })
        .collect();
    for w in writers {
        w.join().map_err(|_| "publisher panicked".to_string())?;
    }
    for (r, reader) in readers.into_iter().enumerate() {
        let got = reader.join().map_err(|_| "subscriber panicked".to_string())?;
        check!(got.len() == PUBLISHERS * PER as usize, "subscriber {r} got {} messages", got.len());
        let mut seen = BTreeSet::new();
        let mut last: BTreeMap<String, u64> = BTreeMap::new();
        for m in &got {
            check!(seen.insert((m.publisher.clone(), m.seq)), "subscriber {r}: duplicate {m:?}");
            let idx: u64 = m.payload.split(':').nth(1).unwrap().parse().unwrap();
            check!(idx == m.seq, "subscriber {r}: seq {} carries payload {idx}", m.seq);
            if let Some(prev) = last.insert(m.publisher.clone(), m.seq) {
                check!(m.seq == prev + 1, "subscriber {r}: {} out of order ({prev} then {})", m.publisher, m.seq);
            }
        }
        check!(
            last.values().all(|&s| s == PER - 1) && last.len() == PUBLISHERS,
            "subscriber {r}: missing tail {last:?}"
        );
    }
    Ok(())
}

// 12
fn match_tools_exhaustive() -> Outcome {
    let mut rng = StdRng::seed_from_u64(12);
    let words = [
        "cpu", "memory", "lock", "wait", "index", "query", "slow", "disk", "io", "network", "vacuum", "bloat", "join",
        "commit", "insert", "delete", "update", "scan", "cache", "buffer",
    ];
    let gateway = Gateway::scripted(vec![], 12);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for round in 0..100 {
        let n = rng.gen_range(1..=50);
        let mut registry = ToolRegistry::default();
        let mut descriptions: Vec<String> = Vec::new();
        for i in 0..n {
            // repeat descriptions now and then to exercise the tie rule
            let desc = if !descriptions.is_empty() && rng.gen_bool(0.15) {
                descriptions.choose(&mut rng).unwrap().clone()
            } else {
                let len = rng.gen_range(2..6);
                words.choose_multiple(&mut rng, len).copied().collect::<Vec<_>>().join(" ")
            };
            descriptions.push(desc.clone());
            registry
                .register(ToolSpec {
                    category: "c".into(),
                    tool: "t".into(),
                    api_name: format!("api_{:02}", (i * 37) % 100),
                    description: desc,
                    arg_schema: vec![],
                })
                .map_err(|e| e.to_string())?;
        }
        let index = ToolIndex::build(&gateway, registry.clone()).map_err(|e| e.to_string())?;
        let len = rng.gen_range(1..6);
        let context = words.choose_multiple(&mut rng, len).copied().collect::<Vec<_>>().join(" ");
        let k = rng.gen_range(1..=n.min(10));
        let got: Vec<String> = index
            .match_tools(&gateway, &context, k)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|(t, _)| t.api_name)
            .collect();

        let c = gateway.embed(&context).map_err(|e| e.to_string())?;
        let mut all: Vec<(f64, String)> = registry
            .tools()
            .iter()
            .map(|t| {
                let e = gateway.embed(&t.description).unwrap();
                let dot: f64 = c.iter().zip(&e).map(|(a, b)| a * b).sum();
                (dot / (norm(&c) * norm(&e)), t.api_name.clone())
            })
            .collect();
        all.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        let want: Vec<String> = all.into_iter().take(k).map(|(_, a)| a).collect();
        check!(got == want, "round {round} (n={n}, k={k}): {got:?} != {want:?}");
    }
    Ok(())
}

fn panic_message(e: Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "panic".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("BM25 algebra", bm25_algebra),
        ("IDF hand values", idf_hand_values),
        ("Acc formula", acc_formula),
        ("UCT value and selection", uct_select),
        ("termination and determinism", termination_and_determinism),
        ("single-cause end to end", single_cause_end_to_end),
        ("multi-cause union", multi_cause_union),
        ("gradient check and monotone loss", gradient_check),
        ("DBSCAN and PCA oracles", dbscan_pca_oracles),
        ("KS statistic", ks_test),
        ("bus contract", bus_contract),
        ("match_tools vs exhaustive top-k", match_tools_exhaustive),
    ];
    let started = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| Err(panic_message(e)));
        let ms = t.elapsed().as_millis();
        match result {
            Ok(()) => println!("PASS {:>2} {name} ({ms} ms)", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({ms} ms): {msg}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed in {:.2} s",
        criteria.len() - failed,
        criteria.len(),
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
