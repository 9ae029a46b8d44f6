//! Subcommand implementations. Each returns `Ok(false)` for a domain
//! failure that is not an error, such as a plan that fails verification.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use protodsl::designer::{
    run_designer, DesignOptions, DesignerStrategy, LmClient, MockLmClient, RecordingLmClient, ScriptedLmClient,
};
use protodsl::ingest::{build_corpus, IngestOptions, RuleBasedClient};
use protodsl::metrics::{evaluate_pair_with, MetricVector, TfIdfVectorizer};
use protodsl::pipeline::{build_artifact_with, trace_csv, FitView};
use protodsl::product::DEFAULT_PROPERTY_SUPPORT;
use protodsl::store::{
    load_artifact, load_corpus, load_json, load_plan, read_protocols, save_artifact, save_corpus, save_json, save_plan,
    write_atomic,
};
use protodsl::verify::{reciprocative_verify_with, verify_operation_flow, VerificationReport, VerifyOptions};
use protodsl::{DesignTask, DslArtifact, PlanProgram, TaskKind};
use serde::Deserialize;
use serde_json::json;

use crate::config::Config;
use crate::{Cli, Command, Global};

pub fn run(cli: &Cli) -> Result<bool> {
    let mut config = Config::load(cli.global.config.as_deref())?;
    if let Some(seed) = cli.global.seed {
        config.hyper.seed = seed;
    }
    let g = &cli.global;
    match &cli.command {
        Command::Ingest { input, out } => ingest(g, &config, input, out),
        Command::Fit { corpus, view, out, trace } => fit(g, &config, corpus, *view, out, trace.as_deref()),
        Command::Verify { plan, artifact, reagents, out } => verify(g, &config, plan, artifact, reagents, out.as_deref()),
        Command::Design { strategy, task, artifact, corpus, out, report, target } => {
            let paths = DesignPaths { task, artifact, corpus, out, report: report.as_deref() };
            design(g, &config, *strategy, &paths, target.clone())
        }
        Command::Evaluate { plan, truth, out, task } => evaluate(g, &config, plan, truth, out, task.as_deref()),
        Command::Stats { artifact } => stats(g, artifact),
    }
}

fn emit(g: &Global, value: serde_json::Value, human: impl FnOnce() -> String) {
    if g.json {
        println!("{}", serde_json::to_string_pretty(&value).expect("json values always serialize"));
    } else {
        print!("{}", human());
    }
}

fn ingest(g: &Global, config: &Config, input: &Path, out: &Path) -> Result<bool> {
    let docs = read_protocols(input)?;
    let mut options = IngestOptions::default();
    if let Some(t) = config.synonym_threshold {
        options.synonym_threshold = t;
    }
    let corpus = build_corpus(docs, &RuleBasedClient::default(), &options)?;
    save_corpus(&corpus, &out.join("corpus.json"))?;
    save_json(&corpus.actions, &out.join("corpus.actions.json"))?;
    save_json(&corpus.flows, &out.join("corpus.flows.json"))?;
    save_json(&corpus.device_alias_map, &out.join("device_aliases.json"))?;
    let summary = json!({
        "domain": corpus.domain,
        "docs": corpus.docs.len(),
        "actions": corpus.actions.len(),
        "flows": corpus.flows.len(),
        "errors": corpus.errors.len(),
    });
    emit(g, summary, || {
        format!(
            "docs: {}\nactions: {}\nflows: {}\nerrors: {}\n",
            corpus.docs.len(),
            corpus.actions.len(),
            corpus.flows.len(),
            corpus.errors.len()
        )
    });
    Ok(true)
}

fn fit(g: &Global, config: &Config, corpus: &Path, view: FitView, out: &Path, trace: Option<&Path>) -> Result<bool> {
    let corpus = load_corpus(corpus)?;
    config.hyper.validate()?;
    let support = config.property_support.unwrap_or(DEFAULT_PROPERTY_SUPPORT);
    let build = build_artifact_with(&corpus, &config.hyper, view, support)?;
    save_artifact(&build.artifact, out)?;
    let trace_path = trace.map(Path::to_path_buf).unwrap_or_else(|| sibling(out, "fit_trace.csv"));
    write_atomic(&trace_path, trace_csv(&build.trace).as_bytes())?;
    let a = &build.artifact;
    emit(g, stats_json(a), || stats_text(a));
    Ok(true)
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().map_or_else(|| PathBuf::from(name), |p| p.join(name))
}

/// A reagents file is either a JSON array of names or a whole task.
#[derive(Deserialize)]
#[serde(untagged)]
enum ReagentsFile {
    Names(BTreeSet<String>),
    Task(Box<DesignTask>),
}

fn load_reagents(path: &Path, artifact: &DslArtifact) -> Result<DesignTask> {
    Ok(match load_json::<ReagentsFile>(path)? {
        ReagentsFile::Task(task) => *task,
        ReagentsFile::Names(reagents) => DesignTask {
            kind: TaskKind::Planning,
            title: String::new(),
            objective: String::new(),
            reagents,
            domain: artifact.domain.clone(),
            base_protocol: None,
        },
    })
}

fn check(plan: &PlanProgram, task: &DesignTask, artifact: &DslArtifact, config: &Config) -> Result<VerificationReport> {
    let options = VerifyOptions::default();
    if plan.is_dual() {
        let rounds = config.max_rounds.unwrap_or(protodsl::designer::DEFAULT_MAX_ROUNDS);
        Ok(reciprocative_verify_with(plan, task, artifact, rounds, &options)?)
    } else {
        Ok(verify_operation_flow(plan, task, artifact, &options))
    }
}

fn verify(g: &Global, config: &Config, plan: &Path, artifact: &Path, reagents: &Path, out: Option<&Path>) -> Result<bool> {
    let artifact = load_artifact(artifact)?;
    let (plan, warnings) = load_plan(plan)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let task = load_reagents(reagents, &artifact)?;
    let report = check(&plan, &task, &artifact, config)?;
    if let Some(out) = out {
        save_json(&report, out)?;
    }
    emit(g, serde_json::to_value(&report)?, || report_text(&report));
    Ok(report.pass)
}

fn report_text(report: &VerificationReport) -> String {
    let mut s = format!("pass: {}\nrounds: {}\n", report.pass, report.rounds);
    for f in &report.findings {
        s.push_str(&format!("{:?}: {}\n", f.kind, f.message));
    }
    for f in &report.warnings {
        s.push_str(&format!("warning: {:?}: {}\n", f.kind, f.message));
    }
    s
}

struct DesignPaths<'a> {
    task: &'a Path,
    artifact: &'a Path,
    corpus: &'a Path,
    out: &'a Path,
    report: Option<&'a Path>,
}

fn lm_client(g: &Global) -> Result<Box<dyn LmClient>> {
    if let Some(dir) = &g.mock_lm {
        return Ok(Box::new(MockLmClient::from_dir(dir)?));
    }
    if let Some(file) = &g.script_lm {
        let responses: Vec<String> = load_json(file)?;
        return Ok(Box::new(ScriptedLmClient::new(responses)));
    }
    bail!("no language model configured; pass --mock-lm or --script-lm")
}

fn design(g: &Global, config: &Config, strategy: DesignerStrategy, p: &DesignPaths<'_>, target: Option<String>) -> Result<bool> {
    let task: DesignTask = load_json(p.task)?;
    task.validate()?;
    let artifact = load_artifact(p.artifact)?;
    let corpus = load_corpus(p.corpus)?;
    let defaults = DesignOptions::default();
    let options = DesignOptions {
        seed: config.hyper.seed,
        k: config.k.unwrap_or(defaults.k),
        max_iters: config.max_iters.unwrap_or(defaults.max_iters),
        max_rounds: config.max_rounds.unwrap_or(defaults.max_rounds),
        target,
        ..defaults
    };
    let client = RecordingLmClient::new(lm_client(g)?);
    let outcome = run_designer(&task, strategy, &artifact, &corpus, &client, &options);
    if let Some(dir) = &g.record_lm {
        client.write_fixtures(dir)?;
    }
    let outcome = outcome?;
    save_plan(&outcome.plan, p.out)?;
    if let (Some(path), Some(report)) = (p.report, &outcome.report) {
        save_json(report, path)?;
    }
    let summary = json!({
        "strategy": outcome.strategy,
        "retrieved": outcome.retrieved,
        "calls": outcome.calls,
        "rounds": outcome.rounds,
        "steps": outcome.plan.steps().len(),
        "pass": outcome.report.as_ref().map(|r| r.pass),
    });
    emit(g, summary, || {
        let mut s = format!(
            "strategy: {}\nretrieved: {}\ncalls: {}\nsteps: {}\n",
            outcome.strategy,
            outcome.retrieved.join(","),
            outcome.calls,
            outcome.plan.steps().len()
        );
        if let Some(r) = &outcome.report {
            s.push_str(&format!("rounds: {}\n", outcome.rounds));
            s.push_str(&report_text(r));
        }
        s
    });
    Ok(true)
}

fn evaluate(g: &Global, config: &Config, plan: &Path, truth: &Path, out: &Path, task: Option<&Path>) -> Result<bool> {
    let (p, _) = load_plan(plan)?;
    let (t, _) = load_plan(truth)?;
    let params = config.align.unwrap_or_default();
    if !params.is_valid() {
        bail!("alignment parameters need match > 0, mismatch <= 0 and gap <= 0");
    }
    let kind = match task {
        Some(path) => load_json::<DesignTask>(path)?.kind.to_string(),
        None => String::new(),
    };
    let m = evaluate_pair_with(&p, &t, &params, &TfIdfVectorizer::default());
    append_row(out, &csv_row(plan, truth, &m, &kind))?;
    let mut value = serde_json::to_value(m)?;
    value["taskKind"] = json!(kind);
    emit(g, value, || {
        MetricVector::NAMES.iter().zip(m.as_array()).map(|(n, v)| format!("{n}: {v:.6}\n")).collect()
    });
    Ok(true)
}

const CSV_HEADER: &str = "plan,truth,iou_op,iou_prod,iou_dev,sim_exec,sim_goal,sim_param,task_kind\n";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_row(plan: &Path, truth: &Path, m: &MetricVector, kind: &str) -> String {
    let mut fields = vec![csv_field(&plan.display().to_string()), csv_field(&truth.display().to_string())];
    fields.extend(m.as_array().iter().map(f64::to_string));
    fields.push(kind.to_string());
    fields.join(",") + "\n"
}

fn append_row(path: &Path, row: &str) -> Result<()> {
    let fresh = fs::metadata(path).map_or(true, |m| m.len() == 0);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path).with_context(|| format!("opening {}", path.display()))?;
    if fresh {
        f.write_all(CSV_HEADER.as_bytes())?;
    }
    f.write_all(row.as_bytes())?;
    Ok(())
}

fn stats_json(a: &DslArtifact) -> serde_json::Value {
    json!({
        "domain": a.domain,
        "operations": a.operations.len(),
        "patterns": a.pattern_count(),
        "productModels": a.product_models.len(),
        "modelStates": a.model_state_count(),
        "devices": a.device_catalog.len(),
    })
}

fn stats_text(a: &DslArtifact) -> String {
    format!(
        "domain: {}\noperations: {}\npatterns: {}\nproduct models: {}\nmodel states: {}\ndevices: {}\n",
        a.domain,
        a.operations.len(),
        a.pattern_count(),
        a.product_models.len(),
        a.model_state_count(),
        a.device_catalog.len()
    )
}

fn stats(g: &Global, artifact: &Path) -> Result<bool> {
    let a = load_artifact(artifact)?;
    emit(g, stats_json(&a), || stats_text(&a));
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_fields_are_quoted_when_needed() {
        assert_eq!(csv_field("a.plan.json"), "a.plan.json");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"x\""), "\"say \"\"x\"\"\"");
    }

    #[test]
    fn header_matches_metric_names() {
        let names = CSV_HEADER.trim_end().split(',').skip(2).take(6).collect::<Vec<_>>();
        assert_eq!(names, MetricVector::NAMES);
    }
}
