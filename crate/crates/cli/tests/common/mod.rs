//! Shared helpers: locating fixtures and running the binary.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use protodsl::designer::protocol_plan;
use protodsl::dsl::serialize_plan;
use protodsl::store::load_corpus;
use protodsl::verify::mutate::drop_step;
use protodsl::PlanProgram;

pub const SEED: &str = "7";
pub const TARGET: &str = "g01";

pub fn mini() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini")
}

pub fn protodsl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_protodsl")).args(args).output().expect("binary runs")
}

pub fn ok(args: &[&str]) -> String {
    let out = protodsl(args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Runs ingest and fit into `dir`.
pub fn ingest_and_fit(dir: &Path) {
    let config = mini().join("config.json");
    ok(&["ingest", s(&mini().join("mini.corpus.jsonl")), "--out", s(dir)]);
    ok(&[
        "fit",
        "--corpus",
        s(&dir.join("corpus.json")),
        "--out",
        s(&dir.join("genetics.dsl.json")),
        "--seed",
        SEED,
        "--config",
        s(&config),
    ]);
}

/// Runs one designer against the bundled task and returns the plan path.
pub fn design(dir: &Path, strategy: &str, lm: &[&str]) -> PathBuf {
    let out = dir.join(format!("{}.plan.json", strategy.replace('+', "_plus").to_lowercase()));
    let (task, config) = (mini().join("task.json"), mini().join("config.json"));
    let (artifact, corpus) = (dir.join("genetics.dsl.json"), dir.join("corpus.json"));
    let mut args = vec![
        "design",
        "--strategy",
        strategy,
        "--task",
        s(&task),
        "--artifact",
        s(&artifact),
        "--corpus",
        s(&corpus),
        "--target",
        TARGET,
        "--out",
        s(&out),
        "--seed",
        SEED,
        "--config",
        s(&config),
    ];
    args.extend_from_slice(lm);
    ok(&args);
    out
}

pub fn evaluate(dir: &Path, plan: &Path) -> String {
    ok(&[
        "evaluate",
        s(plan),
        s(&mini().join("truth.plan.json")),
        "--out",
        s(&dir.join("metrics.csv")),
        "--task",
        s(&mini().join("task.json")),
        "--json",
    ])
}

/// The held-out protocol as a dual plan, rendered from a fresh ingest.
pub fn truth_from(dir: &Path) -> PlanProgram {
    protocol_plan(&load_corpus(&dir.join("corpus.json")).unwrap(), TARGET, true)
}

/// The scripted first answer: the truth without its ethanol addition, so
/// the binding mixture is consumed without being produced.
pub fn flawed(truth: &PlanProgram) -> PlanProgram {
    let add = truth.steps().iter().position(|s| s.operation == "add").expect("truth has an add step");
    let dropped = drop_step(truth, add);
    let (steps, flows) = dropped.into_parts();
    let flows = flows.into_iter().filter(|f| f.unit.component != "ethanol").collect();
    PlanProgram::new(steps, flows)
}

pub fn scripted_answers(truth: &PlanProgram) -> Vec<String> {
    vec![serialize_plan(&flawed(truth)), serialize_plan(truth)]
}
