use std::hint::black_box;
use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, Criterion};
use protodsl::designer::protocol_plan;
use protodsl::function::fit_function_abstraction;
use protodsl::function::synthetic::{generate, SyntheticSpec};
use protodsl::ingest::{build_corpus, IngestOptions, RuleBasedClient};
use protodsl::metrics::{sim_exec, AlignParams};
use protodsl::pipeline::{build_artifact, FitView};
use protodsl::store::{load_json, read_protocols};
use protodsl::verify::reciprocative_verify;
use protodsl::{DesignTask, HyperParams};

fn mini(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../cli/tests/fixtures/mini").join(file)
}

fn gibbs(c: &mut Criterion) {
    let data = generate(&SyntheticSpec::default());
    let hyper = HyperParams { iterations: 20, convergence_window: 0, ..HyperParams::default() };
    c.bench_function("fit 20 sweeps, 600 actions", |b| {
        b.iter(|| fit_function_abstraction(black_box(&data.corpus), &hyper).unwrap())
    });
}

fn alignment(c: &mut Criterion) {
    let a: Vec<u32> = (0..60).map(|i| i * 7 % 11).collect();
    let b: Vec<u32> = (0..60).map(|i| i * 5 % 13).collect();
    let p = AlignParams::default();
    c.bench_function("sim_exec 60x60", |bench| bench.iter(|| sim_exec(black_box(&a), black_box(&b), &p)));
}

fn verification(c: &mut Criterion) {
    let docs = read_protocols(&mini("mini.corpus.jsonl")).unwrap();
    let corpus = build_corpus(docs, &RuleBasedClient::default(), &IngestOptions::default()).unwrap();
    let hyper = HyperParams { iterations: 100, convergence_window: 0, seed: 7, ..HyperParams::default() };
    let artifact = build_artifact(&corpus, &hyper, FitView::Both).unwrap().artifact;
    let task: DesignTask = load_json(&mini("task.json")).unwrap();
    let plan = protocol_plan(&corpus, "g01", true);
    c.bench_function("reciprocative verify, 9-step plan", |b| {
        b.iter(|| reciprocative_verify(black_box(&plan), &task, &artifact, 3).unwrap())
    });
}

criterion_group!(benches, gibbs, alignment, verification);
criterion_main!(benches);
