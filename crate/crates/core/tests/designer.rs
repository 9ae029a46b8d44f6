use std::collections::{BTreeMap, BTreeSet, HashMap};

use proptest::prelude::*;
use protodsl::designer::{
    parse_pseudocode, refine_loop, retrieve_similar, run_designer, DesignError, DesignOptions, DesignerStrategy,
    LmClient, LmFixture, MockLmClient, RecordingLmClient, RefineSettings, ScriptedLmClient, VerifyMode,
};
use protodsl::dsl::serialize_plan;
use protodsl::ingest::{Corpus, SourcedFlow};
use protodsl::metrics::text_tokens;
use protodsl::verify::{reciprocative_verify, verify_operation_flow, FindingKind, VerifyOptions};
use protodsl::{
    parse_quantity, ComponentType, DesignTask, DomainId, DslArtifact, FitMeta, FlowUnit, InstanceAction, OpStep,
    OperationInterface, Pattern, PlanProgram, ProductFlowRecord, ProductModel, ProtocolDoc, RefName, SlotRef, SourceRef,
    TaskKind, UnitArgType,
};

fn slot(name: &str) -> SlotRef {
    SlotRef::new(RefName::parse(name))
}

fn step(op: &str, inputs: &[&str], outputs: &[&str]) -> OpStep {
    let mut s = OpStep::new(op);
    s.precond = inputs.iter().map(|n| slot(n)).collect();
    s.postcond = outputs.iter().map(|n| slot(n)).collect();
    s
}

fn flow(name: &str, pred: Option<&str>, succ: Option<&str>, cond: &[(&str, &str)]) -> ProductFlowRecord {
    let r = RefName::parse(name);
    ProductFlowRecord {
        pred: pred.map(str::to_string),
        unit: FlowUnit {
            component: r.component().to_string(),
            component_type: Some(ComponentType::Liquid),
            ref_name: r,
            unit_arg_type: if pred.is_some() { UnitArgType::Product } else { UnitArgType::Material },
            vol: None,
            container: None,
            cond: cond.iter().map(|(k, v)| (k.to_string(), parse_quantity(v))).collect(),
        },
        succ: succ.map(str::to_string),
    }
}

fn domain() -> DomainId {
    DomainId::new("Genetics").unwrap()
}

fn task(reagents: &[&str]) -> DesignTask {
    DesignTask {
        kind: TaskKind::Planning,
        title: "Plasmid cleanup".into(),
        objective: "Recover a clean plasmid filtrate from bacterial cells".into(),
        reagents: reagents.iter().map(|s| s.to_string()).collect(),
        domain: domain(),
        base_protocol: None,
    }
}

fn artifact() -> DslArtifact {
    let op = |name: &str| OperationInterface {
        unique_name: name.into(),
        patterns: vec![Pattern::new(vec![None], vec![None], None, BTreeMap::new(), vec![])],
    };
    DslArtifact {
        domain: domain(),
        operations: ["lyse", "centrifuge", "filtration", "wash"].iter().map(|n| op(n)).collect(),
        product_models: vec![ProductModel {
            component: "supernatant".into(),
            pred_ops: [("centrifuge".to_string(), 2)].into(),
            succ_ops: BTreeMap::new(),
            property_keys: ["acidity".to_string()].into(),
            property_models: BTreeMap::new(),
            phase_conditioned: [(ComponentType::Liquid, ["acidity".to_string()].into())].into(),
            state_count: 1,
        }],
        device_catalog: Default::default(),
        meta: FitMeta { corpus_size: 3, fit_iterations: 10, seed: 0 },
    }
}

fn doc(id: &str, title: &str, description: &str, steps: &[&str]) -> ProtocolDoc {
    ProtocolDoc {
        id: id.into(),
        title: title.into(),
        description: description.into(),
        domain: domain(),
        steps: steps.iter().map(|s| s.to_string()).collect(),
    }
}

fn action(protocol: &str, i: usize, op: &str, inputs: &[&str], outputs: &[&str]) -> InstanceAction {
    let s = step(op, inputs, outputs);
    InstanceAction {
        opcode: s.operation,
        precond: s.precond,
        postcond: s.postcond,
        device: (op == "centrifuge").then(|| "centrifuge".to_string()),
        config: BTreeMap::new(),
        source: SourceRef { protocol: protocol.into(), step: i },
    }
}

fn corpus() -> Corpus {
    let docs = vec![
        doc("p1", "Plasmid miniprep", "Isolate plasmid DNA from bacterial cells", &["Lyse the cells.", "Centrifuge the lysate."]),
        doc("p2", "Protein wash", "Wash recombinant protein beads", &["Wash the beads.", "Centrifuge the beads."]),
        doc("p3", "Filtrate cleanup", "Clean plasmid filtrate by filtration", &["Filter the supernatant."]),
    ];
    let actions = vec![
        action("p1", 0, "lyse", &["cells"], &["lysate"]),
        action("p1", 1, "centrifuge", &["lysate"], &["supernatant"]),
        action("p2", 0, "wash", &["beads"], &["washed_beads"]),
        action("p2", 1, "centrifuge", &["washed_beads"], &["pellet"]),
        action("p3", 0, "filtration", &["supernatant"], &["filtrate"]),
    ];
    let flows = vec![
        SourcedFlow { protocol: "p1".into(), record: flow("cells", None, Some("lyse"), &[]) },
        SourcedFlow { protocol: "p1".into(), record: flow("lysate", Some("lyse"), Some("centrifuge"), &[]) },
        SourcedFlow { protocol: "p1".into(), record: flow("supernatant", Some("centrifuge"), None, &[("acidity", "pH 7")]) },
    ];
    Corpus {
        domain: domain(),
        docs,
        actions,
        flows,
        device_alias_map: BTreeMap::new(),
        component_alias_map: BTreeMap::new(),
        errors: Vec::new(),
    }
}

fn clean_dual() -> PlanProgram {
    PlanProgram::new(
        vec![
            step("lyse", &["cells_0"], &["lysate_0"]),
            step("centrifuge", &["lysate_0"], &["supernatant_0"]),
            step("filtration", &["supernatant_0"], &["filtrate_0"]),
        ],
        vec![
            flow("cells_0", None, Some("lyse"), &[]),
            flow("lysate_0", Some("lyse"), Some("centrifuge"), &[]),
            flow("supernatant_0", Some("centrifuge"), Some("filtration"), &[("acidity", "pH 7")]),
            flow("filtrate_0", Some("filtration"), None, &[]),
        ],
    )
}

/// The clean plan with an extra reagent that is not available.
fn dual_missing_ethanol() -> PlanProgram {
    let (mut steps, mut flows) = clean_dual().into_parts();
    steps[2].precond.push(slot("ethanol_0"));
    flows.push(flow("ethanol_0", None, Some("filtration"), &[]));
    PlanProgram::new(steps, flows)
}

fn four_step_dual() -> PlanProgram {
    let (mut steps, mut flows) = clean_dual().into_parts();
    steps.push(step("wash", &["filtrate_0"], &["clean_filtrate_0"]));
    flows.retain(|f| f.unit.component != "filtrate");
    flows.push(flow("filtrate_0", Some("filtration"), Some("wash"), &[]));
    flows.push(flow("clean_filtrate_0", Some("wash"), None, &[]));
    PlanProgram::new(steps, flows)
}

fn options() -> DesignOptions {
    DesignOptions { seed: 5, ..DesignOptions::default() }
}

// retrieval

fn exact_cosine_oracle(corpus: &Corpus, query: &str) -> Vec<(String, f64)> {
    let docs: Vec<Vec<String>> =
        corpus.docs.iter().map(|d| text_tokens(&d.description)).chain([text_tokens(query)]).collect();
    let n = docs.len() as f64;
    let mut df: HashMap<&str, f64> = HashMap::new();
    for d in &docs {
        let unique: BTreeSet<&str> = d.iter().map(String::as_str).collect();
        for t in unique {
            *df.entry(t).or_default() += 1.0;
        }
    }
    let vec_of = |d: &[String]| -> HashMap<String, f64> {
        let mut v = HashMap::new();
        for t in d {
            *v.entry(t.clone()).or_default() += ((1.0 + n) / (1.0 + df[t.as_str()])).ln() + 1.0;
        }
        v
    };
    let q = vec_of(docs.last().unwrap());
    let norm = |v: &HashMap<String, f64>| v.values().map(|x| x * x).sum::<f64>().sqrt();
    corpus
        .docs
        .iter()
        .zip(&docs)
        .map(|(d, tokens)| {
            let v = vec_of(tokens);
            let dot: f64 = v.iter().map(|(t, x)| x * q.get(t).copied().unwrap_or(0.0)).sum();
            let denom = norm(&v) * norm(&q);
            (d.id.clone(), if denom == 0.0 { 0.0 } else { dot / denom })
        })
        .collect()
}

#[test]
fn description_query_ranks_its_protocol_first() {
    let c = corpus();
    let r = retrieve_similar(&c, "Wash recombinant protein beads", 3, &BTreeSet::new());
    assert_eq!(r.ids[0], "p2");
    assert!(!r.truncated);
}

#[test]
fn short_corpus_is_flagged() {
    let mut c = corpus();
    c.docs.truncate(2);
    let r = retrieve_similar(&c, "anything", 3, &BTreeSet::new());
    assert_eq!(r.ids.len(), 2);
    assert!(r.truncated);
}

const WORDS: [&str; 8] = ["plasmid", "dna", "protein", "wash", "lyse", "cells", "buffer", "beads"];

proptest! {
    #[test]
    fn ranking_matches_bruteforce_cosine(
        descs in prop::collection::vec(prop::collection::vec(0usize..8, 1..6), 2..8),
        query in prop::collection::vec(0usize..8, 1..5),
        k in 1usize..5,
    ) {
        let mut c = corpus();
        c.docs = descs
            .iter()
            .enumerate()
            .map(|(i, ws)| doc(&format!("d{i}"), "t", &ws.iter().map(|&w| WORDS[w]).collect::<Vec<_>>().join(" "), &["x"]))
            .collect();
        let q = query.iter().map(|&w| WORDS[w]).collect::<Vec<_>>().join(" ");
        let mut oracle = exact_cosine_oracle(&c, &q);
        oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        let got = retrieve_similar(&c, &q, k, &BTreeSet::new());
        for (i, id) in got.ids.iter().enumerate() {
            let (oid, oscore) = &oracle[i];
            prop_assert!((got.scores[i] - oscore).abs() < 1e-9, "score {} vs {}", got.scores[i], oscore);
            // Equal scores may be ordered either way by rounding; only the score must agree.
            if (oracle.get(i + 1).map_or(f64::NAN, |o| o.1) - oscore).abs() > 1e-9
                && (i == 0 || (oracle[i - 1].1 - oscore).abs() > 1e-9)
            {
                prop_assert_eq!(id, oid);
            }
        }
    }
}

// strategies

#[test]
fn ei_plus_fixture_passes_through() {
    let expected = four_step_dual();
    let client = ScriptedLmClient::new([serialize_plan(&expected)]);
    let out = run_designer(&task(&["cells"]), DesignerStrategy::EiPlus, &artifact(), &corpus(), &client, &options()).unwrap();
    assert_eq!(out.plan, expected);
    assert_eq!(out.plan.steps().len(), 4);
    assert!(out.plan.is_dual());
    assert!(out.report.is_none());
    assert_eq!(client.calls(), 1);
    let prompt = &client.prompts()[0];
    assert!(prompt.contains("Operation-view DSL specification:\n["));
    assert!(prompt.contains("\"Component\": \"supernatant\""));
}

#[test]
fn fb_plan_opcodes_are_pseudocode_functions() {
    let code = "lysate = lyse(cells)\nsup = centrifuge(lysate, device=\"centrifuge\", speed=\"12,000 x g\")\nfiltrate = filtration(sup)";
    let client = ScriptedLmClient::new(["1. Lyse cells.\n2. Spin.\n3. Filter.", code]);
    let out = run_designer(&task(&["cells"]), DesignerStrategy::Fb, &artifact(), &corpus(), &client, &options()).unwrap();
    assert_eq!(out.plan.opcodes(), vec!["lyse", "centrifuge", "filtration"]);
    assert_eq!(out.calls, 2);
    let prompts = client.prompts();
    assert!(prompts[0].starts_with("Your goal is to generate steps for a biology protocol."));
    assert!(prompts[1].contains("1. Lyse cells.\n2. Spin.\n3. Filter."));
}

#[test]
fn ee_plus_two_turns() {
    let t = task(&["cells"]);
    let a = artifact();
    let first = dual_missing_ethanol();
    let r1 = reciprocative_verify(&first, &t, &a, 3).unwrap();
    assert_eq!(r1.findings.len(), 1);
    assert_eq!(r1.findings[0].kind, FindingKind::MissingInput);

    let client = ScriptedLmClient::new([serialize_plan(&first), serialize_plan(&clean_dual())]);
    let out = run_designer(&t, DesignerStrategy::EePlus, &a, &corpus(), &client, &options()).unwrap();
    assert_eq!(out.plan, clean_dual());
    assert_eq!(out.rounds, 2);
    let report = out.report.unwrap();
    assert!(report.pass);
    assert!(client.prompts()[1].contains(&r1.findings[0].message));
    assert!(client.prompts()[1].starts_with("Your task is to improve a Biology"));
}

#[test]
fn ee_uses_operation_checks_only() {
    // The product thread would flag the missing acidity; the operation thread does not.
    let (steps, mut flows) = clean_dual().into_parts();
    flows[2].unit.cond.clear();
    let plan = PlanProgram::new(steps, flows);
    let client = ScriptedLmClient::new([serialize_plan(&plan)]);
    let out = run_designer(&task(&["cells"]), DesignerStrategy::Ee, &artifact(), &corpus(), &client, &options()).unwrap();
    assert!(out.report.unwrap().pass);
    assert_eq!(client.calls(), 1);

    let client = ScriptedLmClient::new([serialize_plan(&plan), serialize_plan(&clean_dual())]);
    let out = run_designer(&task(&["cells"]), DesignerStrategy::EePlus, &artifact(), &corpus(), &client, &options()).unwrap();
    assert_eq!(out.rounds, 2);
    assert_eq!(out.plan, clean_dual());
}

#[test]
fn unparseable_ei_output_is_a_design_failure() {
    let client = ScriptedLmClient::new(["I cannot help with that."]);
    let err = run_designer(&task(&["cells"]), DesignerStrategy::Ei, &artifact(), &corpus(), &client, &options()).unwrap_err();
    match err {
        DesignError::Failure { raw, .. } => assert_eq!(raw, "I cannot help with that."),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn ee_recovers_from_unparseable_first_output() {
    let client = ScriptedLmClient::new(["not json".to_string(), serialize_plan(&clean_dual())]);
    let out = run_designer(&task(&["cells"]), DesignerStrategy::Ee, &artifact(), &corpus(), &client, &options()).unwrap();
    assert_eq!(out.plan, clean_dual());
    assert!(client.prompts()[1].contains("Refine the following plan:\n\nnot json"));
}

#[test]
fn ee_all_unparseable_fails() {
    let client = ScriptedLmClient::new(["a", "b", "c", "d"]);
    let err = run_designer(&task(&["cells"]), DesignerStrategy::Ee, &artifact(), &corpus(), &client, &options()).unwrap_err();
    assert!(matches!(err, DesignError::Failure { ref raw, .. } if raw == "d"));
    assert_eq!(client.calls(), 4);
}

#[test]
fn dsl_strategies_need_operations() {
    let mut a = artifact();
    a.operations.clear();
    let client = ScriptedLmClient::new(Vec::<String>::new());
    let err = run_designer(&task(&["cells"]), DesignerStrategy::Ei, &a, &corpus(), &client, &options()).unwrap_err();
    assert!(matches!(err, DesignError::Precondition(_)));
    assert_eq!(client.calls(), 0);
}

fn ib_prompt(strategy: DesignerStrategy, seed: u64, target: Option<&str>) -> String {
    let client = ScriptedLmClient::new(["x = lyse(cells)"]);
    let opts = DesignOptions { seed, target: target.map(str::to_string), ..DesignOptions::default() };
    run_designer(&task(&["cells"]), strategy, &artifact(), &corpus(), &client, &opts).unwrap();
    client.prompts().remove(0)
}

#[test]
fn instance_shuffle_is_a_function_of_the_seed() {
    assert_eq!(ib_prompt(DesignerStrategy::Ib, 1, None), ib_prompt(DesignerStrategy::Ib, 1, None));
    let distinct: BTreeSet<String> = (0..8).map(|s| ib_prompt(DesignerStrategy::Ib, s, None)).collect();
    assert!(distinct.len() > 1);
}

#[test]
fn ii_offers_target_pseudofunctions() {
    let with = ib_prompt(DesignerStrategy::Ii, 1, Some("p3"));
    assert!(with.contains("def filtration(supernatant):"));
    let ib = ib_prompt(DesignerStrategy::Ib, 1, Some("p3"));
    assert!(!ib.contains("def filtration"));
}

#[test]
fn every_strategy_replays_byte_identically_from_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let t = task(&["cells"]);
    let responses = |s: DesignerStrategy| -> Vec<String> {
        match s {
            DesignerStrategy::Fb => vec!["1. Lyse.".into(), "lysate = lyse(cells)".into()],
            DesignerStrategy::Ib | DesignerStrategy::Ii => vec!["lysate = lyse(cells)".into()],
            _ => vec![serialize_plan(&dual_missing_ethanol()), serialize_plan(&clean_dual())],
        }
    };
    let mut first = Vec::new();
    for s in DesignerStrategy::ALL {
        let rec = RecordingLmClient::new(ScriptedLmClient::new(responses(s)));
        let out = run_designer(&t, s, &artifact(), &corpus(), &rec, &options()).unwrap();
        rec.write_fixtures(dir.path()).unwrap();
        first.push((serialize_plan(&out.plan), out.raw));
    }
    let mock = MockLmClient::from_dir(dir.path()).unwrap();
    for (s, (plan, raw)) in DesignerStrategy::ALL.into_iter().zip(first) {
        let out = run_designer(&t, s, &artifact(), &corpus(), &mock, &options()).unwrap();
        assert_eq!(serialize_plan(&out.plan), plan, "{s}");
        assert_eq!(out.raw, raw, "{s}");
    }
}

#[test]
fn mock_fixture_file_layout() {
    let f = LmFixture::new("prompt", "text");
    let json = serde_json::to_value(&f).unwrap();
    assert_eq!(json["sha256"].as_str().unwrap().len(), 64);
    let mock = MockLmClient::new([f]);
    assert_eq!(mock.complete("prompt").unwrap(), "text");
}

// refine loop

fn op_settings(max_iters: usize) -> RefineSettings {
    RefineSettings { max_iters, ..RefineSettings::new(VerifyMode::Operation) }
}

fn op_plan(missing: &[&str]) -> PlanProgram {
    let mut steps = vec![step("lyse", &["cells"], &["lysate"]), step("centrifuge", &["lysate"], &["supernatant"])];
    for (i, m) in missing.iter().enumerate() {
        let out = format!("stage_{i}");
        let prev = steps.last().unwrap().postcond[0].name.to_string();
        steps.push(step("wash", &[&prev, m], &[&out]));
    }
    let last = steps.last().unwrap().postcond[0].name.to_string();
    steps.push(step("filtration", &[&last], &[]));
    PlanProgram::operation_only(steps)
}

fn findings(plan: &PlanProgram) -> usize {
    verify_operation_flow(plan, &task(&["cells"]), &artifact(), &VerifyOptions::default()).findings.len()
}

#[test]
fn passing_plan_makes_no_calls() {
    let client = ScriptedLmClient::new(Vec::<String>::new());
    let plan = op_plan(&[]);
    let out = refine_loop(plan.clone(), &task(&["cells"]), &artifact(), &client, &op_settings(3)).unwrap();
    assert_eq!(out.plan, plan);
    assert!(out.report.pass);
    assert_eq!(client.calls(), 0);
    assert_eq!(out.rounds, 1);
}

#[test]
fn budget_exhaustion_keeps_earliest_best() {
    let two = op_plan(&["x", "y"]);
    assert_eq!(findings(&two), 2);
    let variant = op_plan(&["p", "q"]);
    assert_eq!(findings(&variant), 2);
    let client = ScriptedLmClient::new(vec![serialize_plan(&variant); 5]);
    let out = refine_loop(two.clone(), &task(&["cells"]), &artifact(), &client, &op_settings(3)).unwrap();
    assert_eq!(client.calls(), 3);
    assert_eq!(out.history, vec![2, 2, 2, 2]);
    assert_eq!(out.plan, two);
    assert!(!out.report.pass);
}

#[test]
fn improving_trace_reaches_pass() {
    let plans = [op_plan(&["a", "b", "c"]), op_plan(&["a"]), op_plan(&[])];
    assert_eq!(plans.iter().map(findings).collect::<Vec<_>>(), vec![3, 1, 0]);
    let client = ScriptedLmClient::new(plans[1..].iter().map(serialize_plan));
    let out = refine_loop(plans[0].clone(), &task(&["cells"]), &artifact(), &client, &op_settings(3)).unwrap();
    assert!(out.report.pass);
    assert_eq!(out.history, vec![3, 1, 0]);
    assert_eq!(out.rounds, 3);
    assert_eq!(out.calls, 2);
    assert_eq!(out.plan, plans[2]);
}

#[test]
fn zero_iterations_rejected() {
    let client = ScriptedLmClient::new(Vec::<String>::new());
    let err = refine_loop(op_plan(&["a"]), &task(&["cells"]), &artifact(), &client, &op_settings(0)).unwrap_err();
    assert!(matches!(err, DesignError::Precondition(_)));
}

proptest! {
    #[test]
    fn refinement_never_adds_findings(
        start in 0usize..4,
        responses in prop::collection::vec(prop_oneof![(0usize..4).prop_map(Some), Just(None)], 1..5),
        iters in 1usize..4,
    ) {
        let names = ["a", "b", "c"];
        let plan = op_plan(&names[..start]);
        let texts: Vec<String> = responses
            .iter()
            .map(|r| r.map_or_else(|| "garbage".to_string(), |n| serialize_plan(&op_plan(&names[..n.min(3)]))))
            .collect();
        let client = ScriptedLmClient::new(texts);
        match refine_loop(plan.clone(), &task(&["cells"]), &artifact(), &client, &op_settings(iters)) {
            Ok(out) => {
                prop_assert!(out.report.findings.len() <= findings(&plan));
                prop_assert_eq!(out.report.findings.len(), *out.history.iter().min().unwrap());
            }
            Err(DesignError::Client(_)) => prop_assert!(responses.len() < iters),
            Err(e) => prop_assert!(false, "unexpected {e:?}"),
        }
    }
}

#[test]
fn pseudocode_from_fixture_text() {
    let plan = parse_pseudocode("def lyse(cells):\n    return lysate\n\nlysate = lyse(cells)\nspin(lysate)").unwrap().value;
    assert_eq!(plan.opcodes(), vec!["lyse", "spin"]);
}
