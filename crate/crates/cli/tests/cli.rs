mod common;

use std::fs;

use common::*;
use protodsl::designer::MockLmClient;
use protodsl::dsl::serialize_plan;
use protodsl::store::{load_plan, save_json, save_plan};

/// Rewrites the truth plan, the scripted answers and the recorded prompt
/// fixtures. Run with REGENERATE_FIXTURES=1 after changing ingestion,
/// fitting or the prompt templates.
#[test]
fn regenerate_fixtures() {
    if std::env::var_os("REGENERATE_FIXTURES").is_none() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    ingest_and_fit(dir.path());
    let truth = truth_from(dir.path());
    save_plan(&truth, &mini().join("truth.plan.json")).unwrap();
    let answers = scripted_answers(&truth);
    let script = mini().join("answers.json");
    save_json(&answers, &script).unwrap();
    let lm = mini().join("lm");
    let _ = fs::remove_dir_all(&lm);
    for strategy in ["EE+", "EI+"] {
        design(dir.path(), strategy, &["--script-lm", s(&script), "--record-lm", s(&lm)]);
    }
}

#[test]
fn truth_fixture_matches_fresh_ingest() {
    let dir = tempfile::tempdir().unwrap();
    ingest_and_fit(dir.path());
    let (truth, warnings) = load_plan(&mini().join("truth.plan.json")).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(serialize_plan(&truth), serialize_plan(&truth_from(dir.path())));
}

#[test]
fn lm_fixtures_are_valid() {
    // EE+ and EI+ share the first prompt; EE+ adds one refinement prompt
    let client = MockLmClient::from_dir(&mini().join("lm")).unwrap();
    assert_eq!(client.len(), 2);
}

#[test]
fn verify_exit_codes_follow_the_report() {
    let dir = tempfile::tempdir().unwrap();
    ingest_and_fit(dir.path());
    let artifact = dir.path().join("genetics.dsl.json");
    let task = mini().join("task.json");
    let truth = mini().join("truth.plan.json");
    let report = dir.path().join("report.json");
    let out = ok(&["verify", s(&truth), "--artifact", s(&artifact), "--reagents", s(&task), "--out", s(&report)]);
    assert!(out.starts_with("pass: true\n"), "{out}");
    assert!(fs::read_to_string(&report).unwrap().contains("\"pass\": true"));

    let (plan, _) = load_plan(&truth).unwrap();
    let mutated = dir.path().join("flawed.plan.json");
    save_plan(&flawed(&plan), &mutated).unwrap();
    let reagents = dir.path().join("reagents.json");
    fs::write(&reagents, r#"["cells", "elution_buffer", "ethanol", "lysis_buffer", "wash_buffer"]"#).unwrap();
    let res = protodsl(&["verify", s(&mutated), "--artifact", s(&artifact), "--reagents", s(&reagents)]);
    assert_eq!(res.status.code(), Some(1));
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.contains("pass: false"));
    assert!(stdout.contains("MissingInput: "), "{stdout}");
    assert!(stdout.contains("binding_mixture"), "{stdout}");
}

#[test]
fn ingest_and_fit_are_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ingest_and_fit(a.path());
    ingest_and_fit(b.path());
    for f in ["corpus.json", "corpus.actions.json", "corpus.flows.json", "device_aliases.json", "genetics.dsl.json", "fit_trace.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn design_replays_recorded_answers() {
    let dir = tempfile::tempdir().unwrap();
    ingest_and_fit(dir.path());
    let lm = mini().join("lm");
    let ee = design(dir.path(), "EE+", &["--mock-lm", s(&lm)]);
    let ei = design(dir.path(), "EI+", &["--mock-lm", s(&lm)]);
    let truth = fs::read_to_string(mini().join("truth.plan.json")).unwrap();
    assert_eq!(fs::read_to_string(ee).unwrap(), truth);
    assert_ne!(fs::read_to_string(ei).unwrap(), truth);
}

#[test]
fn evaluate_appends_rows() {
    let dir = tempfile::tempdir().unwrap();
    let truth = mini().join("truth.plan.json");
    let json = evaluate(dir.path(), &truth);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["iouOp"], 1.0);
    assert_eq!(v["taskKind"], "Planning");
    evaluate(dir.path(), &truth);
    let csv = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("plan,truth,iou_op"));
    assert!(lines[1].ends_with(",1,1,1,1,1,1,Planning"), "{}", lines[1]);
}

#[test]
fn stats_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    ingest_and_fit(dir.path());
    let out = ok(&["stats", s(&dir.path().join("genetics.dsl.json"))]);
    let ops = out.lines().find_map(|l| l.strip_prefix("operations: ")).unwrap();
    assert!(ops.parse::<usize>().unwrap() > 0);
    let json: serde_json::Value = serde_json::from_str(&ok(&["stats", s(&dir.path().join("genetics.dsl.json")), "--json"])).unwrap();
    assert_eq!(json["operations"].to_string(), ops);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(protodsl(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(protodsl(&["fit", "--view", "sideways"]).status.code(), Some(2));
    assert_eq!(protodsl(&[]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let res = protodsl(&["stats", s(&dir.path().join("missing.dsl.json"))]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).starts_with("error: "));

    ingest_and_fit(dir.path());
    let res = protodsl(&[
        "design",
        "--task",
        s(&mini().join("task.json")),
        "--artifact",
        s(&dir.path().join("genetics.dsl.json")),
        "--corpus",
        s(&dir.path().join("corpus.json")),
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("--mock-lm"));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"schemaVersion": 99}"#).unwrap();
    assert_eq!(protodsl(&["stats", s(&bad)]).status.code(), Some(1));
}
