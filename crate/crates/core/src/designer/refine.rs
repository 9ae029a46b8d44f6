//! Verify, feed back, regenerate: the external refinement loop.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::client::LmClient;
use super::prompts::{render_prompt, PromptId};
use super::DesignError;
use crate::dsl::{parse_plan, serialize_plan, ParseDiagnostic};
use crate::model::{DesignTask, DslArtifact, PlanProgram};
use crate::verify::{reciprocative_verify_with, render_feedback, verify_operation_flow, VerificationReport, VerifyOptions};

pub const DEFAULT_MAX_ITERS: usize = 3;
pub const DEFAULT_MAX_ROUNDS: usize = 3;

/// Which checks drive the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyMode {
    /// Operation-flow checks only.
    Operation,
    /// Operation-flow and product-flow checks in reciprocative rounds.
    Dual,
}

impl VerifyMode {
    fn template(self) -> PromptId {
        match self {
            Self::Operation => PromptId::RefineOperation,
            Self::Dual => PromptId::RefineDual,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineSettings {
    pub max_iters: usize,
    pub max_rounds: usize,
    pub mode: VerifyMode,
    pub verify: VerifyOptions,
}

impl RefineSettings {
    pub fn new(mode: VerifyMode) -> Self {
        Self { max_iters: DEFAULT_MAX_ITERS, max_rounds: DEFAULT_MAX_ROUNDS, mode, verify: VerifyOptions::default() }
    }
}

/// Where the loop starts: a parsed plan, or model output that did not parse.
#[derive(Debug, Clone)]
pub enum RefineStart {
    Plan(PlanProgram),
    Unparsed { text: String, diagnostics: Vec<ParseDiagnostic> },
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub plan: PlanProgram,
    pub report: VerificationReport,
    /// Plans verified, the starting plan included.
    pub rounds: usize,
    pub calls: usize,
    /// Finding count of every verified plan, in order.
    pub history: Vec<usize>,
    /// Every model response.
    pub raw: Vec<String>,
    /// Parse warnings of the returned plan.
    pub diagnostics: Vec<ParseDiagnostic>,
}

fn verify(plan: &PlanProgram, task: &DesignTask, artifact: &DslArtifact, s: &RefineSettings) -> Result<VerificationReport, DesignError> {
    match s.mode {
        VerifyMode::Operation => Ok(verify_operation_flow(plan, task, artifact, &s.verify)),
        VerifyMode::Dual => Ok(reciprocative_verify_with(plan, task, artifact, s.max_rounds, &s.verify)?),
    }
}

fn parse_feedback(diagnostics: &[ParseDiagnostic]) -> String {
    diagnostics.iter().map(|d| format!("Error: {}: {}", d.path, d.message)).collect::<Vec<_>>().join("\n")
}

/// Runs verification and refinement until a plan passes or `max_iters`
/// refinement calls have been made. Returns the plan with the fewest
/// findings, the earliest on ties.
pub fn refine_loop(
    plan: PlanProgram,
    task: &DesignTask,
    artifact: &DslArtifact,
    client: &dyn LmClient,
    settings: &RefineSettings,
) -> Result<RefineOutcome, DesignError> {
    refine_from(RefineStart::Plan(plan), task, artifact, client, settings)
}

pub fn refine_from(
    start: RefineStart,
    task: &DesignTask,
    artifact: &DslArtifact,
    client: &dyn LmClient,
    settings: &RefineSettings,
) -> Result<RefineOutcome, DesignError> {
    if settings.max_iters == 0 {
        return Err(DesignError::Precondition("maxIters must be at least 1".into()));
    }
    let mut best: Option<(PlanProgram, VerificationReport, Vec<ParseDiagnostic>)> = None;
    let mut history = Vec::new();
    let mut raw = Vec::new();
    let (mut text, mut feedback, mut last_diagnostics) = match start {
        RefineStart::Plan(plan) => {
            let report = verify(&plan, task, artifact, settings)?;
            history.push(report.findings.len());
            let text = serialize_plan(&plan);
            let feedback = render_feedback(&report.findings);
            let pass = report.pass;
            best = Some((plan, report, Vec::new()));
            if pass {
                return Ok(finish(best, history, raw, 0));
            }
            (text, feedback, Vec::new())
        }
        RefineStart::Unparsed { text, diagnostics } => (text, parse_feedback(&diagnostics), diagnostics),
    };
    let mut calls = 0;
    for _ in 0..settings.max_iters {
        let slots = BTreeMap::from([
            ("title", task.title.clone()),
            ("details", super::details(task)),
            ("plan", text.clone()),
            ("feedback", feedback.clone()),
        ]);
        let prompt = render_prompt(settings.mode.template(), &slots)?;
        let response = client.complete(&prompt)?;
        calls += 1;
        raw.push(response.clone());
        match parse_plan(&response) {
            Ok(parsed) => {
                let report = verify(&parsed.value, task, artifact, settings)?;
                history.push(report.findings.len());
                text = serialize_plan(&parsed.value);
                feedback = render_feedback(&report.findings);
                let pass = report.pass;
                if best.as_ref().is_none_or(|(_, b, _)| report.findings.len() < b.findings.len()) {
                    best = Some((parsed.value, report, parsed.warnings));
                }
                if pass {
                    break;
                }
            }
            Err(e) => {
                last_diagnostics = e.diagnostics().to_vec();
                feedback = parse_feedback(&last_diagnostics);
                text = response;
            }
        }
    }
    if best.is_none() {
        return Err(DesignError::Failure { raw: text, diagnostics: last_diagnostics });
    }
    Ok(finish(best, history, raw, calls))
}

fn finish(
    best: Option<(PlanProgram, VerificationReport, Vec<ParseDiagnostic>)>,
    history: Vec<usize>,
    raw: Vec<String>,
    calls: usize,
) -> RefineOutcome {
    let (plan, report, diagnostics) = best.expect("finish is called with a best plan");
    RefineOutcome { plan, report, rounds: history.len(), calls, history, raw, diagnostics }
}
