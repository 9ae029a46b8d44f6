//! Reciprocative verification of designed plans: an operation-flow thread
//! that checks step inputs and outputs, and a product-flow thread that
//! checks flow records against the steps and the product models.

pub mod mutate;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DesignTask, DslArtifact, OpStep, PlanProgram, ProductFlowRecord, RefName, UnitArgType};

/// Operations whose missing inputs are forgiven: they prepare reagents from
/// stock the plan does not track.
pub const DEFAULT_PREP_VERBS: [&str; 5] = ["prepare", "make", "dissolve", "dilute", "reconstitute"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FindingKind {
    MissingInput,
    UnusedOutput,
    PredMismatch,
    SuccMismatch,
    PropertyGap,
    UnknownOperation,
}

impl fmt::Display for FindingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One verification finding. `step_index` is 0-based, or -1 for findings
/// not tied to a step; messages count steps from 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Finding {
    pub step_index: i64,
    pub kind: FindingKind,
    pub subject: String,
    pub message: String,
}

impl Finding {
    fn new(step: Option<usize>, kind: FindingKind, subject: impl Into<String>, message: String) -> Self {
        Self { step_index: step.map_or(-1, |s| s as i64), kind, subject: subject.into(), message }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationReport {
    pub pass: bool,
    pub rounds: usize,
    pub findings: Vec<Finding>,
    /// Findings forgiven under the preparation amnesty; they do not affect
    /// `pass`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Finding>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("product-flow verification needs a dual plan")]
    NotDual,
    #[error("max rounds must be at least 1")]
    NoRounds,
}

/// Verification settings.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub prep_verbs: Vec<String>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { prep_verbs: DEFAULT_PREP_VERBS.iter().map(|s| s.to_string()).collect() }
    }
}

/// Message templates. Step numbers in the text are 1-based.
pub mod templates {
    pub fn missing_input(product: &str, operation: &str, step: usize) -> String {
        format!("Error: The product {product} required by operation {operation} at step {step} is not available from previous steps.")
    }

    pub fn unused_output(product: &str, operation: &str, step: usize) -> String {
        format!("Error: The product {product} produced by operation {operation} at step {step} is not used in subsequent steps.")
    }

    pub fn unknown_operation(operation: &str, step: usize) -> String {
        format!("Error: The operation {operation} at step {step} is not defined in the DSL.")
    }

    pub fn pred_mismatch(product: &str, pred: &str, operation: &str, step: usize) -> String {
        format!("Error: The product {product} is recorded as the output of {pred} but it is produced by operation {operation} at step {step}.")
    }

    pub fn pred_unproduced(product: &str, pred: &str) -> String {
        format!("Error: The product {product} is recorded as the output of {pred} but no step produces it.")
    }

    pub fn succ_mismatch(product: &str, succ: &str, operation: &str, step: usize) -> String {
        format!("Error: The product {product} is recorded as the input of {succ} but it is consumed by operation {operation} at step {step}.")
    }

    pub fn succ_unconsumed(product: &str, succ: &str) -> String {
        format!("Error: The product {product} is recorded as the input of {succ} but no step consumes it.")
    }

    pub fn property_gap(product: &str, property: &str) -> String {
        format!("Error: The product {product} is missing the required property {property}.")
    }
}

fn op_label(name: Option<&str>) -> &str {
    name.unwrap_or("none")
}

/// Finds the first step in `range` whose slots take `name`, preferring an
/// exact reference match over a component match.
fn consuming_step(steps: &[OpStep], name: &RefName, from: usize) -> Option<usize> {
    let exact = (from..steps.len()).find(|&i| steps[i].precond.iter().any(|p| p.name == *name));
    exact.or_else(|| (from..steps.len()).find(|&i| steps[i].precond.iter().any(|p| p.name.matches(name))))
}

fn is_final(plan: &PlanProgram, step: usize, name: &RefName) -> bool {
    step + 1 == plan.steps().len()
        || plan
            .flows()
            .iter()
            .any(|f| f.unit.unit_arg_type == UnitArgType::Product && f.succ.is_none() && f.unit.ref_name.matches(name))
}

/// Operation-flow check. Each slot consumes the latest unconsumed emit of
/// an earlier step with the same reference (else the same component), or
/// is served by the reagents. Emits never consumed must be final products.
pub fn of_verify(plan: &PlanProgram, task: &DesignTask, artifact: &DslArtifact) -> Vec<Finding> {
    let steps = plan.steps();
    let mut out = Vec::new();
    // (step, emit position, consumed)
    let mut pool: Vec<(usize, usize, bool)> = Vec::new();
    for (t, step) in steps.iter().enumerate() {
        if artifact.operation(&step.operation).is_none() {
            out.push(Finding::new(Some(t), FindingKind::UnknownOperation, &step.operation, templates::unknown_operation(&step.operation, t + 1)));
        }
        for slot in &step.precond {
            let emit_of = |e: &(usize, usize, bool)| &steps[e.0].postcond[e.1].name;
            let exact = pool.iter().rposition(|e| !e.2 && *emit_of(e) == slot.name);
            let loose = || pool.iter().rposition(|e| !e.2 && emit_of(e).component() == slot.component());
            if let Some(k) = exact.or_else(loose) {
                pool[k].2 = true;
            } else if !task.reagents.contains(slot.component()) && !task.reagents.contains(&slot.name.to_string()) {
                let product = slot.name.to_string();
                out.push(Finding::new(Some(t), FindingKind::MissingInput, &product, templates::missing_input(&product, &step.operation, t + 1)));
            }
        }
        pool.extend((0..step.postcond.len()).map(|j| (t, j, false)));
    }
    for (t, j, consumed) in pool {
        let name = &steps[t].postcond[j].name;
        if !consumed && !is_final(plan, t, name) {
            let product = name.to_string();
            out.push(Finding::new(Some(t), FindingKind::UnusedOutput, &product, templates::unused_output(&product, &steps[t].operation, t + 1)));
        }
    }
    out
}

fn check_record(plan: &PlanProgram, record: &ProductFlowRecord, artifact: &DslArtifact, out: &mut Vec<Finding>) {
    let steps = plan.steps();
    let name = &record.unit.ref_name;
    let product = name.to_string();
    let anchor = plan.anchor_of(record);
    match anchor {
        Some(e) if record.pred.as_deref() != Some(steps[e].operation.as_str()) => out.push(Finding::new(
            Some(e),
            FindingKind::PredMismatch,
            &product,
            templates::pred_mismatch(&product, op_label(record.pred.as_deref()), &steps[e].operation, e + 1),
        )),
        None if record.pred.is_some() => out.push(Finding::new(
            None,
            FindingKind::PredMismatch,
            &product,
            templates::pred_unproduced(&product, op_label(record.pred.as_deref())),
        )),
        _ => {}
    }
    match consuming_step(steps, name, anchor.map_or(0, |e| e + 1)) {
        Some(c) if record.succ.as_deref() != Some(steps[c].operation.as_str()) => out.push(Finding::new(
            Some(c),
            FindingKind::SuccMismatch,
            &product,
            templates::succ_mismatch(&product, op_label(record.succ.as_deref()), &steps[c].operation, c + 1),
        )),
        None if record.succ.is_some() => out.push(Finding::new(
            None,
            FindingKind::SuccMismatch,
            &product,
            templates::succ_unconsumed(&product, op_label(record.succ.as_deref())),
        )),
        _ => {}
    }
    if let Some(model) = artifact.product_model(&record.unit.component) {
        for key in model.required_keys(record.unit.component_type) {
            if record.unit.property(&key).is_none() {
                out.push(Finding::new(anchor, FindingKind::PropertyGap, &product, templates::property_gap(&product, &key)));
            }
        }
    }
}

/// Product-flow check: each record's pred and succ must name the steps
/// that emit and consume its reference, and it must carry the properties
/// its product model requires for its type.
pub fn pf_verify(plan: &PlanProgram, artifact: &DslArtifact) -> Result<Vec<Finding>, VerifyError> {
    if !plan.is_dual() {
        return Err(VerifyError::NotDual);
    }
    let mut out = Vec::new();
    for record in plan.flows() {
        check_record(plan, record, artifact, &mut out);
    }
    Ok(out)
}

/// Runs both threads in rounds, operation thread first, until a round adds
/// no new findings or `max_rounds` is reached. Operation-only plans are
/// checked by the operation thread alone.
pub fn reciprocative_verify(plan: &PlanProgram, task: &DesignTask, artifact: &DslArtifact, max_rounds: usize) -> Result<VerificationReport, VerifyError> {
    reciprocative_verify_with(plan, task, artifact, max_rounds, &VerifyOptions::default())
}

pub fn reciprocative_verify_with(
    plan: &PlanProgram,
    task: &DesignTask,
    artifact: &DslArtifact,
    max_rounds: usize,
    options: &VerifyOptions,
) -> Result<VerificationReport, VerifyError> {
    if max_rounds == 0 {
        return Err(VerifyError::NoRounds);
    }
    let mut all: Vec<Finding> = Vec::new();
    let mut rounds = 0;
    while rounds < max_rounds {
        rounds += 1;
        let mut round = of_verify(plan, task, artifact);
        if plan.is_dual() {
            round.extend(pf_verify(plan, artifact)?);
        }
        let before = all.len();
        for f in round {
            if !all.contains(&f) {
                all.push(f);
            }
        }
        if all.len() == before {
            break;
        }
    }
    Ok(finish(plan, all, rounds, options))
}

/// Report from the operation thread only.
pub fn verify_operation_flow(plan: &PlanProgram, task: &DesignTask, artifact: &DslArtifact, options: &VerifyOptions) -> VerificationReport {
    finish(plan, of_verify(plan, task, artifact), 1, options)
}

fn finish(plan: &PlanProgram, all: Vec<Finding>, rounds: usize, options: &VerifyOptions) -> VerificationReport {
    let forgiven = |f: &Finding| {
        f.kind == FindingKind::MissingInput
            && usize::try_from(f.step_index)
                .ok()
                .and_then(|i| plan.steps().get(i))
                .is_some_and(|s| options.prep_verbs.iter().any(|v| *v == s.operation))
    };
    let (mut warnings, mut findings): (Vec<Finding>, Vec<Finding>) = all.into_iter().partition(forgiven);
    findings.sort_by_key(|f| f.step_index);
    warnings.sort_by_key(|f| f.step_index);
    VerificationReport { pass: findings.is_empty(), rounds, findings, warnings }
}

/// Feedback text: one message per finding in step order, or `OK`.
pub fn render_feedback(findings: &[Finding]) -> String {
    if findings.is_empty() {
        return "OK".to_string();
    }
    let mut sorted: Vec<&Finding> = findings.iter().collect();
    sorted.sort_by_key(|f| f.step_index);
    sorted.iter().map(|f| f.message.as_str()).collect::<Vec<_>>().join("\n")
}
