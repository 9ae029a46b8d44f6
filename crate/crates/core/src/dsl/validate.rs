use std::collections::BTreeSet;

use super::{DiagnosticKind as Kind, ParseDiagnostic};
use crate::model::{ComponentType, DslArtifact, PlanProgram, SlotRef};

/// Checks a plan against the vocabulary of a fitted artifact. An empty
/// result means the plan is grammatically admissible.
pub fn validate_against_artifact(plan: &PlanProgram, artifact: &DslArtifact) -> Vec<ParseDiagnostic> {
    let mut out = Vec::new();
    for (i, step) in plan.steps().iter().enumerate() {
        let base = format!("/steps/{i}");
        match artifact.operation(&step.operation) {
            None => out.push(ParseDiagnostic::new(
                format!("{base}/Operation"),
                Kind::GrammarViolation,
                format!("operation `{}` is not defined", step.operation),
            )),
            Some(op) => {
                let known: BTreeSet<&str> = op.patterns.iter().flat_map(|p| p.config_model.keys()).map(String::as_str).collect();
                for key in step.config.keys() {
                    if !known.contains(key.as_str()) {
                        out.push(ParseDiagnostic::new(
                            format!("{base}/Execution/Config/{key}"),
                            Kind::UnknownKey,
                            format!("`{key}` is not a configuration key of `{}`", step.operation),
                        ));
                    }
                }
            }
        }
        if let Some(device) = &step.device {
            if !artifact.device_catalog.contains(device) {
                out.push(ParseDiagnostic::new(
                    format!("{base}/Execution/DeviceType"),
                    Kind::GrammarViolation,
                    format!("device `{device}` is not in the catalog"),
                ));
            }
        }
        for (section, args) in [("Precond/SlotArg", &step.precond), ("Postcond/EmitArg", &step.postcond)] {
            for (j, arg) in args.iter().enumerate() {
                check_type(artifact, arg, &format!("{base}/{section}/{j}/ComponentType"), &mut out);
            }
        }
    }
    for (j, flow) in plan.flows().iter().enumerate() {
        let path = format!("/flows/{j}/FlowUnit/ComponentType");
        check_type_of(artifact, &flow.unit.component, flow.unit.component_type, &path, &mut out);
    }
    out
}

fn check_type(artifact: &DslArtifact, arg: &SlotRef, path: &str, out: &mut Vec<ParseDiagnostic>) {
    check_type_of(artifact, arg.component(), arg.component_type, path, out);
}

/// A typed unit contradicts its product model when the model has observed
/// typed records and never this type.
fn check_type_of(
    artifact: &DslArtifact,
    component: &str,
    component_type: Option<ComponentType>,
    path: &str,
    out: &mut Vec<ParseDiagnostic>,
) {
    let (Some(t), Some(model)) = (component_type, artifact.product_model(component)) else { return };
    if !model.phase_conditioned.is_empty() && !model.phase_conditioned.contains_key(&t) {
        let seen: Vec<&str> = model.phase_conditioned.keys().map(|t| t.as_str()).collect();
        out.push(ParseDiagnostic::new(
            path,
            Kind::GrammarViolation,
            format!("`{component}` is {t} here but only observed as {}", seen.join(", ")),
        ));
    }
}
