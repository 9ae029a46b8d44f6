//! Seeded plan mutations, each expected to trigger one finding kind.

use super::FindingKind;
use crate::model::{DesignTask, DslArtifact, PlanProgram, RefName, VOL_KEY};

/// A mutated plan with the finding kind it must provoke.
#[derive(Debug, Clone, PartialEq)]
pub struct Mutant {
    pub operator: &'static str,
    pub expected: FindingKind,
    pub plan: PlanProgram,
}

/// Removes a step together with the flow records it emits.
pub fn drop_step(plan: &PlanProgram, index: usize) -> PlanProgram {
    let flows: Vec<_> = plan.flows().iter().filter(|f| plan.anchor_of(f) != Some(index)).cloned().collect();
    let mut steps = plan.steps().to_vec();
    steps.remove(index);
    PlanProgram::new(steps, flows)
}

/// Renames one emit of a step, and the flow records naming it, so later
/// steps no longer find it.
pub fn rename_emit(plan: &PlanProgram, step: usize, position: usize) -> PlanProgram {
    let (mut steps, mut flows) = plan.clone().into_parts();
    let old = steps[step].postcond[position].name.clone();
    let new = RefName::new(format!("{}_renamed", old.component()), old.index());
    steps[step].postcond[position].name = new.clone();
    for f in flows.iter_mut().filter(|f| f.unit.ref_name == old) {
        f.unit.ref_name = new.clone();
        f.unit.component = new.component().to_string();
    }
    PlanProgram::new(steps, flows)
}

/// Replaces the pred of one flow record.
pub fn swap_pred(plan: &PlanProgram, flow: usize, pred: &str) -> PlanProgram {
    let (steps, mut flows) = plan.clone().into_parts();
    flows[flow].pred = Some(pred.to_string());
    PlanProgram::new(steps, flows)
}

/// Deletes a property from one flow record.
pub fn delete_property(plan: &PlanProgram, flow: usize, key: &str) -> PlanProgram {
    let (steps, mut flows) = plan.clone().into_parts();
    if key == VOL_KEY {
        flows[flow].unit.vol = None;
    } else {
        flows[flow].unit.cond.remove(key);
    }
    PlanProgram::new(steps, flows)
}

/// Later step consuming emit `position` of step `step`, by component.
fn consumer(plan: &PlanProgram, step: usize, position: usize) -> Option<usize> {
    let name = &plan.steps()[step].postcond[position].name;
    (step + 1..plan.steps().len()).find(|&i| plan.steps()[i].precond.iter().any(|p| p.component() == name.component()))
}

/// Every applicable mutant of a plan.
pub fn all_mutants(plan: &PlanProgram, task: &DesignTask, artifact: &DslArtifact) -> Vec<Mutant> {
    let steps = plan.steps();
    let mut out = Vec::new();
    for i in 0..steps.len() {
        let consumed: Vec<usize> = (0..steps[i].postcond.len()).filter(|&j| consumer(plan, i, j).is_some()).collect();
        if consumed.iter().any(|&j| !task.reagents.contains(steps[i].postcond[j].component())) {
            out.push(Mutant { operator: "drop producing step", expected: FindingKind::MissingInput, plan: drop_step(plan, i) });
        }
        if let Some(&j) = consumed.first() {
            out.push(Mutant { operator: "rename emit", expected: FindingKind::UnusedOutput, plan: rename_emit(plan, i, j) });
        }
    }
    for (k, f) in plan.flows().iter().enumerate() {
        if plan.anchor_of(f).is_some() {
            out.push(Mutant { operator: "swap pred", expected: FindingKind::PredMismatch, plan: swap_pred(plan, k, "mutated_operation") });
        }
        if let Some(model) = artifact.product_model(&f.unit.component) {
            if let Some(key) = model.required_keys(f.unit.component_type).into_iter().find(|key| f.unit.property(key).is_some()) {
                out.push(Mutant { operator: "delete property", expected: FindingKind::PropertyGap, plan: delete_property(plan, k, &key) });
            }
        }
    }
    out
}
