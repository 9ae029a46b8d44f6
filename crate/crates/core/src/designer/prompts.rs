//! Prompt templates and slot substitution.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("template slot {{{0}}} was not supplied")]
    MissingSlot(String),
}

impl TemplateError {
    pub fn slot(&self) -> &str {
        match self {
            Self::MissingSlot(s) => s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptId {
    Retrieve,
    NlPlan,
    NlToPseudocode,
    PseudocodePlan,
    DslPlanOperation,
    DslPlanDual,
    RefineOperation,
    RefineDual,
}

impl PromptId {
    pub const ALL: [PromptId; 8] = [
        Self::Retrieve,
        Self::NlPlan,
        Self::NlToPseudocode,
        Self::PseudocodePlan,
        Self::DslPlanOperation,
        Self::DslPlanDual,
        Self::RefineOperation,
        Self::RefineDual,
    ];

    pub fn template(self) -> &'static str {
        match self {
            Self::Retrieve => include_str!("prompts/retrieve.txt"),
            Self::NlPlan => include_str!("prompts/nl_plan.txt"),
            Self::NlToPseudocode => include_str!("prompts/nl_to_pseudocode.txt"),
            Self::PseudocodePlan => include_str!("prompts/pseudocode_plan.txt"),
            Self::DslPlanOperation => include_str!("prompts/dsl_plan_operation.txt"),
            Self::DslPlanDual => include_str!("prompts/dsl_plan_dual.txt"),
            Self::RefineOperation => include_str!("prompts/refine_operation.txt"),
            Self::RefineDual => include_str!("prompts/refine_dual.txt"),
        }
    }

    /// Slot names in first-appearance order, without duplicates.
    pub fn slots(self) -> Vec<&'static str> {
        let mut seen = BTreeSet::new();
        SLOT.captures_iter(self.template())
            .map(|c| c.get(1).expect("slot group").as_str())
            .filter(|s| seen.insert(*s))
            .collect()
    }
}

static SLOT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{([A-Za-z][A-Za-z0-9 _-]*)\}").expect("slot regex"));

/// Substitutes every slot of `template`. Slot values are inserted verbatim
/// and never rescanned.
pub fn render_prompt(template: PromptId, slots: &BTreeMap<&str, String>) -> Result<String, TemplateError> {
    render_text(template.template(), slots)
}

pub fn render_text(text: &str, slots: &BTreeMap<&str, String>) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for c in SLOT.captures_iter(text) {
        let whole = c.get(0).expect("match");
        let name = c.get(1).expect("slot group").as_str();
        let value = slots.get(name).ok_or_else(|| TemplateError::MissingSlot(name.to_string()))?;
        out.push_str(&text[last..whole.start()]);
        out.push_str(value);
        last = whole.end();
    }
    out.push_str(&text[last..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fill(id: PromptId) -> BTreeMap<&'static str, String> {
        id.slots().into_iter().map(|s| (s, format!("<{s}>"))).collect()
    }

    #[test]
    fn every_template_renders_with_its_slots() {
        for id in PromptId::ALL {
            let out = render_prompt(id, &fill(id)).unwrap();
            assert!(!SLOT.is_match(&out), "{id:?} left a slot unfilled");
            assert_eq!(out, render_prompt(id, &fill(id)).unwrap());
        }
    }

    #[test]
    fn refine_header_and_missing_feedback() {
        let out = render_prompt(PromptId::RefineOperation, &fill(PromptId::RefineOperation)).unwrap();
        assert!(out.starts_with("Your task is to improve"));
        let mut slots = fill(PromptId::RefineOperation);
        slots.remove("feedback");
        assert_eq!(render_prompt(PromptId::RefineOperation, &slots), Err(TemplateError::MissingSlot("feedback".into())));
    }

    #[test]
    fn slot_names() {
        assert_eq!(PromptId::RefineDual.slots(), vec!["title", "details", "plan", "feedback"]);
        assert_eq!(
            PromptId::DslPlanDual.slots(),
            vec![
                "example protocol title",
                "example protocol description",
                "example plan",
                "title",
                "details",
                "Operation-DSL",
                "Product-DSL"
            ]
        );
        assert_eq!(PromptId::Retrieve.slots(), vec!["title", "context"]);
    }

    #[test]
    fn values_are_not_rescanned() {
        let slots = BTreeMap::from([("title", "{details}".to_string()), ("context", String::new())]);
        let out = render_prompt(PromptId::Retrieve, &slots).unwrap();
        assert!(out.contains("protocol for {details}."));
    }
}
