//! Flattening plans and text into tokens, and tokens into vectors.

use crate::model::{OpStep, PlanProgram, ProductFlowRecord, SlotRef, UnitArgType};

use super::vector::{SparseVector, TfIdf};

fn slot_tokens(prefix: &str, refs: &[SlotRef], out: &mut Vec<String>) {
    for (j, r) in refs.iter().enumerate() {
        out.push(format!("{prefix}/{j}/RefName:{}", r.name));
        if let Some(t) = r.component_type {
            out.push(format!("{prefix}/{j}/ComponentType:{t}"));
        }
    }
}

fn step_tokens(i: usize, s: &OpStep, out: &mut Vec<String>) {
    let base = format!("steps/{i}");
    out.push(format!("{base}/Operation:{}", s.operation));
    slot_tokens(&format!("{base}/Precond/SlotArg"), &s.precond, out);
    if let Some(d) = &s.device {
        out.push(format!("{base}/Execution/DeviceType:{d}"));
    }
    for (k, v) in &s.config {
        out.push(format!("{base}/Execution/Config/{k}:{v}"));
    }
    slot_tokens(&format!("{base}/Postcond/EmitArg"), &s.postcond, out);
}

fn flow_tokens(k: usize, f: &ProductFlowRecord, out: &mut Vec<String>) {
    let base = format!("flows/{k}");
    if let Some(p) = &f.pred {
        out.push(format!("{base}/Pred:{p}"));
    }
    let u = &f.unit;
    out.push(format!("{base}/FlowUnit/RefName:{}", u.ref_name));
    if let Some(t) = u.component_type {
        out.push(format!("{base}/FlowUnit/ComponentType:{t}"));
    }
    out.push(format!("{base}/FlowUnit/UnitArgType:{}", u.unit_arg_type.as_str()));
    if let Some(v) = &u.vol {
        out.push(format!("{base}/FlowUnit/Vol:{v}"));
    }
    if let Some(c) = &u.container {
        out.push(format!("{base}/FlowUnit/Container:{c}"));
    }
    for (key, v) in &u.cond {
        out.push(format!("{base}/FlowUnit/Cond/{key}:{v}"));
    }
    if let Some(s) = &f.succ {
        out.push(format!("{base}/Succ:{s}"));
    }
}

/// Depth-first `path:value` tokens of a whole plan.
pub fn plan_tokens(plan: &PlanProgram) -> Vec<String> {
    let mut out = Vec::new();
    for (i, s) in plan.steps().iter().enumerate() {
        step_tokens(i, s, &mut out);
    }
    for (k, f) in plan.flows().iter().enumerate() {
        flow_tokens(k, f, &mut out);
    }
    out
}

/// Tokens of a plan's final products: the last step's emits and product
/// records nothing consumes.
pub fn final_product_tokens(plan: &PlanProgram) -> Vec<String> {
    let mut out = Vec::new();
    let mut push = |component: &str, t: Option<crate::model::ComponentType>| {
        out.push(format!("product:{component}"));
        if let Some(t) = t {
            out.push(format!("product:{component}:{t}"));
        }
    };
    if let Some(last) = plan.steps().last() {
        for e in &last.postcond {
            push(e.component(), e.component_type);
        }
    }
    for f in plan.flows().iter().filter(|f| f.unit.unit_arg_type == UnitArgType::Product && f.succ.is_none()) {
        push(&f.unit.component, f.unit.component_type);
    }
    out.sort();
    out.dedup();
    out
}

/// Lowercased whitespace tokens.
pub fn text_tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

/// What a metric compares: a whole plan or free text.
#[derive(Debug, Clone, Copy)]
pub enum Serializable<'a> {
    Plan(&'a PlanProgram),
    Text(&'a str),
}

/// Deterministic token sequence of a plan or objective text.
pub fn serialize_for_similarity(x: Serializable<'_>) -> Vec<String> {
    match x {
        Serializable::Plan(p) => plan_tokens(p),
        Serializable::Text(t) => text_tokens(t),
    }
}

/// Maps token documents into a shared vector space.
pub trait Vectorizer: Send + Sync {
    fn vectorize(&self, docs: &[Vec<String>]) -> Vec<SparseVector>;
}

/// TF-IDF weighting, either fitted on a reference corpus or, when none is
/// given, on the documents being compared.
#[derive(Debug, Clone, Default)]
pub struct TfIdfVectorizer {
    pub fitted: Option<TfIdf>,
}

impl TfIdfVectorizer {
    pub fn fit_corpus(docs: &[Vec<String>]) -> Self {
        Self { fitted: Some(TfIdf::fit(docs)) }
    }
}

impl Vectorizer for TfIdfVectorizer {
    fn vectorize(&self, docs: &[Vec<String>]) -> Vec<SparseVector> {
        let local;
        let model = match &self.fitted {
            Some(m) => m,
            None => {
                local = TfIdf::fit(docs);
                &local
            }
        };
        docs.iter().map(|d| model.transform(d)).collect()
    }
}
