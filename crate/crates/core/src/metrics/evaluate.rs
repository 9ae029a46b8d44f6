//! Six-dimensional consistency between a designed plan and a reference.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::align::{iou_set, sim_exec, AlignParams};
use super::serialize::{final_product_tokens, plan_tokens, TfIdfVectorizer, Vectorizer};
use super::vector::sim_vector;
use crate::model::PlanProgram;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricVector {
    pub iou_op: f64,
    pub iou_prod: f64,
    pub iou_dev: f64,
    pub sim_exec: f64,
    pub sim_goal: f64,
    pub sim_param: f64,
}

impl MetricVector {
    pub const NAMES: [&'static str; 6] = ["iou_op", "iou_prod", "iou_dev", "sim_exec", "sim_goal", "sim_param"];

    pub fn as_array(&self) -> [f64; 6] {
        [self.iou_op, self.iou_prod, self.iou_dev, self.sim_exec, self.sim_goal, self.sim_param]
    }

    pub fn in_range(&self) -> bool {
        self.as_array().iter().all(|v| (0.0..=1.0).contains(v))
    }
}

pub fn opcode_set(plan: &PlanProgram) -> BTreeSet<String> {
    plan.steps().iter().map(|s| s.operation.clone()).collect()
}

/// Components named anywhere in the plan, initial reagents included.
pub fn product_set(plan: &PlanProgram) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = BTreeSet::new();
    for s in plan.steps() {
        out.extend(s.precond.iter().chain(&s.postcond).map(|r| r.component().to_string()));
    }
    out.extend(plan.flows().iter().map(|f| f.unit.component.clone()));
    out
}

pub fn device_set(plan: &PlanProgram) -> BTreeSet<String> {
    plan.steps().iter().filter_map(|s| s.device.clone()).collect()
}

/// Cosine of two token documents; two empty documents score 1.
pub fn token_similarity(a: Vec<String>, b: Vec<String>, vectorizer: &dyn Vectorizer) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => {
            let v = vectorizer.vectorize(&[a, b]);
            sim_vector(&v[0], &v[1])
        }
    }
}

/// Scores a plan against a reference with default alignment parameters and
/// pair-fitted TF-IDF vectors.
pub fn evaluate_pair(plan: &PlanProgram, truth: &PlanProgram) -> MetricVector {
    evaluate_pair_with(plan, truth, &AlignParams::default(), &TfIdfVectorizer::default())
}

/// Scores a plan against a reference. The goal dimension compares the
/// plans' final products, the parameter dimension their full serialization.
pub fn evaluate_pair_with(plan: &PlanProgram, truth: &PlanProgram, params: &AlignParams, vectorizer: &dyn Vectorizer) -> MetricVector {
    MetricVector {
        iou_op: iou_set(&opcode_set(plan), &opcode_set(truth)),
        iou_prod: iou_set(&product_set(plan), &product_set(truth)),
        iou_dev: iou_set(&device_set(plan), &device_set(truth)),
        sim_exec: sim_exec(&plan.opcodes(), &truth.opcodes(), params),
        sim_goal: token_similarity(final_product_tokens(plan), final_product_tokens(truth), vectorizer),
        sim_param: token_similarity(plan_tokens(plan), plan_tokens(truth), vectorizer),
    }
}
