//! Turning a cluster of instance actions into a pattern.

use std::collections::BTreeMap;

use super::features::{device_token, key_token, postcond_token, precond_token};
use super::value_model::fit_value_model;
use crate::model::{ComponentType, HyperParams, InstanceAction, Pattern, Quantity};

/// Most frequent token; ties go to the lexicographically smaller token.
fn mode<'a>(members: &[&'a InstanceAction], token: impl Fn(&InstanceAction) -> String) -> Option<(String, &'a InstanceAction)> {
    let mut counts: BTreeMap<String, (usize, &InstanceAction)> = BTreeMap::new();
    for &m in members {
        counts.entry(token(m)).or_insert((0, m)).0 += 1;
    }
    let mut best: Option<(String, usize, &InstanceAction)> = None;
    for (t, (n, a)) in counts {
        if best.as_ref().is_none_or(|b| n > b.1) {
            best = Some((t, n, a));
        }
    }
    best.map(|(t, _, a)| (t, a))
}

/// Builds a pattern from cluster members: modal slot and emit signatures,
/// modal device and key set, value models fitted per key, and the members'
/// sources as examples.
pub fn materialize(members: &[&InstanceAction], hyper: &HyperParams) -> Pattern {
    let types = |refs: &[crate::model::SlotRef]| -> Vec<Option<ComponentType>> { refs.iter().map(|s| s.component_type).collect() };
    let slot_args = mode(members, precond_token).map(|(_, a)| types(&a.precond)).unwrap_or_default();
    let emit_args = mode(members, postcond_token).map(|(_, a)| types(&a.postcond)).unwrap_or_default();
    let device = mode(members, device_token).and_then(|(_, a)| a.device.clone());
    let keys: Vec<String> = mode(members, key_token).map(|(_, a)| a.config.keys().cloned().collect()).unwrap_or_default();
    let mut config_model = BTreeMap::new();
    for key in keys {
        let values: Vec<Quantity> = members.iter().filter_map(|m| m.config.get(&key).cloned()).collect();
        if let Some(model) = fit_value_model(&values, hyper.gp_mean, &hyper.gp_kernel) {
            config_model.insert(key, model);
        }
    }
    let mut examples: Vec<_> = members.iter().map(|m| m.source.clone()).collect();
    examples.sort();
    examples.dedup();
    Pattern::new(slot_args, emit_args, device, config_model, examples)
}
