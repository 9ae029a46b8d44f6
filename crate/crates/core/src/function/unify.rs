//! Merging equivalent patterns of one operation.

use std::collections::BTreeMap;

use super::value_model::merge_value_models;
use crate::model::{ComponentType, Pattern};

type EquivalenceKey = (usize, usize, Vec<String>);

/// Patterns are equivalent when slot count, emit count and config key set
/// agree.
pub fn equivalence_key(p: &Pattern) -> EquivalenceKey {
    (p.slot_arg_num, p.emit_arg_num, p.config_model.keys().cloned().collect())
}

fn merge_args(a: &[Option<ComponentType>], b: &[Option<ComponentType>]) -> Vec<Option<ComponentType>> {
    a.iter().zip(b).map(|(x, y)| if x == y { *x } else { None }).collect()
}

/// Device with the most examples; ties go to the smaller name, with no
/// device last.
fn modal_device(group: &[Pattern]) -> Option<String> {
    let mut weight: BTreeMap<Option<&str>, usize> = BTreeMap::new();
    for p in group {
        *weight.entry(p.device_type.as_deref()).or_insert(0) += p.examples.len();
    }
    let mut best: Option<(Option<&str>, usize)> = None;
    for (d, w) in weight {
        let better = match best {
            None => true,
            Some((bd, bw)) => w > bw || (w == bw && bd.is_none() && d.is_some()),
        };
        if better {
            best = Some((d, w));
        }
    }
    best.and_then(|(d, _)| d.map(str::to_string))
}

fn merge_group(mut group: Vec<Pattern>) -> Pattern {
    if group.len() == 1 {
        return group.pop().expect("non-empty group");
    }
    group.sort_by_cached_key(|p| serde_json::to_string(p).expect("patterns serialize"));
    let device = modal_device(&group);
    let mut iter = group.into_iter();
    let mut acc = iter.next().expect("non-empty group");
    for p in iter {
        acc.slot_args = merge_args(&acc.slot_args, &p.slot_args);
        acc.emit_args = merge_args(&acc.emit_args, &p.emit_args);
        for (key, model) in p.config_model {
            let merged = match acc.config_model.get(&key) {
                Some(existing) => merge_value_models(existing, &model),
                None => model,
            };
            acc.config_model.insert(key, merged);
        }
        acc.examples.extend(p.examples);
    }
    acc.examples.sort();
    acc.examples.dedup();
    acc.device_type = device;
    acc
}

/// Merges equivalent patterns. Slot and emit types that disagree become
/// wildcards, value models are pooled and examples unioned. The result is
/// sorted canonically, so it does not depend on input order, and applying
/// the function again changes nothing.
pub fn unify_interfaces(patterns: Vec<Pattern>) -> Vec<Pattern> {
    let mut groups: BTreeMap<EquivalenceKey, Vec<Pattern>> = BTreeMap::new();
    for p in patterns {
        groups.entry(equivalence_key(&p)).or_default().push(p);
    }
    groups.into_values().map(merge_group).collect()
}
