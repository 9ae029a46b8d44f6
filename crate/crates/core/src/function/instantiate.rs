//! Grounding an operation interface in a concrete execution context.

use serde::{Deserialize, Serialize};

use crate::model::{ComponentType, FlowUnit, OpStep, OperationInterface, Pattern, RefName, SlotRef};

/// Units available as inputs and the outputs the step should produce.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InstantiationContext {
    pub available: Vec<FlowUnit>,
    pub desired_emits: Vec<FlowUnit>,
}

/// How a choice among several matching patterns was made.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TieBreak {
    ExampleCount,
    DeviceName,
    PatternIndex,
}

/// A grounded step with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instantiation {
    pub step: OpStep,
    pub pattern_index: usize,
    /// Set when more than one pattern matched.
    pub tie_break: Option<TieBreak>,
}

/// Assigns items to pattern positions. Typed items take positions of the
/// same type first, then wildcard positions; untyped items take wildcard
/// positions only, unless `untyped_any` is set. Returns the item index per
/// filled position, or `None` when some item cannot be placed.
fn assign(positions: &[Option<ComponentType>], items: &[Option<ComponentType>], untyped_any: bool) -> Option<Vec<Option<usize>>> {
    let mut filled: Vec<Option<usize>> = vec![None; positions.len()];
    let mut order: Vec<usize> = (0..items.len()).collect();
    // typed items first so wildcards are not used up early
    order.sort_by_key(|&i| items[i].is_none());
    for i in order {
        let exact = items[i].and_then(|t| (0..positions.len()).find(|&p| filled[p].is_none() && positions[p] == Some(t)));
        let slot = exact
            .or_else(|| (0..positions.len()).find(|&p| filled[p].is_none() && positions[p].is_none()))
            .or_else(|| if untyped_any && items[i].is_none() { (0..positions.len()).find(|&p| filled[p].is_none()) } else { None });
        filled[slot?] = Some(i);
    }
    Some(filled)
}

fn match_slots(p: &Pattern, available: &[FlowUnit]) -> Option<Vec<usize>> {
    let types: Vec<Option<ComponentType>> = available.iter().map(|u| u.component_type).collect();
    let mut picked: Vec<Option<usize>> = vec![None; p.slot_args.len()];
    let mut used = vec![false; available.len()];
    for pass in 0..2 {
        for (pos, want) in p.slot_args.iter().enumerate() {
            if picked[pos].is_some() || (pass == 0) == want.is_none() {
                continue;
            }
            let found = (0..available.len()).find(|&i| !used[i] && want.is_none_or(|t| types[i] == Some(t)));
            if let Some(i) = found {
                used[i] = true;
                picked[pos] = Some(i);
            }
        }
    }
    picked.into_iter().collect()
}

/// Grounds `op` in `ctx`.
///
/// A pattern matches when every slot can take a distinct available unit
/// (typed slots need a unit of that type) and every desired emit fits a
/// distinct emit position. Among matches the pattern with most examples
/// wins, then the smaller device name, then the earlier pattern. Config is
/// filled from each key's default value.
pub fn instantiate_interface(op: &OperationInterface, ctx: &InstantiationContext) -> Option<Instantiation> {
    let desired: Vec<Option<ComponentType>> = ctx.desired_emits.iter().map(|u| u.component_type).collect();
    let candidates: Vec<(usize, Vec<usize>, Vec<Option<usize>>)> = op
        .patterns
        .iter()
        .enumerate()
        .filter_map(|(k, p)| {
            let slots = match_slots(p, &ctx.available)?;
            let emits = assign(&p.emit_args, &desired, true)?;
            Some((k, slots, emits))
        })
        .collect();
    let rank = |k: usize| {
        let p = &op.patterns[k];
        (std::cmp::Reverse(p.examples.len()), p.device_type.clone().unwrap_or_default())
    };
    let best = candidates.iter().min_by(|a, b| rank(a.0).cmp(&rank(b.0)).then(a.0.cmp(&b.0)))?;
    let tie_break = (candidates.len() > 1).then(|| {
        let ties: Vec<usize> = candidates.iter().map(|c| c.0).filter(|&k| op.patterns[k].examples.len() == op.patterns[best.0].examples.len()).collect();
        if ties.len() == 1 {
            TieBreak::ExampleCount
        } else if ties.iter().filter(|&&k| rank(k) == rank(best.0)).count() == 1 {
            TieBreak::DeviceName
        } else {
            TieBreak::PatternIndex
        }
    });

    let (k, slots, emits) = best;
    let p = &op.patterns[*k];
    let unit_ref = |u: &FlowUnit| SlotRef::typed(u.ref_name.clone(), u.component_type);
    let mut step = OpStep::new(op.unique_name.clone());
    step.precond = slots.iter().map(|&i| unit_ref(&ctx.available[i])).collect();
    step.postcond = emits
        .iter()
        .enumerate()
        .map(|(pos, e)| match e {
            Some(i) => unit_ref(&ctx.desired_emits[*i]),
            None => SlotRef::typed(RefName::new(format!("{}_output", op.unique_name), Some(pos as u32)), p.emit_args[pos]),
        })
        .collect();
    step.device = p.device_type.clone();
    step.config = p.config_model.iter().filter_map(|(key, m)| m.default_value().map(|v| (key.clone(), v))).collect();
    Some(Instantiation { step, pattern_index: *k, tie_break })
}
