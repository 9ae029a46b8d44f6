//! Random patterns for unification properties.

use proptest::prelude::*;
use protodsl::function::fit_value_model;
use protodsl::{parse_quantity, ComponentType, DiscreteLevel, GpKernel, Pattern, SourceRef, ValueKind, ValueModel};

pub fn discrete(levels: &[(&str, usize)]) -> ValueModel {
    ValueModel {
        kind: ValueKind::Discrete,
        discrete: levels.iter().map(|(v, n)| DiscreteLevel { value: parse_quantity(v), count: *n }).collect(),
        interval: None,
        gp: None,
    }
}

pub fn arb_type() -> impl Strategy<Value = Option<ComponentType>> {
    prop_oneof![Just(None), Just(Some(ComponentType::Liquid)), Just(Some(ComponentType::Gas)), Just(Some(ComponentType::Solid))]
}

pub fn arb_model() -> impl Strategy<Value = ValueModel> {
    prop_oneof![
        prop::collection::vec((1u32..5, 1usize..4), 1..3).prop_map(|ls| {
            let texts: Vec<(String, usize)> = ls.iter().map(|(v, n)| (format!("{} min", v * 5), *n)).collect();
            let mut seen = std::collections::BTreeSet::new();
            let levels: Vec<(&str, usize)> = texts.iter().filter(|(t, _)| seen.insert(t.clone())).map(|(t, n)| (t.as_str(), *n)).collect();
            discrete(&levels)
        }),
        prop::collection::vec(1.0f64..100.0, 12..20).prop_map(|xs| {
            let qs: Vec<_> = xs.iter().map(|x| protodsl::Quantity::scalar(x.round(), "min")).collect();
            fit_value_model(&qs, None, &GpKernel::default()).unwrap()
        }),
    ]
}

pub fn arb_pattern() -> impl Strategy<Value = Pattern> {
    (
        prop::collection::vec(arb_type(), 0..3),
        prop::collection::vec(arb_type(), 0..2),
        prop::option::of(prop::sample::select(vec!["centrifuge", "incubator"])),
        prop::collection::btree_map(prop::sample::select(vec!["duration", "pace", "temperature"]), arb_model(), 0..3),
        prop::collection::vec((0usize..5, 0usize..3), 1..4),
    )
        .prop_map(|(slots, emits, device, model, examples)| {
            Pattern::new(
                slots,
                emits,
                device.map(str::to_string),
                model.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
                examples.into_iter().map(|(p, s)| SourceRef { protocol: format!("p{p}"), step: s }).collect(),
            )
        })
}
