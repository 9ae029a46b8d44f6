//! Random valid plans for round-trip properties.

use std::collections::BTreeMap;

use proptest::prelude::*;
use protodsl::{ComponentType, FlowUnit, OpStep, PlanProgram, ProductFlowRecord, Quantity, RefName, SlotRef, UnitArgType};

const OPS: &[&str] = &["centrifuge", "wash", "elute", "mix", "incubate", "add", "transfer", "bench-top_centrifuge"];
const COMPONENTS: &[&str] = &["cells", "lysate", "supernatant", "ethanol", "dna_pellet", "buffer_a", "tris-hcl"];
const DEVICES: &[&str] = &["centrifuge", "thermomixer", "water_bath", "vortexer"];
const KEYS: &[&str] = &["duration", "speed", "temperature", "volume", "acidity", "cycles"];
const UNITS: &[&str] = &["min", "x g", "°C", "mL", "µL", "", "%"];
const TOKENS: &[&str] = &["room temperature", "overnight", "on ice", "pH 7.4 buffer"];

fn pick(list: &'static [&'static str]) -> impl Strategy<Value = String> {
    prop::sample::select(list).prop_map(str::to_string)
}

pub fn arb_quantity() -> impl Strategy<Value = Quantity> {
    prop_oneof![
        (-20_000i32..20_000, 0u32..3, pick(UNITS)).prop_map(|(v, d, u)| Quantity::scalar(f64::from(v) / 10f64.powi(d as i32), u)),
        (0u32..500, 0u32..500, pick(UNITS)).prop_map(|(a, w, u)| Quantity::range(f64::from(a), f64::from(a + w), u).unwrap()),
        pick(TOKENS).prop_map(Quantity::token),
    ]
}

pub fn arb_ref() -> impl Strategy<Value = RefName> {
    (pick(COMPONENTS), prop::option::of(0u32..5)).prop_map(|(c, i)| RefName::new(c, i))
}

fn arb_config() -> impl Strategy<Value = BTreeMap<String, Quantity>> {
    prop::collection::btree_map(pick(KEYS), arb_quantity(), 0..4)
}

pub fn arb_step() -> impl Strategy<Value = OpStep> {
    (
        pick(OPS),
        prop::collection::vec(arb_ref(), 0..3),
        prop::option::of(pick(DEVICES)),
        arb_config(),
        prop::collection::vec(arb_ref(), 0..3),
    )
        .prop_map(|(op, pre, device, config, post)| {
            let mut s = OpStep::new(op);
            s.precond = pre.into_iter().map(SlotRef::new).collect();
            s.device = device;
            s.config = config;
            s.postcond = post.into_iter().map(SlotRef::new).collect();
            s
        })
}

pub fn arb_type() -> impl Strategy<Value = Option<ComponentType>> {
    prop::option::of(prop::sample::select(ComponentType::ALL.to_vec()))
}

pub fn arb_flow() -> impl Strategy<Value = ProductFlowRecord> {
    (
        prop::option::of(pick(OPS)),
        arb_ref(),
        arb_type(),
        prop::option::of(arb_quantity()),
        prop::option::of(pick(&["tube", "spin_column", "flask"])),
        arb_config(),
        prop::option::of(pick(OPS)),
    )
        .prop_map(|(pred, name, component_type, vol, container, cond, succ)| ProductFlowRecord {
            unit: FlowUnit {
                component: name.component().to_string(),
                component_type,
                ref_name: name,
                unit_arg_type: if pred.is_some() { UnitArgType::Product } else { UnitArgType::Material },
                vol,
                container,
                cond,
            },
            pred,
            succ,
        })
}

pub fn arb_plan() -> impl Strategy<Value = PlanProgram> {
    prop_oneof![
        prop::collection::vec(arb_step(), 0..8).prop_map(PlanProgram::operation_only),
        (prop::collection::vec(arb_step(), 0..8), prop::collection::vec(arb_flow(), 1..10))
            .prop_map(|(steps, flows)| PlanProgram::new(steps, flows)),
    ]
}
