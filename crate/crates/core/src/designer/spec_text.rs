//! DSL specification text injected into prompts.

use std::collections::BTreeSet;

use serde_json::{json, Map, Value};

use crate::model::{ComponentType, DslArtifact, OperationInterface, Pattern, ProductModel};

fn arg_types(types: &[Option<ComponentType>]) -> Value {
    types.iter().map(|t| t.map_or(Value::Null, |t| Value::from(t.as_str()))).collect()
}

fn pattern_json(p: &Pattern) -> Value {
    let config: Map<String, Value> = p
        .config_model
        .iter()
        .map(|(k, m)| (k.clone(), m.default_value().map_or(Value::Null, |q| Value::from(q.to_string()))))
        .collect();
    json!({
        "Precond": {"SlotArgNum": p.slot_arg_num, "SlotArg": arg_types(&p.slot_args)},
        "Execution": {"DeviceType": p.device_type, "Config": config},
        "Postcond": {"EmitArgNum": p.emit_arg_num, "EmitArg": arg_types(&p.emit_args)},
    })
}

fn operation_json(op: &OperationInterface) -> Value {
    json!({
        "Operation": op.unique_name,
        "Patterns": op.patterns.iter().map(pattern_json).collect::<Vec<_>>(),
    })
}

fn product_json(m: &ProductModel) -> Value {
    let phases: Map<String, Value> =
        m.phase_conditioned.iter().map(|(t, keys)| (t.as_str().to_string(), json!(keys))).collect();
    json!({
        "Component": m.component,
        "Pred": m.pred_ops.keys().collect::<Vec<_>>(),
        "Succ": m.succ_ops.keys().collect::<Vec<_>>(),
        "Properties": m.property_keys,
        "PhaseProperties": phases,
    })
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values always serialize")
}

/// Operation-view specification of the named operations, or of every
/// operation when none of the names is defined.
pub fn operation_spec(artifact: &DslArtifact, names: &BTreeSet<String>) -> String {
    let mut ops: Vec<&OperationInterface> = artifact.operations.iter().filter(|o| names.contains(&o.unique_name)).collect();
    if ops.is_empty() {
        ops = artifact.operations.iter().collect();
    }
    pretty(&Value::Array(ops.into_iter().map(operation_json).collect()))
}

/// Product-view specification of the named components, or of every
/// component when none of the names is modeled.
pub fn product_spec(artifact: &DslArtifact, components: &BTreeSet<String>) -> String {
    let mut models: Vec<&ProductModel> =
        artifact.product_models.iter().filter(|m| components.contains(&m.component)).collect();
    if models.is_empty() {
        models = artifact.product_models.iter().collect();
    }
    pretty(&Value::Array(models.into_iter().map(product_json).collect()))
}
