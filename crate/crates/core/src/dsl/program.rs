//! Operation-view and product-view programs as JSON.
//!
//! Operation objects carry `Operation`, `Precond{SlotArgNum, SlotArg}`,
//! `Execution{DeviceType, Config}` and `Postcond{EmitArgNum, EmitArg}`.
//! Product objects carry `Pred`, `FlowUnit{...}` and `Succ`. A dual plan is a
//! single array with each flow record placed after the step that emits it.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{Map, Value};

use super::{DiagnosticKind as Kind, DslError, ParseDiagnostic, Parsed};
use crate::model::{
    canonicalize, parse_quantity, ComponentType, FlowUnit, OpStep, PlanProgram, ProductFlowRecord, Quantity, RefName,
    SlotRef, UnitArgType,
};

const OP_KEYS: [&str; 4] = ["Operation", "Precond", "Execution", "Postcond"];
const FLOW_KEYS: [&str; 3] = ["Pred", "FlowUnit", "Succ"];
const UNIT_KEYS: [&str; 7] = ["Component", "ComponentType", "RefName", "UnitArgType", "Vol", "Container", "Cond"];

#[derive(Default)]
struct Diags(Vec<ParseDiagnostic>);

impl Diags {
    fn push(&mut self, path: &str, kind: Kind, message: impl Into<String>) {
        self.0.push(ParseDiagnostic::new(path, kind, message));
    }

    fn finish<T>(self, value: T) -> Result<Parsed<T>, DslError> {
        if self.0.iter().any(|d| d.kind.is_fatal()) {
            Err(DslError::Parse(self.0))
        } else {
            Ok(Parsed { value, warnings: self.0 })
        }
    }
}

/// Returns the JSON payload of a model response: the first fenced block when
/// there is one, otherwise the text from the first `[` or `{`.
pub fn extract_json_block(text: &str) -> &str {
    for fence in ["```json", "```JSON", "```"] {
        if let Some(start) = text.find(fence) {
            let body = &text[start + fence.len()..];
            let end = body.find("```").unwrap_or(body.len());
            return body[..end].trim();
        }
    }
    match text.find(['[', '{']) {
        Some(i) => text[i..].trim(),
        None => text.trim(),
    }
}

/// Splits input into top-level objects. Accepts an array, one object, or a
/// sequence of objects (optionally comma-separated).
fn top_level(text: &str, diags: &mut Diags) -> Vec<Value> {
    let mut values = Vec::new();
    let stream = serde_json::Deserializer::from_str(text).into_iter::<Value>();
    let mut failed = None;
    for v in stream {
        match v {
            Ok(v) => values.push(v),
            Err(e) => {
                failed = Some(e);
                break;
            }
        }
    }
    if let Some(err) = failed {
        match serde_json::from_str::<Value>(&format!("[{text}]")) {
            Ok(v) => values = vec![v],
            Err(_) => {
                diags.push("/", Kind::BadType, format!("malformed JSON: {err}"));
                return Vec::new();
            }
        }
    }
    let mut out = Vec::new();
    for v in values {
        match v {
            Value::Array(items) => out.extend(items),
            other => out.push(other),
        }
    }
    out
}

enum Item {
    Step(OpStep),
    Flow(ProductFlowRecord),
}

fn parse_items(text: &str, diags: &mut Diags) -> Vec<Item> {
    let mut items = Vec::new();
    for (k, value) in top_level(text, diags).into_iter().enumerate() {
        let path = format!("/{k}");
        let Value::Object(obj) = value else {
            diags.push(&path, Kind::BadType, "expected an object");
            continue;
        };
        if obj.contains_key("Operation") {
            if let Some(step) = parse_step(&obj, &path, diags) {
                items.push(Item::Step(step));
            }
        } else if FLOW_KEYS.iter().any(|key| obj.contains_key(*key)) {
            if let Some(flow) = parse_flow(&obj, &path, diags) {
                items.push(Item::Flow(flow));
            }
        } else {
            diags.push(&path, Kind::MissingField, "object has neither `Operation` nor `FlowUnit`");
        }
    }
    items
}

/// Parses an operation-view program.
pub fn parse_op_program(text: &str) -> Result<Parsed<Vec<OpStep>>, DslError> {
    let mut diags = Diags::default();
    let mut steps = Vec::new();
    for (k, item) in parse_items(text, &mut diags).into_iter().enumerate() {
        match item {
            Item::Step(s) => steps.push(s),
            Item::Flow(_) => diags.push(&format!("/{k}"), Kind::MissingField, "missing `Operation`"),
        }
    }
    diags.finish(steps)
}

/// Parses a product-view program.
pub fn parse_product_program(text: &str) -> Result<Parsed<Vec<ProductFlowRecord>>, DslError> {
    let mut diags = Diags::default();
    let mut flows = Vec::new();
    for (k, item) in parse_items(text, &mut diags).into_iter().enumerate() {
        match item {
            Item::Flow(f) => flows.push(f),
            Item::Step(_) => diags.push(&format!("/{k}"), Kind::MissingField, "missing `FlowUnit`"),
        }
    }
    diags.finish(flows)
}

/// Parses a plan whose objects may mix both views.
pub fn parse_plan(text: &str) -> Result<Parsed<PlanProgram>, DslError> {
    let mut diags = Diags::default();
    let (mut steps, mut flows) = (Vec::new(), Vec::new());
    for item in parse_items(text, &mut diags) {
        match item {
            Item::Step(s) => steps.push(s),
            Item::Flow(f) => flows.push(f),
        }
    }
    diags.finish(PlanProgram::new(steps, flows))
}

fn warn_unknown(obj: &Map<String, Value>, known: &[&str], path: &str, diags: &mut Diags) {
    for key in obj.keys() {
        if !known.contains(&key.as_str()) {
            diags.push(&format!("{path}/{key}"), Kind::UnknownKey, format!("unknown key `{key}`"));
        }
    }
}

fn as_object<'a>(value: Option<&'a Value>, path: &str, diags: &mut Diags) -> Option<&'a Map<String, Value>> {
    match value {
        None | Some(Value::Null) => None,
        Some(Value::Object(m)) => Some(m),
        Some(_) => {
            diags.push(path, Kind::BadType, "expected an object");
            None
        }
    }
}

/// Reads an optional name; `""`, `"None"` and `null` mean absent.
fn opt_name(value: Option<&Value>, path: &str, diags: &mut Diags) -> Option<String> {
    match value {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => {
            let t = s.trim();
            if t.is_empty() || t.eq_ignore_ascii_case("none") {
                None
            } else {
                match canonicalize(t) {
                    Ok(c) => Some(c),
                    Err(e) => {
                        diags.push(path, Kind::GrammarViolation, e.to_string());
                        None
                    }
                }
            }
        }
        Some(_) => {
            diags.push(path, Kind::BadType, "expected a string");
            None
        }
    }
}

fn quantity(value: &Value, path: &str, diags: &mut Diags) -> Option<Quantity> {
    match value {
        Value::String(s) if s.trim().is_empty() => None,
        Value::String(s) => Some(parse_quantity(s)),
        Value::Number(n) => n.as_f64().map(|v| Quantity::scalar(v, "")),
        Value::Null => None,
        _ => {
            diags.push(path, Kind::BadType, "expected a string or number");
            None
        }
    }
}

fn config_map(value: Option<&Value>, path: &str, diags: &mut Diags) -> BTreeMap<String, Quantity> {
    let mut out = BTreeMap::new();
    let Some(obj) = as_object(value, path, diags) else { return out };
    for (raw, v) in obj {
        let key_path = format!("{path}/{raw}");
        let key = match canonicalize(raw) {
            Ok(k) => k,
            Err(e) => {
                diags.push(&key_path, Kind::GrammarViolation, e.to_string());
                continue;
            }
        };
        if let Some(q) = quantity(v, &key_path, diags) {
            if out.insert(key.clone(), q).is_some() {
                diags.push(&key_path, Kind::GrammarViolation, format!("duplicate key `{key}`"));
            }
        }
    }
    out
}

fn component_type(value: Option<&Value>, path: &str, diags: &mut Diags) -> Option<ComponentType> {
    match value {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => match ComponentType::parse_label(s) {
            Ok(t) => t,
            Err(e) => {
                diags.push(path, Kind::GrammarViolation, e.to_string());
                None
            }
        },
        Some(_) => {
            diags.push(path, Kind::BadType, "expected a string");
            None
        }
    }
}

fn arg(value: &Value, path: &str, diags: &mut Diags) -> Option<SlotRef> {
    match value {
        Value::String(_) => opt_name(Some(value), path, diags).map(|n| SlotRef::new(RefName::parse(&n))),
        Value::Object(obj) => {
            warn_unknown(obj, &["RefName", "Component", "ComponentType"], path, diags);
            let name = obj.get("RefName").or_else(|| obj.get("Component"));
            let Some(name) = opt_name(name, &format!("{path}/RefName"), diags) else {
                diags.push(path, Kind::MissingField, "argument needs `RefName`");
                return None;
            };
            let t = component_type(obj.get("ComponentType"), &format!("{path}/ComponentType"), diags);
            Some(SlotRef::typed(RefName::parse(&name), t))
        }
        _ => {
            diags.push(path, Kind::BadType, "expected a string or object");
            None
        }
    }
}

/// Reads `{<num_key>, <arg_key>}` and checks the declared count.
fn arg_list(section: Option<&Value>, num_key: &str, arg_key: &str, path: &str, diags: &mut Diags) -> Vec<SlotRef> {
    let Some(obj) = as_object(section, path, diags) else { return Vec::new() };
    warn_unknown(obj, &[num_key, arg_key], path, diags);
    let arg_path = format!("{path}/{arg_key}");
    let args: Vec<SlotRef> = match obj.get(arg_key) {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => {
            items.iter().enumerate().filter_map(|(i, v)| arg(v, &format!("{arg_path}/{i}"), diags)).collect()
        }
        Some(v) => arg(v, &arg_path, diags).into_iter().collect(),
    };
    match obj.get(num_key) {
        None | Some(Value::Null) => {}
        Some(Value::Number(n)) => match n.as_u64() {
            Some(declared) if declared as usize == args.len() => {}
            Some(declared) => diags.push(
                &format!("{path}/{num_key}"),
                Kind::GrammarViolation,
                format!("declared {declared}, got {}", args.len()),
            ),
            None => diags.push(&format!("{path}/{num_key}"), Kind::BadType, "expected a non-negative integer"),
        },
        Some(_) => diags.push(&format!("{path}/{num_key}"), Kind::BadType, "expected an integer"),
    }
    args
}

fn parse_step(obj: &Map<String, Value>, path: &str, diags: &mut Diags) -> Option<OpStep> {
    warn_unknown(obj, &OP_KEYS, path, diags);
    let op_path = format!("{path}/Operation");
    let operation = match obj.get("Operation") {
        Some(Value::String(_)) => opt_name(obj.get("Operation"), &op_path, diags),
        _ => {
            diags.push(&op_path, Kind::BadType, "expected a string");
            None
        }
    };
    let Some(operation) = operation else {
        diags.push(&op_path, Kind::MissingField, "operation name is empty");
        return None;
    };
    let precond = arg_list(obj.get("Precond"), "SlotArgNum", "SlotArg", &format!("{path}/Precond"), diags);
    let postcond = arg_list(obj.get("Postcond"), "EmitArgNum", "EmitArg", &format!("{path}/Postcond"), diags);
    let exec_path = format!("{path}/Execution");
    let (device, config) = match as_object(obj.get("Execution"), &exec_path, diags) {
        Some(exec) => {
            warn_unknown(exec, &["DeviceType", "Config"], &exec_path, diags);
            (
                opt_name(exec.get("DeviceType"), &format!("{exec_path}/DeviceType"), diags),
                config_map(exec.get("Config"), &format!("{exec_path}/Config"), diags),
            )
        }
        None => (None, BTreeMap::new()),
    };
    Some(OpStep { operation, precond, device, config, postcond })
}

fn parse_flow(obj: &Map<String, Value>, path: &str, diags: &mut Diags) -> Option<ProductFlowRecord> {
    warn_unknown(obj, &FLOW_KEYS, path, diags);
    let pred = opt_name(obj.get("Pred"), &format!("{path}/Pred"), diags);
    let succ = opt_name(obj.get("Succ"), &format!("{path}/Succ"), diags);
    let unit_path = format!("{path}/FlowUnit");
    let Some(u) = as_object(obj.get("FlowUnit"), &unit_path, diags) else {
        diags.push(&unit_path, Kind::MissingField, "missing `FlowUnit`");
        return None;
    };
    warn_unknown(u, &UNIT_KEYS, &unit_path, diags);
    let component = opt_name(u.get("Component"), &format!("{unit_path}/Component"), diags);
    let ref_text = opt_name(u.get("RefName"), &format!("{unit_path}/RefName"), diags);
    let (component, ref_name) = match (component, ref_text) {
        (Some(c), Some(r)) => {
            let ref_name = RefName::parse(&r);
            if ref_name.component() != c && r != c {
                diags.push(
                    &format!("{unit_path}/RefName"),
                    Kind::GrammarViolation,
                    format!("reference `{r}` does not name component `{c}`"),
                );
            }
            (c, ref_name)
        }
        (Some(c), None) => {
            let ref_name = RefName::parse(&c);
            (c, ref_name)
        }
        (None, Some(r)) => {
            let ref_name = RefName::parse(&r);
            (ref_name.component().to_string(), ref_name)
        }
        (None, None) => {
            diags.push(&unit_path, Kind::MissingField, "flow unit needs `Component` or `RefName`");
            return None;
        }
    };
    let component_type = component_type(u.get("ComponentType"), &format!("{unit_path}/ComponentType"), diags);
    let arg_path = format!("{unit_path}/UnitArgType");
    let unit_arg_type = match u.get("UnitArgType") {
        None | Some(Value::Null) => {
            if pred.is_some() {
                UnitArgType::Product
            } else {
                UnitArgType::Material
            }
        }
        Some(Value::String(s)) if s.eq_ignore_ascii_case("MAT") => UnitArgType::Material,
        Some(Value::String(s)) if s.eq_ignore_ascii_case("PROD") => UnitArgType::Product,
        Some(other) => {
            diags.push(&arg_path, Kind::GrammarViolation, format!("UnitArgType must be MAT or PROD, got {other}"));
            UnitArgType::Material
        }
    };
    let vol = u.get("Vol").and_then(|v| quantity(v, &format!("{unit_path}/Vol"), diags));
    let container = opt_name(u.get("Container"), &format!("{unit_path}/Container"), diags);
    let cond = config_map(u.get("Cond"), &format!("{unit_path}/Cond"), diags);
    Some(ProductFlowRecord {
        pred,
        unit: FlowUnit { component, component_type, ref_name, unit_arg_type, vol, container, cond },
        succ,
    })
}

#[derive(Serialize)]
#[serde(untagged)]
enum ArgOut {
    Name(String),
    Typed {
        #[serde(rename = "RefName")]
        ref_name: String,
        #[serde(rename = "ComponentType")]
        component_type: &'static str,
    },
}

#[derive(Serialize)]
#[serde(untagged)]
enum ArgsOut {
    One(ArgOut),
    Many(Vec<ArgOut>),
}

fn args_out(args: &[SlotRef]) -> ArgsOut {
    let mut out: Vec<ArgOut> = args
        .iter()
        .map(|a| match a.component_type {
            Some(t) => ArgOut::Typed { ref_name: a.name.to_string(), component_type: t.as_str() },
            None => ArgOut::Name(a.name.to_string()),
        })
        .collect();
    if out.len() == 1 {
        ArgsOut::One(out.remove(0))
    } else {
        ArgsOut::Many(out)
    }
}

#[derive(Serialize)]
struct PrecondOut {
    #[serde(rename = "SlotArgNum")]
    num: usize,
    #[serde(rename = "SlotArg")]
    args: ArgsOut,
}

#[derive(Serialize)]
struct PostcondOut {
    #[serde(rename = "EmitArgNum")]
    num: usize,
    #[serde(rename = "EmitArg")]
    args: ArgsOut,
}

#[derive(Serialize)]
struct ExecutionOut<'a> {
    #[serde(rename = "DeviceType")]
    device: Option<&'a str>,
    #[serde(rename = "Config")]
    config: BTreeMap<&'a str, String>,
}

#[derive(Serialize)]
struct StepOut<'a> {
    #[serde(rename = "Operation")]
    operation: &'a str,
    #[serde(rename = "Precond")]
    precond: PrecondOut,
    #[serde(rename = "Execution")]
    execution: ExecutionOut<'a>,
    #[serde(rename = "Postcond")]
    postcond: PostcondOut,
}

#[derive(Serialize)]
#[serde(rename_all = "PascalCase")]
struct UnitOut<'a> {
    component: &'a str,
    component_type: Option<&'static str>,
    ref_name: String,
    unit_arg_type: &'static str,
    vol: Option<String>,
    container: Option<&'a str>,
    cond: BTreeMap<&'a str, String>,
}

#[derive(Serialize)]
#[serde(rename_all = "PascalCase")]
struct FlowOut<'a> {
    pred: &'a str,
    flow_unit: UnitOut<'a>,
    succ: &'a str,
}

#[derive(Serialize)]
#[serde(untagged)]
enum ItemOut<'a> {
    Step(StepOut<'a>),
    Flow(FlowOut<'a>),
}

fn step_out(s: &OpStep) -> StepOut<'_> {
    StepOut {
        operation: &s.operation,
        precond: PrecondOut { num: s.precond.len(), args: args_out(&s.precond) },
        execution: ExecutionOut {
            device: s.device.as_deref(),
            config: s.config.iter().map(|(k, v)| (k.as_str(), v.to_string())).collect(),
        },
        postcond: PostcondOut { num: s.postcond.len(), args: args_out(&s.postcond) },
    }
}

fn flow_out(f: &ProductFlowRecord) -> FlowOut<'_> {
    let u = &f.unit;
    FlowOut {
        pred: f.pred.as_deref().unwrap_or(""),
        flow_unit: UnitOut {
            component: &u.component,
            component_type: u.component_type.map(ComponentType::as_str),
            ref_name: u.ref_name.to_string(),
            unit_arg_type: u.unit_arg_type.as_str(),
            vol: u.vol.as_ref().map(ToString::to_string),
            container: u.container.as_deref(),
            cond: u.cond.iter().map(|(k, v)| (k.as_str(), v.to_string())).collect(),
        },
        succ: f.succ.as_deref().unwrap_or(""),
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("program values always serialize")
}

/// Canonical JSON for a plan: a single array, two-space indent, flow records
/// placed after the step that emits them (records no step emits come first).
pub fn serialize_plan(plan: &PlanProgram) -> String {
    let mut items = Vec::with_capacity(plan.steps().len() + plan.flows().len());
    let mut flows = plan.flows().iter().peekable();
    while let Some(f) = flows.next_if(|f| plan.anchor_of(f).is_none()) {
        items.push(ItemOut::Flow(flow_out(f)));
    }
    for (i, step) in plan.steps().iter().enumerate() {
        items.push(ItemOut::Step(step_out(step)));
        while let Some(f) = flows.next_if(|f| plan.anchor_of(f) == Some(i)) {
            items.push(ItemOut::Flow(flow_out(f)));
        }
    }
    pretty(&items)
}

pub fn serialize_op_steps(steps: &[OpStep]) -> String {
    pretty(&steps.iter().map(step_out).collect::<Vec<_>>())
}

pub fn serialize_product_records(flows: &[ProductFlowRecord]) -> String {
    pretty(&flows.iter().map(flow_out).collect::<Vec<_>>())
}
