//! Python-style pseudocode: rendering actions as pseudofunctions and reading
//! generated pseudocode back as an operation-only plan.
//!
//! Reading is lossy by design. Every call becomes a step: positional
//! identifiers become slots, keyword arguments become configuration (a
//! `device` keyword becomes the device), and assignment targets become
//! emits.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;

use crate::dsl::{DiagnosticKind, DslError, ParseDiagnostic, Parsed};
use crate::model::{canonicalize, parse_quantity, InstanceAction, OpStep, PlanProgram, RefName, SlotRef};

const DEVICE_KEYS: [&str; 4] = ["device", "device_type", "devicetype", "equipment"];
const IGNORED_CALLS: [&str; 12] =
    ["print", "range", "len", "str", "int", "float", "list", "dict", "set", "enumerate", "zip", "input"];
const SKIPPED_PREFIXES: [&str; 7] = ["def ", "class ", "import ", "from ", "return", "@", "```"];

static CALL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:([A-Za-z_][\w\s,\[\]]*?)\s*=\s*)?([A-Za-z_][\w.]*)\s*\((.*)\)\s*$").expect("call regex")
});
static CONTROL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:for|while|if|elif|else|with|try|except)\b[^:]*:\s*(.*)$").expect("control regex"));
static FENCE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)```[A-Za-z]*\n(.*?)```").expect("fence regex"));

fn identifier(text: &str) -> String {
    let mut out: String = text.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit()) {
        out.insert(0, '_');
    }
    out
}

fn quoted(text: &str) -> String {
    format!("\"{}\"", text.replace('\\', "\\\\").replace('"', "\\\""))
}

/// The pseudocode call for one step: `emits = op(slots, device=..., key=...)`.
pub fn step_call(step: &OpStep) -> String {
    let mut args: Vec<String> = step.precond.iter().map(|s| identifier(&s.name.to_string())).collect();
    if let Some(d) = &step.device {
        args.push(format!("device={}", quoted(d)));
    }
    args.extend(step.config.iter().map(|(k, v)| format!("{}={}", identifier(k), quoted(&v.to_string()))));
    let call = format!("{}({})", identifier(&step.operation), args.join(", "));
    if step.postcond.is_empty() {
        call
    } else {
        let emits: Vec<String> = step.postcond.iter().map(|e| identifier(&e.name.to_string())).collect();
        format!("{} = {call}", emits.join(", "))
    }
}

/// Pseudocode for a whole plan, one call per line.
pub fn plan_pseudocode(plan: &PlanProgram) -> String {
    plan.steps().iter().map(step_call).collect::<Vec<_>>().join("\n")
}

/// The step an instance action records.
pub fn action_step(a: &InstanceAction) -> OpStep {
    OpStep {
        operation: a.opcode.clone(),
        precond: a.precond.clone(),
        device: a.device.clone(),
        config: a.config.clone(),
        postcond: a.postcond.clone(),
    }
}

/// A pseudofunction definition describing one instance action.
pub fn pseudofunction(a: &InstanceAction) -> String {
    let mut params: Vec<String> = a.precond.iter().map(|s| identifier(s.component())).collect();
    if let Some(d) = &a.device {
        params.push(format!("device={}", quoted(d)));
    }
    params.extend(a.config.iter().map(|(k, v)| format!("{}={}", identifier(k), quoted(&v.to_string()))));
    let body = if a.postcond.is_empty() {
        "    pass".to_string()
    } else {
        let emits: Vec<String> = a.postcond.iter().map(|e| identifier(e.component())).collect();
        format!("    return {}", emits.join(", "))
    };
    format!("def {}({}):\n{body}", identifier(&a.opcode), params.join(", "))
}

fn code_body(text: &str) -> &str {
    FENCE.captures(text).and_then(|c| c.get(1)).map_or(text, |m| m.as_str())
}

fn strip_comment(line: &str) -> &str {
    let mut quote: Option<char> = None;
    for (i, c) in line.char_indices() {
        match (quote, c) {
            (None, '"' | '\'') => quote = Some(c),
            (Some(q), _) if c == q => quote = None,
            (None, '#') => return &line[..i],
            _ => {}
        }
    }
    line
}

fn depth(line: &str) -> i32 {
    let mut quote: Option<char> = None;
    let mut d = 0;
    for c in line.chars() {
        match (quote, c) {
            (None, '"' | '\'') => quote = Some(c),
            (Some(q), _) if c == q => quote = None,
            (None, '(' | '[' | '{') => d += 1,
            (None, ')' | ']' | '}') => d -= 1,
            _ => {}
        }
    }
    d
}

/// Physical lines joined while brackets are open, with their 1-based start
/// line numbers.
fn logical_lines(body: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut pending: Option<(usize, String, i32)> = None;
    for (n, raw) in body.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let (start, mut text, open) = pending.take().unwrap_or((n + 1, String::new(), 0));
        if !text.is_empty() {
            text.push(' ');
        }
        text.push_str(line);
        let open = open + depth(line);
        if open > 0 {
            pending = Some((start, text, open));
        } else {
            out.push((start, text));
        }
    }
    out.extend(pending.map(|(start, text, _)| (start, text)));
    out
}

fn split_args(args: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut quote: Option<char> = None;
    let mut d = 0;
    let mut start = 0;
    for (i, c) in args.char_indices() {
        match (quote, c) {
            (None, '"' | '\'') => quote = Some(c),
            (Some(q), _) if c == q => quote = None,
            (None, '(' | '[' | '{') => d += 1,
            (None, ')' | ']' | '}') => d -= 1,
            (None, ',') if d == 0 => {
                out.push(args[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(args[start..].trim());
    out.retain(|a| !a.is_empty());
    out
}

fn unquote(text: &str) -> &str {
    let t = text.trim();
    for q in ['"', '\''] {
        if let Some(inner) = t.strip_prefix(q).and_then(|s| s.strip_suffix(q)) {
            return inner;
        }
    }
    t
}

fn keyword(arg: &str) -> Option<(&str, &str)> {
    let (k, v) = arg.split_once('=')?;
    let k = k.trim();
    (!k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') && !v.starts_with('=')).then_some((k, v))
}

fn slot(text: &str) -> Option<SlotRef> {
    let name = canonicalize(unquote(text)).ok()?;
    Some(SlotRef::new(RefName::parse(&name)))
}

fn call_step(name: &str, args: &str, targets: Option<&str>) -> Option<OpStep> {
    let op = name.rsplit('.').next().unwrap_or(name);
    if IGNORED_CALLS.contains(&op) {
        return None;
    }
    let mut step = OpStep::new(canonicalize(op).ok()?);
    for (j, arg) in split_args(args).into_iter().enumerate() {
        match keyword(arg) {
            Some((k, v)) if DEVICE_KEYS.contains(&k.to_lowercase().as_str()) => {
                step.device = canonicalize(unquote(v)).ok();
            }
            Some((k, v)) => {
                step.config.insert(k.to_lowercase(), parse_quantity(unquote(v)));
            }
            None if arg.starts_with(|c: char| c.is_ascii_digit()) => {
                step.config.insert(format!("arg{j}"), parse_quantity(unquote(arg)));
            }
            None => step.precond.extend(slot(arg)),
        }
    }
    if let Some(t) = targets {
        let t = t.trim().trim_start_matches('[').trim_end_matches(']');
        step.postcond.extend(t.split(',').filter_map(slot));
    }
    Some(step)
}

/// Reads pseudocode into an operation-only plan. Lines that look like calls
/// but cannot be read are reported as warnings; a text with no calls at all
/// is an error.
pub fn parse_pseudocode(text: &str) -> Result<Parsed<PlanProgram>, DslError> {
    let mut steps = Vec::new();
    let mut warnings = Vec::new();
    for (n, line) in logical_lines(code_body(text)) {
        if SKIPPED_PREFIXES.iter().any(|p| line.starts_with(p)) {
            continue;
        }
        let line = CONTROL.captures(&line).and_then(|c| c.get(1)).map_or(line.as_str(), |m| m.as_str()).trim();
        if line.is_empty() {
            continue;
        }
        match CALL.captures(line) {
            Some(c) => {
                let name = c.get(2).expect("name group").as_str();
                let targets = c.get(1).map(|m| m.as_str());
                steps.extend(call_step(name, c.get(3).map_or("", |m| m.as_str()), targets));
            }
            None if line.contains('(') => warnings.push(ParseDiagnostic::new(
                format!("/lines/{n}"),
                DiagnosticKind::UnknownKey,
                format!("unreadable call: {line}"),
            )),
            None => {}
        }
    }
    if steps.is_empty() {
        return Err(DslError::Parse(vec![ParseDiagnostic::new(
            "/",
            DiagnosticKind::MissingField,
            "pseudocode contains no function calls",
        )]));
    }
    Ok(Parsed { value: PlanProgram::operation_only(steps), warnings })
}

/// Distinct pseudofunction definitions of `actions`, in first-seen order.
pub fn pseudofunctions<'a>(actions: impl IntoIterator<Item = &'a InstanceAction>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    actions.into_iter().map(pseudofunction).filter(|d| seen.insert(d.clone())).collect()
}
