//! Rule-based entity extraction from one imperative sentence.
//!
//! Produces the same response shape a language-model extractor returns:
//! devices, input and output flow units (with amounts), and configuration.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::lexicon::{self, contains};
use super::text::{opcode_position, words, OpcodeLexicon, Word};
use crate::model::{canonicalize, ComponentType};

/// One flow unit mentioned in a sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitMention {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amount: Option<String>,
}

/// Entities of one sentence, as returned by the `extract_entities` task.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EntityResult {
    #[serde(default)]
    pub devices: Vec<String>,
    #[serde(default)]
    pub input_flow_units: Vec<UnitMention>,
    #[serde(default)]
    pub output_flow_units: Vec<UnitMention>,
    #[serde(default)]
    pub total_time: Option<String>,
    #[serde(default)]
    pub config: BTreeMap<String, String>,
    #[serde(default)]
    pub containers: Vec<String>,
}

/// Phase and type labels for a component, as returned by
/// `classify_component`. Either may be absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComponentLabels {
    pub phase: Option<String>,
    #[serde(rename = "type")]
    pub kind: Option<String>,
}

static QUANTITY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(concat!(
        r"(?i)(?P<num>-?\d[\d,]*(?:\.\d+)?(?:\s*[-–~]\s*\d[\d,]*(?:\.\d+)?)?)\s*",
        r"(?P<unit>[x×]\s*g\b|rpm\b|°\s*C\b|º\s*C\b|℃|degrees?\s+C(?:elsius)?\b|",
        r"min(?:ute)?s?\b|h(?:ou)?rs?\b|h\b|sec(?:ond)?s?\b|s\b|days?\b|",
        r"ml\b|[µμu]l\b|l\b|[mµμun]m\b|m\b|%|[mµμun]?g\b|kpa\b|psi\b|atm\b|bar\b|v\b|w\b|",
        r"cycles?\b|times\b|x\b)",
    ))
    .unwrap()
});

static PH: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bpH\s*(?P<num>\d+(?:\.\d+)?)").unwrap());

static OVERNIGHT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bovernight\b").unwrap());

/// Normalized unit spelling and the configuration key it measures.
fn classify_unit(unit: &str) -> Option<(&'static str, &'static str)> {
    let u: String = unit.split_whitespace().collect::<String>().to_lowercase().replace(['μ', 'u'], "µ");
    let u = u.as_str();
    Some(match u {
        "xg" | "×g" => ("x g", "speed"),
        "rpm" => ("rpm", "speed"),
        "°c" | "ºc" | "℃" | "degreec" | "degreesc" | "degreescelsius" | "degreecelsius" => ("°C", "temperature"),
        "min" | "mins" | "minµte" | "minµtes" => ("min", "duration"),
        "h" | "hr" | "hrs" | "hoµr" | "hoµrs" => ("h", "duration"),
        "s" | "sec" | "secs" | "second" | "seconds" => ("s", "duration"),
        "day" | "days" => ("day", "duration"),
        "ml" => ("mL", "volume"),
        "µl" => ("µL", "volume"),
        "l" => ("L", "volume"),
        "mm" => ("mM", "concentration"),
        "µm" => ("µM", "concentration"),
        "nm" => ("nM", "concentration"),
        "m" => ("M", "concentration"),
        "%" => ("%", "concentration"),
        "g" => ("g", "mass"),
        "mg" => ("mg", "mass"),
        "µg" => ("µg", "mass"),
        "ng" => ("ng", "mass"),
        "kpa" => ("kPa", "pressure"),
        "psi" => ("psi", "pressure"),
        "atm" => ("atm", "pressure"),
        "bar" => ("bar", "pressure"),
        "v" => ("V", "voltage"),
        "w" => ("W", "power"),
        "cycle" | "cycles" => ("cycles", "cycles"),
        "times" | "x" => ("times", "repeats"),
        _ => return None,
    })
}

#[derive(Debug, Clone)]
struct Measure {
    start: usize,
    end: usize,
    key: &'static str,
    text: String,
}

fn measures(sentence: &str) -> Vec<Measure> {
    let mut out = Vec::new();
    for caps in QUANTITY.captures_iter(sentence) {
        let whole = caps.get(0).unwrap();
        // a number glued to a preceding word is part of a name ("T4", "pH7")
        if sentence[..whole.start()].chars().last().is_some_and(|c| c.is_alphanumeric()) {
            continue;
        }
        let Some((unit, key)) = classify_unit(&caps["unit"]) else { continue };
        let num: String = caps["num"].split_whitespace().collect::<String>().replace('–', "-").replace('~', "-");
        out.push(Measure { start: whole.start(), end: whole.end(), key, text: format!("{num} {unit}") });
    }
    for caps in PH.captures_iter(sentence) {
        let whole = caps.get(0).unwrap();
        out.push(Measure { start: whole.start(), end: whole.end(), key: "acidity", text: format!("pH {}", &caps["num"]) });
    }
    for m in OVERNIGHT.find_iter(sentence) {
        out.push(Measure { start: m.start(), end: m.end(), key: "duration", text: "overnight".into() });
    }
    out.sort_by_key(|m| m.start);
    let mut kept: Vec<Measure> = Vec::new();
    for m in out {
        if kept.last().is_none_or(|k| m.start >= k.end) {
            kept.push(m);
        }
    }
    kept
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String, Option<char>),
    Measure(usize),
}

/// Words and measures in text order, each with its start offset.
fn tokens(ms: &[Measure], ws: &[Word<'_>]) -> Vec<(usize, Tok)> {
    let mut out: Vec<(usize, Tok)> = Vec::new();
    for (k, m) in ms.iter().enumerate() {
        out.push((m.start, Tok::Measure(k)));
    }
    for w in ws {
        if ms.iter().any(|m| w.start < m.end && w.end > m.start) {
            continue;
        }
        out.push((w.start, Tok::Word(w.text.clone(), w.trailing)));
    }
    out.sort_by_key(|(s, _)| *s);
    out
}

fn is_break(word: &str, lex: &OpcodeLexicon) -> bool {
    contains(lexicon::NP_BREAKS, word) || lex.is_verb(word) && contains(lexicon::OUTPUT_VERBS, word)
}

/// A noun phrase starting at `i`: returns (phrase words, amount, next index).
fn noun_phrase(toks: &[Tok], mut i: usize, ms: &[Measure], lex: &OpcodeLexicon) -> (Vec<String>, Option<String>, usize) {
    let mut amount = None;
    while let Some(t) = toks.get(i) {
        match t {
            Tok::Word(w, _) if contains(lexicon::DETERMINERS, w) => i += 1,
            Tok::Measure(k) if matches!(toks.get(i + 1), Some(Tok::Word(w, _)) if w == "of") => {
                amount = Some(ms[*k].text.clone());
                i += 2;
            }
            _ => break,
        }
    }
    let mut phrase = Vec::new();
    while let Some(Tok::Word(w, trailing)) = toks.get(i) {
        if is_break(w, lex) || w.chars().all(|c| c.is_ascii_digit()) {
            break;
        }
        if !contains(lexicon::VACUOUS_MODIFIERS, w) && !contains(lexicon::DETERMINERS, w) {
            phrase.push(w.clone());
        }
        i += 1;
        if trailing.is_some() {
            break;
        }
    }
    (phrase, amount, i)
}

fn last_is(phrase: &[String], heads: &[&str]) -> bool {
    phrase.last().is_some_and(|h| contains(heads, h))
}

fn name_of(phrase: &[String]) -> Option<String> {
    canonicalize(&phrase.join(" ")).ok()
}

/// Rule-based entity extraction. Nothing is invented: fields the sentence
/// does not state stay empty.
pub fn extract_entities_rules(sentence: &str, lex: &OpcodeLexicon) -> EntityResult {
    let ws = words(sentence);
    let mut result = EntityResult::default();
    let ms = measures(sentence);
    for m in &ms {
        if m.key == "duration" && result.total_time.is_none() {
            result.total_time = Some(m.text.clone());
        }
    }
    let Some(verb_at) = opcode_position(&ws, lex) else {
        return result;
    };
    let positioned = tokens(&ms, &ws);
    let mut i = positioned.iter().position(|(s, _)| *s == ws[verb_at].start).map_or(positioned.len(), |p| p + 1);
    let toks: Vec<Tok> = positioned.into_iter().map(|(_, t)| t).collect();
    let mut bound = vec![false; ms.len()];
    let mark_bound = |amount: &Option<String>, bound: &mut Vec<bool>| {
        if let Some(a) = amount {
            if let Some(k) = ms.iter().position(|m| &m.text == a) {
                bound[k] = true;
            }
        }
    };

    // direct objects, joined by "and"
    loop {
        let (phrase, amount, next) = noun_phrase(&toks, i, &ms, lex);
        if phrase.is_empty() {
            if next > i && amount.is_some() {
                i = next;
            }
            break;
        }
        mark_bound(&amount, &mut bound);
        if let Some(name) = name_of(&phrase) {
            result.input_flow_units.push(UnitMention { name, amount });
        }
        i = next;
        match toks.get(i) {
            Some(Tok::Word(w, _)) if w == "and" => i += 1,
            _ => break,
        }
    }

    // prepositional objects and purpose clauses
    while i < toks.len() {
        let Tok::Word(w, _) = &toks[i] else {
            i += 1;
            continue;
        };
        if w == "to" {
            if let Some(Tok::Word(v, _)) = toks.get(i + 1) {
                if contains(lexicon::OUTPUT_VERBS, v) {
                    i += 2;
                    loop {
                        let (phrase, amount, next) = noun_phrase(&toks, i, &ms, lex);
                        mark_bound(&amount, &mut bound);
                        if let Some(name) = (!phrase.is_empty()).then(|| name_of(&phrase)).flatten() {
                            result.output_flow_units.push(UnitMention { name, amount });
                        }
                        i = next.max(i + 1);
                        match toks.get(i) {
                            Some(Tok::Word(w, _)) if w == "and" => i += 1,
                            _ => break,
                        }
                    }
                    continue;
                }
                if lex.is_verb(v) {
                    // purpose clause without a product
                    break;
                }
            }
        }
        if contains(lexicon::OBJECT_PREPOSITIONS, w) {
            let (phrase, amount, next) = noun_phrase(&toks, i + 1, &ms, lex);
            if let Some(name) = (!phrase.is_empty()).then(|| name_of(&phrase)).flatten() {
                if last_is(&phrase, lexicon::DEVICE_HEADS) {
                    result.devices.push(name);
                } else if last_is(&phrase, lexicon::CONTAINER_HEADS) {
                    result.containers.push(name);
                } else if w != "on" && w != "using" {
                    mark_bound(&amount, &mut bound);
                    result.input_flow_units.push(UnitMention { name, amount });
                }
            }
            i = next.max(i + 1);
            continue;
        }
        i += 1;
    }

    for (k, m) in ms.iter().enumerate() {
        if !bound[k] {
            result.config.entry(m.key.to_string()).or_insert_with(|| m.text.clone());
        }
    }
    dedupe(&mut result.input_flow_units);
    dedupe(&mut result.output_flow_units);
    result.devices.dedup();
    result
}

fn dedupe(units: &mut Vec<UnitMention>) {
    let mut seen = std::collections::BTreeSet::new();
    units.retain(|u| seen.insert(u.name.clone()));
}

const LIQUID: &[&str] = &[
    "buffer", "solution", "water", "ethanol", "methanol", "isopropanol", "medium", "media", "supernatant", "lysate",
    "serum", "pbs", "eluate", "filtrate", "suspension", "broth", "saline", "reagent", "mix", "master_mix", "acid",
    "chloroform", "phenol", "oil", "sample", "samples", "stock", "extract", "dye", "stain", "antibody", "antibodies",
    "trizol", "tbe", "tae", "formaldehyde", "paraformaldehyde", "glycerol", "flow-through", "wash",
];
const SOLID: &[&str] = &["pellet", "powder", "beads", "crystals", "precipitate", "resin", "pellets", "salt", "tablet"];
const SEMI_SOLID: &[&str] = &["gel", "agar", "agarose", "paste", "slurry"];
const GAS: &[&str] = &["nitrogen", "air", "co2", "oxygen", "argon", "gas", "vapor"];
const MIXTURE: &[&str] = &["mixture", "emulsion", "homogenate", "reaction"];
const BIOLOGICAL: &[&str] = &[
    "cells", "cell", "bacteria", "dna", "rna", "plasmid", "protein", "proteins", "tissue", "embryos", "colonies",
    "colony", "culture", "cultures", "seeds", "leaves", "larvae", "mice", "blood", "plasma", "cdna", "library",
    "amplicon", "amplicons", "product", "fragments", "organoids", "spheroids", "sections", "nuclei", "explants",
];
const CHEMICAL: &[&str] = &["edta", "tris", "nacl", "kcl", "sds", "glucose", "dmso", "dtt", "mgcl2", "primers", "dntps"];
const OBJECTS: &[&str] = &[
    "tube", "tubes", "plate", "plates", "slide", "slides", "coverslip", "membrane", "filter", "column", "columns",
    "dish", "dishes", "flask", "lid", "tips", "grid", "grids", "chip",
];
const DATA: &[&str] = &["data", "image", "images", "file", "files", "reads", "spectrum", "readings", "sequence"];

/// Lexical phase/type labels from the component's head noun.
pub fn classify_component_rules(component: &str) -> ComponentLabels {
    let head = component.rsplit(['_', ' ']).next().unwrap_or(component);
    let phase = [
        (LIQUID, ComponentType::Liquid),
        (SOLID, ComponentType::Solid),
        (SEMI_SOLID, ComponentType::SemiSolid),
        (GAS, ComponentType::Gas),
        (MIXTURE, ComponentType::Mixture),
    ]
    .into_iter()
    .find(|(list, _)| contains(list, head))
    .map(|(_, t)| t.as_str().to_string());
    let kind = [
        (BIOLOGICAL, ComponentType::BiologicalMaterial),
        (CHEMICAL, ComponentType::ChemicalCompound),
        (OBJECTS, ComponentType::PhysicalObject),
        (DATA, ComponentType::FileData),
    ]
    .into_iter()
    .find(|(list, _)| contains(list, head))
    .map(|(_, t)| t.as_str().to_string());
    ComponentLabels { phase, kind }
}

/// Synonym confirmation rule: same head word and one name's words contain
/// the other's.
pub fn confirm_synonym_rules(a: &str, b: &str) -> bool {
    let wa: Vec<&str> = a.split('_').collect();
    let wb: Vec<&str> = b.split('_').collect();
    let (short, long) = if wa.len() <= wb.len() { (&wa, &wb) } else { (&wb, &wa) };
    short.first() == long.first() && short.iter().all(|w| long.contains(w))
        || short.last() == long.last() && short.iter().all(|w| long.contains(w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> OpcodeLexicon {
        OpcodeLexicon::default()
    }

    #[test]
    fn centrifuge_sentence() {
        let r = extract_entities_rules("Centrifuge the tubes at 15,000 x g for 20 minutes", &lex());
        assert_eq!(r.config["speed"], "15,000 x g");
        assert_eq!(r.config["duration"], "20 min");
        assert_eq!(r.total_time.as_deref(), Some("20 min"));
        assert_eq!(r.input_flow_units[0].name, "tubes");
        assert!(r.devices.is_empty());
    }

    #[test]
    fn amounts_bind_to_units() {
        let r = extract_entities_rules("Add 500 µL of lysis buffer to the cell pellet.", &lex());
        let names: Vec<&str> = r.input_flow_units.iter().map(|u| u.name.as_str()).collect();
        assert_eq!(names, ["lysis_buffer", "cell_pellet"]);
        assert_eq!(r.input_flow_units[0].amount.as_deref(), Some("500 µL"));
        assert!(r.config.is_empty());
    }

    #[test]
    fn devices_and_outputs() {
        let r = extract_entities_rules(
            "Spin the lysate in a bench-top centrifuge at 4 °C for 10 min to obtain the supernatant and the pellet.",
            &lex(),
        );
        assert_eq!(r.devices, ["bench-top_centrifuge"]);
        assert_eq!(r.input_flow_units.len(), 1);
        let outs: Vec<&str> = r.output_flow_units.iter().map(|u| u.name.as_str()).collect();
        assert_eq!(outs, ["supernatant", "pellet"]);
        assert_eq!(r.config["temperature"], "4 °C");
    }

    #[test]
    fn conditions() {
        let r = extract_entities_rules("Incubate the culture overnight at pH 7.4 in a shaking incubator.", &lex());
        assert_eq!(r.config["duration"], "overnight");
        assert_eq!(r.config["acidity"], "pH 7.4");
        assert_eq!(r.devices, ["shaking_incubator"]);
    }

    #[test]
    fn no_entities() {
        let r = extract_entities_rules("Mix well", &lex());
        assert_eq!(r, EntityResult::default());
    }

    #[test]
    fn component_labels() {
        assert_eq!(classify_component_rules("ethanol").phase.as_deref(), Some("Liquid"));
        assert_eq!(classify_component_rules("hela_cells").kind.as_deref(), Some("BiologicalMaterial"));
        assert_eq!(classify_component_rules("gizmo"), ComponentLabels::default());
    }

    #[test]
    fn synonym_rule() {
        assert!(confirm_synonym_rules("centrifuge", "centrifuge_machine"));
        assert!(confirm_synonym_rules("centrifuge", "bench-top_centrifuge"));
        assert!(!confirm_synonym_rules("incubator", "centrifuge"));
    }
}
