//! Corpus assembly: sentences to instance actions to linked flow records.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::client::{ClientError, ExtractionClient};
use super::rules::UnitMention;
use super::synonyms::{apply_alias, merge_synonyms, Embedder, TrigramEmbedder, DEFAULT_SYNONYM_THRESHOLD};
use super::text::{split_sentences, OpcodeLexicon};
use crate::model::{
    canonicalize, parse_quantity, ComponentType, DomainId, FlowUnit, InstanceAction, ProductFlowRecord, ProtocolDoc,
    Quantity, RefName, SlotRef, SourceRef, UnitArgType,
};

/// Configuration keys that describe the state of a product rather than how
/// an operation runs; they travel with emitted units as conditions.
pub const CONDITION_KEYS: [&str; 4] = ["temperature", "acidity", "pressure", "concentration"];

/// A sentence the client could not process.
#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[error("{source_ref}: {message} (sentence {sentence:?})")]
pub struct ExtractionError {
    pub source_ref: SourceRef,
    pub sentence: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("no protocols to ingest")]
    EmptyCorpus,
    #[error("no instance actions extracted ({} sentence error(s))", .0.len())]
    NoActions(Vec<ExtractionError>),
    #[error("duplicate protocol id {0:?}")]
    DuplicateId(String),
    #[error("protocol {0:?} has no steps")]
    EmptyProtocol(String),
    #[error(transparent)]
    Client(#[from] ClientError),
}

/// A flow record tagged with the protocol it was derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourcedFlow {
    pub protocol: String,
    #[serde(flatten)]
    pub record: ProductFlowRecord,
}

/// The preprocessed domain corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Corpus {
    pub domain: DomainId,
    pub docs: Vec<ProtocolDoc>,
    pub actions: Vec<InstanceAction>,
    pub flows: Vec<SourcedFlow>,
    pub device_alias_map: BTreeMap<String, String>,
    pub component_alias_map: BTreeMap<String, String>,
    #[serde(default)]
    pub errors: Vec<ExtractionError>,
}

impl Corpus {
    pub fn doc(&self, id: &str) -> Option<&ProtocolDoc> {
        self.docs.iter().find(|d| d.id == id)
    }

    /// Actions of one protocol, in step order.
    pub fn actions_of<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a InstanceAction> + 'a {
        self.actions.iter().filter(move |a| a.source.protocol == id)
    }

    pub fn records(&self) -> impl Iterator<Item = &ProductFlowRecord> {
        self.flows.iter().map(|f| &f.record)
    }
}

pub struct IngestOptions<'a> {
    pub lexicon: OpcodeLexicon,
    pub synonym_threshold: f64,
    pub embedder: &'a dyn Embedder,
}

impl Default for IngestOptions<'static> {
    fn default() -> Self {
        Self { lexicon: OpcodeLexicon::default(), synonym_threshold: DEFAULT_SYNONYM_THRESHOLD, embedder: &TrigramEmbedder }
    }
}

/// An action together with the amounts stated for its units.
#[derive(Debug, Clone)]
struct Extracted {
    action: InstanceAction,
    slot_amounts: Vec<Option<Quantity>>,
    emit_amounts: Vec<Option<Quantity>>,
    container: Option<String>,
}

fn mentions(units: &[UnitMention]) -> (Vec<SlotRef>, Vec<Option<Quantity>>) {
    units
        .iter()
        .filter_map(|u| {
            let name = canonicalize(&u.name).ok()?;
            Some((SlotRef::new(RefName::parse(&name)), u.amount.as_deref().map(parse_quantity)))
        })
        .unzip()
}

fn extract(
    sentence: &str,
    opcode: String,
    source: SourceRef,
    client: &dyn ExtractionClient,
) -> Result<Extracted, ExtractionError> {
    let fail = |e: ClientError| ExtractionError { source_ref: source.clone(), sentence: sentence.into(), message: e.to_string() };
    let entities = client.extract_entities(sentence).map_err(fail)?;
    let (precond, slot_amounts) = mentions(&entities.input_flow_units);
    let (postcond, emit_amounts) = mentions(&entities.output_flow_units);
    let mut config: BTreeMap<String, Quantity> = BTreeMap::new();
    for (k, v) in &entities.config {
        if let Ok(key) = canonicalize(k) {
            config.entry(key).or_insert_with(|| parse_quantity(v));
        }
    }
    if let Some(t) = &entities.total_time {
        config.entry("duration".into()).or_insert_with(|| parse_quantity(t));
    }
    let device = entities.devices.iter().find_map(|d| canonicalize(d).ok());
    let container = entities.containers.iter().find_map(|c| canonicalize(c).ok());
    Ok(Extracted {
        action: InstanceAction { opcode, precond, postcond, device, config, source },
        slot_amounts,
        emit_amounts,
        container,
    })
}

/// Extracts one instance action from a sentence. Slots and emits carry no
/// reference indices or component types yet; those are assigned when the
/// corpus links flows.
pub fn extract_instance_action(
    sentence: &str,
    source: SourceRef,
    client: &dyn ExtractionClient,
) -> Result<InstanceAction, ExtractionError> {
    let opcode = client
        .classify_opcode(sentence)
        .map_err(|e| ExtractionError { source_ref: source.clone(), sentence: sentence.into(), message: e.to_string() })?
        .and_then(|o| canonicalize(&o).ok())
        .ok_or_else(|| ExtractionError {
            source_ref: source.clone(),
            sentence: sentence.into(),
            message: "sentence has no opcode".into(),
        })?;
    extract(sentence, opcode, source, client).map(|e| e.action)
}

/// Phase label when available, else type label, else `None`.
pub fn classify_flow_unit(component: &str, client: &dyn ExtractionClient) -> Result<Option<ComponentType>, ClientError> {
    let labels = client.classify_component(component)?;
    let parse = |label: &Option<String>| label.as_deref().and_then(|l| ComponentType::parse_label(l).ok().flatten());
    Ok(parse(&labels.phase).or_else(|| parse(&labels.kind)))
}

/// Processes one protocol; returns extracted actions in step order.
fn process_doc(
    doc: &ProtocolDoc,
    client: &dyn ExtractionClient,
    lexicon: &OpcodeLexicon,
) -> (Vec<Extracted>, Vec<ExtractionError>) {
    let mut actions = Vec::new();
    let mut errors = Vec::new();
    for (step, text) in doc.steps.iter().enumerate() {
        let source = SourceRef { protocol: doc.id.clone(), step };
        for sentence in split_sentences(text, lexicon) {
            let opcode = match client.classify_opcode(&sentence) {
                Ok(Some(op)) => match canonicalize(&op) {
                    Ok(op) => op,
                    Err(_) => continue,
                },
                // no operation: a decorative phrase
                Ok(None) => continue,
                Err(e) => {
                    errors.push(ExtractionError { source_ref: source.clone(), sentence, message: e.to_string() });
                    continue;
                }
            };
            match extract(&sentence, opcode, source.clone(), client) {
                Ok(x) => actions.push(x),
                Err(e) => errors.push(e),
            }
        }
    }
    (actions, errors)
}

/// Links the actions of one protocol into flow records and assigns
/// reference indices (per component, in step order, from 0).
///
/// A slot consumes the open emits of the same component (the nearest
/// preceding producers); with none open it becomes an initial reagent.
fn link_flows(protocol: &str, extracted: &mut [Extracted], types: &BTreeMap<String, Option<ComponentType>>) -> Vec<SourcedFlow> {
    let mut records: Vec<ProductFlowRecord> = Vec::new();
    let mut open: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut counter: BTreeMap<String, u32> = BTreeMap::new();
    let mut next_ref = |component: &str| {
        let n = counter.entry(component.to_string()).or_insert(0);
        let r = RefName::new(component, Some(*n));
        *n += 1;
        r
    };
    for x in extracted.iter_mut() {
        let opcode = x.action.opcode.clone();
        for (slot, amount) in x.action.precond.iter_mut().zip(&x.slot_amounts) {
            let component = slot.component().to_string();
            let t = types.get(&component).copied().flatten();
            slot.component_type = t;
            let pending = open.remove(&component).unwrap_or_default();
            if let Some(&last) = pending.last() {
                for &r in &pending {
                    records[r].succ = Some(opcode.clone());
                }
                slot.name = records[last].unit.ref_name.clone();
            } else {
                let ref_name = next_ref(&component);
                slot.name = ref_name.clone();
                records.push(ProductFlowRecord {
                    pred: None,
                    unit: FlowUnit {
                        component,
                        component_type: t,
                        ref_name,
                        unit_arg_type: UnitArgType::Material,
                        vol: amount.clone(),
                        container: None,
                        cond: BTreeMap::new(),
                    },
                    succ: Some(opcode.clone()),
                });
            }
        }
        let cond: BTreeMap<String, Quantity> = x
            .action
            .config
            .iter()
            .filter(|(k, _)| CONDITION_KEYS.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        for (emit, amount) in x.action.postcond.iter_mut().zip(&x.emit_amounts) {
            let component = emit.component().to_string();
            let t = types.get(&component).copied().flatten();
            emit.component_type = t;
            let ref_name = next_ref(&component);
            emit.name = ref_name.clone();
            open.entry(component.clone()).or_default().push(records.len());
            records.push(ProductFlowRecord {
                pred: Some(opcode.clone()),
                unit: FlowUnit {
                    component,
                    component_type: t,
                    ref_name,
                    unit_arg_type: UnitArgType::Product,
                    vol: amount.clone(),
                    container: x.container.clone(),
                    cond: cond.clone(),
                },
                succ: None,
            });
        }
    }
    records.into_iter().map(|record| SourcedFlow { protocol: protocol.to_string(), record }).collect()
}

/// Builds the corpus: split, extract, merge synonyms, link flows.
///
/// Documents are processed in parallel and merged in id order, so the result
/// is deterministic for a deterministic client.
pub fn build_corpus(
    docs: Vec<ProtocolDoc>,
    client: &dyn ExtractionClient,
    options: &IngestOptions<'_>,
) -> Result<Corpus, IngestError> {
    if docs.is_empty() {
        return Err(IngestError::EmptyCorpus);
    }
    let mut docs = docs;
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    for pair in docs.windows(2) {
        if pair[0].id == pair[1].id {
            return Err(IngestError::DuplicateId(pair[0].id.clone()));
        }
    }
    if let Some(d) = docs.iter().find(|d| d.steps.is_empty()) {
        return Err(IngestError::EmptyProtocol(d.id.clone()));
    }

    let per_doc: Vec<(Vec<Extracted>, Vec<ExtractionError>)> =
        docs.par_iter().map(|d| process_doc(d, client, &options.lexicon)).collect();
    let mut errors: Vec<ExtractionError> = per_doc.iter().flat_map(|(_, e)| e.iter().cloned()).collect();
    let mut per_doc: Vec<Vec<Extracted>> = per_doc.into_iter().map(|(a, _)| a).collect();
    if per_doc.iter().all(Vec::is_empty) {
        return Err(IngestError::NoActions(errors));
    }

    let devices: BTreeSet<String> = per_doc.iter().flatten().filter_map(|x| x.action.device.clone()).collect();
    let device_alias_map = merge_synonyms(&devices, client, options.embedder, options.synonym_threshold)?;
    let components: BTreeSet<String> = per_doc
        .iter()
        .flatten()
        .flat_map(|x| x.action.precond.iter().chain(&x.action.postcond))
        .map(|s| s.component().to_string())
        .collect();
    let component_alias_map = merge_synonyms(&components, client, options.embedder, options.synonym_threshold)?;
    for x in per_doc.iter_mut().flatten() {
        if let Some(d) = &x.action.device {
            x.action.device = Some(apply_alias(&device_alias_map, d).to_string());
        }
        for s in x.action.precond.iter_mut().chain(x.action.postcond.iter_mut()) {
            s.name = RefName::parse(apply_alias(&component_alias_map, s.component()));
        }
    }

    let canonical: BTreeSet<&str> = component_alias_map.values().map(String::as_str).collect();
    let typed: Vec<(String, Result<Option<ComponentType>, ClientError>)> =
        canonical.par_iter().map(|c| (c.to_string(), classify_flow_unit(c, client))).collect();
    let mut types = BTreeMap::new();
    for (c, t) in typed {
        match t {
            Ok(t) => {
                types.insert(c, t);
            }
            Err(e) => {
                errors.push(ExtractionError {
                    source_ref: SourceRef { protocol: String::new(), step: 0 },
                    sentence: c.clone(),
                    message: e.to_string(),
                });
                types.insert(c, None);
            }
        }
    }

    let mut actions = Vec::new();
    let mut flows = Vec::new();
    for (doc, extracted) in docs.iter().zip(per_doc.iter_mut()) {
        flows.extend(link_flows(&doc.id, extracted, &types));
        actions.extend(extracted.iter().map(|x| x.action.clone()));
    }
    Ok(Corpus {
        domain: docs[0].domain.clone(),
        docs,
        actions,
        flows,
        device_alias_map,
        component_alias_map,
        errors,
    })
}
