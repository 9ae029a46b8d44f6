//! The extraction service boundary and its offline implementations.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::rules::{classify_component_rules, confirm_synonym_rules, extract_entities_rules, ComponentLabels, EntityResult};
use super::text::{extract_opcode, OpcodeLexicon};

/// Extraction capabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    ClassifyOpcode,
    ExtractEntities,
    ClassifyComponent,
    ConfirmSynonym,
}

/// Wire request: `{task, text}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExtractionRequest {
    pub task: Task,
    pub text: String,
}

/// Wire response: `{result, confidence}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResponse {
    pub result: Value,
    #[serde(default = "full_confidence")]
    pub confidence: f64,
}

fn full_confidence() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClientError {
    #[error("no fixture for {task:?} request {text:?}")]
    NotFound { task: Task, text: String },
    #[error("extraction service failed: {0}")]
    Failed(String),
    #[error("malformed {task:?} response: {detail}")]
    Malformed { task: Task, detail: String },
    #[error("cannot load fixtures: {0}")]
    Fixture(String),
}

/// A request/response extraction service. Implementations must be
/// deterministic for acceptance use.
pub trait ExtractionClient: Send + Sync {
    fn call(&self, request: &ExtractionRequest) -> Result<ExtractionResponse, ClientError>;

    fn classify_opcode(&self, sentence: &str) -> Result<Option<String>, ClientError> {
        let r = self.call(&ExtractionRequest { task: Task::ClassifyOpcode, text: sentence.to_string() })?;
        decode(Task::ClassifyOpcode, r.result)
    }

    fn extract_entities(&self, sentence: &str) -> Result<EntityResult, ClientError> {
        let r = self.call(&ExtractionRequest { task: Task::ExtractEntities, text: sentence.to_string() })?;
        decode(Task::ExtractEntities, r.result)
    }

    fn classify_component(&self, component: &str) -> Result<ComponentLabels, ClientError> {
        let r = self.call(&ExtractionRequest { task: Task::ClassifyComponent, text: component.to_string() })?;
        decode(Task::ClassifyComponent, r.result)
    }

    /// Whether two names denote the same thing. The pair travels as a JSON
    /// array in `text`, in sorted order.
    fn confirm_synonym(&self, a: &str, b: &str) -> Result<bool, ClientError> {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let text = serde_json::to_string(&[a, b]).expect("strings serialize");
        let r = self.call(&ExtractionRequest { task: Task::ConfirmSynonym, text })?;
        decode(Task::ConfirmSynonym, r.result)
    }
}

fn decode<T: for<'de> Deserialize<'de>>(task: Task, value: Value) -> Result<T, ClientError> {
    serde_json::from_value(value).map_err(|e| ClientError::Malformed { task, detail: e.to_string() })
}

/// Deterministic offline extractor built from word lists and patterns.
#[derive(Debug, Clone, Default)]
pub struct RuleBasedClient {
    pub lexicon: OpcodeLexicon,
}

impl RuleBasedClient {
    pub fn new(lexicon: OpcodeLexicon) -> Self {
        Self { lexicon }
    }
}

impl ExtractionClient for RuleBasedClient {
    fn call(&self, request: &ExtractionRequest) -> Result<ExtractionResponse, ClientError> {
        let result = match request.task {
            Task::ClassifyOpcode => json!(extract_opcode(&request.text, &self.lexicon)),
            Task::ExtractEntities => json!(extract_entities_rules(&request.text, &self.lexicon)),
            Task::ClassifyComponent => json!(classify_component_rules(&request.text)),
            Task::ConfirmSynonym => {
                let pair: [String; 2] = serde_json::from_str(&request.text)
                    .map_err(|e| ClientError::Malformed { task: request.task, detail: e.to_string() })?;
                json!(confirm_synonym_rules(&pair[0], &pair[1]))
            }
        };
        Ok(ExtractionResponse { result, confidence: 1.0 })
    }
}

/// One canned exchange. An `error` entry makes the call fail, which is how
/// fixtures model timeouts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub task: Task,
    pub text: String,
    #[serde(default)]
    pub result: Value,
    #[serde(default = "full_confidence")]
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Answers from a fixture table; unknown requests go to an optional fallback.
pub struct FixtureClient {
    table: BTreeMap<(Task, String), FixtureEntry>,
    fallback: Option<Box<dyn ExtractionClient>>,
}

impl FixtureClient {
    pub fn new(entries: impl IntoIterator<Item = FixtureEntry>) -> Self {
        let table = entries.into_iter().map(|e| ((e.task, e.text.clone()), e)).collect();
        Self { table, fallback: None }
    }

    pub fn with_fallback(mut self, fallback: impl ExtractionClient + 'static) -> Self {
        self.fallback = Some(Box::new(fallback));
        self
    }

    /// Loads a JSON array of [`FixtureEntry`].
    pub fn from_file(path: &Path) -> Result<Self, ClientError> {
        let text = std::fs::read_to_string(path).map_err(|e| ClientError::Fixture(format!("{}: {e}", path.display())))?;
        let entries: Vec<FixtureEntry> =
            serde_json::from_str(&text).map_err(|e| ClientError::Fixture(format!("{}: {e}", path.display())))?;
        Ok(Self::new(entries))
    }
}

impl ExtractionClient for FixtureClient {
    fn call(&self, request: &ExtractionRequest) -> Result<ExtractionResponse, ClientError> {
        match self.table.get(&(request.task, request.text.clone())) {
            Some(FixtureEntry { error: Some(e), .. }) => Err(ClientError::Failed(e.clone())),
            Some(e) => Ok(ExtractionResponse { result: e.result.clone(), confidence: e.confidence }),
            None => match &self.fallback {
                Some(f) => f.call(request),
                None => Err(ClientError::NotFound { task: request.task, text: request.text.clone() }),
            },
        }
    }
}
