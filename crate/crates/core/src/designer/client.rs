//! Language-model service boundary and its deterministic stand-ins.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LmError {
    #[error("no fixture for prompt {hash}: {preview}")]
    MissingFixture { hash: String, preview: String },
    #[error("scripted client ran out of responses after {0} call(s)")]
    ScriptExhausted(usize),
    #[error("fixture {path}: {message}")]
    BadFixture { path: PathBuf, message: String },
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("transport error: {0}")]
    Transport(String),
}

/// A text-completion service, optionally able to embed text.
pub trait LmClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, LmError>;

    /// Embedding of `text`, or `None` when the client cannot embed.
    fn embed(&self, _text: &str) -> Result<Option<Vec<f64>>, LmError> {
        Ok(None)
    }
}

impl<C: LmClient + ?Sized> LmClient for Box<C> {
    fn complete(&self, prompt: &str) -> Result<String, LmError> {
        (**self).complete(prompt)
    }

    fn embed(&self, text: &str) -> Result<Option<Vec<f64>>, LmError> {
        (**self).embed(text)
    }
}

/// Lowercase hex SHA-256 of the prompt bytes.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Request body of the completion wire protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmRequest {
    pub model: String,
    pub prompt: String,
    pub seed: u64,
}

/// Response body of the completion wire protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmResponse {
    pub text: String,
}

/// One stored completion. The prompt is kept for readability and checked
/// against the hash when present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmFixture {
    pub sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    pub text: String,
}

impl LmFixture {
    pub fn new(prompt: &str, text: impl Into<String>) -> Self {
        Self { sha256: prompt_hash(prompt), prompt: Some(prompt.to_string()), text: text.into() }
    }
}

fn preview(prompt: &str) -> String {
    let line = prompt.lines().find(|l| l.starts_with("Generate") || l.starts_with("Refine")).unwrap_or("");
    line.chars().take(120).collect()
}

/// Replays completions from a table keyed by prompt hash.
#[derive(Debug, Clone, Default)]
pub struct MockLmClient {
    table: BTreeMap<String, String>,
}

impl MockLmClient {
    pub fn new(fixtures: impl IntoIterator<Item = LmFixture>) -> Self {
        Self { table: fixtures.into_iter().map(|f| (f.sha256, f.text)).collect() }
    }

    /// Loads every `*.json` fixture in `dir`, in file-name order.
    pub fn from_dir(dir: &Path) -> Result<Self, LmError> {
        let io = |source| LmError::Io { path: dir.to_path_buf(), source };
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut fixtures = Vec::with_capacity(paths.len());
        for path in paths {
            let text = fs::read_to_string(&path).map_err(|source| LmError::Io { path: path.clone(), source })?;
            let bad = |message: String| LmError::BadFixture { path: path.clone(), message };
            let fixture: LmFixture = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
            if let Some(p) = &fixture.prompt {
                if prompt_hash(p) != fixture.sha256 {
                    return Err(bad("sha256 does not match the stored prompt".into()));
                }
            }
            fixtures.push(fixture);
        }
        Ok(Self::new(fixtures))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl LmClient for MockLmClient {
    fn complete(&self, prompt: &str) -> Result<String, LmError> {
        let hash = prompt_hash(prompt);
        self.table.get(&hash).cloned().ok_or_else(|| LmError::MissingFixture { preview: preview(prompt), hash })
    }
}

/// Returns canned responses in order, whatever the prompt, and logs the
/// prompts it was given.
#[derive(Debug, Default)]
pub struct ScriptedLmClient {
    responses: Mutex<VecDeque<String>>,
    prompts: Mutex<Vec<String>>,
}

impl ScriptedLmClient {
    pub fn new<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        Self { responses: Mutex::new(responses.into_iter().map(Into::into).collect()), prompts: Mutex::default() }
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().expect("prompt log poisoned").clone()
    }

    pub fn calls(&self) -> usize {
        self.prompts.lock().expect("prompt log poisoned").len()
    }
}

impl LmClient for ScriptedLmClient {
    fn complete(&self, prompt: &str) -> Result<String, LmError> {
        let mut prompts = self.prompts.lock().expect("prompt log poisoned");
        prompts.push(prompt.to_string());
        let next = self.responses.lock().expect("script poisoned").pop_front();
        next.ok_or(LmError::ScriptExhausted(prompts.len() - 1))
    }
}

/// Wraps a client and keeps every exchange so it can be written out as
/// fixtures.
pub struct RecordingLmClient<C> {
    inner: C,
    log: Mutex<Vec<LmFixture>>,
}

impl<C: LmClient> RecordingLmClient<C> {
    pub fn new(inner: C) -> Self {
        Self { inner, log: Mutex::default() }
    }

    pub fn fixtures(&self) -> Vec<LmFixture> {
        self.log.lock().expect("recording poisoned").clone()
    }

    /// Writes one `{sha256}.json` file per recorded exchange.
    pub fn write_fixtures(&self, dir: &Path) -> Result<usize, LmError> {
        let fixtures = self.fixtures();
        fs::create_dir_all(dir).map_err(|source| LmError::Io { path: dir.to_path_buf(), source })?;
        for f in &fixtures {
            let path = dir.join(format!("{}.json", f.sha256));
            let text = serde_json::to_string_pretty(f).expect("fixtures always serialize") + "\n";
            fs::write(&path, text).map_err(|source| LmError::Io { path, source })?;
        }
        Ok(fixtures.len())
    }
}

impl<C: LmClient> LmClient for RecordingLmClient<C> {
    fn complete(&self, prompt: &str) -> Result<String, LmError> {
        let text = self.inner.complete(prompt)?;
        self.log.lock().expect("recording poisoned").push(LmFixture::new(prompt, text.clone()));
        Ok(text)
    }

    fn embed(&self, text: &str) -> Result<Option<Vec<f64>>, LmError> {
        self.inner.embed(text)
    }
}

/// Completion over HTTP using the JSON wire protocol.
#[cfg(feature = "live")]
#[derive(Debug, Clone)]
pub struct HttpLmClient {
    pub endpoint: String,
    pub model: String,
    pub seed: u64,
}

#[cfg(feature = "live")]
impl LmClient for HttpLmClient {
    fn complete(&self, prompt: &str) -> Result<String, LmError> {
        let request = LmRequest { model: self.model.clone(), prompt: prompt.to_string(), seed: self.seed };
        let transport = |e: ureq::Error| LmError::Transport(e.to_string());
        let mut response = ureq::post(&self.endpoint).send_json(&request).map_err(transport)?;
        let body: LmResponse = response.body_mut().read_json().map_err(transport)?;
        Ok(body.text)
    }
}
