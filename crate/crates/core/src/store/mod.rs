//! Versioned on-disk formats and the workspace directory layout.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::dsl::{parse_plan, serialize_plan, DslError, ParseDiagnostic};
use crate::ingest::Corpus;
use crate::model::{DslArtifact, PlanProgram, ProtocolDoc};

pub const SCHEMA_VERSION: u64 = 1;
pub const ARTIFACT_EXT: &str = ".dsl.json";
pub const PLAN_EXT: &str = ".plan.json";
pub const MANIFEST: &str = "workspace.json";
const VERSION_KEY: &str = "schemaVersion";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: schemaVersion {found:?} is not supported (expected {SCHEMA_VERSION})")]
    Schema { path: PathBuf, found: Option<u64> },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Plan { path: PathBuf, source: DslError },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

fn format_err(path: &Path, e: impl ToString) -> StoreError {
    StoreError::Format { path: path.to_path_buf(), message: e.to_string() }
}

/// Writes through a sibling temporary file so readers never see a partial
/// file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io(parent))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io(&tmp))?;
    fs::rename(&tmp, path).map_err(io(path))
}

/// Canonical JSON text: object keys sorted, two-space indent, trailing
/// newline.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("stored values always serialize");
    serde_json::to_string_pretty(&v).expect("json values always serialize") + "\n"
}

/// Canonical JSON with the schema version added to the top-level object.
pub fn versioned_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("stored values always serialize");
    if let Value::Object(map) = &mut v {
        map.insert(VERSION_KEY.into(), Value::from(SCHEMA_VERSION));
    }
    serde_json::to_string_pretty(&v).expect("json values always serialize") + "\n"
}

pub fn save_versioned<T: Serialize>(value: &T, path: &Path) -> Result<(), StoreError> {
    write_atomic(path, versioned_json(value).as_bytes())
}

pub fn load_versioned<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    let mut v: Value = serde_json::from_str(&text).map_err(|e| format_err(path, e))?;
    let found = v.get(VERSION_KEY).and_then(Value::as_u64);
    if found != Some(SCHEMA_VERSION) {
        return Err(StoreError::Schema { path: path.to_path_buf(), found });
    }
    if let Value::Object(map) = &mut v {
        map.remove(VERSION_KEY);
    }
    serde_json::from_value(v).map_err(|e| format_err(path, e))
}

pub fn save_artifact(artifact: &DslArtifact, path: &Path) -> Result<(), StoreError> {
    save_versioned(artifact, path)
}

pub fn load_artifact(path: &Path) -> Result<DslArtifact, StoreError> {
    load_versioned(path)
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<(), StoreError> {
    save_versioned(corpus, path)
}

pub fn load_corpus(path: &Path) -> Result<Corpus, StoreError> {
    load_versioned(path)
}

pub fn save_plan(plan: &PlanProgram, path: &Path) -> Result<(), StoreError> {
    write_atomic(path, (serialize_plan(plan) + "\n").as_bytes())
}

/// Loads a plan, returning its non-fatal parse warnings alongside.
pub fn load_plan(path: &Path) -> Result<(PlanProgram, Vec<ParseDiagnostic>), StoreError> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    let parsed = parse_plan(&text).map_err(|source| StoreError::Plan { path: path.to_path_buf(), source })?;
    Ok((parsed.value, parsed.warnings))
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<(), StoreError> {
    write_atomic(path, canonical_json(value).as_bytes())
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e))
}

/// Reads raw protocols, one JSON object per line. Blank lines are skipped.
pub fn read_protocols(path: &Path) -> Result<Vec<ProtocolDoc>, StoreError> {
    let file = fs::File::open(path).map_err(io(path))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| format_err(path, format!("line {}: {e}", n + 1)))?);
    }
    Ok(out)
}

pub fn write_protocols(docs: &[ProtocolDoc], path: &Path) -> Result<(), StoreError> {
    let mut text = String::new();
    for d in docs {
        text.push_str(&serde_json::to_string(d).expect("protocols always serialize"));
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WorkspaceManifest {
    pub domain: Option<String>,
    pub seed: u64,
}

/// A directory holding `corpus/`, `artifacts/`, `plans/`, `reports/` and
/// `fixtures/` plus a `workspace.json` manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub const DIRS: [&'static str; 5] = ["corpus", "artifacts", "plans", "reports", "fixtures"];

    pub fn at(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    /// Creates the layout and writes the manifest if none exists.
    pub fn init(root: impl Into<PathBuf>, manifest: &WorkspaceManifest) -> Result<Self, StoreError> {
        let ws = Self::at(root);
        for d in Self::DIRS {
            let p = ws.root.join(d);
            fs::create_dir_all(&p).map_err(io(&p))?;
        }
        if !ws.manifest_path().exists() {
            save_versioned(manifest, &ws.manifest_path())?;
        }
        Ok(ws)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join(MANIFEST)
    }

    pub fn manifest(&self) -> Result<WorkspaceManifest, StoreError> {
        load_versioned(&self.manifest_path())
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.root.join("corpus").join("corpus.json")
    }

    pub fn artifact_path(&self, name: &str) -> PathBuf {
        self.root.join("artifacts").join(format!("{name}{ARTIFACT_EXT}"))
    }

    pub fn plan_path(&self, name: &str) -> PathBuf {
        self.root.join("plans").join(format!("{name}{PLAN_EXT}"))
    }

    pub fn report_path(&self, name: &str) -> PathBuf {
        self.root.join("reports").join(format!("{name}.json"))
    }

    pub fn lm_fixtures_dir(&self) -> PathBuf {
        self.root.join("fixtures").join("lm")
    }
}
