//! Assembling a domain artifact from a preprocessed corpus.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::function::{fit_function_abstraction, FitError, TracePoint};
use crate::ingest::Corpus;
use crate::model::{DslArtifact, FitMeta, HyperParams};
use crate::product::{fit_model_abstraction_with, ModelFitError, DEFAULT_PROPERTY_SUPPORT};

/// Which abstractions to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitView {
    Fn,
    Model,
    Both,
}

impl FromStr for FitView {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fn" => Ok(Self::Fn),
            "model" => Ok(Self::Model),
            "both" => Ok(Self::Both),
            _ => Err(format!("unknown view {s:?}; expected fn, model or both")),
        }
    }
}

impl fmt::Display for FitView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fn => "fn",
            Self::Model => "model",
            Self::Both => "both",
        })
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Function(#[from] FitError),
    #[error(transparent)]
    Model(#[from] ModelFitError),
}

/// A fitted artifact plus the function-abstraction trace, empty when only
/// the product view was fitted.
#[derive(Debug, Clone)]
pub struct Build {
    pub artifact: DslArtifact,
    pub trace: Vec<TracePoint>,
}

pub fn build_artifact(corpus: &Corpus, hyper: &HyperParams, view: FitView) -> Result<Build, BuildError> {
    build_artifact_with(corpus, hyper, view, DEFAULT_PROPERTY_SUPPORT)
}

pub fn build_artifact_with(corpus: &Corpus, hyper: &HyperParams, view: FitView, support: f64) -> Result<Build, BuildError> {
    let (operations, trace) = if view == FitView::Model {
        (Vec::new(), Vec::new())
    } else {
        let fit = fit_function_abstraction(corpus, hyper)?;
        (fit.operations, fit.history)
    };
    let product_models =
        if view == FitView::Fn { Vec::new() } else { fit_model_abstraction_with(corpus, hyper, support)? };
    let device_catalog = corpus.actions.iter().filter_map(|a| a.device.clone()).collect();
    let meta = FitMeta {
        corpus_size: corpus.docs.len(),
        fit_iterations: trace.last().map_or(0, |t| t.iteration),
        seed: hyper.seed,
    };
    Ok(Build {
        artifact: DslArtifact { domain: corpus.domain.clone(), operations, product_models, device_catalog, meta },
        trace,
    })
}

/// `iteration,log_lik,clusters` rows with a header line.
pub fn trace_csv(trace: &[TracePoint]) -> String {
    let mut out = String::from("iteration,log_lik,clusters\n");
    for t in trace {
        out.push_str(&format!("{},{},{}\n", t.iteration, t.log_lik, t.clusters));
    }
    out
}
