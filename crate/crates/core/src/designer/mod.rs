//! Machine designers: retrieval, prompt assembly, plan parsing and the
//! external refinement loop over a pluggable language-model client.

mod client;
mod prompts;
mod pseudocode;
mod refine;
mod retrieve;
mod spec_text;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[cfg(feature = "live")]
pub use client::HttpLmClient;
pub use client::{
    prompt_hash, LmClient, LmError, LmFixture, LmRequest, LmResponse, MockLmClient, RecordingLmClient, ScriptedLmClient,
};
pub use prompts::{render_prompt, render_text, PromptId, TemplateError};
pub use pseudocode::{action_step, parse_pseudocode, plan_pseudocode, pseudofunction, pseudofunctions, step_call};
pub use refine::{
    refine_from, refine_loop, RefineOutcome, RefineSettings, RefineStart, VerifyMode, DEFAULT_MAX_ITERS,
    DEFAULT_MAX_ROUNDS,
};
pub use retrieve::{parse_rerank, rerank_slots, retrieve_similar, retrieve_similar_with, Retrieval};
pub use spec_text::{operation_spec, product_spec};

use crate::dsl::{parse_plan, serialize_op_steps, serialize_plan, ParseDiagnostic};
use crate::ingest::Corpus;
use crate::model::{DesignTask, DslArtifact, PlanProgram, ProtocolDoc};
use crate::verify::{VerificationReport, VerifyError, VerifyOptions};

#[derive(Debug, Error)]
pub enum DesignError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Client(#[from] LmError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("no parseable plan: {}", .diagnostics.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Failure { raw: String, diagnostics: Vec<ParseDiagnostic> },
    #[error("{0}")]
    Precondition(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DesignerStrategy {
    #[serde(rename = "FB")]
    Fb,
    #[serde(rename = "IB")]
    Ib,
    #[serde(rename = "II")]
    Ii,
    #[serde(rename = "EI")]
    Ei,
    #[serde(rename = "EE")]
    Ee,
    #[serde(rename = "EI+")]
    EiPlus,
    #[serde(rename = "EE+")]
    EePlus,
}

impl DesignerStrategy {
    pub const ALL: [DesignerStrategy; 7] = [Self::Fb, Self::Ib, Self::Ii, Self::Ei, Self::Ee, Self::EiPlus, Self::EePlus];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fb => "FB",
            Self::Ib => "IB",
            Self::Ii => "II",
            Self::Ei => "EI",
            Self::Ee => "EE",
            Self::EiPlus => "EI+",
            Self::EePlus => "EE+",
        }
    }

    /// Strategies that generate DSL programs rather than pseudocode.
    pub fn uses_dsl(self) -> bool {
        matches!(self, Self::Ei | Self::Ee | Self::EiPlus | Self::EePlus)
    }

    pub fn uses_product_view(self) -> bool {
        matches!(self, Self::EiPlus | Self::EePlus)
    }

    pub fn refines(self) -> bool {
        matches!(self, Self::Ee | Self::EePlus)
    }
}

impl fmt::Display for DesignerStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DesignerStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|x| x.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown strategy {s:?}; expected one of FB, IB, II, EI, EE, EI+, EE+"))
    }
}

/// Per-run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignOptions {
    /// Seeds the shuffles of pseudofunction definitions.
    pub seed: u64,
    /// Number of protocols retrieved for reference.
    pub k: usize,
    pub max_iters: usize,
    pub max_rounds: usize,
    /// Corpus protocol being designed, if any. It is never retrieved, and
    /// its pseudofunctions are offered to the II designer.
    pub target: Option<String>,
    /// Further protocols kept out of retrieval.
    pub exclude: BTreeSet<String>,
    /// Asks the client to choose among the top retrieval candidates.
    pub rerank: bool,
    pub verify: VerifyOptions,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            k: 3,
            max_iters: DEFAULT_MAX_ITERS,
            max_rounds: DEFAULT_MAX_ROUNDS,
            target: None,
            exclude: BTreeSet::new(),
            rerank: false,
            verify: VerifyOptions::default(),
        }
    }
}

/// Rerank candidate pool size relative to `k`.
const RERANK_POOL_FACTOR: usize = 3;

#[derive(Debug, Clone)]
pub struct DesignOutcome {
    pub strategy: DesignerStrategy,
    pub plan: PlanProgram,
    /// Present for the refining strategies.
    pub report: Option<VerificationReport>,
    pub diagnostics: Vec<ParseDiagnostic>,
    pub retrieved: Vec<String>,
    /// Plans verified by the refinement loop; 0 for other strategies.
    pub rounds: usize,
    pub calls: usize,
    /// Every model response, in order.
    pub raw: Vec<String>,
}

/// Retrieved references plus the worked example shown in prompts.
struct Context<'a> {
    corpus: &'a Corpus,
    refs: Vec<&'a ProtocolDoc>,
    example: &'a ProtocolDoc,
}

impl<'a> Context<'a> {
    fn example_plan(&self, dual: bool) -> PlanProgram {
        protocol_plan(self.corpus, &self.example.id, dual)
    }

    fn opcodes(&self) -> BTreeSet<String> {
        self.refs.iter().flat_map(|d| self.corpus.actions_of(&d.id)).map(|a| a.opcode.clone()).collect()
    }

    fn components(&self) -> BTreeSet<String> {
        let ids: BTreeSet<&str> = self.refs.iter().map(|d| d.id.as_str()).collect();
        self.corpus.flows.iter().filter(|f| ids.contains(f.protocol.as_str())).map(|f| f.record.unit.component.clone()).collect()
    }

    fn example_slots(&self) -> BTreeMap<&'static str, String> {
        BTreeMap::from([
            ("example protocol title", self.example.title.clone()),
            ("example protocol description", self.example.description.clone()),
        ])
    }
}

/// A corpus protocol as a plan: its actions as steps and, for the dual
/// form, its flow records.
pub fn protocol_plan(corpus: &Corpus, id: &str, dual: bool) -> PlanProgram {
    let steps = corpus.actions_of(id).map(action_step).collect();
    let flows =
        if dual { corpus.flows.iter().filter(|f| f.protocol == id).map(|f| f.record.clone()).collect() } else { Vec::new() };
    PlanProgram::new(steps, flows)
}

fn numbered(steps: &[String]) -> String {
    steps.iter().enumerate().map(|(i, s)| format!("{}. {s}", i + 1)).collect::<Vec<_>>().join("\n")
}

/// Objective text, followed by the base protocol's steps for tasks that
/// start from one.
pub(crate) fn details(task: &DesignTask) -> String {
    match &task.base_protocol {
        Some(base) => format!("{}\n\nThe protocol to start from:\n{}", task.objective, numbered(&base.steps)),
        None => task.objective.clone(),
    }
}

struct Run<'a> {
    task: &'a DesignTask,
    artifact: &'a DslArtifact,
    client: &'a dyn LmClient,
    options: &'a DesignOptions,
    calls: usize,
    raw: Vec<String>,
}

impl Run<'_> {
    fn ask(&mut self, id: PromptId, slots: BTreeMap<&'static str, String>) -> Result<String, DesignError> {
        let prompt = render_prompt(id, &slots)?;
        let text = self.client.complete(&prompt)?;
        self.calls += 1;
        self.raw.push(text.clone());
        Ok(text)
    }

    fn task_slots(&self) -> BTreeMap<&'static str, String> {
        BTreeMap::from([("title", self.task.title.clone()), ("details", details(self.task))])
    }

    fn context<'c>(&mut self, corpus: &'c Corpus) -> Result<Context<'c>, DesignError> {
        let mut exclude = self.options.exclude.clone();
        exclude.extend(self.options.target.clone());
        let k = self.options.k;
        let mut ids = if self.options.rerank {
            let pool = retrieve_similar_with(corpus, &self.task.objective, k * RERANK_POOL_FACTOR, &exclude, self.client)?.ids;
            let answer = self.ask(PromptId::Retrieve, rerank_slots(corpus, &self.task.title, &pool))?;
            parse_rerank(&answer, &pool, k)
        } else {
            retrieve_similar_with(corpus, &self.task.objective, k, &exclude, self.client)?.ids
        };
        if ids.is_empty() {
            ids = corpus.docs.iter().filter(|d| !exclude.contains(&d.id)).take(k).map(|d| d.id.clone()).collect();
        }
        let refs: Vec<&ProtocolDoc> = ids.iter().filter_map(|id| corpus.doc(id)).collect();
        let example = *refs.first().ok_or_else(|| DesignError::Precondition("no protocol available for retrieval".into()))?;
        Ok(Context { corpus, refs, example })
    }

    fn shuffled(&self, mut defs: Vec<String>) -> String {
        defs.shuffle(&mut ChaCha8Rng::seed_from_u64(self.options.seed));
        defs.join("\n\n")
    }

    fn pseudocode_plan(&mut self, text: &str) -> Result<(PlanProgram, Vec<ParseDiagnostic>), DesignError> {
        parse_pseudocode(text)
            .map(|p| (p.value, p.warnings))
            .map_err(|e| DesignError::Failure { raw: text.to_string(), diagnostics: e.diagnostics().to_vec() })
    }

    fn fb(&mut self, ctx: &Context<'_>) -> Result<(PlanProgram, Vec<ParseDiagnostic>), DesignError> {
        let mut slots = self.task_slots();
        slots.extend(ctx.example_slots());
        slots.insert("example protocol steps", numbered(&ctx.example.steps));
        let steps = ctx.refs.iter().map(|d| format!("{}\n{}", d.title, numbered(&d.steps))).collect::<Vec<_>>();
        slots.insert("steps", steps.join("\n\n"));
        let nl_plan = self.ask(PromptId::NlPlan, slots)?;
        let slots = BTreeMap::from([
            ("example protocol title", ctx.example.title.clone()),
            ("example protocol", numbered(&ctx.example.steps)),
            ("example python pseudocode", plan_pseudocode(&ctx.example_plan(false))),
            ("title", self.task.title.clone()),
            ("protocol", nl_plan),
        ]);
        let code = self.ask(PromptId::NlToPseudocode, slots)?;
        self.pseudocode_plan(&code)
    }

    fn instance(&mut self, ctx: &Context<'_>, with_target: bool) -> Result<(PlanProgram, Vec<ParseDiagnostic>), DesignError> {
        let mut defs = pseudofunctions(ctx.refs.iter().flat_map(|d| ctx.corpus.actions_of(&d.id)));
        if with_target {
            if let Some(target) = &self.options.target {
                for d in pseudofunctions(ctx.corpus.actions_of(target)) {
                    if !defs.contains(&d) {
                        defs.push(d);
                    }
                }
            }
        }
        let mut slots = self.task_slots();
        slots.extend(ctx.example_slots());
        slots.insert("example pseudocode", plan_pseudocode(&ctx.example_plan(false)));
        slots.insert("psuedofunctions", self.shuffled(defs));
        let code = self.ask(PromptId::PseudocodePlan, slots)?;
        self.pseudocode_plan(&code)
    }

    /// Raw model output for the DSL generation prompt.
    fn dsl(&mut self, ctx: &Context<'_>, dual: bool) -> Result<String, DesignError> {
        let mut slots = self.task_slots();
        slots.extend(ctx.example_slots());
        let example = ctx.example_plan(dual);
        if dual {
            slots.insert("example plan", serialize_plan(&example));
            slots.insert("Operation-DSL", operation_spec(self.artifact, &ctx.opcodes()));
            slots.insert("Product-DSL", product_spec(self.artifact, &ctx.components()));
            self.ask(PromptId::DslPlanDual, slots)
        } else {
            slots.insert("example plan", serialize_op_steps(example.steps()));
            slots.insert("DSL", operation_spec(self.artifact, &ctx.opcodes()));
            self.ask(PromptId::DslPlanOperation, slots)
        }
    }
}

fn check_preconditions(strategy: DesignerStrategy, artifact: &DslArtifact, corpus: &Corpus) -> Result<(), DesignError> {
    if corpus.docs.is_empty() {
        return Err(DesignError::Precondition("corpus is empty".into()));
    }
    if strategy.uses_dsl() && artifact.operations.is_empty() {
        return Err(DesignError::Precondition(format!("{strategy} needs an artifact with operations")));
    }
    if strategy.uses_product_view() && artifact.product_models.is_empty() {
        return Err(DesignError::Precondition(format!("{strategy} needs an artifact with product models")));
    }
    Ok(())
}

/// Designs a plan for `task` with one strategy.
pub fn run_designer(
    task: &DesignTask,
    strategy: DesignerStrategy,
    artifact: &DslArtifact,
    corpus: &Corpus,
    client: &dyn LmClient,
    options: &DesignOptions,
) -> Result<DesignOutcome, DesignError> {
    check_preconditions(strategy, artifact, corpus)?;
    if options.k == 0 {
        return Err(DesignError::Precondition("k must be at least 1".into()));
    }
    let mut run = Run { task, artifact, client, options, calls: 0, raw: Vec::new() };
    let ctx = run.context(corpus)?;
    let retrieved: Vec<String> = ctx.refs.iter().map(|d| d.id.clone()).collect();
    let outcome = |run: Run<'_>, plan, report, diagnostics, rounds| DesignOutcome {
        strategy,
        plan,
        report,
        diagnostics,
        retrieved: retrieved.clone(),
        rounds,
        calls: run.calls,
        raw: run.raw,
    };
    match strategy {
        DesignerStrategy::Fb | DesignerStrategy::Ib | DesignerStrategy::Ii => {
            let (plan, diagnostics) = match strategy {
                DesignerStrategy::Fb => run.fb(&ctx)?,
                DesignerStrategy::Ib => run.instance(&ctx, false)?,
                _ => run.instance(&ctx, true)?,
            };
            Ok(outcome(run, plan, None, diagnostics, 0))
        }
        DesignerStrategy::Ei | DesignerStrategy::EiPlus => {
            let text = run.dsl(&ctx, strategy.uses_product_view())?;
            match parse_plan(&text) {
                Ok(p) => Ok(outcome(run, p.value, None, p.warnings, 0)),
                Err(e) => Err(DesignError::Failure { raw: text, diagnostics: e.diagnostics().to_vec() }),
            }
        }
        DesignerStrategy::Ee | DesignerStrategy::EePlus => {
            let text = run.dsl(&ctx, strategy.uses_product_view())?;
            let start = match parse_plan(&text) {
                Ok(p) => RefineStart::Plan(p.value),
                Err(e) => RefineStart::Unparsed { text, diagnostics: e.diagnostics().to_vec() },
            };
            let mode = if strategy == DesignerStrategy::EePlus { VerifyMode::Dual } else { VerifyMode::Operation };
            let settings = RefineSettings {
                max_iters: options.max_iters,
                max_rounds: options.max_rounds,
                mode,
                verify: options.verify.clone(),
            };
            let refined = refine_from(start, task, artifact, client, &settings)?;
            run.calls += refined.calls;
            run.raw.extend(refined.raw);
            Ok(outcome(run, refined.plan, Some(refined.report), refined.diagnostics, refined.rounds))
        }
    }
}
