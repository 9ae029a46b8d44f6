//! Shared domain types for both program views and the fitted DSL.

mod canon;
mod quantity;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use canon::{canonicalize, canonicalize_opt};
pub use quantity::{parse_quantity, Magnitude, Quantity};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("name {0:?} is empty after normalization")]
    EmptyName(String),
    #[error("unknown component type {0:?}")]
    UnknownComponentType(String),
    #[error("{0} requires a base protocol")]
    MissingBaseProtocol(TaskKind),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperParams(String),
}

/// Experimental domain, e.g. Genetics or Ecology. Never empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DomainId(String);

impl DomainId {
    pub fn new(name: impl Into<String>) -> Result<Self, ModelError> {
        let name = name.into();
        let trimmed = name.trim();
        if trimmed.is_empty() {
            return Err(ModelError::EmptyName(name));
        }
        Ok(Self(trimmed.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for DomainId {
    type Error = ModelError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl From<DomainId> for String {
    fn from(d: DomainId) -> Self {
        d.0
    }
}

impl fmt::Display for DomainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One protocol as published: raw step text plus its objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProtocolDoc {
    pub id: String,
    pub title: String,
    /// The experimental objective.
    pub description: String,
    pub domain: DomainId,
    pub steps: Vec<String>,
}

/// Closed set of flow-unit classes. Phase labels come first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ComponentType {
    Gas,
    Liquid,
    Solid,
    SemiSolid,
    Mixture,
    ChemicalCompound,
    BiologicalMaterial,
    Reagent,
    PhysicalObject,
    FileData,
}

impl ComponentType {
    pub const ALL: [ComponentType; 10] = [
        Self::Gas,
        Self::Liquid,
        Self::Solid,
        Self::SemiSolid,
        Self::Mixture,
        Self::ChemicalCompound,
        Self::BiologicalMaterial,
        Self::Reagent,
        Self::PhysicalObject,
        Self::FileData,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Gas => "Gas",
            Self::Liquid => "Liquid",
            Self::Solid => "Solid",
            Self::SemiSolid => "Semi-Solid",
            Self::Mixture => "Mixture",
            Self::ChemicalCompound => "ChemicalCompound",
            Self::BiologicalMaterial => "BiologicalMaterial",
            Self::Reagent => "Reagent",
            Self::PhysicalObject => "PhysicalObject",
            Self::FileData => "File/Data",
        }
    }

    /// Phase labels (as opposed to type labels).
    pub fn is_phase(self) -> bool {
        matches!(self, Self::Gas | Self::Liquid | Self::Solid | Self::SemiSolid | Self::Mixture)
    }

    /// Parses a label, or `None` for the explicit "no label" spellings
    /// (`""`, `"None"`, `"null"`).
    pub fn parse_label(s: &str) -> Result<Option<Self>, ModelError> {
        let folded: String = s.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect();
        if folded.is_empty() || folded == "none" || folded == "null" {
            return Ok(None);
        }
        Self::ALL
            .into_iter()
            .find(|t| {
                let name: String = t.as_str().chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect();
                name == folded
            })
            .map(Some)
            .ok_or_else(|| ModelError::UnknownComponentType(s.to_string()))
    }
}

impl fmt::Display for ComponentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ComponentType {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_label(s)?.ok_or_else(|| ModelError::UnknownComponentType(s.to_string()))
    }
}

impl Serialize for ComponentType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ComponentType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Reference name of a component in one state: `lysate_0`, `lysate_1`, ...
///
/// The textual form is `component` or `component_index`. A trailing
/// `_<digits>` is always read as the index, so the text form and the
/// structured form convert losslessly.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RefName {
    component: String,
    index: Option<u32>,
}

impl RefName {
    /// Parses a (canonical) reference name.
    pub fn parse(text: &str) -> Self {
        if let Some(pos) = text.rfind('_') {
            let (head, digits) = (&text[..pos], &text[pos + 1..]);
            if !head.is_empty() && !digits.is_empty() && digits.len() <= 9 && digits.bytes().all(|b| b.is_ascii_digit()) {
                if let Ok(index) = digits.parse() {
                    return Self { component: head.to_string(), index: Some(index) };
                }
            }
        }
        Self { component: text.to_string(), index: None }
    }

    /// Builds from a component and optional index. With no index the
    /// component text is parsed, so `new("buffer_2", None)` has index 2.
    pub fn new(component: impl Into<String>, index: Option<u32>) -> Self {
        let component = component.into();
        match index {
            Some(index) => Self { component, index: Some(index) },
            None => Self::parse(&component),
        }
    }

    pub fn component(&self) -> &str {
        &self.component
    }

    pub fn index(&self) -> Option<u32> {
        self.index
    }

    /// Same reference, or same component when either side has no index.
    pub fn matches(&self, other: &RefName) -> bool {
        self.component == other.component
            && match (self.index, other.index) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            }
    }
}

impl fmt::Display for RefName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}_{}", self.component, i),
            None => f.write_str(&self.component),
        }
    }
}

impl Serialize for RefName {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RefName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Self::parse(&String::deserialize(d)?))
    }
}

/// A precondition slot or postcondition emit of a step.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SlotRef {
    pub name: RefName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component_type: Option<ComponentType>,
}

impl SlotRef {
    pub fn new(name: RefName) -> Self {
        Self { name, component_type: None }
    }

    pub fn typed(name: RefName, component_type: Option<ComponentType>) -> Self {
        Self { name, component_type }
    }

    pub fn component(&self) -> &str {
        self.name.component()
    }
}

/// Emits share the slot representation.
pub type EmitRef = SlotRef;

/// Where an instance action came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SourceRef {
    pub protocol: String,
    pub step: usize,
}

impl fmt::Display for SourceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.protocol, self.step)
    }
}

/// One decomposed protocol step with its local execution context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InstanceAction {
    pub opcode: String,
    pub precond: Vec<SlotRef>,
    pub postcond: Vec<EmitRef>,
    pub device: Option<String>,
    pub config: BTreeMap<String, Quantity>,
    pub source: SourceRef,
}

/// Reciprocal of the execution-context structure used by patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Pattern {
    pub slot_arg_num: usize,
    pub slot_args: Vec<Option<ComponentType>>,
    pub emit_arg_num: usize,
    pub emit_args: Vec<Option<ComponentType>>,
    pub device_type: Option<String>,
    pub config_model: BTreeMap<String, ValueModel>,
    pub examples: Vec<SourceRef>,
}

impl Pattern {
    pub fn new(
        slot_args: Vec<Option<ComponentType>>,
        emit_args: Vec<Option<ComponentType>>,
        device_type: Option<String>,
        config_model: BTreeMap<String, ValueModel>,
        examples: Vec<SourceRef>,
    ) -> Self {
        Self {
            slot_arg_num: slot_args.len(),
            slot_args,
            emit_arg_num: emit_args.len(),
            emit_args,
            device_type,
            config_model,
            examples,
        }
    }

    pub fn config_keys(&self) -> BTreeSet<&str> {
        self.config_model.keys().map(String::as_str).collect()
    }

    pub fn is_well_formed(&self) -> bool {
        self.slot_arg_num == self.slot_args.len() && self.emit_arg_num == self.emit_args.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ValueKind {
    Discrete,
    Continuous,
    Mixed,
}

/// One observed level of a discrete value model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiscreteLevel {
    pub value: Quantity,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Interval {
    pub min: f64,
    pub max: f64,
    pub unit: String,
}

/// Gaussian-process summary of the perturbation around observed values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GpSummary {
    pub mean: f64,
    pub variance: f64,
    pub lengthscale: f64,
    pub n: usize,
}

/// Permissible values of one configuration key or property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValueModel {
    pub kind: ValueKind,
    pub discrete: Vec<DiscreteLevel>,
    pub interval: Option<Interval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gp: Option<GpSummary>,
}

impl ValueModel {
    pub fn is_consistent(&self) -> bool {
        match self.kind {
            ValueKind::Discrete => !self.discrete.is_empty(),
            ValueKind::Continuous => self.interval.is_some(),
            ValueKind::Mixed => !self.discrete.is_empty() && self.interval.is_some(),
        }
    }

    /// Most frequent discrete level; ties go to the earlier level.
    pub fn modal(&self) -> Option<&Quantity> {
        let mut best: Option<&DiscreteLevel> = None;
        for level in &self.discrete {
            if best.is_none_or(|b| level.count > b.count) {
                best = Some(level);
            }
        }
        best.map(|l| &l.value)
    }

    /// The default value used when grounding an interface.
    pub fn default_value(&self) -> Option<Quantity> {
        match self.kind {
            ValueKind::Discrete | ValueKind::Mixed => self.modal().cloned(),
            ValueKind::Continuous => {
                let iv = self.interval.as_ref()?;
                Some(Quantity::scalar(0.5 * (iv.min + iv.max), iv.unit.clone()))
            }
        }
    }
}

/// An operation generalized over all its execution contexts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OperationInterface {
    pub unique_name: String,
    pub patterns: Vec<Pattern>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UnitArgType {
    #[serde(rename = "MAT")]
    Material,
    #[serde(rename = "PROD")]
    Product,
}

impl UnitArgType {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Material => "MAT",
            Self::Product => "PROD",
        }
    }
}

/// One component of the product flow between two steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FlowUnit {
    pub component: String,
    pub component_type: Option<ComponentType>,
    pub ref_name: RefName,
    pub unit_arg_type: UnitArgType,
    pub vol: Option<Quantity>,
    pub container: Option<String>,
    pub cond: BTreeMap<String, Quantity>,
}

impl FlowUnit {
    /// Property keys carried by this unit: `vol` when present plus every
    /// condition key.
    pub fn property_keys(&self) -> BTreeSet<String> {
        let mut keys: BTreeSet<String> = self.cond.keys().cloned().collect();
        if self.vol.is_some() {
            keys.insert(VOL_KEY.to_string());
        }
        keys
    }

    pub fn property(&self, key: &str) -> Option<&Quantity> {
        if key == VOL_KEY {
            self.vol.as_ref()
        } else {
            self.cond.get(key)
        }
    }
}

/// Property key under which a flow unit's volume is modeled.
pub const VOL_KEY: &str = "vol";

/// A flow unit with its producing and consuming operations. `None` marks an
/// initial reagent (pred) or a final product (succ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProductFlowRecord {
    pub pred: Option<String>,
    pub unit: FlowUnit,
    pub succ: Option<String>,
}

/// Domain-level abstraction of one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProductModel {
    pub component: String,
    pub pred_ops: BTreeMap<String, usize>,
    pub succ_ops: BTreeMap<String, usize>,
    pub property_keys: BTreeSet<String>,
    pub property_models: BTreeMap<String, ValueModel>,
    pub phase_conditioned: BTreeMap<ComponentType, BTreeSet<String>>,
    /// Distinct (phase, pred, succ) states observed for this component.
    pub state_count: usize,
}

impl ProductModel {
    /// Keys a unit of this component must carry given its type.
    pub fn required_keys(&self, component_type: Option<ComponentType>) -> BTreeSet<String> {
        match component_type.and_then(|t| self.phase_conditioned.get(&t)) {
            Some(keys) => keys.clone(),
            None if self.phase_conditioned.is_empty() => self.property_keys.clone(),
            None => BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitMeta {
    pub corpus_size: usize,
    pub fit_iterations: usize,
    pub seed: u64,
}

/// The synthesized domain DSL: operation view plus product view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DslArtifact {
    pub domain: DomainId,
    pub operations: Vec<OperationInterface>,
    pub product_models: Vec<ProductModel>,
    pub device_catalog: BTreeSet<String>,
    pub meta: FitMeta,
}

impl DslArtifact {
    pub fn operation(&self, name: &str) -> Option<&OperationInterface> {
        self.operations.iter().find(|op| op.unique_name == name)
    }

    pub fn product_model(&self, component: &str) -> Option<&ProductModel> {
        self.product_models.iter().find(|m| m.component == component)
    }

    pub fn pattern_count(&self) -> usize {
        self.operations.iter().map(|op| op.patterns.len()).sum()
    }

    pub fn model_state_count(&self) -> usize {
        self.product_models.iter().map(|m| m.state_count).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    Planning,
    Modification,
    Adjustment,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Planning => "Planning",
            Self::Modification => "Modification",
            Self::Adjustment => "Adjustment",
        })
    }
}

/// A protocol design request: what we want and what we have.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DesignTask {
    pub kind: TaskKind,
    pub title: String,
    /// The experimental objective.
    pub objective: String,
    /// Available reagents: canonical component names.
    pub reagents: BTreeSet<String>,
    pub domain: DomainId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_protocol: Option<ProtocolDoc>,
}

impl DesignTask {
    pub fn validate(&self) -> Result<(), ModelError> {
        match (self.kind, &self.base_protocol) {
            (TaskKind::Modification | TaskKind::Adjustment, None) => Err(ModelError::MissingBaseProtocol(self.kind)),
            _ => Ok(()),
        }
    }
}

/// One operation-view step of a designed plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OpStep {
    pub operation: String,
    pub precond: Vec<SlotRef>,
    pub device: Option<String>,
    pub config: BTreeMap<String, Quantity>,
    pub postcond: Vec<EmitRef>,
}

impl OpStep {
    pub fn new(operation: impl Into<String>) -> Self {
        Self {
            operation: operation.into(),
            precond: Vec::new(),
            device: None,
            config: BTreeMap::new(),
            postcond: Vec::new(),
        }
    }
}

/// A designed protocol: operation steps plus, for dual plans, the product
/// flow records.
///
/// Flow records are kept in a canonical order: stably sorted by the step
/// that emits them, with initial reagents first. This is the order in which
/// they appear in serialized programs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlanProgram {
    steps: Vec<OpStep>,
    flows: Vec<ProductFlowRecord>,
}

impl PlanProgram {
    pub fn new(steps: Vec<OpStep>, flows: Vec<ProductFlowRecord>) -> Self {
        let mut keyed: Vec<(Option<usize>, ProductFlowRecord)> =
            flows.into_iter().map(|f| (emitting_step(&steps, &f.unit.ref_name), f)).collect();
        keyed.sort_by_key(|(anchor, _)| *anchor);
        Self { steps, flows: keyed.into_iter().map(|(_, f)| f).collect() }
    }

    pub fn operation_only(steps: Vec<OpStep>) -> Self {
        Self { steps, flows: Vec::new() }
    }

    pub fn steps(&self) -> &[OpStep] {
        &self.steps
    }

    pub fn flows(&self) -> &[ProductFlowRecord] {
        &self.flows
    }

    /// A plan is dual when it carries product-view records.
    pub fn is_dual(&self) -> bool {
        !self.flows.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty() && self.flows.is_empty()
    }

    pub fn into_parts(self) -> (Vec<OpStep>, Vec<ProductFlowRecord>) {
        (self.steps, self.flows)
    }

    /// Index of the step a flow record is printed after, `None` for records
    /// no step emits.
    pub fn anchor_of(&self, record: &ProductFlowRecord) -> Option<usize> {
        emitting_step(&self.steps, &record.unit.ref_name)
    }

    pub fn opcodes(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.operation.as_str()).collect()
    }
}

fn emitting_step(steps: &[OpStep], name: &RefName) -> Option<usize> {
    steps
        .iter()
        .position(|s| s.postcond.iter().any(|e| e.name == *name))
        .or_else(|| steps.iter().position(|s| s.postcond.iter().any(|e| e.name.matches(name))))
}

/// Per-level pseudo-counts of the base measure over discrete features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct BaseMeasure {
    pub precond: f64,
    pub postcond: f64,
    pub device: f64,
    pub config_keys: f64,
}

impl Default for BaseMeasure {
    fn default() -> Self {
        Self { precond: 1.0, postcond: 1.0, device: 1.0, config_keys: 1.0 }
    }
}

/// Squared-exponential kernel parameters. A lengthscale of `None` means
/// "use the empirical standard deviation of the key's values".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct GpKernel {
    pub variance: f64,
    pub lengthscale: Option<f64>,
}

impl Default for GpKernel {
    fn default() -> Self {
        Self { variance: 1.0, lengthscale: None }
    }
}

/// Hyperparameters of the non-parametric fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct HyperParams {
    /// Dirichlet-process concentration.
    pub alpha: f64,
    pub base_measure: BaseMeasure,
    /// Prior mean for configuration values; `None` means the empirical mean.
    pub gp_mean: Option<f64>,
    pub gp_kernel: GpKernel,
    pub iterations: usize,
    pub seed: u64,
    /// Window (in sweeps) for the early-stop test; 0 disables early stop.
    pub convergence_window: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            base_measure: BaseMeasure::default(),
            gp_mean: None,
            gp_kernel: GpKernel::default(),
            iterations: 1000,
            seed: 0,
            convergence_window: 20,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bm = &self.base_measure;
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(ModelError::InvalidHyperParams(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if self.iterations == 0 {
            return Err(ModelError::InvalidHyperParams("iterations must be >= 1".into()));
        }
        if [bm.precond, bm.postcond, bm.device, bm.config_keys].iter().any(|v| !(*v > 0.0)) {
            return Err(ModelError::InvalidHyperParams("base measure pseudo-counts must be > 0".into()));
        }
        if !(self.gp_kernel.variance > 0.0) || self.gp_kernel.lengthscale.is_some_and(|l| !(l > 0.0)) {
            return Err(ModelError::InvalidHyperParams("GP kernel parameters must be > 0".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn component_type_closed_set() {
        assert_eq!("Liquid".parse::<ComponentType>().unwrap(), ComponentType::Liquid);
        assert_eq!("File/Data".parse::<ComponentType>().unwrap(), ComponentType::FileData);
        assert_eq!("semi-solid".parse::<ComponentType>().unwrap(), ComponentType::SemiSolid);
        assert_eq!("Chemical Compound".parse::<ComponentType>().unwrap(), ComponentType::ChemicalCompound);
        assert!(matches!("Plasma".parse::<ComponentType>(), Err(ModelError::UnknownComponentType(_))));
        assert_eq!(ComponentType::parse_label("None").unwrap(), None);
        for t in ComponentType::ALL {
            assert_eq!(t.as_str().parse::<ComponentType>().unwrap(), t);
        }
    }

    #[test]
    fn ref_name_forms() {
        let r = RefName::parse("ethanol_0");
        assert_eq!((r.component(), r.index()), ("ethanol", Some(0)));
        assert_eq!(r.to_string(), "ethanol_0");
        let r = RefName::parse("supernatant");
        assert_eq!((r.component(), r.index()), ("supernatant", None));
        let r = RefName::new("buffer_2", Some(0));
        assert_eq!(RefName::parse(&r.to_string()), r);
        assert_eq!(RefName::new("buffer_2", None), RefName::parse("buffer_2"));
        assert!(RefName::parse("lysate").matches(&RefName::parse("lysate_3")));
        assert!(!RefName::parse("lysate_1").matches(&RefName::parse("lysate_3")));
        assert_eq!(RefName::parse("_1").component(), "_1");
    }

    #[test]
    fn hyperparams_validation() {
        assert!(HyperParams::default().validate().is_ok());
        let bad = HyperParams { alpha: 0.0, ..HyperParams::default() };
        assert!(bad.validate().is_err());
        let bad = HyperParams { iterations: 0, ..HyperParams::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn task_requires_base_for_modification() {
        let t = DesignTask {
            kind: TaskKind::Modification,
            title: "t".into(),
            objective: "o".into(),
            reagents: BTreeSet::new(),
            domain: DomainId::new("Genetics").unwrap(),
            base_protocol: None,
        };
        assert!(t.validate().is_err());
        assert!(DesignTask { kind: TaskKind::Planning, ..t }.validate().is_ok());
    }

    #[test]
    fn value_model_defaults() {
        let vm = ValueModel {
            kind: ValueKind::Discrete,
            discrete: vec![
                DiscreteLevel { value: parse_quantity("10 min"), count: 2 },
                DiscreteLevel { value: parse_quantity("20 min"), count: 5 },
            ],
            interval: None,
            gp: None,
        };
        assert_eq!(vm.default_value().unwrap().to_string(), "20 min");
        let vm = ValueModel {
            kind: ValueKind::Continuous,
            discrete: vec![],
            interval: Some(Interval { min: 20.0, max: 40.0, unit: "°C".into() }),
            gp: None,
        };
        assert_eq!(vm.default_value().unwrap().to_string(), "30 °C");
    }

    #[test]
    fn plan_flow_order_is_canonical() {
        let mut s1 = OpStep::new("lyse");
        s1.postcond.push(SlotRef::new(RefName::parse("lysate_0")));
        let flow = |name: &str, pred: Option<&str>| ProductFlowRecord {
            pred: pred.map(str::to_string),
            unit: FlowUnit {
                component: RefName::parse(name).component().to_string(),
                component_type: None,
                ref_name: RefName::parse(name),
                unit_arg_type: UnitArgType::Material,
                vol: None,
                container: None,
                cond: BTreeMap::new(),
            },
            succ: None,
        };
        let plan = PlanProgram::new(vec![s1], vec![flow("lysate_0", Some("lyse")), flow("cells_0", None)]);
        assert_eq!(plan.flows()[0].unit.component, "cells");
        assert!(plan.is_dual());
    }
}
