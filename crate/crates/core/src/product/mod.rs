//! Model abstraction: one flat product model per component, with
//! phase-conditioned property selection.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::function::fit_value_model;
use crate::ingest::{apply_alias, Corpus};
use crate::model::{ComponentType, HyperParams, ProductFlowRecord, ProductModel, Quantity};

pub use crate::ingest::resolve_aliases;

/// Minimum fraction of a phase's records that must carry a key.
pub const DEFAULT_PROPERTY_SUPPORT: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelFitError {
    #[error("invalid configuration: {0}")]
    Config(String),
}

fn supported(records: &[&ProductFlowRecord], threshold: f64) -> BTreeSet<String> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in records {
        for key in r.unit.property_keys() {
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    let n = records.len() as f64;
    counts.into_iter().filter(|(_, c)| *c as f64 >= threshold * n).map(|(k, _)| k).collect()
}

/// Keys carried by at least `threshold` of each phase's records. Every
/// observed type appears, possibly with an empty set; untyped records are
/// ignored.
pub fn select_properties(records: &[&ProductFlowRecord], threshold: f64) -> BTreeMap<ComponentType, BTreeSet<String>> {
    let mut by_type: BTreeMap<ComponentType, Vec<&ProductFlowRecord>> = BTreeMap::new();
    for r in records {
        if let Some(t) = r.unit.component_type {
            by_type.entry(t).or_default().push(r);
        }
    }
    by_type.into_iter().map(|(t, rs)| (t, supported(&rs, threshold))).collect()
}

/// Distinct (phase, pred, succ) combinations observed for a component.
fn count_states(records: &[&ProductFlowRecord]) -> usize {
    records
        .iter()
        .map(|r| (r.unit.component_type, r.pred.as_deref(), r.succ.as_deref()))
        .collect::<BTreeSet<_>>()
        .len()
}

/// Fits one product model from the records of a single component.
pub fn fit_product_model(component: &str, records: &[&ProductFlowRecord], hyper: &HyperParams, threshold: f64) -> ProductModel {
    let mut pred_ops = BTreeMap::new();
    let mut succ_ops = BTreeMap::new();
    for r in records {
        if let Some(p) = &r.pred {
            *pred_ops.entry(p.clone()).or_insert(0) += 1;
        }
        if let Some(s) = &r.succ {
            *succ_ops.entry(s.clone()).or_insert(0) += 1;
        }
    }
    let phase_conditioned = select_properties(records, threshold);
    let property_keys: BTreeSet<String> = if phase_conditioned.is_empty() {
        supported(records, threshold)
    } else {
        phase_conditioned.values().flatten().cloned().collect()
    };
    let property_models = property_keys
        .iter()
        .filter_map(|key| {
            let values: Vec<Quantity> = records.iter().filter_map(|r| r.unit.property(key).cloned()).collect();
            fit_value_model(&values, hyper.gp_mean, &hyper.gp_kernel).map(|m| (key.clone(), m))
        })
        .collect();
    ProductModel {
        component: component.to_string(),
        pred_ops,
        succ_ops,
        property_keys,
        property_models,
        phase_conditioned,
        state_count: count_states(records),
    }
}

/// Fits product models for every component of the corpus, after mapping
/// component names through the corpus alias map. Models are sorted by
/// component.
pub fn fit_model_abstraction(corpus: &Corpus, hyper: &HyperParams) -> Result<Vec<ProductModel>, ModelFitError> {
    fit_model_abstraction_with(corpus, hyper, DEFAULT_PROPERTY_SUPPORT)
}

pub fn fit_model_abstraction_with(corpus: &Corpus, hyper: &HyperParams, threshold: f64) -> Result<Vec<ProductModel>, ModelFitError> {
    hyper.validate().map_err(|e| ModelFitError::Config(e.to_string()))?;
    if !(0.0..=1.0).contains(&threshold) {
        return Err(ModelFitError::Config(format!("property support threshold must be in [0, 1], got {threshold}")));
    }
    if corpus.flows.is_empty() {
        return Err(ModelFitError::Config("corpus has no flow records".into()));
    }
    let mut groups: BTreeMap<&str, Vec<&ProductFlowRecord>> = BTreeMap::new();
    for r in corpus.records() {
        groups.entry(apply_alias(&corpus.component_alias_map, &r.unit.component)).or_default().push(r);
    }
    let groups: Vec<(&str, Vec<&ProductFlowRecord>)> = groups.into_iter().collect();
    Ok(groups.par_iter().map(|(c, rs)| fit_product_model(c, rs, hyper, threshold)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_quantity, FlowUnit, RefName, UnitArgType};

    fn record(pred: Option<&str>, t: Option<ComponentType>, vol: Option<&str>, cond: &[(&str, &str)]) -> ProductFlowRecord {
        ProductFlowRecord {
            pred: pred.map(str::to_string),
            unit: FlowUnit {
                component: "ethanol".into(),
                component_type: t,
                ref_name: RefName::new("ethanol", Some(0)),
                unit_arg_type: UnitArgType::Product,
                vol: vol.map(parse_quantity),
                container: None,
                cond: cond.iter().map(|(k, v)| (k.to_string(), parse_quantity(v))).collect(),
            },
            succ: None,
        }
    }

    #[test]
    fn ethanol_phases_keep_their_keys() {
        let rs = [
            record(None, Some(ComponentType::Liquid), Some("5 mL"), &[]),
            record(None, Some(ComponentType::Liquid), Some("10 mL"), &[]),
            record(None, Some(ComponentType::Gas), None, &[("pressure", "2 bar")]),
        ];
        let refs: Vec<&ProductFlowRecord> = rs.iter().collect();
        let sel = select_properties(&refs, DEFAULT_PROPERTY_SUPPORT);
        assert_eq!(sel[&ComponentType::Liquid], ["vol".to_string()].into());
        assert_eq!(sel[&ComponentType::Gas], ["pressure".to_string()].into());
    }

    #[test]
    fn untyped_records_pool_when_alone() {
        let rs = [record(Some("mix"), None, None, &[("acidity", "pH 7")])];
        let refs: Vec<&ProductFlowRecord> = rs.iter().collect();
        let m = fit_product_model("ethanol", &refs, &HyperParams::default(), DEFAULT_PROPERTY_SUPPORT);
        assert!(m.phase_conditioned.is_empty());
        assert_eq!(m.property_keys, ["acidity".to_string()].into());
        assert_eq!(m.pred_ops["mix"], 1);
        assert_eq!(m.state_count, 1);
    }
}
