//! Function abstraction: a Dirichlet-process mixture over the execution
//! contexts of each opcode, fitted by collapsed Gibbs sampling, followed by
//! unification of equivalent patterns.

mod features;
mod gibbs;
mod instantiate;
mod likelihood;
mod pattern;
pub mod synthetic;
mod unify;
mod value_model;

pub use features::{encode, ActionFeatures, OpcodeFeatures, CATEGORICAL_FEATURES};
pub use gibbs::{fit_function_abstraction, FunctionFit, TracePoint, CONVERGENCE_TOLERANCE};
pub use instantiate::{instantiate_interface, Instantiation, InstantiationContext, TieBreak};
pub use likelihood::{
    cluster_log_marginal, crp_log_prior, dirichlet_multinomial, log_likelihood, log_predictive, ChannelStats,
    ClusterStats, FitError, FitState, NigPrior, OpcodeAssignment,
};
pub use pattern::materialize;
pub use unify::{equivalence_key, unify_interfaces};
pub use value_model::{
    fit_value_model, merge_value_models, LEVEL_GAP_RATIO, MAX_DISCRETE_LEVELS, MIN_MIXED_LEVELS, MIXED_SPREAD_RATIO,
};

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::ingest::Corpus;
    use crate::model::{
        parse_quantity, ComponentType, DomainId, HyperParams, InstanceAction, RefName, SlotRef, SourceRef,
    };

    fn action(opcode: &str, t: ComponentType, device: &str, config: &[(&str, &str)], step: usize) -> InstanceAction {
        InstanceAction {
            opcode: opcode.into(),
            precond: vec![SlotRef::typed(RefName::new("sample", Some(0)), Some(t))],
            postcond: vec![SlotRef::typed(RefName::new("pellet", Some(0)), Some(ComponentType::Solid))],
            device: Some(device.into()),
            config: config.iter().map(|(k, v)| (k.to_string(), parse_quantity(v))).collect(),
            source: SourceRef { protocol: "p".into(), step },
        }
    }

    fn corpus(actions: Vec<InstanceAction>) -> Corpus {
        Corpus {
            domain: DomainId::new("Genetics").unwrap(),
            docs: Vec::new(),
            actions,
            flows: Vec::new(),
            device_alias_map: BTreeMap::new(),
            component_alias_map: BTreeMap::new(),
            errors: Vec::new(),
        }
    }

    fn state(clusters: Vec<usize>, opcode: &str) -> FitState {
        let ids = (0..clusters.len()).collect();
        FitState {
            opcodes: vec![OpcodeAssignment { opcode: opcode.into(), action_ids: ids, clusters }],
            log_lik: 0.0,
            iteration: 0,
            rng_seed: 0,
        }
    }

    #[test]
    fn single_action_single_pattern() {
        let c = corpus(vec![action("spin", ComponentType::Liquid, "centrifuge", &[("duration", "5 min")], 0)]);
        let hyper = HyperParams { iterations: 10, ..Default::default() };
        let fit = fit_function_abstraction(&c, &hyper).unwrap();
        assert_eq!(fit.operations.len(), 1);
        assert_eq!(fit.operations[0].patterns.len(), 1);
        assert_eq!(fit.history[0].iteration, 0);
    }

    #[test]
    fn zero_alpha_rejected() {
        let c = corpus(vec![action("spin", ComponentType::Liquid, "centrifuge", &[], 0)]);
        let hyper = HyperParams { alpha: 0.0, ..Default::default() };
        assert!(matches!(fit_function_abstraction(&c, &hyper), Err(FitError::Config(_))));
    }

    #[test]
    fn integrity_errors() {
        let c = corpus(vec![
            action("spin", ComponentType::Liquid, "centrifuge", &[], 0),
            action("spin", ComponentType::Liquid, "centrifuge", &[], 1),
        ]);
        let hyper = HyperParams::default();
        assert!(log_likelihood(&state(vec![0, 0], "spin"), &c, &hyper).is_ok());
        let mut s = state(vec![0, 0], "spin");
        s.opcodes[0].action_ids = vec![0, 5];
        assert!(matches!(log_likelihood(&s, &c, &hyper), Err(FitError::Integrity(_))));
        let mut s = state(vec![0], "spin");
        s.opcodes[0].action_ids = vec![0];
        assert!(matches!(log_likelihood(&s, &c, &hyper), Err(FitError::Integrity(_))));
        assert!(matches!(log_likelihood(&state(vec![0, 0], "mix"), &c, &hyper), Err(FitError::Integrity(_))));
    }

    #[test]
    fn fit_is_reproducible() {
        let data = synthetic::generate(&synthetic::SyntheticSpec { actions_per_opcode: 40, ..Default::default() });
        let hyper = HyperParams { iterations: 30, seed: 3, ..Default::default() };
        let a = fit_function_abstraction(&data.corpus, &hyper).unwrap();
        let b = fit_function_abstraction(&data.corpus, &hyper).unwrap();
        assert_eq!(a, b);
        let recomputed = log_likelihood(&a.state, &data.corpus, &hyper).unwrap();
        assert!((recomputed - a.state.log_lik).abs() < 1e-6 * recomputed.abs().max(1.0));
    }
}
