//! Sampling corpora from planted pattern clusters.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::ingest::Corpus;
use crate::model::{ComponentType, DomainId, InstanceAction, Quantity, RefName, SlotRef, SourceRef};

/// Shape of a planted corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub opcodes: usize,
    pub clusters_per_opcode: usize,
    pub actions_per_opcode: usize,
    /// Probability that an action's device is swapped for another cluster's.
    pub device_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self { opcodes: 3, clusters_per_opcode: 5, actions_per_opcode: 200, device_noise: 0.1, seed: 7 }
    }
}

/// A sampled corpus with the planted cluster of every action.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    /// Global cluster id per corpus action.
    pub truth: Vec<usize>,
}

const KEY_SETS: [&[(&str, &str, f64)]; 5] = [
    &[("duration", "min", 10.0)],
    &[("duration", "min", 30.0), ("speed", "rpm", 500.0)],
    &[("temperature", "°C", 4.0)],
    &[("duration", "min", 60.0), ("temperature", "°C", 37.0)],
    &[("speed", "rpm", 3000.0), ("temperature", "°C", 65.0)],
];

const SLOT_TYPES: [ComponentType; 4] =
    [ComponentType::Liquid, ComponentType::Solid, ComponentType::Mixture, ComponentType::BiologicalMaterial];

/// Samples actions from `clusters_per_opcode` planted patterns per opcode.
/// Clusters differ in device, key set, value means and slot signature; some
/// clusters share slot signatures. Actions are shuffled.
pub fn generate(spec: &SyntheticSpec) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows: Vec<(InstanceAction, usize)> = Vec::new();
    for o in 0..spec.opcodes {
        let opcode = format!("op_{o}");
        for j in 0..spec.actions_per_opcode {
            let c = j % spec.clusters_per_opcode;
            let keys = KEY_SETS[c % KEY_SETS.len()];
            let device_cluster = if rng.random::<f64>() < spec.device_noise {
                rng.random_range(0..spec.clusters_per_opcode)
            } else {
                c
            };
            let slot_type = SLOT_TYPES[(c / 2) % SLOT_TYPES.len()];
            let mut precond = vec![SlotRef::typed(RefName::new(format!("in_{c}"), Some(0)), Some(slot_type))];
            if c % 2 == 1 {
                precond.push(SlotRef::typed(RefName::new("buffer", Some(0)), Some(ComponentType::Reagent)));
            }
            let mut config = BTreeMap::new();
            for &(key, unit, mean) in keys {
                let shifted = mean * (1.0 + 0.5 * c as f64 / spec.clusters_per_opcode as f64);
                let noise = Normal::new(shifted, 0.05 * shifted).expect("positive scale");
                let x: f64 = noise.sample(&mut rng);
                config.insert(key.to_string(), Quantity::scalar((x * 10.0).round() / 10.0, unit));
            }
            let action = InstanceAction {
                opcode: opcode.clone(),
                precond,
                postcond: vec![SlotRef::typed(RefName::new(format!("out_{c}"), Some(0)), Some(ComponentType::Mixture))],
                device: Some(format!("device_{o}_{device_cluster}")),
                config,
                source: SourceRef { protocol: format!("synthetic_{o}_{j:04}"), step: 0 },
            };
            rows.push((action, o * spec.clusters_per_opcode + c));
        }
    }
    rows.shuffle(&mut rng);
    let (actions, truth) = rows.into_iter().unzip();
    SyntheticCorpus {
        corpus: Corpus {
            domain: DomainId::new("Synthetic").expect("non-empty name"),
            docs: Vec::new(),
            actions,
            flows: Vec::new(),
            device_alias_map: BTreeMap::new(),
            component_alias_map: BTreeMap::new(),
            errors: Vec::new(),
        },
        truth,
    }
}
