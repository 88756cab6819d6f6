//! Seeded random instance generation, used by the property and acceptance
//! suites to stress the engine at desk scale.

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::evolve::ObservationSequence;
use crate::logic::{Atom, KbElement, KnowledgeBase, Logic, LogicKind};
use crate::minimal_change::Aggregator;
use crate::model::{
    BridgeHead, BridgeLiteral, BridgeRule, BridgeTarget, ContextCosts, Emcs, EvolvingContext,
    InstantObservation, ObservationContext, OpFormula, OpName,
};

/// Shape caps for generated instances. All bounds are inclusive maxima.
#[derive(Clone, Copy, Debug)]
pub struct SampleConfig {
    pub max_contexts: usize,
    pub max_observers: usize,
    pub max_atoms: usize,
    pub max_bridge_rules: usize,
    pub max_observation_steps: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            max_contexts: 3,
            max_observers: 2,
            max_atoms: 4,
            max_bridge_rules: 5,
            max_observation_steps: 4,
        }
    }
}

/// A generated system paired with an observation sequence for it.
#[derive(Clone, Debug)]
pub struct SampleInstance {
    pub system: Emcs,
    pub aggregator: Aggregator,
    pub observations: ObservationSequence,
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const ATOM_NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];
const OBS_NAMES: [&str; 4] = ["q", "r", "s", "t"];

fn atom(name: &str) -> Atom {
    Atom::new(name).expect("static atom names are valid tokens")
}

fn random_subset<T: Clone + Ord>(rng: &mut impl Rng, pool: &[T], density: f64) -> BTreeSet<T> {
    pool.iter()
        .filter(|_| rng.gen_bool(density))
        .cloned()
        .collect()
}

fn random_kb_element(rng: &mut impl Rng, kind: LogicKind, signature: &[Atom]) -> KbElement {
    match kind {
        LogicKind::FactStore => KbElement::Fact(signature.choose(rng).unwrap().clone()),
        LogicKind::Asp => {
            if rng.gen_bool(0.4) {
                KbElement::Fact(signature.choose(rng).unwrap().clone())
            } else {
                let head = signature.choose(rng).unwrap().clone();
                let pos = random_subset(rng, signature, 0.25);
                let mut neg = random_subset(rng, signature, 0.25);
                for a in &pos {
                    neg.remove(a);
                }
                KbElement::Rule { head, pos, neg }
            }
        }
    }
}

fn random_bridge_rule(
    rng: &mut impl Rng,
    kind: LogicKind,
    signature: &[Atom],
    context_signatures: &[Vec<Atom>],
    observer_languages: &[Vec<Atom>],
) -> BridgeRule {
    let op = if rng.gen_bool(0.7) { OpName::Add } else { OpName::Del };
    let head = BridgeHead {
        formula: OpFormula {
            op,
            arg: random_kb_element(rng, kind, signature),
        },
        deferred: rng.gen_bool(0.5),
    };
    let body_len = rng.gen_range(0..=3);
    let mut body = BTreeSet::new();
    for _ in 0..body_len {
        let use_observer = !observer_languages.is_empty() && rng.gen_bool(0.5);
        let (target, pool) = if use_observer {
            let r = rng.gen_range(0..observer_languages.len());
            (BridgeTarget::Observer(r), &observer_languages[r])
        } else {
            let r = rng.gen_range(0..context_signatures.len());
            (BridgeTarget::Context(r), &context_signatures[r])
        };
        if pool.is_empty() {
            continue;
        }
        body.insert(BridgeLiteral {
            negated: rng.gen_bool(0.4),
            target,
            atom: pool.choose(rng).unwrap().clone(),
        });
    }
    BridgeRule { head, body }
}

/// Generates one valid random instance within the configured caps.
pub fn random_instance(rng: &mut impl Rng, config: &SampleConfig) -> SampleInstance {
    let n = rng.gen_range(1..=config.max_contexts);
    let l = rng.gen_range(0..=config.max_observers);

    let context_signatures: Vec<Vec<Atom>> = (0..n)
        .map(|_| {
            let size = rng.gen_range(1..=config.max_atoms);
            ATOM_NAMES[..size].iter().map(|s| atom(s)).collect()
        })
        .collect();
    let observer_languages: Vec<Vec<Atom>> = (0..l)
        .map(|_| {
            let size = rng.gen_range(1..=2);
            OBS_NAMES[..size].iter().map(|s| atom(s)).collect()
        })
        .collect();

    let contexts = (0..n)
        .map(|i| {
            let kind = if rng.gen_bool(0.5) {
                LogicKind::Asp
            } else {
                LogicKind::FactStore
            };
            let signature = &context_signatures[i];
            let kb_size = rng.gen_range(0..=3.min(signature.len()));
            let kb: KnowledgeBase = (0..kb_size)
                .map(|_| random_kb_element(rng, kind, signature))
                .collect();
            let rule_count = rng.gen_range(0..=config.max_bridge_rules);
            let bridge_rules = (0..rule_count)
                .map(|_| {
                    random_bridge_rule(rng, kind, signature, &context_signatures, &observer_languages)
                })
                .collect();
            EvolvingContext {
                logic: Logic::new(kind, signature.iter().cloned()),
                kb,
                bridge_rules,
                costs: ContextCosts {
                    add: rng.gen_range(0..=3),
                    del: rng.gen_range(0..=3),
                },
                distance: Default::default(),
            }
        })
        .collect();

    let observers = observer_languages
        .iter()
        .map(|lang| ObservationContext::new(lang.iter().cloned()))
        .collect();

    let system = Emcs { contexts, observers };
    debug_assert!(system.validate().is_ok());

    let steps = rng.gen_range(1..=config.max_observation_steps);
    let observations = ObservationSequence(
        (0..steps)
            .map(|_| {
                InstantObservation(
                    observer_languages
                        .iter()
                        .map(|lang| random_subset(rng, lang, 0.5))
                        .collect(),
                )
            })
            .collect(),
    );

    let aggregator = if rng.gen_bool(0.5) {
        Aggregator::Max
    } else {
        Aggregator::Avg
    };

    SampleInstance {
        system,
        aggregator,
        observations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_instances_are_valid() {
        let mut rng = rng_for(7);
        let config = SampleConfig::default();
        for _ in 0..200 {
            let instance = random_instance(&mut rng, &config);
            assert!(instance.system.validate().is_ok());
            assert!(!instance.observations.is_empty());
        }
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let config = SampleConfig::default();
        let a = random_instance(&mut rng_for(42), &config);
        let b = random_instance(&mut rng_for(42), &config);
        assert_eq!(a.system, b.system);
        assert_eq!(a.observations, b.observations);
    }
}
