//! Static equilibrium decision and enumeration.
//!
//! A belief state S is an equilibrium given an instant observation when every
//! context can certify its belief set from some knowledge base produced by
//! applying the now-operations of its applicable bridge-rule heads.
//!
//! Enumeration guesses the applicable-head subset per context, computes the
//! candidate belief sets those guesses admit, assembles states from the
//! Cartesian product, and keeps the states whose actually applicable heads
//! match the guess. `oracle_equilibria` is the independent brute-force route
//! over the full interpretation lattice, kept for verification.

use std::collections::{BTreeSet, HashMap};

use crate::error::EmcsError;
use crate::logic::{BeliefSet, KnowledgeBase};
use crate::model::{split_app, mng, BeliefState, BridgeHead, Emcs, InstantObservation};

/// Caps the number of candidate states a single search may assemble.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Budget {
    pub max_candidates: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_candidates: 1_000_000,
        }
    }
}

pub(crate) struct BudgetMeter {
    limit: u64,
    pub used: u64,
}

impl BudgetMeter {
    pub fn new(budget: &Budget) -> Self {
        BudgetMeter {
            limit: budget.max_candidates,
            used: 0,
        }
    }

    pub fn charge(&mut self, n: u64) -> Result<(), EmcsError> {
        self.used = self.used.saturating_add(n);
        if self.used > self.limit {
            Err(EmcsError::BudgetExceeded { limit: self.limit })
        } else {
            Ok(())
        }
    }
}

/// Memo for `acc` results, keyed per context. Repeated equilibrium checks
/// against the same knowledge bases dominate search time otherwise.
#[derive(Default)]
pub(crate) struct AccCache {
    map: HashMap<(usize, KnowledgeBase), BTreeSet<BeliefSet>>,
}

impl AccCache {
    pub fn acc(&mut self, m: &Emcs, i: usize, kb: &KnowledgeBase) -> Result<&BTreeSet<BeliefSet>, EmcsError> {
        let key = (i, kb.clone());
        if !self.map.contains_key(&key) {
            let value = m.contexts[i].logic.acc(kb)?;
            self.map.insert(key.clone(), value);
        }
        Ok(&self.map[&key])
    }
}

/// An equilibrium together with the per-context knowledge bases certifying
/// it.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct EquilibriumWitness {
    pub state: BeliefState,
    pub witness_kbs: Vec<KnowledgeBase>,
}

/// Decides whether `state` is an equilibrium of `m` given `obs`, returning
/// the canonical witness when it is.
pub fn is_equilibrium(
    m: &Emcs,
    obs: &InstantObservation,
    state: &BeliefState,
) -> Result<Option<EquilibriumWitness>, EmcsError> {
    is_equilibrium_cached(m, obs, state, &mut AccCache::default())
}

pub(crate) fn is_equilibrium_cached(
    m: &Emcs,
    obs: &InstantObservation,
    state: &BeliefState,
    cache: &mut AccCache,
) -> Result<Option<EquilibriumWitness>, EmcsError> {
    let mut witness_kbs = Vec::with_capacity(m.contexts.len());
    for i in 0..m.contexts.len() {
        let (now, _) = m.applicable_ops(i, state, obs)?;
        let mut found = None;
        for kb in mng(&m.contexts[i], &now, &m.contexts[i].kb)? {
            if cache.acc(m, i, &kb)?.contains(&state.0[i]) {
                found = Some(kb);
                break;
            }
        }
        match found {
            Some(kb) => witness_kbs.push(kb),
            None => return Ok(None),
        }
    }
    Ok(Some(EquilibriumWitness {
        state: state.clone(),
        witness_kbs,
    }))
}

/// Per-context candidates admitted by one guessed head subset: belief sets
/// paired with the first (smallest) knowledge base certifying them.
fn guess_candidates(
    m: &Emcs,
    i: usize,
    guess: &BTreeSet<BridgeHead>,
    cache: &mut AccCache,
) -> Result<Vec<(BeliefSet, KnowledgeBase)>, EmcsError> {
    let (now, _) = split_app(guess);
    let mut out: Vec<(BeliefSet, KnowledgeBase)> = Vec::new();
    let mut seen = BTreeSet::new();
    for kb in mng(&m.contexts[i], &now, &m.contexts[i].kb)? {
        for bs in cache.acc(m, i, &kb)? {
            if seen.insert(bs.clone()) {
                out.push((bs.clone(), kb.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Enumerates all equilibria of `m` given `obs`, in canonical order
/// (lexicographic by per-context belief sets).
pub fn enumerate_equilibria(
    m: &Emcs,
    obs: &InstantObservation,
    budget: &Budget,
) -> Result<Vec<EquilibriumWitness>, EmcsError> {
    let mut meter = BudgetMeter::new(budget);
    enumerate_equilibria_metered(m, obs, &mut meter, &mut AccCache::default())
}

pub(crate) fn enumerate_equilibria_metered(
    m: &Emcs,
    obs: &InstantObservation,
    meter: &mut BudgetMeter,
    cache: &mut AccCache,
) -> Result<Vec<EquilibriumWitness>, EmcsError> {
    if let Err(violations) = m.validate() {
        return Err(EmcsError::InvalidKb {
            report: violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        });
    }
    let n = m.contexts.len();

    // Distinct heads per context; a guess is one subset per context.
    let heads: Vec<Vec<BridgeHead>> = m
        .contexts
        .iter()
        .map(|c| {
            let set: BTreeSet<BridgeHead> = c.bridge_rules.iter().map(|r| r.head.clone()).collect();
            set.into_iter().collect()
        })
        .collect();

    // Candidate lists per (context, head-subset mask), filled on demand.
    let mut memo: Vec<HashMap<u64, Vec<(BeliefSet, KnowledgeBase)>>> = vec![HashMap::new(); n];

    let mut found: BTreeSet<EquilibriumWitness> = BTreeSet::new();
    let mut masks = vec![0u64; n];
    'guesses: loop {
        meter.charge(1)?;
        let guesses: Vec<BTreeSet<BridgeHead>> = (0..n)
            .map(|i| {
                heads[i]
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| masks[i] & (1 << k) != 0)
                    .map(|(_, h)| h.clone())
                    .collect()
            })
            .collect();

        let mut candidates: Vec<&Vec<(BeliefSet, KnowledgeBase)>> = Vec::with_capacity(n);
        let mut viable = true;
        for i in 0..n {
            if !memo[i].contains_key(&masks[i]) {
                let c = guess_candidates(m, i, &guesses[i], cache)?;
                memo[i].insert(masks[i], c);
            }
        }
        for i in 0..n {
            let c = &memo[i][&masks[i]];
            if c.is_empty() {
                viable = false;
                break;
            }
            candidates.push(c);
        }

        if viable {
            // Cartesian product of per-context candidates.
            let mut pick = vec![0usize; n];
            'product: loop {
                meter.charge(1)?;
                let state = BeliefState(
                    (0..n).map(|i| candidates[i][pick[i]].0.clone()).collect(),
                );
                let mut matches = true;
                for i in 0..n {
                    if m.applicable_heads(i, &state, obs)? != guesses[i] {
                        matches = false;
                        break;
                    }
                }
                if matches {
                    let witness_kbs = (0..n).map(|i| candidates[i][pick[i]].1.clone()).collect();
                    found.insert(EquilibriumWitness { state, witness_kbs });
                }
                for i in 0..n {
                    pick[i] += 1;
                    if pick[i] < candidates[i].len() {
                        continue 'product;
                    }
                    pick[i] = 0;
                }
                break;
            }
        }

        for i in 0..n {
            masks[i] += 1;
            if masks[i] < (1u64 << heads[i].len()) {
                continue 'guesses;
            }
            masks[i] = 0;
        }
        break;
    }
    Ok(found.into_iter().collect())
}

/// Brute-force enumeration over the full Cartesian product of signature
/// subsets, filtered by `is_equilibrium`. The verification oracle for
/// `enumerate_equilibria`.
pub fn oracle_equilibria(
    m: &Emcs,
    obs: &InstantObservation,
    budget: &Budget,
) -> Result<Vec<BeliefState>, EmcsError> {
    let mut meter = BudgetMeter::new(budget);
    let mut cache = AccCache::default();
    let n = m.contexts.len();

    let mut total: u64 = 1;
    for c in &m.contexts {
        let sig = c.logic.signature.len();
        if sig >= 64 {
            return Err(EmcsError::BudgetExceeded { limit: budget.max_candidates });
        }
        total = total.saturating_mul(1u64 << sig);
    }
    if total > budget.max_candidates {
        return Err(EmcsError::BudgetExceeded { limit: budget.max_candidates });
    }

    // All subsets of each context's signature, in sorted order.
    let subsets: Vec<Vec<BeliefSet>> = m
        .contexts
        .iter()
        .map(|c| {
            let atoms: Vec<_> = c.logic.signature.iter().cloned().collect();
            let all: BTreeSet<BeliefSet> = (0u64..(1u64 << atoms.len()))
                .map(|mask| {
                    atoms
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| mask & (1 << k) != 0)
                        .map(|(_, a)| a.clone())
                        .collect()
                })
                .collect();
            all.into_iter().collect()
        })
        .collect();

    let mut out = Vec::new();
    let mut pick = vec![0usize; n];
    'product: loop {
        meter.charge(1)?;
        let state = BeliefState((0..n).map(|i| subsets[i][pick[i]].clone()).collect());
        if is_equilibrium_cached(m, obs, &state, &mut cache)?.is_some() {
            out.push(state);
        }
        // Advance the most significant coordinate last so output order is
        // lexicographic by per-context belief sets.
        for i in (0..n).rev() {
            pick[i] += 1;
            if pick[i] < subsets[i].len() {
                continue 'product;
            }
            pick[i] = 0;
        }
        break;
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{Atom, KbElement, Logic};
    use crate::model::{
        BridgeLiteral, BridgeRule, BridgeTarget, EvolvingContext, ObservationContext, OpFormula,
        OpName,
    };

    fn atom(s: &str) -> Atom {
        Atom::new(s).unwrap()
    }

    fn fact(s: &str) -> KbElement {
        KbElement::Fact(atom(s))
    }

    fn asp_rule(head: &str, pos: &[&str], neg: &[&str]) -> KbElement {
        KbElement::Rule {
            head: atom(head),
            pos: pos.iter().map(|s| atom(s)).collect(),
            neg: neg.iter().map(|s| atom(s)).collect(),
        }
    }

    /// One factstore context over {p}, empty kb, with the rule
    /// `add(p) <- (1@q)`, and one observer over {q}.
    fn reactive_factstore() -> Emcs {
        let rule = BridgeRule {
            head: BridgeHead {
                formula: OpFormula {
                    op: OpName::Add,
                    arg: fact("p"),
                },
                deferred: false,
            },
            body: [BridgeLiteral {
                negated: false,
                target: BridgeTarget::Observer(0),
                atom: atom("q"),
            }]
            .into(),
        };
        Emcs {
            contexts: vec![EvolvingContext::new(
                Logic::factstore([atom("p")]),
                KnowledgeBase::default(),
                vec![rule],
            )],
            observers: vec![ObservationContext::new([atom("q")])],
        }
    }

    fn obs(atoms: &[&str]) -> InstantObservation {
        InstantObservation(vec![atoms.iter().map(|s| atom(s)).collect()])
    }

    #[test]
    fn observation_triggered_equilibrium() {
        let m = reactive_factstore();
        let s_p = BeliefState(vec![BeliefSet::new([atom("p")])]);
        let s_empty = BeliefState(vec![BeliefSet::default()]);

        let w = is_equilibrium(&m, &obs(&["q"]), &s_p).unwrap().unwrap();
        assert_eq!(w.witness_kbs, vec![KnowledgeBase::new([fact("p")])]);
        assert!(is_equilibrium(&m, &obs(&["q"]), &s_empty).unwrap().is_none());
        // without the observation, only the empty state is an equilibrium
        assert!(is_equilibrium(&m, &obs(&[]), &s_empty).unwrap().is_some());
    }

    #[test]
    fn no_bridge_rules_uses_original_kb() {
        let m = Emcs {
            contexts: vec![EvolvingContext::new(
                Logic::factstore([atom("p")]),
                KnowledgeBase::new([fact("p")]),
                vec![],
            )],
            observers: vec![],
        };
        let s = BeliefState(vec![BeliefSet::new([atom("p")])]);
        assert!(is_equilibrium(&m, &InstantObservation(vec![]), &s).unwrap().is_some());
        let states: Vec<_> = oracle_equilibria(&m, &InstantObservation(vec![]), &Budget::default()).unwrap();
        assert_eq!(states, vec![s]);
    }

    #[test]
    fn asp_even_loop_two_equilibria() {
        let m = Emcs {
            contexts: vec![EvolvingContext::new(
                Logic::asp([atom("a"), atom("b")]),
                KnowledgeBase::new([asp_rule("a", &[], &["b"]), asp_rule("b", &[], &["a"])]),
                vec![],
            )],
            observers: vec![],
        };
        let o = InstantObservation(vec![]);
        let found = enumerate_equilibria(&m, &o, &Budget::default()).unwrap();
        let states: Vec<_> = found.iter().map(|w| w.state.clone()).collect();
        assert_eq!(
            states,
            vec![
                BeliefState(vec![BeliefSet::new([atom("a")])]),
                BeliefState(vec![BeliefSet::new([atom("b")])]),
            ]
        );
        assert_eq!(states, oracle_equilibria(&m, &o, &Budget::default()).unwrap());
    }

    #[test]
    fn asp_odd_loop_no_equilibria() {
        let m = Emcs {
            contexts: vec![EvolvingContext::new(
                Logic::asp([atom("a")]),
                KnowledgeBase::new([asp_rule("a", &[], &["a"])]),
                vec![],
            )],
            observers: vec![],
        };
        let o = InstantObservation(vec![]);
        assert!(enumerate_equilibria(&m, &o, &Budget::default()).unwrap().is_empty());
        assert!(oracle_equilibria(&m, &o, &Budget::default()).unwrap().is_empty());
    }

    #[test]
    fn enumerate_matches_oracle_on_reactive_system() {
        let m = reactive_factstore();
        for o in [obs(&[]), obs(&["q"])] {
            let found: Vec<_> = enumerate_equilibria(&m, &o, &Budget::default())
                .unwrap()
                .into_iter()
                .map(|w| w.state)
                .collect();
            assert_eq!(found, oracle_equilibria(&m, &o, &Budget::default()).unwrap());
        }
    }

    #[test]
    fn budget_exhaustion_reported() {
        let m = reactive_factstore();
        let tiny = Budget { max_candidates: 1 };
        assert!(matches!(
            enumerate_equilibria(&m, &obs(&["q"]), &tiny),
            Err(EmcsError::BudgetExceeded { .. })
        ));
        assert!(matches!(
            oracle_equilibria(&m, &obs(&["q"]), &tiny),
            Err(EmcsError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn enumeration_is_deterministic() {
        let m = reactive_factstore();
        let a = enumerate_equilibria(&m, &obs(&["q"]), &Budget::default()).unwrap();
        let b = enumerate_equilibria(&m, &obs(&["q"]), &Budget::default()).unwrap();
        assert_eq!(a, b);
    }
}
