//! Evolution over observation sequences: evolving equilibria and the
//! knowledge-base-configuration branches induced by nondeterministic `mng`.

use std::collections::BTreeSet;

use crate::error::EmcsError;
use crate::model::{mng, BeliefState, Emcs, InstantObservation, KbConfiguration, OpFormula};
use crate::solver::{
    enumerate_equilibria_metered, is_equilibrium_cached, AccCache, Budget, BudgetMeter,
};

/// A time-indexed sequence of instant observations.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ObservationSequence(pub Vec<InstantObservation>);

impl ObservationSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A time-indexed sequence of belief states.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct EvolvingBeliefState(pub Vec<BeliefState>);

impl EvolvingBeliefState {
    pub fn size(&self) -> usize {
        self.0.len()
    }
}

/// An evolving equilibrium together with its witnessing configuration
/// sequence and, per transition, the per-context applied next-operations.
///
/// Two traces may share the same state sequence and differ only in the
/// configurations; they are kept separate because the minimal-change
/// criteria are stated over the associated configuration sequence.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct EquilibriumTrace {
    pub states: EvolvingBeliefState,
    /// One configuration per step; the first is the system's original one.
    pub kb_configs: Vec<KbConfiguration>,
    /// For each step j < s, per context, the applied next-operation set.
    pub applied_next_ops: Vec<Vec<BTreeSet<OpFormula>>>,
}

impl EquilibriumTrace {
    pub fn size(&self) -> usize {
        self.states.size()
    }
}

/// All configurations reachable from `config` in one step: the Cartesian
/// product of each context's `mng` results on its applied next-operations.
pub fn next_kb(
    m: &Emcs,
    state: &BeliefState,
    obs: &InstantObservation,
    config: &KbConfiguration,
) -> Result<Vec<KbConfiguration>, EmcsError> {
    m.check_config_shape(config)?;
    let n = m.contexts.len();
    let mut per_context: Vec<Vec<_>> = Vec::with_capacity(n);
    for i in 0..n {
        let (_, next) = m.applicable_ops(i, state, obs)?;
        per_context.push(mng(&m.contexts[i], &next, &config.0[i])?.into_iter().collect());
    }
    let mut out = Vec::new();
    let mut pick = vec![0usize; n];
    'product: loop {
        out.push(KbConfiguration(
            (0..n).map(|i| per_context[i][pick[i]].clone()).collect(),
        ));
        for i in (0..n).rev() {
            pick[i] += 1;
            if pick[i] < per_context[i].len() {
                continue 'product;
            }
            pick[i] = 0;
        }
        break;
    }
    out.sort();
    Ok(out)
}

fn check_size(s: usize, observations: &ObservationSequence) -> Result<(), EmcsError> {
    if s > observations.len() {
        return Err(EmcsError::SizeExceedsObservations {
            size: s,
            len: observations.len(),
        });
    }
    Ok(())
}

/// Enumerates every evolving equilibrium of size `s`, with every witnessing
/// configuration branch, in canonical order.
pub fn enumerate_evolving_equilibria(
    m: &Emcs,
    observations: &ObservationSequence,
    s: usize,
    budget: &Budget,
) -> Result<Vec<EquilibriumTrace>, EmcsError> {
    check_size(s, observations)?;
    if s == 0 {
        return Ok(Vec::new());
    }
    let mut meter = BudgetMeter::new(budget);
    let mut cache = AccCache::default();

    // Breadth-first by time step.
    let mut partial: Vec<EquilibriumTrace> = vec![EquilibriumTrace {
        states: EvolvingBeliefState(Vec::new()),
        kb_configs: vec![m.initial_configuration()],
        applied_next_ops: Vec::new(),
    }];

    for j in 0..s {
        let obs = &observations.0[j];
        let mut extended = Vec::new();
        for trace in partial {
            let config = trace.kb_configs.last().expect("partial trace has a configuration");
            let system = m.replace(config, obs)?;
            for witness in enumerate_equilibria_metered(&system, obs, &mut meter, &mut cache)? {
                let mut states = trace.states.clone();
                states.0.push(witness.state.clone());
                if j + 1 == s {
                    extended.push(EquilibriumTrace {
                        states,
                        kb_configs: trace.kb_configs.clone(),
                        applied_next_ops: trace.applied_next_ops.clone(),
                    });
                } else {
                    let next_ops: Vec<BTreeSet<OpFormula>> = (0..m.contexts.len())
                        .map(|i| system.applicable_ops(i, &witness.state, obs).map(|(_, nx)| nx))
                        .collect::<Result<_, _>>()?;
                    for successor in next_kb(&system, &witness.state, obs, config)? {
                        meter.charge(1)?;
                        let mut kb_configs = trace.kb_configs.clone();
                        kb_configs.push(successor);
                        let mut applied = trace.applied_next_ops.clone();
                        applied.push(next_ops.clone());
                        extended.push(EquilibriumTrace {
                            states: states.clone(),
                            kb_configs,
                            applied_next_ops: applied,
                        });
                    }
                }
            }
        }
        partial = extended;
    }
    partial.sort();
    partial.dedup();
    Ok(partial)
}

/// Decides whether `states` is an evolving equilibrium, returning every
/// witnessing configuration sequence (empty means it is not).
pub fn is_evolving_equilibrium(
    m: &Emcs,
    observations: &ObservationSequence,
    states: &EvolvingBeliefState,
    budget: &Budget,
) -> Result<Vec<Vec<KbConfiguration>>, EmcsError> {
    let s = states.size();
    check_size(s, observations)?;
    let mut meter = BudgetMeter::new(budget);
    let mut cache = AccCache::default();
    let mut witnesses = Vec::new();
    if s == 0 {
        return Ok(witnesses);
    }
    let mut stack: Vec<Vec<KbConfiguration>> = vec![vec![m.initial_configuration()]];
    while let Some(configs) = stack.pop() {
        let j = configs.len() - 1;
        meter.charge(1)?;
        let obs = &observations.0[j];
        let config = configs.last().expect("non-empty configuration prefix");
        let system = m.replace(config, obs)?;
        if is_equilibrium_cached(&system, obs, &states.0[j], &mut cache)?.is_none() {
            continue;
        }
        if j + 1 == s {
            witnesses.push(configs);
            continue;
        }
        for successor in next_kb(&system, &states.0[j], obs, config)? {
            let mut extended = configs.clone();
            extended.push(successor);
            stack.push(extended);
        }
    }
    witnesses.sort();
    witnesses.dedup();
    Ok(witnesses)
}

/// Verifies the subsequence property on an enumerated trace: every prefix of
/// the state sequence is an evolving equilibrium for every admissible
/// observation prefix.
pub fn check_prefix_property(
    m: &Emcs,
    observations: &ObservationSequence,
    trace: &EquilibriumTrace,
    budget: &Budget,
) -> Result<bool, EmcsError> {
    let s = trace.size();
    for j in 1..=s {
        let prefix = EvolvingBeliefState(trace.states.0[..j].to_vec());
        for k in j..=observations.len() {
            let obs_prefix = ObservationSequence(observations.0[..k].to_vec());
            if is_evolving_equilibrium(m, &obs_prefix, &prefix, budget)?.is_empty() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
