//! Minimal change over evolving equilibria: operation costs, belief-state
//! distances, and the strong, weak, and global-cost selection criteria.

use std::collections::HashMap;

use num_rational::Ratio;

use crate::error::EmcsError;
use crate::evolve::{
    enumerate_evolving_equilibria, next_kb, EquilibriumTrace, ObservationSequence,
};
use crate::model::{BeliefState, Emcs, InstantObservation, KbConfiguration};
use crate::solver::{enumerate_equilibria, Budget};

/// Exact non-negative rational, used for all distance comparisons.
pub type Distance = Ratio<u64>;

/// How per-context distances combine into a belief-state distance.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub enum Aggregator {
    #[default]
    Max,
    Avg,
}

impl std::fmt::Display for Aggregator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Aggregator::Max => f.write_str("max"),
            Aggregator::Avg => f.write_str("avg"),
        }
    }
}

/// Total cost of the next-operations applied under `state` and `obs`,
/// summed over all contexts.
pub fn step_cost(m: &Emcs, state: &BeliefState, obs: &InstantObservation) -> Result<u64, EmcsError> {
    let mut total: u64 = 0;
    for i in 0..m.contexts.len() {
        let (_, next) = m.applicable_ops(i, state, obs)?;
        for op in &next {
            total += m.contexts[i].costs.cost(op.op);
        }
    }
    Ok(total)
}

fn equilibria_of(
    m: &Emcs,
    config: &KbConfiguration,
    obs: &InstantObservation,
    budget: &Budget,
) -> Result<Vec<BeliefState>, EmcsError> {
    let system = m.replace(config, obs)?;
    Ok(enumerate_equilibria(&system, obs, budget)?
        .into_iter()
        .map(|w| w.state)
        .collect())
}

/// Equilibria of `m` with kbs replaced by `config` that are not dominated on
/// next-operation inclusion: S survives unless some equilibrium S' has
/// strictly smaller applied next-set in every context simultaneously.
///
/// Diagnostic selector only; the cost-based criteria below are the ones the
/// selection pipeline uses.
pub fn min_eq(
    m: &Emcs,
    config: &KbConfiguration,
    obs: &InstantObservation,
    budget: &Budget,
) -> Result<Vec<BeliefState>, EmcsError> {
    let system = m.replace(config, obs)?;
    let states = equilibria_of(m, config, obs, budget)?;
    let next_sets: Vec<Vec<_>> = states
        .iter()
        .map(|s| {
            (0..m.contexts.len())
                .map(|i| system.applicable_ops(i, s, obs).map(|(_, nx)| nx))
                .collect::<Result<_, _>>()
        })
        .collect::<Result<_, _>>()?;
    let dominated = |a: usize| {
        next_sets.iter().enumerate().any(|(b, other)| {
            b != a
                && other
                    .iter()
                    .zip(&next_sets[a])
                    .all(|(nb, na)| nb.is_subset(na) && nb != na)
        })
    };
    Ok(states
        .iter()
        .enumerate()
        .filter(|(idx, _)| !dominated(*idx))
        .map(|(_, s)| s.clone())
        .collect())
}

/// Equilibria of `m` with kbs replaced by `config` that minimize the global
/// step cost. Empty iff no equilibrium exists.
pub fn min_cost(
    m: &Emcs,
    config: &KbConfiguration,
    obs: &InstantObservation,
    budget: &Budget,
) -> Result<Vec<BeliefState>, EmcsError> {
    let system = m.replace(config, obs)?;
    let states = equilibria_of(m, config, obs, budget)?;
    let costs: Vec<u64> = states
        .iter()
        .map(|s| step_cost(&system, s, obs))
        .collect::<Result<_, _>>()?;
    let best = match costs.iter().min() {
        Some(b) => *b,
        None => return Ok(Vec::new()),
    };
    Ok(states
        .into_iter()
        .zip(costs)
        .filter(|(_, c)| *c == best)
        .map(|(s, _)| s)
        .collect())
}

/// Distance between two belief states under the per-context distances and
/// the chosen aggregator. Exact rational arithmetic.
pub fn belief_distance(
    m: &Emcs,
    aggregator: Aggregator,
    a: &BeliefState,
    b: &BeliefState,
) -> Result<Distance, EmcsError> {
    if a.0.len() != m.contexts.len() || b.0.len() != m.contexts.len() {
        return Err(EmcsError::ShapeMismatch {
            kind: "belief sets",
            expected: m.contexts.len(),
            got: a.0.len().max(b.0.len()),
        });
    }
    let per_context = m
        .contexts
        .iter()
        .zip(a.0.iter().zip(&b.0))
        .map(|(ctx, (sa, sb))| ctx.distance.distance(sa, sb));
    Ok(match aggregator {
        Aggregator::Max => Distance::from_integer(per_context.max().unwrap_or(0)),
        Aggregator::Avg => {
            let sum: u64 = per_context.sum();
            Distance::new(sum, m.contexts.len() as u64)
        }
    })
}

/// Successor pairs (S', K') with K' reachable from `config` and S' a
/// cost-minimal equilibrium of the K' branch, keeping only the pairs at
/// globally minimal distance from `state` across all branches.
pub fn min_next(
    m: &Emcs,
    aggregator: Aggregator,
    state: &BeliefState,
    obs_now: &InstantObservation,
    obs_next: &InstantObservation,
    config: &KbConfiguration,
    budget: &Budget,
) -> Result<Vec<(BeliefState, KbConfiguration)>, EmcsError> {
    let system = m.replace(config, obs_now)?;
    let mut pairs: Vec<(Distance, BeliefState, KbConfiguration)> = Vec::new();
    for successor in next_kb(&system, state, obs_now, config)? {
        for candidate in min_cost(m, &successor, obs_next, budget)? {
            let d = belief_distance(m, aggregator, state, &candidate)?;
            pairs.push((d, candidate, successor.clone()));
        }
    }
    let best = match pairs.iter().map(|(d, _, _)| *d).min() {
        Some(b) => b,
        None => return Ok(Vec::new()),
    };
    let mut out: Vec<(BeliefState, KbConfiguration)> = pairs
        .into_iter()
        .filter(|(d, _, _)| *d == best)
        .map(|(_, s, k)| (s, k))
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Cost-minimal equilibria of the fixed `config` branch at minimal distance
/// from `state`. Minimization is local to the branch.
pub fn min_dist(
    m: &Emcs,
    aggregator: Aggregator,
    state: &BeliefState,
    obs: &InstantObservation,
    config: &KbConfiguration,
    budget: &Budget,
) -> Result<Vec<BeliefState>, EmcsError> {
    let candidates = min_cost(m, config, obs, budget)?;
    let distances: Vec<Distance> = candidates
        .iter()
        .map(|c| belief_distance(m, aggregator, state, c))
        .collect::<Result<_, _>>()?;
    let best = match distances.iter().min() {
        Some(b) => *b,
        None => return Ok(Vec::new()),
    };
    Ok(candidates
        .into_iter()
        .zip(distances)
        .filter(|(_, d)| *d == best)
        .map(|(s, _)| s)
        .collect())
}

/// Per-transition memo shared by the criterion checks during selection.
#[derive(Default)]
struct SelectionCache {
    min_cost: HashMap<(KbConfiguration, InstantObservation), Vec<BeliefState>>,
}

impl SelectionCache {
    fn min_cost(
        &mut self,
        m: &Emcs,
        config: &KbConfiguration,
        obs: &InstantObservation,
        budget: &Budget,
    ) -> Result<&Vec<BeliefState>, EmcsError> {
        let key = (config.clone(), obs.clone());
        if !self.min_cost.contains_key(&key) {
            let value = min_cost(m, config, obs, budget)?;
            self.min_cost.insert(key.clone(), value);
        }
        Ok(&self.min_cost[&key])
    }
}

fn check_strong_cached(
    m: &Emcs,
    aggregator: Aggregator,
    observations: &ObservationSequence,
    trace: &EquilibriumTrace,
    budget: &Budget,
    cache: &mut SelectionCache,
) -> Result<bool, EmcsError> {
    let s = trace.size();
    for j in 0..s {
        let obs = &observations.0[j];
        if !cache
            .min_cost(m, &trace.kb_configs[j], obs, budget)?
            .contains(&trace.states.0[j])
        {
            return Ok(false);
        }
    }
    for j in 0..s.saturating_sub(1) {
        let chosen = (trace.states.0[j + 1].clone(), trace.kb_configs[j + 1].clone());
        let minimal = min_next(
            m,
            aggregator,
            &trace.states.0[j],
            &observations.0[j],
            &observations.0[j + 1],
            &trace.kb_configs[j],
            budget,
        )?;
        if !minimal.contains(&chosen) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_weak_cached(
    m: &Emcs,
    aggregator: Aggregator,
    observations: &ObservationSequence,
    trace: &EquilibriumTrace,
    budget: &Budget,
    cache: &mut SelectionCache,
) -> Result<bool, EmcsError> {
    let s = trace.size();
    for j in 0..s {
        let obs = &observations.0[j];
        if !cache
            .min_cost(m, &trace.kb_configs[j], obs, budget)?
            .contains(&trace.states.0[j])
        {
            return Ok(false);
        }
    }
    for j in 0..s.saturating_sub(1) {
        let minimal = min_dist(
            m,
            aggregator,
            &trace.states.0[j],
            &observations.0[j + 1],
            &trace.kb_configs[j + 1],
            budget,
        )?;
        if !minimal.contains(&trace.states.0[j + 1]) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Does the trace satisfy the strong minimal change criterion: per-step cost
/// minimality plus distance minimality across all successor branches.
pub fn check_strong(
    m: &Emcs,
    aggregator: Aggregator,
    observations: &ObservationSequence,
    trace: &EquilibriumTrace,
    budget: &Budget,
) -> Result<bool, EmcsError> {
    check_strong_cached(m, aggregator, observations, trace, budget, &mut SelectionCache::default())
}

/// Does the trace satisfy the weak minimal change criterion: per-step cost
/// minimality plus distance minimality within the taken branch only.
pub fn check_weak(
    m: &Emcs,
    aggregator: Aggregator,
    observations: &ObservationSequence,
    trace: &EquilibriumTrace,
    budget: &Budget,
) -> Result<bool, EmcsError> {
    check_weak_cached(m, aggregator, observations, trace, budget, &mut SelectionCache::default())
}

/// The evolving equilibria of size `s` satisfying the strong criterion.
pub fn select_strong(
    m: &Emcs,
    aggregator: Aggregator,
    observations: &ObservationSequence,
    s: usize,
    budget: &Budget,
) -> Result<Vec<EquilibriumTrace>, EmcsError> {
    let mut cache = SelectionCache::default();
    let mut out = Vec::new();
    for trace in enumerate_evolving_equilibria(m, observations, s, budget)? {
        if check_strong_cached(m, aggregator, observations, &trace, budget, &mut cache)? {
            out.push(trace);
        }
    }
    Ok(out)
}

/// The evolving equilibria of size `s` satisfying the weak criterion.
pub fn select_weak(
    m: &Emcs,
    aggregator: Aggregator,
    observations: &ObservationSequence,
    s: usize,
    budget: &Budget,
) -> Result<Vec<EquilibriumTrace>, EmcsError> {
    let mut cache = SelectionCache::default();
    let mut out = Vec::new();
    for trace in enumerate_evolving_equilibria(m, observations, s, budget)? {
        if check_weak_cached(m, aggregator, observations, &trace, budget, &mut cache)? {
            out.push(trace);
        }
    }
    Ok(out)
}

/// Total operation cost of a trace: step costs summed over all its steps.
pub fn global_cost(
    m: &Emcs,
    trace: &EquilibriumTrace,
    observations: &ObservationSequence,
) -> Result<u64, EmcsError> {
    if trace.size() > observations.len() {
        return Err(EmcsError::SizeExceedsObservations {
            size: trace.size(),
            len: observations.len(),
        });
    }
    let mut total = 0;
    for (j, state) in trace.states.0.iter().enumerate() {
        let system = m.replace(&trace.kb_configs[j], &observations.0[j])?;
        total += step_cost(&system, state, &observations.0[j])?;
    }
    Ok(total)
}

/// The evolving equilibria of size `s` with minimum total cost.
pub fn min_cost_global(
    m: &Emcs,
    observations: &ObservationSequence,
    s: usize,
    budget: &Budget,
) -> Result<Vec<EquilibriumTrace>, EmcsError> {
    let traces = enumerate_evolving_equilibria(m, observations, s, budget)?;
    let costs: Vec<u64> = traces
        .iter()
        .map(|t| global_cost(m, t, observations))
        .collect::<Result<_, _>>()?;
    let best = match costs.iter().min() {
        Some(b) => *b,
        None => return Ok(Vec::new()),
    };
    Ok(traces
        .into_iter()
        .zip(costs)
        .filter(|(_, c)| *c == best)
        .map(|(t, _)| t)
        .collect())
}
