//! Reasoning engine for evolving multi-context systems: heterogeneous
//! contexts linked by bridge rules, reacting to observation streams, with
//! enumeration and minimal-change selection of evolving equilibria.

pub mod error;
pub mod evolve;
pub mod logic;
pub mod minimal_change;
pub mod model;
pub mod sample;
pub mod solver;

pub use error::EmcsError;
pub use evolve::{
    check_prefix_property, enumerate_evolving_equilibria, is_evolving_equilibrium, next_kb,
    EquilibriumTrace, EvolvingBeliefState, ObservationSequence,
};
pub use logic::{asp_answer_sets, Atom, BeliefSet, KbElement, KnowledgeBase, Logic, LogicKind};
pub use minimal_change::{
    belief_distance, check_strong, check_weak, global_cost, min_cost, min_cost_global, min_dist,
    min_eq, min_next, select_strong, select_weak, step_cost, Aggregator, Distance,
};
pub use model::{
    mng, split_app, BeliefState, BridgeHead, BridgeLiteral, BridgeRule, BridgeTarget,
    ContextCosts, DistanceKind, Emcs, EvolvingContext, InstantObservation, KbConfiguration,
    ObservationContext, OpFormula, OpName,
};
pub use solver::{
    enumerate_equilibria, is_equilibrium, oracle_equilibria, Budget, EquilibriumWitness,
};
