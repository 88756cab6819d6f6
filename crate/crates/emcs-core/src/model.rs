//! System structure: evolving contexts, observation contexts, bridge rules
//! with the `next` operator, and the built-in management function.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::EmcsError;
use crate::logic::{Atom, BeliefSet, KbElement, KnowledgeBase, Logic};

/// The built-in management base shared by every evolving context.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum OpName {
    Add,
    Del,
}

impl OpName {
    pub const ALL: [OpName; 2] = [OpName::Add, OpName::Del];

    pub fn as_str(self) -> &'static str {
        match self {
            OpName::Add => "add",
            OpName::Del => "del",
        }
    }
}

impl fmt::Display for OpName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An operation applied to a kb-element, e.g. `add(p)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct OpFormula {
    pub op: OpName,
    pub arg: KbElement,
}

impl fmt::Display for OpFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.op, self.arg)
    }
}

/// A bridge-rule head: an operation, optionally deferred to the next time
/// instant by `next`. `next` cannot be nested.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BridgeHead {
    pub formula: OpFormula,
    pub deferred: bool,
}

impl fmt::Display for BridgeHead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.deferred {
            write!(f, "next({})", self.formula)
        } else {
            write!(f, "{}", self.formula)
        }
    }
}

/// What a bridge literal queries: a context's belief set `(r:b)` or an
/// observer's current observation `(r@b)`. Indices are zero-based.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum BridgeTarget {
    Context(usize),
    Observer(usize),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BridgeLiteral {
    pub negated: bool,
    pub target: BridgeTarget,
    pub atom: Atom,
}

impl BridgeLiteral {
    pub fn negate(&self) -> Self {
        BridgeLiteral {
            negated: !self.negated,
            ..self.clone()
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BridgeRule {
    pub head: BridgeHead,
    pub body: BTreeSet<BridgeLiteral>,
}

/// An observation context: its observation language and current observation.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ObservationContext {
    pub language: BTreeSet<Atom>,
    pub current: BTreeSet<Atom>,
}

impl ObservationContext {
    pub fn new(language: impl IntoIterator<Item = Atom>) -> Self {
        ObservationContext {
            language: language.into_iter().collect(),
            current: BTreeSet::new(),
        }
    }
}

/// Per-context belief-set distance. Only the symmetric-difference
/// cardinality ships built in; the enum is the extension point for custom
/// distances.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub enum DistanceKind {
    #[default]
    SymDiff,
}

impl DistanceKind {
    pub fn distance(self, a: &BeliefSet, b: &BeliefSet) -> u64 {
        match self {
            DistanceKind::SymDiff => a.symmetric_difference_size(b),
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceKind::SymDiff => f.write_str("symdiff"),
        }
    }
}

/// Per-operation costs of one context. Total over the management base,
/// non-negative integers.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ContextCosts {
    pub add: u64,
    pub del: u64,
}

impl Default for ContextCosts {
    fn default() -> Self {
        ContextCosts { add: 1, del: 1 }
    }
}

impl ContextCosts {
    pub fn cost(&self, op: OpName) -> u64 {
        match op {
            OpName::Add => self.add,
            OpName::Del => self.del,
        }
    }
}

/// An evolving context: logic, initial knowledge base, bridge rules, and
/// the cost/distance annotations used by the minimal-change layer.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct EvolvingContext {
    pub logic: Logic,
    pub kb: KnowledgeBase,
    pub bridge_rules: Vec<BridgeRule>,
    pub costs: ContextCosts,
    pub distance: DistanceKind,
}

impl EvolvingContext {
    pub fn new(logic: Logic, kb: KnowledgeBase, bridge_rules: Vec<BridgeRule>) -> Self {
        EvolvingContext {
            logic,
            kb,
            bridge_rules,
            costs: ContextCosts::default(),
            distance: DistanceKind::default(),
        }
    }
}

/// The full system: evolving contexts plus observation contexts.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Emcs {
    pub contexts: Vec<EvolvingContext>,
    pub observers: Vec<ObservationContext>,
}

/// One belief set per evolving context.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BeliefState(pub Vec<BeliefSet>);

/// One observation set per observation context, at a single instant.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct InstantObservation(pub Vec<BTreeSet<Atom>>);

impl InstantObservation {
    pub fn empty(observer_count: usize) -> Self {
        InstantObservation(vec![BTreeSet::new(); observer_count])
    }
}

/// One knowledge base per evolving context.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct KbConfiguration(pub Vec<KnowledgeBase>);

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SystemViolation(pub String);

impl fmt::Display for SystemViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Emcs {
    pub fn context_count(&self) -> usize {
        self.contexts.len()
    }

    pub fn observer_count(&self) -> usize {
        self.observers.len()
    }

    /// Structural well-formedness: at least one context, valid kbs, bridge
    /// literals with in-range targets and signature atoms, head arguments
    /// valid for the owning logic.
    pub fn validate(&self) -> Result<(), Vec<SystemViolation>> {
        let mut out = Vec::new();
        if self.contexts.is_empty() {
            out.push(SystemViolation("system must have at least one evolving context".into()));
        }
        for (i, ctx) in self.contexts.iter().enumerate() {
            if let Err(vs) = ctx.logic.validate_kb(&ctx.kb) {
                for v in vs {
                    out.push(SystemViolation(format!("context {i}: kb invalid: {v}")));
                }
            }
            for (ri, rule) in ctx.bridge_rules.iter().enumerate() {
                if let Err(vs) = ctx.logic.validate_element(&rule.head.formula.arg) {
                    for v in vs {
                        out.push(SystemViolation(format!(
                            "context {i}, bridge rule {ri}: head argument invalid: {v}"
                        )));
                    }
                }
                for lit in &rule.body {
                    match lit.target {
                        BridgeTarget::Context(r) => match self.contexts.get(r) {
                            None => out.push(SystemViolation(format!(
                                "context {i}, bridge rule {ri}: context index {r} out of range"
                            ))),
                            Some(target) => {
                                if !target.logic.signature.contains(&lit.atom) {
                                    out.push(SystemViolation(format!(
                                        "context {i}, bridge rule {ri}: atom `{}` not in signature of context {r}",
                                        lit.atom
                                    )));
                                }
                            }
                        },
                        BridgeTarget::Observer(r) => match self.observers.get(r) {
                            None => out.push(SystemViolation(format!(
                                "context {i}, bridge rule {ri}: observer index {r} out of range"
                            ))),
                            Some(obs) => {
                                if !obs.language.contains(&lit.atom) {
                                    out.push(SystemViolation(format!(
                                        "context {i}, bridge rule {ri}: atom `{}` not in language of observer {r}",
                                        lit.atom
                                    )));
                                }
                            }
                        },
                    }
                }
            }
        }
        for (i, obs) in self.observers.iter().enumerate() {
            if !obs.current.is_subset(&obs.language) {
                out.push(SystemViolation(format!(
                    "observer {i}: current observation not within its language"
                )));
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// The system's initial knowledge base configuration.
    pub fn initial_configuration(&self) -> KbConfiguration {
        KbConfiguration(self.contexts.iter().map(|c| c.kb.clone()).collect())
    }

    fn check_state_shape(&self, state: &BeliefState) -> Result<(), EmcsError> {
        if state.0.len() != self.contexts.len() {
            return Err(EmcsError::ShapeMismatch {
                kind: "belief sets",
                expected: self.contexts.len(),
                got: state.0.len(),
            });
        }
        Ok(())
    }

    fn check_obs_shape(&self, obs: &InstantObservation) -> Result<(), EmcsError> {
        if obs.0.len() != self.observers.len() {
            return Err(EmcsError::ShapeMismatch {
                kind: "observation sets",
                expected: self.observers.len(),
                got: obs.0.len(),
            });
        }
        Ok(())
    }

    pub fn check_config_shape(&self, config: &KbConfiguration) -> Result<(), EmcsError> {
        if config.0.len() != self.contexts.len() {
            return Err(EmcsError::ShapeMismatch {
                kind: "knowledge bases",
                expected: self.contexts.len(),
                got: config.0.len(),
            });
        }
        Ok(())
    }

    /// Satisfaction of a single bridge literal under belief state `state`
    /// and instant observation `obs`.
    pub fn satisfies(
        &self,
        state: &BeliefState,
        obs: &InstantObservation,
        lit: &BridgeLiteral,
    ) -> Result<bool, EmcsError> {
        self.check_state_shape(state)?;
        self.check_obs_shape(obs)?;
        let positive = match lit.target {
            BridgeTarget::Context(r) => state
                .0
                .get(r)
                .ok_or(EmcsError::IndexOutOfRange {
                    kind: "contexts",
                    index: r,
                    count: self.contexts.len(),
                })?
                .contains(&lit.atom),
            BridgeTarget::Observer(r) => obs
                .0
                .get(r)
                .ok_or(EmcsError::IndexOutOfRange {
                    kind: "observers",
                    index: r,
                    count: self.observers.len(),
                })?
                .contains(&lit.atom),
        };
        Ok(positive != lit.negated)
    }

    /// Heads of context `i`'s bridge rules whose bodies are satisfied under
    /// `state` and `obs`.
    pub fn applicable_heads(
        &self,
        i: usize,
        state: &BeliefState,
        obs: &InstantObservation,
    ) -> Result<BTreeSet<BridgeHead>, EmcsError> {
        let ctx = self.contexts.get(i).ok_or(EmcsError::IndexOutOfRange {
            kind: "contexts",
            index: i,
            count: self.contexts.len(),
        })?;
        let mut heads = BTreeSet::new();
        for rule in &ctx.bridge_rules {
            let mut all = true;
            for lit in &rule.body {
                if !self.satisfies(state, obs, lit)? {
                    all = false;
                    break;
                }
            }
            if all {
                heads.insert(rule.head.clone());
            }
        }
        Ok(heads)
    }

    /// `applicable_heads` split into the now-part and the next-part of
    /// context `i`.
    pub fn applicable_ops(
        &self,
        i: usize,
        state: &BeliefState,
        obs: &InstantObservation,
    ) -> Result<(BTreeSet<OpFormula>, BTreeSet<OpFormula>), EmcsError> {
        Ok(split_app(&self.applicable_heads(i, state, obs)?))
    }

    /// The system with each context's kb replaced by `config` and each
    /// observer's current observation replaced by `obs`.
    pub fn replace(&self, config: &KbConfiguration, obs: &InstantObservation) -> Result<Emcs, EmcsError> {
        self.check_config_shape(config)?;
        self.check_obs_shape(obs)?;
        let mut out = self.clone();
        for (ctx, kb) in out.contexts.iter_mut().zip(&config.0) {
            ctx.kb = kb.clone();
        }
        for (observer, o) in out.observers.iter_mut().zip(&obs.0) {
            observer.current = o.clone();
        }
        Ok(out)
    }
}

/// Partitions a set of applicable heads into undeferred operations (to apply
/// now) and the inner operations of deferred heads (to apply at the next
/// instant).
pub fn split_app(heads: &BTreeSet<BridgeHead>) -> (BTreeSet<OpFormula>, BTreeSet<OpFormula>) {
    let mut now = BTreeSet::new();
    let mut next = BTreeSet::new();
    for head in heads {
        if head.deferred {
            next.insert(head.formula.clone());
        } else {
            now.insert(head.formula.clone());
        }
    }
    (now, next)
}

/// Applies a set of operations to a knowledge base, returning every possible
/// successor. Plain adds and deletes are deterministic; an element that is
/// simultaneously added and deleted yields both resolutions, so the result
/// can have up to 2^c members for c conflicting elements. Never empty, and
/// `mng({}, kb) = {kb}` exactly.
pub fn mng(
    ctx: &EvolvingContext,
    ops: &BTreeSet<OpFormula>,
    kb: &KnowledgeBase,
) -> Result<BTreeSet<KnowledgeBase>, EmcsError> {
    for op in ops {
        if let Err(vs) = ctx.logic.validate_element(&op.arg) {
            return Err(EmcsError::InvalidKb {
                report: format!(
                    "operation argument invalid: {}",
                    vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
                ),
            });
        }
    }
    let adds: BTreeSet<&KbElement> = ops.iter().filter(|o| o.op == OpName::Add).map(|o| &o.arg).collect();
    let dels: BTreeSet<&KbElement> = ops.iter().filter(|o| o.op == OpName::Del).map(|o| &o.arg).collect();
    let conflicts: Vec<&KbElement> = adds.intersection(&dels).copied().collect();

    let mut base = kb.clone();
    for d in &dels {
        base = base.without(d);
    }
    for a in adds.difference(&dels) {
        base = base.with((*a).clone());
    }

    let mut out = BTreeSet::new();
    for mask in 0u64..(1u64 << conflicts.len()) {
        let mut k = base.clone();
        for (idx, e) in conflicts.iter().enumerate() {
            if mask & (1 << idx) != 0 {
                k = k.with((*e).clone());
            }
        }
        out.insert(k);
    }
    debug_assert!(!out.is_empty());
    Ok(out)
}
