//! Abstract context logics and the two built-in instances.
//!
//! A logic is a triple of well-formed knowledge bases, possible belief sets,
//! and a semantics function `acc` mapping each knowledge base to its set of
//! acceptable belief sets. Two concrete logics are shipped:
//!
//! * `factstore` — knowledge bases are sets of atomic facts, `acc` is the
//!   identity on the fact set (deterministic, always a singleton);
//! * `asp` — knowledge bases are propositional normal logic programs, `acc`
//!   returns the answer sets (possibly none, possibly several).
//!
//! Signatures are finite and declared up front, which keeps the space of
//! belief sets finite and every search in the engine decidable by
//! enumeration.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::EmcsError;

/// A propositional atom: a non-empty token over `[a-zA-Z0-9_]`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Atom(String);

impl Atom {
    pub fn new(name: impl Into<String>) -> Result<Self, EmcsError> {
        let name = name.into();
        if name.is_empty() || !name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
            return Err(EmcsError::InvalidAtom(name));
        }
        Ok(Atom(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One element of a knowledge base.
///
/// Fact stores hold only `Fact`s. Answer-set programs hold normal rules
/// `head :- pos, not neg.`; a `Fact` in an asp knowledge base is read as a
/// rule with an empty body.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum KbElement {
    Fact(Atom),
    Rule {
        head: Atom,
        pos: BTreeSet<Atom>,
        neg: BTreeSet<Atom>,
    },
}

impl KbElement {
    pub fn fact(a: Atom) -> Self {
        KbElement::Fact(a)
    }

    /// All atoms occurring in this element.
    pub fn atoms(&self) -> Box<dyn Iterator<Item = &Atom> + '_> {
        match self {
            KbElement::Fact(a) => Box::new(std::iter::once(a)),
            KbElement::Rule { head, pos, neg } => {
                Box::new(std::iter::once(head).chain(pos.iter()).chain(neg.iter()))
            }
        }
    }

    pub fn is_fact(&self) -> bool {
        matches!(self, KbElement::Fact(_))
    }

    /// Rule view: (head, positive body, negative body). Facts become
    /// empty-body rules.
    fn as_rule(&self) -> (&Atom, Option<&BTreeSet<Atom>>, Option<&BTreeSet<Atom>>) {
        match self {
            KbElement::Fact(a) => (a, None, None),
            KbElement::Rule { head, pos, neg } => (head, Some(pos), Some(neg)),
        }
    }
}

impl fmt::Display for KbElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KbElement::Fact(a) => write!(f, "{a}."),
            KbElement::Rule { head, pos, neg } => {
                if pos.is_empty() && neg.is_empty() {
                    return write!(f, "{head}.");
                }
                write!(f, "{head} :- ")?;
                let mut first = true;
                for a in pos {
                    if !first {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                    first = false;
                }
                for a in neg {
                    if !first {
                        write!(f, ", ")?;
                    }
                    write!(f, "not {a}")?;
                    first = false;
                }
                write!(f, ".")
            }
        }
    }
}

/// A finite set of kb-elements.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct KnowledgeBase {
    elements: BTreeSet<KbElement>,
}

impl KnowledgeBase {
    pub fn new(elements: impl IntoIterator<Item = KbElement>) -> Self {
        KnowledgeBase {
            elements: elements.into_iter().collect(),
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = &KbElement> {
        self.elements.iter()
    }

    pub fn contains(&self, e: &KbElement) -> bool {
        self.elements.contains(e)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn with(&self, e: KbElement) -> Self {
        let mut out = self.clone();
        out.elements.insert(e);
        out
    }

    pub fn without(&self, e: &KbElement) -> Self {
        let mut out = self.clone();
        out.elements.remove(e);
        out
    }
}

impl FromIterator<KbElement> for KnowledgeBase {
    fn from_iter<T: IntoIterator<Item = KbElement>>(iter: T) -> Self {
        KnowledgeBase::new(iter)
    }
}

/// A finite set of atoms held as acceptable by a context.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct BeliefSet {
    atoms: BTreeSet<Atom>,
}

impl BeliefSet {
    pub fn new(atoms: impl IntoIterator<Item = Atom>) -> Self {
        BeliefSet {
            atoms: atoms.into_iter().collect(),
        }
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter()
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.atoms.contains(a)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Cardinality of the symmetric difference with `other`.
    pub fn symmetric_difference_size(&self, other: &BeliefSet) -> u64 {
        self.atoms.symmetric_difference(&other.atoms).count() as u64
    }

    pub fn is_subset(&self, other: &BeliefSet) -> bool {
        self.atoms.is_subset(&other.atoms)
    }
}

impl FromIterator<Atom> for BeliefSet {
    fn from_iter<T: IntoIterator<Item = Atom>>(iter: T) -> Self {
        BeliefSet::new(iter)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum LogicKind {
    Asp,
    FactStore,
}

impl fmt::Display for LogicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogicKind::Asp => f.write_str("asp"),
            LogicKind::FactStore => f.write_str("factstore"),
        }
    }
}

/// One offending kb-element together with the reason it is rejected.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct KbViolation {
    pub element: KbElement,
    pub reason: String,
}

impl fmt::Display for KbViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.element, self.reason)
    }
}

/// A concrete logic: kind plus declared finite signature.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Logic {
    pub kind: LogicKind,
    pub signature: BTreeSet<Atom>,
}

impl Logic {
    pub fn new(kind: LogicKind, signature: impl IntoIterator<Item = Atom>) -> Self {
        Logic {
            kind,
            signature: signature.into_iter().collect(),
        }
    }

    pub fn factstore(signature: impl IntoIterator<Item = Atom>) -> Self {
        Logic::new(LogicKind::FactStore, signature)
    }

    pub fn asp(signature: impl IntoIterator<Item = Atom>) -> Self {
        Logic::new(LogicKind::Asp, signature)
    }

    /// Checks that `kb` is a well-formed knowledge base of this logic.
    /// Reports every offending element.
    pub fn validate_kb(&self, kb: &KnowledgeBase) -> Result<(), Vec<KbViolation>> {
        let mut violations = Vec::new();
        for e in kb.elements() {
            if self.kind == LogicKind::FactStore && !e.is_fact() {
                violations.push(KbViolation {
                    element: e.clone(),
                    reason: "factstore knowledge bases hold only facts".into(),
                });
            }
            for a in e.atoms() {
                if !self.signature.contains(a) {
                    violations.push(KbViolation {
                        element: e.clone(),
                        reason: format!("atom `{a}` not in signature"),
                    });
                }
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    /// Checks a single kb-element (used for bridge-rule head arguments).
    pub fn validate_element(&self, e: &KbElement) -> Result<(), Vec<KbViolation>> {
        self.validate_kb(&KnowledgeBase::new([e.clone()]))
    }

    /// The acceptable belief sets of `kb`.
    pub fn acc(&self, kb: &KnowledgeBase) -> Result<BTreeSet<BeliefSet>, EmcsError> {
        if let Err(violations) = self.validate_kb(kb) {
            return Err(EmcsError::InvalidKb {
                report: violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "),
            });
        }
        match self.kind {
            LogicKind::FactStore => {
                let atoms = kb.elements().flat_map(|e| e.atoms().cloned());
                Ok(BTreeSet::from([BeliefSet::new(atoms)]))
            }
            LogicKind::Asp => Ok(asp_answer_sets(kb, &self.signature)),
        }
    }
}

/// All answer sets of `program`, by exhaustive reduct checking over every
/// interpretation of `signature`.
///
/// An interpretation S is an answer set iff S is the least model of the
/// reduct of `program` with respect to S.
pub fn asp_answer_sets(program: &KnowledgeBase, signature: &BTreeSet<Atom>) -> BTreeSet<BeliefSet> {
    let atoms: Vec<&Atom> = signature.iter().collect();
    assert!(atoms.len() < 64, "signature too large for exhaustive enumeration");
    let mut out = BTreeSet::new();
    for mask in 0u64..(1u64 << atoms.len()) {
        let candidate: BeliefSet = atoms
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, a)| (*a).clone())
            .collect();
        if is_answer_set(program, &candidate) {
            out.insert(candidate);
        }
    }
    out
}

fn is_answer_set(program: &KnowledgeBase, candidate: &BeliefSet) -> bool {
    // Reduct: drop rules whose negative body intersects the candidate,
    // strip negative bodies from the rest.
    let reduct: Vec<(&Atom, Vec<&Atom>)> = program
        .elements()
        .filter_map(|e| {
            let (head, pos, neg) = e.as_rule();
            if let Some(neg) = neg {
                if neg.iter().any(|a| candidate.contains(a)) {
                    return None;
                }
            }
            Some((head, pos.map(|p| p.iter().collect()).unwrap_or_default()))
        })
        .collect();
    least_model(&reduct) == *candidate
}

/// Least model of a positive program, by fixpoint iteration.
fn least_model(rules: &[(&Atom, Vec<&Atom>)]) -> BeliefSet {
    let mut derived: BTreeSet<Atom> = BTreeSet::new();
    loop {
        let mut changed = false;
        for (head, pos) in rules {
            if !derived.contains(head) && pos.iter().all(|a| derived.contains(*a)) {
                derived.insert((*head).clone());
                changed = true;
            }
        }
        if !changed {
            return BeliefSet::new(derived);
        }
    }
}
