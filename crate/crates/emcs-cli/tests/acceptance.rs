//! Acceptance suite: one test (and one printed pass/fail line) per criterion,
//! each over seeded randomized desk-scale instances.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use emcs_core::sample::{random_instance, rng_for, SampleConfig, SampleInstance};
use emcs_core::{
    belief_distance, check_prefix_property, enumerate_equilibria, enumerate_evolving_equilibria,
    mng, oracle_equilibria, select_strong, select_weak, step_cost, Aggregator, Atom, BeliefSet,
    BeliefState, BridgeHead, Budget, ContextCosts, Distance, Emcs, EmcsError, EvolvingContext,
    InstantObservation, KbElement, KnowledgeBase, Logic, LogicKind, ObservationContext,
    ObservationSequence, OpFormula, OpName,
};

const INSTANCES: usize = 500;

fn report(criterion: usize, name: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {criterion} ({name}): {verdict} — {detail}");
    assert!(ok, "criterion {criterion} ({name}) failed: {detail}");
}

fn instances(seed: u64) -> impl Iterator<Item = SampleInstance> {
    let mut rng = rng_for(seed);
    let config = SampleConfig::default();
    (0..INSTANCES).map(move |_| random_instance(&mut rng, &config))
}

/// Budget exhaustion on a pathological draw is "not evaluated", not a
/// violation; anything else propagates.
fn skip_budget<T>(r: Result<T, EmcsError>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(EmcsError::BudgetExceeded { .. }) => None,
        Err(e) => panic!("unexpected engine error: {e}"),
    }
}

#[test]
fn criterion_1_oracle_equivalence() {
    let budget = Budget::default();
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for instance in instances(101) {
        for obs in &instance.observations.0 {
            let solver = match skip_budget(enumerate_equilibria(&instance.system, obs, &budget)) {
                Some(v) => v,
                None => {
                    skipped += 1;
                    continue;
                }
            };
            let oracle = match skip_budget(oracle_equilibria(&instance.system, obs, &budget)) {
                Some(v) => v,
                None => {
                    skipped += 1;
                    continue;
                }
            };
            let solver_states: Vec<BeliefState> = solver.into_iter().map(|w| w.state).collect();
            assert_eq!(
                solver_states, oracle,
                "solver/oracle disagreement on instance"
            );
            checked += 1;
        }
    }
    report(
        1,
        "oracle equivalence",
        checked > 0,
        &format!("{checked} instants agreed exactly, {skipped} skipped on budget"),
    );
}

#[test]
fn criterion_2_prefix_property() {
    let budget = Budget::default();
    let mut checked = 0usize;
    let mut skipped = 0usize;
    let mut violations = 0usize;
    for instance in instances(202) {
        let s = instance.observations.len();
        let traces = match skip_budget(enumerate_evolving_equilibria(
            &instance.system,
            &instance.observations,
            s,
            &budget,
        )) {
            Some(v) => v,
            None => {
                skipped += 1;
                continue;
            }
        };
        for trace in traces.iter().take(8) {
            match skip_budget(check_prefix_property(
                &instance.system,
                &instance.observations,
                trace,
                &budget,
            )) {
                Some(true) => checked += 1,
                Some(false) => violations += 1,
                None => skipped += 1,
            }
        }
    }
    report(
        2,
        "prefix property",
        violations == 0 && checked > 0,
        &format!("{checked} traces verified, {violations} violations, {skipped} skipped"),
    );
}

fn all_states(n_contexts: usize, atoms: &[Atom]) -> Vec<BeliefState> {
    let per_context: Vec<BeliefSet> = (0..1u32 << atoms.len())
        .map(|mask| {
            BeliefSet::new(
                atoms
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, a)| a.clone()),
            )
        })
        .collect();
    let mut out = vec![Vec::new()];
    for _ in 0..n_contexts {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<BeliefSet>| {
                per_context.iter().map(move |bs| {
                    let mut next = prefix.clone();
                    next.push(bs.clone());
                    next
                })
            })
            .collect();
    }
    out.into_iter().map(BeliefState).collect()
}

fn metric_axioms(m: &Emcs, agg: Aggregator, a: &BeliefState, b: &BeliefState, c: &BeliefState) {
    let dab = belief_distance(m, agg, a, b).unwrap();
    let dba = belief_distance(m, agg, b, a).unwrap();
    let dac = belief_distance(m, agg, a, c).unwrap();
    let dcb = belief_distance(m, agg, c, b).unwrap();
    assert!(dab >= Distance::from_integer(0));
    assert_eq!(dab == Distance::from_integer(0), a == b);
    assert_eq!(dab, dba);
    assert!(dab <= dac + dcb, "triangle inequality violated");
}

#[test]
fn criterion_3_metric_axioms() {
    let atoms: Vec<Atom> = ["a", "b", "c"]
        .iter()
        .map(|s| Atom::new(*s).unwrap())
        .collect();
    let ctx = EvolvingContext::new(
        Logic::new(LogicKind::FactStore, atoms.iter().cloned()),
        KnowledgeBase::default(),
        Vec::new(),
    );
    let m = Emcs {
        contexts: vec![ctx.clone(), ctx],
        observers: Vec::new(),
    };
    let states = all_states(2, &atoms);
    assert_eq!(states.len(), 64);

    // exhaustive pairs, with the triangle inequality routed through a fixed
    // mid point per pair plus a seeded sample of full triples
    let mut pair_count = 0usize;
    for a in &states {
        for b in &states {
            for agg in [Aggregator::Max, Aggregator::Avg] {
                metric_axioms(&m, agg, a, b, &states[0]);
                metric_axioms(&m, agg, a, b, &states[states.len() / 2]);
            }
            pair_count += 1;
        }
    }
    let mut rng = rng_for(303);
    let mut triple_count = 0usize;
    for _ in 0..20_000 {
        use rand::prelude::*;
        let a = states.choose(&mut rng).unwrap();
        let b = states.choose(&mut rng).unwrap();
        let c = states.choose(&mut rng).unwrap();
        for agg in [Aggregator::Max, Aggregator::Avg] {
            metric_axioms(&m, agg, a, b, c);
        }
        triple_count += 1;
    }
    // larger shapes: random triples drawn from generated instances
    let budget = Budget::default();
    for instance in instances(304).take(60) {
        let mut candidates = Vec::new();
        for obs in &instance.observations.0 {
            if let Some(ws) = skip_budget(enumerate_equilibria(&instance.system, obs, &budget)) {
                candidates.extend(ws.into_iter().map(|w| w.state));
            }
        }
        if candidates.len() < 3 {
            continue;
        }
        for _ in 0..30 {
            use rand::prelude::*;
            let a = candidates.choose(&mut rng).unwrap();
            let b = candidates.choose(&mut rng).unwrap();
            let c = candidates.choose(&mut rng).unwrap();
            metric_axioms(&instance.system, instance.aggregator, a, b, c);
            triple_count += 1;
        }
    }
    report(
        3,
        "metric axioms",
        true,
        &format!("{pair_count} exhaustive pairs and {triple_count} triples, exact arithmetic"),
    );
}

#[test]
fn criterion_4_existence_of_selected_equilibria() {
    let budget = Budget::default();
    let mut checked = 0usize;
    let mut skipped = 0usize;
    let mut strong_missing = 0usize;
    let mut weak_missing = 0usize;
    for instance in instances(404) {
        let m = &instance.system;
        let obs = &instance.observations;
        let s = obs.len();
        let traces = match skip_budget(enumerate_evolving_equilibria(m, obs, s, &budget)) {
            Some(v) => v,
            None => {
                skipped += 1;
                continue;
            }
        };
        if traces.is_empty() {
            continue;
        }
        let strong = match skip_budget(select_strong(m, instance.aggregator, obs, s, &budget)) {
            Some(v) => v,
            None => {
                skipped += 1;
                continue;
            }
        };
        let weak = match skip_budget(select_weak(m, instance.aggregator, obs, s, &budget)) {
            Some(v) => v,
            None => {
                skipped += 1;
                continue;
            }
        };
        if strong.is_empty() {
            strong_missing += 1;
        }
        if weak.is_empty() {
            weak_missing += 1;
        }
        checked += 1;
    }
    report(
        4,
        "existence of selected equilibria",
        strong_missing == 0 && weak_missing == 0 && checked > 0,
        &format!(
            "{checked} instances with evolving equilibria; empty strong selections: \
             {strong_missing}, empty weak selections: {weak_missing}, {skipped} skipped"
        ),
    );
}

#[test]
fn criterion_5_strong_implies_weak() {
    let budget = Budget::default();
    let mut checked = 0usize;
    let mut skipped = 0usize;
    let mut violations = 0usize;
    for instance in instances(505) {
        let m = &instance.system;
        let obs = &instance.observations;
        let s = obs.len();
        let strong = match skip_budget(select_strong(m, instance.aggregator, obs, s, &budget)) {
            Some(v) => v,
            None => {
                skipped += 1;
                continue;
            }
        };
        let weak = match skip_budget(select_weak(m, instance.aggregator, obs, s, &budget)) {
            Some(v) => v,
            None => {
                skipped += 1;
                continue;
            }
        };
        for t in &strong {
            if !weak.contains(t) {
                violations += 1;
            }
        }
        checked += 1;
    }
    report(
        5,
        "strong implies weak",
        violations == 0 && checked > 0,
        &format!("{checked} instances, {violations} strong traces outside weak, {skipped} skipped"),
    );
}

#[test]
fn criterion_6_management_contract() {
    let budget = Budget::default();
    let mut calls = 0usize;
    for instance in instances(606) {
        let m = &instance.system;
        for (i, ctx) in m.contexts.iter().enumerate() {
            // the assumed base case
            let base = mng(ctx, &BTreeSet::new(), &ctx.kb).unwrap();
            assert_eq!(base, BTreeSet::from([ctx.kb.clone()]));
            calls += 1;

            // operation sets arising from actual equilibria
            let obs = &instance.observations.0[0];
            if let Some(ws) = skip_budget(enumerate_equilibria(m, obs, &budget)) {
                for w in ws.iter().take(4) {
                    let (now, next) = m.applicable_ops(i, &w.state, obs).unwrap();
                    for ops in [&now, &next] {
                        let successors = mng(ctx, ops, &ctx.kb).unwrap();
                        assert!(!successors.is_empty(), "mng returned an empty set");
                        calls += 1;
                    }
                }
            }

            // arbitrary operation sets over the context signature
            let mut ops: BTreeSet<OpFormula> = BTreeSet::new();
            for (k, head) in ctx.bridge_rules.iter().map(|r| &r.head).enumerate() {
                if k % 2 == 0 {
                    ops.insert(head.formula.clone());
                }
            }
            let successors = mng(ctx, &ops, &ctx.kb).unwrap();
            assert!(!successors.is_empty(), "mng returned an empty set");
            calls += 1;
        }
    }
    report(
        6,
        "management contract",
        calls > 0,
        &format!("{calls} mng calls non-empty, base case exact"),
    );
}

#[test]
fn criterion_7_unit_cost_specialization() {
    let budget = Budget::default();
    let mut checked = 0usize;
    for instance in instances(707) {
        let mut m = instance.system.clone();
        for ctx in &mut m.contexts {
            ctx.costs = ContextCosts { add: 1, del: 1 };
        }
        for obs in &instance.observations.0 {
            let ws = match skip_budget(enumerate_equilibria(&m, obs, &budget)) {
                Some(v) => v,
                None => continue,
            };
            for w in ws.iter().take(6) {
                let mut op_count = 0u64;
                for i in 0..m.contexts.len() {
                    let (_, next) = m.applicable_ops(i, &w.state, obs).unwrap();
                    op_count += next.len() as u64;
                }
                assert_eq!(step_cost(&m, &w.state, obs).unwrap(), op_count);
                checked += 1;
            }
        }
    }
    report(
        7,
        "unit-cost specialization",
        checked > 0,
        &format!("{checked} equilibria: cost equals applied next-operation count"),
    );
}

const CLI_SYSTEM: &str = r#"
context c kind factstore signature { p }
kb c { }
observer o language { q }
bridge c {
  add(p) <- (o@q);
  next(add(p)) <- (o@q);
}
aggregator max
"#;

const CLI_OBSERVATIONS: &str = "step: o = { q }\nstep:\n";

fn fixture(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

#[test]
fn criterion_8_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let sys = fixture(dir.path(), "sys.emcs", CLI_SYSTEM);
    let obs = fixture(dir.path(), "obs.emcs", CLI_OBSERVATIONS);
    let trace = fixture(dir.path(), "trace.json", r#"{"states": [[["p"]], [["p"]]]}"#);
    let sys = sys.to_str().unwrap();
    let obs = obs.to_str().unwrap();
    let trace = trace.to_str().unwrap();

    let commands: Vec<Vec<&str>> = vec![
        vec!["solve", "--system", sys, "--observations", obs],
        vec!["evolve", "--system", sys, "--observations", obs],
        vec!["select", "--criterion", "strong", "--system", sys, "--observations", obs],
        vec!["select", "--criterion", "weak", "--system", sys, "--observations", obs],
        vec!["select", "--criterion", "global-cost", "--system", sys, "--observations", obs],
        vec!["check", "--trace", trace, "--system", sys, "--observations", obs],
        vec!["oracle", "--system", sys, "--observations", obs],
        vec!["solve", "--format", "text", "--system", sys, "--observations", obs],
    ];
    for args in &commands {
        let run = || {
            Command::new(env!("CARGO_BIN_EXE_emcs"))
                .args(args)
                .env_remove("EMCS_BUDGET")
                .output()
                .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.status.code(), b.status.code(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "non-deterministic stdout for {args:?}");
    }
    report(
        8,
        "CLI determinism",
        true,
        &format!("{} commands byte-identical across consecutive runs", commands.len()),
    );
}

#[test]
fn criterion_9_worked_example() {
    // one factstore context, one observer; two bridge rules with identical
    // body, one instantaneous and one persistent
    let p = Atom::new("p").unwrap();
    let q = Atom::new("q").unwrap();
    let lit = emcs_core::BridgeLiteral {
        negated: false,
        target: emcs_core::BridgeTarget::Observer(0),
        atom: q.clone(),
    };
    let head = |deferred| BridgeHead {
        formula: OpFormula {
            op: OpName::Add,
            arg: KbElement::Fact(p.clone()),
        },
        deferred,
    };
    let ctx = EvolvingContext::new(
        Logic::new(LogicKind::FactStore, [p.clone()]),
        KnowledgeBase::default(),
        vec![
            emcs_core::BridgeRule {
                head: head(false),
                body: BTreeSet::from([lit.clone()]),
            },
            emcs_core::BridgeRule {
                head: head(true),
                body: BTreeSet::from([lit]),
            },
        ],
    );
    let m = Emcs {
        contexts: vec![ctx],
        observers: vec![ObservationContext::new([q.clone()])],
    };
    let observations = ObservationSequence(vec![
        InstantObservation(vec![BTreeSet::from([q])]),
        InstantObservation(vec![BTreeSet::new()]),
    ]);
    let budget = Budget::default();

    // step 1, by the independent oracle: the only equilibrium contains p
    let step1 = oracle_equilibria(&m, &observations.0[0], &budget).unwrap();
    assert_eq!(step1.len(), 1);
    assert!(step1[0].0[0].contains(&p), "instantaneous effect missing");

    // step 2: the persistent rule has moved p into the kb
    let traces = enumerate_evolving_equilibria(&m, &observations, 2, &budget).unwrap();
    assert_eq!(traces.len(), 1);
    let kb2 = &traces[0].kb_configs[1].0[0];
    assert!(
        kb2.elements().any(|e| *e == KbElement::Fact(p.clone())),
        "persistent effect missing from step-2 kb"
    );
    assert!(traces[0].states.0[1].0[0].contains(&p));
    report(
        9,
        "worked example",
        true,
        "step-1 equilibrium and step-2 kb both contain p",
    );
}
