//! Canonical JSON and text reports. All maps are emitted with sorted keys
//! and every collection is ordered, so identical inputs produce identical
//! bytes.

use emcs_core::{
    belief_distance, global_cost, step_cost, Aggregator, BeliefState, Emcs, EmcsError,
    EquilibriumTrace, EquilibriumWitness, KbConfiguration, ObservationSequence, OpFormula,
};
use serde_json::{json, Value};
use std::collections::BTreeSet;

pub fn belief_state_json(state: &BeliefState) -> Value {
    Value::Array(
        state
            .0
            .iter()
            .map(|bs| {
                Value::Array(
                    bs.atoms()
                        .map(|a| Value::String(a.to_string()))
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn kb_config_json(config: &KbConfiguration) -> Value {
    Value::Array(
        config
            .0
            .iter()
            .map(|kb| {
                Value::Array(
                    kb.elements()
                        .map(|e| Value::String(e.to_string()))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn ops_json(ops: &BTreeSet<OpFormula>) -> Value {
    Value::Array(ops.iter().map(|o| Value::String(o.to_string())).collect())
}

pub fn witness_json(w: &EquilibriumWitness) -> Value {
    json!({
        "state": belief_state_json(&w.state),
        "witness_kbs": Value::Array(
            w.witness_kbs
                .iter()
                .map(|kb| Value::Array(kb.elements().map(|e| Value::String(e.to_string())).collect()))
                .collect()
        ),
    })
}

/// A trace with its per-step costs, global cost, and consecutive-state
/// distances under the system aggregator.
pub fn trace_json(
    m: &Emcs,
    aggregator: Aggregator,
    observations: &ObservationSequence,
    trace: &EquilibriumTrace,
) -> Result<Value, EmcsError> {
    let s = trace.size();
    let mut step_costs = Vec::new();
    for j in 0..s {
        let system = m.replace(&trace.kb_configs[j], &observations.0[j])?;
        step_costs.push(Value::from(step_cost(
            &system,
            &trace.states.0[j],
            &observations.0[j],
        )?));
    }
    let mut distances = Vec::new();
    for j in 0..s.saturating_sub(1) {
        let d = belief_distance(m, aggregator, &trace.states.0[j], &trace.states.0[j + 1])?;
        distances.push(Value::String(d.to_string()));
    }
    Ok(json!({
        "states": Value::Array(trace.states.0.iter().map(belief_state_json).collect()),
        "kb_configs": Value::Array(trace.kb_configs.iter().map(kb_config_json).collect()),
        "applied_next_ops": Value::Array(
            trace
                .applied_next_ops
                .iter()
                .map(|per_ctx| Value::Array(per_ctx.iter().map(ops_json).collect()))
                .collect()
        ),
        "step_costs": Value::Array(step_costs),
        "global_cost": global_cost(m, trace, observations)?,
        "step_distances": Value::Array(distances),
    }))
}

pub fn traces_json(
    m: &Emcs,
    aggregator: Aggregator,
    observations: &ObservationSequence,
    traces: &[EquilibriumTrace],
) -> Result<Value, EmcsError> {
    let mut out = Vec::new();
    for t in traces {
        out.push(trace_json(m, aggregator, observations, t)?);
    }
    Ok(Value::Array(out))
}

/// Renders a report. JSON output is `serde_json` pretty-printing over
/// sorted-key maps; text output is an indented flattening of the same value.
pub fn render(value: &Value, json: bool) -> String {
    if json {
        let mut s = serde_json::to_string_pretty(value).expect("report serialization");
        s.push('\n');
        s
    } else {
        let mut out = String::new();
        render_text(value, "", &mut out);
        out
    }
}

fn scalar(value: &Value) -> Option<String> {
    match value {
        Value::Null => Some("null".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(scalar).collect::<Option<_>>()?;
            Some(format!("[{}]", parts.join(", ")))
        }
        Value::Object(_) => None,
    }
}

fn render_text(value: &Value, indent: &str, out: &mut String) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                if let Some(s) = scalar(v) {
                    out.push_str(&format!("{indent}{k}: {s}\n"));
                } else {
                    out.push_str(&format!("{indent}{k}:\n"));
                    render_text(v, &format!("{indent}  "), out);
                }
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                if let Some(s) = scalar(v) {
                    out.push_str(&format!("{indent}- {s}\n"));
                } else {
                    out.push_str(&format!("{indent}- [{i}]\n"));
                    render_text(v, &format!("{indent}  "), out);
                }
            }
        }
        other => {
            out.push_str(&format!("{indent}{}\n", scalar(other).unwrap()));
        }
    }
}
