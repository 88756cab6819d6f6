use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use emcs_core::{
    check_strong, check_weak, enumerate_equilibria, enumerate_evolving_equilibria,
    is_evolving_equilibrium, min_cost_global, oracle_equilibria, select_strong, select_weak, Atom,
    BeliefSet, BeliefState, Budget, EmcsError, EquilibriumTrace, EvolvingBeliefState,
    InstantObservation, ObservationSequence, OpFormula,
};
use emcs_cli::parse::{parse_observations, parse_system, SystemDescription};
use emcs_cli::report;
use serde_json::{json, Value};

const EXIT_NO_RESULT: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "emcs", about = "Reasoner for evolving multi-context systems", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Criterion {
    Strong,
    Weak,
    GlobalCost,
}

#[derive(Args)]
struct Common {
    /// System description file
    #[arg(long, value_name = "FILE")]
    system: PathBuf,
    /// Observation sequence file
    #[arg(long, value_name = "FILE")]
    observations: PathBuf,
    /// Candidate budget (overrides EMCS_BUDGET; default 1000000)
    #[arg(long, value_name = "N")]
    budget: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the equilibria of the first time instant
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Enumerate evolving equilibria over the observation sequence
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Number of time steps (default: length of the observation sequence)
        #[arg(long, value_name = "N")]
        size: Option<usize>,
    },
    /// Enumerate evolving equilibria and keep those preferred by a criterion
    Select {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "N")]
        size: Option<usize>,
        #[arg(long, value_enum, default_value_t = Criterion::Strong)]
        criterion: Criterion,
    },
    /// Verify a belief-state sequence given as a JSON trace file
    Check {
        #[command(flatten)]
        common: Common,
        /// JSON file of the form {"states": [[["p"], ...], ...]}
        #[arg(long, value_name = "FILE")]
        trace: PathBuf,
    },
    /// Cross-check the solver against brute-force equilibrium enumeration
    Oracle {
        #[command(flatten)]
        common: Common,
    },
}

enum CliError {
    Input(String),
    Budget(String),
}

impl From<EmcsError> for CliError {
    fn from(e: EmcsError) -> Self {
        match e {
            EmcsError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

struct Inputs {
    sys: SystemDescription,
    observations: ObservationSequence,
    budget: Budget,
    json: bool,
}

fn load(common: &Common) -> Result<Inputs, CliError> {
    let sys_text = read_file(&common.system)?;
    let sys = parse_system(&sys_text)
        .map_err(|e| CliError::Input(format!("{}:{e}", common.system.display())))?;
    let obs_text = read_file(&common.observations)?;
    let observations = parse_observations(&obs_text, &sys)
        .map_err(|e| CliError::Input(format!("{}:{e}", common.observations.display())))?;
    let max_candidates = match common.budget {
        Some(n) => n,
        None => match std::env::var("EMCS_BUDGET") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Input(format!("invalid EMCS_BUDGET value `{v}`")))?,
            Err(_) => Budget::default().max_candidates,
        },
    };
    Ok(Inputs {
        sys,
        observations,
        budget: Budget { max_candidates },
        json: common.format == Format::Json,
    })
}

fn first_instant(inputs: &Inputs) -> InstantObservation {
    inputs
        .observations
        .0
        .first()
        .cloned()
        .unwrap_or_else(|| InstantObservation::empty(inputs.sys.system.observers.len()))
}

fn emit(value: &Value, json: bool) {
    print!("{}", report::render(value, json));
}

fn run_solve(common: &Common) -> Result<u8, CliError> {
    let inputs = load(common)?;
    let obs = first_instant(&inputs);
    let witnesses = enumerate_equilibria(&inputs.sys.system, &obs, &inputs.budget)?;
    let value = json!({
        "command": "solve",
        "count": witnesses.len(),
        "equilibria": Value::Array(witnesses.iter().map(report::witness_json).collect()),
    });
    emit(&value, inputs.json);
    Ok(if witnesses.is_empty() { EXIT_NO_RESULT } else { 0 })
}

fn resolve_size(inputs: &Inputs, size: Option<usize>) -> Result<usize, CliError> {
    let s = size.unwrap_or_else(|| inputs.observations.len());
    if s > inputs.observations.len() {
        return Err(CliError::Input(format!(
            "size {s} exceeds observation sequence length {}",
            inputs.observations.len()
        )));
    }
    Ok(s)
}

fn run_evolve(common: &Common, size: Option<usize>) -> Result<u8, CliError> {
    let inputs = load(common)?;
    let s = resolve_size(&inputs, size)?;
    let traces =
        enumerate_evolving_equilibria(&inputs.sys.system, &inputs.observations, s, &inputs.budget)?;
    let value = json!({
        "command": "evolve",
        "count": traces.len(),
        "size": s,
        "traces": report::traces_json(
            &inputs.sys.system,
            inputs.sys.aggregator,
            &inputs.observations,
            &traces,
        )?,
    });
    emit(&value, inputs.json);
    Ok(if traces.is_empty() { EXIT_NO_RESULT } else { 0 })
}

fn run_select(common: &Common, size: Option<usize>, criterion: Criterion) -> Result<u8, CliError> {
    let inputs = load(common)?;
    let s = resolve_size(&inputs, size)?;
    let m = &inputs.sys.system;
    let agg = inputs.sys.aggregator;
    let (name, traces) = match criterion {
        Criterion::Strong => (
            "strong",
            select_strong(m, agg, &inputs.observations, s, &inputs.budget)?,
        ),
        Criterion::Weak => (
            "weak",
            select_weak(m, agg, &inputs.observations, s, &inputs.budget)?,
        ),
        Criterion::GlobalCost => (
            "global-cost",
            min_cost_global(m, &inputs.observations, s, &inputs.budget)?,
        ),
    };
    let value = json!({
        "command": "select",
        "count": traces.len(),
        "criterion": name,
        "size": s,
        "traces": report::traces_json(m, agg, &inputs.observations, &traces)?,
    });
    emit(&value, inputs.json);
    Ok(if traces.is_empty() { EXIT_NO_RESULT } else { 0 })
}

fn parse_trace_file(path: &Path, n_contexts: usize) -> Result<EvolvingBeliefState, CliError> {
    let text = read_file(path)?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let states = value
        .get("states")
        .and_then(Value::as_array)
        .ok_or_else(|| {
            CliError::Input(format!("{}: missing `states` array", path.display()))
        })?;
    let mut out = Vec::new();
    for state in states {
        let per_context = state.as_array().ok_or_else(|| {
            CliError::Input(format!("{}: each state must be an array", path.display()))
        })?;
        if per_context.len() != n_contexts {
            return Err(CliError::Input(format!(
                "{}: state has {} belief sets, system has {} contexts",
                path.display(),
                per_context.len(),
                n_contexts
            )));
        }
        let mut belief_sets = Vec::new();
        for bs in per_context {
            let atoms = bs.as_array().ok_or_else(|| {
                CliError::Input(format!("{}: each belief set must be an array", path.display()))
            })?;
            let mut set = BTreeSet::new();
            for a in atoms {
                let name = a.as_str().ok_or_else(|| {
                    CliError::Input(format!("{}: atoms must be strings", path.display()))
                })?;
                set.insert(Atom::new(name).map_err(|e| {
                    CliError::Input(format!("{}: {e}", path.display()))
                })?);
            }
            belief_sets.push(BeliefSet::new(set));
        }
        out.push(BeliefState(belief_sets));
    }
    Ok(EvolvingBeliefState(out))
}

fn run_check(common: &Common, trace_path: &Path) -> Result<u8, CliError> {
    let inputs = load(common)?;
    let m = &inputs.sys.system;
    let states = parse_trace_file(trace_path, m.contexts.len())?;
    let s = states.size();
    if s > inputs.observations.len() {
        return Err(CliError::Input(format!(
            "trace has {s} states but only {} observation steps are given",
            inputs.observations.len()
        )));
    }
    let witnesses = is_evolving_equilibrium(m, &inputs.observations, &states, &inputs.budget)?;
    let mut witness_values = Vec::new();
    for configs in &witnesses {
        // recover the applied next-operations so the selection criteria can
        // be evaluated on this witness
        let mut applied: Vec<Vec<BTreeSet<OpFormula>>> = Vec::new();
        for j in 0..s.saturating_sub(1) {
            let system = m.replace(&configs[j], &inputs.observations.0[j])?;
            let mut per_ctx = Vec::new();
            for i in 0..m.contexts.len() {
                let (_, next) =
                    system.applicable_ops(i, &states.0[j], &inputs.observations.0[j])?;
                per_ctx.push(next);
            }
            applied.push(per_ctx);
        }
        let trace = EquilibriumTrace {
            states: states.clone(),
            kb_configs: configs.clone(),
            applied_next_ops: applied,
        };
        let strong =
            check_strong(m, inputs.sys.aggregator, &inputs.observations, &trace, &inputs.budget)?;
        let weak =
            check_weak(m, inputs.sys.aggregator, &inputs.observations, &trace, &inputs.budget)?;
        let mut v = report::trace_json(m, inputs.sys.aggregator, &inputs.observations, &trace)?;
        if let Value::Object(map) = &mut v {
            map.insert("strong".into(), Value::Bool(strong));
            map.insert("weak".into(), Value::Bool(weak));
        }
        witness_values.push(v);
    }
    let value = json!({
        "command": "check",
        "evolving_equilibrium": !witnesses.is_empty(),
        "witness_count": witnesses.len(),
        "witnesses": Value::Array(witness_values),
    });
    emit(&value, inputs.json);
    Ok(if witnesses.is_empty() { EXIT_NO_RESULT } else { 0 })
}

fn run_oracle(common: &Common) -> Result<u8, CliError> {
    let inputs = load(common)?;
    let obs = first_instant(&inputs);
    let solver: Vec<BeliefState> = enumerate_equilibria(&inputs.sys.system, &obs, &inputs.budget)?
        .into_iter()
        .map(|w| w.state)
        .collect();
    let oracle = oracle_equilibria(&inputs.sys.system, &obs, &inputs.budget)?;
    let matches = solver == oracle;
    let value = json!({
        "command": "oracle",
        "oracle": Value::Array(oracle.iter().map(report::belief_state_json).collect()),
        "solver": Value::Array(solver.iter().map(report::belief_state_json).collect()),
        "status": if matches { "MATCH" } else { "MISMATCH" },
    });
    emit(&value, inputs.json);
    Ok(if matches { 0 } else { EXIT_NO_RESULT })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let outcome = match &cli.command {
        Command::Solve { common } => run_solve(common),
        Command::Evolve { common, size } => run_evolve(common, *size),
        Command::Select {
            common,
            size,
            criterion,
        } => run_select(common, *size, *criterion),
        Command::Check { common, trace } => run_check(common, trace),
        Command::Oracle { common } => run_oracle(common),
    };
    eprintln!("elapsed_ms: {}", start.elapsed().as_millis());
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(CliError::Budget(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_BUDGET)
        }
    }
}
