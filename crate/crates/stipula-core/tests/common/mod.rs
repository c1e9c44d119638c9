//! Shared machinery for the integration and acceptance suites: an
//! implementation-independent cycle oracle, a random automaton generator,
//! corpus loading, and interpreter replay helpers for plans and methods.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stipula_core::analysis::{self, Assets, Owner};
use stipula_core::automaton::{Automaton, Label, LinearTrace, Transition};
use stipula_core::interp::{Machine, RuntimeState, Value};
use stipula_core::scenario::{LoopSegment, ScenarioPlan, ScenarioStep};
use stipula_core::syntax::{
    canonicalize, parse_contract, BinOp, ContractAst, Expr, ExprKind, StateId,
};

pub fn fixture_src(name: &str) -> String {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures");
    std::fs::read_to_string(format!("{path}/{name}.stipula")).unwrap()
}

pub fn fixture_ast(name: &str) -> ContractAst {
    canonicalize(&parse_contract(&fixture_src(name)).unwrap())
}

pub const CORPUS: [&str; 4] = ["License", "Deposit", "Loan", "Betting"];

// ---------------------------------------------------------------------------
// independent cycle oracle
// ---------------------------------------------------------------------------

/// Exhaustive DFS enumeration of the simple cycles of a labeled digraph,
/// written against the transition list alone. Each cycle is normalized to
/// its lexicographically smallest rotation so sets compare rotation-free.
pub fn oracle_simple_cycles(automaton: &Automaton) -> BTreeSet<LinearTrace> {
    let states: Vec<StateId> = automaton.states.iter().cloned().collect();
    let index: BTreeMap<&StateId, usize> =
        states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let transitions: Vec<&Transition> = automaton.transitions.iter().collect();

    let mut cycles = BTreeSet::new();
    for root in 0..states.len() {
        // cycles whose minimal state (in index order) is `root`
        let mut path: Vec<&Transition> = Vec::new();
        let mut on_path: BTreeSet<usize> = [root].into_iter().collect();
        dfs(
            root,
            root,
            &mut path,
            &mut on_path,
            &transitions,
            &index,
            &mut cycles,
        );
    }
    cycles
}

fn dfs<'a>(
    current: usize,
    root: usize,
    path: &mut Vec<&'a Transition>,
    on_path: &mut BTreeSet<usize>,
    transitions: &[&'a Transition],
    index: &BTreeMap<&StateId, usize>,
    cycles: &mut BTreeSet<LinearTrace>,
) {
    for t in transitions {
        if index[&t.from] != current {
            continue;
        }
        let next = index[&t.to];
        if next == root {
            let mut steps: Vec<Transition> = path.iter().map(|t| (*t).clone()).collect();
            steps.push((*t).clone());
            let trace = LinearTrace::new(steps).expect("consecutive cycle");
            cycles.insert(trace.normalized_cycle());
            continue;
        }
        if next < root || on_path.contains(&next) {
            continue;
        }
        path.push(t);
        on_path.insert(next);
        dfs(next, root, path, on_path, transitions, index, cycles);
        path.pop();
        on_path.remove(&next);
    }
}

/// Oracle verdict for disjointness: no two distinct cycles share a state.
pub fn oracle_disjoint(cycles: &BTreeSet<LinearTrace>) -> bool {
    let list: Vec<_> = cycles.iter().collect();
    for i in 0..list.len() {
        for j in i + 1..list.len() {
            if list[i].states().intersection(&list[j].states()).next().is_some() {
                return false;
            }
        }
    }
    true
}

/// Random automaton with every state reachable from the initial one (the
/// fixpoint explores from there), at most 8 states and 16 transitions.
pub fn random_automaton(rng: &mut ChaCha8Rng) -> Automaton {
    let n_states = rng.random_range(1..=8);
    let states: Vec<StateId> =
        (0..n_states).map(|i| StateId::from(format!("S{i}").as_str())).collect();
    let mut transitions = BTreeSet::new();
    let mut label = 0u32;
    let mut fresh = |label: &mut u32| {
        *label += 1;
        Label::Function(format!("f{label}"))
    };
    // spanning attachment keeps everything reachable from S0
    for i in 1..n_states {
        let from = rng.random_range(0..i);
        transitions.insert(Transition {
            from: states[from].clone(),
            label: fresh(&mut label),
            to: states[i].clone(),
        });
    }
    let extra = rng.random_range(0..=(16 - (n_states - 1).min(16)));
    for _ in 0..extra {
        let from = rng.random_range(0..n_states);
        let to = rng.random_range(0..n_states);
        transitions.insert(Transition {
            from: states[from].clone(),
            label: fresh(&mut label),
            to: states[to].clone(),
        });
    }
    Automaton {
        states: states.iter().cloned().collect(),
        initial: states[0].clone(),
        transitions,
    }
}

// ---------------------------------------------------------------------------
// corpus initial states
// ---------------------------------------------------------------------------

pub type Fields = BTreeMap<String, Value>;
pub type Endowments = BTreeMap<(String, String), i64>;

/// Randomized agreement values and endowments under which every clause of the
/// contract is executable.
pub fn sample_init(name: &str, rng: &mut ChaCha8Rng) -> (Fields, Endowments) {
    let mut fields = Fields::new();
    let mut endow = Endowments::new();
    match name {
        "License" => {
            let cost = rng.random_range(1..=50);
            fields.insert("t_start".into(), Value::Int(rng.random_range(1..=30)));
            fields.insert("t_limit".into(), Value::Int(rng.random_range(1..=30)));
            fields.insert("cost".into(), Value::Int(cost));
            endow.insert(("Licensor".into(), "token".into()), 1);
            endow.insert(("Licensee".into(), "balance".into()), cost);
        }
        "Deposit" => {
            fields.insert("cost_flour".into(), Value::Int(rng.random_range(1..=9)));
            endow.insert(("Farm".into(), "flour".into()), rng.random_range(0..=300));
        }
        "Loan" => {
            fields.insert("amount".into(), Value::Int(rng.random_range(1..=300)));
            fields.insert("interest_rate".into(), Value::Int(rng.random_range(1..=5)));
        }
        "Betting" => {
            let stake = rng.random_range(1..=50);
            fields.insert("stake".into(), Value::Int(stake));
            fields.insert("t_bet".into(), Value::Int(rng.random_range(1..=30)));
            fields.insert("t_data".into(), Value::Int(rng.random_range(1..=30)));
            endow.insert(("Better1".into(), "wallet".into()), stake);
            endow.insert(("Better2".into(), "wallet".into()), stake);
        }
        other => panic!("no sampler for {other}"),
    }
    (fields, endow)
}

// ---------------------------------------------------------------------------
// argument solving
// ---------------------------------------------------------------------------

/// Evaluate a closed expression over the current fields and contract
/// holdings; used to solve `param == expr` guard patterns.
fn eval_closed(expr: &Expr, state: &RuntimeState, ast: &ContractAst) -> Option<i64> {
    match &expr.kind {
        ExprKind::Int(n) => Some(*n),
        ExprKind::Name(name) => {
            if let Some(Value::Int(n)) = state.field(name) {
                return Some(*n);
            }
            if ast.assets.iter().any(|a| a == name) {
                return Some(state.asset(&Owner::Contract, name));
            }
            None
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let l = eval_closed(lhs, state, ast)?;
            let r = eval_closed(rhs, state, ast)?;
            match op {
                BinOp::Add => Some(l + r),
                BinOp::Sub => Some(l - r),
                BinOp::Mul => Some(l * r),
                BinOp::Div if r != 0 => Some(l / r),
                _ => None,
            }
        }
        _ => None,
    }
}

/// Solutions for parameters pinned by `k == expr` conjuncts of the guard.
fn guard_solutions(
    clause: &stipula_core::syntax::FunctionClause,
    state: &RuntimeState,
    ast: &ContractAst,
) -> BTreeMap<String, i64> {
    let mut out = BTreeMap::new();
    let mut stack: Vec<&Expr> = clause.guard.iter().collect();
    while let Some(expr) = stack.pop() {
        if let ExprKind::Binary { op, lhs, rhs } = &expr.kind {
            match op {
                BinOp::And => {
                    stack.push(lhs);
                    stack.push(rhs);
                }
                BinOp::Eq => {
                    let target = |e: &Expr| {
                        e.as_name().filter(|n| {
                            clause.asset_params.iter().any(|p| p == n)
                                || clause.value_params.iter().any(|p| p == n)
                        }).map(str::to_string)
                    };
                    if let (Some(name), value) = (target(lhs), eval_closed(rhs, state, ast)) {
                        if let Some(v) = value {
                            out.insert(name, v);
                        }
                    } else if let (Some(name), Some(v)) =
                        (target(rhs), eval_closed(lhs, state, ast))
                    {
                        out.insert(name, v);
                    }
                }
                _ => {}
            }
        }
    }
    out
}

/// Arguments for one clause invocation: guard equalities are solved exactly,
/// indivisible lots are handed over whole, everything else is sampled.
pub fn sample_args(
    machine: &Machine,
    clause_name: &str,
    state: &RuntimeState,
    rng: &mut ChaCha8Rng,
) -> (BTreeMap<String, Value>, BTreeMap<String, i64>) {
    sample_args_scaled(machine, clause_name, state, rng, 1)
}

/// Like [`sample_args`], with quantities damped by `scale`: a call that will
/// repeat `k` times samples at scale `k` so the whole run stays affordable.
pub fn sample_args_scaled(
    machine: &Machine,
    clause_name: &str,
    state: &RuntimeState,
    rng: &mut ChaCha8Rng,
    scale: i64,
) -> (BTreeMap<String, Value>, BTreeMap<String, i64>) {
    let clause = machine.ast.clause(clause_name).expect("clause exists");
    let solved = guard_solutions(clause, state, machine.ast);
    let caller = Owner::Party(clause.party.clone());

    let mut value_args = BTreeMap::new();
    for p in &clause.value_params {
        let v = solved.get(p).copied().unwrap_or_else(|| rng.random_range(0..=20));
        value_args.insert(p.clone(), Value::Int(v));
    }
    let mut asset_args = BTreeMap::new();
    for p in &clause.asset_params {
        let model = machine.assets.param(clause_name, p).expect("classified");
        let v = match (&model.alpha, model.kind) {
            (Some(alpha), stipula_core::AssetKind::Indivisible) => state.asset(&caller, alpha),
            (Some(alpha), stipula_core::AssetKind::Divisible) => {
                let held = state.asset(&caller, alpha) / scale.max(1);
                solved
                    .get(p)
                    .copied()
                    .unwrap_or_else(|| rng.random_range(0..=held.max(0)))
                    .min(held)
            }
            (None, _) => {
                // payments: solved from the guard or, for the Deposit-style
                // price-per-unit pattern, a multiple of the price
                solved.get(p).copied().unwrap_or_else(|| {
                    unit_multiple(machine, clause_name, p, state, rng, scale)
                })
            }
        };
        asset_args.insert(p.clone(), v.max(0));
    }
    (value_args, asset_args)
}

/// Unbacked payments that get divided by a price field are sampled as
/// multiples of it so both affordability and exact arithmetic hold.
fn unit_multiple(
    machine: &Machine,
    clause_name: &str,
    param: &str,
    state: &RuntimeState,
    rng: &mut ChaCha8Rng,
    scale: i64,
) -> i64 {
    let clause = machine.ast.clause(clause_name).unwrap();
    // look for `param / field` anywhere in the guard
    fn find_divisor<'a>(expr: &'a Expr, param: &str) -> Option<&'a str> {
        match &expr.kind {
            ExprKind::Binary { op: BinOp::Div, lhs, rhs } if lhs.as_name() == Some(param) => {
                rhs.as_name()
            }
            ExprKind::Binary { op: _, lhs, rhs } => {
                find_divisor(lhs, param).or_else(|| find_divisor(rhs, param))
            }
            ExprKind::Unary { operand, .. } => find_divisor(operand, param),
            _ => None,
        }
    }
    if let Some(divisor) = clause.guard.as_ref().and_then(|g| find_divisor(g, param)) {
        if let Some(Value::Int(price)) = state.field(divisor) {
            if *price > 0 {
                let stock: i64 = machine
                    .ast
                    .assets
                    .iter()
                    .map(|a| state.asset(&Owner::Contract, a))
                    .sum();
                let units = rng.random_range(0..=(stock / scale.max(1)).max(0));
                return units * *price;
            }
        }
    }
    rng.random_range(0..=50)
}

// ---------------------------------------------------------------------------
// scenario replay
// ---------------------------------------------------------------------------

/// Asset arguments for a scenario call: symbols resolve through `params`,
/// abstracted indivisible lots hand over the caller's whole holding.
pub fn scenario_call_args(
    machine: &Machine,
    clause_name: &str,
    symbol_map: &BTreeMap<String, String>,
    params: &BTreeMap<String, Value>,
    state: &RuntimeState,
) -> (BTreeMap<String, Value>, BTreeMap<String, i64>) {
    let clause = machine.ast.clause(clause_name).expect("clause exists");
    let caller = Owner::Party(clause.party.clone());
    let mut value_args = BTreeMap::new();
    for p in &clause.value_params {
        let symbol = symbol_map.get(p).cloned().unwrap_or_else(|| p.clone());
        value_args.insert(p.clone(), params[&symbol].clone());
    }
    let mut asset_args = BTreeMap::new();
    for p in &clause.asset_params {
        let model = machine.assets.param(clause_name, p).expect("classified");
        let v = match symbol_map.get(p) {
            Some(symbol) => match params[symbol] {
                Value::Int(n) => n,
                _ => panic!("asset argument must be an integer"),
            },
            None => model
                .alpha
                .as_ref()
                .map(|alpha| state.asset(&caller, alpha))
                .unwrap_or(0),
        };
        asset_args.insert(p.clone(), v);
    }
    (value_args, asset_args)
}

pub struct Replay {
    pub state: RuntimeState,
    pub returned_early: bool,
    /// Snapshot right before the loop began, when the plan has one.
    pub loop_entry: Option<RuntimeState>,
}

/// Drive a plan through the interpreter under a concrete instantiation of
/// its symbols. Guards that are true tick the pending event down to zero and
/// fire it, ending the path like the generated `return` does.
pub fn replay_plan(
    machine: &Machine,
    plan: &ScenarioPlan,
    params: &BTreeMap<String, Value>,
    init: RuntimeState,
) -> Result<Replay, stipula_core::interp::RuntimeError> {
    let mut state = init;
    let mut loop_entry = None;
    for step in &plan.steps {
        match step {
            ScenarioStep::Call { clause, args } => {
                let symbol_map: BTreeMap<String, String> = args.iter().cloned().collect();
                let (value_args, asset_args) =
                    scenario_call_args(machine, clause, &symbol_map, params, &state);
                state = machine.invoke(&state, clause, &value_args, &asset_args)?;
            }
            ScenarioStep::Loop => {
                let segment = plan.loop_segment.as_ref().expect("loop step implies segment");
                loop_entry = Some(state.clone());
                let Value::Int(counter) = params[&segment.bound] else {
                    panic!("loop bound must be an integer")
                };
                for _ in 0..counter {
                    for call in &segment.body {
                        if let ScenarioStep::Call { clause, args } = call {
                            let symbol_map: BTreeMap<String, String> =
                                args.iter().cloned().collect();
                            let (value_args, asset_args) =
                                scenario_call_args(machine, clause, &symbol_map, params, &state);
                            state = machine.invoke(&state, clause, &value_args, &asset_args)?;
                        }
                    }
                }
            }
            ScenarioStep::GuardedEvent { event_index, guard, .. } => {
                if params.get(guard) == Some(&Value::Bool(true)) {
                    state = fire_after_wait(machine, state, *event_index)?;
                    return Ok(Replay { state, returned_early: true, loop_entry });
                }
            }
        }
    }
    Ok(Replay { state, returned_early: false, loop_entry })
}

/// Tick the pending instance of `event_index` down to zero, then fire it.
pub fn fire_after_wait(
    machine: &Machine,
    state: RuntimeState,
    event_index: u32,
) -> Result<RuntimeState, stipula_core::interp::RuntimeError> {
    let remaining = state
        .pending
        .iter()
        .find(|ev| ev.event_index == event_index)
        .map(|ev| ev.remaining)
        .ok_or(stipula_core::interp::RuntimeError::NotFireable(event_index))?;
    let ready = machine.tick_many(&state, remaining);
    machine.fire_event(&ready, event_index)
}

/// Instantiation of a plan's symbols under which the whole path is
/// executable: loop iterations are affordable, guards are off by default.
pub fn sample_plan_params(
    machine: &Machine,
    plan: &ScenarioPlan,
    init: &RuntimeState,
    unroll: i64,
    rng: &mut ChaCha8Rng,
) -> BTreeMap<String, Value> {
    let mut params = BTreeMap::new();
    let mut state = init.clone();
    for step in plan_steps_with_loop(plan) {
        match step {
            FlatStep::Call(clause, args, in_loop) => {
                let scale = if in_loop { unroll + 1 } else { 1 };
                let (value_args, asset_args) =
                    sample_args_scaled(machine, &clause, &state, rng, scale);
                for (param, symbol) in &args {
                    let value = value_args
                        .get(param)
                        .cloned()
                        .or_else(|| asset_args.get(param).map(|v| Value::Int(*v)))
                        .expect("sampled argument");
                    params.entry(symbol.clone()).or_insert(value);
                }
                let symbol_map: BTreeMap<String, String> = args.into_iter().collect();
                let (value_args, asset_args) =
                    scenario_call_args(machine, &clause, &symbol_map, &params, &state);
                state = machine
                    .invoke(&state, &clause, &value_args, &asset_args)
                    .unwrap_or(state);
            }
            FlatStep::LoopBound(bound) => {
                params.insert(bound, Value::Int(unroll));
            }
            FlatStep::Guard(guard) => {
                params.insert(guard, Value::Bool(false));
            }
        }
    }
    params
}

enum FlatStep {
    Call(String, Vec<(String, String)>, bool),
    LoopBound(String),
    Guard(String),
}

fn plan_steps_with_loop(plan: &ScenarioPlan) -> Vec<FlatStep> {
    let mut out = Vec::new();
    for step in &plan.steps {
        match step {
            ScenarioStep::Call { clause, args } => {
                out.push(FlatStep::Call(clause.clone(), args.clone(), false))
            }
            ScenarioStep::Loop => {
                let segment = plan.loop_segment.as_ref().unwrap();
                for call in &segment.body {
                    if let ScenarioStep::Call { clause, args } = call {
                        out.push(FlatStep::Call(clause.clone(), args.clone(), true));
                    }
                }
                out.push(FlatStep::LoopBound(segment.bound.clone()));
            }
            ScenarioStep::GuardedEvent { guard, .. } => out.push(FlatStep::Guard(guard.clone())),
        }
    }
    out
}

// ---------------------------------------------------------------------------
// random walks
// ---------------------------------------------------------------------------

/// Drive one randomized execution from a fresh initial state, calling
/// `per_step(old, new)` after every applied operation. Returns the number of
/// applied steps (invocations, ticks, fired events).
pub fn random_walk(
    machine: &Machine,
    rng: &mut ChaCha8Rng,
    max_steps: usize,
    mut per_step: impl FnMut(&RuntimeState, &RuntimeState),
) -> usize {
    let (fields, endow) = sample_init(&machine.ast.name, rng);
    let mut state = machine.init(&fields, &endow).expect("sampled init is valid");
    let mut applied = 0;
    'walk: for _ in 0..max_steps {
        let enabled: Vec<&str> = machine
            .ast
            .clauses
            .iter()
            .filter(|c| c.source_state == state.control)
            .map(|c| c.name.as_str())
            .collect();
        let fireable: Vec<u32> = state
            .pending
            .iter()
            .filter(|ev| ev.remaining == 0 && ev.trigger_state == state.control)
            .map(|ev| ev.event_index)
            .collect();
        let relevant_pending = state
            .pending
            .iter()
            .any(|ev| ev.trigger_state == state.control && ev.remaining > 0);

        let roll = rng.random_range(0..100);
        if !fireable.is_empty() && roll < 20 {
            let pick = fireable[rng.random_range(0..fireable.len())];
            let next = machine.fire_event(&state, pick).expect("fireable event fires");
            per_step(&state, &next);
            state = next;
            applied += 1;
            continue;
        }
        if relevant_pending && (roll < 35 || enabled.is_empty()) {
            // fast-forward to the next timer expiry
            let jump = state
                .pending
                .iter()
                .filter(|ev| ev.remaining > 0)
                .map(|ev| ev.remaining)
                .min()
                .unwrap_or(1);
            for _ in 0..jump {
                let next = machine.tick(&state);
                per_step(&state, &next);
                state = next;
                applied += 1;
            }
            continue;
        }
        if enabled.is_empty() {
            break 'walk;
        }
        for _ in 0..3 {
            let pick = enabled[rng.random_range(0..enabled.len())];
            let (value_args, asset_args) = sample_args(machine, pick, &state, rng);
            if let Ok(next) = machine.invoke(&state, pick, &value_args, &asset_args) {
                per_step(&state, &next);
                state = next;
                applied += 1;
                continue 'walk;
            }
        }
        break 'walk;
    }
    applied
}

// ---------------------------------------------------------------------------
// state differencing
// ---------------------------------------------------------------------------

/// Locations whose value differs between two states.
pub fn changed_locations(old: &RuntimeState, new: &RuntimeState) -> Vec<analysis::Location> {
    let mut out = Vec::new();
    for ((owner, asset), value) in &new.asset_vals {
        if old.asset_vals.get(&(owner.clone(), asset.clone())) != Some(value) {
            out.push(analysis::Location::Asset { owner: owner.clone(), asset: asset.clone() });
        }
    }
    for (field, value) in &new.field_vals {
        if old.field_vals.get(field) != Some(value) {
            out.push(analysis::Location::Field(field.clone()));
        }
    }
    out
}

/// Conservation and exclusivity accounting for one state.
pub fn check_asset_properties(
    assets: &Assets,
    state: &RuntimeState,
    sums: &BTreeMap<String, i64>,
    context: &str,
) {
    for model in &assets.models {
        match model.kind {
            stipula_core::AssetKind::Divisible => {
                let total = state.owner_sum(&model.asset);
                assert_eq!(
                    Some(&total),
                    sums.get(&model.asset),
                    "{context}: conservation of `{}` broken",
                    model.asset
                );
            }
            stipula_core::AssetKind::Indivisible => {
                let holders = state.holders(&model.asset);
                assert_eq!(
                    holders.len(),
                    1,
                    "{context}: `{}` held by {holders:?}",
                    model.asset
                );
            }
        }
    }
}

/// Evaluate a requires conjunct list left to right with short-circuiting.
pub fn requires_holds(
    terms: &[analysis::Term],
    assets: &Assets,
    state: &RuntimeState,
    params: &BTreeMap<String, Value>,
) -> bool {
    let ctx = analysis::EvalContext::pre(assets, state, params);
    for term in terms {
        match analysis::eval_condition(term, &ctx) {
            Ok(true) => continue,
            _ => return false,
        }
    }
    true
}

// ---------------------------------------------------------------------------
// specification soundness sweep
// ---------------------------------------------------------------------------

/// Check every clause and event contract against interpreter executions from
/// randomized reachable states, `target` successful samples per method.
/// A sample counts only if the rendered requires holds; the run must then
/// succeed, satisfy every ensures conjunct, and write only assignable
/// locations. Returns the sample counts by method name.
pub fn spec_soundness_sweep(
    compiled: &stipula_core::Compiled,
    machine: &Machine,
    rng: &mut ChaCha8Rng,
    target: usize,
) -> BTreeMap<String, usize> {
    use stipula_core::analysis::{eval_condition, EvalContext};

    let name = compiled.ast.name.clone();
    let mut checked: BTreeMap<String, usize> = BTreeMap::new();
    let mut wanted: BTreeSet<String> =
        compiled.ast.clauses.iter().map(|c| c.name.clone()).collect();
    for (_, event) in compiled.ast.events() {
        wanted.insert(format!("event{}", event.event_index));
    }

    let assert_post_and_frame = |method: &stipula_core::codegen::TargetMethod,
                                 old: &RuntimeState,
                                 new: &RuntimeState,
                                 params: &BTreeMap<String, Value>,
                                 context: &str| {
        let ctx = EvalContext { assets: &machine.assets, old, new, params };
        for conjunct in &method.ensures {
            let holds = eval_condition(conjunct, &ctx)
                .unwrap_or_else(|e| panic!("{context}: ensures failed to evaluate: {e}"));
            assert!(holds, "{context}: ensures conjunct {conjunct:?} is false");
        }
        for loc in changed_locations(old, new) {
            assert!(
                method.assignable.contains(&loc),
                "{context}: wrote {loc:?} outside assignable {:?}",
                method.assignable
            );
        }
    };

    for _ in 0..5000 {
        if checked.len() == wanted.len() && checked.values().all(|c| *c >= target) {
            break;
        }
        let mut arg_rng = ChaCha8Rng::seed_from_u64(rng.random());
        random_walk(machine, rng, 30, |old, _| {
            for clause in &compiled.ast.clauses {
                if clause.source_state != old.control
                    || checked.get(&clause.name).copied().unwrap_or(0) >= target
                {
                    continue;
                }
                let method = compiled.unit.method(&clause.name).expect("method exists");
                let (value_args, asset_args) =
                    sample_args(machine, &clause.name, old, &mut arg_rng);
                let mut params: BTreeMap<String, Value> = value_args.clone();
                for (k, v) in &asset_args {
                    params.insert(k.clone(), Value::Int(*v));
                }
                if !requires_holds(&method.requires, &machine.assets, old, &params) {
                    continue;
                }
                let new = machine
                    .invoke(old, &clause.name, &value_args, &asset_args)
                    .unwrap_or_else(|e| {
                        panic!("{name}.{}: requires held but execution failed: {e}", clause.name)
                    });
                assert_post_and_frame(method, old, &new, &params, &format!("{name}.{}", clause.name));
                *checked.entry(clause.name.clone()).or_default() += 1;
            }
            for pending in &old.pending {
                let key = format!("event{}", pending.event_index);
                if pending.trigger_state != old.control
                    || checked.get(&key).copied().unwrap_or(0) >= target
                {
                    continue;
                }
                let method = compiled.unit.method(&key).expect("method exists");
                let params = BTreeMap::new();
                if !requires_holds(&method.requires, &machine.assets, old, &params) {
                    continue;
                }
                let before = machine.tick_many(old, pending.remaining);
                let fired = machine.fire_event(&before, pending.event_index).unwrap_or_else(|e| {
                    panic!("{name}.{key}: requires held but firing failed: {e}")
                });
                assert_post_and_frame(method, &before, &fired, &params, &format!("{name}.{key}"));
                *checked.entry(key).or_default() += 1;
            }
        });
    }
    checked
}
