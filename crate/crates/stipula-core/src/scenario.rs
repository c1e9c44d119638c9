//! Linearized execution paths through the automaton.
//!
//! Plans are enumerated depth-first from the initial state, outgoing function
//! transitions in declaration order. A disjoint cycle met along a path is
//! collapsed into a single loop segment at its entry state, emitted before
//! anything else at that state; the remaining cycle states are still walked
//! once afterwards, which is how exits in the middle of a cycle get covered.
//!
//! Timed events become symbolic boolean guards. An event whose target state
//! rejoins the function flow forks a plan of its own, ending in the guarded
//! call; an event that jumps to a state no function reaches is guarded inline
//! and the path carries on. Both shapes render as
//! `if (ev_eventN) { eventN(); return; }`.
//!
//! Loop invariants come from per-iteration deltas: one traversal of the cycle
//! is executed symbolically and each touched location must change by a state-
//! independent amount, which then scales with the iteration counter.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{
    self, AnalysisError, AssetKind, Assets, Location, SpecCondition, SymExec, Term,
};
use crate::automaton::{Automaton, CycleOverlap, CycleReport, Label, LinearTrace};
use crate::syntax::{ContractAst, Ident, StateId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ScenarioStep {
    Call {
        clause: Ident,
        /// (parameter, symbol it carries in this plan); indivisible asset
        /// parameters are abstracted away and do not appear.
        args: Vec<(Ident, String)>,
    },
    /// Placeholder marking where the plan's loop segment sits.
    Loop,
    GuardedEvent {
        event_index: u32,
        /// Symbolic guard name, `ev_event<N>`.
        guard: String,
        early_return: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoopSegment {
    pub entry: StateId,
    /// One traversal of the cycle, calls only.
    pub body: Vec<ScenarioStep>,
    /// Symbol of the loop index (`i`).
    pub index: String,
    /// Symbol of the symbolic iteration bound (`counter`).
    pub bound: String,
    /// Per-iteration change of every touched location, in first-touch order;
    /// each addend is (positive?, amount).
    pub deltas: Vec<(Location, Vec<(bool, Term)>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScenarioPlan {
    pub name: String,
    pub steps: Vec<ScenarioStep>,
    pub loop_segment: Option<LoopSegment>,
}

impl ScenarioPlan {
    pub fn calls(&self) -> impl Iterator<Item = &ScenarioStep> {
        self.steps.iter().filter(|s| matches!(s, ScenarioStep::Call { .. }))
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("cycles are not disjoint: {0:?}")]
    NotDisjoint(CycleOverlap),
    #[error("per-iteration change of {loc:?} is not linear in the symbolic arguments")]
    NonLinearDelta { loc: Location, term: Term },
    #[error("not supported: {0}")]
    NotSupported(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

pub fn enumerate_scenarios(
    automaton: &Automaton,
    report: &CycleReport,
    ast: &ContractAst,
    assets: &Assets,
) -> Result<Vec<ScenarioPlan>, ScenarioError> {
    if !report.disjoint {
        return Err(ScenarioError::NotDisjoint(
            report.witness.clone().expect("non-disjoint report carries witness"),
        ));
    }

    // Each cycle must consist of function transitions, and none of those
    // functions may register events: iterating would grow the event multiset
    // without bound, which the static translation cannot represent.
    for cycle in &report.cycles {
        for step in cycle.steps() {
            match &step.label {
                Label::Event(n) => {
                    return Err(ScenarioError::NotSupported(format!(
                        "event ev{n} lies on a cycle; timed transitions cannot repeat"
                    )))
                }
                Label::Function(name) => {
                    let clause = ast.clause(name).expect("labels resolve to clauses");
                    if !clause.events.is_empty() {
                        return Err(ScenarioError::NotSupported(format!(
                            "`{name}` registers events inside a cycle"
                        )));
                    }
                }
            }
        }
    }

    // Disjointness gives each state at most one cycle.
    let mut cycle_at_state: BTreeMap<StateId, &LinearTrace> = BTreeMap::new();
    for cycle in &report.cycles {
        for state in cycle.states() {
            cycle_at_state.insert(state, cycle);
        }
    }

    let mut function_targets: BTreeSet<StateId> = automaton
        .transitions
        .iter()
        .filter(|t| matches!(t.label, Label::Function(_)))
        .map(|t| t.to.clone())
        .collect();
    function_targets.insert(automaton.initial.clone());

    let mut enumerator = Enumerator {
        automaton,
        ast,
        cycle_at_state,
        function_targets,
        plans: Vec::new(),
    };
    enumerator.walk(
        automaton.initial.clone(),
        Vec::new(),
        [automaton.initial.clone()].into_iter().collect(),
        BTreeSet::new(),
        BTreeSet::new(),
    )?;

    let raw = std::mem::take(&mut enumerator.plans);
    raw.into_iter()
        .enumerate()
        .map(|(i, steps)| finish_plan(ast, assets, format!("seq{}", i + 1), steps))
        .collect()
}

/// A step before symbols are assigned.
#[derive(Debug, Clone)]
enum RawStep {
    Call(Ident),
    Loop(StateId, Vec<Ident>),
    Guard { event_index: u32, early_return: bool },
}

struct Enumerator<'a> {
    automaton: &'a Automaton,
    ast: &'a ContractAst,
    cycle_at_state: BTreeMap<StateId, &'a LinearTrace>,
    function_targets: BTreeSet<StateId>,
    plans: Vec<Vec<RawStep>>,
}

impl Enumerator<'_> {
    fn walk(
        &mut self,
        state: StateId,
        mut steps: Vec<RawStep>,
        visited: BTreeSet<StateId>,
        mut used_cycles: BTreeSet<StateId>,
        mut guarded: BTreeSet<u32>,
    ) -> Result<(), ScenarioError> {
        // The loop comes before anything else at a cycle's entry state.
        if let Some(cycle) = self.cycle_at_state.get(&state) {
            let entry_of_cycle = cycle.first_state();
            if !used_cycles.contains(entry_of_cycle) {
                used_cycles.insert(entry_of_cycle.clone());
                let rotated = rotate_to(cycle, &state);
                let body: Vec<Ident> = rotated
                    .iter()
                    .map(|t| match &t.label {
                        Label::Function(name) => name.clone(),
                        Label::Event(_) => unreachable!("checked above"),
                    })
                    .collect();
                steps.push(RawStep::Loop(state.clone(), body));
            }
        }

        // Guards for the events fireable here, in index order.
        let mut events: Vec<(u32, StateId)> = self
            .automaton
            .outgoing(&state)
            .filter_map(|t| match t.label {
                Label::Event(n) => Some((n, t.to.clone())),
                _ => None,
            })
            .collect();
        events.sort();
        for (index, target) in events {
            if !guarded.insert(index) {
                continue;
            }
            if self.function_targets.contains(&target) {
                // the event rejoins the function flow: its own plan
                let mut fork = steps.clone();
                fork.push(RawStep::Guard { event_index: index, early_return: true });
                self.plans.push(fork);
            } else {
                steps.push(RawStep::Guard { event_index: index, early_return: true });
            }
        }

        // Function transitions in declaration order.
        let mut continued = false;
        for clause in &self.ast.clauses {
            if clause.source_state != state || visited.contains(&clause.target_state) {
                continue;
            }
            continued = true;
            let mut branch = steps.clone();
            branch.push(RawStep::Call(clause.name.clone()));
            let mut branch_visited = visited.clone();
            branch_visited.insert(clause.target_state.clone());
            self.walk(
                clause.target_state.clone(),
                branch,
                branch_visited,
                used_cycles.clone(),
                guarded.clone(),
            )?;
        }

        if !continued && !steps.is_empty() {
            self.plans.push(steps);
        }
        Ok(())
    }
}

fn rotate_to(cycle: &LinearTrace, entry: &StateId) -> Vec<crate::automaton::Transition> {
    let steps = cycle.steps();
    let start = steps
        .iter()
        .position(|t| &t.from == entry)
        .expect("entry lies on the cycle");
    let mut out = Vec::with_capacity(steps.len());
    out.extend_from_slice(&steps[start..]);
    out.extend_from_slice(&steps[..start]);
    out
}

/// First symbol available for a parameter in this plan: the parameter's own
/// name, then suffixed with the clause it belongs to.
fn assign_symbol(clause: &str, param: &str, taken: &mut BTreeSet<String>) -> String {
    let mut candidate = param.to_string();
    if taken.contains(&candidate) {
        candidate = format!("{param}_{clause}");
    }
    let mut k = 2;
    while taken.contains(&candidate) {
        candidate = format!("{param}_{clause}{k}");
        k += 1;
    }
    taken.insert(candidate.clone());
    candidate
}

fn call_args(
    ast: &ContractAst,
    assets: &Assets,
    clause_name: &str,
    taken: &mut BTreeSet<String>,
) -> Vec<(Ident, String)> {
    let clause = ast.clause(clause_name).expect("clause exists");
    let mut args = Vec::new();
    for p in &clause.value_params {
        args.push((p.clone(), assign_symbol(clause_name, p, taken)));
    }
    for p in &clause.asset_params {
        let model = assets.param(clause_name, p).expect("classified param");
        if model.kind == AssetKind::Divisible {
            args.push((p.clone(), assign_symbol(clause_name, p, taken)));
        }
    }
    args
}

/// Assign plan-wide symbols to call arguments and compute the loop segment.
fn finish_plan(
    ast: &ContractAst,
    assets: &Assets,
    name: String,
    raw: Vec<RawStep>,
) -> Result<ScenarioPlan, ScenarioError> {
    let mut taken: BTreeSet<String> = BTreeSet::new();
    let mut steps = Vec::new();
    let mut loop_segment = None;
    for step in raw {
        match step {
            RawStep::Call(clause) => {
                let args = call_args(ast, assets, &clause, &mut taken);
                steps.push(ScenarioStep::Call { clause, args });
            }
            RawStep::Guard { event_index, early_return } => {
                steps.push(ScenarioStep::GuardedEvent {
                    event_index,
                    guard: format!("ev_event{event_index}"),
                    early_return,
                });
            }
            RawStep::Loop(entry, body_clauses) => {
                let mut body = Vec::new();
                let mut renames_per_call = Vec::new();
                for clause in &body_clauses {
                    let args = call_args(ast, assets, clause, &mut taken);
                    renames_per_call.push((
                        clause.clone(),
                        args.iter().cloned().collect::<BTreeMap<_, _>>(),
                    ));
                    body.push(ScenarioStep::Call { clause: clause.clone(), args });
                }
                let index = assign_symbol("loop", "i", &mut taken);
                let bound = assign_symbol("loop", "counter", &mut taken);
                let deltas = loop_deltas(ast, assets, &renames_per_call)?;
                steps.push(ScenarioStep::Loop);
                loop_segment = Some(LoopSegment { entry, body, index, bound, deltas });
            }
        }
    }
    Ok(ScenarioPlan { name, steps, loop_segment })
}

/// Execute one traversal of the cycle symbolically and read off each touched
/// location's per-iteration change.
fn loop_deltas(
    ast: &ContractAst,
    assets: &Assets,
    calls: &[(Ident, BTreeMap<Ident, String>)],
) -> Result<Vec<(Location, Vec<(bool, Term)>)>, ScenarioError> {
    let mut exec = SymExec::new(ast, assets);
    for (clause_name, renames) in calls {
        let clause = ast.clause(clause_name).expect("clause exists");
        exec.call_function(clause, renames)?;
    }
    let effects = exec.effects();
    let mutated: Vec<Location> = effects.iter().map(|e| e.loc.clone()).collect();
    let mut out = Vec::new();
    for effect in effects {
        match analysis::delta_of(&effect.value, &effect.loc, &mutated) {
            Some(addends) => out.push((effect.loc, addends)),
            None => {
                return Err(ScenarioError::NonLinearDelta { loc: effect.loc, term: effect.value })
            }
        }
    }
    Ok(out)
}

/// The synthesized loop annotations: index bounds, one delta equation per
/// touched location, the safety invariants of the touched assets, and the
/// decreasing variant.
pub fn synthesize_loop_invariant(
    segment: &LoopSegment,
    assets: &Assets,
) -> Result<Vec<SpecCondition>, ScenarioError> {
    let i = Term::param(segment.index.clone());
    let bound = Term::param(segment.bound.clone());
    let mut out = Vec::new();
    out.push(SpecCondition::Formula(Term::and(
        Term::le(Term::Int(0), i.clone()),
        Term::le(i.clone(), bound.clone()),
    )));

    for (loc, addends) in &segment.deltas {
        let mut rhs = Term::Old(loc.clone());
        for (positive, amount) in addends {
            let scaled = Term::mul(i.clone(), amount.clone());
            rhs = if *positive { Term::add(rhs, scaled) } else { Term::sub(rhs, scaled) };
        }
        out.push(SpecCondition::Formula(Term::eq(Term::Loc(loc.clone()), rhs)));
    }

    // safety conditions for the assets the loop touches
    let mut seen = BTreeSet::new();
    for (loc, _) in &segment.deltas {
        let Location::Asset { asset, .. } = loc else { continue };
        if !seen.insert(asset.clone()) {
            continue;
        }
        let model = assets.model(asset).expect("classified asset");
        match model.kind {
            AssetKind::Divisible => {
                let sum = model.locations().map(Term::Loc).reduce(Term::add).unwrap();
                let old_sum = model.locations().map(Term::Old).reduce(Term::add).unwrap();
                out.push(SpecCondition::Formula(Term::eq(sum, old_sum)));
            }
            AssetKind::Indivisible => {
                out.push(analysis::exclusivity_invariant(model)?);
            }
        }
    }

    out.push(SpecCondition::Variant(Term::sub(bound, i)));
    Ok(out)
}
