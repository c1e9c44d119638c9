//! Lowering of the analyzed contract into the target unit.
//!
//! Clause bodies lower statement by statement: an indivisible transfer is a
//! pair of boolean assignments (recipient up, source down), a divisible
//! transfer a pair of integer updates, conditionals map to conditionals, and
//! messages plus exogenous payments become comments since they have no
//! location in the ownership model. Scenario methods replay their plan:
//! plain calls, `if (ev_eventN) { eventN(); return; }` for timed branches,
//! and an annotated `while` per collapsed cycle.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{BodyStmt, CodegenError, LoopTarget, StaticField, TargetMethod, TargetUnit};
use crate::analysis::{
    exclusivity_invariant, fold, subst_old, AssetKind, Assets, ClauseRef, ClauseSpec, Effect,
    Location, Owner, SpecCondition, SymExec, Term,
};
use crate::scenario::{synthesize_loop_invariant, LoopSegment, ScenarioPlan, ScenarioStep};
use crate::syntax::{
    BinOp, ContractAst, Delay, Expr, ExprKind, FunctionClause, Ident, Stmt, Ty, TypeInfo,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FieldKind {
    Int,
    Boolean,
}

impl FieldKind {
    pub fn java(self) -> &'static str {
        match self {
            FieldKind::Int => "int",
            FieldKind::Boolean => "boolean",
        }
    }

    fn of(ty: Ty, what: &str) -> Result<FieldKind, CodegenError> {
        match ty {
            Ty::Num => Ok(FieldKind::Int),
            Ty::Bool => Ok(FieldKind::Boolean),
            Ty::Str => Err(CodegenError::Unsupported(format!(
                "{what} would need a string field in the generated unit"
            ))),
        }
    }
}

pub fn lower(
    ast: &ContractAst,
    type_info: &TypeInfo,
    assets: &Assets,
    specs: &[ClauseSpec],
    plans: &[ScenarioPlan],
) -> Result<TargetUnit, CodegenError> {
    let mut statics = Vec::new();
    for model in &assets.models {
        let kind = match model.kind {
            AssetKind::Divisible => FieldKind::Int,
            AssetKind::Indivisible => FieldKind::Boolean,
        };
        for loc in model.locations() {
            let init = match &loc {
                // the contract starts empty-handed
                Location::Asset { owner: Owner::Contract, .. } => Some(
                    match kind {
                        FieldKind::Int => "0",
                        FieldKind::Boolean => "false",
                    }
                    .to_string(),
                ),
                _ => None,
            };
            statics.push(StaticField { loc, kind, init });
        }
    }
    for field in &ast.fields {
        let kind = FieldKind::of(type_info.fields[field], &format!("field `{field}`"))?;
        statics.push(StaticField { loc: Location::field(field.clone()), kind, init: None });
    }

    let mut invariants = Vec::new();
    for model in &assets.models {
        if model.kind == AssetKind::Indivisible {
            if let SpecCondition::Formula(f) = exclusivity_invariant(model)? {
                invariants.push(f);
            }
        }
    }

    let spec_of = |clause: &ClauseRef| -> &ClauseSpec {
        specs
            .iter()
            .find(|s| &s.clause == clause)
            .expect("specs cover every clause")
    };

    let mut methods = Vec::new();
    for clause in &ast.clauses {
        methods.push(lower_clause_method(
            ast,
            type_info,
            assets,
            clause,
            spec_of(&ClauseRef::Function(clause.name.clone())),
        )?);
    }
    for (_, event) in ast.events() {
        let spec = spec_of(&ClauseRef::Event(event.event_index));
        let mut method = TargetMethod {
            name: format!("event{}", event.event_index),
            params: Vec::new(),
            requires: Vec::new(),
            ensures: Vec::new(),
            assignable: spec.frame.clone(),
            comments: vec![format!(
                "fires in {} -> {}",
                event.trigger_state, event.target_state
            )],
            body: lower_stmts(ast, assets, None, &event.body)?,
        };
        fill_contract(&mut method, assets, spec);
        methods.push(method);
    }
    for plan in plans {
        methods.push(compose_scenario(ast, type_info, assets, specs, plan)?);
    }

    Ok(TargetUnit {
        class_name: ast.name.clone(),
        parties: ast.parties.clone(),
        statics,
        invariants,
        methods,
    })
}

fn lower_clause_method(
    ast: &ContractAst,
    type_info: &TypeInfo,
    assets: &Assets,
    clause: &FunctionClause,
    spec: &ClauseSpec,
) -> Result<TargetMethod, CodegenError> {
    let mut params = Vec::new();
    for p in &clause.value_params {
        let ty = type_info.value_params[&(clause.name.clone(), p.clone())];
        params.push((p.clone(), FieldKind::of(ty, &format!("parameter `{p}`"))?));
    }
    for p in &clause.asset_params {
        let model = assets.param(&clause.name, p).expect("classified param");
        if model.kind == AssetKind::Divisible {
            params.push((p.clone(), FieldKind::Int));
        }
    }

    let mut body = lower_stmts(ast, assets, Some(clause), &clause.body)?;
    for event in &clause.events {
        let delay = match &event.delay {
            Delay::Literal(n) => n.to_string(),
            Delay::Field(f) => f.clone(),
        };
        body.push(BodyStmt::Comment(format!(
            "schedules event{} at now + {} ({} -> {})",
            event.event_index, delay, event.trigger_state, event.target_state
        )));
    }

    let mut method = TargetMethod {
        name: clause.name.clone(),
        params,
        requires: Vec::new(),
        ensures: Vec::new(),
        assignable: spec.frame.clone(),
        comments: vec![format!(
            "{} -> {}, called by {}",
            clause.source_state, clause.target_state, clause.party
        )],
        body,
    };
    fill_contract(&mut method, assets, spec);
    Ok(method)
}

/// Requires and ensures from a clause contract: divisor guards first, then
/// the collected preconditions; effects shaped per asset kind, then the
/// untouched owners of every touched asset pinned to their old values.
fn fill_contract(method: &mut TargetMethod, assets: &Assets, spec: &ClauseSpec) {
    let requires: Vec<Term> = spec.pre_formulas().cloned().collect();
    let mut ensures: Vec<Term> = spec
        .post
        .iter()
        .map(|e| shaped_effect(assets, e))
        .collect();

    let mut seen_assets = BTreeSet::new();
    for loc in &spec.frame {
        let Location::Asset { asset, .. } = loc else { continue };
        if !seen_assets.insert(asset.clone()) {
            continue;
        }
        let model = assets.model(asset).expect("classified asset");
        for other in model.locations() {
            if !spec.frame.contains(&other) {
                ensures.push(Term::eq(Term::Loc(other.clone()), Term::Old(other)));
            }
        }
    }

    let mut guards = divisor_guards(requires.iter().chain(ensures.iter()));
    guards.extend(requires);
    method.requires = guards;
    method.ensures = ensures;
}

fn shaped_effect(assets: &Assets, effect: &Effect) -> Term {
    let indivisible = matches!(
        &effect.loc,
        Location::Asset { asset, .. } if assets.kind(asset) == Some(AssetKind::Indivisible)
    );
    if indivisible {
        match &effect.value {
            Term::Bool(true) => return Term::Loc(effect.loc.clone()),
            Term::Bool(false) => return Term::not(Term::Loc(effect.loc.clone())),
            _ => {}
        }
    }
    Term::eq(Term::Loc(effect.loc.clone()), effect.value.clone())
}

/// `d > 0` for every non-constant divisor appearing in the given terms.
/// Divisors that differ only in pre-state vs current-state references count
/// once, in the current-state spelling.
fn divisor_guards<'a>(terms: impl Iterator<Item = &'a Term>) -> Vec<Term> {
    let mut divisors: Vec<Term> = Vec::new();
    fn unold(term: &Term) -> Term {
        match term {
            Term::Old(l) => Term::Loc(l.clone()),
            Term::Binary { op, lhs, rhs } => Term::bin(*op, unold(lhs), unold(rhs)),
            Term::Unary { op, operand } => {
                Term::Unary { op: *op, operand: Box::new(unold(operand)) }
            }
            other => other.clone(),
        }
    }
    fn collect(term: &Term, out: &mut Vec<Term>) {
        match term {
            Term::Binary { op, lhs, rhs } => {
                collect(lhs, out);
                collect(rhs, out);
                if *op == BinOp::Div && !matches!(**rhs, Term::Int(_)) {
                    let d = unold(rhs);
                    if !out.contains(&d) {
                        out.push(d);
                    }
                }
            }
            Term::Unary { operand, .. } => collect(operand, out),
            Term::Ite { cond, then_term, else_term } => {
                collect(cond, out);
                collect(then_term, out);
                collect(else_term, out);
            }
            _ => {}
        }
    }
    for term in terms {
        collect(term, &mut divisors);
    }
    divisors
        .into_iter()
        .map(|d| Term::bin(BinOp::Gt, d, Term::Int(0)))
        .collect()
}

fn lower_stmts(
    ast: &ContractAst,
    assets: &Assets,
    clause: Option<&FunctionClause>,
    stmts: &[Stmt],
) -> Result<Vec<BodyStmt>, CodegenError> {
    let mut out = Vec::new();
    for stmt in stmts {
        match stmt {
            Stmt::FieldSend { expr, target, .. } => {
                out.push(BodyStmt::Assign {
                    loc: Location::field(target.clone()),
                    value: cur_term(ast, assets, clause, expr)?,
                });
            }
            Stmt::PartySend { expr, target, .. } => {
                out.push(BodyStmt::Comment(format!(
                    "{} -> {target} (message)",
                    crate::syntax::pretty::expr(expr)
                )));
            }
            Stmt::AssetMove { expr, from, to, .. } => {
                let amount = cur_term(ast, assets, clause, expr)?;
                lower_transfer(ast, assets, clause, from, to, Some(amount), &mut out)?;
            }
            Stmt::AssetDrain { from, to, .. } => {
                lower_transfer(ast, assets, clause, from, to, None, &mut out)?;
            }
            Stmt::Conditional { cond, then_branch, else_branch, .. } => {
                out.push(BodyStmt::If {
                    cond: cur_term(ast, assets, clause, cond)?,
                    then_branch: lower_stmts(ast, assets, clause, then_branch)?,
                    else_branch: lower_stmts(ast, assets, clause, else_branch)?,
                });
            }
        }
    }
    Ok(out)
}

/// The transfer pattern: recipient update first, source update second.
/// Exogenous payments have no locations and lower to a comment.
fn lower_transfer(
    ast: &ContractAst,
    assets: &Assets,
    clause: Option<&FunctionClause>,
    from: &str,
    to: &str,
    amount: Option<Term>,
    out: &mut Vec<BodyStmt>,
) -> Result<(), CodegenError> {
    let param = clause.and_then(|c| {
        c.asset_params
            .iter()
            .any(|p| p == from)
            .then(|| assets.param(&c.name, from).expect("classified param"))
    });

    let (kind, alpha, source_loc) = match param {
        Some(model) => {
            let source = model.alpha.as_ref().map(|alpha| {
                Location::party_asset(clause.unwrap().party.clone(), alpha.clone())
            });
            (model.kind, model.alpha.clone(), source)
        }
        None => (
            assets.kind(from).expect("declared asset"),
            Some(from.to_string()),
            Some(Location::contract_asset(from.to_string())),
        ),
    };

    let target_loc = if ast.assets.iter().any(|a| a == to) {
        Some(Location::contract_asset(to.to_string()))
    } else {
        alpha.as_ref().map(|a| Location::party_asset(to.to_string(), a.clone()))
    };

    match kind {
        AssetKind::Indivisible => {
            let target = target_loc.expect("indivisible stuff is always backed");
            out.push(BodyStmt::Assign { loc: target, value: Term::Bool(true) });
            let source = source_loc.expect("indivisible stuff is always backed");
            out.push(BodyStmt::Assign { loc: source, value: Term::Bool(false) });
        }
        AssetKind::Divisible => {
            // the moved amount: explicit, the parameter itself, or the whole
            // current holding
            let amount = match (&amount, param, &source_loc) {
                (Some(a), _, _) => a.clone(),
                (None, Some(model), _) => Term::param(model.param.clone()),
                (None, None, Some(source)) => Term::Loc(source.clone()),
                _ => unreachable!(),
            };
            match (&target_loc, &source_loc) {
                (None, _) => {
                    // payment with no declared asset behind it
                    let shown = describe_amount(&amount);
                    out.push(BodyStmt::Comment(format!("{from} -o {to} (pays {shown} to {to})")));
                    return Ok(());
                }
                (Some(target), source) => {
                    out.push(BodyStmt::Assign {
                        loc: target.clone(),
                        value: Term::add(Term::Loc(target.clone()), amount.clone()),
                    });
                    if let Some(source) = source {
                        let value = if amount == Term::Loc(source.clone()) {
                            Term::Int(0)
                        } else {
                            Term::sub(Term::Loc(source.clone()), amount)
                        };
                        out.push(BodyStmt::Assign { loc: source.clone(), value });
                    }
                }
            }
        }
    }
    Ok(())
}

fn describe_amount(amount: &Term) -> String {
    super::render::render_term(
        amount,
        &super::render::TermStyle { contract: "", unqualified_contract: true, old_as_plain: true },
    )
}

/// Current-state translation of a source expression for method bodies.
fn cur_term(
    ast: &ContractAst,
    assets: &Assets,
    clause: Option<&FunctionClause>,
    expr: &Expr,
) -> Result<Term, CodegenError> {
    match &expr.kind {
        ExprKind::Int(n) => Ok(Term::Int(*n)),
        ExprKind::Bool(b) => Ok(Term::Bool(*b)),
        ExprKind::Str(s) => Ok(Term::Str(s.clone())),
        ExprKind::Name(name) => {
            if let Some(c) = clause {
                if c.value_params.iter().any(|p| p == name) {
                    return Ok(Term::param(name.clone()));
                }
                if c.asset_params.iter().any(|p| p == name) {
                    let model = assets.param(&c.name, name).expect("classified param");
                    return match model.kind {
                        AssetKind::Divisible => Ok(Term::param(name.clone())),
                        AssetKind::Indivisible => Err(CodegenError::Unsupported(format!(
                            "indivisible parameter `{name}` in an expression"
                        ))),
                    };
                }
            }
            if ast.fields.iter().any(|f| f == name) {
                return Ok(Term::Loc(Location::field(name.clone())));
            }
            if ast.assets.iter().any(|a| a == name) {
                return Ok(Term::Loc(Location::contract_asset(name.clone())));
            }
            Err(CodegenError::Unsupported(format!("`{name}` in a body expression")))
        }
        ExprKind::Binary { op, lhs, rhs } => Ok(Term::bin(
            *op,
            cur_term(ast, assets, clause, lhs)?,
            cur_term(ast, assets, clause, rhs)?,
        )),
        ExprKind::Unary { op, operand } => Ok(Term::Unary {
            op: *op,
            operand: Box::new(cur_term(ast, assets, clause, operand)?),
        }),
    }
}

/// Build one scenario method: compose the path symbolically for its contract,
/// and lay the calls, guards and the annotated loop out as the body.
pub fn compose_scenario(
    ast: &ContractAst,
    type_info: &TypeInfo,
    assets: &Assets,
    specs: &[ClauseSpec],
    plan: &ScenarioPlan,
) -> Result<TargetMethod, CodegenError> {
    let spec_of = |clause: &ClauseRef| -> &ClauseSpec {
        specs.iter().find(|s| &s.clause == clause).expect("specs cover every clause")
    };

    let mut exec = SymExec::new(ast, assets);
    let mut params: Vec<(String, FieldKind)> = Vec::new();
    let mut body: Vec<BodyStmt> = Vec::new();
    let mut assignable: Vec<Location> = Vec::new();
    let mut assumed: Vec<Term> = Vec::new();
    let mut late_requires: Vec<Term> = Vec::new();
    let mut loop_invariant_terms: Vec<Term> = Vec::new();

    let extend_frame = |assignable: &mut Vec<Location>, frame: &[Location]| {
        for loc in frame {
            if !assignable.contains(loc) {
                assignable.push(loc.clone());
            }
        }
    };

    for step in &plan.steps {
        match step {
            ScenarioStep::Call { clause: clause_name, args } => {
                let clause = ast.clause(clause_name).expect("clause exists");
                push_call_params(type_info, assets, clause, args, &mut params)?;
                let renames: BTreeMap<Ident, String> = args.iter().cloned().collect();
                exec.call_function(clause, &renames)
                    .map_err(CodegenError::Analysis)?;
                extend_frame(
                    &mut assignable,
                    &spec_of(&ClauseRef::Function(clause_name.clone())).frame,
                );
                body.push(BodyStmt::Call {
                    method: clause_name.clone(),
                    args: args.iter().map(|(_, s)| s.clone()).collect(),
                });
            }
            ScenarioStep::GuardedEvent { event_index, guard, .. } => {
                params.push((guard.clone(), FieldKind::Boolean));
                extend_frame(&mut assignable, &spec_of(&ClauseRef::Event(*event_index)).frame);
                body.push(BodyStmt::GuardedEventReturn { guard: guard.clone(), event: *event_index });
                // everything after this point happens only if the event did
                // not fire
                let fact = Term::not(Term::param(guard.clone()));
                exec.assume(fact.clone());
                assumed.push(fact);
            }
            ScenarioStep::Loop => {
                let segment = plan.loop_segment.as_ref().expect("loop step implies segment");
                for call in &segment.body {
                    if let ScenarioStep::Call { clause, args } = call {
                        let clause = ast.clause(clause).expect("clause exists");
                        push_call_params(type_info, assets, clause, args, &mut params)?;
                    }
                }
                params.push((segment.bound.clone(), FieldKind::Int));
                late_requires.push(Term::ge(
                    Term::param(segment.bound.clone()),
                    Term::Int(0),
                ));

                // enabling conditions of one traversal, instantiated at the
                // first and last iteration (the changes are linear in i)
                let conds = traversal_conditions(ast, assets, segment)?;
                let entry: BTreeMap<Location, Term> = segment
                    .deltas
                    .iter()
                    .map(|(loc, _)| (loc.clone(), exec.term_of(loc)))
                    .collect();
                let counter = Term::param(segment.bound.clone());
                for iteration in [Term::Int(0), Term::sub(counter.clone(), Term::Int(1))] {
                    for cond in &conds {
                        let inst = subst_old(cond, &|loc: &Location| {
                            state_at(segment, &entry, loc, &iteration, &exec)
                        });
                        let mut antecedent = assumed.clone();
                        antecedent.push(Term::bin(BinOp::Gt, counter.clone(), Term::Int(0)));
                        let lifted =
                            fold(&Term::implies(Term::and_all(antecedent), inst));
                        if lifted != Term::Bool(true) && !late_requires.contains(&lifted) {
                            late_requires.push(lifted);
                        }
                    }
                }

                // net effect of the whole loop on the composition state
                for (loc, _) in &segment.deltas {
                    let total = state_at(segment, &entry, loc, &counter, &exec);
                    exec.overwrite(loc.clone(), total);
                }
                extend_frame(
                    &mut assignable,
                    &segment.deltas.iter().map(|(l, _)| l.clone()).collect::<Vec<_>>(),
                );

                let invariants: Vec<Term> = synthesize_loop_invariant(segment, assets)?
                    .into_iter()
                    .filter_map(|c| match c {
                        SpecCondition::Formula(t) => Some(t),
                        _ => None,
                    })
                    .collect();
                loop_invariant_terms.extend(invariants.iter().cloned());
                let mut loop_body = Vec::new();
                for call in &segment.body {
                    if let ScenarioStep::Call { clause, args } = call {
                        loop_body.push(BodyStmt::Call {
                            method: clause.clone(),
                            args: args.iter().map(|(_, s)| s.clone()).collect(),
                        });
                    }
                }
                let mut loop_targets: Vec<LoopTarget> = segment
                    .deltas
                    .iter()
                    .map(|(l, _)| LoopTarget::Loc(l.clone()))
                    .collect();
                loop_targets.push(LoopTarget::Symbol(segment.index.clone()));
                body.push(BodyStmt::LocalInt { name: segment.index.clone() });
                body.push(BodyStmt::Loop {
                    index: segment.index.clone(),
                    bound: segment.bound.clone(),
                    invariants,
                    variant: Term::sub(
                        Term::param(segment.bound.clone()),
                        Term::param(segment.index.clone()),
                    ),
                    assignable: loop_targets,
                    body: loop_body,
                });
            }
        }
    }

    let mut requires = exec.take_conditions();
    requires.extend(late_requires);

    let effects = exec.effects();
    let final_conjuncts: Vec<Term> = effects
        .iter()
        .map(|e| shaped_effect(assets, e))
        .collect();
    let ensures = if final_conjuncts.is_empty() {
        Vec::new()
    } else if assumed.is_empty() {
        final_conjuncts
    } else {
        vec![Term::implies(
            Term::and_all(assumed.clone()),
            Term::and_all(final_conjuncts),
        )]
    };

    let mut guards = divisor_guards(
        requires
            .iter()
            .chain(ensures.iter())
            .chain(loop_invariant_terms.iter()),
    );
    guards.extend(requires);

    Ok(TargetMethod {
        name: plan.name.clone(),
        params,
        requires: guards,
        ensures,
        assignable,
        comments: vec![format!("path from {}", ast.agreement.initial_state)],
        body,
    })
}

fn push_call_params(
    type_info: &TypeInfo,
    assets: &Assets,
    clause: &FunctionClause,
    args: &[(Ident, String)],
    params: &mut Vec<(String, FieldKind)>,
) -> Result<(), CodegenError> {
    for (param, symbol) in args {
        let kind = if clause.value_params.contains(param) {
            let ty = type_info.value_params[&(clause.name.clone(), param.clone())];
            FieldKind::of(ty, &format!("parameter `{param}`"))?
        } else {
            debug_assert_eq!(
                assets.param(&clause.name, param).map(|m| m.kind),
                Some(AssetKind::Divisible)
            );
            FieldKind::Int
        };
        params.push((symbol.clone(), kind));
    }
    Ok(())
}

/// Enabling conditions of one cycle traversal, relative to the loop entry
/// state.
fn traversal_conditions(
    ast: &ContractAst,
    assets: &Assets,
    segment: &LoopSegment,
) -> Result<Vec<Term>, CodegenError> {
    let mut inner = SymExec::new(ast, assets);
    for call in &segment.body {
        if let ScenarioStep::Call { clause, args } = call {
            let clause = ast.clause(clause).expect("clause exists");
            let renames: BTreeMap<Ident, String> = args.iter().cloned().collect();
            inner.call_function(clause, &renames).map_err(CodegenError::Analysis)?;
        }
    }
    Ok(inner.take_conditions())
}

/// Value of `loc` after `iteration` traversals, over the composition's
/// pre-state terms.
fn state_at(
    segment: &LoopSegment,
    entry: &BTreeMap<Location, Term>,
    loc: &Location,
    iteration: &Term,
    exec: &SymExec,
) -> Term {
    let base = entry.get(loc).cloned().unwrap_or_else(|| exec.term_of(loc));
    match segment.deltas.iter().find(|(l, _)| l == loc) {
        None => base,
        Some((_, addends)) => {
            let mut out = base;
            for (positive, amount) in addends {
                let scaled = Term::mul(iteration.clone(), amount.clone());
                out = if *positive { Term::add(out, scaled) } else { Term::sub(out, scaled) };
            }
            out
        }
    }
}

