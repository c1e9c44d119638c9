//! Derivation of per-clause contracts by symbolic execution.
//!
//! The executor tracks a symbolic value per location, starting from the
//! pre-state (`\old`). Indivisible asset locations are boolean ownership
//! flags, everything else is numeric. Walking a body accumulates enabling
//! conditions (guard, ownership, availability bounds) against the state seen
//! at each statement, and leaves final value terms from which effects, the
//! least frame, and per-iteration loop deltas are read off.
//!
//! The same executor is reused to compose whole scenario paths: the
//! environment persists across calls and conditions already forced by earlier
//! effects fold away to `true` and are dropped.

use std::collections::BTreeMap;

use serde::Serialize;

use super::term::{Effect, Location, SpecCondition, Term};
use super::{AnalysisError, AssetKind, Assets};
use crate::syntax::{
    BinOp, ContractAst, Delay, EventClause, Expr, ExprKind, FunctionClause, Ident, Pos, Stmt, UnOp,
};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ClauseRef {
    Function(Ident),
    Event(u32),
}

impl ClauseRef {
    pub fn method_name(&self) -> String {
        match self {
            ClauseRef::Function(name) => name.clone(),
            ClauseRef::Event(n) => format!("event{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClauseSpec {
    pub clause: ClauseRef,
    pub pre: Vec<SpecCondition>,
    pub post: Vec<Effect>,
    /// Locations the body writes, in first-write order.
    pub frame: Vec<Location>,
}

impl ClauseSpec {
    pub fn pre_formulas(&self) -> impl Iterator<Item = &Term> {
        self.pre.iter().filter_map(|c| c.formula())
    }
}

pub fn derive_clause_spec(
    ast: &ContractAst,
    assets: &Assets,
    clause: ClauseRef,
) -> Result<ClauseSpec, AnalysisError> {
    let mut exec = SymExec::new(ast, assets);
    let mut pre = Vec::new();
    match &clause {
        ClauseRef::Function(name) => {
            let f = ast
                .clause(name)
                .unwrap_or_else(|| panic!("unknown clause `{name}`"));
            pre.push(SpecCondition::StateIs(f.source_state.clone()));
            pre.push(SpecCondition::PartyIs(f.party.clone()));
            exec.call_function(f, &BTreeMap::new())?;
        }
        ClauseRef::Event(index) => {
            let e = ast
                .event(*index)
                .unwrap_or_else(|| panic!("unknown event {index}"));
            pre.push(SpecCondition::StateIs(e.trigger_state.clone()));
            exec.run_event_body(e)?;
        }
    }
    pre.extend(exec.take_conditions().into_iter().map(SpecCondition::Formula));
    let post = exec.effects();
    let frame = post.iter().map(|e| e.loc.clone()).collect();
    Ok(ClauseSpec { clause, pre, post, frame })
}

/// Ordering rank for collected preconditions, so positives render before
/// negations and the guard leads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum PreRank {
    Guard,
    Bound,
    Holds,
    Avail,
    NotHolds,
}

#[derive(Debug, Clone)]
enum Wallet {
    /// Remaining amount of a divisible parameter; `alpha` names the declared
    /// asset the quantity belongs to, when any.
    Amount { term: Term, alpha: Option<Ident> },
    /// An indivisible unit brought by the caller; consumed on transfer.
    Unit { alpha: Ident, held: bool },
}

pub struct SymExec<'a> {
    ast: &'a ContractAst,
    assets: &'a Assets,
    env: BTreeMap<Location, Term>,
    write_order: Vec<Location>,
    conditions: Vec<(usize, PreRank, Term)>,
    seq: usize,
    wallets: BTreeMap<Ident, Wallet>,
    caller: Option<Ident>,
    current_clause: Option<&'a FunctionClause>,
    ctx: Vec<Term>,
    renames: BTreeMap<Ident, String>,
}

impl<'a> SymExec<'a> {
    pub fn new(ast: &'a ContractAst, assets: &'a Assets) -> Self {
        SymExec {
            ast,
            assets,
            env: BTreeMap::new(),
            write_order: Vec::new(),
            conditions: Vec::new(),
            seq: 0,
            wallets: BTreeMap::new(),
            caller: None,
            current_clause: None,
            ctx: Vec::new(),
            renames: BTreeMap::new(),
        }
    }

    /// Current symbolic value of a location; untouched locations read as
    /// their pre-state value.
    pub fn term_of(&self, loc: &Location) -> Term {
        self.env.get(loc).cloned().unwrap_or_else(|| Term::Old(loc.clone()))
    }

    pub fn effects(&self) -> Vec<Effect> {
        self.write_order
            .iter()
            .filter_map(|loc| {
                let value = self.env.get(loc).cloned()?;
                if value == Term::Old(loc.clone()) {
                    None
                } else {
                    Some(Effect { loc: loc.clone(), value })
                }
            })
            .collect()
    }

    /// Accumulated enabling conditions in render order, already folded;
    /// clears the collection.
    pub fn take_conditions(&mut self) -> Vec<Term> {
        let mut conds = std::mem::take(&mut self.conditions);
        conds.sort_by_key(|(seq, rank, _)| (*rank, *seq));
        conds.into_iter().map(|(_, _, t)| t).collect()
    }

    pub fn touched(&self) -> &[Location] {
        &self.write_order
    }

    /// Assume a fact for the rest of the composition: every later enabling
    /// condition is collected under it. Used for the not-fired side of event
    /// guards in scenario paths.
    pub fn assume(&mut self, fact: Term) {
        self.ctx.push(fact);
    }

    /// Force a location to a term. Used to apply a collapsed loop's net
    /// effect to the composition state.
    pub fn overwrite(&mut self, loc: Location, value: Term) {
        self.write(loc, value);
    }

    /// Execute a function clause: parameter intake, guard, body. Events the
    /// clause registers have no immediate effect. `renames` maps parameter
    /// names to the symbols they carry in a composed scenario.
    pub fn call_function(
        &mut self,
        clause: &'a FunctionClause,
        renames: &BTreeMap<Ident, String>,
    ) -> Result<(), AnalysisError> {
        self.caller = Some(clause.party.clone());
        self.current_clause = Some(clause);
        self.renames = renames.clone();
        self.wallets.clear();

        for param in &clause.asset_params {
            let model = self
                .assets
                .param(&clause.name, param)
                .expect("classified parameter");
            let symbol = self.symbol_for(param);
            match (model.kind, &model.alpha) {
                (AssetKind::Indivisible, Some(alpha)) => {
                    let caller_loc =
                        Location::party_asset(clause.party.clone(), alpha.clone());
                    let owns = self.term_of(&caller_loc);
                    self.push_condition(PreRank::Holds, owns);
                    self.wallets
                        .insert(param.clone(), Wallet::Unit { alpha: alpha.clone(), held: true });
                }
                (AssetKind::Indivisible, None) => unreachable!("indivisible kind implies a link"),
                (AssetKind::Divisible, alpha) => {
                    self.push_condition(
                        PreRank::Bound,
                        Term::ge(Term::param(symbol.clone()), Term::Int(0)),
                    );
                    if let Some(alpha) = alpha {
                        let caller_loc =
                            Location::party_asset(clause.party.clone(), alpha.clone());
                        let holding = self.term_of(&caller_loc);
                        self.push_condition(
                            PreRank::Avail,
                            Term::ge(holding, Term::param(symbol.clone())),
                        );
                    }
                    self.wallets.insert(
                        param.clone(),
                        Wallet::Amount { term: Term::param(symbol), alpha: alpha.clone() },
                    );
                }
            }
        }

        if let Some(guard) = &clause.guard {
            if let Some(term) = self.guard_term(guard)? {
                self.push_condition(PreRank::Guard, term);
            }
        }

        let body = &clause.body;
        self.exec_stmts(body)?;
        self.current_clause = None;
        Ok(())
    }

    pub fn run_event_body(&mut self, event: &'a EventClause) -> Result<(), AnalysisError> {
        self.caller = None;
        self.current_clause = None;
        self.renames.clear();
        self.wallets.clear();
        self.exec_stmts(&event.body)
    }

    fn symbol_for(&self, param: &str) -> String {
        self.renames.get(param).cloned().unwrap_or_else(|| param.to_string())
    }

    fn push_condition(&mut self, rank: PreRank, term: Term) {
        let term = self.under_ctx(term);
        if fold(&term) == Term::Bool(true) {
            return;
        }
        self.conditions.push((self.seq, rank, fold(&term)));
        self.seq += 1;
    }

    fn under_ctx(&self, term: Term) -> Term {
        if self.ctx.is_empty() {
            term
        } else {
            Term::implies(Term::and_all(self.ctx.iter().cloned()), term)
        }
    }

    fn write(&mut self, loc: Location, value: Term) {
        if !self.write_order.contains(&loc) {
            self.write_order.push(loc.clone());
        }
        self.env.insert(loc, value);
    }

    fn exec_stmts(&mut self, stmts: &'a [Stmt]) -> Result<(), AnalysisError> {
        for stmt in stmts {
            self.exec_stmt(stmt)?;
        }
        Ok(())
    }

    fn exec_stmt(&mut self, stmt: &'a Stmt) -> Result<(), AnalysisError> {
        match stmt {
            Stmt::FieldSend { expr, target, .. } => {
                let value = self.term_of_expr(expr)?;
                self.write(Location::field(target.clone()), value);
                Ok(())
            }
            // Messages carry information, not state: no location effect.
            Stmt::PartySend { .. } => Ok(()),
            Stmt::AssetMove { expr, from, to, pos } => {
                let amount = self.term_of_expr(expr)?;
                self.transfer_amount(from, to, amount, *pos)
            }
            Stmt::AssetDrain { from, to, pos } => self.drain(from, to, *pos),
            Stmt::Conditional { cond, then_branch, else_branch, .. } => {
                let cond_term = self.term_of_expr(cond)?;
                let before_env = self.env.clone();
                let before_wallets = self.wallets.clone();

                self.ctx.push(cond_term.clone());
                self.exec_stmts(then_branch)?;
                self.ctx.pop();
                let then_env = std::mem::replace(&mut self.env, before_env);
                let then_wallets = std::mem::replace(&mut self.wallets, before_wallets);

                self.ctx.push(Term::not(cond_term.clone()));
                self.exec_stmts(else_branch)?;
                self.ctx.pop();

                // merge: locations written in either branch become ite-terms
                let mut keys: Vec<Location> = then_env.keys().cloned().collect();
                for k in self.env.keys() {
                    if !keys.contains(k) {
                        keys.push(k.clone());
                    }
                }
                for loc in keys {
                    let t = then_env.get(&loc).cloned().unwrap_or_else(|| Term::Old(loc.clone()));
                    let e = self.term_of(&loc);
                    if t == e {
                        continue;
                    }
                    let merged = Term::Ite {
                        cond: Box::new(cond_term.clone()),
                        then_term: Box::new(t),
                        else_term: Box::new(e),
                    };
                    self.write(loc, merged);
                }
                for (name, wallet) in then_wallets {
                    let else_wallet = self.wallets.get(&name);
                    match (&wallet, else_wallet) {
                        (Wallet::Amount { term: a, .. }, Some(Wallet::Amount { term: b, .. }))
                            if a != b =>
                        {
                            return Err(AnalysisError::Unsupported {
                                pos: stmt.pos(),
                                message: format!(
                                    "parameter `{name}` is spent differently in the two branches"
                                ),
                            });
                        }
                        (Wallet::Unit { held: a, .. }, Some(Wallet::Unit { held: b, .. }))
                            if a != b =>
                        {
                            return Err(AnalysisError::Unsupported {
                                pos: stmt.pos(),
                                message: format!(
                                    "parameter `{name}` is consumed in only one branch"
                                ),
                            });
                        }
                        _ => {}
                    }
                }
                Ok(())
            }
        }
    }

    /// `E -o from, to`: amounts are divisible by construction (classification
    /// would have rejected an indivisible endpoint).
    fn transfer_amount(
        &mut self,
        from: &str,
        to: &str,
        amount: Term,
        pos: Pos,
    ) -> Result<(), AnalysisError> {
        let (source_term, source_alpha, source_loc) = self.source_view(from, pos)?;
        self.push_condition(PreRank::Avail, Term::ge(source_term.clone(), amount.clone()));
        self.credit(to, amount.clone(), &source_alpha);
        match source_loc {
            SourceLoc::Location(loc) => {
                let updated = Term::sub(self.term_of(&loc), amount);
                self.write(loc, updated);
            }
            SourceLoc::Wallet(name) => {
                if let Some(Wallet::Amount { term, .. }) = self.wallets.get_mut(&name) {
                    *term = fold(&Term::sub(term.clone(), amount.clone()));
                }
                if let Some(alpha) = &source_alpha {
                    let caller = self.caller.clone().expect("wallet implies caller");
                    let loc = Location::party_asset(caller, alpha.clone());
                    let updated = Term::sub(self.term_of(&loc), amount);
                    self.write(loc, updated);
                }
            }
        }
        Ok(())
    }

    fn drain(&mut self, from: &str, to: &str, pos: Pos) -> Result<(), AnalysisError> {
        // wallet drains first: the whole remaining amount or the unit
        if let Some(wallet) = self.wallets.get(from).cloned() {
            match wallet {
                Wallet::Amount { term, alpha } => {
                    return self.drain_wallet_amount(from, to, term, alpha);
                }
                Wallet::Unit { alpha, held } => {
                    if !held {
                        return Err(AnalysisError::Unsupported {
                            pos,
                            message: format!("parameter `{from}` is already consumed"),
                        });
                    }
                    let caller = self.caller.clone().expect("wallet implies caller");
                    self.indivisible_handover(
                        Location::party_asset(caller, alpha.clone()),
                        to,
                        &alpha,
                    );
                    if let Some(Wallet::Unit { held, .. }) = self.wallets.get_mut(from) {
                        *held = false;
                    }
                    return Ok(());
                }
            }
        }
        let kind = self
            .assets
            .kind(from)
            .unwrap_or_else(|| panic!("`{from}` is not a classified asset"));
        match kind {
            AssetKind::Indivisible => {
                let source = Location::contract_asset(from.to_string());
                let holds = self.term_of(&source);
                self.push_condition(PreRank::Holds, holds);
                self.indivisible_handover(source, to, &from.to_string());
                Ok(())
            }
            AssetKind::Divisible => {
                let source = Location::contract_asset(from.to_string());
                let amount = self.term_of(&source);
                self.credit(to, amount, &Some(from.to_string()));
                self.write(source, Term::Int(0));
                Ok(())
            }
        }
    }

    fn drain_wallet_amount(
        &mut self,
        from: &str,
        to: &str,
        amount: Term,
        alpha: Option<Ident>,
    ) -> Result<(), AnalysisError> {
        self.credit(to, amount.clone(), &alpha);
        if let Some(alpha) = &alpha {
            let caller = self.caller.clone().expect("wallet implies caller");
            let loc = Location::party_asset(caller, alpha.clone());
            let updated = Term::sub(self.term_of(&loc), amount);
            self.write(loc, updated);
        }
        if let Some(Wallet::Amount { term, .. }) = self.wallets.get_mut(from) {
            *term = Term::Int(0);
        }
        Ok(())
    }

    /// Unit transfer: the target flag rises, the source flag falls, and the
    /// recipient must not already hold the asset.
    fn indivisible_handover(&mut self, source: Location, to: &str, alpha: &str) {
        let target = self.owner_location(to, alpha);
        let not_holds = Term::not(self.term_of(&target));
        self.push_condition(PreRank::NotHolds, not_holds);
        self.write(target, Term::Bool(true));
        let falls = &source;
        self.write(falls.clone(), Term::Bool(false));
    }

    /// Add `amount` of stuff (of declared kind `alpha`, when known) to the
    /// target asset or party. Payments with no declared kind land nowhere in
    /// the location model; the interpreter tracks them as receipts.
    fn credit(&mut self, to: &str, amount: Term, alpha: &Option<Ident>) {
        let loc = if self.ast.assets.iter().any(|a| a == to) {
            Location::contract_asset(to.to_string())
        } else {
            match alpha {
                Some(a) => Location::party_asset(to.to_string(), a.clone()),
                None => return,
            }
        };
        let updated = Term::add(self.term_of(&loc), amount);
        self.write(loc, updated);
    }

    fn owner_location(&self, to: &str, alpha: &str) -> Location {
        if self.ast.assets.iter().any(|a| a == to) {
            Location::contract_asset(to.to_string())
        } else {
            Location::party_asset(to.to_string(), alpha.to_string())
        }
    }

    fn source_view(
        &self,
        from: &str,
        pos: Pos,
    ) -> Result<(Term, Option<Ident>, SourceLoc), AnalysisError> {
        if let Some(wallet) = self.wallets.get(from) {
            return match wallet {
                Wallet::Amount { term, alpha } => {
                    Ok((term.clone(), alpha.clone(), SourceLoc::Wallet(from.to_string())))
                }
                Wallet::Unit { .. } => Err(AnalysisError::Unsupported {
                    pos,
                    message: format!("indivisible parameter `{from}` cannot move by amount"),
                }),
            };
        }
        let loc = Location::contract_asset(from.to_string());
        Ok((self.term_of(&loc), Some(from.to_string()), SourceLoc::Location(loc)))
    }

    /// Guard translation. Equalities pinning an indivisible parameter to an
    /// amount abstract away: ownership of the unit is already required.
    fn guard_term(&mut self, guard: &Expr) -> Result<Option<Term>, AnalysisError> {
        let rewritten = self.rewrite_indivisible_equalities(guard)?;
        match rewritten {
            Some(expr) => {
                let t = self.term_of_expr(&expr)?;
                Ok(Some(t))
            }
            None => Ok(None),
        }
    }

    fn rewrite_indivisible_equalities(&self, expr: &Expr) -> Result<Option<Expr>, AnalysisError> {
        let is_unit_param = |e: &Expr| -> bool {
            e.as_name()
                .map(|n| matches!(self.wallets.get(n), Some(Wallet::Unit { .. })))
                .unwrap_or(false)
        };
        match &expr.kind {
            ExprKind::Binary { op: BinOp::Eq, lhs, rhs }
                if is_unit_param(lhs) || is_unit_param(rhs) =>
            {
                Ok(None)
            }
            ExprKind::Binary { op: BinOp::And, lhs, rhs } => {
                let l = self.rewrite_indivisible_equalities(lhs)?;
                let r = self.rewrite_indivisible_equalities(rhs)?;
                Ok(match (l, r) {
                    (Some(l), Some(r)) => Some(Expr::new(
                        ExprKind::Binary { op: BinOp::And, lhs: Box::new(l), rhs: Box::new(r) },
                        expr.pos,
                    )),
                    (Some(one), None) | (None, Some(one)) => Some(one),
                    (None, None) => None,
                })
            }
            _ => Ok(Some(expr.clone())),
        }
    }

    pub fn term_of_expr(&self, expr: &Expr) -> Result<Term, AnalysisError> {
        match &expr.kind {
            ExprKind::Int(n) => Ok(Term::Int(*n)),
            ExprKind::Bool(b) => Ok(Term::Bool(*b)),
            ExprKind::Str(s) => Ok(Term::Str(s.clone())),
            ExprKind::Name(name) => self.term_of_name(name, expr.pos),
            ExprKind::Binary { op, lhs, rhs } => Ok(Term::bin(
                *op,
                self.term_of_expr(lhs)?,
                self.term_of_expr(rhs)?,
            )),
            ExprKind::Unary { op, operand } => Ok(Term::Unary {
                op: *op,
                operand: Box::new(self.term_of_expr(operand)?),
            }),
        }
    }

    fn term_of_name(&self, name: &str, pos: Pos) -> Result<Term, AnalysisError> {
        if let Some(wallet) = self.wallets.get(name) {
            return match wallet {
                Wallet::Amount { term, .. } => Ok(term.clone()),
                Wallet::Unit { .. } => Err(AnalysisError::Unsupported {
                    pos,
                    message: format!(
                        "indivisible parameter `{name}` can only be transferred or compared for equality in a guard"
                    ),
                }),
            };
        }
        if let Some(clause) = self.current_clause {
            if clause.value_params.iter().any(|p| p == name) {
                return Ok(Term::param(self.symbol_for(name)));
            }
        }
        if self.ast.fields.iter().any(|f| f == name) {
            return Ok(self.term_of(&Location::field(name.to_string())));
        }
        if self.ast.assets.iter().any(|a| a == name) {
            return Ok(self.term_of(&Location::contract_asset(name.to_string())));
        }
        Err(AnalysisError::Unsupported { pos, message: format!("`{name}` has no symbolic value") })
    }
}

/// What a transfer source looks like from the executor's point of view.
enum SourceLoc {
    Location(Location),
    Wallet(Ident),
}

/// Constant folding for conditions: boolean algebra over literals plus
/// syntactic equality.
pub fn fold(term: &Term) -> Term {
    match term {
        Term::Binary { op, lhs, rhs } => {
            let l = fold(lhs);
            let r = fold(rhs);
            match (op, &l, &r) {
                (BinOp::And, Term::Bool(true), other) | (BinOp::And, other, Term::Bool(true)) => {
                    other.clone()
                }
                (BinOp::And, Term::Bool(false), _) | (BinOp::And, _, Term::Bool(false)) => {
                    Term::Bool(false)
                }
                (BinOp::Or, Term::Bool(false), other) | (BinOp::Or, other, Term::Bool(false)) => {
                    other.clone()
                }
                (BinOp::Or, Term::Bool(true), _) | (BinOp::Or, _, Term::Bool(true)) => {
                    Term::Bool(true)
                }
                (BinOp::Eq, a, b) if a == b => Term::Bool(true),
                (BinOp::Eq, Term::Int(a), Term::Int(b)) => Term::Bool(a == b),
                (BinOp::Ne, Term::Int(a), Term::Int(b)) => Term::Bool(a != b),
                (BinOp::Le, Term::Int(a), Term::Int(b)) => Term::Bool(a <= b),
                (BinOp::Lt, Term::Int(a), Term::Int(b)) => Term::Bool(a < b),
                (BinOp::Ge, Term::Int(a), Term::Int(b)) => Term::Bool(a >= b),
                (BinOp::Gt, Term::Int(a), Term::Int(b)) => Term::Bool(a > b),
                (BinOp::Ge, a, b) if a == b => Term::Bool(true),
                (BinOp::Le, a, b) if a == b => Term::Bool(true),
                (BinOp::Add, Term::Int(a), Term::Int(b)) => Term::Int(a + b),
                (BinOp::Sub, Term::Int(a), Term::Int(b)) => Term::Int(a - b),
                (BinOp::Sub, other, Term::Int(0)) | (BinOp::Add, other, Term::Int(0)) => {
                    other.clone()
                }
                (BinOp::Add, Term::Int(0), other) => other.clone(),
                (BinOp::Mul, Term::Int(a), Term::Int(b)) => Term::Int(a * b),
                (BinOp::Mul, Term::Int(0), _) | (BinOp::Mul, _, Term::Int(0)) => Term::Int(0),
                (BinOp::Mul, Term::Int(1), other) | (BinOp::Mul, other, Term::Int(1)) => {
                    other.clone()
                }
                _ => Term::bin(*op, l, r),
            }
        }
        Term::Unary { op: UnOp::Not, operand } => match fold(operand) {
            Term::Bool(b) => Term::Bool(!b),
            other => Term::not(other),
        },
        Term::Unary { op, operand } => Term::Unary { op: *op, operand: Box::new(fold(operand)) },
        Term::Ite { cond, then_term, else_term } => {
            let c = fold(cond);
            match c {
                Term::Bool(true) => fold(then_term),
                Term::Bool(false) => fold(else_term),
                c => Term::Ite {
                    cond: Box::new(c),
                    then_term: Box::new(fold(then_term)),
                    else_term: Box::new(fold(else_term)),
                },
            }
        }
        other => other.clone(),
    }
}

/// Substitute pre-state references through `map`; used to re-base conditions
/// and effects when composing clauses into a scenario.
pub fn subst_old(term: &Term, map: &dyn Fn(&Location) -> Term) -> Term {
    match term {
        Term::Old(loc) => map(loc),
        Term::Binary { op, lhs, rhs } => {
            Term::bin(*op, subst_old(lhs, map), subst_old(rhs, map))
        }
        Term::Unary { op, operand } => {
            Term::Unary { op: *op, operand: Box::new(subst_old(operand, map)) }
        }
        Term::Ite { cond, then_term, else_term } => Term::Ite {
            cond: Box::new(subst_old(cond, map)),
            then_term: Box::new(subst_old(then_term, map)),
            else_term: Box::new(subst_old(else_term, map)),
        },
        other => other.clone(),
    }
}

/// Read the per-iteration delta of `loc` off its final term: the term must be
/// the pre-state value plus a chain of addends that do not depend on anything
/// the traversal wrote. Reads of untouched locations (agreed fields, say) are
/// constants across iterations and come out as current-state references.
pub fn delta_of(term: &Term, loc: &Location, mutated: &[Location]) -> Option<Vec<(bool, Term)>> {
    fn peel(term: &Term, out: &mut Vec<(bool, Term)>) -> Term {
        match term {
            Term::Binary { op: BinOp::Add, lhs, rhs } => {
                let base = peel(lhs, out);
                out.push((true, (**rhs).clone()));
                base
            }
            Term::Binary { op: BinOp::Sub, lhs, rhs } => {
                let base = peel(lhs, out);
                out.push((false, (**rhs).clone()));
                base
            }
            other => other.clone(),
        }
    }
    fn constant_form(term: &Term, mutated: &[Location]) -> Option<Term> {
        match term {
            Term::Old(l) | Term::Loc(l) => {
                if mutated.contains(l) {
                    None
                } else {
                    Some(Term::Loc(l.clone()))
                }
            }
            Term::Binary { op, lhs, rhs } => Some(Term::bin(
                *op,
                constant_form(lhs, mutated)?,
                constant_form(rhs, mutated)?,
            )),
            Term::Unary { op, operand } => Some(Term::Unary {
                op: *op,
                operand: Box::new(constant_form(operand, mutated)?),
            }),
            Term::Ite { .. } => None,
            other => Some(other.clone()),
        }
    }
    let mut addends = Vec::new();
    let base = peel(term, &mut addends);
    if base != Term::Old(loc.clone()) {
        return None;
    }
    addends
        .into_iter()
        .map(|(positive, t)| constant_form(&t, mutated).map(|t| (positive, t)))
        .collect()
}

/// The delay expression of an event as a term over fields.
pub fn delay_term(delay: &Delay) -> Term {
    match delay {
        Delay::Literal(n) => Term::Int(*n),
        Delay::Field(f) => Term::Old(Location::field(f.clone())),
    }
}
