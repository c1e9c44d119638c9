//! Reference interpreter of the operational semantics.
//!
//! A `RuntimeState` is an immutable snapshot: control state, field values,
//! owner-qualified asset amounts, the multiset of pending events, the message
//! log, and the clock. Operations return fresh snapshots.
//!
//! Assets are plain quantities here; the boolean view of indivisible assets
//! is a translation-side abstraction. Asset arguments are taken from the
//! caller's holdings of the associated declared asset (an indivisible asset
//! argument must hand over the caller's entire lot); arguments with no
//! declared asset behind them are exogenous payments whose deliveries are
//! tracked as receipts. Time advances only through explicit ticks: every
//! pending event timer drops by one and negative timers are discarded.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{classify, AnalysisError, AssetKind, Assets, Owner};
use crate::syntax::{
    BinOp, ContractAst, Delay, Expr, ExprKind, FunctionClause, Ident, StateId, Stmt, UnOp,
};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Str(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => write!(f, "\"{s}\""),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PendingEvent {
    pub event_index: u32,
    pub remaining: i64,
    pub trigger_state: StateId,
    pub target_state: StateId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuntimeState {
    pub control: StateId,
    pub field_vals: BTreeMap<Ident, Value>,
    /// (owner, declared asset) -> non-negative amount.
    pub asset_vals: BTreeMap<(Owner, Ident), i64>,
    /// Deliveries of exogenous payments: (party, "clause.param") -> total.
    pub receipts: BTreeMap<(Ident, String), i64>,
    pub pending: Vec<PendingEvent>,
    pub messages: Vec<(Ident, Value)>,
    pub clock: i64,
}

impl RuntimeState {
    pub fn asset(&self, owner: &Owner, asset: &str) -> i64 {
        self.asset_vals
            .get(&(owner.clone(), asset.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn field(&self, name: &str) -> Option<&Value> {
        self.field_vals.get(name)
    }

    /// Sum over all owners, parties and contract alike.
    pub fn owner_sum(&self, asset: &str) -> i64 {
        self.asset_vals
            .iter()
            .filter(|((_, a), _)| a == asset)
            .map(|(_, v)| *v)
            .sum()
    }

    /// Owners currently holding a positive amount.
    pub fn holders(&self, asset: &str) -> Vec<Owner> {
        self.asset_vals
            .iter()
            .filter(|((_, a), v)| a == asset && **v > 0)
            .map(|((o, _), _)| o.clone())
            .collect()
    }

    pub fn to_json(&self, contract: &str) -> serde_json::Value {
        let assets: BTreeMap<String, i64> = self
            .asset_vals
            .iter()
            .map(|((o, a), v)| (format!("{}.{}", o.display(contract), a), *v))
            .collect();
        let receipts: BTreeMap<String, i64> = self
            .receipts
            .iter()
            .map(|((p, key), v)| (format!("{p} <- {key}"), *v))
            .collect();
        serde_json::json!({
            "control": self.control.as_str(),
            "clock": self.clock,
            "fields": self.field_vals,
            "assets": assets,
            "receipts": receipts,
            "messages": self.messages.iter().map(|(p, v)| serde_json::json!({"party": p, "value": v})).collect::<Vec<_>>(),
            "pending": self.pending,
        })
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RuntimeError {
    #[error("missing initialization: {0}")]
    MissingInit(String),
    #[error("unknown clause `{0}`")]
    UnknownClause(String),
    #[error("wrong state: `{clause}` needs {expected}, contract is in {actual}")]
    WrongState { clause: String, expected: StateId, actual: StateId },
    #[error("guard of `{0}` is false")]
    GuardFalse(String),
    #[error("insufficient asset: {0}")]
    InsufficientAsset(String),
    #[error("event {0} is not fireable")]
    NotFireable(u32),
    #[error("bad arguments: {0}")]
    Args(String),
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("analysis failed: {0}")]
    Analysis(#[from] AnalysisError),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("trace step {step}: {source}")]
pub struct TraceError {
    pub step: usize,
    pub source: RuntimeError,
}

/// One step of a recorded execution, as read from trace files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum TraceStep {
    Init {
        #[serde(default)]
        fields: BTreeMap<Ident, Value>,
        /// Endowments keyed as "Party.asset".
        #[serde(default)]
        assets: BTreeMap<String, i64>,
    },
    Invoke {
        clause: String,
        #[serde(default)]
        value_args: BTreeMap<String, Value>,
        #[serde(default)]
        asset_args: BTreeMap<String, i64>,
    },
    Tick {
        #[serde(default = "default_tick")]
        n: i64,
    },
    Fire {
        event: u32,
    },
}

fn default_tick() -> i64 {
    1
}

/// Interpreter for one contract: the AST plus its asset classification.
pub struct Machine<'a> {
    pub ast: &'a ContractAst,
    pub assets: Assets,
}

impl<'a> Machine<'a> {
    /// Expects a canonical AST (shorthands expanded).
    pub fn new(ast: &'a ContractAst) -> Result<Self, RuntimeError> {
        let assets = classify(ast)?;
        Ok(Machine { ast, assets })
    }

    pub fn init(
        &self,
        field_inits: &BTreeMap<Ident, Value>,
        endowments: &BTreeMap<(Ident, Ident), i64>,
    ) -> Result<RuntimeState, RuntimeError> {
        let mut bound = Vec::new();
        for binding in &self.ast.agreement.bindings {
            bound.extend(binding.fields.iter().cloned());
        }
        for field in &bound {
            if !field_inits.contains_key(field) {
                return Err(RuntimeError::MissingInit(format!(
                    "agreement field `{field}` has no initial value"
                )));
            }
        }
        for field in field_inits.keys() {
            if !bound.contains(field) {
                return Err(RuntimeError::MissingInit(format!(
                    "`{field}` is not an agreement-bound field"
                )));
            }
        }
        let mut asset_vals = BTreeMap::new();
        for asset in &self.ast.assets {
            asset_vals.insert((Owner::Contract, asset.clone()), 0);
            for party in &self.ast.parties {
                asset_vals.insert((Owner::Party(party.clone()), asset.clone()), 0);
            }
        }
        for ((party, asset), amount) in endowments {
            if !self.ast.parties.contains(party) {
                return Err(RuntimeError::MissingInit(format!("`{party}` is not a party")));
            }
            if !self.ast.assets.contains(asset) {
                return Err(RuntimeError::MissingInit(format!("`{asset}` is not an asset")));
            }
            if *amount < 0 {
                return Err(RuntimeError::MissingInit(format!(
                    "negative endowment for {party}.{asset}"
                )));
            }
            asset_vals.insert((Owner::Party(party.clone()), asset.clone()), *amount);
        }
        Ok(RuntimeState {
            control: self.ast.agreement.initial_state.clone(),
            field_vals: field_inits.clone(),
            asset_vals,
            receipts: BTreeMap::new(),
            pending: Vec::new(),
            messages: Vec::new(),
            clock: 0,
        })
    }

    pub fn invoke(
        &self,
        state: &RuntimeState,
        clause_name: &str,
        value_args: &BTreeMap<String, Value>,
        asset_args: &BTreeMap<String, i64>,
    ) -> Result<RuntimeState, RuntimeError> {
        let clause = self
            .ast
            .clause(clause_name)
            .ok_or_else(|| RuntimeError::UnknownClause(clause_name.to_string()))?;
        if state.control != clause.source_state {
            return Err(RuntimeError::WrongState {
                clause: clause_name.to_string(),
                expected: clause.source_state.clone(),
                actual: state.control.clone(),
            });
        }
        for p in &clause.value_params {
            if !value_args.contains_key(p) {
                return Err(RuntimeError::Args(format!("missing value argument `{p}`")));
            }
        }
        for p in value_args.keys() {
            if !clause.value_params.contains(p) {
                return Err(RuntimeError::Args(format!("unexpected value argument `{p}`")));
            }
        }
        for p in asset_args.keys() {
            if !clause.asset_params.contains(p) {
                return Err(RuntimeError::Args(format!("unexpected asset argument `{p}`")));
            }
        }

        let mut next = state.clone();
        let caller = Owner::Party(clause.party.clone());

        // Take asset arguments into per-call wallets. Backed arguments come
        // out of the caller's holdings; indivisible lots move whole.
        let mut wallets: BTreeMap<Ident, Wallet> = BTreeMap::new();
        for param in &clause.asset_params {
            let amount = *asset_args
                .get(param)
                .ok_or_else(|| RuntimeError::Args(format!("missing asset argument `{param}`")))?;
            if amount < 0 {
                return Err(RuntimeError::Args(format!("negative asset argument `{param}`")));
            }
            let model = self.assets.param(&clause.name, param).expect("classified param");
            if let Some(alpha) = &model.alpha {
                let held = next.asset(&caller, alpha);
                if amount > held {
                    return Err(RuntimeError::InsufficientAsset(format!(
                        "{} holds {held} of `{alpha}`, argument `{param}` needs {amount}",
                        clause.party
                    )));
                }
                if model.kind == AssetKind::Indivisible && amount != held {
                    return Err(RuntimeError::InsufficientAsset(format!(
                        "indivisible `{alpha}` must be handed over whole: {} holds {held}, argument is {amount}",
                        clause.party
                    )));
                }
                *next
                    .asset_vals
                    .get_mut(&(caller.clone(), alpha.clone()))
                    .expect("initialized holding") -= amount;
            }
            wallets.insert(
                param.clone(),
                Wallet { amount, alpha: model.alpha.clone(), clause: clause.name.clone() },
            );
        }

        let guard_ok = match &clause.guard {
            Some(guard) => {
                let env = Env { state: &next, clause: Some(clause), wallets: &wallets, value_args };
                match eval_expr(guard, &env)? {
                    Value::Bool(b) => b,
                    other => {
                        return Err(RuntimeError::Eval(format!(
                            "guard evaluated to non-boolean {other}"
                        )))
                    }
                }
            }
            None => true,
        };
        if !guard_ok {
            return Err(RuntimeError::GuardFalse(clause_name.to_string()));
        }

        self.exec_stmts(&clause.body, &mut next, Some(clause), &mut wallets, value_args)?;

        for event in &clause.events {
            let remaining = match &event.delay {
                Delay::Literal(n) => *n,
                Delay::Field(f) => match next.field(f) {
                    Some(Value::Int(n)) => *n,
                    Some(other) => {
                        return Err(RuntimeError::Eval(format!(
                            "event delay field `{f}` is not a number: {other}"
                        )))
                    }
                    None => {
                        return Err(RuntimeError::Eval(format!(
                            "event delay field `{f}` read before initialization"
                        )))
                    }
                },
            };
            next.pending.push(PendingEvent {
                event_index: event.event_index,
                remaining,
                trigger_state: event.trigger_state.clone(),
                target_state: event.target_state.clone(),
            });
        }

        // Whatever was not transferred returns to the caller.
        for wallet in wallets.values() {
            if let Some(alpha) = &wallet.alpha {
                *next
                    .asset_vals
                    .get_mut(&(caller.clone(), alpha.clone()))
                    .expect("initialized holding") += wallet.amount;
            }
        }

        next.control = clause.target_state.clone();
        Ok(next)
    }

    /// One tick: the clock advances, every pending timer drops by one,
    /// negative timers are discarded. Nothing else changes.
    pub fn tick(&self, state: &RuntimeState) -> RuntimeState {
        self.tick_many(state, 1)
    }

    /// `n` consecutive ticks in one step; a timer that would go negative at
    /// any point of the run is discarded, exactly as under single ticks.
    pub fn tick_many(&self, state: &RuntimeState, n: i64) -> RuntimeState {
        let mut next = state.clone();
        next.clock += n;
        for ev in &mut next.pending {
            ev.remaining -= n;
        }
        next.pending.retain(|ev| ev.remaining >= 0);
        next
    }

    pub fn fire_event(
        &self,
        state: &RuntimeState,
        event_index: u32,
    ) -> Result<RuntimeState, RuntimeError> {
        let slot = state
            .pending
            .iter()
            .position(|ev| {
                ev.event_index == event_index
                    && ev.remaining == 0
                    && ev.trigger_state == state.control
            })
            .ok_or(RuntimeError::NotFireable(event_index))?;
        let event = self
            .ast
            .event(event_index)
            .ok_or(RuntimeError::NotFireable(event_index))?;
        let mut next = state.clone();
        next.pending.remove(slot);
        let mut wallets = BTreeMap::new();
        self.exec_stmts(&event.body, &mut next, None, &mut wallets, &BTreeMap::new())?;
        next.control = event.target_state.clone();
        Ok(next)
    }

    pub fn run_trace(&self, steps: &[TraceStep]) -> Result<RuntimeState, TraceError> {
        let mut state: Option<RuntimeState> = None;
        for (index, step) in steps.iter().enumerate() {
            let fail = |source| TraceError { step: index, source };
            match step {
                TraceStep::Init { fields, assets } => {
                    let mut endowments = BTreeMap::new();
                    for (key, amount) in assets {
                        let (party, asset) = key.split_once('.').ok_or_else(|| {
                            fail(RuntimeError::MissingInit(format!(
                                "endowment key `{key}` is not Party.asset"
                            )))
                        })?;
                        endowments.insert((party.to_string(), asset.to_string()), *amount);
                    }
                    state = Some(self.init(fields, &endowments).map_err(fail)?);
                }
                TraceStep::Invoke { clause, value_args, asset_args } => {
                    let cur = state.as_ref().ok_or_else(|| {
                        fail(RuntimeError::MissingInit("trace must start with init".into()))
                    })?;
                    state = Some(self.invoke(cur, clause, value_args, asset_args).map_err(fail)?);
                }
                TraceStep::Tick { n } => {
                    let cur = state.ok_or_else(|| {
                        fail(RuntimeError::MissingInit("trace must start with init".into()))
                    })?;
                    if *n < 0 {
                        return Err(fail(RuntimeError::Args("negative tick count".into())));
                    }
                    state = Some(self.tick_many(&cur, *n));
                }
                TraceStep::Fire { event } => {
                    let cur = state.as_ref().ok_or_else(|| {
                        fail(RuntimeError::MissingInit("trace must start with init".into()))
                    })?;
                    state = Some(self.fire_event(cur, *event).map_err(fail)?);
                }
            }
        }
        state.ok_or(TraceError { step: 0, source: RuntimeError::MissingInit("empty trace".into()) })
    }

    fn exec_stmts(
        &self,
        stmts: &[Stmt],
        state: &mut RuntimeState,
        clause: Option<&FunctionClause>,
        wallets: &mut BTreeMap<Ident, Wallet>,
        value_args: &BTreeMap<String, Value>,
    ) -> Result<(), RuntimeError> {
        for stmt in stmts {
            match stmt {
                Stmt::FieldSend { expr, target, .. } => {
                    let value = {
                        let env = Env { state, clause, wallets, value_args };
                        eval_expr(expr, &env)?
                    };
                    state.field_vals.insert(target.clone(), value);
                }
                Stmt::PartySend { expr, target, .. } => {
                    let value = {
                        let env = Env { state, clause, wallets, value_args };
                        eval_expr(expr, &env)?
                    };
                    state.messages.push((target.clone(), value));
                }
                Stmt::AssetMove { expr, from, to, .. } => {
                    let amount = {
                        let env = Env { state, clause, wallets, value_args };
                        match eval_expr(expr, &env)? {
                            Value::Int(n) => n,
                            other => {
                                return Err(RuntimeError::Eval(format!(
                                    "transfer amount is not a number: {other}"
                                )))
                            }
                        }
                    };
                    if amount < 0 {
                        return Err(RuntimeError::Eval(format!(
                            "negative transfer amount {amount}"
                        )));
                    }
                    self.transfer(state, wallets, from, to, Some(amount))?;
                }
                Stmt::AssetDrain { from, to, .. } => {
                    self.transfer(state, wallets, from, to, None)?;
                }
                Stmt::Conditional { cond, then_branch, else_branch, .. } => {
                    let taken = {
                        let env = Env { state, clause, wallets, value_args };
                        match eval_expr(cond, &env)? {
                            Value::Bool(b) => b,
                            other => {
                                return Err(RuntimeError::Eval(format!(
                                    "condition is not a boolean: {other}"
                                )))
                            }
                        }
                    };
                    let branch = if taken { then_branch } else { else_branch };
                    self.exec_stmts(branch, state, clause, wallets, value_args)?;
                }
            }
        }
        Ok(())
    }

    /// Move `amount` (or everything, on a drain) from a wallet or the
    /// contract's holding into the target asset or party.
    fn transfer(
        &self,
        state: &mut RuntimeState,
        wallets: &mut BTreeMap<Ident, Wallet>,
        from: &str,
        to: &str,
        amount: Option<i64>,
    ) -> Result<(), RuntimeError> {
        let (take, alpha, receipt_key) = if let Some(wallet) = wallets.get_mut(from) {
            let take = amount.unwrap_or(wallet.amount);
            if take > wallet.amount {
                return Err(RuntimeError::InsufficientAsset(format!(
                    "argument `{from}` holds {}, transfer needs {take}",
                    wallet.amount
                )));
            }
            wallet.amount -= take;
            (take, wallet.alpha.clone(), Some(format!("{}.{}", wallet.clause, from)))
        } else {
            let key = (Owner::Contract, from.to_string());
            let held = state.asset_vals.get(&key).copied().unwrap_or(0);
            let take = amount.unwrap_or(held);
            if take > held {
                return Err(RuntimeError::InsufficientAsset(format!(
                    "contract holds {held} of `{from}`, transfer needs {take}"
                )));
            }
            *state.asset_vals.get_mut(&key).expect("initialized holding") -= take;
            (take, Some(from.to_string()), None)
        };

        if self.ast.assets.iter().any(|a| a == to) {
            // into a declared asset: the contract's holding of that asset
            *state
                .asset_vals
                .get_mut(&(Owner::Contract, to.to_string()))
                .expect("initialized holding") += take;
        } else {
            // into a party
            match alpha {
                Some(asset) => {
                    *state
                        .asset_vals
                        .get_mut(&(Owner::Party(to.to_string()), asset))
                        .expect("initialized holding") += take;
                }
                None => {
                    let key = receipt_key.expect("exogenous transfers come from wallets");
                    *state.receipts.entry((to.to_string(), key)).or_insert(0) += take;
                }
            }
        }
        Ok(())
    }
}

struct Wallet {
    amount: i64,
    alpha: Option<Ident>,
    clause: Ident,
}

struct Env<'a> {
    state: &'a RuntimeState,
    clause: Option<&'a FunctionClause>,
    wallets: &'a BTreeMap<Ident, Wallet>,
    value_args: &'a BTreeMap<String, Value>,
}

fn eval_expr(expr: &Expr, env: &Env) -> Result<Value, RuntimeError> {
    match &expr.kind {
        ExprKind::Int(n) => Ok(Value::Int(*n)),
        ExprKind::Bool(b) => Ok(Value::Bool(*b)),
        ExprKind::Str(s) => Ok(Value::Str(s.clone())),
        ExprKind::Name(name) => {
            if let Some(wallet) = env.wallets.get(name.as_str()) {
                return Ok(Value::Int(wallet.amount));
            }
            if let Some(clause) = env.clause {
                if clause.value_params.iter().any(|p| p == name) {
                    return env
                        .value_args
                        .get(name)
                        .cloned()
                        .ok_or_else(|| RuntimeError::Args(format!("missing argument `{name}`")));
                }
            }
            if let Some(value) = env.state.field(name) {
                return Ok(value.clone());
            }
            if env.state.asset_vals.contains_key(&(Owner::Contract, name.clone())) {
                return Ok(Value::Int(env.state.asset(&Owner::Contract, name)));
            }
            Err(RuntimeError::Eval(format!("`{name}` read before initialization")))
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let l = eval_expr(lhs, env)?;
            let r = eval_expr(rhs, env)?;
            eval_binop(*op, l, r)
        }
        ExprKind::Unary { op, operand } => {
            let v = eval_expr(operand, env)?;
            match (op, v) {
                (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                (UnOp::Neg, Value::Int(n)) => Ok(Value::Int(-n)),
                (op, v) => Err(RuntimeError::Eval(format!("cannot apply {} to {v}", op.symbol()))),
            }
        }
    }
}

pub(crate) fn eval_binop(op: BinOp, l: Value, r: Value) -> Result<Value, RuntimeError> {
    use Value::*;
    match (op, l, r) {
        (BinOp::Add, Int(a), Int(b)) => Ok(Int(a + b)),
        (BinOp::Sub, Int(a), Int(b)) => Ok(Int(a - b)),
        (BinOp::Mul, Int(a), Int(b)) => Ok(Int(a * b)),
        (BinOp::Div, Int(_), Int(0)) => Err(RuntimeError::Eval("division by zero".into())),
        // truncating toward zero
        (BinOp::Div, Int(a), Int(b)) => Ok(Int(a / b)),
        (BinOp::Lt, Int(a), Int(b)) => Ok(Bool(a < b)),
        (BinOp::Le, Int(a), Int(b)) => Ok(Bool(a <= b)),
        (BinOp::Gt, Int(a), Int(b)) => Ok(Bool(a > b)),
        (BinOp::Ge, Int(a), Int(b)) => Ok(Bool(a >= b)),
        (BinOp::Eq, a, b) if same_type(&a, &b) => Ok(Bool(a == b)),
        (BinOp::Ne, a, b) if same_type(&a, &b) => Ok(Bool(a != b)),
        (BinOp::And, Bool(a), Bool(b)) => Ok(Bool(a && b)),
        (BinOp::Or, Bool(a), Bool(b)) => Ok(Bool(a || b)),
        (op, l, r) => Err(RuntimeError::Eval(format!(
            "cannot apply {} to {l} and {r}",
            op.symbol()
        ))),
    }
}

fn same_type(a: &Value, b: &Value) -> bool {
    matches!(
        (a, b),
        (Value::Int(_), Value::Int(_))
            | (Value::Bool(_), Value::Bool(_))
            | (Value::Str(_), Value::Str(_))
    )
}
