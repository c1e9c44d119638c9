//! Evaluation of symbolic terms against interpreter states.
//!
//! This is the bridge used to test specification soundness: a clause contract
//! speaks about pre- and post-state locations, the interpreter produces the
//! actual states. Indivisible asset locations evaluate to their boolean view
//! (somebody holds a positive amount); everything else is numeric.

use std::collections::BTreeMap;

use super::term::{Location, Term};
use super::{AssetKind, Assets};
use crate::interp::{eval_binop, RuntimeError, RuntimeState, Value};
use crate::syntax::{BinOp, UnOp};

pub struct EvalContext<'a> {
    pub assets: &'a Assets,
    pub old: &'a RuntimeState,
    pub new: &'a RuntimeState,
    pub params: &'a BTreeMap<String, Value>,
}

impl<'a> EvalContext<'a> {
    /// Context for precondition formulas: pre and post state coincide.
    pub fn pre(assets: &'a Assets, state: &'a RuntimeState, params: &'a BTreeMap<String, Value>) -> Self {
        EvalContext { assets, old: state, new: state, params }
    }

    fn location(&self, state: &RuntimeState, loc: &Location) -> Result<Value, RuntimeError> {
        match loc {
            Location::Asset { owner, asset } => {
                let amount = state.asset(owner, asset);
                match self.assets.kind(asset) {
                    Some(AssetKind::Indivisible) => Ok(Value::Bool(amount > 0)),
                    _ => Ok(Value::Int(amount)),
                }
            }
            Location::Field(name) => state
                .field(name)
                .cloned()
                .ok_or_else(|| RuntimeError::Eval(format!("field `{name}` is unset"))),
        }
    }
}

pub fn eval_term(term: &Term, ctx: &EvalContext) -> Result<Value, RuntimeError> {
    match term {
        Term::Int(n) => Ok(Value::Int(*n)),
        Term::Bool(b) => Ok(Value::Bool(*b)),
        Term::Str(s) => Ok(Value::Str(s.clone())),
        Term::Loc(loc) => ctx.location(ctx.new, loc),
        Term::Old(loc) => ctx.location(ctx.old, loc),
        Term::Param(name) => ctx
            .params
            .get(name)
            .cloned()
            .ok_or_else(|| RuntimeError::Eval(format!("unbound parameter `{name}`"))),
        // && and || short-circuit left to right, like the logic they render
        // into: the right side of a settled connective may mention values
        // that only exist on the other branch.
        Term::Binary { op: op @ (BinOp::And | BinOp::Or), lhs, rhs } => {
            let l = eval_term(lhs, ctx)?;
            match (op, &l) {
                (BinOp::And, Value::Bool(false)) => Ok(Value::Bool(false)),
                (BinOp::Or, Value::Bool(true)) => Ok(Value::Bool(true)),
                _ => eval_binop(*op, l, eval_term(rhs, ctx)?),
            }
        }
        Term::Binary { op, lhs, rhs } => {
            let l = eval_term(lhs, ctx)?;
            let r = eval_term(rhs, ctx)?;
            eval_binop(*op, l, r)
        }
        Term::Unary { op, operand } => {
            let v = eval_term(operand, ctx)?;
            match (op, v) {
                (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                (UnOp::Neg, Value::Int(n)) => Ok(Value::Int(-n)),
                (op, v) => {
                    Err(RuntimeError::Eval(format!("cannot apply {} to {v}", op.symbol())))
                }
            }
        }
        Term::Ite { cond, then_term, else_term } => match eval_term(cond, ctx)? {
            Value::Bool(true) => eval_term(then_term, ctx),
            Value::Bool(false) => eval_term(else_term, ctx),
            other => Err(RuntimeError::Eval(format!("non-boolean condition {other}"))),
        },
    }
}

pub fn eval_condition(term: &Term, ctx: &EvalContext) -> Result<bool, RuntimeError> {
    match eval_term(term, ctx)? {
        Value::Bool(b) => Ok(b),
        other => Err(RuntimeError::Eval(format!("condition evaluated to {other}"))),
    }
}
