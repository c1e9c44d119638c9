//! Symbolic terms and conditions used by clause contracts, invariants and
//! loop annotations.

use std::fmt;

use serde::Serialize;

use crate::syntax::{BinOp, Ident, StateId, UnOp};

/// Who holds a quantity of an asset: one of the parties or the contract
/// itself (the escrow).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Owner {
    Contract,
    Party(Ident),
}

impl Owner {
    /// Rendered qualifier; the contract owner displays as the contract name.
    pub fn display<'a>(&'a self, contract: &'a str) -> &'a str {
        match self {
            Owner::Contract => contract,
            Owner::Party(p) => p,
        }
    }
}

/// A mutable location of the generated unit: an owner-qualified asset holding
/// or a contract field.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Location {
    Asset { owner: Owner, asset: Ident },
    Field(Ident),
}

impl Location {
    pub fn asset(owner: Owner, asset: impl Into<Ident>) -> Self {
        Location::Asset { owner, asset: asset.into() }
    }

    pub fn contract_asset(asset: impl Into<Ident>) -> Self {
        Location::Asset { owner: Owner::Contract, asset: asset.into() }
    }

    pub fn party_asset(party: impl Into<Ident>, asset: impl Into<Ident>) -> Self {
        Location::Asset { owner: Owner::Party(party.into()), asset: asset.into() }
    }

    pub fn field(name: impl Into<Ident>) -> Self {
        Location::Field(name.into())
    }

    pub fn qualified(&self, contract: &str) -> String {
        match self {
            Location::Asset { owner, asset } => format!("{}.{}", owner.display(contract), asset),
            Location::Field(name) => name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Term {
    Int(i64),
    Bool(bool),
    Str(String),
    /// Value of the location in the state under evaluation (the pre-state
    /// inside `requires`, the post-state inside `ensures`).
    Loc(Location),
    /// Value of the location in the pre-state (`\old`).
    Old(Location),
    /// Symbolic parameter: a call argument, a loop counter or bound, or an
    /// event guard.
    Param(String),
    Binary { op: BinOp, lhs: Box<Term>, rhs: Box<Term> },
    Unary { op: UnOp, operand: Box<Term> },
    Ite { cond: Box<Term>, then_term: Box<Term>, else_term: Box<Term> },
}

impl Term {
    pub fn param(name: impl Into<String>) -> Term {
        Term::Param(name.into())
    }

    pub fn bin(op: BinOp, lhs: Term, rhs: Term) -> Term {
        Term::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn add(lhs: Term, rhs: Term) -> Term {
        Term::bin(BinOp::Add, lhs, rhs)
    }

    pub fn sub(lhs: Term, rhs: Term) -> Term {
        Term::bin(BinOp::Sub, lhs, rhs)
    }

    pub fn mul(lhs: Term, rhs: Term) -> Term {
        Term::bin(BinOp::Mul, lhs, rhs)
    }

    pub fn eq(lhs: Term, rhs: Term) -> Term {
        Term::bin(BinOp::Eq, lhs, rhs)
    }

    pub fn ge(lhs: Term, rhs: Term) -> Term {
        Term::bin(BinOp::Ge, lhs, rhs)
    }

    pub fn le(lhs: Term, rhs: Term) -> Term {
        Term::bin(BinOp::Le, lhs, rhs)
    }

    pub fn and(lhs: Term, rhs: Term) -> Term {
        Term::bin(BinOp::And, lhs, rhs)
    }

    pub fn not(t: Term) -> Term {
        Term::Unary { op: UnOp::Not, operand: Box::new(t) }
    }

    pub fn implies(antecedent: Term, consequent: Term) -> Term {
        // rendered as `a ==> c`; kept as a distinguished shape
        Term::bin(BinOp::Or, Term::not(antecedent), consequent)
    }

    pub fn and_all(terms: impl IntoIterator<Item = Term>) -> Term {
        let mut iter = terms.into_iter();
        match iter.next() {
            None => Term::Bool(true),
            Some(first) => iter.fold(first, Term::and),
        }
    }

    pub fn contains_old(&self) -> bool {
        match self {
            Term::Old(_) => true,
            Term::Binary { lhs, rhs, .. } => lhs.contains_old() || rhs.contains_old(),
            Term::Unary { operand, .. } => operand.contains_old(),
            Term::Ite { cond, then_term, else_term } => {
                cond.contains_old() || then_term.contains_old() || else_term.contains_old()
            }
            _ => false,
        }
    }

    /// Replace every `Loc` reference by the pre-state reference `Old`. Used
    /// when a formula written against the evaluation state must be pinned to
    /// the state a clause started in.
    pub fn pin_to_old(&self) -> Term {
        match self {
            Term::Loc(l) => Term::Old(l.clone()),
            Term::Binary { op, lhs, rhs } => {
                Term::bin(*op, lhs.pin_to_old(), rhs.pin_to_old())
            }
            Term::Unary { op, operand } => {
                Term::Unary { op: *op, operand: Box::new(operand.pin_to_old()) }
            }
            Term::Ite { cond, then_term, else_term } => Term::Ite {
                cond: Box::new(cond.pin_to_old()),
                then_term: Box::new(then_term.pin_to_old()),
                else_term: Box::new(else_term.pin_to_old()),
            },
            other => other.clone(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::codegen::render_term_with(self, "C", None, false))
    }
}

/// One element of a clause precondition. State and party conditions are
/// structural (enforced by scenario construction, surfaced as comments);
/// formulas are rendered into `requires`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum SpecCondition {
    StateIs(StateId),
    PartyIs(Ident),
    Formula(Term),
    /// A numeric expression that strictly decreases per loop iteration.
    Variant(Term),
}

impl SpecCondition {
    pub fn formula(&self) -> Option<&Term> {
        match self {
            SpecCondition::Formula(t) => Some(t),
            _ => None,
        }
    }
}

/// One location update of a clause postcondition: the final value expressed
/// over pre-state locations and call parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Effect {
    pub loc: Location,
    pub value: Term,
}
