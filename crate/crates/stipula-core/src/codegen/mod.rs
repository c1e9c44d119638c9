//! Assembly and printing of the verifier-ready compilation unit.
//!
//! The unit is one public class named after the contract, preceded by one
//! helper class per party; every class holds only static fields. Clause and
//! event methods carry `requires`/`ensures`/`assignable` blocks derived from
//! their contracts; scenario methods replay one linearized path each, with
//! symbolic boolean guards for timed events and an annotated `while` loop per
//! collapsed cycle.

mod lower;
mod render;
mod verify;

pub use lower::{compose_scenario, lower, FieldKind};
pub use render::{render, render_term, TermStyle};
pub use verify::{verify_external, ObligationStatus, VerifierReport, DEFAULT_TIMEOUT_SECS};

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{AnalysisError, Location, Term};
use crate::scenario::ScenarioError;

#[derive(Debug, Error)]
pub enum CodegenError {
    #[error("unsupported for code generation: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("prover not found: {0}")]
    ProverNotFound(String),
    #[error("prover timed out after {0} seconds")]
    ProverTimeout(u64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Language-agnostic model of the emitted compilation unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TargetUnit {
    pub class_name: String,
    pub parties: Vec<String>,
    pub statics: Vec<StaticField>,
    /// Class-level invariants (asset exclusivity).
    pub invariants: Vec<Term>,
    pub methods: Vec<TargetMethod>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StaticField {
    pub loc: Location,
    pub kind: FieldKind,
    pub init: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TargetMethod {
    pub name: String,
    pub params: Vec<(String, FieldKind)>,
    /// Conjuncts of the precondition, rendered in order.
    pub requires: Vec<Term>,
    /// Conjuncts of the postcondition.
    pub ensures: Vec<Term>,
    pub assignable: Vec<Location>,
    /// Structural notes (states, permissions) printed above the JML block.
    pub comments: Vec<String>,
    pub body: Vec<BodyStmt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum BodyStmt {
    Assign {
        loc: Location,
        /// Current-state expression (no `\old`).
        value: Term,
    },
    If {
        cond: Term,
        then_branch: Vec<BodyStmt>,
        else_branch: Vec<BodyStmt>,
    },
    Call {
        method: String,
        args: Vec<String>,
    },
    /// `if (guard) { eventN(); return; }`
    GuardedEventReturn {
        guard: String,
        event: u32,
    },
    /// `int name = 0;`
    LocalInt {
        name: String,
    },
    Loop {
        index: String,
        bound: String,
        invariants: Vec<Term>,
        variant: Term,
        /// Locations plus the index variable.
        assignable: Vec<LoopTarget>,
        body: Vec<BodyStmt>,
    },
    Comment(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum LoopTarget {
    Loc(Location),
    Symbol(String),
}

impl TargetUnit {
    pub fn method(&self, name: &str) -> Option<&TargetMethod> {
        self.methods.iter().find(|m| m.name == name)
    }

    /// Locations assigned anywhere in a method body, including through the
    /// methods it calls; used by the frame-honesty check.
    pub fn body_writes(&self, method: &TargetMethod) -> Vec<Location> {
        let mut out = Vec::new();
        self.collect_writes(&method.body, &mut out);
        out
    }

    fn collect_writes(&self, body: &[BodyStmt], out: &mut Vec<Location>) {
        for stmt in body {
            match stmt {
                BodyStmt::Assign { loc, .. } => {
                    if !out.contains(loc) {
                        out.push(loc.clone());
                    }
                }
                BodyStmt::If { then_branch, else_branch, .. } => {
                    self.collect_writes(then_branch, out);
                    self.collect_writes(else_branch, out);
                }
                BodyStmt::Call { method, .. } => {
                    if let Some(m) = self.method(method) {
                        for loc in &m.assignable {
                            if !out.contains(loc) {
                                out.push(loc.clone());
                            }
                        }
                    }
                }
                BodyStmt::GuardedEventReturn { event, .. } => {
                    if let Some(m) = self.method(&format!("event{event}")) {
                        for loc in &m.assignable {
                            if !out.contains(loc) {
                                out.push(loc.clone());
                            }
                        }
                    }
                }
                BodyStmt::Loop { body, .. } => self.collect_writes(body, out),
                BodyStmt::LocalInt { .. } | BodyStmt::Comment(_) => {}
            }
        }
    }
}

/// Debug rendering used by `Term`'s `Display`; the contract qualifier prints
/// as `C`.
pub(crate) fn render_term_with(
    term: &Term,
    contract: &str,
    _ctx: Option<()>,
    pre_state: bool,
) -> String {
    render_term(
        term,
        &TermStyle { contract, unqualified_contract: false, old_as_plain: pre_state },
    )
}
