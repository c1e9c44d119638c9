//! Deterministic pretty-printer for the target unit.
//!
//! Specification blocks print as `/*@ .. @*/` comments above each method,
//! 4-space indentation, statics first, invariants second, then clause, event
//! and scenario methods in that order. Method contracts qualify the
//! contract's own holdings (`License.balance`); loop annotations refer to
//! them unqualified (`flour`), matching how the generated class reads its own
//! fields. Fields print bare everywhere. `\old(..)` marks pre-state values
//! and is dropped inside `requires`, which speaks about the pre-state anyway.

use super::{BodyStmt, LoopTarget, TargetMethod, TargetUnit};
use crate::analysis::{Location, Owner, Term};
use crate::syntax::{BinOp, UnOp};
use std::fmt::Write;

pub struct TermStyle<'a> {
    pub contract: &'a str,
    /// Drop the contract qualifier on contract-owned assets (loop context).
    pub unqualified_contract: bool,
    /// Render `\old(x)` as plain `x` (requires context).
    pub old_as_plain: bool,
}

impl<'a> TermStyle<'a> {
    pub fn requires(contract: &'a str) -> Self {
        TermStyle { contract, unqualified_contract: false, old_as_plain: true }
    }

    pub fn ensures(contract: &'a str) -> Self {
        TermStyle { contract, unqualified_contract: false, old_as_plain: false }
    }

    pub fn loop_body(contract: &'a str) -> Self {
        TermStyle { contract, unqualified_contract: true, old_as_plain: false }
    }

    fn location(&self, loc: &Location) -> String {
        match loc {
            Location::Asset { owner: Owner::Contract, asset } if self.unqualified_contract => {
                asset.clone()
            }
            Location::Asset { owner, asset } => {
                format!("{}.{}", owner.display(self.contract), asset)
            }
            Location::Field(name) => name.clone(),
        }
    }
}

pub fn render_term(term: &Term, style: &TermStyle) -> String {
    render_prec(term, style, 0)
}

fn precedence(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 1,
        BinOp::And => 2,
        BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
        BinOp::Add | BinOp::Sub => 4,
        BinOp::Mul | BinOp::Div => 5,
    }
}

fn render_prec(term: &Term, style: &TermStyle, parent: u8) -> String {
    match term {
        Term::Int(n) => n.to_string(),
        Term::Bool(b) => b.to_string(),
        Term::Str(s) => format!("\"{s}\""),
        Term::Loc(loc) => style.location(loc),
        Term::Old(loc) => {
            if style.old_as_plain {
                style.location(loc)
            } else {
                format!("\\old({})", style.location(loc))
            }
        }
        Term::Param(name) => name.clone(),
        Term::Binary { op, lhs, rhs } => {
            // `!a || b` prints as the implication it is
            if let (BinOp::Or, Term::Unary { op: UnOp::Not, operand }) = (op, lhs.as_ref()) {
                let text = format!(
                    "{} ==> {}",
                    render_prec(operand, style, 1),
                    render_prec(rhs, style, 1)
                );
                return if parent > 0 { format!("({text})") } else { text };
            }
            let prec = precedence(*op);
            // A product keeps a division on its right side bare
            // (`i * w/cost_flour`), the shape the annotations are read in.
            let rhs_parent = if *op == BinOp::Mul { prec } else { prec + 1 };
            let text = if *op == BinOp::Div {
                format!(
                    "{}/{}",
                    render_prec(lhs, style, prec),
                    render_prec(rhs, style, rhs_parent)
                )
            } else {
                format!(
                    "{} {} {}",
                    render_prec(lhs, style, prec),
                    op.symbol(),
                    render_prec(rhs, style, rhs_parent)
                )
            };
            if prec < parent {
                format!("({text})")
            } else {
                text
            }
        }
        Term::Unary { op, operand } => format!("{}{}", op.symbol(), render_prec(operand, style, 6)),
        Term::Ite { cond, then_term, else_term } => format!(
            "({} ? {} : {})",
            render_prec(cond, style, 1),
            render_prec(then_term, style, 1),
            render_prec(else_term, style, 1)
        ),
    }
}

pub fn render(unit: &TargetUnit) -> String {
    let mut out = String::new();
    let w = &mut out;
    let contract = unit.class_name.as_str();

    for party in &unit.parties {
        let _ = writeln!(w, "class {party} {{");
        for field in &unit.statics {
            if let Location::Asset { owner: Owner::Party(p), asset } = &field.loc {
                if p == party {
                    let _ = writeln!(w, "    static {} {};", field.kind.java(), asset);
                }
            }
        }
        let _ = writeln!(w, "}}");
        let _ = writeln!(w);
    }

    let _ = writeln!(w, "public class {contract} {{");
    for field in &unit.statics {
        let (name, owned_here) = match &field.loc {
            Location::Asset { owner: Owner::Contract, asset } => (asset.clone(), true),
            Location::Field(name) => (name.clone(), true),
            _ => (String::new(), false),
        };
        if owned_here {
            match &field.init {
                Some(init) => {
                    let _ = writeln!(w, "    static {} {} = {};", field.kind.java(), name, init);
                }
                None => {
                    let _ = writeln!(w, "    static {} {};", field.kind.java(), name);
                }
            }
        }
    }
    if !unit.invariants.is_empty() {
        let _ = writeln!(w);
        let style = TermStyle::ensures(contract);
        for inv in &unit.invariants {
            let _ = writeln!(w, "    /*@ public static invariant");
            let _ = writeln!(w, "      @     {};", render_term(inv, &style));
            let _ = writeln!(w, "      @*/");
        }
    }

    for method in &unit.methods {
        let _ = writeln!(w);
        render_method(w, unit, method);
    }

    let _ = writeln!(w, "}}");
    out
}

fn render_method(w: &mut String, unit: &TargetUnit, method: &TargetMethod) {
    let contract = unit.class_name.as_str();
    for comment in &method.comments {
        let _ = writeln!(w, "    // {comment}");
    }
    let req_style = TermStyle::requires(contract);
    let ens_style = TermStyle::ensures(contract);
    let _ = writeln!(w, "    /*@ public normal_behavior");
    let requires = if method.requires.is_empty() {
        "true".to_string()
    } else {
        method
            .requires
            .iter()
            .map(|t| render_prec(t, &req_style, 2))
            .collect::<Vec<_>>()
            .join(" && ")
    };
    let _ = writeln!(w, "      @ requires {requires};");
    let ensures = if method.ensures.is_empty() {
        "true".to_string()
    } else {
        method
            .ensures
            .iter()
            .map(|t| render_prec(t, &ens_style, 2))
            .collect::<Vec<_>>()
            .join(" && ")
    };
    let _ = writeln!(w, "      @ ensures {ensures};");
    let assignable = if method.assignable.is_empty() {
        "\\nothing".to_string()
    } else {
        method
            .assignable
            .iter()
            .map(|l| ens_style.location(l))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let _ = writeln!(w, "      @ assignable {assignable};");
    let _ = writeln!(w, "      @*/");

    let params = method
        .params
        .iter()
        .map(|(name, kind)| format!("{} {}", kind.java(), name))
        .collect::<Vec<_>>()
        .join(", ");
    let _ = writeln!(w, "    public final static void {}({}) {{", method.name, params);
    render_body(w, contract, &method.body, 2);
    let _ = writeln!(w, "    }}");
}

fn render_body(w: &mut String, contract: &str, body: &[BodyStmt], depth: usize) {
    let pad = "    ".repeat(depth);
    let style = TermStyle::ensures(contract);
    for stmt in body {
        match stmt {
            BodyStmt::Assign { loc, value } => {
                let _ = writeln!(
                    w,
                    "{pad}{} = {};",
                    style.location(loc),
                    render_prec(value, &style, 0)
                );
            }
            BodyStmt::If { cond, then_branch, else_branch } => {
                let _ = writeln!(w, "{pad}if ({}) {{", render_prec(cond, &style, 0));
                render_body(w, contract, then_branch, depth + 1);
                if else_branch.is_empty() {
                    let _ = writeln!(w, "{pad}}}");
                } else {
                    let _ = writeln!(w, "{pad}}} else {{");
                    render_body(w, contract, else_branch, depth + 1);
                    let _ = writeln!(w, "{pad}}}");
                }
            }
            BodyStmt::Call { method, args } => {
                let _ = writeln!(w, "{pad}{method}({});", args.join(", "));
            }
            BodyStmt::GuardedEventReturn { guard, event } => {
                let _ = writeln!(w, "{pad}if ({guard}) {{ event{event}(); return; }}");
            }
            BodyStmt::LocalInt { name } => {
                let _ = writeln!(w, "{pad}int {name} = 0;");
            }
            BodyStmt::Loop { index, bound, invariants, variant, assignable, body } => {
                let loop_style = TermStyle::loop_body(contract);
                let _ = writeln!(w, "{pad}/*@ loop_invariant");
                let inv = invariants
                    .iter()
                    .map(|t| render_prec(t, &loop_style, 2))
                    .collect::<Vec<_>>()
                    .join(" && ");
                let _ = writeln!(w, "{pad}  @     {inv};");
                let _ = writeln!(
                    w,
                    "{pad}  @ decreases {};",
                    render_prec(variant, &loop_style, 0)
                );
                let targets = assignable
                    .iter()
                    .map(|t| match t {
                        LoopTarget::Loc(loc) => loop_style.location(loc),
                        LoopTarget::Symbol(s) => s.clone(),
                    })
                    .collect::<Vec<_>>()
                    .join(", ");
                let _ = writeln!(w, "{pad}  @ assignable {targets};");
                let _ = writeln!(w, "{pad}  @*/");
                let _ = writeln!(w, "{pad}while ({index} < {bound}) {{");
                render_body(w, contract, body, depth + 1);
                let _ = writeln!(w, "{pad}    {index}++;");
                let _ = writeln!(w, "{pad}}}");
            }
            BodyStmt::Comment(text) => {
                let _ = writeln!(w, "{pad}// {text}");
            }
        }
    }
}
