//! Source emitter. `parse(print(ast))` is structurally equal to `ast`.

use super::ast::*;
use std::fmt::Write;

pub fn print(ast: &ContractAst) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "stipula {} {{", ast.name);
    if !ast.assets.is_empty() {
        let _ = writeln!(w, "    asset {}", ast.assets.join(", "));
    }
    if !ast.fields.is_empty() {
        let _ = writeln!(w, "    field {}", ast.fields.join(", "));
    }
    let _ = write!(w, "    agreement ({})", ast.parties.join(", "));
    let bound: Vec<&String> = ast
        .agreement
        .bindings
        .iter()
        .flat_map(|b| b.fields.iter())
        .collect();
    if !bound.is_empty() {
        let names: Vec<&str> = bound.iter().map(|s| s.as_str()).collect();
        let _ = write!(w, "({})", names.join(", "));
    }
    let _ = writeln!(w, " {{");
    for binding in &ast.agreement.bindings {
        let _ = writeln!(
            w,
            "        {} : {}",
            binding.parties.join(", "),
            binding.fields.join(", ")
        );
    }
    let _ = writeln!(w, "    }} => @{}", ast.agreement.initial_state);
    for clause in &ast.clauses {
        let _ = write!(
            w,
            "    @{} {} : {}({})[{}]",
            clause.source_state,
            clause.party,
            clause.name,
            clause.value_params.join(", "),
            clause.asset_params.join(", ")
        );
        if let Some(guard) = &clause.guard {
            let _ = write!(w, " ({})", expr(guard));
        }
        let _ = writeln!(w, " {{");
        stmts(w, &clause.body, 2);
        if !clause.events.is_empty() && !clause.body.is_empty() {
            let _ = writeln!(w, "        ;");
        }
        for event in &clause.events {
            let delay = match &event.delay {
                Delay::Literal(n) => n.to_string(),
                Delay::Field(f) => f.clone(),
            };
            let _ = writeln!(w, "        now + {} >> @{} {{", delay, event.trigger_state);
            stmts(w, &event.body, 3);
            let _ = writeln!(w, "        }} => @{}", event.target_state);
        }
        let _ = writeln!(w, "    }} => @{}", clause.target_state);
    }
    let _ = writeln!(w, "}}");
    out
}

fn stmts(w: &mut String, list: &[Stmt], depth: usize) {
    let pad = "    ".repeat(depth);
    for stmt in list {
        match stmt {
            Stmt::FieldSend { expr: e, target, .. } | Stmt::PartySend { expr: e, target, .. } => {
                let _ = writeln!(w, "{pad}{} -> {}", expr(e), target);
            }
            Stmt::AssetMove { expr: e, from, to, .. } => {
                let _ = writeln!(w, "{pad}({}) -o {}, {}", expr(e), from, to);
            }
            Stmt::AssetDrain { from, to, .. } => {
                let _ = writeln!(w, "{pad}{} -o {}", from, to);
            }
            Stmt::Conditional { cond, then_branch, else_branch, .. } => {
                let _ = writeln!(w, "{pad}if ({}) {{", expr(cond));
                stmts(w, then_branch, depth + 1);
                if else_branch.is_empty() {
                    let _ = writeln!(w, "{pad}}}");
                } else {
                    let _ = writeln!(w, "{pad}}} else {{");
                    stmts(w, else_branch, depth + 1);
                    let _ = writeln!(w, "{pad}}}");
                }
            }
        }
    }
}

pub fn expr(e: &Expr) -> String {
    render(e, 0)
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

fn render(e: &Expr, parent: u8) -> String {
    match &e.kind {
        ExprKind::Int(n) => n.to_string(),
        ExprKind::Bool(b) => b.to_string(),
        ExprKind::Str(s) => format!("\"{s}\""),
        ExprKind::Name(n) => n.clone(),
        ExprKind::Binary { op, lhs, rhs } => {
            let prec = precedence(*op);
            // Division prints tight (`w/cost_flour`), every other operator
            // spaced, following the house style of the listings.
            let text = if *op == BinOp::Div {
                format!("{}/{}", render(lhs, prec), render(rhs, prec + 1))
            } else {
                format!("{} {} {}", render(lhs, prec), op.symbol(), render(rhs, prec + 1))
            };
            if prec < parent {
                format!("({text})")
            } else {
                text
            }
        }
        ExprKind::Unary { op, operand } => {
            format!("{}{}", op.symbol(), render(operand, 6))
        }
    }
}
