//! Canonicalization of parsed contracts.
//!
//! After this pass every statement is one of the five canonical forms and no
//! transfer shorthand survives: `E -o h, X` where `E` is the bare name of `h`
//! (the longhand of a whole-asset drain) becomes `AssetDrain`. The pass is
//! idempotent and total on valid ASTs.

use super::ast::*;

pub fn canonicalize(ast: &ContractAst) -> ContractAst {
    let mut out = ast.clone();
    for clause in &mut out.clauses {
        canon_stmts(&mut clause.body);
        for event in &mut clause.events {
            canon_stmts(&mut event.body);
        }
    }
    out
}

fn canon_stmts(stmts: &mut Vec<Stmt>) {
    for stmt in stmts.iter_mut() {
        match stmt {
            Stmt::AssetMove { expr, from, to, pos } => {
                if expr.as_name() == Some(from.as_str()) {
                    *stmt = Stmt::AssetDrain { from: from.clone(), to: to.clone(), pos: *pos };
                }
            }
            Stmt::Conditional { then_branch, else_branch, .. } => {
                canon_stmts(then_branch);
                canon_stmts(else_branch);
            }
            _ => {}
        }
    }
}
