//! Lexing, parsing, validation and canonicalization of Stipula source.

mod ast;
mod canon;
pub mod check;
mod lexer;
mod parser;
pub mod pretty;

pub use ast::*;
pub use canon::canonicalize;
pub use check::{infer_types, Ty, TypeInfo};

use thiserror::Error;

/// Parse-time failures: malformed syntax, unresolved or duplicate names, and
/// type errors. Every variant carries the source position.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{pos}: syntax error: expected {expected}, found {found}")]
    Syntax { pos: Pos, expected: String, found: String },
    #[error("{pos}: name error: {message}")]
    Name { pos: Pos, message: String },
    #[error("{pos}: type error: {message}")]
    Type { pos: Pos, message: String },
}

impl ParseError {
    pub(crate) fn syntax(pos: Pos, expected: &str, found: &str) -> Self {
        ParseError::Syntax { pos, expected: expected.to_string(), found: found.to_string() }
    }

    pub(crate) fn name(pos: Pos, message: String) -> Self {
        ParseError::Name { pos, message }
    }

    pub(crate) fn ty(pos: Pos, message: String) -> Self {
        ParseError::Type { pos, message }
    }

    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::Name { pos, .. }
            | ParseError::Type { pos, .. } => *pos,
        }
    }
}

/// Parse and validate a contract. The returned AST satisfies all declaration
/// invariants; transfer shorthands are kept as written (see [`canonicalize`]).
pub fn parse_contract(source: &str) -> Result<ContractAst, ParseError> {
    let ast = parser::parse(source)?;
    let info = check::check(&ast)?;
    for (field, ty) in &info.fields {
        if *ty == Ty::Str {
            return Err(ParseError::ty(
                ast.pos,
                format!("field `{field}` would hold a string; strings are only allowed as message payloads and equality operands"),
            ));
        }
    }
    Ok(ast)
}
