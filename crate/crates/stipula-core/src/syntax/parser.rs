//! Recursive-descent parser producing a `ContractAst`.
//!
//! Declarations are parsed before clause bodies, so send/transfer targets are
//! resolved against the declared assets, fields and parties as they are read.
//! Event clauses get a 1-based index from a single counter over the whole
//! contract in textual order.

use super::ast::*;
use super::lexer::{lex, Spanned, Tok};
use super::ParseError;

pub fn parse(source: &str) -> Result<ContractAst, ParseError> {
    let toks = lex(source)?;
    let mut p = Parser { toks, pos: 0, event_counter: 0 };
    let ast = p.contract()?;
    p.expect_eof()?;
    Ok(ast)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    event_counter: u32,
}

/// Declared names visible while parsing clause bodies.
struct Decls<'a> {
    assets: &'a [Ident],
    fields: &'a [Ident],
    parties: &'a [Ident],
}

impl Parser {
    fn cur(&self) -> &Spanned {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek(&self) -> &Tok {
        &self.cur().tok
    }

    fn here(&self) -> Pos {
        self.cur().pos
    }

    fn bump(&mut self) -> Spanned {
        let t = self.cur().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Pos, ParseError> {
        if self.peek() == &tok {
            Ok(self.bump().pos)
        } else {
            Err(ParseError::syntax(self.here(), what, &self.peek().describe()))
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        if self.peek() == &Tok::Eof {
            Ok(())
        } else {
            Err(ParseError::syntax(
                self.here(),
                "end of input",
                &self.peek().describe(),
            ))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(Ident, Pos), ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let pos = self.bump().pos;
                Ok((name, pos))
            }
            other => Err(ParseError::syntax(self.here(), what, &other.describe())),
        }
    }

    fn state(&mut self) -> Result<StateId, ParseError> {
        match self.peek().clone() {
            Tok::State(name) => {
                self.bump();
                Ok(StateId(name))
            }
            other => Err(ParseError::syntax(
                self.here(),
                "a state (`@Name`)",
                &other.describe(),
            )),
        }
    }

    /// Comma-separated identifiers; empty when the next token is not an
    /// identifier.
    fn ident_list(&mut self) -> Result<Vec<Ident>, ParseError> {
        let mut out = Vec::new();
        if !matches!(self.peek(), Tok::Ident(_)) {
            return Ok(out);
        }
        loop {
            let (name, _) = self.ident("an identifier")?;
            out.push(name);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(out)
    }

    fn contract(&mut self) -> Result<ContractAst, ParseError> {
        let pos = self.expect(Tok::KwStipula, "`stipula`")?;
        let (name, _) = self.ident("contract name")?;
        self.expect(Tok::LBrace, "`{`")?;

        let assets = if self.eat(&Tok::KwAsset) { self.ident_list()? } else { Vec::new() };
        let fields = if self.eat(&Tok::KwField) { self.ident_list()? } else { Vec::new() };

        let agr_pos = self.expect(Tok::KwAgreement, "`agreement`")?;
        self.expect(Tok::LParen, "`(`")?;
        let parties = self.ident_list()?;
        self.expect(Tok::RParen, "`)`")?;
        // The listings repeat the agreement fields in a second group; it is
        // redundant with the binding lines and only checked for consistency.
        let mut head_fields = None;
        if self.peek() == &Tok::LParen {
            self.bump();
            head_fields = Some(self.ident_list()?);
            self.expect(Tok::RParen, "`)`")?;
        }
        self.expect(Tok::LBrace, "`{`")?;
        let mut bindings = Vec::new();
        while self.peek() != &Tok::RBrace {
            let bpos = self.here();
            let bparties = self.ident_list()?;
            if bparties.is_empty() {
                return Err(ParseError::syntax(
                    self.here(),
                    "party name or `}`",
                    &self.peek().describe(),
                ));
            }
            self.expect(Tok::Colon, "`:`")?;
            let bfields = self.ident_list()?;
            bindings.push(AgreementBinding { parties: bparties, fields: bfields, pos: bpos });
        }
        self.expect(Tok::RBrace, "`}`")?;
        self.expect(Tok::Arrow, "`=>`")?;
        let initial_state = self.state()?;

        if let Some(hf) = &head_fields {
            for f in hf {
                if !fields.contains(f) {
                    return Err(ParseError::name(
                        agr_pos,
                        format!("agreement field `{f}` is not a declared field"),
                    ));
                }
            }
        }

        let decls = Decls { assets: &assets, fields: &fields, parties: &parties };
        let mut clauses = Vec::new();
        while self.peek() != &Tok::RBrace {
            clauses.push(self.clause(&decls)?);
        }
        self.expect(Tok::RBrace, "`}`")?;

        Ok(ContractAst {
            name,
            assets,
            fields,
            parties,
            agreement: AgreementDecl { bindings, initial_state, pos: agr_pos },
            clauses,
            pos,
        })
    }

    fn clause(&mut self, decls: &Decls) -> Result<FunctionClause, ParseError> {
        let source_state = self.state()?;
        let pos = self.here();
        let (party, _) = self.ident("party name")?;
        self.expect(Tok::Colon, "`:`")?;
        let (name, _) = self.ident("function name")?;
        self.expect(Tok::LParen, "`(`")?;
        let value_params = self.ident_list()?;
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::LBracket, "`[`")?;
        let asset_params = self.ident_list()?;
        self.expect(Tok::RBracket, "`]`")?;
        let guard = if self.peek() == &Tok::LParen {
            self.bump();
            let e = self.expr()?;
            self.expect(Tok::RParen, "`)`")?;
            Some(e)
        } else {
            None
        };
        self.expect(Tok::LBrace, "`{`")?;
        let scope = BodyScope { decls, asset_params: &asset_params };
        let body = self.stmts(&scope)?;
        let mut events = Vec::new();
        while self.peek() == &Tok::KwNow {
            events.push(self.event(decls)?);
            while self.eat(&Tok::Semi) {}
        }
        self.expect(Tok::RBrace, "`}`")?;
        self.expect(Tok::Arrow, "`=>`")?;
        let target_state = self.state()?;
        Ok(FunctionClause {
            source_state,
            party,
            name,
            value_params,
            asset_params,
            guard,
            body,
            events,
            target_state,
            pos,
        })
    }

    fn event(&mut self, decls: &Decls) -> Result<EventClause, ParseError> {
        let pos = self.expect(Tok::KwNow, "`now`")?;
        self.expect(Tok::Plus, "`+`")?;
        let delay = match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Delay::Literal(n)
            }
            Tok::Ident(name) => {
                let p = self.bump().pos;
                if !decls.fields.contains(&name) {
                    return Err(ParseError::name(
                        p,
                        format!("event delay `{name}` is not a declared field"),
                    ));
                }
                Delay::Field(name)
            }
            other => {
                return Err(ParseError::syntax(
                    self.here(),
                    "a number or field name",
                    &other.describe(),
                ))
            }
        };
        self.expect(Tok::Sched, "`>>`")?;
        let trigger_state = self.state()?;
        self.expect(Tok::LBrace, "`{`")?;
        // Event bodies see only contract-level names, never clause parameters:
        // the parameters are gone by the time the event fires.
        let scope = BodyScope { decls, asset_params: &[] };
        let body = self.stmts(&scope)?;
        self.expect(Tok::RBrace, "`}`")?;
        self.expect(Tok::Arrow, "`=>`")?;
        let target_state = self.state()?;
        self.event_counter += 1;
        Ok(EventClause {
            delay,
            trigger_state,
            body,
            target_state,
            event_index: self.event_counter,
            pos,
        })
    }

    fn stmts(&mut self, scope: &BodyScope) -> Result<Vec<Stmt>, ParseError> {
        let mut out = Vec::new();
        loop {
            while self.eat(&Tok::Semi) {}
            match self.peek() {
                Tok::RBrace | Tok::KwNow | Tok::Eof => break,
                _ => out.push(self.stmt(scope)?),
            }
        }
        Ok(out)
    }

    fn stmt(&mut self, scope: &BodyScope) -> Result<Stmt, ParseError> {
        if self.peek() == &Tok::KwIf {
            return self.conditional(scope);
        }
        let pos = self.here();
        let expr = self.expr()?;
        match self.peek() {
            Tok::Send => {
                self.bump();
                let (target, tpos) = self.ident("field or party name")?;
                if scope.decls.fields.contains(&target) {
                    Ok(Stmt::FieldSend { expr, target, pos })
                } else if scope.decls.parties.contains(&target) {
                    Ok(Stmt::PartySend { expr, target, pos })
                } else {
                    Err(ParseError::name(
                        tpos,
                        format!("`{target}` is not a declared field or party"),
                    ))
                }
            }
            Tok::Lolli => {
                self.bump();
                let (first, fpos) = self.ident("asset or party name")?;
                if self.eat(&Tok::Comma) {
                    // E -o h, X : move E units out of h into X
                    let (to, tpos) = self.ident("asset or party name")?;
                    if !scope.is_asset_name(&first) {
                        return Err(ParseError::name(
                            fpos,
                            format!("transfer source `{first}` is not an asset"),
                        ));
                    }
                    scope.check_transfer_target(&to, tpos)?;
                    Ok(Stmt::AssetMove { expr, from: first, to, pos })
                } else {
                    // h -o X : drain the whole of h into X
                    let from = match expr.as_name() {
                        Some(n) if scope.is_asset_name(n) => n.to_string(),
                        Some(n) => {
                            return Err(ParseError::name(
                                expr.pos,
                                format!("drain source `{n}` is not an asset"),
                            ))
                        }
                        None => {
                            return Err(ParseError::syntax(
                                expr.pos,
                                "an asset name before `-o` (or `-o h, X` with an amount)",
                                "an expression",
                            ))
                        }
                    };
                    scope.check_transfer_target(&first, fpos)?;
                    Ok(Stmt::AssetDrain { from, to: first, pos })
                }
            }
            other => Err(ParseError::syntax(
                self.here(),
                "`->` or `-o` after the expression",
                &other.describe(),
            )),
        }
    }

    fn conditional(&mut self, scope: &BodyScope) -> Result<Stmt, ParseError> {
        let pos = self.expect(Tok::KwIf, "`if`")?;
        self.expect(Tok::LParen, "`(`")?;
        let cond = self.expr()?;
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::LBrace, "`{`")?;
        let then_branch = self.stmts(scope)?;
        self.expect(Tok::RBrace, "`}`")?;
        let else_branch = if self.eat(&Tok::KwElse) {
            if self.peek() == &Tok::KwIf {
                vec![self.conditional(scope)?]
            } else {
                self.expect(Tok::LBrace, "`{`")?;
                let stmts = self.stmts(scope)?;
                self.expect(Tok::RBrace, "`}`")?;
                stmts
            }
        } else {
            Vec::new()
        };
        Ok(Stmt::Conditional { cond, then_branch, else_branch, pos })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.peek() == &Tok::OrOr {
            let pos = self.bump().pos;
            let rhs = self.and_expr()?;
            lhs = Expr::new(
                ExprKind::Binary { op: BinOp::Or, lhs: Box::new(lhs), rhs: Box::new(rhs) },
                pos,
            );
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.cmp_expr()?;
        while self.peek() == &Tok::AndAnd {
            let pos = self.bump().pos;
            let rhs = self.cmp_expr()?;
            lhs = Expr::new(
                ExprKind::Binary { op: BinOp::And, lhs: Box::new(lhs), rhs: Box::new(rhs) },
                pos,
            );
        }
        Ok(lhs)
    }

    fn cmp_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.add_expr()?;
        loop {
            let op = match self.peek() {
                Tok::EqEq => BinOp::Eq,
                Tok::NotEq => BinOp::Ne,
                Tok::Lt => BinOp::Lt,
                Tok::Le => BinOp::Le,
                Tok::Gt => BinOp::Gt,
                Tok::Ge => BinOp::Ge,
                _ => break,
            };
            let pos = self.bump().pos;
            let rhs = self.add_expr()?;
            lhs = Expr::new(
                ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) },
                pos,
            );
        }
        Ok(lhs)
    }

    fn add_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            let pos = self.bump().pos;
            let rhs = self.mul_expr()?;
            lhs = Expr::new(
                ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) },
                pos,
            );
        }
        Ok(lhs)
    }

    fn mul_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Tok::StarOp => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            let pos = self.bump().pos;
            let rhs = self.unary_expr()?;
            lhs = Expr::new(
                ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) },
                pos,
            );
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Bang => {
                let pos = self.bump().pos;
                let operand = self.unary_expr()?;
                Ok(Expr::new(ExprKind::Unary { op: UnOp::Not, operand: Box::new(operand) }, pos))
            }
            Tok::Minus => {
                let pos = self.bump().pos;
                let operand = self.unary_expr()?;
                Ok(Expr::new(ExprKind::Unary { op: UnOp::Neg, operand: Box::new(operand) }, pos))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.here();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::new(ExprKind::Int(n), pos))
            }
            Tok::KwTrue => {
                self.bump();
                Ok(Expr::new(ExprKind::Bool(true), pos))
            }
            Tok::KwFalse => {
                self.bump();
                Ok(Expr::new(ExprKind::Bool(false), pos))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::new(ExprKind::Str(s), pos))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Expr::new(ExprKind::Name(name), pos))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            other => Err(ParseError::syntax(pos, "an expression", &other.describe())),
        }
    }
}

struct BodyScope<'a> {
    decls: &'a Decls<'a>,
    asset_params: &'a [Ident],
}

impl BodyScope<'_> {
    fn is_asset_name(&self, name: &str) -> bool {
        self.decls.assets.iter().any(|a| a == name)
            || self.asset_params.iter().any(|a| a == name)
    }

    fn check_transfer_target(&self, name: &str, pos: Pos) -> Result<(), ParseError> {
        if self.decls.assets.iter().any(|a| a == name)
            || self.decls.parties.iter().any(|p| p == name)
        {
            Ok(())
        } else {
            Err(ParseError::name(
                pos,
                format!("transfer target `{name}` is not a declared asset or party"),
            ))
        }
    }
}
