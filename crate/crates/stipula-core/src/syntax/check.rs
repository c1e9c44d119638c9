//! Name resolution and the small static type discipline.
//!
//! Types are `Num`, `Bool` and `Str`. Assets and asset parameters are always
//! numeric quantities. Fields and value parameters are inferred from use and
//! default to `Num` when nothing constrains them. Arithmetic is numeric only,
//! comparisons yield booleans, equality requires both sides to agree, and
//! guards must be boolean.

use std::collections::BTreeMap;

use super::ast::*;
use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Num,
    Bool,
    Str,
}

impl Ty {
    pub fn name(self) -> &'static str {
        match self {
            Ty::Num => "number",
            Ty::Bool => "boolean",
            Ty::Str => "string",
        }
    }
}

/// Inferred types for fields and value parameters.
#[derive(Debug, Clone, Default)]
pub struct TypeInfo {
    pub fields: BTreeMap<Ident, Ty>,
    /// Keyed by (clause name, parameter name).
    pub value_params: BTreeMap<(Ident, Ident), Ty>,
}

pub fn check(ast: &ContractAst) -> Result<TypeInfo, ParseError> {
    check_declarations(ast)?;
    check_agreement(ast)?;
    infer_types(ast)
}

fn check_declarations(ast: &ContractAst) -> Result<(), ParseError> {
    let mut seen: BTreeMap<&str, &str> = BTreeMap::new();
    for (kind, names) in [
        ("asset", &ast.assets),
        ("field", &ast.fields),
        ("party", &ast.parties),
    ] {
        for name in names {
            if let Some(prev) = seen.insert(name, kind) {
                return Err(ParseError::name(
                    ast.pos,
                    format!("`{name}` declared twice (as {prev} and as {kind})"),
                ));
            }
        }
    }
    let mut clause_names: BTreeMap<&str, Pos> = BTreeMap::new();
    for clause in &ast.clauses {
        if clause_names.insert(&clause.name, clause.pos).is_some() {
            return Err(ParseError::name(
                clause.pos,
                format!("function `{}` declared twice; function names must be pairwise different", clause.name),
            ));
        }
        if !ast.parties.contains(&clause.party) {
            return Err(ParseError::name(
                clause.pos,
                format!("`{}` is not a declared party", clause.party),
            ));
        }
        let mut params: BTreeMap<&str, &str> = BTreeMap::new();
        for (kind, list) in [("value", &clause.value_params), ("asset", &clause.asset_params)] {
            for p in list {
                if params.insert(p, kind).is_some() {
                    return Err(ParseError::name(
                        clause.pos,
                        format!("parameter `{p}` declared twice in `{}`", clause.name),
                    ));
                }
                if seen.contains_key(p.as_str()) {
                    return Err(ParseError::name(
                        clause.pos,
                        format!("parameter `{p}` of `{}` shadows a declared name", clause.name),
                    ));
                }
            }
        }
    }
    Ok(())
}

fn check_agreement(ast: &ContractAst) -> Result<(), ParseError> {
    let mut bound_fields: BTreeMap<&str, Pos> = BTreeMap::new();
    for binding in &ast.agreement.bindings {
        for p in &binding.parties {
            if !ast.parties.contains(p) {
                return Err(ParseError::name(
                    binding.pos,
                    format!("agreement party `{p}` is not declared"),
                ));
            }
        }
        for f in &binding.fields {
            if !ast.fields.contains(f) {
                return Err(ParseError::name(
                    binding.pos,
                    format!("agreement field `{f}` is not declared"),
                ));
            }
            // Field sets of distinct bindings must be disjoint; within one
            // binding a joint party set is fine (the listings use it).
            if bound_fields.insert(f, binding.pos).is_some() {
                return Err(ParseError::name(
                    binding.pos,
                    format!("field `{f}` is bound by two agreement lines"),
                ));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// type inference
// ---------------------------------------------------------------------------

/// Union-find over typing keys, with an optional resolved type per class.
struct Unifier {
    parent: Vec<usize>,
    ty: Vec<Option<Ty>>,
    keys: BTreeMap<String, usize>,
}

impl Unifier {
    fn new() -> Self {
        Unifier { parent: Vec::new(), ty: Vec::new(), keys: BTreeMap::new() }
    }

    fn var(&mut self, key: String) -> usize {
        if let Some(&v) = self.keys.get(&key) {
            return v;
        }
        let v = self.parent.len();
        self.parent.push(v);
        self.ty.push(None);
        self.keys.insert(key, v);
        v
    }

    fn fresh(&mut self) -> usize {
        let v = self.parent.len();
        self.parent.push(v);
        self.ty.push(None);
        v
    }

    fn find(&mut self, v: usize) -> usize {
        if self.parent[v] != v {
            let root = self.find(self.parent[v]);
            self.parent[v] = root;
        }
        self.parent[v]
    }

    fn bind(&mut self, v: usize, t: Ty, pos: Pos) -> Result<(), ParseError> {
        let r = self.find(v);
        match self.ty[r] {
            None => {
                self.ty[r] = Some(t);
                Ok(())
            }
            Some(prev) if prev == t => Ok(()),
            Some(prev) => Err(ParseError::ty(
                pos,
                format!("type mismatch: expected {}, found {}", t.name(), prev.name()),
            )),
        }
    }

    fn unify(&mut self, a: usize, b: usize, pos: Pos) -> Result<(), ParseError> {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return Ok(());
        }
        match (self.ty[ra], self.ty[rb]) {
            (Some(ta), Some(tb)) if ta != tb => {
                return Err(ParseError::ty(
                    pos,
                    format!("type mismatch: {} vs {}", ta.name(), tb.name()),
                ));
            }
            _ => {}
        }
        let t = self.ty[ra].or(self.ty[rb]);
        self.parent[ra] = rb;
        self.ty[rb] = t;
        Ok(())
    }

    fn resolved(&mut self, v: usize) -> Option<Ty> {
        let r = self.find(v);
        self.ty[r]
    }
}

struct TypeCk<'a> {
    ast: &'a ContractAst,
    uf: Unifier,
}

fn field_key(name: &str) -> String {
    format!("field:{name}")
}

fn param_key(clause: &str, name: &str) -> String {
    format!("param:{clause}:{name}")
}

pub fn infer_types(ast: &ContractAst) -> Result<TypeInfo, ParseError> {
    let mut ck = TypeCk { ast, uf: Unifier::new() };
    for clause in &ast.clauses {
        let scope = Scope { clause: Some(clause) };
        if let Some(guard) = &clause.guard {
            let v = ck.expr(guard, &scope)?;
            ck.uf.bind(v, Ty::Bool, guard.pos)?;
        }
        ck.stmts(&clause.body, &scope)?;
        for event in &clause.events {
            if let Delay::Field(f) = &event.delay {
                let v = ck.uf.var(field_key(f));
                ck.uf.bind(v, Ty::Num, event.pos)?;
            }
            ck.stmts(&event.body, &Scope { clause: None })?;
        }
    }
    let mut info = TypeInfo::default();
    for f in &ast.fields {
        let v = ck.uf.var(field_key(f));
        info.fields.insert(f.clone(), ck.uf.resolved(v).unwrap_or(Ty::Num));
    }
    for clause in &ast.clauses {
        for p in &clause.value_params {
            let v = ck.uf.var(param_key(&clause.name, p));
            info.value_params.insert(
                (clause.name.clone(), p.clone()),
                ck.uf.resolved(v).unwrap_or(Ty::Num),
            );
        }
    }
    Ok(info)
}

struct Scope<'a> {
    clause: Option<&'a FunctionClause>,
}

impl TypeCk<'_> {
    fn stmts(&mut self, stmts: &[Stmt], scope: &Scope) -> Result<(), ParseError> {
        for stmt in stmts {
            match stmt {
                Stmt::FieldSend { expr, target, .. } => {
                    let v = self.expr(expr, scope)?;
                    let fv = self.uf.var(field_key(target));
                    self.uf.unify(v, fv, expr.pos)?;
                }
                Stmt::PartySend { expr, .. } => {
                    // Messages may carry any value, strings included.
                    self.expr(expr, scope)?;
                }
                Stmt::AssetMove { expr, .. } => {
                    let v = self.expr(expr, scope)?;
                    self.uf.bind(v, Ty::Num, expr.pos)?;
                }
                Stmt::AssetDrain { .. } => {}
                Stmt::Conditional { cond, then_branch, else_branch, .. } => {
                    let v = self.expr(cond, scope)?;
                    self.uf.bind(v, Ty::Bool, cond.pos)?;
                    self.stmts(then_branch, scope)?;
                    self.stmts(else_branch, scope)?;
                }
            }
        }
        Ok(())
    }

    fn name_var(&mut self, name: &str, pos: Pos, scope: &Scope) -> Result<usize, ParseError> {
        if let Some(clause) = scope.clause {
            if clause.value_params.iter().any(|p| p == name) {
                return Ok(self.uf.var(param_key(&clause.name, name)));
            }
            if clause.asset_params.iter().any(|p| p == name) {
                let v = self.uf.var(param_key(&clause.name, name));
                self.uf.bind(v, Ty::Num, pos)?;
                return Ok(v);
            }
        }
        if self.ast.fields.iter().any(|f| f == name) {
            return Ok(self.uf.var(field_key(name)));
        }
        if self.ast.assets.iter().any(|a| a == name) {
            let v = self.uf.var(format!("asset:{name}"));
            self.uf.bind(v, Ty::Num, pos)?;
            return Ok(v);
        }
        if self.ast.parties.iter().any(|p| p == name) {
            return Err(ParseError::name(
                pos,
                format!("party `{name}` cannot be used in an expression"),
            ));
        }
        Err(ParseError::name(pos, format!("`{name}` is not declared")))
    }

    fn expr(&mut self, expr: &Expr, scope: &Scope) -> Result<usize, ParseError> {
        match &expr.kind {
            ExprKind::Int(_) => {
                let v = self.uf.fresh();
                self.uf.bind(v, Ty::Num, expr.pos)?;
                Ok(v)
            }
            ExprKind::Bool(_) => {
                let v = self.uf.fresh();
                self.uf.bind(v, Ty::Bool, expr.pos)?;
                Ok(v)
            }
            ExprKind::Str(_) => {
                let v = self.uf.fresh();
                self.uf.bind(v, Ty::Str, expr.pos)?;
                Ok(v)
            }
            ExprKind::Name(name) => self.name_var(name, expr.pos, scope),
            ExprKind::Binary { op, lhs, rhs } => {
                let lv = self.expr(lhs, scope)?;
                let rv = self.expr(rhs, scope)?;
                let out = self.uf.fresh();
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                        self.uf.bind(lv, Ty::Num, lhs.pos)?;
                        self.uf.bind(rv, Ty::Num, rhs.pos)?;
                        self.uf.bind(out, Ty::Num, expr.pos)?;
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        self.uf.bind(lv, Ty::Num, lhs.pos)?;
                        self.uf.bind(rv, Ty::Num, rhs.pos)?;
                        self.uf.bind(out, Ty::Bool, expr.pos)?;
                    }
                    BinOp::Eq | BinOp::Ne => {
                        self.uf.unify(lv, rv, expr.pos)?;
                        self.uf.bind(out, Ty::Bool, expr.pos)?;
                    }
                    BinOp::And | BinOp::Or => {
                        self.uf.bind(lv, Ty::Bool, lhs.pos)?;
                        self.uf.bind(rv, Ty::Bool, rhs.pos)?;
                        self.uf.bind(out, Ty::Bool, expr.pos)?;
                    }
                }
                Ok(out)
            }
            ExprKind::Unary { op, operand } => {
                let v = self.expr(operand, scope)?;
                match op {
                    UnOp::Not => self.uf.bind(v, Ty::Bool, operand.pos)?,
                    UnOp::Neg => self.uf.bind(v, Ty::Num, operand.pos)?,
                }
                Ok(v)
            }
        }
    }
}
