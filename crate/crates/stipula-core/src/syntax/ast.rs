//! Abstract syntax of Stipula contracts.
//!
//! A contract declares assets, fields and parties, an agreement block fixing
//! the initial state, and a list of function clauses. Each clause may carry a
//! guard, a statement body and trailing timed events. Every node keeps the
//! source position of its head token for diagnostics.

use std::fmt;

pub type Ident = String;

/// Line/column of a token, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A control state of the contract (`@Name` in the surface syntax).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct StateId(pub String);

impl StateId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StateId {
    fn from(s: &str) -> Self {
        StateId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractAst {
    pub name: Ident,
    pub assets: Vec<Ident>,
    pub fields: Vec<Ident>,
    pub parties: Vec<Ident>,
    pub agreement: AgreementDecl,
    pub clauses: Vec<FunctionClause>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementDecl {
    pub bindings: Vec<AgreementBinding>,
    pub initial_state: StateId,
    pub pos: Pos,
}

/// One `A1, .., An : x1, .., xm` line of the agreement block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementBinding {
    pub parties: Vec<Ident>,
    pub fields: Vec<Ident>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionClause {
    pub source_state: StateId,
    pub party: Ident,
    pub name: Ident,
    pub value_params: Vec<Ident>,
    pub asset_params: Vec<Ident>,
    /// Absent guard means `true`.
    pub guard: Option<Expr>,
    pub body: Vec<Stmt>,
    pub events: Vec<EventClause>,
    pub target_state: StateId,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventClause {
    pub delay: Delay,
    pub trigger_state: StateId,
    pub body: Vec<Stmt>,
    pub target_state: StateId,
    /// 1-based, assigned by a single counter over the whole contract in
    /// textual order.
    pub event_index: u32,
    pub pos: Pos,
}

impl EventClause {
    /// Label used in automata and generated code (`ev1`, `ev2`, ..).
    pub fn label(&self) -> String {
        format!("ev{}", self.event_index)
    }
}

/// The `k` of `now + k`: a natural number or a field name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Delay {
    Literal(i64),
    Field(Ident),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    /// `E -> x` assigns the value of `E` to field `x`.
    FieldSend { expr: Expr, target: Ident, pos: Pos },
    /// `E -> A` sends the value of `E` to party `A` as a message.
    PartySend { expr: Expr, target: Ident, pos: Pos },
    /// `E -o h, X` moves `E` units out of `h` into asset or party `X`.
    AssetMove { expr: Expr, from: Ident, to: Ident, pos: Pos },
    /// `h -o X` empties `h` into asset or party `X` (whole content).
    AssetDrain { from: Ident, to: Ident, pos: Pos },
    Conditional {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
        pos: Pos,
    },
}

impl Stmt {
    pub fn pos(&self) -> Pos {
        match self {
            Stmt::FieldSend { pos, .. }
            | Stmt::PartySend { pos, .. }
            | Stmt::AssetMove { pos, .. }
            | Stmt::AssetDrain { pos, .. }
            | Stmt::Conditional { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Int(i64),
    Bool(bool),
    Str(String),
    /// Reference to a field, asset, or clause parameter.
    Name(Ident),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Unary {
        op: UnOp,
        operand: Box<Expr>,
    },
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Self {
        Expr { kind, pos }
    }

    /// The referenced name if the expression is a bare name.
    pub fn as_name(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Name(n) => Some(n),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum UnOp {
    Not,
    Neg,
}

impl UnOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Not => "!",
            UnOp::Neg => "-",
        }
    }
}

impl ContractAst {
    pub fn clause(&self, name: &str) -> Option<&FunctionClause> {
        self.clauses.iter().find(|c| c.name == name)
    }

    pub fn events(&self) -> impl Iterator<Item = (&FunctionClause, &EventClause)> {
        self.clauses
            .iter()
            .flat_map(|c| c.events.iter().map(move |e| (c, e)))
    }

    pub fn event(&self, index: u32) -> Option<&EventClause> {
        self.events().map(|(_, e)| e).find(|e| e.event_index == index)
    }

    /// Structural copy with all source positions zeroed, for comparisons that
    /// should ignore layout (round-trip tests).
    pub fn stripped(&self) -> ContractAst {
        fn strip_expr(e: &Expr) -> Expr {
            let kind = match &e.kind {
                ExprKind::Binary { op, lhs, rhs } => ExprKind::Binary {
                    op: *op,
                    lhs: Box::new(strip_expr(lhs)),
                    rhs: Box::new(strip_expr(rhs)),
                },
                ExprKind::Unary { op, operand } => ExprKind::Unary {
                    op: *op,
                    operand: Box::new(strip_expr(operand)),
                },
                k => k.clone(),
            };
            Expr { kind, pos: Pos::default() }
        }
        fn strip_stmts(stmts: &[Stmt]) -> Vec<Stmt> {
            stmts
                .iter()
                .map(|s| match s {
                    Stmt::FieldSend { expr, target, .. } => Stmt::FieldSend {
                        expr: strip_expr(expr),
                        target: target.clone(),
                        pos: Pos::default(),
                    },
                    Stmt::PartySend { expr, target, .. } => Stmt::PartySend {
                        expr: strip_expr(expr),
                        target: target.clone(),
                        pos: Pos::default(),
                    },
                    Stmt::AssetMove { expr, from, to, .. } => Stmt::AssetMove {
                        expr: strip_expr(expr),
                        from: from.clone(),
                        to: to.clone(),
                        pos: Pos::default(),
                    },
                    Stmt::AssetDrain { from, to, .. } => Stmt::AssetDrain {
                        from: from.clone(),
                        to: to.clone(),
                        pos: Pos::default(),
                    },
                    Stmt::Conditional { cond, then_branch, else_branch, .. } => Stmt::Conditional {
                        cond: strip_expr(cond),
                        then_branch: strip_stmts(then_branch),
                        else_branch: strip_stmts(else_branch),
                        pos: Pos::default(),
                    },
                })
                .collect()
        }
        ContractAst {
            name: self.name.clone(),
            assets: self.assets.clone(),
            fields: self.fields.clone(),
            parties: self.parties.clone(),
            agreement: AgreementDecl {
                bindings: self
                    .agreement
                    .bindings
                    .iter()
                    .map(|b| AgreementBinding {
                        parties: b.parties.clone(),
                        fields: b.fields.clone(),
                        pos: Pos::default(),
                    })
                    .collect(),
                initial_state: self.agreement.initial_state.clone(),
                pos: Pos::default(),
            },
            clauses: self
                .clauses
                .iter()
                .map(|c| FunctionClause {
                    source_state: c.source_state.clone(),
                    party: c.party.clone(),
                    name: c.name.clone(),
                    value_params: c.value_params.clone(),
                    asset_params: c.asset_params.clone(),
                    guard: c.guard.as_ref().map(strip_expr),
                    body: strip_stmts(&c.body),
                    events: c
                        .events
                        .iter()
                        .map(|e| EventClause {
                            delay: e.delay.clone(),
                            trigger_state: e.trigger_state.clone(),
                            body: strip_stmts(&e.body),
                            target_state: e.target_state.clone(),
                            event_index: e.event_index,
                            pos: Pos::default(),
                        })
                        .collect(),
                    target_state: c.target_state.clone(),
                    pos: Pos::default(),
                })
                .collect(),
            pos: Pos::default(),
        }
    }
}
