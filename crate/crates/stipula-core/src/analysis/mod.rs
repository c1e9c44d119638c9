//! Asset classification, ownership expansion, and clause contract derivation.
//!
//! Divisibility is inferred from usage: an asset that ever moves by an
//! explicit amount (`v -o h, X`) is divisible and becomes an `int` per owner;
//! an asset that is only drained whole (`h -o X`) is indivisible and becomes
//! a `boolean` ownership flag per owner. Asset parameters take the kind of
//! the declared asset they transfer with; a parameter that never touches a
//! declared asset is a free-standing payment and stays a non-negative
//! integer. Transfers that would tie assets of different kinds together are
//! surfaced as conflicts instead of being resolved silently.

mod eval;
mod spec;
mod term;
#[cfg(test)]
mod tests;

pub use eval::{eval_condition, eval_term, EvalContext};
pub use spec::{
    delay_term, delta_of, derive_clause_spec, fold, subst_old, ClauseRef, ClauseSpec, SymExec,
};
pub use term::{Effect, Location, Owner, SpecCondition, Term};

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::syntax::{BinOp, ContractAst, FunctionClause, Ident, Pos, Stmt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum AssetKind {
    Divisible,
    Indivisible,
}

/// Classification of one declared asset plus its ownership expansion: one
/// location per party and one for the contract itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AssetModel {
    pub asset: Ident,
    pub kind: AssetKind,
    pub owners: Vec<Owner>,
    /// Symbolic name of the conserved total, divisible assets only.
    pub total: Option<String>,
}

impl AssetModel {
    pub fn locations(&self) -> impl Iterator<Item = Location> + '_ {
        self.owners
            .iter()
            .map(|o| Location::Asset { owner: o.clone(), asset: self.asset.clone() })
    }
}

/// Kind and declared-asset association of one asset parameter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParamModel {
    pub clause: Ident,
    pub param: Ident,
    pub kind: AssetKind,
    /// The declared asset this parameter transfers with; `None` for
    /// free-standing payments, which are tracked as receipts only.
    pub alpha: Option<Ident>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("conflicting asset usage at {first} and {second}: {message}")]
    Conflict { message: String, first: Pos, second: Pos },
    #[error("wrong asset kind: {0}")]
    Kind(String),
    #[error("{pos}: unsupported construct: {message}")]
    Unsupported { pos: Pos, message: String },
}

/// Classification result for a whole contract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assets {
    pub models: Vec<AssetModel>,
    params: BTreeMap<(Ident, Ident), ParamModel>,
}

impl Assets {
    pub fn model(&self, asset: &str) -> Option<&AssetModel> {
        self.models.iter().find(|m| m.asset == asset)
    }

    pub fn kind(&self, asset: &str) -> Option<AssetKind> {
        self.model(asset).map(|m| m.kind)
    }

    pub fn param(&self, clause: &str, param: &str) -> Option<&ParamModel> {
        self.params.get(&(clause.to_string(), param.to_string()))
    }

    pub fn params(&self) -> impl Iterator<Item = &ParamModel> {
        self.params.values()
    }
}

/// Spec-facing entry point: the per-asset models alone.
pub fn classify_assets(ast: &ContractAst) -> Result<Vec<AssetModel>, AnalysisError> {
    classify(ast).map(|a| a.models)
}

pub fn classify(ast: &ContractAst) -> Result<Assets, AnalysisError> {
    let mut c = Classifier::new(ast);
    for clause in &ast.clauses {
        c.scan(&clause.body, Some(clause));
        for event in &clause.events {
            c.scan(&event.body, None);
        }
    }
    c.finish()
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Asset(usize),
    Param(usize),
}

struct Classifier<'a> {
    ast: &'a ContractAst,
    /// Divisibility witness per declared asset: position of a move touching it.
    divisible: Vec<Option<Pos>>,
    param_links: Vec<ParamLinks>,
    param_index: BTreeMap<(Ident, Ident), usize>,
    params: Vec<(Ident, Ident)>,
    /// Asset-to-asset transfers, checked for kind mismatches at the end.
    asset_edges: Vec<(usize, usize, Pos)>,
}

#[derive(Default)]
struct ParamLinks {
    /// Declared assets this parameter transfers with, with positions.
    assets: Vec<(usize, Pos)>,
    /// Position of a move statement using the parameter as an endpoint.
    divisible: Option<Pos>,
}

impl<'a> Classifier<'a> {
    fn new(ast: &'a ContractAst) -> Self {
        let mut param_index = BTreeMap::new();
        let mut params = Vec::new();
        for clause in &ast.clauses {
            for p in &clause.asset_params {
                param_index.insert((clause.name.clone(), p.clone()), params.len());
                params.push((clause.name.clone(), p.clone()));
            }
        }
        Classifier {
            ast,
            divisible: vec![None; ast.assets.len()],
            param_links: (0..params.len()).map(|_| ParamLinks::default()).collect(),
            param_index,
            params,
            asset_edges: Vec::new(),
        }
    }

    fn node(&self, name: &str, clause: Option<&FunctionClause>) -> Option<Node> {
        if let Some(c) = clause {
            if c.asset_params.iter().any(|p| p == name) {
                return Some(Node::Param(self.param_index[&(c.name.clone(), name.to_string())]));
            }
        }
        self.ast.assets.iter().position(|a| a == name).map(Node::Asset)
    }

    fn mark_divisible(&mut self, node: Node, pos: Pos) {
        match node {
            Node::Asset(i) => {
                self.divisible[i].get_or_insert(pos);
            }
            Node::Param(i) => {
                self.param_links[i].divisible.get_or_insert(pos);
            }
        }
    }

    fn link(&mut self, a: Node, b: Node, pos: Pos) {
        match (a, b) {
            (Node::Asset(x), Node::Asset(y)) => self.asset_edges.push((x, y, pos)),
            (Node::Param(p), Node::Asset(x)) | (Node::Asset(x), Node::Param(p)) => {
                self.param_links[p].assets.push((x, pos));
            }
            // A drain between two parameters carries no kind information of
            // its own; both default independently.
            (Node::Param(_), Node::Param(_)) => {}
        }
    }

    fn scan(&mut self, stmts: &[Stmt], clause: Option<&FunctionClause>) {
        for stmt in stmts {
            match stmt {
                Stmt::AssetMove { expr, from, to, pos } => {
                    // The longhand whole-asset form is drain evidence, not
                    // amount evidence.
                    if expr.as_name() == Some(from.as_str()) {
                        if let (Some(f), Some(t)) = (self.node(from, clause), self.node(to, clause))
                        {
                            self.link(f, t, *pos);
                        }
                        continue;
                    }
                    if let Some(f) = self.node(from, clause) {
                        self.mark_divisible(f, *pos);
                        if let Some(t) = self.node(to, clause) {
                            self.mark_divisible(t, *pos);
                            self.link(f, t, *pos);
                        }
                    }
                }
                Stmt::AssetDrain { from, to, pos } => {
                    if let (Some(f), Some(t)) = (self.node(from, clause), self.node(to, clause)) {
                        self.link(f, t, *pos);
                    }
                }
                Stmt::Conditional { then_branch, else_branch, .. } => {
                    self.scan(then_branch, clause);
                    self.scan(else_branch, clause);
                }
                _ => {}
            }
        }
    }

    fn finish(self) -> Result<Assets, AnalysisError> {
        let kinds: Vec<AssetKind> = self
            .divisible
            .iter()
            .map(|w| if w.is_some() { AssetKind::Divisible } else { AssetKind::Indivisible })
            .collect();

        // A transfer tying two declared assets of different kinds together is
        // not reconciled, it is reported.
        for (x, y, pos) in &self.asset_edges {
            if kinds[*x] != kinds[*y] {
                let (div, indiv) = if kinds[*x] == AssetKind::Divisible { (x, y) } else { (y, x) };
                return Err(AnalysisError::Conflict {
                    message: format!(
                        "asset `{}` moves by amount but transfers whole with indivisible `{}`",
                        self.ast.assets[*div], self.ast.assets[*indiv]
                    ),
                    first: self.divisible[*div].unwrap_or(*pos),
                    second: *pos,
                });
            }
        }

        let mut owners = vec![Owner::Contract];
        owners.extend(self.ast.parties.iter().cloned().map(Owner::Party));

        let models: Vec<AssetModel> = self
            .ast
            .assets
            .iter()
            .zip(&kinds)
            .map(|(asset, kind)| AssetModel {
                asset: asset.clone(),
                kind: *kind,
                owners: owners.clone(),
                total: match kind {
                    AssetKind::Divisible => Some(format!("kappa_{asset}")),
                    AssetKind::Indivisible => None,
                },
            })
            .collect();

        let mut params = BTreeMap::new();
        for (i, (clause, param)) in self.params.iter().enumerate() {
            let links = &self.param_links[i];
            let mut alpha: Option<(usize, Pos)> = None;
            for (asset, pos) in &links.assets {
                match alpha {
                    None => alpha = Some((*asset, *pos)),
                    Some((prev, prev_pos)) if prev != *asset && kinds[prev] != kinds[*asset] => {
                        return Err(AnalysisError::Conflict {
                            message: format!(
                                "parameter `{param}` of `{clause}` transfers with assets of both kinds"
                            ),
                            first: prev_pos,
                            second: *pos,
                        });
                    }
                    _ => {}
                }
            }
            if let (Some(mv), Some((asset, link_pos))) = (links.divisible, alpha) {
                if kinds[asset] == AssetKind::Indivisible {
                    return Err(AnalysisError::Conflict {
                        message: format!(
                            "parameter `{param}` of `{clause}` moves by amount but drains whole with indivisible `{}`",
                            self.ast.assets[asset]
                        ),
                        first: mv,
                        second: link_pos,
                    });
                }
            }
            let (kind, alpha_name) = match alpha {
                Some((asset, _)) => (kinds[asset], Some(self.ast.assets[asset].clone())),
                None => (AssetKind::Divisible, None),
            };
            params.insert(
                (clause.clone(), param.clone()),
                ParamModel {
                    clause: clause.clone(),
                    param: param.clone(),
                    kind,
                    alpha: alpha_name,
                },
            );
        }

        Ok(Assets { models, params })
    }
}

/// Property 1: an indivisible asset is owned by exactly one party or the
/// contract — the disjunction over owners of "X holds it and nobody else
/// does".
pub fn exclusivity_invariant(model: &AssetModel) -> Result<SpecCondition, AnalysisError> {
    if model.kind != AssetKind::Indivisible {
        return Err(AnalysisError::Kind(format!(
            "exclusivity invariant applies to indivisible assets, `{}` is divisible",
            model.asset
        )));
    }
    let loc =
        |o: &Owner| Term::Loc(Location::Asset { owner: o.clone(), asset: model.asset.clone() });
    let mut disjuncts = Vec::new();
    for holder in &model.owners {
        let mut conjuncts = vec![loc(holder)];
        for other in &model.owners {
            if other != holder {
                conjuncts.push(Term::not(loc(other)));
            }
        }
        disjuncts.push(Term::and_all(conjuncts));
    }
    let formula = disjuncts
        .into_iter()
        .reduce(|a, b| Term::bin(BinOp::Or, a, b))
        .unwrap_or(Term::Bool(true));
    Ok(SpecCondition::Formula(formula))
}

/// Property 2: the owner-sum of a divisible asset equals its constant total;
/// the total stays symbolic.
pub fn conservation_invariant(model: &AssetModel) -> Result<SpecCondition, AnalysisError> {
    if model.kind != AssetKind::Divisible {
        return Err(AnalysisError::Kind(format!(
            "conservation invariant applies to divisible assets, `{}` is indivisible",
            model.asset
        )));
    }
    let sum = model
        .locations()
        .map(Term::Loc)
        .reduce(Term::add)
        .expect("at least the contract owner");
    Ok(SpecCondition::Formula(Term::eq(
        sum,
        Term::param(model.total.clone().expect("divisible assets carry a total")),
    )))
}
