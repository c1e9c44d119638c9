//! The whole compilation pipeline in one call.

use thiserror::Error;

use crate::analysis::{self, AnalysisError, Assets, ClauseRef, ClauseSpec};
use crate::automaton::{build_automaton, enumerate_cycles, Automaton, CycleReport};
use crate::codegen::{self, CodegenError, TargetUnit};
use crate::scenario::{enumerate_scenarios, ScenarioError, ScenarioPlan};
use crate::syntax::{self, ContractAst, ParseError, TypeInfo};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Codegen(#[from] CodegenError),
}

/// Everything the pipeline produces for one contract. `ast` is canonical.
pub struct Compiled {
    pub ast: ContractAst,
    pub type_info: TypeInfo,
    pub assets: Assets,
    pub automaton: Automaton,
    pub cycles: CycleReport,
    pub specs: Vec<ClauseSpec>,
    pub plans: Vec<ScenarioPlan>,
    pub unit: TargetUnit,
}

pub fn compile(source: &str) -> Result<Compiled, CompileError> {
    let parsed = syntax::parse_contract(source)?;
    let type_info = syntax::infer_types(&parsed)?;
    let ast = syntax::canonicalize(&parsed);
    let assets = analysis::classify(&ast)?;
    let automaton = build_automaton(&ast);
    let cycles = enumerate_cycles(&automaton);

    let mut specs = Vec::new();
    for clause in &ast.clauses {
        specs.push(analysis::derive_clause_spec(
            &ast,
            &assets,
            ClauseRef::Function(clause.name.clone()),
        )?);
    }
    for (_, event) in ast.events() {
        specs.push(analysis::derive_clause_spec(
            &ast,
            &assets,
            ClauseRef::Event(event.event_index),
        )?);
    }

    let plans = enumerate_scenarios(&automaton, &cycles, &ast, &assets)?;
    let unit = codegen::lower(&ast, &type_info, &assets, &specs, &plans)?;

    Ok(Compiled { ast, type_info, assets, automaton, cycles, specs, plans, unit })
}
