//! Compiler and analysis toolkit for the Stipula legal-contract language.
//!
//! The pipeline: [`syntax`] parses and canonicalizes contracts, [`automaton`]
//! extracts the underlying state machine and enumerates its cycles,
//! [`analysis`] classifies assets and derives per-clause contracts,
//! [`interp`] is the reference interpreter of the operational semantics,
//! [`scenario`] linearizes execution paths, and [`codegen`] assembles and
//! prints the verifier-ready annotated Java unit.

pub mod analysis;
pub mod automaton;
pub mod codegen;
pub mod interp;
pub mod pipeline;
pub mod scenario;
pub mod syntax;

pub use analysis::{AssetKind, AssetModel, ClauseSpec};
pub use automaton::{Automaton, CycleReport, LinearTrace, Transition};
pub use interp::{Machine, RuntimeState};
pub use pipeline::{compile, Compiled};
pub use scenario::{LoopSegment, ScenarioPlan, ScenarioStep};
pub use syntax::{canonicalize, parse_contract, ContractAst, ParseError, StateId};
