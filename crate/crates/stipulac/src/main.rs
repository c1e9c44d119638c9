//! Batch driver for the Stipula toolchain.
//!
//! Subcommands mirror the pipeline: `check` parses and analyzes the
//! automaton, `graph` exports DOT, `report` dumps the asset and clause
//! analysis, `plan` the scenario plans, `translate` writes the annotated
//! compilation unit, `run` interprets a trace, and `verify` hands the unit to
//! an external prover when one is configured.
//!
//! Exit codes: 0 success, 1 syntax or semantic error, 2 overlapping cycles,
//! 3 write failure, 4 trace failure, 5 open proof obligations.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stipula_core::analysis::{self, SpecCondition};
use stipula_core::automaton::{build_automaton, enumerate_cycles, to_dot};
use stipula_core::codegen::{
    render, render_term, verify_external, TermStyle, DEFAULT_TIMEOUT_SECS,
};
use stipula_core::interp::{Machine, TraceStep};
use stipula_core::pipeline::{compile, CompileError};
use stipula_core::scenario::{synthesize_loop_invariant, ScenarioError};
use stipula_core::syntax::{canonicalize, parse_contract};

#[derive(Parser)]
#[command(name = "stipulac", version, about = "Stipula contract compiler and analyzer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Machine-readable output where applicable.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a contract and check that its cycles are disjoint.
    Check { file: PathBuf },
    /// Export the underlying automaton as a DOT digraph.
    Graph {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Dump the asset classification and per-clause contracts.
    Report {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Dump the scenario plans.
    Plan {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Translate the contract into an annotated compilation unit.
    Translate {
        file: PathBuf,
        /// Defaults to <Contract>.java in the current directory.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Interpret a recorded trace and print the final state.
    Run {
        file: PathBuf,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Translate, then hand the unit to an external prover.
    Verify {
        file: PathBuf,
        /// Prover command; falls back to the STIPULAC_PROVER environment
        /// variable. Without either the verification is reported skipped.
        #[arg(long)]
        prover: Option<String>,
        #[arg(long, default_value_t = DEFAULT_TIMEOUT_SECS)]
        timeout: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

#[derive(Debug)]
struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        CliError { message: message.into(), code }
    }

    fn exit_code(&self) -> u8 {
        self.code
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(3, e.to_string())
    }
}

impl From<CompileError> for CliError {
    fn from(e: CompileError) -> Self {
        match &e {
            CompileError::Scenario(ScenarioError::NotDisjoint(overlap)) => {
                let shared: Vec<String> =
                    overlap.shared.iter().map(|s| s.to_string()).collect();
                CliError::new(2, format!("cycles overlap at {}", shared.join(", ")))
            }
            _ => CliError::new(1, e.to_string()),
        }
    }
}

fn read_source(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::new(1, format!("{}: {e}", path.display())))
}

fn dispatch(cli: &Cli) -> Result<ExitCode, CliError> {
    match &cli.command {
        Command::Check { file } => cmd_check(file, cli.json),
        Command::Graph { file, output } => cmd_graph(file, output.as_deref()),
        Command::Report { file, output } => cmd_report(file, output.as_deref()),
        Command::Plan { file, output } => cmd_plan(file, output.as_deref()),
        Command::Translate { file, output } => cmd_translate(file, output.as_deref()),
        Command::Run { file, trace } => cmd_run(file, trace, cli.json),
        Command::Verify { file, prover, timeout, output } => {
            cmd_verify(file, prover.as_deref(), *timeout, output.as_deref())
        }
    }
}

fn cmd_check(file: &Path, json: bool) -> Result<ExitCode, CliError> {
    let source = read_source(file)?;
    let ast = canonicalize(
        &parse_contract(&source).map_err(|e| CliError::new(1, e.to_string()))?,
    );
    analysis::classify(&ast).map_err(|e| CliError::new(1, e.to_string()))?;
    let automaton = build_automaton(&ast);
    for state in automaton.unreachable_states() {
        eprintln!("warning: state {state} is unreachable from {}", automaton.initial);
    }
    let report = enumerate_cycles(&automaton);
    if json {
        println!(
            "{}",
            serde_json::json!({
                "contract": ast.name,
                "states": automaton.states.len(),
                "transitions": automaton.transitions.len(),
                "cycles": report.cycles.len(),
                "disjoint": report.disjoint,
                "witness": report.witness,
            })
        );
    } else {
        let plural = if report.cycles.len() == 1 { "cycle" } else { "cycles" };
        if report.disjoint {
            println!("{} {plural}, disjoint", report.cycles.len());
        } else {
            println!("{} {plural}, not disjoint", report.cycles.len());
        }
    }
    if let Some(overlap) = &report.witness {
        let shared: Vec<String> = overlap.shared.iter().map(|s| s.to_string()).collect();
        eprintln!("error: cycles overlap at {}", shared.join(", "));
        eprintln!("  first:  {}", overlap.first);
        eprintln!("  second: {}", overlap.second);
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_graph(file: &Path, output: Option<&Path>) -> Result<ExitCode, CliError> {
    let source = read_source(file)?;
    let ast = canonicalize(
        &parse_contract(&source).map_err(|e| CliError::new(1, e.to_string()))?,
    );
    let dot = to_dot(&build_automaton(&ast));
    emit(output, dot.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(file: &Path, output: Option<&Path>) -> Result<ExitCode, CliError> {
    let source = read_source(file)?;
    let compiled = compile(&source)?;
    let contract = compiled.ast.name.as_str();
    let requires_style = TermStyle::requires(contract);
    let ensures_style = TermStyle::ensures(contract);
    let clauses: Vec<serde_json::Value> = compiled
        .specs
        .iter()
        .map(|spec| {
            let requires: Vec<String> = spec
                .pre_formulas()
                .map(|t| render_term(t, &requires_style))
                .collect();
            let effects: Vec<String> = spec
                .post
                .iter()
                .map(|e| {
                    format!(
                        "{} := {}",
                        e.loc.qualified(contract),
                        render_term(&e.value, &ensures_style)
                    )
                })
                .collect();
            let frame: Vec<String> = spec.frame.iter().map(|l| l.qualified(contract)).collect();
            serde_json::json!({
                "method": spec.clause.method_name(),
                "requires": requires,
                "effects": effects,
                "assignable": frame,
            })
        })
        .collect();
    let report = serde_json::json!({
        "contract": contract,
        "assets": compiled.assets.models,
        "parameters": compiled.assets.params().collect::<Vec<_>>(),
        "clauses": clauses,
    });
    emit(output, format!("{}\n", serde_json::to_string_pretty(&report).unwrap()).as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_plan(file: &Path, output: Option<&Path>) -> Result<ExitCode, CliError> {
    let source = read_source(file)?;
    let compiled = compile(&source)?;
    let contract = compiled.ast.name.as_str();
    let loop_style = TermStyle { contract, unqualified_contract: true, old_as_plain: false };
    let plans: Vec<serde_json::Value> = compiled
        .plans
        .iter()
        .map(|plan| {
            let invariants: Vec<String> = plan
                .loop_segment
                .as_ref()
                .map(|seg| {
                    synthesize_loop_invariant(seg, &compiled.assets)
                        .unwrap_or_default()
                        .iter()
                        .map(|c| match c {
                            SpecCondition::Formula(t) => render_term(t, &loop_style),
                            SpecCondition::Variant(t) => {
                                format!("decreases {}", render_term(t, &loop_style))
                            }
                            other => format!("{other:?}"),
                        })
                        .collect()
                })
                .unwrap_or_default();
            serde_json::json!({
                "name": plan.name,
                "steps": plan.steps,
                "loop": plan.loop_segment,
                "loop_invariant": invariants,
            })
        })
        .collect();
    let body = serde_json::json!({ "contract": contract, "plans": plans });
    emit(output, format!("{}\n", serde_json::to_string_pretty(&body).unwrap()).as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_translate(file: &Path, output: Option<&Path>) -> Result<ExitCode, CliError> {
    let source = read_source(file)?;
    let compiled = compile(&source)?;
    let text = render(&compiled.unit);
    let target = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(format!("{}.java", compiled.ast.name)));
    write_atomically(&target, text.as_bytes())?;
    let scenarios = compiled.plans.len();
    let events = compiled.ast.events().count();
    let clauses = compiled.ast.clauses.len();
    let invariants = compiled.unit.invariants.len();
    println!(
        "{}: {clauses} clause methods, {events} event methods, {scenarios} scenarios, {invariants} invariants -> {}",
        compiled.ast.name,
        target.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(file: &Path, trace: &Path, json: bool) -> Result<ExitCode, CliError> {
    let source = read_source(file)?;
    let ast = canonicalize(
        &parse_contract(&source).map_err(|e| CliError::new(1, e.to_string()))?,
    );
    let machine = Machine::new(&ast).map_err(|e| CliError::new(1, e.to_string()))?;
    let text = std::fs::read_to_string(trace)
        .map_err(|e| CliError::new(4, format!("{}: {e}", trace.display())))?;
    let steps: Vec<TraceStep> = serde_json::from_str(&text)
        .map_err(|e| CliError::new(4, format!("invalid trace: {e}")))?;
    let final_state = machine
        .run_trace(&steps)
        .map_err(|e| CliError::new(4, e.to_string()))?;
    let state_json = final_state.to_json(&ast.name);
    if json {
        println!("{state_json}");
    } else {
        println!("{}", serde_json::to_string_pretty(&state_json).unwrap());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(
    file: &Path,
    prover: Option<&str>,
    timeout: u64,
    output: Option<&Path>,
) -> Result<ExitCode, CliError> {
    let source = read_source(file)?;
    let compiled = compile(&source)?;
    let text = render(&compiled.unit);
    let target = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(format!("{}.java", compiled.ast.name)));
    write_atomically(&target, text.as_bytes())?;

    let from_env = std::env::var("STIPULAC_PROVER").ok();
    let command = prover.map(str::to_string).or(from_env);
    let report = verify_external(&target, command.as_deref(), timeout)
        .map_err(|e| CliError::new(5, e.to_string()))?;
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    if report.skipped {
        eprintln!("verification skipped: no prover configured");
        return Ok(ExitCode::SUCCESS);
    }
    if report.all_closed() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(5))
    }
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match output {
        Some(path) => write_atomically(path, bytes),
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

/// Artifacts appear whole or not at all: write a sibling temp file, then
/// rename over the target.
fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut temp = path.as_os_str().to_owned();
    temp.push(".tmp");
    let temp = PathBuf::from(temp);
    let write = || -> std::io::Result<()> {
        std::fs::write(&temp, bytes)?;
        std::fs::rename(&temp, path)
    };
    write().map_err(|e| {
        let _ = std::fs::remove_file(&temp);
        CliError::new(3, format!("{}: {e}", path.display()))
    })
}
