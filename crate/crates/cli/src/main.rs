//! Command-line front end: `solve` answers a query over program files,
//! `rewrite` prints the rewritten program instead of evaluating it, and
//! `gen` emits the synthetic benchmark families.
//!
//! Exit codes: 0 on success, 1 when the program (or its rewriting) violates
//! a semantic precondition such as safety or stratification, 2 on parse and
//! I/O errors.

use std::collections::BTreeSet;
use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use magus_core::ast::{Atom, Program, SymbolTable};
use magus_core::depgraph::build_dependency_graph;
use magus_core::eval::{render_fact, Value};
use magus_core::gen::{generate, Family};
use magus_core::parser::{parse_query, parse_rules_into, render};
use magus_core::pipeline::{
    rewrite_program, run_pipeline, PipelineConfig, PipelineError, RewriteMode,
};

#[derive(Parser)]
#[command(name = "magus", version, about = "Datalog engine with magic-set query rewriting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Answer a query over the given program files.
    Solve(SolveArgs),
    /// Print the rewritten program without evaluating it.
    Rewrite(SolveArgs),
    /// Generate a synthetic benchmark instance (families pi1, pi2, pi3).
    Gen(GenArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    None,
    Ms,
    MsRs,
}

impl From<ModeArg> for RewriteMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::None => RewriteMode::None,
            ModeArg::Ms => RewriteMode::Ms,
            ModeArg::MsRs => RewriteMode::MsRs,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Program files (UTF-8, concatenated in order).
    #[arg(required = true)]
    files: Vec<String>,

    /// The query atom, e.g. "c(0,Y)".
    #[arg(long)]
    query: String,

    /// Rewriting applied before evaluation.
    #[arg(long, value_enum, default_value = "ms-rs")]
    rewrite: ModeArg,

    /// Keep redundant adorned versions even when a full-free one exists.
    #[arg(long)]
    no_fullfree: bool,

    /// Skip subsumed-rule elimination.
    #[arg(long)]
    no_subsumption: bool,

    /// Print rewriting/subsumption counters and per-stage wall-clock times.
    #[arg(long)]
    stats: bool,

    /// Print the rewritten program before the answers.
    #[arg(long)]
    dump_rewritten: bool,

    /// Print the dependency graph of the evaluated program in DOT format.
    #[arg(long)]
    dump_depgraph: bool,
}

#[derive(Args)]
struct GenArgs {
    /// Benchmark family.
    family: Family,

    /// Instance size; facts run from 0 to base*size.
    #[arg(value_parser = clap::value_parser!(u64).range(1..))]
    size: u64,

    /// Interval base.
    #[arg(long, default_value_t = 1_000_000)]
    base: u64,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn parse(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn semantic(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

fn load_program(files: &[String]) -> Result<Program, Failure> {
    let mut symbols = SymbolTable::new();
    let mut rules = Vec::new();
    for file in files {
        let text = fs::read_to_string(file)
            .map_err(|e| Failure::parse(format!("{}: {}", file, e)))?;
        let parsed = parse_rules_into(&text, &mut symbols)
            .map_err(|e| Failure::parse(format!("{}: {}", file, e)))?;
        rules.extend(parsed);
    }
    Ok(Program { rules, symbols })
}

fn check_safety(program: &Program) -> Result<(), Failure> {
    let report = program.safety_report();
    if report.is_empty() {
        return Ok(());
    }
    let mut message = String::new();
    for (idx, vars) in &report {
        let rule = &program.rules[*idx];
        let names: Vec<String> = vars
            .iter()
            .map(|u| {
                format!(
                    "{} ({})",
                    rule.var_names[u.var.0 as usize],
                    match u.reason {
                        magus_core::ast::UnsafeReason::Global => "global",
                        magus_core::ast::UnsafeReason::Local => "local",
                    }
                )
            })
            .collect();
        message.push_str(&format!(
            "unsafe rule: {}  [unsafe variables: {}]\n",
            magus_core::parser::render_rule(rule, &program.symbols),
            names.join(", ")
        ));
    }
    Err(Failure::semantic(message.trim_end().to_string()))
}

fn parse_query_atom(program: &mut Program, text: &str) -> Result<Atom, Failure> {
    parse_query(text, &mut program.symbols)
        .map(|q| q.atom)
        .map_err(|e| Failure::parse(format!("query: {}", e)))
}

fn config_of(args: &SolveArgs) -> PipelineConfig {
    PipelineConfig {
        mode: args.rewrite.into(),
        full_free: !args.no_fullfree,
        subsumption: !args.no_subsumption,
    }
}

fn pipeline_failure(err: PipelineError) -> Failure {
    // EvalError::Unstratifiable carries a description rendered against the
    // rewritten program's symbols, which is where the cycle lives.
    Failure::semantic(err.to_string())
}

/// True when the query's predicate occurs nowhere in the program; such a
/// query has an empty answer and nothing to rewrite.
fn query_is_foreign(program: &Program, query: &Atom) -> bool {
    !program.rules.iter().any(|r| {
        r.head.predicate == query.predicate
            || r.body.iter().any(|e| e.atom().predicate == query.predicate)
    })
}

fn render_answers(query: &Atom, answers: &BTreeSet<Vec<Value>>, symbols: &SymbolTable) -> String {
    let mut lines: Vec<String> =
        answers.iter().map(|t| render_fact(query.predicate, t, symbols)).collect();
    lines.sort();
    lines.join("\n")
}

fn cmd_solve(args: &SolveArgs) -> Result<(), Failure> {
    let mut program = load_program(&args.files)?;
    check_safety(&program)?;
    let query = parse_query_atom(&mut program, &args.query)?;
    if query_is_foreign(&program, &query) {
        return Ok(()); // empty answer set
    }
    let config = config_of(args);
    let outcome =
        run_pipeline(&program, &query, &config).map_err(pipeline_failure)?;
    if args.dump_rewritten {
        print!("{}", render(&outcome.program));
    }
    if args.dump_depgraph {
        let graph = build_dependency_graph(&outcome.program);
        print!("{}", graph.to_dot(&outcome.program.symbols));
    }
    let answers = render_answers(&query, &outcome.answers, &outcome.program.symbols);
    if !answers.is_empty() {
        println!("{}", answers);
    }
    if args.stats {
        print!("{}", outcome.stats.render(true));
    }
    Ok(())
}

fn cmd_rewrite(args: &SolveArgs) -> Result<(), Failure> {
    let mut program = load_program(&args.files)?;
    check_safety(&program)?;
    let query = parse_query_atom(&mut program, &args.query)?;
    if query_is_foreign(&program, &query) {
        return Err(Failure::semantic(format!(
            "query predicate '{}' does not occur in the program",
            program.symbols.predicate_name(query.predicate)
        )));
    }
    let config = config_of(args);
    let (rewritten, stats) =
        rewrite_program(&program, &query, &config).map_err(pipeline_failure)?;
    print!("{}", render(&rewritten));
    if args.dump_depgraph {
        let graph = build_dependency_graph(&rewritten);
        print!("{}", graph.to_dot(&rewritten.symbols));
    }
    if args.stats {
        print!("{}", stats.render(false));
    }
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<(), Failure> {
    let text = generate(args.family, args.size, args.base)
        .map_err(|e| Failure::parse(e.to_string()))?;
    print!("{}", text);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Rewrite(args) => cmd_rewrite(args),
        Command::Gen(args) => cmd_gen(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
