//! Wires the rewrite stages and the evaluator into the query-answering
//! pipeline: parse -> [ms | ms-rs] -> [full-free] -> [subsumption] ->
//! stratify -> stable model -> answer.

use std::collections::BTreeSet;
use std::fmt;
use std::time::Instant;

use crate::ast::{Atom, Program};
use crate::eval::{answer_in, stable_model, EvalError, Value};
use crate::magic::{full_free, ms, ms_rs, RewriteError, RewriteStats};
use crate::subsumption::{eliminate_subsumed, SubsumptionStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewriteMode {
    None,
    Ms,
    MsRs,
}

impl fmt::Display for RewriteMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewriteMode::None => "none",
            RewriteMode::Ms => "ms",
            RewriteMode::MsRs => "ms-rs",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    pub mode: RewriteMode,
    /// Purge restricted adorned versions once a full-free one exists.
    /// Only applies when a rewrite runs.
    pub full_free: bool,
    /// Drop subsumed rules after the rewrite. Only applies when a rewrite
    /// runs, and only looks at proper rules: the fact store is left alone so
    /// large extensional databases do not pay a quadratic pass.
    pub subsumption: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { mode: RewriteMode::MsRs, full_free: true, subsumption: true }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PipelineStats {
    pub rewrite: Option<RewriteStats>,
    pub subsumption: Option<SubsumptionStats>,
    pub rewrite_ms: u128,
    pub subsumption_ms: u128,
    pub evaluation_ms: u128,
}

impl PipelineStats {
    /// Counter lines are deterministic for identical inputs; the trailing
    /// timing lines have stable keys but wall-clock values.
    pub fn render(&self, include_evaluation: bool) -> String {
        let mut out = String::new();
        if let Some(r) = &self.rewrite {
            out.push_str(&r.render());
        }
        if let Some(s) = &self.subsumption {
            out.push_str(&s.render());
        }
        out.push_str(&format!("time_rewrite_ms={}\n", self.rewrite_ms));
        out.push_str(&format!("time_subsumption_ms={}\n", self.subsumption_ms));
        if include_evaluation {
            out.push_str(&format!("time_evaluation_ms={}\n", self.evaluation_ms));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PipelineError {
    Rewrite(RewriteError),
    Eval(EvalError),
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::Rewrite(e) => e.fmt(f),
            PipelineError::Eval(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for PipelineError {}

impl From<RewriteError> for PipelineError {
    fn from(e: RewriteError) -> Self {
        PipelineError::Rewrite(e)
    }
}

impl From<EvalError> for PipelineError {
    fn from(e: EvalError) -> Self {
        PipelineError::Eval(e)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    /// The program the evaluator ran on (after all enabled rewrite stages).
    pub program: Program,
    pub answers: BTreeSet<Vec<Value>>,
    pub stats: PipelineStats,
}

/// Subsumption over the proper rules only; facts (including the magic seed)
/// pass through untouched, keeping this stage linear in the size of the
/// extensional database. Output order: surviving rules, then facts.
fn subsume_rules(program: Program) -> (Program, SubsumptionStats) {
    let mut facts = Vec::new();
    let mut proper = Program::new(program.symbols);
    for rule in program.rules {
        if rule.is_fact() {
            facts.push(rule);
        } else {
            proper.rules.push(rule);
        }
    }
    let (mut surviving, stats) = eliminate_subsumed(proper);
    surviving.rules.extend(facts);
    (surviving, stats)
}

/// Runs the rewrite stages only (what `rewrite` prints).
pub fn rewrite_program(
    program: &Program,
    query: &Atom,
    config: &PipelineConfig,
) -> Result<(Program, PipelineStats), PipelineError> {
    let mut stats = PipelineStats::default();
    let start = Instant::now();
    let rewritten = match config.mode {
        RewriteMode::None => program.clone(),
        RewriteMode::Ms | RewriteMode::MsRs => {
            let (mut rewritten, rewrite_stats) = if config.mode == RewriteMode::Ms {
                ms(query, program)?
            } else {
                ms_rs(query, program)?
            };
            if config.full_free {
                rewritten = full_free(rewritten);
            }
            stats.rewrite = Some(rewrite_stats);
            rewritten
        }
    };
    stats.rewrite_ms = start.elapsed().as_millis();

    let start = Instant::now();
    let rewritten = if config.subsumption && config.mode != RewriteMode::None {
        let (rewritten, subsumption_stats) = subsume_rules(rewritten);
        stats.subsumption = Some(subsumption_stats);
        rewritten
    } else {
        rewritten
    };
    stats.subsumption_ms = start.elapsed().as_millis();
    Ok((rewritten, stats))
}

/// Full query answering: rewrite, evaluate, project the query.
pub fn run_pipeline(
    program: &Program,
    query: &Atom,
    config: &PipelineConfig,
) -> Result<PipelineOutcome, PipelineError> {
    let (rewritten, mut stats) = rewrite_program(program, query, config)?;
    let start = Instant::now();
    let model = stable_model(&rewritten)?;
    let answers = answer_in(query, &model, &rewritten.symbols);
    stats.evaluation_ms = start.elapsed().as_millis();
    Ok(PipelineOutcome { program: rewritten, answers, stats })
}
