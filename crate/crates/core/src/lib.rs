//! A deductive-database engine for Datalog with stratified negation and
//! `#sum` aggregates.
//!
//! Query answering runs a rewrite pipeline before bottom-up evaluation:
//! magic sets ([`magic::ms`]) or the cycle-preventing variant
//! ([`magic::ms_rs`]) focus the program on the part of the stable model that
//! is relevant to the query, [`magic::full_free`] purges the overhead left by
//! all-free adornments, and [`subsumption::eliminate_subsumed`] drops rules
//! whose instances another rule already covers. The evaluator
//! ([`eval::stable_model`]) then computes the stable model stratum by stratum
//! with semi-naive iteration, and [`eval::answer`] projects out the query.

pub mod ast;
pub mod depgraph;
pub mod eval;
pub mod gen;
pub mod magic;
pub mod oracle;
pub mod parser;
pub mod pipeline;
pub mod subsumption;

pub use ast::{
    classify_predicates, is_safe, Aggregate, Atom, BodyElem, Comparator, ConstData, ConstantId,
    Literal, PredicateId, Program, Rule, SafetyVerdict, SymbolTable, Term, UnsafeReason,
    UnsafeVar, VarId,
};
pub use depgraph::{
    build_dependency_graph, is_stratified, sccs, stratify, DependencyGraph, Node, SccPartition,
    StratifyError,
};
pub use eval::{answer, stable_model, EvalError, Interpretation, Value};
pub use magic::{
    default_sips, full_free, magic_atom, ms, ms_rs, query_adornment, AdornedPredicate, Adornment,
    RewriteError, RewriteStats, Sips,
};
pub use parser::{parse_program, parse_query, render, ParseError, Query};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineError, PipelineOutcome, RewriteMode};
pub use subsumption::{
    eliminate_subsumed, one_way_unify, rule_hash, subsumes, RuleElem, RuleHash, Substitution,
    SubsumptionStats,
};
