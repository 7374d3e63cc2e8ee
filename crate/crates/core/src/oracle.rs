//! Brute-force test oracles: full active-domain grounding and a stable-model
//! checker that verifies minimality by enumerating subsets.
//!
//! These exist to cross-check the evaluator and the rewriting pipeline, so
//! they trade all speed for directness: grounding substitutes every
//! combination of active-domain constants, and the model check walks the
//! subsets of the candidate below the rules forced by positive propagation.
//! Both refuse inputs beyond small size guards.

use std::collections::BTreeSet;
use std::fmt;

use crate::ast::{BodyElem, Comparator, PredicateId, Program, Rule, Term, VarId};
use crate::eval::{const_value, Interpretation, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    SizeGuard { detail: String },
    TypeError { detail: String },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::SizeGuard { detail } => write!(f, "size guard exceeded: {}", detail),
            OracleError::TypeError { detail } => write!(f, "type error: {}", detail),
        }
    }
}

impl std::error::Error for OracleError {}

#[derive(Debug, Clone, Copy)]
pub struct OracleLimits {
    /// Ground rule instantiations across the whole program.
    pub max_instantiations: usize,
    /// Distinct aggregate tuples considered when extending the domain with
    /// possible sums.
    pub max_image: usize,
    /// Candidate atoms (beyond the forced ones) the minimality check may
    /// enumerate subsets over.
    pub max_subset_atoms: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_instantiations: 500_000, max_image: 256, max_subset_atoms: 18 }
    }
}

/// Distinct subset sums tracked while extending the domain.
const MAX_SUMS: usize = 65_536;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroundAtom {
    pub predicate: PredicateId,
    pub tuple: Vec<Value>,
}

/// A term inside a ground rule's aggregate: fully evaluated, or a variable
/// local to the aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GroundTerm {
    Val(Value),
    Local(VarId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAggregate {
    pub head_terms: Vec<GroundTerm>,
    pub inner_predicate: PredicateId,
    pub inner_terms: Vec<GroundTerm>,
    pub comparator: Comparator,
    pub guard: Value,
}

/// A rule with no global variables; local variables survive inside the
/// aggregates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundRule {
    pub head: GroundAtom,
    pub positive: Vec<GroundAtom>,
    pub negative: Vec<GroundAtom>,
    pub aggregates: Vec<GroundAggregate>,
}

/// Constants occurring anywhere in the program, as evaluation-level values.
fn program_constants(program: &Program) -> BTreeSet<Value> {
    let mut out = BTreeSet::new();
    let add_terms = |terms: &[Term], out: &mut BTreeSet<Value>| {
        for t in terms {
            if let Term::Constant(c) = t {
                out.insert(const_value(&program.symbols, *c));
            }
        }
    };
    for rule in &program.rules {
        add_terms(&rule.head.terms, &mut out);
        for elem in &rule.body {
            match elem {
                BodyElem::Literal(l) => add_terms(&l.atom.terms, &mut out),
                BodyElem::Aggregate(a) => {
                    add_terms(&a.head_terms, &mut out);
                    add_terms(&a.inner.terms, &mut out);
                    add_terms(std::slice::from_ref(&a.guard), &mut out);
                }
            }
        }
    }
    out
}

/// Calls `f` once per assignment of `k` values drawn from `domain`.
fn for_each_assignment(
    domain: &[Value],
    k: usize,
    mut f: impl FnMut(&[usize]) -> Result<(), OracleError>,
) -> Result<(), OracleError> {
    if k > 0 && domain.is_empty() {
        return Ok(());
    }
    let mut idx = vec![0usize; k];
    loop {
        f(&idx)?;
        let mut pos = 0;
        loop {
            if pos == k {
                return Ok(());
            }
            idx[pos] += 1;
            if idx[pos] < domain.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Extends the domain with every sum a subset of the potential aggregate
/// tuples could produce, so that assignment variables can be instantiated by
/// plain active-domain substitution. One round over the program constants is
/// enough for the model check: the reduct's rules carry their guards as
/// ground values, so only sums reachable from program constants ever decide
/// membership of a ground rule.
fn extend_domain_with_sums(
    program: &Program,
    domain: &mut BTreeSet<Value>,
    limits: &OracleLimits,
) -> Result<(), OracleError> {
    let base: Vec<Value> = domain.iter().copied().collect();
    let mut sums_found: BTreeSet<i64> = BTreeSet::new();
    for rule in &program.rules {
        for agg in rule.aggregates() {
            if agg.assignment_var().is_none() {
                continue;
            }
            // Distinct head-term tuples with every variable ranging over the
            // whole base domain; an overapproximation of the reachable image.
            let vars: Vec<VarId> = {
                let vs: BTreeSet<VarId> =
                    agg.head_terms.iter().filter_map(Term::as_variable).collect();
                vs.into_iter().collect()
            };
            let mut tuples: BTreeSet<Vec<Value>> = BTreeSet::new();
            for_each_assignment(&base, vars.len(), |idx| {
                let tuple: Vec<Value> = agg
                    .head_terms
                    .iter()
                    .map(|t| match t {
                        Term::Constant(c) => const_value(&program.symbols, *c),
                        Term::Variable(v) => {
                            let i = vars.iter().position(|w| w == v).unwrap();
                            base[idx[i]]
                        }
                    })
                    .collect();
                tuples.insert(tuple);
                if tuples.len() > limits.max_image {
                    return Err(OracleError::SizeGuard {
                        detail: format!("aggregate image exceeds {} tuples", limits.max_image),
                    });
                }
                Ok(())
            })?;
            let mut sums: BTreeSet<i64> = BTreeSet::from([0]);
            for tuple in &tuples {
                if let Some(Value::Int(n)) = tuple.first().copied() {
                    let news: Vec<i64> = sums.iter().filter_map(|s| s.checked_add(n)).collect();
                    sums.extend(news);
                    if sums.len() > MAX_SUMS {
                        return Err(OracleError::SizeGuard {
                            detail: format!("more than {} candidate sums", MAX_SUMS),
                        });
                    }
                }
            }
            sums_found.extend(sums);
        }
    }
    domain.extend(sums_found.into_iter().map(Value::Int));
    Ok(())
}

/// Grounds the program over its active domain: every substitution of each
/// rule's global variables by active constants (program constants plus
/// possible aggregate sums), with no satisfiability filtering whatsoever.
pub fn naive_ground(program: &Program) -> Result<Vec<GroundRule>, OracleError> {
    naive_ground_with_limits(program, &OracleLimits::default())
}

pub fn naive_ground_with_limits(
    program: &Program,
    limits: &OracleLimits,
) -> Result<Vec<GroundRule>, OracleError> {
    let mut domain = program_constants(program);
    extend_domain_with_sums(program, &mut domain, limits)?;
    let domain: Vec<Value> = domain.into_iter().collect();

    let mut total: u128 = 0;
    for rule in &program.rules {
        let k = rule.global_vars().len() as u32;
        total += (domain.len() as u128).pow(k);
        if total > limits.max_instantiations as u128 {
            return Err(OracleError::SizeGuard {
                detail: format!("more than {} ground instances", limits.max_instantiations),
            });
        }
    }

    let mut out = Vec::new();
    for rule in &program.rules {
        let globals: Vec<VarId> = rule.global_vars().into_iter().collect();
        let mut assignment = vec![0usize; globals.len()];
        if domain.is_empty() && !globals.is_empty() {
            continue;
        }
        loop {
            let value_of = |v: VarId| -> Option<Value> {
                globals.iter().position(|w| *w == v).map(|i| domain[assignment[i]])
            };
            out.push(instantiate(program, rule, &value_of));
            let mut pos = 0;
            loop {
                if pos == globals.len() {
                    assignment.clear();
                    break;
                }
                assignment[pos] += 1;
                if assignment[pos] < domain.len() {
                    break;
                }
                assignment[pos] = 0;
                pos += 1;
            }
            if assignment.is_empty() {
                break;
            }
        }
    }
    Ok(out)
}

fn instantiate(
    program: &Program,
    rule: &Rule,
    value_of: &dyn Fn(VarId) -> Option<Value>,
) -> GroundRule {
    let ground_value = |t: &Term| -> Value {
        match t {
            Term::Constant(c) => const_value(&program.symbols, *c),
            Term::Variable(v) => value_of(*v).expect("global variable assigned"),
        }
    };
    let ground_term = |t: &Term| -> GroundTerm {
        match t {
            Term::Constant(c) => GroundTerm::Val(const_value(&program.symbols, *c)),
            Term::Variable(v) => match value_of(*v) {
                Some(val) => GroundTerm::Val(val),
                None => GroundTerm::Local(*v),
            },
        }
    };
    let ground_atom = |atom: &crate::ast::Atom| GroundAtom {
        predicate: atom.predicate,
        tuple: atom.terms.iter().map(ground_value).collect(),
    };

    let mut positive = Vec::new();
    let mut negative = Vec::new();
    let mut aggregates = Vec::new();
    for elem in &rule.body {
        match elem {
            BodyElem::Literal(l) if !l.negated => positive.push(ground_atom(&l.atom)),
            BodyElem::Literal(l) => negative.push(ground_atom(&l.atom)),
            BodyElem::Aggregate(a) => aggregates.push(GroundAggregate {
                head_terms: a.head_terms.iter().map(ground_term).collect(),
                inner_predicate: a.inner.predicate,
                inner_terms: a.inner.terms.iter().map(ground_term).collect(),
                comparator: a.comparator,
                guard: ground_value(&a.guard),
            }),
        }
    }
    GroundRule { head: ground_atom(&rule.head), positive, negative, aggregates }
}

fn aggregate_holds(agg: &GroundAggregate, interp: &Interpretation) -> Result<bool, OracleError> {
    let mut tuples: BTreeSet<Vec<Value>> = BTreeSet::new();
    'outer: for tuple in interp.tuples(agg.inner_predicate) {
        let mut locals: Vec<(VarId, Value)> = Vec::new();
        for (t, v) in agg.inner_terms.iter().zip(tuple) {
            match t {
                GroundTerm::Val(val) => {
                    if val != v {
                        continue 'outer;
                    }
                }
                GroundTerm::Local(x) => match locals.iter().find(|(y, _)| y == x) {
                    Some((_, bound)) => {
                        if bound != v {
                            continue 'outer;
                        }
                    }
                    None => locals.push((*x, *v)),
                },
            }
        }
        let head: Result<Vec<Value>, OracleError> = agg
            .head_terms
            .iter()
            .map(|t| match t {
                GroundTerm::Val(v) => Ok(*v),
                GroundTerm::Local(x) => locals
                    .iter()
                    .find(|(y, _)| y == x)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| OracleError::TypeError {
                        detail: "aggregate head variable not bound by its inner atom".into(),
                    }),
            })
            .collect();
        tuples.insert(head?);
    }
    let mut sum: i64 = 0;
    for t in &tuples {
        match t.first() {
            Some(Value::Int(n)) => {
                sum = sum.checked_add(*n).ok_or_else(|| OracleError::TypeError {
                    detail: "#sum overflow".into(),
                })?;
            }
            _ => {
                return Err(OracleError::TypeError {
                    detail: "#sum over a non-integer value".into(),
                })
            }
        }
    }
    match agg.guard {
        Value::Int(n) => Ok(agg.comparator.holds(sum, n)),
        // Full instantiation also grounds assignment variables with symbolic
        // constants; an integer sum is never equal to (or ordered against) a
        // symbol, so only the disequality holds.
        Value::Sym(_) => Ok(agg.comparator == Comparator::Ne),
    }
}

/// Body satisfaction of a ground rule under an interpretation.
pub fn body_holds(rule: &GroundRule, interp: &Interpretation) -> Result<bool, OracleError> {
    for atom in &rule.positive {
        if !interp.contains(atom.predicate, &atom.tuple) {
            return Ok(false);
        }
    }
    for atom in &rule.negative {
        if interp.contains(atom.predicate, &atom.tuple) {
            return Ok(false);
        }
    }
    for agg in &rule.aggregates {
        if !aggregate_holds(agg, interp)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn models(rules: &[&GroundRule], interp: &Interpretation) -> Result<bool, OracleError> {
    for rule in rules {
        if body_holds(rule, interp)? && !interp.contains(rule.head.predicate, &rule.head.tuple) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks the stable-model conditions by brute force: the candidate must
/// satisfy every ground rule, and no proper subset of the candidate may
/// satisfy the reduct (the rules whose bodies are true under the candidate).
/// Atoms forced by positive-only reduct rules are pinned before subsets of
/// the remainder are enumerated.
pub fn is_stable_model(
    ground: &[GroundRule],
    candidate: &Interpretation,
) -> Result<bool, OracleError> {
    is_stable_model_with_limits(ground, candidate, &OracleLimits::default())
}

pub fn is_stable_model_with_limits(
    ground: &[GroundRule],
    candidate: &Interpretation,
    limits: &OracleLimits,
) -> Result<bool, OracleError> {
    let all: Vec<&GroundRule> = ground.iter().collect();
    if !models(&all, candidate)? {
        return Ok(false);
    }
    let mut reduct: Vec<&GroundRule> = Vec::new();
    for rule in ground {
        if body_holds(rule, candidate)? {
            reduct.push(rule);
        }
    }

    // Atoms every model of the reduct must contain: close the positive-only
    // rules under forward propagation.
    let mut required = Interpretation::new();
    loop {
        let mut changed = false;
        for rule in &reduct {
            if rule.negative.is_empty()
                && rule.aggregates.is_empty()
                && rule.positive.iter().all(|a| required.contains(a.predicate, &a.tuple))
            {
                changed |= required.insert(rule.head.predicate, rule.head.tuple.clone());
            }
        }
        if !changed {
            break;
        }
    }

    let free: Vec<(PredicateId, Vec<Value>)> = candidate
        .atoms()
        .filter(|(p, t)| !required.contains(*p, t))
        .map(|(p, t)| (p, t.clone()))
        .collect();
    if free.len() > limits.max_subset_atoms {
        return Err(OracleError::SizeGuard {
            detail: format!(
                "{} free atoms exceed the subset-enumeration bound {}",
                free.len(),
                limits.max_subset_atoms
            ),
        });
    }

    for mask in 0..(1u64 << free.len()).saturating_sub(1) {
        let mut smaller = required.clone();
        for (i, (p, t)) in free.iter().enumerate() {
            if mask & (1 << i) != 0 {
                smaller.insert(*p, t.clone());
            }
        }
        if models(&reduct, &smaller)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::stable_model;
    use crate::parser::parse_program;

    #[test]
    fn grounds_binary_rule_over_two_constants() {
        let program = parse_program("b(X) :- edb(X,Y). edb(0,1).").unwrap();
        let ground = naive_ground(&program).unwrap();
        // 2 variables over {0,1} = 4 instances, plus the fact itself.
        assert_eq!(ground.len(), 5);
    }

    #[test]
    fn ground_rule_passes_through() {
        let program = parse_program("p(1) :- q(2), not r(1).").unwrap();
        let ground = naive_ground(&program).unwrap();
        assert_eq!(ground.len(), 1);
        assert_eq!(ground[0].positive.len(), 1);
        assert_eq!(ground[0].negative.len(), 1);
    }

    #[test]
    fn pi1_instantiation_counts_match_arity() {
        let text = "a(X,Y) :- edb(X,Y), b(X).\n\
                    b(X) :- edb(X,Y).\n\
                    c(X,Y) :- a(X,Y), b(Y).\n\
                    edb(0,1).";
        let program = parse_program(text).unwrap();
        let ground = naive_ground(&program).unwrap();
        // Two constants: 4 + 4 + 4 instances for the rules, 1 fact.
        assert_eq!(ground.len(), 13);
    }

    #[test]
    fn size_guard_trips() {
        let program = parse_program("p(A,B,C,D) :- q(A,B,C,D). q(1,2,3,4).").unwrap();
        let limits = OracleLimits { max_instantiations: 100, ..Default::default() };
        assert!(matches!(
            naive_ground_with_limits(&program, &limits),
            Err(OracleError::SizeGuard { .. })
        ));
    }

    #[test]
    fn negation_makes_atom_stable() {
        // {a :- not b} has stable model {a}.
        let program = parse_program("a :- not b.").unwrap();
        let ground = naive_ground(&program).unwrap();
        let mut candidate = Interpretation::new();
        candidate.insert(program.symbols.lookup_predicate("a", 0).unwrap(), vec![]);
        assert!(is_stable_model(&ground, &candidate).unwrap());
    }

    #[test]
    fn self_supported_atom_is_not_stable() {
        // {a :- a} admits only the empty stable model.
        let program = parse_program("a :- a.").unwrap();
        let ground = naive_ground(&program).unwrap();
        let mut candidate = Interpretation::new();
        candidate.insert(program.symbols.lookup_predicate("a", 0).unwrap(), vec![]);
        assert!(!is_stable_model(&ground, &candidate).unwrap());
        assert!(is_stable_model(&ground, &Interpretation::new()).unwrap());
    }

    #[test]
    fn shop_example_checks_out() {
        let text = "order(o1). item(o1,i1,20). item(o1,i2,20).\n\
                    order(o2). cancelled(o2).\n\
                    total_cost(S) :- order(O), not cancelled(O), #sum{P,I : item(O,I,P)} = S.";
        let program = parse_program(text).unwrap();
        let ground = naive_ground(&program).unwrap();
        let model = stable_model(&program).unwrap();
        assert!(is_stable_model(&ground, &model).unwrap());
        // Dropping the aggregate-derived atom breaks rule satisfaction;
        // adding a stray atom breaks minimality.
        let mut too_big = model.clone();
        too_big.insert(program.symbols.lookup_predicate("order", 1).unwrap(), vec![
            crate::eval::Value::Int(7),
        ]);
        assert!(!is_stable_model(&ground, &too_big).unwrap());
    }

    #[test]
    fn subset_guard_trips() {
        let mut text = String::new();
        for i in 0..25 {
            text.push_str(&format!("p({}) :- not q({}).\n", i, i));
        }
        let program = parse_program(&text).unwrap();
        let ground = naive_ground(&program).unwrap();
        let model = stable_model(&program).unwrap();
        assert!(matches!(
            is_stable_model(&ground, &model),
            Err(OracleError::SizeGuard { .. })
        ));
    }
}
