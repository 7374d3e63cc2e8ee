//! Bottom-up evaluation: computes the stable model stratum by stratum, with
//! semi-naive iteration inside each stratum.
//!
//! Negation and aggregation only ever look at strata that are already fixed,
//! so a negative literal is true iff its atom is absent, and a `#sum`
//! aggregate sums the first components of the distinct matched tuples.
//! Assignment aggregates (`#sum{...} = X` with `X` unbound) bind `X` to the
//! computed sum, which may introduce integers that occur nowhere in the
//! program.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use indexmap::IndexSet;

use crate::ast::{
    Aggregate, Atom, Comparator, ConstData, ConstantId, PredicateId, Program, Rule, SymbolTable,
    Term, VarId,
};
use crate::depgraph::{stratify, StratifyError};
use crate::parser::render_rule;

/// A ground value: an integer or an interned symbolic constant. Integers
/// produced by aggregate assignment need no interning, so evaluation never
/// touches the symbol table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Sym(ConstantId),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            Value::Sym(_) => None,
        }
    }
}

pub fn const_value(symbols: &SymbolTable, id: ConstantId) -> Value {
    match symbols.constant(id) {
        ConstData::Int(n) => Value::Int(*n),
        ConstData::Sym(_) => Value::Sym(id),
    }
}

pub fn render_value(value: &Value, symbols: &SymbolTable) -> String {
    match value {
        Value::Int(n) => n.to_string(),
        Value::Sym(id) => symbols.constant(*id).to_string(),
    }
}

/// Renders a ground atom `p(v1,...,vk)` the same way the parser would print it.
pub fn render_fact(predicate: PredicateId, tuple: &[Value], symbols: &SymbolTable) -> String {
    let name = symbols.predicate_name(predicate);
    if tuple.is_empty() {
        return name.to_string();
    }
    let args: Vec<String> = tuple.iter().map(|v| render_value(v, symbols)).collect();
    format!("{}({})", name, args.join(","))
}

/// A set of ground atoms, indexed by predicate. Tuples keep insertion order
/// so that the semi-naive loop can address each round's delta as an index
/// range instead of copying tuples around.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Interpretation {
    relations: HashMap<PredicateId, IndexSet<Vec<Value>>>,
}

impl Interpretation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, predicate: PredicateId, tuple: Vec<Value>) -> bool {
        self.relations.entry(predicate).or_default().insert(tuple)
    }

    pub fn contains(&self, predicate: PredicateId, tuple: &[Value]) -> bool {
        self.relations.get(&predicate).is_some_and(|r| r.contains(tuple))
    }

    pub fn relation_len(&self, predicate: PredicateId) -> usize {
        self.relations.get(&predicate).map_or(0, |r| r.len())
    }

    pub fn tuples(&self, predicate: PredicateId) -> impl Iterator<Item = &Vec<Value>> {
        self.relations.get(&predicate).into_iter().flatten()
    }

    /// Tuple of `predicate` at insertion position `i`.
    fn get_index(&self, predicate: PredicateId, i: usize) -> Option<&Vec<Value>> {
        self.relations.get(&predicate).and_then(|r| r.get_index(i))
    }

    pub fn atom_count(&self) -> usize {
        self.relations.values().map(|r| r.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.atom_count() == 0
    }

    pub fn predicates(&self) -> impl Iterator<Item = PredicateId> + '_ {
        self.relations.keys().copied()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (PredicateId, &Vec<Value>)> {
        self.relations.iter().flat_map(|(p, rel)| rel.iter().map(move |t| (*p, t)))
    }

    /// All atoms rendered and sorted, for diff-friendly output.
    pub fn render_sorted(&self, symbols: &SymbolTable) -> Vec<String> {
        let mut lines: Vec<String> =
            self.atoms().map(|(p, t)| render_fact(p, t, symbols)).collect();
        lines.sort();
        lines
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    Unsafe { description: String },
    Unstratifiable { witness: StratifyError, description: String },
    TypeError { description: String },
    /// The rule is safe per the definition but its aggregates' assignment
    /// variables depend on each other, so no evaluation order exists.
    Unschedulable { rule: String },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Unsafe { description } => write!(f, "unsafe program: {}", description),
            EvalError::Unstratifiable { description, .. } => f.write_str(description),
            EvalError::TypeError { description } => write!(f, "type error: {}", description),
            EvalError::Unschedulable { rule } => {
                write!(f, "cannot order body of rule for evaluation: {}", rule)
            }
        }
    }
}

impl std::error::Error for EvalError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    /// Join against the relation of the positive literal at this body index.
    Scan(usize),
    /// Ground membership test for the negative literal at this body index.
    Check(usize),
    /// Evaluate the aggregate at this body index (compare or assign).
    Aggregate(usize),
}

/// Orders a rule body for evaluation: positive literals in textual order,
/// negative literals and aggregates deferred until everything they need is
/// bound. Returns `None` when no order binds all elements.
fn build_schedule(rule: &Rule) -> Option<Vec<Step>> {
    let globals = rule.global_vars();
    let mut bound: BTreeSet<VarId> = BTreeSet::new();
    let mut pending: Vec<usize> = Vec::new();
    let mut steps: Vec<Step> = Vec::new();

    fn ready(rule: &Rule, idx: usize, globals: &BTreeSet<VarId>, bound: &BTreeSet<VarId>) -> bool {
        match &rule.body[idx] {
            crate::ast::BodyElem::Literal(l) => l.atom.variables().all(|v| bound.contains(&v)),
            crate::ast::BodyElem::Aggregate(a) => {
                let inner_ok = a
                    .head_terms
                    .iter()
                    .chain(a.inner.terms.iter())
                    .filter_map(Term::as_variable)
                    .filter(|v| globals.contains(v))
                    .all(|v| bound.contains(&v));
                let guard_ok = match a.guard {
                    Term::Constant(_) => true,
                    Term::Variable(v) => bound.contains(&v) || a.comparator == Comparator::Eq,
                };
                inner_ok && guard_ok
            }
        }
    }

    let flush = |bound: &mut BTreeSet<VarId>, pending: &mut Vec<usize>, steps: &mut Vec<Step>| {
        loop {
            let mut progressed = false;
            let mut i = 0;
            while i < pending.len() {
                let idx = pending[i];
                if ready(rule, idx, &globals, bound) {
                    pending.remove(i);
                    progressed = true;
                    match &rule.body[idx] {
                        crate::ast::BodyElem::Literal(_) => steps.push(Step::Check(idx)),
                        crate::ast::BodyElem::Aggregate(a) => {
                            steps.push(Step::Aggregate(idx));
                            if let Some(v) = a.assignment_var() {
                                bound.insert(v);
                            }
                        }
                    }
                } else {
                    i += 1;
                }
            }
            if !progressed {
                break;
            }
        }
    };

    for (idx, elem) in rule.body.iter().enumerate() {
        if elem.is_positive_literal() {
            steps.push(Step::Scan(idx));
            bound.extend(elem.atom().variables());
            flush(&mut bound, &mut pending, &mut steps);
        } else {
            pending.push(idx);
            flush(&mut bound, &mut pending, &mut steps);
        }
    }
    flush(&mut bound, &mut pending, &mut steps);

    if pending.is_empty() {
        Some(steps)
    } else {
        None
    }
}

struct RuleRun<'a> {
    rule: &'a Rule,
    schedule: &'a [Step],
    symbols: &'a SymbolTable,
    /// Position in the schedule whose scan is restricted to the delta range.
    delta_step: Option<usize>,
    /// Per-predicate delta ranges for this round.
    delta: &'a HashMap<PredicateId, (usize, usize)>,
    binding: Vec<Option<Value>>,
    out: Vec<(PredicateId, Vec<Value>)>,
}

impl<'a> RuleRun<'a> {
    fn term_value(&self, term: &Term) -> Option<Value> {
        match term {
            Term::Constant(c) => Some(const_value(self.symbols, *c)),
            Term::Variable(v) => self.binding[v.0 as usize],
        }
    }

    /// Matches `terms` against `tuple`, binding unbound variables; returns
    /// the bindings made so they can be undone, or None on mismatch.
    fn match_terms(&mut self, terms: &[Term], tuple: &[Value]) -> Option<Vec<VarId>> {
        let mut trail = Vec::new();
        for (term, value) in terms.iter().zip(tuple) {
            match term {
                Term::Constant(c) => {
                    if const_value(self.symbols, *c) != *value {
                        self.undo(trail);
                        return None;
                    }
                }
                Term::Variable(v) => match self.binding[v.0 as usize] {
                    Some(bound) => {
                        if bound != *value {
                            self.undo(trail);
                            return None;
                        }
                    }
                    None => {
                        self.binding[v.0 as usize] = Some(*value);
                        trail.push(*v);
                    }
                },
            }
        }
        Some(trail)
    }

    fn undo(&mut self, trail: Vec<VarId>) {
        for v in trail {
            self.binding[v.0 as usize] = None;
        }
    }

    fn aggregate_sum(&mut self, interp: &Interpretation, agg: &Aggregate) -> Result<i64, EvalError> {
        let mut tuples: BTreeSet<Vec<Value>> = BTreeSet::new();
        for tuple in interp.tuples(agg.inner.predicate) {
            if let Some(trail) = self.match_terms(&agg.inner.terms, tuple) {
                let instantiated: Option<Vec<Value>> =
                    agg.head_terms.iter().map(|t| self.term_value(t)).collect();
                match instantiated {
                    Some(vs) => {
                        tuples.insert(vs);
                    }
                    None => {
                        // A head term variable neither global-bound nor bound
                        // by the inner match: unsafe local, rejected earlier.
                        self.undo(trail);
                        return Err(EvalError::Unsafe {
                            description: format!(
                                "unbound aggregate term in {}",
                                render_rule(self.rule, self.symbols)
                            ),
                        });
                    }
                }
                self.undo(trail);
            }
        }
        let mut sum: i64 = 0;
        for t in &tuples {
            match t[0] {
                Value::Int(n) => {
                    sum = sum.checked_add(n).ok_or_else(|| EvalError::TypeError {
                        description: "#sum overflow".to_string(),
                    })?;
                }
                Value::Sym(id) => {
                    return Err(EvalError::TypeError {
                        description: format!(
                            "#sum over non-integer value '{}' in {}",
                            self.symbols.constant(id),
                            render_rule(self.rule, self.symbols)
                        ),
                    });
                }
            }
        }
        Ok(sum)
    }

    fn run(&mut self, interp: &Interpretation, step: usize) -> Result<(), EvalError> {
        let Some(&current) = self.schedule.get(step) else {
            let head: Option<Vec<Value>> =
                self.rule.head.terms.iter().map(|t| self.term_value(t)).collect();
            let head = head.expect("head variables are bound after a full schedule");
            self.out.push((self.rule.head.predicate, head));
            return Ok(());
        };
        match current {
            Step::Scan(idx) => {
                let atom = self.rule.body[idx].atom();
                let (from, to) = if self.delta_step == Some(step) {
                    self.delta[&atom.predicate]
                } else {
                    (0, interp.relation_len(atom.predicate))
                };
                for i in from..to {
                    let Some(tuple) = interp.get_index(atom.predicate, i) else { break };
                    if let Some(trail) = self.match_terms(&atom.terms, tuple) {
                        self.run(interp, step + 1)?;
                        self.undo(trail);
                    }
                }
                Ok(())
            }
            Step::Check(idx) => {
                let atom = self.rule.body[idx].atom();
                let tuple: Option<Vec<Value>> =
                    atom.terms.iter().map(|t| self.term_value(t)).collect();
                let tuple = tuple.expect("negative literals run with all variables bound");
                if !interp.contains(atom.predicate, &tuple) {
                    self.run(interp, step + 1)?;
                }
                Ok(())
            }
            Step::Aggregate(idx) => {
                let agg = match &self.rule.body[idx] {
                    crate::ast::BodyElem::Aggregate(a) => a.clone(),
                    crate::ast::BodyElem::Literal(_) => unreachable!("schedule built from body"),
                };
                let sum = self.aggregate_sum(interp, &agg)?;
                match agg.guard {
                    Term::Variable(v) if self.binding[v.0 as usize].is_none() => {
                        // assignment: bind the guard to the computed sum
                        self.binding[v.0 as usize] = Some(Value::Int(sum));
                        self.run(interp, step + 1)?;
                        self.binding[v.0 as usize] = None;
                        Ok(())
                    }
                    ref guard => {
                        let value = self.term_value(guard).expect("guard bound by schedule");
                        match value {
                            Value::Int(n) => {
                                if agg.comparator.holds(sum, n) {
                                    self.run(interp, step + 1)?;
                                }
                                Ok(())
                            }
                            // The sum is an integer, so equality against a
                            // symbol is plain false and disequality plain
                            // true; only an order comparison is meaningless.
                            Value::Sym(id) => match agg.comparator {
                                Comparator::Eq => Ok(()),
                                Comparator::Ne => self.run(interp, step + 1),
                                _ => Err(EvalError::TypeError {
                                    description: format!(
                                        "aggregate ordering guard '{}' is not an integer in {}",
                                        self.symbols.constant(id),
                                        render_rule(self.rule, self.symbols)
                                    ),
                                }),
                            },
                        }
                    }
                }
            }
        }
    }
}

fn eval_rule(
    rule: &Rule,
    schedule: &[Step],
    interp: &Interpretation,
    symbols: &SymbolTable,
    delta_step: Option<usize>,
    delta: &HashMap<PredicateId, (usize, usize)>,
) -> Result<Vec<(PredicateId, Vec<Value>)>, EvalError> {
    let mut run = RuleRun {
        rule,
        schedule,
        symbols,
        delta_step,
        delta,
        binding: vec![None; rule.var_names.len()],
        out: Vec::new(),
    };
    run.run(interp, 0)?;
    Ok(run.out)
}

/// Computes the stable model of a safe, stratified program.
pub fn stable_model(program: &Program) -> Result<Interpretation, EvalError> {
    let unsafe_rules = program.safety_report();
    if let Some((idx, vars)) = unsafe_rules.into_iter().next() {
        let rule = &program.rules[idx];
        let names: Vec<String> = vars
            .iter()
            .map(|u| {
                format!(
                    "{} ({})",
                    rule.var_names[u.var.0 as usize],
                    match u.reason {
                        crate::ast::UnsafeReason::Global => "global",
                        crate::ast::UnsafeReason::Local => "local",
                    }
                )
            })
            .collect();
        return Err(EvalError::Unsafe {
            description: format!(
                "unsafe variables {} in {}",
                names.join(", "),
                render_rule(rule, &program.symbols)
            ),
        });
    }
    let strata = stratify(program).map_err(|witness| {
        let description = witness.describe(&program.symbols);
        EvalError::Unstratifiable { witness, description }
    })?;

    let mut stratum_of: HashMap<PredicateId, usize> = HashMap::new();
    for (i, stratum) in strata.iter().enumerate() {
        for &p in stratum {
            stratum_of.insert(p, i);
        }
    }
    let mut rules_by_stratum: Vec<Vec<&Rule>> = vec![Vec::new(); strata.len()];
    for rule in &program.rules {
        rules_by_stratum[stratum_of[&rule.head.predicate]].push(rule);
    }

    let mut interp = Interpretation::new();
    for (i, stratum) in strata.iter().enumerate() {
        evaluate_stratum(&rules_by_stratum[i], stratum, &mut interp, &program.symbols)?;
    }
    Ok(interp)
}

fn evaluate_stratum(
    rules: &[&Rule],
    stratum: &BTreeSet<PredicateId>,
    interp: &mut Interpretation,
    symbols: &SymbolTable,
) -> Result<(), EvalError> {
    let mut schedules = Vec::with_capacity(rules.len());
    for rule in rules {
        let schedule = build_schedule(rule).ok_or_else(|| EvalError::Unschedulable {
            rule: render_rule(rule, symbols),
        })?;
        schedules.push(schedule);
    }

    // Positions in each schedule that scan a predicate of this stratum; those
    // are the joins the delta rounds have to revisit.
    let recursive_steps: Vec<Vec<usize>> = rules
        .iter()
        .zip(&schedules)
        .map(|(rule, schedule)| {
            schedule
                .iter()
                .enumerate()
                .filter_map(|(i, s)| match s {
                    Step::Scan(idx) if stratum.contains(&rule.body[*idx].atom().predicate) => {
                        Some(i)
                    }
                    _ => None,
                })
                .collect()
        })
        .collect();

    let empty_delta: HashMap<PredicateId, (usize, usize)> = HashMap::new();
    let mut marks: BTreeMap<PredicateId, usize> =
        stratum.iter().map(|&p| (p, interp.relation_len(p))).collect();

    // Round 0: every rule, full relations.
    for (rule, schedule) in rules.iter().zip(&schedules) {
        let derived = eval_rule(rule, schedule, interp, symbols, None, &empty_delta)?;
        for (p, t) in derived {
            interp.insert(p, t);
        }
    }

    loop {
        let now: BTreeMap<PredicateId, usize> =
            stratum.iter().map(|&p| (p, interp.relation_len(p))).collect();
        let delta: HashMap<PredicateId, (usize, usize)> =
            stratum.iter().map(|&p| (p, (marks[&p], now[&p]))).collect();
        if delta.values().all(|(from, to)| from == to) {
            break;
        }
        marks = now;
        let mut new_facts: Vec<(PredicateId, Vec<Value>)> = Vec::new();
        for ((rule, schedule), recursive) in rules.iter().zip(&schedules).zip(&recursive_steps) {
            for &step in recursive {
                new_facts.extend(eval_rule(rule, schedule, interp, symbols, Some(step), &delta)?);
            }
        }
        for (p, t) in new_facts {
            interp.insert(p, t);
        }
    }
    Ok(())
}

/// Answers a query: the set of ground instances of the query atom in the
/// stable model, respecting repeated variables and constant positions.
pub fn answer(query: &Atom, program: &Program) -> Result<BTreeSet<Vec<Value>>, EvalError> {
    let model = stable_model(program)?;
    Ok(answer_in(query, &model, &program.symbols))
}

/// Projects the query out of an already-computed model.
pub fn answer_in(
    query: &Atom,
    model: &Interpretation,
    symbols: &SymbolTable,
) -> BTreeSet<Vec<Value>> {
    let mut result = BTreeSet::new();
    'tuples: for tuple in model.tuples(query.predicate) {
        if tuple.len() != query.terms.len() {
            continue;
        }
        let mut seen: BTreeMap<VarId, Value> = BTreeMap::new();
        for (term, value) in query.terms.iter().zip(tuple) {
            match term {
                Term::Constant(c) => {
                    if const_value(symbols, *c) != *value {
                        continue 'tuples;
                    }
                }
                Term::Variable(v) => {
                    if *seen.entry(*v).or_insert(*value) != *value {
                        continue 'tuples;
                    }
                }
            }
        }
        result.insert(tuple.clone());
    }
    result
}
