//! Interned abstract syntax for Datalog with negation and `#sum` aggregates.
//!
//! Predicates and constants are interned into a [`SymbolTable`] with dense,
//! sequentially assigned ids. Variables are scoped per rule: each [`Rule`]
//! carries its own name table and variable ids are assigned in order of first
//! occurrence, so two rules may reuse the same variable names freely.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

/// Identifies a predicate (name + arity pair) in a [`SymbolTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredicateId(pub u32);

/// Identifies a constant (symbolic or integer) in a [`SymbolTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstantId(pub u32);

/// Identifies a variable within a single rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

/// The datum behind a [`ConstantId`]. Integers and symbolic names share the
/// same id space; the kind only matters for printing and for aggregate
/// arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ConstData {
    Int(i64),
    Sym(String),
}

impl fmt::Display for ConstData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstData::Int(n) => write!(f, "{}", n),
            ConstData::Sym(s) => write!(f, "{}", s),
        }
    }
}

/// Interner for predicates and constants. Ids are dense and stable within one
/// engine session; interning the same token twice yields the same id.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    predicates: Vec<(String, u32)>,
    predicate_ids: HashMap<(String, u32), PredicateId>,
    constants: Vec<ConstData>,
    symbol_ids: HashMap<String, ConstantId>,
    int_ids: HashMap<i64, ConstantId>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern_predicate(&mut self, name: &str, arity: u32) -> PredicateId {
        if let Some(&id) = self.predicate_ids.get(&(name.to_string(), arity)) {
            return id;
        }
        let id = PredicateId(self.predicates.len() as u32);
        self.predicates.push((name.to_string(), arity));
        self.predicate_ids.insert((name.to_string(), arity), id);
        id
    }

    pub fn intern_symbol(&mut self, name: &str) -> ConstantId {
        if let Some(&id) = self.symbol_ids.get(name) {
            return id;
        }
        let id = ConstantId(self.constants.len() as u32);
        self.constants.push(ConstData::Sym(name.to_string()));
        self.symbol_ids.insert(name.to_string(), id);
        id
    }

    pub fn intern_int(&mut self, value: i64) -> ConstantId {
        if let Some(&id) = self.int_ids.get(&value) {
            return id;
        }
        let id = ConstantId(self.constants.len() as u32);
        self.constants.push(ConstData::Int(value));
        self.int_ids.insert(value, id);
        id
    }

    pub fn lookup_predicate(&self, name: &str, arity: u32) -> Option<PredicateId> {
        self.predicate_ids.get(&(name.to_string(), arity)).copied()
    }

    pub fn predicate_name(&self, id: PredicateId) -> &str {
        &self.predicates[id.0 as usize].0
    }

    pub fn predicate_arity(&self, id: PredicateId) -> u32 {
        self.predicates[id.0 as usize].1
    }

    pub fn constant(&self, id: ConstantId) -> &ConstData {
        &self.constants[id.0 as usize]
    }

    pub fn predicate_count(&self) -> usize {
        self.predicates.len()
    }

    pub fn constant_count(&self) -> usize {
        self.constants.len()
    }

    /// All predicate ids currently interned, in id order.
    pub fn predicate_ids(&self) -> impl Iterator<Item = PredicateId> + '_ {
        (0..self.predicates.len()).map(|i| PredicateId(i as u32))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Constant(ConstantId),
    Variable(VarId),
}

impl Term {
    pub fn as_variable(&self) -> Option<VarId> {
        match self {
            Term::Variable(v) => Some(*v),
            Term::Constant(_) => None,
        }
    }

    pub fn as_constant(&self) -> Option<ConstantId> {
        match self {
            Term::Constant(c) => Some(*c),
            Term::Variable(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub predicate: PredicateId,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: PredicateId, terms: Vec<Term>) -> Self {
        Atom { predicate, terms }
    }

    pub fn is_ground(&self) -> bool {
        self.terms.iter().all(|t| matches!(t, Term::Constant(_)))
    }

    pub fn variables(&self) -> impl Iterator<Item = VarId> + '_ {
        self.terms.iter().filter_map(Term::as_variable)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub atom: Atom,
    pub negated: bool,
}

impl Literal {
    pub fn positive(atom: Atom) -> Self {
        Literal { atom, negated: false }
    }

    pub fn negative(atom: Atom) -> Self {
        Literal { atom, negated: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Comparator {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl Comparator {
    pub fn holds(&self, lhs: i64, rhs: i64) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Eq => lhs == rhs,
            Comparator::Ne => lhs != rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Gt => lhs > rhs,
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
            Comparator::Ge => ">=",
            Comparator::Gt => ">",
        };
        f.write_str(s)
    }
}

/// An aggregate `#sum{t1,...,tk : p(u1,...,un)} <cmp> guard`. The summed value
/// is the first head term; the remaining head terms only affect tuple
/// distinctness.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Aggregate {
    pub head_terms: Vec<Term>,
    pub inner: Atom,
    pub comparator: Comparator,
    pub guard: Term,
}

impl Aggregate {
    /// The assignment variable, if this aggregate has the form `#sum{...} = X`.
    pub fn assignment_var(&self) -> Option<VarId> {
        if self.comparator == Comparator::Eq {
            self.guard.as_variable()
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BodyElem {
    Literal(Literal),
    Aggregate(Aggregate),
}

impl BodyElem {
    /// The single atom occurring in this body element (the literal's atom, or
    /// the aggregate's inner atom).
    pub fn atom(&self) -> &Atom {
        match self {
            BodyElem::Literal(l) => &l.atom,
            BodyElem::Aggregate(a) => &a.inner,
        }
    }

    pub fn is_positive_literal(&self) -> bool {
        matches!(self, BodyElem::Literal(l) if !l.negated)
    }

    pub fn is_negative_literal(&self) -> bool {
        matches!(self, BodyElem::Literal(l) if l.negated)
    }

    pub fn as_aggregate(&self) -> Option<&Aggregate> {
        match self {
            BodyElem::Aggregate(a) => Some(a),
            BodyElem::Literal(_) => None,
        }
    }

    /// Variables occurring anywhere in the element (aggregate locals included).
    pub fn variables(&self) -> Vec<VarId> {
        match self {
            BodyElem::Literal(l) => l.atom.variables().collect(),
            BodyElem::Aggregate(a) => a
                .head_terms
                .iter()
                .chain(a.inner.terms.iter())
                .chain(std::iter::once(&a.guard))
                .filter_map(Term::as_variable)
                .collect(),
        }
    }
}

/// A rule `head :- body.` The body keeps the textual source order over all
/// elements; `positive_body`/`negative_body`/`aggregates` project the
/// B+/B-/B^A partition out of it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<BodyElem>,
    /// Original variable names, indexed by `VarId`.
    pub var_names: Vec<String>,
}

impl Rule {
    pub fn fact(head: Atom) -> Self {
        Rule { head, body: Vec::new(), var_names: Vec::new() }
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    pub fn positive_body(&self) -> impl Iterator<Item = &Literal> {
        self.body.iter().filter_map(|e| match e {
            BodyElem::Literal(l) if !l.negated => Some(l),
            _ => None,
        })
    }

    pub fn negative_body(&self) -> impl Iterator<Item = &Literal> {
        self.body.iter().filter_map(|e| match e {
            BodyElem::Literal(l) if l.negated => Some(l),
            _ => None,
        })
    }

    pub fn aggregates(&self) -> impl Iterator<Item = &Aggregate> {
        self.body.iter().filter_map(BodyElem::as_aggregate)
    }

    /// Global variables: those occurring in the head, in a literal, or in
    /// guard position of an aggregate. Everything else is local to the
    /// aggregates where it occurs.
    pub fn global_vars(&self) -> BTreeSet<VarId> {
        let mut globals: BTreeSet<VarId> = self.head.variables().collect();
        for elem in &self.body {
            match elem {
                BodyElem::Literal(l) => globals.extend(l.atom.variables()),
                BodyElem::Aggregate(a) => {
                    if let Some(v) = a.guard.as_variable() {
                        globals.insert(v);
                    }
                }
            }
        }
        globals
    }

    /// Variables `X` such that some aggregate has the form `#sum{...} = X`.
    pub fn assignment_vars(&self) -> BTreeSet<VarId> {
        self.aggregates().filter_map(Aggregate::assignment_var).collect()
    }

    /// Renames variables to `V0, V1, ...` in order of first occurrence (head
    /// first, then body in source order), erasing the original names. Two
    /// rules are equal after canonicalization iff they are identical up to
    /// variable renaming.
    pub fn canonicalized(&self) -> Rule {
        let mut order: Vec<VarId> = Vec::new();
        let mut seen = vec![false; self.var_names.len()];
        let record = |t: &Term, order: &mut Vec<VarId>, seen: &mut Vec<bool>| {
            if let Term::Variable(v) = t {
                if !seen[v.0 as usize] {
                    seen[v.0 as usize] = true;
                    order.push(*v);
                }
            }
        };
        for t in &self.head.terms {
            record(t, &mut order, &mut seen);
        }
        for elem in &self.body {
            match elem {
                BodyElem::Literal(l) => {
                    for t in &l.atom.terms {
                        record(t, &mut order, &mut seen);
                    }
                }
                BodyElem::Aggregate(a) => {
                    for t in a.head_terms.iter().chain(a.inner.terms.iter()) {
                        record(t, &mut order, &mut seen);
                    }
                    record(&a.guard, &mut order, &mut seen);
                }
            }
        }
        let mut renaming = vec![VarId(0); self.var_names.len()];
        for (new, old) in order.iter().enumerate() {
            renaming[old.0 as usize] = VarId(new as u32);
        }
        let map = |t: &Term| match t {
            Term::Variable(v) => Term::Variable(renaming[v.0 as usize]),
            c => *c,
        };
        let map_atom = |a: &Atom| Atom::new(a.predicate, a.terms.iter().map(map).collect());
        Rule {
            head: map_atom(&self.head),
            body: self
                .body
                .iter()
                .map(|e| match e {
                    BodyElem::Literal(l) => BodyElem::Literal(Literal {
                        atom: map_atom(&l.atom),
                        negated: l.negated,
                    }),
                    BodyElem::Aggregate(a) => BodyElem::Aggregate(Aggregate {
                        head_terms: a.head_terms.iter().map(map).collect(),
                        inner: map_atom(&a.inner),
                        comparator: a.comparator,
                        guard: map(&a.guard),
                    }),
                })
                .collect(),
            var_names: (0..order.len()).map(|i| format!("V{}", i)).collect(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub symbols: SymbolTable,
}

impl Program {
    pub fn new(symbols: SymbolTable) -> Self {
        Program { rules: Vec::new(), symbols }
    }

    /// Safety verdicts for every rule that is not safe, with rule indices.
    pub fn safety_report(&self) -> Vec<(usize, Vec<UnsafeVar>)> {
        self.rules
            .iter()
            .enumerate()
            .filter_map(|(i, r)| match is_safe(r) {
                SafetyVerdict::Safe => None,
                SafetyVerdict::Unsafe(vars) => Some((i, vars)),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnsafeReason {
    Global,
    Local,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnsafeVar {
    pub var: VarId,
    pub reason: UnsafeReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SafetyVerdict {
    Safe,
    Unsafe(Vec<UnsafeVar>),
}

impl SafetyVerdict {
    pub fn is_safe(&self) -> bool {
        matches!(self, SafetyVerdict::Safe)
    }
}

/// Checks rule safety. A global variable is safe iff it is an assignment
/// variable or occurs in the positive body; a local variable of an aggregate
/// is safe iff it occurs in the aggregate's inner atom.
pub fn is_safe(rule: &Rule) -> SafetyVerdict {
    let globals = rule.global_vars();
    let assignments = rule.assignment_vars();
    let positive_vars: BTreeSet<VarId> = rule
        .positive_body()
        .flat_map(|l| l.atom.variables().collect::<Vec<_>>())
        .collect();

    let mut unsafe_vars: Vec<UnsafeVar> = Vec::new();
    let mut flagged: BTreeSet<VarId> = BTreeSet::new();

    for &v in &globals {
        if !assignments.contains(&v) && !positive_vars.contains(&v) && flagged.insert(v) {
            unsafe_vars.push(UnsafeVar { var: v, reason: UnsafeReason::Global });
        }
    }
    for agg in rule.aggregates() {
        let inner_vars: BTreeSet<VarId> = agg.inner.variables().collect();
        for t in agg.head_terms.iter().chain(agg.inner.terms.iter()) {
            if let Some(v) = t.as_variable() {
                if !globals.contains(&v) && !inner_vars.contains(&v) && flagged.insert(v) {
                    unsafe_vars.push(UnsafeVar { var: v, reason: UnsafeReason::Local });
                }
            }
        }
    }

    unsafe_vars.sort_by_key(|u| u.var);
    if unsafe_vars.is_empty() {
        SafetyVerdict::Safe
    } else {
        SafetyVerdict::Unsafe(unsafe_vars)
    }
}

/// Partitions the predicates occurring in the program into extensional and
/// intentional ones. A predicate is extensional iff every rule with it in the
/// head is a fact (in particular, predicates occurring only in bodies are
/// extensional).
pub fn classify_predicates(program: &Program) -> (BTreeSet<PredicateId>, BTreeSet<PredicateId>) {
    let mut occurring: BTreeSet<PredicateId> = BTreeSet::new();
    let mut intentional: BTreeSet<PredicateId> = BTreeSet::new();
    for rule in &program.rules {
        occurring.insert(rule.head.predicate);
        for elem in &rule.body {
            occurring.insert(elem.atom().predicate);
        }
        if !rule.is_fact() {
            intentional.insert(rule.head.predicate);
        }
    }
    let extensional = occurring.difference(&intentional).copied().collect();
    (extensional, intentional)
}
