//! Subsumed-rule elimination.
//!
//! A rule `r` subsumes `r'` when some substitution of r's variables maps its
//! head onto r''s head and its body into r''s body; the subsumed rule derives
//! nothing new and can be dropped. The check itself is a backtracking search
//! (`subsumes`), guarded by a cheap 64-bit hash test: every predicate and
//! constant of `r` must reappear in the corresponding part of `r'`, so if
//! `hash(r) & hash(r') != hash(r)` the pair can be skipped outright.

use std::collections::BTreeMap;
use std::fmt;

use crate::ast::{Atom, BodyElem, Program, Rule, Term, VarId};

/// Field widths of the rule hash, most significant field first: head
/// predicates, head constants, positive-and-aggregate body predicates, their
/// constants, negative body predicates, negative body constants.
const HASH_WIDTHS: [u32; 6] = [8, 8, 16, 16, 8, 8];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RuleHash(pub u64);

impl RuleHash {
    /// The prefilter: if this returns false, `self` cannot subsume `other`.
    pub fn may_subsume(&self, other: &RuleHash) -> bool {
        self.0 & other.0 == self.0
    }
}

fn or_masked(ids: impl Iterator<Item = u32>, width: u32) -> u64 {
    let mask = (1u64 << width) - 1;
    ids.fold(0u64, |acc, id| acc | (u64::from(id) & mask))
}

/// Hash with configurable field widths; the narrow variant exists so tests
/// can reproduce worked 2-bit illustrations bit-exactly.
pub fn rule_hash_with_widths(rule: &Rule, widths: &[u32; 6]) -> u64 {
    let mut head_consts: Vec<u32> = Vec::new();
    let mut pos_preds: Vec<u32> = Vec::new();
    let mut pos_consts: Vec<u32> = Vec::new();
    let mut neg_preds: Vec<u32> = Vec::new();
    let mut neg_consts: Vec<u32> = Vec::new();

    let consts_of = |terms: &[Term], out: &mut Vec<u32>| {
        out.extend(terms.iter().filter_map(|t| t.as_constant()).map(|c| c.0));
    };
    consts_of(&rule.head.terms, &mut head_consts);
    for elem in &rule.body {
        match elem {
            BodyElem::Literal(l) if !l.negated => {
                pos_preds.push(l.atom.predicate.0);
                consts_of(&l.atom.terms, &mut pos_consts);
            }
            BodyElem::Literal(l) => {
                neg_preds.push(l.atom.predicate.0);
                consts_of(&l.atom.terms, &mut neg_consts);
            }
            BodyElem::Aggregate(a) => {
                pos_preds.push(a.inner.predicate.0);
                consts_of(&a.head_terms, &mut pos_consts);
                consts_of(&a.inner.terms, &mut pos_consts);
                consts_of(std::slice::from_ref(&a.guard), &mut pos_consts);
            }
        }
    }

    let fields = [
        or_masked(std::iter::once(rule.head.predicate.0), widths[0]),
        or_masked(head_consts.into_iter(), widths[1]),
        or_masked(pos_preds.into_iter(), widths[2]),
        or_masked(pos_consts.into_iter(), widths[3]),
        or_masked(neg_preds.into_iter(), widths[4]),
        or_masked(neg_consts.into_iter(), widths[5]),
    ];
    fields
        .iter()
        .zip(widths)
        .fold(0u64, |acc, (field, width)| (acc << width) | field)
}

/// The 64-bit rule hash satisfying the prefilter invariant: if
/// `hash(r) & hash(r') != hash(r)` then `r` does not subsume `r'`.
pub fn rule_hash(rule: &Rule) -> RuleHash {
    RuleHash(rule_hash_with_widths(rule, &HASH_WIDTHS))
}

/// A candidate substitution from the subsumer's variables to the target's
/// terms. Conflicting bindings are representable (the paper's `{X -> 0,
/// X -> 1}` sentinel) and simply mark the substitution as not a function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<VarId, Term>,
    functional: bool,
}

impl Substitution {
    pub fn new() -> Self {
        Substitution { bindings: BTreeMap::new(), functional: true }
    }

    /// The sentinel for a failed unification.
    pub fn failed() -> Self {
        Substitution { bindings: BTreeMap::new(), functional: false }
    }

    pub fn is_function(&self) -> bool {
        self.functional
    }

    pub fn bind(&mut self, var: VarId, term: Term) {
        match self.bindings.insert(var, term) {
            Some(prev) if prev != term => self.functional = false,
            _ => {}
        }
    }

    pub fn get(&self, var: VarId) -> Option<&Term> {
        self.bindings.get(&var)
    }

    /// Union of two binding sets; the result is a function only if both are
    /// and they agree wherever they overlap.
    pub fn merge(mut self, other: Substitution) -> Substitution {
        if !other.functional {
            self.functional = false;
        }
        for (v, t) in other.bindings {
            self.bind(v, t);
        }
        self
    }
}

impl Default for Substitution {
    fn default() -> Self {
        Substitution::new()
    }
}

/// What one-way unification operates on: a rule head or a body element.
#[derive(Debug, Clone, Copy)]
pub enum RuleElem<'a> {
    Head(&'a Atom),
    Body(&'a BodyElem),
}

enum ElemShape<'a> {
    Atom { atom: &'a Atom, negated: bool },
    Aggregate(&'a crate::ast::Aggregate),
}

fn shape(elem: RuleElem<'_>) -> ElemShape<'_> {
    match elem {
        RuleElem::Head(atom) => ElemShape::Atom { atom, negated: false },
        RuleElem::Body(BodyElem::Literal(l)) => {
            ElemShape::Atom { atom: &l.atom, negated: l.negated }
        }
        RuleElem::Body(BodyElem::Aggregate(a)) => ElemShape::Aggregate(a),
    }
}

fn unify_terms(sigma: &mut Substitution, left: &[Term], right: &[Term]) -> bool {
    if left.len() != right.len() {
        return false;
    }
    for (t, t2) in left.iter().zip(right) {
        match t {
            Term::Constant(_) => {
                if t != t2 {
                    return false;
                }
            }
            Term::Variable(v) => sigma.bind(*v, *t2),
        }
    }
    true
}

/// One-way unification of two rule elements: only the left element's
/// variables may be substituted, the right element is fixed. Elements of
/// different kinds, predicates, arities, or aggregate comparators never
/// unify, and a constant position of the left element must match the right
/// element exactly. The result may be non-functional when a left variable
/// would have to map two ways.
pub fn one_way_unify(left: RuleElem<'_>, right: RuleElem<'_>) -> Substitution {
    let mut sigma = Substitution::new();
    let ok = match (shape(left), shape(right)) {
        (
            ElemShape::Atom { atom, negated },
            ElemShape::Atom { atom: atom2, negated: negated2 },
        ) => {
            negated == negated2
                && atom.predicate == atom2.predicate
                && unify_terms(&mut sigma, &atom.terms, &atom2.terms)
        }
        (ElemShape::Aggregate(a), ElemShape::Aggregate(a2)) => {
            // Flattened comparison: head terms, the ':' separator, inner
            // terms, the comparator, and the guard all have to line up.
            a.inner.predicate == a2.inner.predicate
                && a.comparator == a2.comparator
                && unify_terms(&mut sigma, &a.head_terms, &a2.head_terms)
                && unify_terms(&mut sigma, &a.inner.terms, &a2.inner.terms)
                && unify_terms(
                    &mut sigma,
                    std::slice::from_ref(&a.guard),
                    std::slice::from_ref(&a2.guard),
                )
        }
        _ => false,
    };
    if ok {
        sigma
    } else {
        Substitution::failed()
    }
}

/// Backtracking subsumption test: true iff some substitution maps the head
/// of `r` onto the head of `target` and every body element of `r` onto some
/// body element of `target`. States are pairs of a candidate substitution
/// and the set of body elements of `r` still to place.
pub fn subsumes(r: &Rule, target: &Rule) -> bool {
    assert!(r.body.len() <= 128, "rule bodies beyond 128 elements are not supported");
    let full: u128 = if r.body.len() == 128 {
        u128::MAX
    } else {
        (1u128 << r.body.len()) - 1
    };
    let mut stack: Vec<(Substitution, u128)> =
        vec![(one_way_unify(RuleElem::Head(&r.head), RuleElem::Head(&target.head)), full)];
    while let Some((sigma, remaining)) = stack.pop() {
        if !sigma.is_function() {
            continue;
        }
        if remaining == 0 {
            return true;
        }
        for i in (0..r.body.len()).filter(|i| remaining & (1 << i) != 0) {
            for elem in &target.body {
                let step = one_way_unify(RuleElem::Body(&r.body[i]), RuleElem::Body(elem));
                let merged = sigma.clone().merge(step);
                if merged.is_function() {
                    stack.push((merged, remaining & !(1 << i)));
                }
            }
        }
    }
    false
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SubsumptionStats {
    /// Ordered pairs of distinct live rules examined.
    pub candidates: usize,
    /// Pairs dismissed by the hash prefilter.
    pub hash_pruned: usize,
    /// Pairs that went through the backtracking check.
    pub checks: usize,
    pub removed: usize,
}

impl SubsumptionStats {
    pub fn render(&self) -> String {
        format!(
            "candidates={}\nhash_pruned={}\nchecks={}\nremoved={}\n",
            self.candidates, self.hash_pruned, self.checks, self.removed
        )
    }
}

impl fmt::Display for SubsumptionStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.render().trim_end())
    }
}

/// Removes every rule subsumed by another rule. Pairs are enumerated in
/// program order with the subsumer on the outer loop, removals apply eagerly
/// (a removed rule neither subsumes nor is checked again), and of two rules
/// subsuming each other the one occurring earlier survives.
pub fn eliminate_subsumed(mut program: Program) -> (Program, SubsumptionStats) {
    let mut stats = SubsumptionStats::default();
    let hashes: Vec<RuleHash> = program.rules.iter().map(rule_hash).collect();
    let n = program.rules.len();
    let mut alive = vec![true; n];
    for i in 0..n {
        if !alive[i] {
            continue;
        }
        for j in 0..n {
            if i == j || !alive[j] {
                continue;
            }
            stats.candidates += 1;
            if !hashes[i].may_subsume(&hashes[j]) {
                stats.hash_pruned += 1;
                continue;
            }
            stats.checks += 1;
            if subsumes(&program.rules[i], &program.rules[j]) {
                alive[j] = false;
                stats.removed += 1;
            }
        }
    }
    let mut keep = alive.iter();
    program.rules.retain(|_| *keep.next().unwrap());
    (program, stats)
}
