//! Shared test support: a seeded generator for safe, stratified programs
//! (plus deliberately unstratified variants), a brute-force subsumption
//! oracle, and a ground naive-fixpoint evaluator. Everything is driven by
//! explicit ChaCha seeds so failures reproduce.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use magus_core::ast::{
    Aggregate, Atom, BodyElem, Comparator, Literal, PredicateId, Program, Rule, SymbolTable,
    Term, VarId,
};
use magus_core::depgraph::stratify;
use magus_core::eval::Interpretation;
use magus_core::oracle::{body_holds, naive_ground_with_limits, OracleError, OracleLimits};

pub const VAR_NAMES: [&str; 6] = ["X", "Y", "Z", "W", "S", "L"];

/// Assembles one rule, interning variables by name on first use.
pub struct RuleBuilder<'a> {
    symbols: &'a mut SymbolTable,
    var_names: Vec<String>,
}

impl<'a> RuleBuilder<'a> {
    pub fn new(symbols: &'a mut SymbolTable) -> Self {
        RuleBuilder { symbols, var_names: Vec::new() }
    }

    pub fn var(&mut self, name: &str) -> Term {
        if let Some(i) = self.var_names.iter().position(|n| n == name) {
            Term::Variable(VarId(i as u32))
        } else {
            self.var_names.push(name.to_string());
            Term::Variable(VarId((self.var_names.len() - 1) as u32))
        }
    }

    pub fn int(&mut self, n: i64) -> Term {
        Term::Constant(self.symbols.intern_int(n))
    }

    pub fn sym(&mut self, s: &str) -> Term {
        Term::Constant(self.symbols.intern_symbol(s))
    }

    pub fn atom(&mut self, name: &str, terms: Vec<Term>) -> Atom {
        let p = self.symbols.intern_predicate(name, terms.len() as u32);
        Atom::new(p, terms)
    }

    pub fn finish(self, head: Atom, body: Vec<BodyElem>) -> Rule {
        Rule { head, body, var_names: self.var_names }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PoolConfig {
    pub predicates: usize,
    pub max_arity: u32,
    pub rules: usize,
    pub facts: usize,
    pub int_constants: i64,
    pub sym_constants: usize,
    pub negation: bool,
    pub aggregates: bool,
    /// When false, negation and aggregation may point anywhere, so the
    /// program can come out unstratified.
    pub stratified: bool,
}

/// Pool for the rewriting equivalence and SCC-preservation runs.
pub fn rewrite_pool_config() -> PoolConfig {
    PoolConfig {
        predicates: 4,
        max_arity: 2,
        rules: 8,
        facts: 50,
        int_constants: 4,
        sym_constants: 2,
        negation: true,
        aggregates: true,
        stratified: true,
    }
}

/// Pool for the stable-model oracle runs: a small active domain and few
/// derivable atoms, so subset enumeration stays cheap.
pub fn oracle_pool_config() -> PoolConfig {
    PoolConfig {
        predicates: 3,
        max_arity: 2,
        rules: 4,
        facts: 5,
        int_constants: 3,
        sym_constants: 1,
        negation: true,
        aggregates: true,
        stratified: true,
    }
}

struct PredInfo {
    name: String,
    arity: u32,
    level: usize,
}

pub struct GeneratedProgram {
    pub program: Program,
    /// Predicates with at least one defining rule, candidates for queries.
    pub intentional: Vec<PredicateId>,
}

/// One random safe program. Stratification is enforced structurally when
/// requested: negation and aggregation only consume strictly lower levels,
/// positive recursion stays within a level.
pub fn gen_program(seed: u64, config: &PoolConfig) -> GeneratedProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut symbols = SymbolTable::new();

    let preds: Vec<PredInfo> = (0..config.predicates)
        .map(|i| PredInfo {
            name: format!("p{}", i),
            arity: rng.gen_range(1..=config.max_arity),
            level: if i == 0 { 0 } else { rng.gen_range(0..=2) },
        })
        .collect();

    let mut constants: Vec<Term> = Vec::new();
    for n in 0..config.int_constants {
        constants.push(Term::Constant(symbols.intern_int(n)));
    }
    for s in 0..config.sym_constants {
        constants.push(Term::Constant(symbols.intern_symbol(&format!("k{}", s))));
    }

    let mut rules: Vec<Rule> = Vec::new();

    // Facts over random predicates.
    let n_facts = rng.gen_range(1..=config.facts);
    for _ in 0..n_facts {
        let p = &preds[rng.gen_range(0..preds.len())];
        let mut b = RuleBuilder::new(&mut symbols);
        let terms: Vec<Term> =
            (0..p.arity).map(|_| constants[rng.gen_range(0..constants.len())]).collect();
        let head = b.atom(&p.name, terms);
        rules.push(b.finish(head, Vec::new()));
    }

    let n_rules = rng.gen_range(1..=config.rules);
    for _ in 0..n_rules {
        let head_idx = rng.gen_range(0..preds.len());
        let head_level = preds[head_idx].level;
        let mut b = RuleBuilder::new(&mut symbols);

        // Positive literals first; the variables they bind are the safe pool.
        let mut body: Vec<BodyElem> = Vec::new();
        let mut safe_vars: Vec<Term> = Vec::new();
        for _ in 0..rng.gen_range(1..=2) {
            let cand: Vec<usize> = (0..preds.len())
                .filter(|&i| !config.stratified || preds[i].level <= head_level)
                .collect();
            let p = &preds[cand[rng.gen_range(0..cand.len())]];
            let terms: Vec<Term> = (0..p.arity)
                .map(|_| {
                    if rng.gen_bool(0.7) {
                        b.var(VAR_NAMES[rng.gen_range(0..4)])
                    } else {
                        constants[rng.gen_range(0..constants.len())]
                    }
                })
                .collect();
            for t in &terms {
                if t.as_variable().is_some() && !safe_vars.contains(t) {
                    safe_vars.push(*t);
                }
            }
            let atom = b.atom(&p.name, terms);
            body.push(BodyElem::Literal(Literal::positive(atom)));
        }

        let pick_bound = |rng: &mut ChaCha8Rng, safe: &[Term]| -> Term {
            if !safe.is_empty() && rng.gen_bool(0.7) {
                safe[rng.gen_range(0..safe.len())]
            } else {
                constants[rng.gen_range(0..constants.len())]
            }
        };

        if config.negation && rng.gen_bool(0.4) {
            let cand: Vec<usize> = (0..preds.len())
                .filter(|&i| !config.stratified || preds[i].level < head_level)
                .collect();
            if !cand.is_empty() {
                let p = &preds[cand[rng.gen_range(0..cand.len())]];
                let terms: Vec<Term> =
                    (0..p.arity).map(|_| pick_bound(&mut rng, &safe_vars)).collect();
                let atom = b.atom(&p.name, terms);
                body.push(BodyElem::Literal(Literal::negative(atom)));
            }
        }

        if config.aggregates && rng.gen_bool(0.4) {
            let cand: Vec<usize> = (0..preds.len())
                .filter(|&i| !config.stratified || preds[i].level < head_level)
                .collect();
            if !cand.is_empty() {
                let p = &preds[cand[rng.gen_range(0..cand.len())]];
                // Summed value is always a small integer; an optional local
                // variable makes tuples distinct per matched atom.
                let mut head_terms = vec![b.int(rng.gen_range(1..=3))];
                let local = rng.gen_bool(0.6).then(|| b.var("L"));
                if let Some(l) = local {
                    head_terms.push(l);
                }
                let mut inner_terms: Vec<Term> =
                    (0..p.arity).map(|_| pick_bound(&mut rng, &safe_vars)).collect();
                if let Some(l) = local {
                    let slot = rng.gen_range(0..inner_terms.len());
                    inner_terms[slot] = l;
                }
                let inner = b.atom(&p.name, inner_terms);
                let (comparator, guard) = if rng.gen_bool(0.5) {
                    (Comparator::Eq, b.var("S"))
                } else {
                    let cmp = [
                        Comparator::Lt,
                        Comparator::Le,
                        Comparator::Eq,
                        Comparator::Ne,
                        Comparator::Ge,
                        Comparator::Gt,
                    ][rng.gen_range(0..6)];
                    (cmp, b.int(rng.gen_range(0..=4)))
                };
                body.push(BodyElem::Aggregate(Aggregate {
                    head_terms,
                    inner,
                    comparator,
                    guard,
                }));
            }
        }

        // Head terms come from the safe pool: positive-literal variables,
        // assignment variables, or constants.
        let mut head_pool = safe_vars.clone();
        for elem in &body {
            if let BodyElem::Aggregate(a) = elem {
                if let Some(v) = a.assignment_var() {
                    head_pool.push(Term::Variable(v));
                }
            }
        }
        let head_terms: Vec<Term> = (0..preds[head_idx].arity)
            .map(|_| {
                if !head_pool.is_empty() && rng.gen_bool(0.8) {
                    head_pool[rng.gen_range(0..head_pool.len())]
                } else {
                    constants[rng.gen_range(0..constants.len())]
                }
            })
            .collect();
        let head = b.atom(&preds[head_idx].name, head_terms);
        body.shuffle(&mut rng);
        rules.push(b.finish(head, body));
    }

    let program = Program { rules, symbols };
    debug_assert!(program.safety_report().is_empty());
    if config.stratified {
        debug_assert!(stratify(&program).is_ok());
    }
    let intentional: Vec<PredicateId> = magus_core::ast::classify_predicates(&program)
        .1
        .into_iter()
        .collect();
    GeneratedProgram { program, intentional }
}

/// A query over one of the program's predicates, arguments mixing constants
/// occurring in the program with fresh variables.
pub fn gen_query(seed: u64, generated: &mut GeneratedProgram) -> Atom {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let program = &mut generated.program;
    let predicate = if !generated.intentional.is_empty() && rng.gen_bool(0.8) {
        generated.intentional[rng.gen_range(0..generated.intentional.len())]
    } else {
        let heads: Vec<PredicateId> = program.rules.iter().map(|r| r.head.predicate).collect();
        heads[rng.gen_range(0..heads.len())]
    };
    let arity = program.symbols.predicate_arity(predicate);
    let constants: Vec<Term> = {
        let mut seen = BTreeSet::new();
        for rule in &program.rules {
            for t in &rule.head.terms {
                if let Term::Constant(c) = t {
                    seen.insert(*c);
                }
            }
        }
        seen.into_iter().map(Term::Constant).collect()
    };
    let mut next_var = 0u32;
    let terms: Vec<Term> = (0..arity)
        .map(|_| {
            if !constants.is_empty() && rng.gen_bool(0.5) {
                constants[rng.gen_range(0..constants.len())]
            } else {
                next_var += 1;
                Term::Variable(VarId(next_var - 1))
            }
        })
        .collect();
    Atom::new(predicate, terms)
}

/// Random rules sharing one symbol table, for the subsumption runs. Shapes
/// are deliberately overlapping (few predicates, few variables) so that
/// genuine subsumption shows up often.
pub fn gen_rule_corpus(
    seed: u64,
    n: usize,
    max_body: usize,
    predicates: usize,
    constants: usize,
    variables: usize,
    aggregates: bool,
) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    let mut symbols = SymbolTable::new();
    let make_rule = |rng: &mut ChaCha8Rng, symbols: &mut SymbolTable| -> Rule {
        let mut b = RuleBuilder::new(symbols);
        let mut term = |b: &mut RuleBuilder, rng: &mut ChaCha8Rng| -> Term {
            if rng.gen_bool(0.5) {
                b.var(VAR_NAMES[rng.gen_range(0..variables)])
            } else if rng.gen_bool(0.5) {
                b.int(rng.gen_range(0..constants as i64))
            } else {
                let name = format!("c{}", rng.gen_range(0..constants));
                b.sym(&name)
            }
        };
        let head_arity = rng.gen_range(0..=2u32);
        let head_terms: Vec<Term> = (0..head_arity).map(|_| term(&mut b, rng)).collect();
        let head = b.atom(&format!("q{}", rng.gen_range(0..2)), head_terms);
        let mut body = Vec::new();
        for _ in 0..rng.gen_range(0..=max_body) {
            let arity = rng.gen_range(1..=2u32);
            let name = format!("p{}", rng.gen_range(0..predicates));
            if aggregates && rng.gen_bool(0.2) {
                let head_terms: Vec<Term> =
                    (0..rng.gen_range(1..=2)).map(|_| term(&mut b, rng)).collect();
                let inner_terms: Vec<Term> = (0..arity).map(|_| term(&mut b, rng)).collect();
                let inner = b.atom(&name, inner_terms);
                let comparator = [Comparator::Eq, Comparator::Le, Comparator::Gt]
                    [rng.gen_range(0..3)];
                let guard = term(&mut b, rng);
                body.push(BodyElem::Aggregate(Aggregate {
                    head_terms,
                    inner,
                    comparator,
                    guard,
                }));
            } else {
                let terms: Vec<Term> = (0..arity).map(|_| term(&mut b, rng)).collect();
                let atom = b.atom(&name, terms);
                let negated = rng.gen_bool(0.25);
                body.push(BodyElem::Literal(Literal { atom, negated }));
            }
        }
        b.finish(head, body)
    };
    let rules: Vec<Rule> = (0..n).map(|_| make_rule(&mut rng, &mut symbols)).collect();
    Program { rules, symbols }
}

/// Two random rules over one symbol table.
pub fn gen_rule_pair(
    seed: u64,
    max_body: usize,
    predicates: usize,
    constants: usize,
    variables: usize,
    aggregates: bool,
) -> (Program, Rule, Rule) {
    let mut program = gen_rule_corpus(seed, 2, max_body, predicates, constants, variables, aggregates);
    let r2 = program.rules.pop().unwrap();
    let r = program.rules.pop().unwrap();
    (program, r, r2)
}

/// Brute-force subsumption: tries every mapping from the subsumer's
/// variables into the terms occurring in the target.
pub fn brute_force_subsumes(r: &Rule, target: &Rule) -> bool {
    let mut codomain: Vec<Term> = Vec::new();
    let push = |t: &Term, codomain: &mut Vec<Term>| {
        if !codomain.contains(t) {
            codomain.push(*t);
        }
    };
    for t in &target.head.terms {
        push(t, &mut codomain);
    }
    for elem in &target.body {
        match elem {
            BodyElem::Literal(l) => {
                for t in &l.atom.terms {
                    push(t, &mut codomain);
                }
            }
            BodyElem::Aggregate(a) => {
                for t in a.head_terms.iter().chain(a.inner.terms.iter()) {
                    push(t, &mut codomain);
                }
                push(&a.guard, &mut codomain);
            }
        }
    }

    let n_vars = r.var_names.len();
    if n_vars > 0 && codomain.is_empty() {
        return false;
    }
    let mut choice = vec![0usize; n_vars];
    loop {
        let subst = |t: &Term| -> Term {
            match t {
                Term::Variable(v) => codomain[choice[v.0 as usize]],
                c => *c,
            }
        };
        let map_atom =
            |a: &Atom| Atom::new(a.predicate, a.terms.iter().map(subst).collect());
        let head_ok = map_atom(&r.head) == target.head;
        let body_ok = head_ok
            && r.body.iter().all(|elem| {
                let mapped = match elem {
                    BodyElem::Literal(l) => BodyElem::Literal(Literal {
                        atom: map_atom(&l.atom),
                        negated: l.negated,
                    }),
                    BodyElem::Aggregate(a) => BodyElem::Aggregate(Aggregate {
                        head_terms: a.head_terms.iter().map(subst).collect(),
                        inner: map_atom(&a.inner),
                        comparator: a.comparator,
                        guard: subst(&a.guard),
                    }),
                };
                target.body.contains(&mapped)
            });
        if body_ok {
            return true;
        }
        let mut pos = 0;
        loop {
            if pos == n_vars {
                return false;
            }
            choice[pos] += 1;
            if choice[pos] < codomain.len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

/// Naive fixpoint over the oracle's full grounding: every rule fires against
/// the whole interpretation each round until nothing changes, stratum by
/// stratum. Used to cross-check the semi-naive engine.
pub fn naive_stable_model(program: &Program) -> Result<Interpretation, OracleError> {
    let limits = OracleLimits::default();
    let ground = naive_ground_with_limits(program, &limits)?;
    let strata = stratify(program).map_err(|_| OracleError::SizeGuard {
        detail: "program is not stratified".into(),
    })?;
    let mut interp = Interpretation::new();
    for stratum in &strata {
        let rules: Vec<_> =
            ground.iter().filter(|r| stratum.contains(&r.head.predicate)).collect();
        loop {
            let mut changed = false;
            for rule in &rules {
                if body_holds(rule, &interp)? {
                    changed |= interp.insert(rule.head.predicate, rule.head.tuple.clone());
                }
            }
            if !changed {
                break;
            }
        }
    }
    Ok(interp)
}
