//! Predicate dependency graph, SCC decomposition, and stratification.
//!
//! The graph has a weighted arc from `p` to `q` whenever a rule has `p` in
//! the head and `q` in the body; the weight is 1 if `q` occurs under negation
//! or inside an aggregate, 0 otherwise. A program is stratified iff no cycle
//! contains a weight-1 arc.
//!
//! During the restricted magic-sets rewriting the same machinery doubles as
//! the live monitor graph: one representative magic node `m#p` per original
//! predicate, plus the arcs the rewriting is about to commit.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::ast::{PredicateId, Program, SymbolTable};

/// Node of a dependency graph: an original predicate, or the representative
/// magic node `m#p` used while monitoring the restricted rewriting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Pred(PredicateId),
    Magic(PredicateId),
}

impl Node {
    pub fn as_pred(&self) -> Option<PredicateId> {
        match self {
            Node::Pred(p) => Some(*p),
            Node::Magic(_) => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencyGraph {
    nodes: BTreeSet<Node>,
    arcs: BTreeSet<(Node, Node, u8)>,
}

impl DependencyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: Node) {
        self.nodes.insert(node);
    }

    pub fn add_arc(&mut self, from: Node, to: Node, weight: u8) {
        self.nodes.insert(from);
        self.nodes.insert(to);
        self.arcs.insert((from, to, weight));
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        self.nodes.iter().copied()
    }

    pub fn arcs(&self) -> impl Iterator<Item = (Node, Node, u8)> + '_ {
        self.arcs.iter().copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn adjacency(&self) -> HashMap<Node, Vec<Node>> {
        let mut adj: HashMap<Node, Vec<Node>> = HashMap::new();
        for n in &self.nodes {
            adj.entry(*n).or_default();
        }
        for (from, to, _) in &self.arcs {
            adj.get_mut(from).unwrap().push(*to);
        }
        adj
    }

    /// DOT rendering for debugging; weight-1 arcs are dashed.
    pub fn to_dot(&self, symbols: &SymbolTable) -> String {
        let name = |n: &Node| match n {
            Node::Pred(p) => symbols.predicate_name(*p).to_string(),
            Node::Magic(p) => format!("m#{}", symbols.predicate_name(*p)),
        };
        let mut out = String::from("digraph dependencies {\n");
        for n in &self.nodes {
            out.push_str(&format!("  \"{}\";\n", name(n)));
        }
        for (from, to, w) in &self.arcs {
            if *w == 1 {
                out.push_str(&format!("  \"{}\" -> \"{}\" [style=dashed];\n", name(from), name(to)));
            } else {
                out.push_str(&format!("  \"{}\" -> \"{}\";\n", name(from), name(to)));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Strongly connected components in topological order: every arc points from
/// a later component to an earlier one (or stays inside a component), so a
/// predicate's dependencies always live at or before its own component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SccPartition {
    pub components: Vec<BTreeSet<Node>>,
}

impl SccPartition {
    pub fn component_index(&self) -> BTreeMap<Node, usize> {
        let mut map = BTreeMap::new();
        for (i, comp) in self.components.iter().enumerate() {
            for n in comp {
                map.insert(*n, i);
            }
        }
        map
    }

    /// Projects out magic nodes and drops components that contained only
    /// magic nodes; the result is a set of predicate sets.
    pub fn original_partition(&self) -> BTreeSet<BTreeSet<PredicateId>> {
        self.components
            .iter()
            .map(|c| c.iter().filter_map(Node::as_pred).collect::<BTreeSet<_>>())
            .filter(|c| !c.is_empty())
            .collect()
    }
}

/// Builds the dependency graph of a program.
pub fn build_dependency_graph(program: &Program) -> DependencyGraph {
    let mut graph = DependencyGraph::new();
    for rule in &program.rules {
        let head = Node::Pred(rule.head.predicate);
        graph.add_node(head);
        for elem in &rule.body {
            let to = Node::Pred(elem.atom().predicate);
            let weight = if elem.is_positive_literal() { 0 } else { 1 };
            graph.add_arc(head, to, weight);
        }
    }
    graph
}

/// Tarjan's algorithm, iterative to stay off the call stack for long chains.
/// Components come out topologically sorted (dependencies first) with ties
/// broken on the smallest contained node, so runs are reproducible.
pub fn sccs(graph: &DependencyGraph) -> SccPartition {
    let nodes: Vec<Node> = graph.nodes().collect();
    let index_of: HashMap<Node, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let adj = graph.adjacency();
    let succ: Vec<Vec<usize>> = nodes
        .iter()
        .map(|n| adj[n].iter().map(|m| index_of[m]).collect())
        .collect();

    let n = nodes.len();
    const UNSET: usize = usize::MAX;
    let mut index = vec![UNSET; n];
    let mut lowlink = vec![UNSET; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut raw_components: Vec<BTreeSet<Node>> = Vec::new();

    for start in 0..n {
        if index[start] != UNSET {
            continue;
        }
        // frames of (node, next child position)
        let mut frames: Vec<(usize, usize)> = vec![(start, 0)];
        while let Some(&mut (v, ref mut child)) = frames.last_mut() {
            if *child == 0 {
                index[v] = next_index;
                lowlink[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if *child < succ[v].len() {
                let w = succ[v][*child];
                *child += 1;
                if index[w] == UNSET {
                    frames.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
                continue;
            }
            frames.pop();
            if let Some(&mut (parent, _)) = frames.last_mut() {
                lowlink[parent] = lowlink[parent].min(lowlink[v]);
            }
            if lowlink[v] == index[v] {
                let mut component = BTreeSet::new();
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w] = false;
                    component.insert(nodes[w]);
                    if w == v {
                        break;
                    }
                }
                raw_components.push(component);
            }
        }
    }

    // Deterministic topological order over the condensation: place a
    // component once everything it points to is placed; break ties on the
    // smallest contained node.
    let mut comp_of: HashMap<Node, usize> = HashMap::new();
    for (i, comp) in raw_components.iter().enumerate() {
        for n in comp {
            comp_of.insert(*n, i);
        }
    }
    let m = raw_components.len();
    let mut pending: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m]; // unplaced successors
    let mut readers: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m]; // who waits on me
    for (from, to, _) in graph.arcs() {
        let (cf, ct) = (comp_of[&from], comp_of[&to]);
        if cf != ct {
            pending[cf].insert(ct);
            readers[ct].insert(cf);
        }
    }
    let mut ready: BTreeSet<(Node, usize)> = raw_components
        .iter()
        .enumerate()
        .filter(|(i, _)| pending[*i].is_empty())
        .map(|(i, c)| (*c.iter().next().unwrap(), i))
        .collect();
    let mut ordered = Vec::with_capacity(m);
    while let Some(&(key, i)) = ready.iter().next() {
        ready.remove(&(key, i));
        ordered.push(raw_components[i].clone());
        for &r in readers[i].clone().iter() {
            pending[r].remove(&i);
            if pending[r].is_empty() {
                ready.insert((*raw_components[r].iter().next().unwrap(), r));
            }
        }
    }
    debug_assert_eq!(ordered.len(), m);
    SccPartition { components: ordered }
}

/// True iff no strongly connected component has an internal weight-1 arc.
pub fn is_stratified(graph: &DependencyGraph) -> bool {
    offending_arc(graph, &sccs(graph)).is_none()
}

fn offending_arc(graph: &DependencyGraph, partition: &SccPartition) -> Option<(Node, Node)> {
    let comp = partition.component_index();
    graph
        .arcs()
        .find(|(from, to, w)| *w == 1 && comp[from] == comp[to])
        .map(|(from, to, _)| (from, to))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StratifyError {
    /// A cycle through a weight-1 arc, as a predicate sequence; the arc from
    /// the first to the second listed predicate carries weight 1.
    pub cycle: Vec<PredicateId>,
}

impl StratifyError {
    pub fn describe(&self, symbols: &SymbolTable) -> String {
        let mut names: Vec<&str> =
            self.cycle.iter().map(|&p| symbols.predicate_name(p)).collect();
        if let Some(first) = names.first().copied() {
            names.push(first);
        }
        format!(
            "not stratified: cycle through negation/aggregation: {}",
            names.join(" -> ")
        )
    }
}

/// Orders the program's predicates into strata (the SCCs, dependency-first).
/// Rules of each stratum negate or aggregate only over strictly earlier
/// strata. Fails with a witness cycle when a component contains a weight-1
/// arc.
pub fn stratify(program: &Program) -> Result<Vec<BTreeSet<PredicateId>>, StratifyError> {
    let graph = build_dependency_graph(program);
    let partition = sccs(&graph);
    if let Some((from, to)) = offending_arc(&graph, &partition) {
        return Err(StratifyError { cycle: witness_cycle(&graph, &partition, from, to) });
    }
    Ok(partition
        .components
        .into_iter()
        .map(|c| c.into_iter().filter_map(|n| n.as_pred()).collect())
        .collect())
}

/// Builds the witness cycle for the weight-1 arc `from -> to`: the arc plus a
/// path from `to` back to `from` inside their shared component.
fn witness_cycle(
    graph: &DependencyGraph,
    partition: &SccPartition,
    from: Node,
    to: Node,
) -> Vec<PredicateId> {
    let comp_index = partition.component_index();
    let comp = comp_index[&from];
    let adj = graph.adjacency();
    let mut prev: HashMap<Node, Node> = HashMap::new();
    let mut queue = VecDeque::from([to]);
    while let Some(v) = queue.pop_front() {
        if v == from {
            break;
        }
        for &w in &adj[&v] {
            if comp_index.get(&w) == Some(&comp) && w != to && !prev.contains_key(&w) {
                prev.insert(w, v);
                queue.push_back(w);
            }
        }
    }
    // trace back from `from` to `to`, then flip into from -> to -> ... order
    let mut back = vec![from];
    let mut cur = from;
    while cur != to {
        cur = prev[&cur];
        back.push(cur);
    }
    back.reverse(); // [to, ..., from]
    back.pop(); // drop the closing `from`; the cycle wraps around implicitly
    let mut cycle = vec![from];
    cycle.extend(back);
    cycle.into_iter().filter_map(|n| n.as_pred()).collect()
}

/// Live graph G monitored while the restricted rewriting decides which SIPS
/// arcs it may keep. Holds the original graph, one representative magic node
/// `m#p` per predicate, every magic-to-magic dependency any magic rule could
/// ever introduce, and the arcs committed so far. `try_add_arc` answers the
/// question "would this arc change the original-predicate SCC partition?".
///
/// The magic-to-magic arcs are all present from the start: a magic rule for
/// body predicate `p` under a rule headed `q` always carries the guard
/// `m#q#s`, so the arc `m#p -> m#q` is unavoidable once that rule is
/// processed. Recording them lazily would let an early commit look safe and
/// a later guard arc close a cycle behind the check's back; seeding them
/// keeps the projected partition of G equal to the partition of the input
/// graph at every step, which is what makes the commit test sound.
#[derive(Debug, Clone)]
pub struct SccMonitor {
    graph: DependencyGraph,
    adj: HashMap<Node, Vec<Node>>,
    baseline: BTreeSet<BTreeSet<PredicateId>>,
}

impl SccMonitor {
    pub fn new(program: &Program) -> Self {
        let original = build_dependency_graph(program);
        let baseline = sccs(&original).original_partition();
        let mut graph = original;
        for node in graph.nodes().collect::<Vec<_>>() {
            if let Node::Pred(p) = node {
                graph.add_arc(node, Node::Magic(p), 0);
            }
        }
        let (_, intentional) = crate::ast::classify_predicates(program);
        for rule in &program.rules {
            for elem in &rule.body {
                let body_pred = elem.atom().predicate;
                if intentional.contains(&body_pred) {
                    graph.add_arc(Node::Magic(body_pred), Node::Magic(rule.head.predicate), 0);
                }
            }
        }
        let adj = graph.adjacency();
        SccMonitor { graph, adj, baseline }
    }

    pub fn graph(&self) -> &DependencyGraph {
        &self.graph
    }

    fn insert(&mut self, from: Node, to: Node, weight: u8) {
        self.graph.add_arc(from, to, weight);
        self.adj.entry(from).or_default().push(to);
        self.adj.entry(to).or_default();
    }

    fn reaches(&self, start: Node, target: Node) -> bool {
        if start == target {
            return true;
        }
        let mut seen: BTreeSet<Node> = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        seen.insert(start);
        while let Some(v) = queue.pop_front() {
            for &w in self.adj.get(&v).map(|v| v.as_slice()).unwrap_or(&[]) {
                if w == target {
                    return true;
                }
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        false
    }

    /// Commits `from -> to` iff the extension keeps the graph clean: the
    /// original-predicate SCC partition must stay equal to the input
    /// program's, and no weight-1 arc may end up inside a component. The
    /// weight is 1 when the arc stems from an aggregate passed into a magic
    /// rule body; a cycle through such an arc would leave the rewriting
    /// unstratified even without merging original components.
    ///
    /// Fast path: an arc whose target cannot reach its source closes no
    /// cycle, so neither condition can break; only reachable targets pay for
    /// a full SCC recomputation on the extended graph.
    pub fn try_add_arc(&mut self, from: Node, to: Node, weight: u8) -> bool {
        if !self.reaches(to, from) {
            self.insert(from, to, weight);
            return true;
        }
        if self.would_stay_clean(from, to, weight) {
            self.insert(from, to, weight);
            true
        } else {
            false
        }
    }

    /// The exhaustive form of what `try_add_arc` decides; kept public so
    /// tests can cross-validate the fast path against it.
    pub fn would_stay_clean(&self, from: Node, to: Node, weight: u8) -> bool {
        let mut extended = self.graph.clone();
        extended.add_arc(from, to, weight);
        let partition = sccs(&extended);
        partition.original_partition() == self.baseline
            && offending_arc(&extended, &partition).is_none()
    }
}
