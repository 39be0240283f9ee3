//! Reduction rules and approximation scheme for unweighted directed Steiner
//! tree parameterized by the number of Steiner vertices `p`.
//!
//! R1 contracts an arc from the root to a terminal. R2 contracts a path from
//! the root to a Steiner vertex `s` together with the terminals `s` reaches
//! through terminal-only paths, provided there are at least `p / eps` of
//! them. What survives has fewer than `p^2 / eps` non-root terminals when a
//! solution with at most `p` Steiner vertices exists and is solved exactly.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::exact::{dreyfus_wagner_directed, MAX_DP_TERMINALS};
use crate::graph::{contract_vertices, EdgeId, Graph, TerminalSpec, VertexId};
use crate::solution::{is_arborescence, Solution};
use crate::weight::{int, serde_rational, Rational};

/// Vertices reachable from `source` by a path whose vertices after the
/// source include at most `k` Steiner vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedNeighborhood {
    pub source: VertexId,
    pub k: usize,
    /// Member -> (Steiner vertices on the witness path, arcs on it, last arc).
    members: BTreeMap<VertexId, (usize, usize, Option<EdgeId>)>,
}

impl ExtendedNeighborhood {
    pub fn contains(&self, v: VertexId) -> bool {
        self.members.contains_key(&v)
    }

    pub fn members(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.members.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Fewest Steiner vertices on any path from the source to `v`.
    pub fn steiner_distance(&self, v: VertexId) -> Option<usize> {
        self.members.get(&v).map(|m| m.0)
    }

    /// Witness path (arc ids, source first): fewest Steiner vertices, then
    /// fewest arcs.
    pub fn path_to(&self, g: &Graph, v: VertexId) -> Option<Vec<EdgeId>> {
        let mut path = Vec::new();
        let mut cur = v;
        loop {
            match self.members.get(&cur)?.2 {
                None => break,
                Some(a) => {
                    path.push(a);
                    cur = g.edge(a).u;
                }
            }
        }
        path.reverse();
        Some(path)
    }
}

/// Label-setting sweep where an arc into a Steiner vertex costs one and an
/// arc into a terminal costs nothing; ties are broken by hop count.
pub fn extended_neighborhood(g: &Graph, terminals: &BTreeSet<VertexId>, v: VertexId, k: usize) -> ExtendedNeighborhood {
    extended_with(&g.adjacency(), terminals, v, k)
}

fn extended_with(
    adj: &[Vec<(VertexId, EdgeId)>],
    terminals: &BTreeSet<VertexId>,
    v: VertexId,
    k: usize,
) -> ExtendedNeighborhood {
    let mut best: BTreeMap<VertexId, (usize, usize, Option<EdgeId>)> = BTreeMap::new();
    let mut heap = BinaryHeap::from([Reverse((0usize, 0usize, v))]);
    best.insert(v, (0, 0, None));
    let mut done = BTreeSet::new();
    while let Some(Reverse((s, h, u))) = heap.pop() {
        if !done.insert(u) {
            continue;
        }
        for &(w, a) in &adj[u] {
            let ns = s + usize::from(!terminals.contains(&w));
            if ns > k || w == v {
                continue;
            }
            let cand = (ns, h + 1);
            if best.get(&w).map_or(true, |b| cand < (b.0, b.1)) {
                best.insert(w, (ns, h + 1, Some(a)));
                heap.push(Reverse((ns, h + 1, w)));
            }
        }
    }
    ExtendedNeighborhood { source: v, k, members: best }
}

/// One applied reduction rule. Arc ids are origins, i.e. ids of the graph
/// the whole reduction started from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirectedStep {
    R1 {
        arc: EdgeId,
        merged: Vec<VertexId>,
        into: VertexId,
    },
    R2 {
        center: VertexId,
        path: Vec<EdgeId>,
        neighborhood: Vec<VertexId>,
        /// Arborescence of the contracted subgraph rooted at the old root.
        arborescence: Vec<EdgeId>,
        merged: Vec<VertexId>,
        into: VertexId,
    },
}

impl DirectedStep {
    /// Arcs the lifting adds for this step.
    pub fn lift_arcs(&self) -> &[EdgeId] {
        match self {
            DirectedStep::R1 { arc, .. } => std::slice::from_ref(arc),
            DirectedStep::R2 { arborescence, .. } => arborescence,
        }
    }

    pub fn merged(&self) -> &[VertexId] {
        match self {
            DirectedStep::R1 { merged, .. } | DirectedStep::R2 { merged, .. } => merged,
        }
    }
}

/// Instance produced by one rule.
#[derive(Debug, Clone)]
pub struct RuleApplication {
    pub graph: Graph,
    pub spec: TerminalSpec,
    pub step: DirectedStep,
}

fn root_and_terminals(g: &Graph, spec: &TerminalSpec) -> Result<(VertexId, BTreeSet<VertexId>)> {
    if !g.is_directed() {
        return input("directed reduction rules need a directed graph");
    }
    spec.validate(g)?;
    match spec {
        TerminalSpec::Tree { terminals, root: Some(r) } => Ok((*r, terminals.clone())),
        _ => input("directed reduction rules need a rooted terminal set"),
    }
}

/// R1: contracts the root arc to the smallest-id terminal out-neighbour.
pub fn apply_r1(g: &Graph, spec: &TerminalSpec) -> Result<Option<RuleApplication>> {
    let (root, terminals) = root_and_terminals(g, spec)?;
    let arc = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.u == root && e.v != root && terminals.contains(&e.v))
        .min_by_key(|(i, e)| (e.v, *i))
        .map(|(i, _)| i);
    let Some(a) = arc else { return Ok(None) };
    let e = g.edge(a);
    let c = contract_vertices(g, spec, &BTreeSet::from([e.u, e.v]))?;
    Ok(Some(RuleApplication {
        graph: c.graph,
        spec: c.spec,
        step: DirectedStep::R1 { arc: e.origin, merged: c.merged, into: c.into },
    }))
}

/// Candidate for R2: Steiner vertex in `N^p(root)` with the most non-root
/// terminals in `N^0(s)`, ties by smaller id. Returns it with that count.
fn r2_candidate(
    g: &Graph,
    root: VertexId,
    terminals: &BTreeSet<VertexId>,
    p: usize,
) -> Option<(VertexId, usize, ExtendedNeighborhood, ExtendedNeighborhood)> {
    let adj = g.adjacency();
    let from_root = extended_with(&adj, terminals, root, p);
    let mut best: Option<(VertexId, usize, ExtendedNeighborhood)> = None;
    for s in from_root.members().filter(|s| !terminals.contains(s)) {
        let n0 = extended_with(&adj, terminals, s, 0);
        let count = n0.members().filter(|v| *v != root && terminals.contains(v)).count();
        if best.as_ref().map_or(true, |b| count > b.1) {
            best = Some((s, count, n0));
        }
    }
    best.map(|(s, count, n0)| (s, count, n0, from_root))
}

fn r2_fires(count: usize, p: usize, epsilon: &Rational) -> bool {
    int(count as i128) * epsilon >= int(p as i128)
}

/// R2 with threshold `p / epsilon` on the non-root terminals of `N^0(s)`.
pub fn apply_r2(g: &Graph, spec: &TerminalSpec, p: usize, epsilon: &Rational) -> Result<Option<RuleApplication>> {
    if !epsilon.is_positive() {
        return input("epsilon must be positive");
    }
    let (root, terminals) = root_and_terminals(g, spec)?;
    let Some((s, count, n0, from_root)) = r2_candidate(g, root, &terminals, p) else { return Ok(None) };
    if !r2_fires(count, p, epsilon) {
        return Ok(None);
    }
    let path = from_root.path_to(g, s).expect("candidate lies in the neighborhood");
    let mut group: BTreeSet<VertexId> = n0.members().collect();
    group.insert(root);
    for &a in &path {
        group.insert(g.edge(a).v);
    }
    // depth-first arborescence of the induced subgraph from the root
    let adj = g.adjacency();
    let mut seen = BTreeSet::from([root]);
    let mut stack = vec![root];
    let mut arborescence = Vec::new();
    while let Some(u) = stack.pop() {
        let mut next: Vec<(VertexId, EdgeId)> =
            adj[u].iter().copied().filter(|(w, _)| group.contains(w) && !seen.contains(w)).collect();
        next.sort_unstable();
        for (w, a) in next.into_iter().rev() {
            if seen.insert(w) {
                arborescence.push(g.edge(a).origin);
                stack.push(w);
            }
        }
    }
    if seen != group {
        return Err(Error::Contract("contracted subgraph is not reachable from the root".into()));
    }
    let c = contract_vertices(g, spec, &group)?;
    Ok(Some(RuleApplication {
        graph: c.graph,
        spec: c.spec,
        step: DirectedStep::R2 {
            center: s,
            path: g.origins(&path),
            neighborhood: n0.members().collect(),
            arborescence,
            merged: c.merged,
            into: c.into,
        },
    }))
}

/// Reduced instance with every applied rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectedTrace {
    pub p: usize,
    #[serde(with = "serde_rational")]
    pub epsilon: Rational,
    pub steps: Vec<DirectedStep>,
    pub reduced: Graph,
    pub reduced_spec: TerminalSpec,
}

impl DirectedTrace {
    pub fn residual_terminals(&self) -> usize {
        self.reduced_spec.terminal_count().saturating_sub(1)
    }

    pub fn r1_count(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s, DirectedStep::R1 { .. })).count()
    }

    pub fn r2_count(&self) -> usize {
        self.steps.len() - self.r1_count()
    }

    /// Re-applies the recorded merges to `g`.
    pub fn replay(&self, g: &Graph, spec: &TerminalSpec) -> Result<(Graph, TerminalSpec)> {
        let (mut graph, mut spec) = (g.clone(), spec.clone());
        for step in &self.steps {
            let group: BTreeSet<VertexId> = step.merged().iter().copied().collect();
            let c = contract_vertices(&graph, &spec, &group)?;
            graph = c.graph;
            spec = c.spec;
        }
        Ok((graph, spec))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DirectedReduction {
    Reduced(DirectedTrace),
    /// No arborescence with at most `p` Steiner vertices exists.
    CertifiedNo(String),
}

fn check_unit(g: &Graph) -> Result<()> {
    if g.edges().iter().any(|e| !e.weight.is_one()) {
        return input(
            "only unit arc weights are supported; weighted directed Steiner tree admits no \
             parameterized approximation in the number of Steiner vertices",
        );
    }
    Ok(())
}

/// Applies R1 exhaustively, then R2 once, until neither applies.
pub fn reduce_directed(g: &Graph, spec: &TerminalSpec, p: usize, epsilon: &Rational) -> Result<DirectedReduction> {
    if !epsilon.is_positive() {
        return input("epsilon must be positive");
    }
    let (root, terminals) = root_and_terminals(g, spec)?;
    check_unit(g)?;
    let reach = extended_neighborhood(g, &terminals, root, p);
    if let Some(t) = terminals.iter().find(|t| !reach.contains(**t)) {
        return Ok(DirectedReduction::CertifiedNo(format!(
            "terminal {t} is not reachable from the root through at most {p} Steiner vertices"
        )));
    }
    let (mut graph, mut spec) = (g.reindexed(), spec.clone());
    let mut steps = Vec::new();
    loop {
        let mut applied = false;
        while let Some(app) = apply_r1(&graph, &spec)? {
            steps.push(app.step);
            graph = app.graph;
            spec = app.spec;
            applied = true;
        }
        if let Some(app) = apply_r2(&graph, &spec, p, epsilon)? {
            steps.push(app.step);
            graph = app.graph;
            spec = app.spec;
            applied = true;
        }
        if !applied {
            break;
        }
    }
    let trace = DirectedTrace { p, epsilon: *epsilon, steps, reduced: graph, reduced_spec: spec };
    let left = trace.residual_terminals();
    if int(left as i128) * epsilon > int((p * p) as i128) {
        return Ok(DirectedReduction::CertifiedNo(format!(
            "{left} terminals remain after reduction, more than p^2/eps allows"
        )));
    }
    Ok(DirectedReduction::Reduced(trace))
}

/// Lifts an arborescence of the reduced instance back to `g` (the graph the
/// trace was computed on) and checks the result structurally.
pub fn lift_directed_solution(g: &Graph, spec: &TerminalSpec, trace: &DirectedTrace, sol: &[EdgeId]) -> Result<Solution> {
    let (root, terminals) = root_and_terminals(&trace.reduced, &trace.reduced_spec)?;
    if !is_arborescence(&trace.reduced, root, &terminals, sol) {
        return Err(Error::Contract("solution is not a Steiner arborescence of the reduced instance".into()));
    }
    let mut arcs = trace.reduced.origins(sol);
    for step in trace.steps.iter().rev() {
        arcs.extend_from_slice(step.lift_arcs());
    }
    arcs.sort_unstable();
    arcs.dedup();
    let (root, terminals) = root_and_terminals(g, spec)?;
    if !is_arborescence(g, root, &terminals, &arcs) {
        return Err(Error::Contract("lifted arcs do not form a Steiner arborescence".into()));
    }
    Ok(Solution::from_edges(g, arcs))
}

#[derive(Debug, Clone, PartialEq)]
pub enum DirectedOutcome {
    Solved { solution: Solution, trace: DirectedTrace },
    CertifiedNo(String),
}

/// Reduce, solve the residual instance exactly, lift.
pub fn epas_directed(g: &Graph, spec: &TerminalSpec, p: usize, epsilon: &Rational) -> Result<DirectedOutcome> {
    let trace = match reduce_directed(g, spec, p, epsilon)? {
        DirectedReduction::CertifiedNo(why) => return Ok(DirectedOutcome::CertifiedNo(why)),
        DirectedReduction::Reduced(t) => t,
    };
    let (root, terminals) = root_and_terminals(&trace.reduced, &trace.reduced_spec)?;
    if terminals.len() > MAX_DP_TERMINALS {
        return Err(Error::TooLarge(format!(
            "{} terminals remain after reduction; the exact solver handles at most {MAX_DP_TERMINALS}",
            terminals.len()
        )));
    }
    let residual = dreyfus_wagner_directed(&trace.reduced, &terminals, root)?;
    let solution = lift_directed_solution(g, spec, &trace, &residual.edges)?;
    Ok(DirectedOutcome::Solved { solution, trace })
}

/// Upper bound on the approximation factor the scheme claims.
pub fn claimed_ratio(epsilon: &Rational) -> Rational {
    Rational::one() + epsilon
}
