//! Tree-to-forest reductions and the subset-union approximate kernel.
//!
//! The kernel keeps, for every terminal subset of size at most `K`, an
//! optimal Steiner tree of that subset, shortcut to edges between its
//! terminals and branching vertices. Each kernel edge remembers the
//! original path it stands for. Weights may be rounded up to a power-of-two
//! grid so they fit in few bits.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::binomial;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::exact::{solve_undirected, MAX_DP_TERMINALS};
use crate::graph::{check_feasible, Edge, EdgeId, Graph, TerminalSpec, VertexId};
use crate::paths::Metric;
use crate::solution::{prune_undirected, Solution};
use crate::weight::{int, pow2_floor, serde_rational, Rational, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SfVariant {
    /// Pair every terminal with the smallest one.
    Plain,
    /// Additionally give every Steiner vertex a private partner joined by a
    /// zero-weight edge so that every vertex is a terminal.
    NoSteiner,
}

/// Steiner tree on `terminals` as a Steiner forest instance with the same
/// optimum. `NoSteiner` appends one vertex per Steiner vertex.
pub fn st_to_sf(g: &Graph, terminals: &BTreeSet<VertexId>, variant: SfVariant) -> Result<(Graph, TerminalSpec)> {
    let Some(&r) = terminals.iter().next() else {
        return input("the terminal set is empty");
    };
    if g.is_directed() {
        return input("tree-to-forest reduction expects an undirected graph");
    }
    if let Some(t) = terminals.iter().find(|t| !g.contains_vertex(**t)) {
        return input(format!("terminal {t} is not a vertex of the graph"));
    }
    let mut pairs: Vec<(VertexId, VertexId)> = terminals.iter().skip(1).map(|&v| (v, r)).collect();
    let mut h = g.clone();
    if variant == SfVariant::NoSteiner {
        let steiner: Vec<VertexId> = g.vertices().filter(|v| !terminals.contains(v)).collect();
        for w in steiner {
            let w2 = h.add_vertex();
            h.add_edge(w, w2, Weight::zero())?;
            pairs.push((w, w2));
        }
    }
    Ok((h, TerminalSpec::forest(pairs)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Rounding {
    None,
    /// Grid chosen from the cost estimate so rounding costs at most `eps` OPT.
    Auto,
    /// Explicit grid step; zero means no rounding.
    #[serde(with = "serde_rational")]
    Step(Rational),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    pub subset_size: usize,
    #[serde(with = "serde_rational")]
    pub epsilon: Rational,
    pub rounding: Rounding,
    /// Refuse when more terminal subsets than this would be solved.
    pub max_subsets: u64,
}

impl KernelOptions {
    pub fn new(subset_size: usize, epsilon: Rational) -> Self {
        KernelOptions { subset_size, epsilon, rounding: Rounding::None, max_subsets: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelInstance {
    /// Vertices are original ids of terminals and branching vertices.
    pub graph: Graph,
    pub spec: TerminalSpec,
    /// Kernel edge id -> original edge ids of the path it replaces.
    pub provenance: Vec<Vec<EdgeId>>,
    /// Unrounded weight (original path cost) of each kernel edge.
    #[serde(with = "weights")]
    pub path_costs: Vec<Weight>,
    #[serde(with = "serde_rational")]
    pub step: Rational,
    /// Feasible-solution cost used for pruning; upper bound on the optimum.
    #[serde(with = "serde_rational")]
    pub upper_bound: Weight,
    pub pruned_vertices: usize,
    pub subsets_solved: u64,
}

mod weights {
    use super::*;
    use crate::weight::{format_rational, parse_rational};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ws: &[Weight], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(ws.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Weight>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter().map(|t| parse_rational(t).map_err(serde::de::Error::custom)).collect()
    }
}

/// Sum over pair classes of the minimum spanning tree of the class in the
/// metric closure: the cost of a feasible forest.
fn closure_mst_bound(metric: &Metric, classes: &[BTreeSet<VertexId>]) -> Option<Weight> {
    let mut total = Weight::zero();
    for class in classes {
        let nodes: Vec<VertexId> = class.iter().copied().collect();
        let mut in_tree = vec![false; nodes.len()];
        let mut best: Vec<Option<Weight>> = vec![None; nodes.len()];
        best[0] = Some(Weight::zero());
        for _ in 0..nodes.len() {
            let i = (0..nodes.len())
                .filter(|&i| !in_tree[i] && best[i].is_some())
                .min_by(|&a, &b| best[a].cmp(&best[b]))?;
            in_tree[i] = true;
            total += best[i].unwrap();
            for j in 0..nodes.len() {
                if !in_tree[j] {
                    if let Some(d) = metric.dist(nodes[i], nodes[j]) {
                        if best[j].as_ref().map_or(true, |b| d < *b) {
                            best[j] = Some(d);
                        }
                    }
                }
            }
        }
    }
    Some(total)
}

fn subsets_of_size_at_most(n: usize, k: usize) -> u64 {
    (2..=k.min(n)).map(|s| binomial(n as u64, s as u64)).sum()
}

/// Splits a tree (edge ids of `g`) into paths between key vertices:
/// terminals and vertices of degree other than two.
fn shortcut(g: &Graph, terminals: &BTreeSet<VertexId>, tree: &[EdgeId]) -> Vec<(VertexId, VertexId, Vec<EdgeId>)> {
    let mut adj: BTreeMap<VertexId, Vec<(VertexId, EdgeId)>> = BTreeMap::new();
    for &e in tree {
        let ed = g.edge(e);
        adj.entry(ed.u).or_default().push((ed.v, e));
        adj.entry(ed.v).or_default().push((ed.u, e));
    }
    let key = |v: VertexId| terminals.contains(&v) || adj[&v].len() != 2;
    let mut used = BTreeSet::new();
    let mut out = Vec::new();
    for (&start, nbrs) in &adj {
        if !key(start) {
            continue;
        }
        for &(first, e0) in nbrs {
            if used.contains(&e0) {
                continue;
            }
            let mut path = vec![e0];
            used.insert(e0);
            let mut cur = first;
            while !key(cur) {
                let &(next, e) = adj[&cur].iter().find(|(_, e)| !used.contains(e)).unwrap();
                used.insert(e);
                path.push(e);
                cur = next;
            }
            out.push((start.min(cur), start.max(cur), path));
        }
    }
    out
}

fn round_up(w: &Weight, step: &Rational) -> Weight {
    if step.is_zero() {
        return *w;
    }
    (w / step).ceil() * step
}

/// Builds the kernel of an undirected tree or forest instance.
pub fn subset_union_kernel(g: &Graph, spec: &TerminalSpec, opts: &KernelOptions) -> Result<KernelInstance> {
    if g.is_directed() {
        return input("the kernel is defined for undirected instances only");
    }
    if opts.subset_size < 2 {
        return input("subset size must be at least 2");
    }
    if !opts.epsilon.is_positive() {
        return input("epsilon must be positive");
    }
    spec.validate(g)?;
    let terminals = spec.terminals();
    let classes = spec.pair_classes();
    let k = opts.subset_size.min(terminals.len()).min(MAX_DP_TERMINALS);
    let count = subsets_of_size_at_most(terminals.len(), k);
    if count > opts.max_subsets {
        return Err(Error::TooLarge(format!(
            "{count} terminal subsets of size at most {k} exceed the cap of {}",
            opts.max_subsets
        )));
    }

    let metric = Metric::new(g);
    let upper = closure_mst_bound(&metric, &classes)
        .ok_or_else(|| Error::Infeasible("some terminal pair is disconnected".into()))?;
    // a vertex farther than any feasible cost from every terminal is in no optimum
    let keep: BTreeSet<VertexId> = g
        .vertices()
        .filter(|&v| terminals.iter().any(|&t| metric.dist(t, v).is_some_and(|d| d <= upper)))
        .collect();
    let pruned_vertices = g.vertex_count() - keep.len();
    let edges: Vec<Edge> = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| keep.contains(&e.u) && keep.contains(&e.v))
        .map(|(i, e)| Edge { origin: i, ..e.clone() })
        .collect();
    let local = Graph::from_parts(false, keep, edges);
    let local_metric = Metric::new(&local);

    let term_list: Vec<VertexId> = terminals.iter().copied().collect();
    let masks: Vec<u64> =
        (1u64..(1 << term_list.len())).filter(|m| (2..=k).contains(&(m.count_ones() as usize))).collect();
    let trees: Vec<Vec<EdgeId>> = masks
        .par_iter()
        .map(|&m| {
            let subset: BTreeSet<VertexId> =
                term_list.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, &t)| t).collect();
            match solve_undirected(&local, local_metric.clone(), &subset) {
                Ok(sol) => Ok(Some(sol.edges)),
                Err(Error::Infeasible(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .filter_map(|r| r.transpose())
        .collect::<Result<_>>()?;

    // cheapest path per key pair
    let mut best: BTreeMap<(VertexId, VertexId), (Weight, Vec<EdgeId>)> = BTreeMap::new();
    for tree in &trees {
        for (a, b, path) in shortcut(&local, &terminals, tree) {
            let cost = local.weight_of(&path);
            let orig: Vec<EdgeId> = local.origins(&path);
            match best.get(&(a, b)) {
                Some((c, p)) if (c, p) <= (&cost, &orig) => {}
                _ => {
                    best.insert((a, b), (cost, orig));
                }
            }
        }
    }

    let lower = if classes.is_empty() { Weight::zero() } else { upper / int(2 * classes.len() as i128) };
    let step = match opts.rounding {
        Rounding::None => Rational::zero(),
        Rounding::Step(s) if s.is_negative() => return input("rounding step must be non-negative"),
        Rounding::Step(s) => s,
        Rounding::Auto => pow2_floor(&(opts.epsilon * lower / int(2 * terminals.len().max(1) as i128))),
    };

    let mut vertices: BTreeSet<VertexId> = terminals.clone();
    vertices.extend(best.keys().flat_map(|&(a, b)| [a, b]));
    let mut kedges = Vec::new();
    let mut provenance = Vec::new();
    let mut path_costs = Vec::new();
    for (i, ((a, b), (cost, path))) in best.into_iter().enumerate() {
        kedges.push(Edge { u: a, v: b, weight: round_up(&cost, &step), origin: i });
        provenance.push(path);
        path_costs.push(cost);
    }
    Ok(KernelInstance {
        graph: Graph::from_parts(false, vertices, kedges),
        spec: spec.clone(),
        provenance,
        path_costs,
        step,
        upper_bound: upper,
        pruned_vertices,
        subsets_solved: count,
    })
}

/// Expands kernel edges to their paths in `g` and prunes the union.
pub fn lift_kernel_solution(g: &Graph, kernel: &KernelInstance, sol: &[EdgeId]) -> Result<Solution> {
    if !check_feasible(&kernel.graph, &kernel.spec, sol) {
        return Err(Error::Contract("solution is not feasible in the kernel".into()));
    }
    let expanded: Vec<EdgeId> = sol.iter().flat_map(|&e| kernel.provenance[e].iter().copied()).collect();
    let edges = prune_undirected(g, &kernel.spec.terminals(), &expanded);
    if !check_feasible(g, &kernel.spec, &edges) {
        return Err(Error::Contract("expanded kernel solution is infeasible".into()));
    }
    Ok(Solution::from_edges(g, edges))
}
