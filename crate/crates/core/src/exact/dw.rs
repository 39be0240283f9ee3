//! Dreyfus–Wagner subset dynamic program.
//!
//! `cost[S][v]` is the cheapest tree (arborescence rooted at `v` in the
//! directed case) connecting `v` to every terminal in `S`. Subsets are
//! processed in increasing numeric order, so every proper subset of `S` is
//! final before `S` is touched:
//!
//! ```text
//! merge[S][u] = min over S1 ⊂ S   cost[S1][u] + cost[S \ S1][u]
//! cost[S][v]  = min over u        dist(v, u) + merge[S][u]
//! ```

use std::collections::BTreeSet;

use crate::error::{input, Error, Result};
use crate::graph::{EdgeId, Graph, VertexId};
use crate::paths::Metric;
use crate::solution::{prune_arborescence, prune_undirected, Solution};
use crate::weight::{Weight, INF};

/// Non-root terminals handled by one table. 2^24 subsets times the vertex
/// count is already far beyond desk-scale memory.
pub const MAX_DP_TERMINALS: usize = 24;

const NONE: u32 = u32::MAX;

/// The filled table plus back-pointers, kept around for inspection.
#[derive(Debug, Clone)]
pub struct SubsetDpTable {
    metric: Metric,
    /// Dense indices of the non-root terminals; bit `i` of a mask is `terms[i]`.
    terms: Vec<usize>,
    root: usize,
    n: usize,
    cost: Vec<i128>,
    via: Vec<u32>,
    split: Vec<u32>,
}

impl SubsetDpTable {
    fn build(g: &Graph, metric: Metric, terminals: &BTreeSet<VertexId>, root: VertexId) -> Result<Self> {
        for &t in terminals {
            if !g.contains_vertex(t) {
                return input(format!("terminal {t} is not a vertex"));
            }
        }
        let terms: Vec<usize> = terminals.iter().filter(|&&t| t != root).map(|&t| metric.idx(t)).collect();
        if terms.len() > MAX_DP_TERMINALS {
            return Err(Error::TooLarge(format!(
                "{} terminals exceed the subset DP limit of {}",
                terms.len() + 1,
                MAX_DP_TERMINALS + 1
            )));
        }
        let root = metric.idx(root);
        let k = terms.len();
        let n = metric.len();
        let full = 1usize << k;
        let mut cost = vec![INF; full * n];
        let mut via = vec![NONE; full * n];
        let mut split = vec![0u32; full * n];
        for (i, &t) in terms.iter().enumerate() {
            let row = (1 << i) * n;
            for v in 0..n {
                cost[row + v] = metric.d(v, t);
            }
        }
        let mut merge = vec![INF; n];
        let mut merge_split = vec![0u32; n];
        for s in 1..full {
            if s.count_ones() < 2 {
                continue;
            }
            let low = s & s.wrapping_neg();
            let rest = s ^ low;
            for u in 0..n {
                let mut best = INF;
                let mut best_split = 0u32;
                // S1 always contains the lowest bit: each unordered split once.
                let mut sub = rest;
                loop {
                    let s1 = sub | low;
                    if s1 != s {
                        let a = cost[s1 * n + u];
                        let b = cost[(s ^ s1) * n + u];
                        if a < INF && b < INF && a + b < best {
                            best = a + b;
                            best_split = s1 as u32;
                        }
                    }
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & rest;
                }
                merge[u] = best;
                merge_split[u] = best_split;
            }
            let row = s * n;
            for v in 0..n {
                let mut best = INF;
                let mut arg = NONE;
                for u in 0..n {
                    let (m, d) = (merge[u], metric.d(v, u));
                    if m < INF && d < INF && d + m < best {
                        best = d + m;
                        arg = u as u32;
                    }
                }
                cost[row + v] = best;
                via[row + v] = arg;
                split[row + v] = if arg == NONE { 0 } else { merge_split[arg as usize] };
            }
        }
        Ok(SubsetDpTable { metric, terms, root, n, cost, via, split })
    }

    pub fn terminal_count(&self) -> usize {
        self.terms.len()
    }

    /// Table entry for a terminal subset (bit `i` = `i`-th non-root terminal
    /// in increasing id order) and a vertex; `None` when unreachable.
    pub fn cost(&self, mask: usize, v: VertexId) -> Option<Weight> {
        let c = if mask == 0 { 0 } else { self.cost[mask * self.n + self.metric.idx(v)] };
        (c < INF).then(|| self.metric.scale().to_rational(c))
    }

    /// Optimum over all terminals, rooted at the root.
    pub fn optimum(&self) -> Option<Weight> {
        self.cost(self.full(), self.metric.vertex(self.root))
    }

    fn full(&self) -> usize {
        (1usize << self.terms.len()) - 1
    }

    /// Edge multiset realizing `cost[full][root]` (may repeat or overlap).
    fn reconstruct(&self) -> Vec<EdgeId> {
        let mut out = Vec::new();
        if self.terms.is_empty() {
            return out;
        }
        let mut stack = vec![(self.full(), self.root)];
        while let Some((s, v)) = stack.pop() {
            if s.count_ones() == 1 {
                let t = self.terms[s.trailing_zeros() as usize];
                out.extend(self.metric.path_idx(v, t).expect("finite entry has a path"));
                continue;
            }
            let idx = s * self.n + v;
            let u = self.via[idx] as usize;
            let s1 = self.split[idx] as usize;
            out.extend(self.metric.path_idx(v, u).expect("finite entry has a path"));
            stack.push((s1, u));
            stack.push((s ^ s1, u));
        }
        out
    }
}

/// Minimum-weight tree spanning `terminals` in an undirected graph.
pub fn dreyfus_wagner(g: &Graph, terminals: &BTreeSet<VertexId>) -> Result<Solution> {
    if g.is_directed() {
        return input("dreyfus_wagner expects an undirected graph");
    }
    solve_undirected(g, Metric::new(g), terminals)
}

pub(crate) fn solve_undirected(g: &Graph, metric: Metric, terminals: &BTreeSet<VertexId>) -> Result<Solution> {
    let Some(&root) = terminals.iter().next() else {
        return Ok(Solution::empty());
    };
    if terminals.len() == 1 {
        if !g.contains_vertex(root) {
            return input(format!("terminal {root} is not a vertex"));
        }
        return Ok(Solution::empty());
    }
    let table = SubsetDpTable::build(g, metric, terminals, root)?;
    finish(g, &table, |edges| prune_undirected(g, terminals, edges))
}

/// Minimum-weight arborescence from `root` reaching every terminal.
pub fn dreyfus_wagner_directed(g: &Graph, terminals: &BTreeSet<VertexId>, root: VertexId) -> Result<Solution> {
    if !g.is_directed() {
        return input("dreyfus_wagner_directed expects a directed graph");
    }
    if !terminals.contains(&root) {
        return input(format!("root {root} is not a terminal"));
    }
    let table = SubsetDpTable::build(g, Metric::new(g), terminals, root)?;
    finish(g, &table, |arcs| prune_arborescence(g, root, terminals, arcs))
}

fn finish(g: &Graph, table: &SubsetDpTable, prune: impl Fn(&[EdgeId]) -> Vec<EdgeId>) -> Result<Solution> {
    let Some(opt) = table.optimum() else {
        return Err(Error::Infeasible("some terminal cannot be connected to the others".into()));
    };
    let edges = prune(&table.reconstruct());
    let sol = Solution::from_edges(g, edges);
    debug_assert_eq!(sol.cost, opt, "reconstruction must realize the table optimum");
    if sol.cost != opt {
        return Err(Error::Contract(format!(
            "reconstructed weight {} differs from table value {}",
            sol.cost, opt
        )));
    }
    Ok(sol)
}

impl SubsetDpTable {
    /// Table for the undirected problem rooted at the smallest terminal.
    pub fn undirected(g: &Graph, terminals: &BTreeSet<VertexId>) -> Result<Self> {
        let root = *terminals.iter().next().ok_or_else(|| Error::Input("no terminals".into()))?;
        Self::build(g, Metric::new(g), terminals, root)
    }

    pub fn directed(g: &Graph, terminals: &BTreeSet<VertexId>, root: VertexId) -> Result<Self> {
        Self::build(g, Metric::new(g), terminals, root)
    }
}
