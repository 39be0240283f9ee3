//! Solutions and structural clean-up of edge sets.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graph::{Dsu, EdgeId, Graph, VertexId};
use crate::paths::dijkstra;
use crate::weight::{serde_rational, IntScale, Weight, INF};

/// An edge (arc) subset of some graph together with its total weight.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    /// Sorted, de-duplicated edge ids.
    pub edges: Vec<EdgeId>,
    #[serde(with = "serde_rational")]
    pub cost: Weight,
}

impl Solution {
    pub fn empty() -> Self {
        Solution { edges: Vec::new(), cost: Weight::default() }
    }

    pub fn from_edges(g: &Graph, edges: impl IntoIterator<Item = EdgeId>) -> Self {
        let mut edges: Vec<EdgeId> = edges.into_iter().collect();
        edges.sort_unstable();
        edges.dedup();
        let cost = g.weight_of(&edges);
        Solution { edges, cost }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Minimum spanning forest of the union of `edges`, with non-terminal
/// leaves stripped repeatedly. Never heavier than the input set and keeps
/// every connection among `terminals` that the input had.
pub fn prune_undirected(g: &Graph, terminals: &BTreeSet<VertexId>, edges: &[EdgeId]) -> Vec<EdgeId> {
    let mut sorted: Vec<EdgeId> = edges.to_vec();
    sorted.sort_by(|&a, &b| (&g.edge(a).weight, a).cmp(&(&g.edge(b).weight, b)));
    sorted.dedup();
    let mut dsu = Dsu::default();
    let mut kept: Vec<EdgeId> = sorted.into_iter().filter(|&e| dsu.union(g.edge(e).u, g.edge(e).v)).collect();
    loop {
        let mut degree: BTreeMap<VertexId, usize> = BTreeMap::new();
        for &e in &kept {
            *degree.entry(g.edge(e).u).or_default() += 1;
            *degree.entry(g.edge(e).v).or_default() += 1;
        }
        let leaf = |v: VertexId| degree[&v] == 1 && !terminals.contains(&v);
        let before = kept.len();
        kept.retain(|&e| !leaf(g.edge(e).u) && !leaf(g.edge(e).v));
        if kept.len() == before {
            break;
        }
    }
    kept.sort_unstable();
    kept
}

/// Shortest-path arborescence from `root` inside the union of `arcs`,
/// restricted to what is needed to reach `terminals`.
pub fn prune_arborescence(g: &Graph, root: VertexId, terminals: &BTreeSet<VertexId>, arcs: &[EdgeId]) -> Vec<EdgeId> {
    let scale = IntScale::for_weights(arcs.iter().map(|&a| &g.edge(a).weight));
    let mut adj = vec![Vec::new(); g.id_bound()];
    let mut uniq: Vec<EdgeId> = arcs.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    for &a in &uniq {
        let e = g.edge(a);
        adj[e.u].push((e.v, a, scale.to_int(&e.weight)));
    }
    let (dist, pred) = dijkstra(&adj, root);
    let mut keep = BTreeSet::new();
    for &t in terminals {
        if t == root || dist[t] >= INF {
            continue;
        }
        let mut cur = t;
        while cur != root {
            let a = pred[cur];
            if !keep.insert(a) {
                break;
            }
            cur = g.edge(a).u;
        }
    }
    keep.into_iter().collect()
}

/// Root has in-degree zero, every other vertex touched has in-degree one,
/// everything is reachable from the root, and all terminals are covered.
pub fn is_arborescence(g: &Graph, root: VertexId, terminals: &BTreeSet<VertexId>, arcs: &[EdgeId]) -> bool {
    let mut indeg: BTreeMap<VertexId, usize> = BTreeMap::new();
    let mut touched = BTreeSet::from([root]);
    for &a in arcs {
        let e = g.edge(a);
        *indeg.entry(e.v).or_default() += 1;
        touched.insert(e.u);
        touched.insert(e.v);
    }
    if indeg.get(&root).is_some() || indeg.values().any(|&d| d != 1) {
        return false;
    }
    let reached = crate::graph::reachable_from(g, root, arcs);
    reached == touched && terminals.iter().all(|t| reached.contains(t))
}

/// True iff the undirected edge set has no cycle.
pub fn is_acyclic(g: &Graph, edges: &[EdgeId]) -> bool {
    let mut dsu = Dsu::default();
    edges.iter().all(|&e| dsu.union(g.edge(e).u, g.edge(e).v))
}

/// Number of connected components spanned by an undirected edge set
/// (isolated vertices do not count).
pub fn component_count(g: &Graph, edges: &[EdgeId]) -> usize {
    let mut dsu = Dsu::default();
    let mut touched = BTreeSet::new();
    for &e in edges {
        let ed = g.edge(e);
        dsu.union(ed.u, ed.v);
        touched.insert(ed.u);
        touched.insert(ed.v);
    }
    touched.iter().map(|&v| dsu.find(v)).collect::<BTreeSet<_>>().len()
}
