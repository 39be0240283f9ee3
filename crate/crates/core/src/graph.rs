//! Weighted (multi)graphs, terminal specifications, and contraction.
//!
//! Vertex ids are stable across contractions: a merged vertex keeps the
//! smallest id of the group it replaces. Every edge carries the id of the
//! input edge it descends from (`origin`), which is what lifting uses.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::weight::{int, is_non_negative, serde_rational, Weight};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    /// Tail for arcs.
    pub u: VertexId,
    /// Head for arcs.
    pub v: VertexId,
    #[serde(with = "serde_rational")]
    pub weight: Weight,
    /// Id of the edge in the input graph this edge descends from.
    pub origin: EdgeId,
}

impl Edge {
    pub fn other(&self, x: VertexId) -> VertexId {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }

    fn key(&self, directed: bool) -> (VertexId, VertexId) {
        if directed || self.u <= self.v {
            (self.u, self.v)
        } else {
            (self.v, self.u)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    directed: bool,
    vertices: BTreeSet<VertexId>,
    edges: Vec<Edge>,
}

impl Graph {
    /// Graph on vertices `0..n` without edges.
    pub fn new(directed: bool, n: usize) -> Self {
        Graph { directed, vertices: (0..n).collect(), edges: Vec::new() }
    }

    pub fn from_edges(
        directed: bool,
        n: usize,
        edges: impl IntoIterator<Item = (VertexId, VertexId, Weight)>,
    ) -> Result<Self> {
        let mut g = Graph::new(directed, n);
        for (u, v, w) in edges {
            g.add_edge(u, v, w)?;
        }
        Ok(g)
    }

    /// Appends an input edge; its origin is its own index.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId, weight: Weight) -> Result<EdgeId> {
        if !self.vertices.contains(&u) || !self.vertices.contains(&v) {
            return input(format!("edge ({u}, {v}) references an unknown vertex"));
        }
        if u == v {
            return input(format!("self-loop at vertex {u}"));
        }
        if !is_non_negative(&weight) {
            return input(format!("negative weight on edge ({u}, {v})"));
        }
        let id = self.edges.len();
        self.edges.push(Edge { u, v, weight, origin: id });
        Ok(id)
    }

    pub fn add_vertex(&mut self) -> VertexId {
        let id = self.id_bound();
        self.vertices.insert(id);
        id
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.iter().copied()
    }

    pub fn vertex_set(&self) -> &BTreeSet<VertexId> {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    /// One past the largest vertex id; dense per-vertex arrays use this length.
    pub fn id_bound(&self) -> usize {
        self.vertices.iter().next_back().map_or(0, |v| v + 1)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weight_of(&self, ids: &[EdgeId]) -> Weight {
        ids.iter().map(|&e| self.edges[e].weight).sum()
    }

    pub fn min_weight(&self) -> Option<Weight> {
        self.edges.iter().map(|e| e.weight).min()
    }

    /// Outgoing (directed) or incident (undirected) edges per vertex id.
    pub fn adjacency(&self) -> Vec<Vec<(VertexId, EdgeId)>> {
        let mut adj = vec![Vec::new(); self.id_bound()];
        for (id, e) in self.edges.iter().enumerate() {
            adj[e.u].push((e.v, id));
            if !self.directed {
                adj[e.v].push((e.u, id));
            }
        }
        adj
    }

    /// Incoming arcs per vertex id (for undirected graphs same as `adjacency`).
    pub fn in_adjacency(&self) -> Vec<Vec<(VertexId, EdgeId)>> {
        if !self.directed {
            return self.adjacency();
        }
        let mut adj = vec![Vec::new(); self.id_bound()];
        for (id, e) in self.edges.iter().enumerate() {
            adj[e.v].push((e.u, id));
        }
        adj
    }

    /// Drops loops and keeps the lightest edge of every parallel bundle
    /// (ties: smaller origin). Edges come out sorted by endpoint pair.
    pub fn simplified(&self) -> Graph {
        let mut best: BTreeMap<(VertexId, VertexId), Edge> = BTreeMap::new();
        for e in &self.edges {
            if e.u == e.v {
                continue;
            }
            let key = e.key(self.directed);
            match best.get(&key) {
                Some(cur) if (&cur.weight, cur.origin) <= (&e.weight, e.origin) => {}
                _ => {
                    best.insert(key, e.clone());
                }
            }
        }
        Graph { directed: self.directed, vertices: self.vertices.clone(), edges: best.into_values().collect() }
    }

    pub fn is_simple(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.edges.iter().all(|e| e.u != e.v && seen.insert(e.key(self.directed)))
    }

    /// Same vertex ids and endpoint pairs with weights multiplied by `scale`.
    pub fn scaled(&self, scale: &Weight) -> Graph {
        let mut g = self.clone();
        for e in &mut g.edges {
            e.weight *= scale;
        }
        g
    }

    /// Replaces every weight by one.
    pub fn with_unit_weights(&self) -> Graph {
        let mut g = self.clone();
        for e in &mut g.edges {
            e.weight = Weight::one();
        }
        g
    }

    /// Finds the lightest edge joining `u` and `v` (respecting direction).
    pub fn find_edge(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| (e.u == u && e.v == v) || (!self.directed && e.u == v && e.v == u))
            .min_by(|(i, a), (j, b)| (&a.weight, i).cmp(&(&b.weight, j)))
            .map(|(i, _)| i)
    }

    /// Map from current edge id to the input edge it descends from.
    pub fn origins(&self, ids: &[EdgeId]) -> Vec<EdgeId> {
        ids.iter().map(|&e| self.edges[e].origin).collect()
    }

    /// Same graph with every edge's origin set to its own index, so that
    /// derived graphs report ids of this one.
    pub fn reindexed(&self) -> Graph {
        let mut g = self.clone();
        for (i, e) in g.edges.iter_mut().enumerate() {
            e.origin = i;
        }
        g
    }

    pub(crate) fn from_parts(directed: bool, vertices: BTreeSet<VertexId>, edges: Vec<Edge>) -> Graph {
        Graph { directed, vertices, edges }
    }
}

/// Which vertices a solution has to connect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminalSpec {
    /// Connect all of `terminals`; directed instances additionally need a root.
    Tree { terminals: BTreeSet<VertexId>, root: Option<VertexId> },
    /// Connect each pair; stored as `(min, max)` and de-duplicated.
    Forest { pairs: BTreeSet<(VertexId, VertexId)> },
}

impl TerminalSpec {
    pub fn tree(terminals: impl IntoIterator<Item = VertexId>, root: Option<VertexId>) -> Result<Self> {
        let terminals: BTreeSet<_> = terminals.into_iter().collect();
        if let Some(r) = root {
            if !terminals.contains(&r) {
                return input(format!("root {r} is not a terminal"));
            }
        }
        Ok(TerminalSpec::Tree { terminals, root })
    }

    /// Pairs with equal endpoints are already connected and dropped.
    pub fn forest(pairs: impl IntoIterator<Item = (VertexId, VertexId)>) -> Self {
        let pairs = pairs
            .into_iter()
            .filter(|(s, t)| s != t)
            .map(|(s, t)| (s.min(t), s.max(t)))
            .collect();
        TerminalSpec::Forest { pairs }
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        for v in self.terminals() {
            if !g.contains_vertex(v) {
                return input(format!("terminal {v} is not a vertex of the graph"));
            }
        }
        match self {
            TerminalSpec::Tree { terminals, root: Some(r) } if !terminals.contains(r) => {
                input(format!("root {r} is not a terminal"))
            }
            TerminalSpec::Tree { root: None, terminals } if g.is_directed() && !terminals.is_empty() => {
                input("directed tree instances need a root")
            }
            _ => Ok(()),
        }
    }

    pub fn terminals(&self) -> BTreeSet<VertexId> {
        match self {
            TerminalSpec::Tree { terminals, .. } => terminals.clone(),
            TerminalSpec::Forest { pairs } => pairs.iter().flat_map(|&(s, t)| [s, t]).collect(),
        }
    }

    pub fn terminal_count(&self) -> usize {
        self.terminals().len()
    }

    pub fn root(&self) -> Option<VertexId> {
        match self {
            TerminalSpec::Tree { root, .. } => *root,
            TerminalSpec::Forest { .. } => None,
        }
    }

    pub fn is_forest(&self) -> bool {
        matches!(self, TerminalSpec::Forest { .. })
    }

    pub fn pairs(&self) -> Option<&BTreeSet<(VertexId, VertexId)>> {
        match self {
            TerminalSpec::Forest { pairs } => Some(pairs),
            TerminalSpec::Tree { .. } => None,
        }
    }

    /// Terminal groups that must end up in a common component: the connected
    /// components of the pair graph, or the whole terminal set for trees.
    pub fn pair_classes(&self) -> Vec<BTreeSet<VertexId>> {
        match self {
            TerminalSpec::Tree { terminals, .. } => {
                if terminals.len() < 2 {
                    Vec::new()
                } else {
                    vec![terminals.clone()]
                }
            }
            TerminalSpec::Forest { pairs } => {
                let mut dsu = Dsu::default();
                for &(s, t) in pairs {
                    dsu.union(s, t);
                }
                let mut classes: BTreeMap<VertexId, BTreeSet<VertexId>> = BTreeMap::new();
                for &(s, t) in pairs {
                    let r = dsu.find(s);
                    classes.entry(r).or_default().extend([s, t]);
                }
                let mut out: Vec<_> = classes.into_values().collect();
                out.sort();
                out
            }
        }
    }

    /// Rewrites vertex ids; pairs collapsing onto one vertex vanish.
    pub fn remap(&self, f: impl Fn(VertexId) -> VertexId) -> TerminalSpec {
        match self {
            TerminalSpec::Tree { terminals, root } => {
                TerminalSpec::Tree { terminals: terminals.iter().map(|&t| f(t)).collect(), root: root.map(&f) }
            }
            TerminalSpec::Forest { pairs } => TerminalSpec::forest(pairs.iter().map(|&(s, t)| (f(s), f(t)))),
        }
    }
}

/// Merge-find structure from original vertex ids to current ids.
/// The representative of a class is always its smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexMap {
    parent: Vec<VertexId>,
}

impl VertexMap {
    pub fn identity(id_bound: usize) -> Self {
        VertexMap { parent: (0..id_bound).collect() }
    }

    pub fn resolve(&self, mut v: VertexId) -> VertexId {
        while self.parent[v] != v {
            v = self.parent[v];
        }
        v
    }

    /// Records that every vertex in `group` (current ids) now lives at `into`.
    pub fn apply(&mut self, group: &[VertexId], into: VertexId) {
        for &v in group {
            let r = self.resolve(v);
            self.parent[r] = into;
        }
        self.parent[into] = into;
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }
}

/// Result of merging a connected vertex group into its smallest member.
#[derive(Debug, Clone)]
pub struct Contraction {
    pub graph: Graph,
    pub spec: TerminalSpec,
    /// The vertices that were merged (current ids, sorted).
    pub merged: Vec<VertexId>,
    /// Id of the merged vertex.
    pub into: VertexId,
}

/// Identifies all endpoints of `edges` (ids into `g`), removes loops, and
/// keeps the lightest edge of each parallel bundle.
pub fn contract_edge_set(g: &Graph, spec: &TerminalSpec, edges: &[EdgeId]) -> Result<Contraction> {
    if edges.is_empty() {
        return input("cannot contract an empty edge set");
    }
    let mut dsu = Dsu::default();
    let mut group = BTreeSet::new();
    for &id in edges {
        let Some(e) = g.edges.get(id) else {
            return input(format!("unknown edge id {id}"));
        };
        dsu.union(e.u, e.v);
        group.insert(e.u);
        group.insert(e.v);
    }
    let first = *group.iter().next().unwrap();
    let root = dsu.find(first);
    if group.iter().any(|&v| dsu.find(v) != root) {
        return input("contracted edge set is not connected");
    }
    Ok(merge_group(g, spec, &group))
}

/// Merges a vertex group that the caller knows to be connected in `g`.
pub fn contract_vertices(g: &Graph, spec: &TerminalSpec, group: &BTreeSet<VertexId>) -> Result<Contraction> {
    if group.is_empty() {
        return input("cannot contract an empty vertex set");
    }
    if let Some(v) = group.iter().find(|v| !g.contains_vertex(**v)) {
        return input(format!("unknown vertex {v}"));
    }
    Ok(merge_group(g, spec, group))
}

fn merge_group(g: &Graph, spec: &TerminalSpec, group: &BTreeSet<VertexId>) -> Contraction {
    let into = *group.iter().next().unwrap();
    let f = |v: VertexId| if group.contains(&v) { into } else { v };
    let vertices = g.vertices.iter().copied().filter(|v| *v == into || !group.contains(v)).collect();
    let edges = g.edges.iter().map(|e| Edge { u: f(e.u), v: f(e.v), ..e.clone() }).collect();
    let graph = Graph { directed: g.directed, vertices, edges }.simplified();
    Contraction { graph, spec: spec.remap(f), merged: group.iter().copied().collect(), into }
}

/// Output of [`normalize_weights`].
#[derive(Debug, Clone)]
pub struct Normalized {
    pub graph: Graph,
    pub spec: TerminalSpec,
    /// Normalized weight = original weight * scale.
    pub scale: Weight,
    /// Input edges of weight zero that were contracted away (origin ids).
    pub zero_edges: Vec<EdgeId>,
    pub map: VertexMap,
}

/// Contracts zero-weight edges, simplifies, then rescales so every
/// remaining weight is strictly greater than one (`scale = 2 / w_min` when
/// the minimum is at most one, else 1).
pub fn normalize_weights(g: &Graph, spec: &TerminalSpec) -> Result<Normalized> {
    spec.validate(g)?;
    let mut graph = g.simplified();
    let mut spec = spec.clone();
    let mut map = VertexMap::identity(g.id_bound());
    let mut zero_edges = Vec::new();
    while let Some(id) = graph.edges.iter().position(|e| e.weight.is_zero()) {
        zero_edges.push(graph.edges[id].origin);
        let c = contract_edge_set(&graph, &spec, &[id])?;
        map.apply(&c.merged, c.into);
        graph = c.graph;
        spec = c.spec;
    }
    let scale = match graph.min_weight() {
        Some(m) if m <= Weight::one() => int(2) / m,
        _ => Weight::one(),
    };
    if scale != Weight::one() {
        graph = graph.scaled(&scale);
    }
    zero_edges.sort_unstable();
    Ok(Normalized { graph, spec, scale, zero_edges, map })
}

/// True iff `sol` (edge ids of `g`) satisfies `spec`.
pub fn check_feasible(g: &Graph, spec: &TerminalSpec, sol: &[EdgeId]) -> bool {
    if sol.iter().any(|&e| e >= g.edge_count()) {
        return false;
    }
    if g.directed {
        let Some(root) = spec.root() else {
            return spec.terminals().is_empty();
        };
        let reached = reachable_from(g, root, sol);
        return spec.terminals().iter().all(|t| reached.contains(t));
    }
    let mut dsu = Dsu::default();
    for &id in sol {
        dsu.union(g.edges[id].u, g.edges[id].v);
    }
    match spec {
        TerminalSpec::Tree { terminals, .. } => {
            let mut it = terminals.iter();
            match it.next() {
                None => true,
                Some(&first) => {
                    let r = dsu.find(first);
                    it.all(|&t| dsu.find(t) == r)
                }
            }
        }
        TerminalSpec::Forest { pairs } => pairs.iter().all(|&(s, t)| dsu.find(s) == dsu.find(t)),
    }
}

/// Vertices reachable from `root` using only `arcs` (edge ids of a directed graph).
pub fn reachable_from(g: &Graph, root: VertexId, arcs: &[EdgeId]) -> BTreeSet<VertexId> {
    let mut out: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for &id in arcs {
        let e = &g.edges[id];
        out.entry(e.u).or_default().push(e.v);
    }
    let mut seen = BTreeSet::from([root]);
    let mut queue = VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        for &y in out.get(&x).into_iter().flatten() {
            if seen.insert(y) {
                queue.push_back(y);
            }
        }
    }
    seen
}

/// Sparse union-find keyed by vertex id.
#[derive(Debug, Default, Clone)]
pub(crate) struct Dsu {
    parent: BTreeMap<VertexId, VertexId>,
}

impl Dsu {
    pub fn find(&mut self, v: VertexId) -> VertexId {
        let p = *self.parent.entry(v).or_insert(v);
        if p == v {
            return v;
        }
        let r = self.find(p);
        self.parent.insert(v, r);
        r
    }

    /// Returns false when `a` and `b` were already joined.
    pub fn union(&mut self, a: VertexId, b: VertexId) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.parent.insert(hi, lo);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::weight::ratio;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn triangle() -> Graph {
        Graph::from_edges(false, 3, [(0, 1, int(1)), (1, 2, int(2)), (0, 2, int(3))]).unwrap()
    }

    #[test]
    fn contracting_triangle_keeps_lightest_parallel() {
        let g = triangle();
        let spec = TerminalSpec::forest([(0, 2)]);
        let c = contract_edge_set(&g, &spec, &[0]).unwrap();
        assert_eq!(c.graph.vertex_count(), 2);
        assert_eq!(c.graph.edge_count(), 1);
        assert_eq!(c.graph.edges()[0].weight, int(2));
        assert_eq!(c.graph.edges()[0].origin, 1);
        assert_eq!(c.spec, TerminalSpec::forest([(0, 2)]));
        assert_eq!(c.into, 0);
    }

    #[test]
    fn pair_inside_contracted_set_is_removed() {
        let g = triangle();
        let spec = TerminalSpec::forest([(0, 1), (1, 2)]);
        let c = contract_edge_set(&g, &spec, &[0]).unwrap();
        assert_eq!(c.spec, TerminalSpec::forest([(0, 2)]));
    }

    #[test]
    fn contraction_errors() {
        let g = triangle();
        let spec = TerminalSpec::forest([(0, 1)]);
        assert!(matches!(contract_edge_set(&g, &spec, &[]), Err(Error::Input(_))));
        assert!(matches!(contract_edge_set(&g, &spec, &[7]), Err(Error::Input(_))));
        let g4 = Graph::from_edges(false, 4, [(0, 1, int(1)), (2, 3, int(1))]).unwrap();
        assert!(matches!(contract_edge_set(&g4, &spec, &[0, 1]), Err(Error::Input(_))));
    }

    #[test]
    fn root_follows_contraction() {
        let g = Graph::from_edges(true, 3, [(1, 0, int(1)), (0, 2, int(1))]).unwrap();
        let spec = TerminalSpec::tree([0, 1], Some(1)).unwrap();
        let c = contract_edge_set(&g, &spec, &[0]).unwrap();
        assert_eq!(c.spec.root(), Some(0));
        assert_eq!(c.spec.terminals(), BTreeSet::from([0]));
    }

    #[test]
    fn normalize_examples() {
        let g = Graph::from_edges(false, 3, [(0, 1, int(2)), (1, 2, int(4))]).unwrap();
        let n = normalize_weights(&g, &TerminalSpec::forest([(0, 2)])).unwrap();
        assert_eq!(n.scale, int(1));
        assert_eq!(n.graph.edges()[0].weight, int(2));

        let g = Graph::from_edges(false, 3, [(0, 1, ratio(1, 2)), (1, 2, int(1))]).unwrap();
        let n = normalize_weights(&g, &TerminalSpec::forest([(0, 2)])).unwrap();
        assert_eq!(n.scale, int(4));
        let ws: Vec<_> = n.graph.edges().iter().map(|e| e.weight).collect();
        assert_eq!(ws, vec![int(2), int(4)]);

        let g = Graph::from_edges(false, 3, [(0, 1, int(0)), (1, 2, int(3))]).unwrap();
        let n = normalize_weights(&g, &TerminalSpec::forest([(0, 2)])).unwrap();
        assert_eq!(n.zero_edges, vec![0]);
        assert_eq!(n.graph.vertex_count(), 2);
        assert_eq!(n.graph.edges()[0].weight, int(3));
        assert_eq!(n.spec, TerminalSpec::forest([(0, 2)]));

        let empty = Graph::new(false, 2);
        assert_eq!(normalize_weights(&empty, &TerminalSpec::forest([])).unwrap().scale, int(1));
    }

    #[test]
    fn feasibility_basics() {
        let g = triangle();
        assert!(!check_feasible(&g, &TerminalSpec::forest([(0, 2)]), &[]));
        assert!(check_feasible(&g, &TerminalSpec::forest([(0, 2)]), &[0, 1]));
        assert!(check_feasible(&g, &TerminalSpec::tree([0, 1, 2], None).unwrap(), &[0, 1, 2]));
        let d = Graph::from_edges(true, 3, [(0, 1, int(1)), (2, 1, int(1))]).unwrap();
        let spec = TerminalSpec::tree([0, 1, 2], Some(0)).unwrap();
        assert!(!check_feasible(&d, &spec, &[0, 1]));
        let spec = TerminalSpec::tree([0, 1], Some(0)).unwrap();
        assert!(check_feasible(&d, &spec, &[0]));
    }

    #[test]
    fn spec_validation() {
        assert!(TerminalSpec::tree([1, 2], Some(0)).is_err());
        let g = Graph::new(true, 2);
        let spec = TerminalSpec::tree([0, 5], None).unwrap();
        assert!(spec.validate(&g).is_err());
        assert!(TerminalSpec::tree([0, 1], None).unwrap().validate(&g).is_err());
        assert_eq!(TerminalSpec::forest([(1, 1), (2, 1), (1, 2)]), TerminalSpec::forest([(1, 2)]));
    }

    fn random_multigraph(seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = Graph::new(false, 8);
        for _ in 0..16 {
            let u = rng.gen_range(0..8);
            let v = rng.gen_range(0..8);
            if u != v {
                g.add_edge(u, v, int(rng.gen_range(1..10))).unwrap();
            }
        }
        g
    }

    /// Rebuilds the contracted graph from scratch with a plain relabel map.
    fn naive_contract(g: &Graph, group: &BTreeSet<VertexId>) -> BTreeMap<(VertexId, VertexId), Weight> {
        let rep = *group.iter().next().unwrap();
        let label = |v| if group.contains(&v) { rep } else { v };
        let mut out: BTreeMap<(VertexId, VertexId), Weight> = BTreeMap::new();
        for e in g.edges() {
            let (a, b) = (label(e.u), label(e.v));
            if a == b {
                continue;
            }
            let key = (a.min(b), a.max(b));
            let w = out.entry(key).or_insert(e.weight);
            if e.weight < *w {
                *w = e.weight;
            }
        }
        out
    }

    fn as_map(g: &Graph) -> BTreeMap<(VertexId, VertexId), Weight> {
        g.edges().iter().map(|e| ((e.u.min(e.v), e.u.max(e.v)), e.weight)).collect()
    }

    #[test]
    fn star_contraction_matches_naive_rebuild() {
        for seed in 0..50 {
            let g = random_multigraph(seed);
            let adj = g.adjacency();
            let Some(center) = (0..8).find(|&v| adj[v].len() >= 3) else { continue };
            let star: Vec<EdgeId> = adj[center].iter().map(|&(_, e)| e).take(3).collect();
            let group: BTreeSet<_> = star.iter().flat_map(|&e| [g.edge(e).u, g.edge(e).v]).collect();
            let c = contract_edge_set(&g, &TerminalSpec::forest([]), &star).unwrap();
            assert_eq!(as_map(&c.graph), naive_contract(&g, &group), "seed {seed}");
            assert_eq!(c.graph.vertex_count(), 8 - (group.len() - 1));
            assert!(c.graph.is_simple());
        }
    }

    proptest! {
        #[test]
        fn sequential_contractions_equal_bulk(seed in 0u64..500, a in 0usize..16, b in 0usize..16) {
            let g = random_multigraph(seed);
            prop_assume!(g.edge_count() > a.max(b));
            let spec = TerminalSpec::forest([]);
            let c1 = contract_edge_set(&g, &spec, &[a]).unwrap();
            let target = &g.edge(b);
            let mut map = VertexMap::identity(8);
            map.apply(&c1.merged, c1.into);
            let (bu, bv) = (map.resolve(target.u), map.resolve(target.v));
            let seq = if bu == bv {
                c1.graph.clone()
            } else {
                let id = c1.graph.find_edge(bu, bv).unwrap();
                let c2 = contract_edge_set(&c1.graph, &spec, &[id]).unwrap();
                map.apply(&c2.merged, c2.into);
                c2.graph
            };
            let mut dsu = Dsu::default();
            dsu.union(g.edge(a).u, g.edge(a).v);
            dsu.union(g.edge(b).u, g.edge(b).v);
            let mut groups: BTreeMap<VertexId, BTreeSet<VertexId>> = BTreeMap::new();
            for v in 0..8 { groups.entry(dsu.find(v)).or_default().insert(v); }
            let mut bulk = g.clone();
            for grp in groups.values().filter(|s| s.len() > 1) {
                bulk = contract_vertices(&bulk, &spec, grp).unwrap().graph;
            }
            prop_assert_eq!(as_map(&seq), as_map(&bulk));
            for v in 0..8 { prop_assert_eq!(map.resolve(map.resolve(v)), map.resolve(v)); }
        }

        #[test]
        fn lifted_solution_stays_feasible(seed in 0u64..300) {
            let g = random_multigraph(seed);
            prop_assume!(g.edge_count() > 0);
            let spec = TerminalSpec::forest([(0, 7), (1, 5), (2, 6)]);
            let c = contract_edge_set(&g, &spec, &[0]).unwrap();
            // take every edge of the contracted graph: feasible iff pairs connected there
            let all: Vec<EdgeId> = (0..c.graph.edge_count()).collect();
            if check_feasible(&c.graph, &c.spec, &all) {
                let mut lifted = c.graph.origins(&all);
                lifted.push(0);
                prop_assert!(check_feasible(&g, &spec, &lifted));
            }
        }
    }
}
