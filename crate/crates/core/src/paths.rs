//! Shortest paths on exact weights.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::graph::{EdgeId, Graph, VertexId};
use crate::weight::{IntScale, Weight, INF};

const NONE: usize = usize::MAX;

/// Single-source Dijkstra on integer weights over a dense vertex index.
/// `adj[x]` lists `(y, edge id, weight)`; ties resolve towards smaller ids.
pub(crate) fn dijkstra(adj: &[Vec<(usize, EdgeId, i128)>], src: usize) -> (Vec<i128>, Vec<EdgeId>) {
    let n = adj.len();
    let mut dist = vec![INF; n];
    let mut pred = vec![NONE; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0;
    heap.push(Reverse((0i128, src)));
    while let Some(Reverse((d, x))) = heap.pop() {
        if d > dist[x] {
            continue;
        }
        for &(y, e, w) in &adj[x] {
            let nd = d + w;
            if nd < dist[y] {
                dist[y] = nd;
                pred[y] = e;
                heap.push(Reverse((nd, y)));
            }
        }
    }
    (dist, pred)
}

/// All-pairs shortest paths with predecessor edges, on the integer image
/// of the graph's weights.
#[derive(Debug, Clone)]
pub struct Metric {
    ids: Vec<VertexId>,
    index: Vec<usize>,
    scale: IntScale,
    n: usize,
    dist: Vec<i128>,
    pred: Vec<EdgeId>,
    ends: Vec<(usize, usize)>,
    directed: bool,
}

impl Metric {
    pub fn new(g: &Graph) -> Metric {
        let ids: Vec<VertexId> = g.vertices().collect();
        let mut index = vec![NONE; g.id_bound()];
        for (i, &v) in ids.iter().enumerate() {
            index[v] = i;
        }
        let scale = IntScale::for_weights(g.edges().iter().map(|e| &e.weight));
        let n = ids.len();
        let mut adj = vec![Vec::new(); n];
        let mut ends = Vec::with_capacity(g.edge_count());
        for (id, e) in g.edges().iter().enumerate() {
            let (a, b) = (index[e.u], index[e.v]);
            let w = scale.to_int(&e.weight);
            adj[a].push((b, id, w));
            if !g.is_directed() {
                adj[b].push((a, id, w));
            }
            ends.push((a, b));
        }
        let rows: Vec<(Vec<i128>, Vec<EdgeId>)> = (0..n).into_par_iter().map(|s| dijkstra(&adj, s)).collect();
        let mut dist = Vec::with_capacity(n * n);
        let mut pred = Vec::with_capacity(n * n);
        for (d, p) in rows {
            dist.extend(d);
            pred.extend(p);
        }
        Metric { ids, index, scale, n, dist, pred, ends, directed: g.is_directed() }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn scale(&self) -> IntScale {
        self.scale
    }

    /// Dense index of a vertex id.
    pub fn idx(&self, v: VertexId) -> usize {
        self.index[v]
    }

    pub fn vertex(&self, i: usize) -> VertexId {
        self.ids[i]
    }

    /// Integer distance between dense indices (`INF` if unreachable).
    pub fn d(&self, a: usize, b: usize) -> i128 {
        self.dist[a * self.n + b]
    }

    pub fn dist(&self, a: VertexId, b: VertexId) -> Option<Weight> {
        let d = self.d(self.index[a], self.index[b]);
        (d < INF).then(|| self.scale.to_rational(d))
    }

    /// Edge ids of a shortest `a -> b` path between dense indices.
    pub fn path_idx(&self, a: usize, b: usize) -> Option<Vec<EdgeId>> {
        if self.d(a, b) >= INF {
            return None;
        }
        let mut out = Vec::new();
        let mut cur = b;
        while cur != a {
            let e = self.pred[a * self.n + cur];
            out.push(e);
            let (x, y) = self.ends[e];
            cur = if self.directed || y == cur { x } else { y };
        }
        out.reverse();
        Some(out)
    }

    pub fn path(&self, a: VertexId, b: VertexId) -> Option<Vec<EdgeId>> {
        self.path_idx(self.index[a], self.index[b])
    }
}
