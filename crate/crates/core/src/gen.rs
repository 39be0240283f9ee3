//! Instance generators: seeded random instances with an optional planted
//! solution, the dominating set reduction to weighted directed Steiner tree
//! and the set cover gap composition for unweighted directed Steiner tree.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::graph::{EdgeId, Graph, TerminalSpec, VertexId};
use crate::weight::{int, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Planted {
    pub p: usize,
    pub c: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenParams {
    pub n: usize,
    /// Noise edges added on top of the base structure.
    pub extra_edges: usize,
    /// Inclusive integer weight range; directed instances always use 1.
    pub weight_range: (i64, i64),
    pub directed: bool,
    pub forest: bool,
    /// Number of terminal vertices (root included for directed).
    pub terminals: usize,
    pub planted: Option<Planted>,
    pub seed: u64,
}

impl GenParams {
    pub fn new(n: usize, terminals: usize, seed: u64) -> Self {
        GenParams {
            n,
            extra_edges: n,
            weight_range: (1, 10),
            directed: false,
            forest: true,
            terminals,
            planted: None,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generated {
    pub graph: Graph,
    pub spec: TerminalSpec,
    /// Edges of the planted solution and their cost, an upper bound on the
    /// optimum restricted to the planted parameters.
    pub planted_edges: Vec<EdgeId>,
    #[serde(with = "opt_weight")]
    pub planted_cost: Option<Weight>,
    pub params: GenParams,
}

mod opt_weight {
    use super::*;
    use crate::weight::format_rational;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(w: &Option<Weight>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match w {
            Some(w) => s.serialize_some(&format_rational(w)),
            None => s.serialize_none(),
        }
    }
}

pub fn gen_random(params: &GenParams) -> Result<Generated> {
    let &GenParams { n, extra_edges, weight_range: (lo, hi), directed, forest, terminals, planted, seed } = params;
    if lo < 0 || lo > hi {
        return input("weight range must satisfy 0 <= low <= high");
    }
    if directed && forest {
        return input("directed forest instances are not supported");
    }
    if terminals == 0 || terminals > n {
        return input("terminal count must be between 1 and n");
    }
    if forest && terminals < 2 {
        return input("a forest instance needs at least two terminals");
    }
    if let Some(pl) = planted {
        if pl.c == 0 {
            return input("planted component count must be at least 1");
        }
        if terminals + pl.p > n {
            return input("planted solution needs more vertices than n");
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::new(directed, n);
    let mid = lo + (hi - lo) / 2;
    let weight = |rng: &mut ChaCha8Rng, heavy: bool| -> Weight {
        if directed {
            int(1)
        } else if heavy {
            int(rng.gen_range(mid..=hi) as i128)
        } else {
            int(rng.gen_range(lo..=mid) as i128)
        }
    };
    let mut order: Vec<VertexId> = (0..n).collect();
    order.shuffle(&mut rng);
    let terms: Vec<VertexId> = order[..terminals].to_vec();
    let mut planted_edges = Vec::new();

    let groups: Vec<Vec<VertexId>> = match planted {
        Some(pl) => {
            let c = if forest { pl.c.min(terminals / 2).max(1) } else { 1 };
            let steiner = rng.gen_range(0..=pl.p);
            let mut groups: Vec<Vec<VertexId>> = vec![Vec::new(); c];
            for (i, &t) in terms.iter().enumerate() {
                // two terminals per group first, the rest anywhere
                let gi = if i < 2 * c { i / 2 } else { rng.gen_range(0..c) };
                groups[gi].push(t);
            }
            for &s in &order[terminals..terminals + steiner] {
                let gi = rng.gen_range(0..c);
                groups[gi].push(s);
            }
            groups
        }
        None => Vec::new(),
    };
    for group in &groups {
        // first member is the group root; terminals come first so a directed
        // root is a terminal
        for i in 1..group.len() {
            let parent = group[rng.gen_range(0..i)];
            let w = weight(&mut rng, false);
            planted_edges.push(g.add_edge(parent, group[i], w)?);
        }
    }
    // background: random spanning structure plus noise, all heavy
    for i in 1..n {
        let (u, v) = (order[rng.gen_range(0..i)], order[i]);
        let w = weight(&mut rng, true);
        g.add_edge(u, v, w)?;
    }
    for _ in 0..extra_edges {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u != v {
            let w = weight(&mut rng, true);
            g.add_edge(u, v, w)?;
        }
    }

    let spec = if forest {
        let pairs: Vec<(VertexId, VertexId)> = if groups.is_empty() {
            terms.chunks(2).filter(|c| c.len() == 2).map(|c| (c[0], c[1])).chain(
                (terms.len() % 2 == 1).then(|| (terms[0], terms[terms.len() - 1])),
            )
            .collect()
        } else {
            groups
                .iter()
                .flat_map(|grp| {
                    let ts: Vec<VertexId> = grp.iter().copied().filter(|v| terms.contains(v)).collect();
                    ts.windows(2).map(|w| (w[0], w[1])).collect::<Vec<_>>()
                })
                .collect()
        };
        TerminalSpec::forest(pairs)
    } else {
        let root = if groups.is_empty() { terms[0] } else { groups[0][0] };
        TerminalSpec::tree(terms.iter().copied(), directed.then_some(root))?
    };
    let planted_cost = planted.map(|_| g.weight_of(&planted_edges));
    Ok(Generated { graph: g, spec, planted_edges, planted_cost, params: params.clone() })
}

/// Directed instance whose optimum equals the minimum dominating set size
/// of `h`: root `0`, Steiner vertices `1..=n`, terminals `n+1..=2n`.
pub fn gen_dominating_set_reduction(h: &Graph) -> Result<(Graph, TerminalSpec)> {
    if h.is_directed() || !h.is_simple() {
        return input("dominating set reduction expects a simple undirected graph");
    }
    let ids: Vec<VertexId> = h.vertices().collect();
    let n = ids.len();
    if n == 0 {
        return input("the graph has no vertices");
    }
    let idx = |v: VertexId| ids.binary_search(&v).unwrap();
    let mut g = Graph::new(true, 2 * n + 1);
    for w in 0..n {
        g.add_edge(0, 1 + w, int(1))?;
    }
    for w in 0..n {
        g.add_edge(1 + w, 1 + n + w, int(0))?;
    }
    for e in h.edges() {
        let (a, b) = (idx(e.u), idx(e.v));
        g.add_edge(1 + a, 1 + n + b, int(0))?;
        g.add_edge(1 + b, 1 + n + a, int(0))?;
    }
    let spec = TerminalSpec::tree(std::iter::once(0).chain(n + 1..=2 * n), Some(0))?;
    Ok((g, spec))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetCoverInstance {
    /// Universe is `0..n`.
    pub n: usize,
    pub sets: Vec<BTreeSet<usize>>,
    pub budget: usize,
}

impl SetCoverInstance {
    pub fn new(n: usize, sets: Vec<BTreeSet<usize>>, budget: usize) -> Result<Self> {
        if budget == 0 {
            return input("set cover budget must be positive");
        }
        if sets.iter().flatten().any(|&x| x >= n) {
            return input("a set contains an element outside the universe");
        }
        Ok(SetCoverInstance { n, sets, budget })
    }

    /// `m` singleton sets cycling through the universe: every cover needs
    /// all `n` elements' sets, so the minimum cover has size `n`.
    pub fn singletons(n: usize, m: usize, budget: usize) -> Result<Self> {
        Self::new(n, (0..m).map(|j| BTreeSet::from([j % n])).collect(), budget)
    }

    pub fn m(&self) -> usize {
        self.sets.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapComposition {
    pub graph: Graph,
    pub spec: TerminalSpec,
    /// Length of each root path.
    pub d: usize,
    /// Upper bound on the optimum if some instance has a cover within budget.
    pub c_yes: usize,
    /// Lower bound on the optimum if every cover of every instance has size
    /// at least `gamma * b`.
    pub no_lower: usize,
    pub gamma: usize,
}

/// Composes set cover instances over a common `(n, m, b)` into one
/// unweighted directed instance.
pub fn gen_gap_composition(instances: &[SetCoverInstance], gamma: usize) -> Result<GapComposition> {
    let Some(first) = instances.first() else {
        return input("no set cover instances given");
    };
    if gamma < 3 {
        return input("gamma must be at least 3");
    }
    let (n, m, b) = (first.n, first.m(), first.budget);
    if n == 0 {
        return input("the universe is empty");
    }
    if instances.iter().any(|x| (x.n, x.m(), x.budget) != (n, m, b)) {
        return input("all instances must share universe size, family size and budget");
    }
    let d = n * (gamma * b - 2);
    let mut g = Graph::new(true, 1);
    let root = 0;
    // terminals t_1..t_n shared by all gadgets
    let terms: Vec<VertexId> = (0..n).map(|_| g.add_vertex()).collect();
    let path = |g: &mut Graph, from: VertexId, len: usize| -> Result<VertexId> {
        let mut cur = from;
        for _ in 0..len {
            let next = g.add_vertex();
            g.add_edge(cur, next, int(1))?;
            cur = next;
        }
        Ok(cur)
    };
    for inst in instances {
        let rk = path(&mut g, root, d)?;
        for set in &inst.sets {
            let s = path(&mut g, rk, n)?;
            for &i in set {
                g.add_edge(s, terms[i], int(1))?;
            }
        }
    }
    let spec = TerminalSpec::tree(std::iter::once(root).chain(terms.iter().copied()), Some(root))?;
    Ok(GapComposition {
        graph: g,
        spec,
        d,
        c_yes: d + (b + 1) * n,
        no_lower: n * (2 * gamma * b - 1),
        gamma,
    })
}
