//! Exhaustive edge-subset oracle. Ground truth for every exactness and
//! ratio test in the crate; deliberately shares no code with the solvers
//! beyond the graph type.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, TerminalSpec};
use crate::solution::component_count;
use crate::weight::{serde_rational, IntScale, Weight};

/// Hard cap on enumerated edges (2^22 subsets).
pub const MAX_ORACLE_EDGES: usize = 22;
const MAX_ORACLE_VERTICES: usize = 128;

/// Optional caps a solution must respect to count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Restriction {
    /// Non-terminal vertices touched by the solution.
    pub max_steiner: Option<usize>,
    /// Connected components spanned by the solution edges.
    pub max_components: Option<usize>,
}

impl Restriction {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn steiner(p: usize) -> Self {
        Restriction { max_steiner: Some(p), max_components: None }
    }

    pub fn new(p: usize, c: usize) -> Self {
        Restriction { max_steiner: Some(p), max_components: Some(c) }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OracleStats {
    pub subsets: u64,
    /// Subsets that survived the cost bound and were tested for feasibility.
    pub checked: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    #[serde(with = "serde_rational")]
    pub cost: Weight,
    /// Lexicographically least optimal edge-id list.
    pub witness: Vec<EdgeId>,
    pub steiner_used: usize,
    pub components: usize,
    pub stats: OracleStats,
}

struct Prepared {
    m: usize,
    n: usize,
    ends: Vec<(usize, usize)>,
    weights: Vec<i128>,
    terminal_mask: u128,
    terminals: Vec<usize>,
    pairs: Vec<(usize, usize)>,
    root: Option<usize>,
    forest: bool,
    directed: bool,
}

impl Prepared {
    fn new(g: &Graph, spec: &TerminalSpec) -> Result<Self> {
        let ids: Vec<_> = g.vertices().collect();
        if ids.len() > MAX_ORACLE_VERTICES {
            return Err(Error::TooLarge(format!("oracle handles at most {MAX_ORACLE_VERTICES} vertices")));
        }
        let mut index = vec![usize::MAX; g.id_bound()];
        for (i, &v) in ids.iter().enumerate() {
            index[v] = i;
        }
        let scale = IntScale::for_weights(g.edges().iter().map(|e| &e.weight));
        let terminals: Vec<usize> = spec.terminals().iter().map(|&t| index[t]).collect();
        let terminal_mask = terminals.iter().fold(0u128, |m, &t| m | 1 << t);
        let pairs = spec.pairs().map_or_else(Vec::new, |ps| ps.iter().map(|&(s, t)| (index[s], index[t])).collect());
        Ok(Prepared {
            m: g.edge_count(),
            n: ids.len(),
            ends: g.edges().iter().map(|e| (index[e.u], index[e.v])).collect(),
            weights: g.edges().iter().map(|e| scale.to_int(&e.weight)).collect(),
            terminal_mask,
            terminals,
            pairs,
            root: spec.root().map(|r| index[r]),
            forest: spec.is_forest(),
            directed: g.is_directed(),
        })
    }

    fn find(parent: &mut [u8], mut x: usize) -> usize {
        while parent[x] as usize != x {
            let p = parent[x] as usize;
            parent[x] = parent[p];
            x = p;
        }
        x
    }

    /// Returns component count if `mask` is feasible.
    fn check(&self, mask: u32, touched: u128, parent: &mut [u8]) -> Option<usize> {
        if self.directed {
            let root = self.root?;
            let mut reach = 1u128 << root;
            loop {
                let before = reach;
                let mut bits = mask;
                while bits != 0 {
                    let i = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let (a, b) = self.ends[i];
                    if reach >> a & 1 == 1 {
                        reach |= 1 << b;
                    }
                }
                if reach == before {
                    break;
                }
            }
            return (reach & self.terminal_mask == self.terminal_mask).then_some(1);
        }
        for (v, p) in parent.iter_mut().enumerate().take(self.n) {
            *p = v as u8;
        }
        let mut comps = touched.count_ones() as usize;
        let mut bits = mask;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let (a, b) = self.ends[i];
            let (ra, rb) = (Self::find(parent, a), Self::find(parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb) as u8;
                comps -= 1;
            }
        }
        let ok = if self.forest {
            self.pairs.iter().all(|&(s, t)| Self::find(parent, s) == Self::find(parent, t))
        } else {
            match self.terminals.split_first() {
                None => true,
                Some((&first, rest)) => {
                    let r = Self::find(parent, first);
                    rest.iter().all(|&t| Self::find(parent, t) == r)
                }
            }
        };
        ok.then_some(comps)
    }
}

/// `a` precedes `b` as sorted edge-id lists.
fn lex_less(a: u32, b: u32) -> bool {
    let d = a ^ b;
    if d == 0 {
        return false;
    }
    let i = d.trailing_zeros();
    if a >> i & 1 == 1 {
        (b >> i) != 0
    } else {
        (a >> i) == 0
    }
}

/// Enumerates every edge subset and returns the cheapest feasible one that
/// honours `restrict`.
pub fn brute_force(g: &Graph, spec: &TerminalSpec, restrict: Restriction) -> Result<OracleResult> {
    if g.edge_count() > MAX_ORACLE_EDGES {
        return Err(Error::TooLarge(format!(
            "oracle enumerates at most {MAX_ORACLE_EDGES} edges, instance has {}",
            g.edge_count()
        )));
    }
    spec.validate(g)?;
    if g.is_directed() && spec.is_forest() {
        return Err(Error::Input("directed forest instances are not supported".into()));
    }
    let prep = Prepared::new(g, spec)?;
    let total: u64 = 1 << prep.m;
    let chunk = (total / 256).max(1);
    let best = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut parent = vec![0u8; prep.n];
            let mut best: Option<(i128, u32, usize, usize)> = None;
            let mut checked = 0u64;
            for mask in (c * chunk)..((c + 1) * chunk).min(total) {
                let mask = mask as u32;
                let mut touched = 0u128;
                let mut cost = 0i128;
                let mut bits = mask;
                while bits != 0 {
                    let i = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let (a, b) = prep.ends[i];
                    touched |= 1 << a | 1 << b;
                    cost += prep.weights[i];
                }
                let steiner = (touched & !prep.terminal_mask).count_ones() as usize;
                if restrict.max_steiner.is_some_and(|p| steiner > p) {
                    continue;
                }
                if let Some((bc, bm, _, _)) = best {
                    if cost > bc || (cost == bc && !lex_less(mask, bm)) {
                        continue;
                    }
                }
                checked += 1;
                let Some(comps) = prep.check(mask, touched, &mut parent) else { continue };
                if restrict.max_components.is_some_and(|c| comps > c) {
                    continue;
                }
                best = Some((cost, mask, steiner, comps));
            }
            (best, checked)
        })
        .reduce(
            || (None, 0),
            |(a, fa), (b, fb)| {
                let pick = match (a, b) {
                    (None, x) | (x, None) => x,
                    (Some(x), Some(y)) => {
                        if y.0 < x.0 || (y.0 == x.0 && lex_less(y.1, x.1)) {
                            Some(y)
                        } else {
                            Some(x)
                        }
                    }
                };
                (pick, fa + fb)
            },
        );
    let (Some((_, mask, steiner, _)), checked) = best else {
        return Err(Error::Infeasible("no edge subset satisfies the instance and restriction".into()));
    };
    let witness: Vec<EdgeId> = (0..prep.m).filter(|i| mask >> i & 1 == 1).collect();
    Ok(OracleResult {
        cost: g.weight_of(&witness),
        components: component_count(g, &witness),
        witness,
        steiner_used: steiner,
        stats: OracleStats { subsets: total, checked },
    })
}
