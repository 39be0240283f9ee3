//! Minimum-ratio star contraction for weighted Steiner forest.
//!
//! A star is a center vertex together with edges to terminal neighbours;
//! with `Q` the terminals it touches (the center included when it is a
//! terminal), its ratio is `w(C) / (|Q| - 1)`. The reduction contracts a
//! best-ratio star until fewer than `tau` terminals remain and records every
//! contracted edge set so a solution of the reduced instance can be lifted.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::graph::{check_feasible, contract_edge_set, normalize_weights, EdgeId, Graph, TerminalSpec, VertexId};
use crate::solution::Solution;
use crate::weight::{int, serde_rational, Rational, Weight};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Star {
    pub center: VertexId,
    /// Edge ids in the graph the star was computed on, lightest first.
    pub edges: Vec<EdgeId>,
    /// Leaf terminals, in the same order as `edges`.
    pub leaves: Vec<VertexId>,
    /// |Q|: leaves plus the center if it is a terminal.
    pub terminal_count: usize,
    pub weight: Weight,
    pub ratio: Rational,
}

impl Star {
    /// Ordering used to pick among equal ratios: fewer edges, smaller
    /// center, lexicographically smaller leaf list.
    fn rank_key(&self) -> (&Rational, usize, VertexId, &[VertexId]) {
        (&self.ratio, self.edges.len(), self.center, &self.leaves)
    }
}

/// Best star centered at `v`: the best prefix of its terminal neighbours
/// sorted by edge weight. `None` when no prefix reaches two terminals.
pub fn best_star_at(g: &Graph, spec: &TerminalSpec, v: VertexId) -> Result<Option<Star>> {
    if !g.contains_vertex(v) {
        return input(format!("unknown vertex {v}"));
    }
    let terminals = spec.terminals();
    Ok(star_at(g, &terminals, &g.adjacency()[v], v))
}

fn star_at(g: &Graph, terminals: &BTreeSet<VertexId>, incident: &[(VertexId, EdgeId)], v: VertexId) -> Option<Star> {
    // lightest edge to each terminal neighbour
    let mut to_terminal: BTreeMap<VertexId, EdgeId> = BTreeMap::new();
    for &(q, e) in incident {
        if q == v || !terminals.contains(&q) {
            continue;
        }
        match to_terminal.get(&q) {
            Some(&cur) if (&g.edge(cur).weight, cur) <= (&g.edge(e).weight, e) => {}
            _ => {
                to_terminal.insert(q, e);
            }
        }
    }
    let mut sorted: Vec<(VertexId, EdgeId)> = to_terminal.into_iter().collect();
    sorted.sort_by(|a, b| (&g.edge(a.1).weight, a.0).cmp(&(&g.edge(b.1).weight, b.0)));
    let z = usize::from(terminals.contains(&v));
    let mut sum = Weight::zero();
    let mut best: Option<(Rational, usize, Weight)> = None;
    for (i, &(_, e)) in sorted.iter().enumerate() {
        sum += g.edge(e).weight;
        let denom = i + 1 + z - 1;
        if denom == 0 {
            continue;
        }
        let r = sum / int(denom as i128);
        if best.as_ref().map_or(true, |(b, _, _)| r < *b) {
            best = Some((r, i + 1, sum));
        }
    }
    let (ratio, len, weight) = best?;
    let prefix = &sorted[..len];
    Some(Star {
        center: v,
        edges: prefix.iter().map(|&(_, e)| e).collect(),
        leaves: prefix.iter().map(|&(q, _)| q).collect(),
        terminal_count: len + z,
        weight,
        ratio,
    })
}

/// Minimum-ratio star over all centers (ties per [`Star::rank_key`]).
pub fn best_star(g: &Graph, spec: &TerminalSpec) -> Option<Star> {
    let terminals = spec.terminals();
    let adj = g.adjacency();
    let centers: Vec<VertexId> = g.vertices().collect();
    centers
        .par_iter()
        .filter_map(|&v| star_at(g, &terminals, &adj[v], v))
        .min_by(|a, b| a.rank_key().cmp(&b.rank_key()))
}

/// Derived constants of the reduction for accuracy `epsilon`, at most `p`
/// Steiner vertices and at most `c` components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    #[serde(with = "serde_rational")]
    pub epsilon: Rational,
    pub p: usize,
    pub c: usize,
    /// sqrt(1 + eps) - 1, for display.
    pub delta: f64,
    /// (1 + eps)(p + c) / eps, exact.
    #[serde(with = "serde_rational")]
    pub lambda: Rational,
    /// (1 + delta) p / delta + p, for display.
    pub kappa: f64,
    /// Terminal count at which contraction stops; an upper bound of the
    /// closed form rounded up.
    pub tau: u64,
}

/// Binary digits of precision used for the lower bound on sqrt(1 + eps).
const SQRT_BITS: u32 = 96;

fn big(r: &Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Lower bound on sqrt(x) within 2^-bits relative precision.
fn sqrt_lower(x: &BigRational, bits: u32) -> BigRational {
    // sqrt(n/d) = sqrt(n d) / d
    let n = x.numer().to_biguint().unwrap();
    let d = x.denom().to_biguint().unwrap();
    let shift = BigUint::one() << (2 * bits);
    let root = (n * &d * shift).sqrt();
    BigRational::new(BigInt::from(root), BigInt::from(d << bits))
}

pub fn compute_thresholds(epsilon: Rational, p: usize, c: usize) -> Result<Thresholds> {
    if !epsilon.is_positive() {
        return input("epsilon must be positive");
    }
    if c == 0 {
        return input("the component bound c must be at least 1");
    }
    let eps = big(&epsilon);
    let one = BigRational::one();
    let bp = BigRational::from_integer(BigInt::from(p));
    let bc = BigRational::from_integer(BigInt::from(c));
    let one_eps = &one + &eps;
    let lambda = &one_eps * (&bp + &bc) / &eps;
    // Every term below decreases in delta, so a lower bound on delta yields
    // an upper bound on tau. (1 + delta)^2 is replaced by 1 + eps exactly.
    let mut bits = SQRT_BITS;
    let delta_lo = loop {
        let d = sqrt_lower(&one_eps, bits) - &one;
        if d.is_positive() {
            break d;
        }
        bits *= 2;
    };
    let kappa_hi = (&one + &delta_lo) * &bp / &delta_lo + &bp;
    let tau_hi = (&kappa_hi + &bc) * &lambda * &one_eps / (&eps * &delta_lo) + BigRational::from_integer(BigInt::from(2 * p + c));
    let tau = tau_hi.ceil().to_integer().to_u64().unwrap_or(u64::MAX);
    let lambda = Rational::new(
        lambda.numer().to_i128().ok_or_else(|| Error::Input("epsilon too fine".into()))?,
        lambda.denom().to_i128().ok_or_else(|| Error::Input("epsilon too fine".into()))?,
    );
    let to_f = |x: &BigRational| x.numer().to_f64().unwrap_or(f64::NAN) / x.denom().to_f64().unwrap_or(f64::NAN);
    Ok(Thresholds { epsilon, p, c, delta: to_f(&delta_lo), lambda, kappa: to_f(&kappa_hi), tau })
}

/// One contraction of the reduction loop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub center: VertexId,
    /// Contracted edges as input-graph edge ids.
    pub edges: Vec<EdgeId>,
    /// Their weights in input units.
    #[serde(with = "weights_serde")]
    pub weights: Vec<Weight>,
    /// Vertices merged (current ids) and the id they merged into.
    pub merged: Vec<VertexId>,
    pub into: VertexId,
    #[serde(with = "serde_rational")]
    pub ratio: Rational,
    pub terminals_before: usize,
    pub terminals_after: usize,
}

mod weights_serde {
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

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExitReason {
    /// Terminal count dropped below tau.
    BelowTau,
    /// No star with two terminals exists although at least tau terminals
    /// remain: no solution within the (p, c) budget exists.
    NoStar,
}

/// Everything needed to replay the reduction and lift solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionTrace {
    #[serde(with = "serde_rational")]
    pub scale: Weight,
    /// Zero-weight input edges contracted during normalization.
    pub zero_edges: Vec<EdgeId>,
    pub steps: Vec<TraceStep>,
    pub thresholds: Thresholds,
    pub exit: ExitReason,
    /// Reduced instance (normalized weights; edge origins are input ids).
    pub reduced: Graph,
    pub reduced_spec: TerminalSpec,
}

impl ContractionTrace {
    /// The approximation guarantee does not hold when the loop ran out of
    /// stars, i.e. `p` or `c` understated the instance.
    pub fn guarantee_void(&self) -> bool {
        self.exit == ExitReason::NoStar
    }

    pub fn contracted_weight(&self) -> Weight {
        self.steps.iter().flat_map(|s| s.weights.iter()).copied().sum()
    }

    /// Re-runs the recorded contractions from the input instance.
    pub fn replay(&self, g: &Graph, spec: &TerminalSpec) -> Result<(Graph, TerminalSpec)> {
        let norm = normalize_weights(&g.reindexed(), spec)?;
        if norm.zero_edges != self.zero_edges || norm.scale != self.scale {
            return Err(Error::Contract("trace does not belong to this instance".into()));
        }
        let (mut graph, mut spec) = (norm.graph, norm.spec);
        for step in &self.steps {
            let wanted: BTreeSet<EdgeId> = step.edges.iter().copied().collect();
            let ids: Vec<EdgeId> =
                (0..graph.edge_count()).filter(|&i| wanted.contains(&graph.edge(i).origin)).collect();
            if ids.len() != wanted.len() {
                return Err(Error::Contract("recorded star edges are missing from the replayed graph".into()));
            }
            let c = contract_edge_set(&graph, &spec, &ids)?;
            graph = c.graph;
            spec = c.spec;
        }
        Ok((graph, spec))
    }
}

/// Normalizes `g` and contracts best-ratio stars until fewer than `tau`
/// terminals remain (or no star exists).
pub fn reduce_forest(g: &Graph, spec: &TerminalSpec, thresholds: &Thresholds) -> Result<ContractionTrace> {
    if g.is_directed() {
        return input("star contraction expects an undirected graph");
    }
    if !spec.is_forest() {
        return input("star contraction expects a forest instance (see kernel::st_to_sf)");
    }
    let norm = normalize_weights(&g.reindexed(), spec)?;
    let scale = norm.scale;
    let (mut graph, mut spec) = (norm.graph, norm.spec);
    let tau = thresholds.tau;
    let mut steps = Vec::new();
    let mut cache: BTreeMap<VertexId, Option<Star>> = BTreeMap::new();
    let mut terminals = spec.terminals();
    let exit = loop {
        if (terminals.len() as u64) < tau {
            break ExitReason::BelowTau;
        }
        let adj = graph.adjacency();
        let stale: Vec<VertexId> = graph.vertices().filter(|v| !cache.contains_key(v)).collect();
        let fresh: Vec<(VertexId, Option<Star>)> =
            stale.par_iter().map(|&v| (v, star_at(&graph, &terminals, &adj[v], v))).collect();
        cache.extend(fresh);
        let Some(chosen) = cache.values().flatten().min_by(|a, b| a.rank_key().cmp(&b.rank_key())) else {
            break ExitReason::NoStar;
        };
        // cached edge ids may predate the last rebuild
        let star = star_at(&graph, &terminals, &adj[chosen.center], chosen.center).expect("cached star exists");
        debug_assert_eq!(star.ratio, chosen.ratio);
        let c = contract_edge_set(&graph, &spec, &star.edges)?;
        let origins = graph.origins(&star.edges);
        steps.push(TraceStep {
            center: star.center,
            weights: star.edges.iter().map(|&e| graph.edge(e).weight / scale).collect(),
            edges: origins,
            merged: c.merged.clone(),
            into: c.into,
            ratio: star.ratio,
            terminals_before: terminals.len(),
            terminals_after: c.spec.terminal_count(),
        });
        for v in &c.merged {
            cache.remove(v);
        }
        let adj_after = c.graph.adjacency();
        for &(u, _) in &adj_after[c.into] {
            cache.remove(&u);
        }
        graph = c.graph;
        spec = c.spec;
        terminals = spec.terminals();
    };
    Ok(ContractionTrace {
        scale,
        zero_edges: norm.zero_edges,
        steps,
        thresholds: thresholds.clone(),
        exit,
        reduced: graph,
        reduced_spec: spec,
    })
}

/// Adds every contracted edge set back to a solution of the reduced
/// instance; the result is feasible for the input instance and costs
/// `cost(sol) + sum w(C_t)` in input units.
pub fn lift_forest_solution(trace: &ContractionTrace, sol: &[EdgeId]) -> Result<Solution> {
    if !check_feasible(&trace.reduced, &trace.reduced_spec, sol) {
        return Err(Error::Contract("solution is not feasible for the reduced instance".into()));
    }
    let mut edges: Vec<EdgeId> = trace.reduced.origins(sol);
    let mut cost: Weight = trace.reduced.weight_of(sol) / trace.scale;
    for step in &trace.steps {
        edges.extend(&step.edges);
        cost += step.weights.iter().copied().sum::<Weight>();
    }
    edges.extend(&trace.zero_edges);
    edges.sort_unstable();
    edges.dedup();
    Ok(Solution { edges, cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::ratio;

    fn star_graph(weights: &[i128], center_terminal: bool) -> (Graph, TerminalSpec) {
        let n = weights.len() + 1;
        let g = Graph::from_edges(false, n, weights.iter().enumerate().map(|(i, &w)| (0, i + 1, int(w)))).unwrap();
        let mut pairs: Vec<(usize, usize)> = (2..n).map(|i| (1, i)).collect();
        if center_terminal {
            pairs.push((0, 1));
        }
        (g, TerminalSpec::forest(pairs))
    }

    #[test]
    fn terminal_center_single_edge() {
        let g = Graph::from_edges(false, 2, [(0, 1, int(5))]).unwrap();
        let spec = TerminalSpec::forest([(0, 1)]);
        let s = best_star_at(&g, &spec, 0).unwrap().unwrap();
        assert_eq!((s.edges.len(), s.ratio, s.terminal_count), (1, int(5), 2));
    }

    #[test]
    fn steiner_center_needs_two_leaves() {
        let (g, spec) = star_graph(&[2, 4], false);
        let s = best_star_at(&g, &spec, 0).unwrap().unwrap();
        assert_eq!((s.edges.len(), s.ratio), (2, int(6)));
    }

    #[test]
    fn best_prefix_is_chosen() {
        let (g, spec) = star_graph(&[1, 1, 10], false);
        let s = best_star_at(&g, &spec, 0).unwrap().unwrap();
        assert_eq!((s.edges.len(), s.ratio), (2, int(2)));
    }

    #[test]
    fn no_star_without_terminals() {
        let g = Graph::new(false, 2);
        let spec = TerminalSpec::forest([(0, 1)]);
        assert_eq!(best_star(&g, &spec), None);
        assert!(best_star_at(&g, &spec, 9).is_err());
    }

    #[test]
    fn hub_with_ratio_m_wins() {
        // Terminal hub 0 joined to terminals 1..=k at weight M; Steiner
        // vertices k+1, k+2 reach all of them slightly more expensively.
        let k = 6usize;
        let m = 100i128;
        let mut g = Graph::new(false, k + 3);
        for q in 1..=k {
            g.add_edge(0, q, int(m)).unwrap();
        }
        let w_s = ratio(m * (k as i128 - 1), k as i128) + ratio(1, 10);
        for s in [k + 1, k + 2] {
            for q in 1..=k {
                g.add_edge(s, q, w_s).unwrap();
            }
        }
        let spec = TerminalSpec::forest((1..=k).map(|q| (0, q)));
        let best = best_star(&g, &spec).unwrap();
        assert_eq!(best.center, 0);
        assert_eq!(best.ratio, int(m));
        for s in [k + 1, k + 2] {
            assert!(best_star_at(&g, &spec, s).unwrap().unwrap().ratio > int(m));
        }
    }

    #[test]
    fn threshold_examples() {
        let t = compute_thresholds(int(3), 0, 1).unwrap();
        assert_eq!(t.lambda, ratio(4, 3));
        assert_eq!(t.delta, 1.0);
        assert_eq!(t.kappa, 0.0);
        assert_eq!(t.tau, 3);
        assert!(compute_thresholds(int(0), 1, 1).is_err());
        assert!(compute_thresholds(int(1), 1, 0).is_err());
    }

    #[test]
    fn threshold_matches_float_evaluation() {
        for (e, p, c) in [(ratio(1, 1), 1, 1), (ratio(1, 2), 2, 2), (ratio(3, 2), 0, 1), (ratio(1, 4), 2, 1)] {
            let t = compute_thresholds(e, p, c).unwrap();
            let (ef, pf, cf) = (*e.numer() as f64 / *e.denom() as f64, p as f64, c as f64);
            let d = (1.0 + ef).sqrt() - 1.0;
            let lambda = (1.0 + ef) * (pf + cf) / ef;
            let kappa = (1.0 + d) * pf / d + pf;
            let tau = (kappa + cf) * lambda * (1.0 + d).powi(2) / (ef * d) + 2.0 * pf + cf;
            assert_eq!(t.tau, tau.ceil() as u64, "eps={e} p={p} c={c}");
            assert!(t.tau > p as u64);
        }
        assert_eq!(compute_thresholds(int(1), 1, 1).unwrap().tau, 108);
    }

    #[test]
    fn identity_reduction_below_tau() {
        let (g, spec) = star_graph(&[2, 3], false);
        let th = compute_thresholds(int(1), 1, 1).unwrap();
        let trace = reduce_forest(&g, &spec, &th).unwrap();
        assert!(trace.steps.is_empty());
        assert_eq!(trace.exit, ExitReason::BelowTau);
        let lifted = lift_forest_solution(&trace, &[0, 1]).unwrap();
        assert_eq!(lifted.edges, vec![0, 1]);
        assert_eq!(lifted.cost, int(5));
    }

    #[test]
    fn single_contraction_lifts_to_contracted_edge() {
        let g = Graph::from_edges(false, 2, [(0, 1, int(3))]).unwrap();
        let spec = TerminalSpec::forest([(0, 1)]);
        let th = Thresholds { tau: 2, ..compute_thresholds(int(3), 0, 1).unwrap() };
        let trace = reduce_forest(&g, &spec, &th).unwrap();
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.reduced_spec.terminal_count(), 0);
        let lifted = lift_forest_solution(&trace, &[]).unwrap();
        assert_eq!((lifted.edges, lifted.cost), (vec![0], int(3)));
    }

    #[test]
    fn lifting_rejects_infeasible() {
        let (g, spec) = star_graph(&[2, 3], false);
        let th = compute_thresholds(int(1), 1, 1).unwrap();
        let trace = reduce_forest(&g, &spec, &th).unwrap();
        assert!(matches!(lift_forest_solution(&trace, &[0]), Err(Error::Contract(_))));
    }

    #[test]
    fn cached_loop_matches_full_rescan() {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let n = 14;
            let mut g = Graph::new(false, n);
            for _ in 0..40 {
                let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
                if u != v {
                    g.add_edge(u, v, int(rng.gen_range(1..20))).unwrap();
                }
            }
            let spec = TerminalSpec::forest((0..6).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))));
            let th = Thresholds { tau: 2, ..compute_thresholds(int(1), 0, 1).unwrap() };
            let trace = reduce_forest(&g, &spec, &th).unwrap();
            // full rescan every step
            let norm = normalize_weights(&g, &spec).unwrap();
            let (mut gr, mut sp) = (norm.graph, norm.spec);
            for step in &trace.steps {
                let s = best_star(&gr, &sp).unwrap();
                assert_eq!(gr.origins(&s.edges), step.edges);
                assert_eq!(s.ratio, step.ratio);
                let c = contract_edge_set(&gr, &sp, &s.edges).unwrap();
                gr = c.graph;
                sp = c.spec;
            }
            assert_eq!(gr, trace.reduced);
            assert_eq!(trace.replay(&g, &spec).unwrap(), (trace.reduced.clone(), trace.reduced_spec.clone()));
        }
    }
}
