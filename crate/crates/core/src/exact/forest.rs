//! Exact Steiner forest with a bound on the number of components.
//!
//! Terminal pairs are first grouped into classes that must share a
//! component (the connected components of the pair graph). Every canonical
//! partition of the classes into at most `c` blocks is a candidate component
//! structure; each block is solved by the subset DP and the cheapest total
//! wins.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::dw::solve_undirected;
use super::partition::canonical_partitions;
use crate::error::{input, Error, Result};
use crate::graph::{Graph, TerminalSpec, VertexId};
use crate::paths::Metric;
use crate::solution::{prune_undirected, Solution};
use crate::weight::Weight;

/// Enumerating more canonical partitions than this is refused.
const MAX_PARTITIONS: usize = 2_000_000;

/// Cheapest forest with at most `max_components` components satisfying every
/// pair of `spec` (tree specs are treated as one class).
pub fn exact_steiner_forest(g: &Graph, spec: &TerminalSpec, max_components: usize) -> Result<Solution> {
    if max_components == 0 {
        return input("the component bound must be at least 1");
    }
    if g.is_directed() {
        return input("Steiner forest expects an undirected graph");
    }
    spec.validate(g)?;
    let classes = spec.pair_classes();
    if classes.is_empty() {
        return Ok(Solution::empty());
    }
    let metric = Metric::new(g);
    for class in &classes {
        let first = *class.iter().next().unwrap();
        if let Some(t) = class.iter().find(|&&t| metric.dist(first, t).is_none()) {
            return Err(Error::Infeasible(format!("terminal {t} cannot reach its partner {first}")));
        }
    }

    let partitions: Vec<Vec<usize>> = canonical_partitions(classes.len(), max_components)
        .take(MAX_PARTITIONS + 1)
        .collect();
    if partitions.len() > MAX_PARTITIONS {
        return Err(Error::TooLarge(format!(
            "more than {MAX_PARTITIONS} partitions of {} pair classes",
            classes.len()
        )));
    }
    let blocks_of = |p: &[usize]| -> Vec<u64> {
        let mut blocks = vec![0u64; p.iter().max().map_or(0, |m| m + 1)];
        for (class, &b) in p.iter().enumerate() {
            blocks[b] |= 1 << class;
        }
        blocks
    };
    let needed: BTreeSet<u64> = partitions.iter().flat_map(|p| blocks_of(p)).collect();
    let solved: BTreeMap<u64, Option<Solution>> = needed
        .into_par_iter()
        .map(|mask| {
            let terms: BTreeSet<VertexId> = classes
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .flat_map(|(_, c)| c.iter().copied())
                .collect();
            match solve_undirected(g, metric.clone(), &terms) {
                Ok(sol) => Ok((mask, Some(sol))),
                Err(Error::Infeasible(_)) => Ok((mask, None)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(Weight, &Vec<usize>)> = None;
    for p in &partitions {
        let mut total = Weight::default();
        let mut ok = true;
        for mask in blocks_of(p) {
            match &solved[&mask] {
                Some(sol) => total += sol.cost,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && best.as_ref().map_or(true, |(b, _)| total < *b) {
            best = Some((total, p));
        }
    }
    let Some((total, p)) = best else {
        return Err(Error::Infeasible(format!(
            "no forest with at most {max_components} components connects every pair"
        )));
    };
    let union: Vec<_> = blocks_of(p).iter().flat_map(|m| solved[m].as_ref().unwrap().edges.clone()).collect();
    let sol = Solution::from_edges(g, prune_undirected(g, &spec.terminals(), &union));
    if sol.cost != total {
        return Err(Error::Contract(format!("merged forest weight {} differs from block total {total}", sol.cost)));
    }
    Ok(sol)
}

/// Cheapest forest without a component bound.
pub fn exact_steiner_forest_unrestricted(g: &Graph, spec: &TerminalSpec) -> Result<Solution> {
    exact_steiner_forest(g, spec, spec.pair_classes().len().max(1))
}
