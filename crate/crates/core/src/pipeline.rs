//! End-to-end solvers: star contraction followed by the exact forest solver
//! and lifting, for forests and (through the pair reduction) trees.

use std::collections::BTreeSet;

use num_traits::{One, Signed};
use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::exact::{dreyfus_wagner, exact_steiner_forest, exact_steiner_forest_unrestricted};
use crate::graph::{check_feasible, Graph, TerminalSpec, VertexId};
use crate::kernel::{st_to_sf, SfVariant};
use crate::solution::{prune_undirected, Solution};
use crate::star::{compute_thresholds, lift_forest_solution, reduce_forest, ContractionTrace};
use crate::weight::{int, serde_rational, Rational};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForestRun {
    pub solution: Solution,
    pub trace: ContractionTrace,
    /// The bound `1 + eps` holds only if this is false.
    pub guarantee_void: bool,
    #[serde(with = "serde_rational")]
    pub claimed_ratio: Rational,
}

impl ForestRun {
    pub fn contractions(&self) -> usize {
        self.trace.steps.len()
    }

    pub fn residual_terminals(&self) -> usize {
        self.trace.reduced_spec.terminal_count()
    }

    pub fn tau(&self) -> u64 {
        self.trace.thresholds.tau
    }
}

/// Lifts a reduced-instance solution and prunes it in the input graph.
pub fn finish_forest(g: &Graph, spec: &TerminalSpec, trace: &ContractionTrace, reduced_sol: &[usize]) -> Result<Solution> {
    let lifted = lift_forest_solution(trace, reduced_sol)?;
    let edges = prune_undirected(g, &spec.terminals(), &lifted.edges);
    let sol = Solution::from_edges(g, edges);
    if !check_feasible(g, spec, &sol.edges) || sol.cost > lifted.cost {
        return Err(Error::Contract("lifted solution is infeasible".into()));
    }
    Ok(sol)
}

/// `(1 + eps)`-approximate Steiner forest relative to the cheapest forest
/// with at most `p` Steiner vertices and `c` components.
pub fn epas_pipeline_forest(g: &Graph, spec: &TerminalSpec, epsilon: &Rational, p: usize, c: usize) -> Result<ForestRun> {
    if !epsilon.is_positive() {
        return input("epsilon must be positive");
    }
    let spec = match spec {
        TerminalSpec::Forest { .. } => spec.clone(),
        TerminalSpec::Tree { .. } => return input("expected a forest instance"),
    };
    let thresholds = compute_thresholds(epsilon / int(2), p, c)?;
    let trace = reduce_forest(g, &spec, &thresholds)?;
    let mut guarantee_void = trace.guarantee_void();
    let residual = match exact_steiner_forest(&trace.reduced, &trace.reduced_spec, c) {
        Ok(sol) => sol,
        Err(Error::Infeasible(_)) => {
            // no forest within c components: fall back, no guarantee
            guarantee_void = true;
            exact_steiner_forest_unrestricted(&trace.reduced, &trace.reduced_spec)?
        }
        Err(e) => return Err(e),
    };
    let solution = finish_forest(g, &spec, &trace, &residual.edges)?;
    Ok(ForestRun { solution, trace, guarantee_void, claimed_ratio: Rational::one() + epsilon })
}

/// Steiner tree through the pair reduction and the forest scheme with one
/// component.
pub fn epas_pipeline_tree(g: &Graph, terminals: &BTreeSet<VertexId>, epsilon: &Rational, p: usize) -> Result<ForestRun> {
    if terminals.is_empty() {
        return input("the terminal set is empty");
    }
    let (h, spec) = st_to_sf(g, terminals, SfVariant::Plain)?;
    epas_pipeline_forest(&h, &spec, epsilon, p, 1)
}

/// Exact backends without preprocessing.
pub fn exact_tree(g: &Graph, terminals: &BTreeSet<VertexId>) -> Result<Solution> {
    dreyfus_wagner(g, terminals)
}

pub fn exact_forest(g: &Graph, spec: &TerminalSpec, c: Option<usize>) -> Result<Solution> {
    match c {
        Some(c) => exact_steiner_forest(g, spec, c),
        None => exact_steiner_forest_unrestricted(g, spec),
    }
}
