//! Steiner tree, Steiner forest and directed Steiner tree solvers
//! parameterized by the number of Steiner vertices in the solution.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: exact-weight graphs, terminal specs, contraction, normalization.
//! * [`star`]: minimum-ratio star contraction for weighted Steiner forest.
//! * [`exact`]: subset dynamic programs (undirected and directed) and the
//!   partition-enumeration Steiner forest solver.
//! * [`pipeline`]: the end-to-end approximation schemes for trees and forests.
//! * [`directed`]: the two reduction rules for unweighted directed Steiner tree.
//! * [`kernel`]: tree-to-forest reductions and the subset-union lossy kernel.
//! * [`oracle`] and [`gen`]: brute-force ground truth and instance generators.
//! * [`io`]: the STP-style instance and solution text formats.

pub mod directed;
pub mod error;
pub mod exact;
pub mod gen;
pub mod graph;
pub mod io;
pub mod kernel;
pub mod oracle;
pub mod paths;
pub mod pipeline;
pub mod solution;
pub mod star;
pub mod weight;

pub use error::{Error, Result};
pub use graph::{check_feasible, EdgeId, Graph, TerminalSpec, VertexId};
pub use solution::Solution;
pub use weight::{Rational, Weight};
