//! Exact solvers parameterized by the number of terminals.

mod dw;
mod forest;
mod partition;

pub use dw::{dreyfus_wagner, dreyfus_wagner_directed, SubsetDpTable, MAX_DP_TERMINALS};
pub(crate) use dw::solve_undirected;
pub use forest::{exact_steiner_forest, exact_steiner_forest_unrestricted};
pub use partition::{canonical_partitions, CanonicalPartitions};
