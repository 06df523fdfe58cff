//! Socially fair clustering toolkit.
//!
//! The objective: choose `k` centers among the candidate facilities so that
//! the most expensive demographic group is as cheap as possible. A group's
//! cost is the weighted sum of point-to-nearest-center distances raised to
//! the power `z` (`z = 1` is the fair median objective, `z = 2` the fair
//! means objective).
//!
//! Modules:
//! - [`instance`]: problem data, JSON interchange, group disjointification.
//! - [`metric`]: metric-axiom validation reports.
//! - [`cost`]: cost evaluation and Voronoi partitions.
//! - [`lp`]: the fractional relaxation; [`simplex`] solves it.
//! - [`rounding`]: randomized rounding of fractional solutions, the union
//!   amplifier, and Monte Carlo instrumentation.
//! - [`baseline`]: the local-search fallback solver.
//! - [`solver`]: the end-to-end pipeline (relax, round, subset search).
//! - [`oracle`]: exact brute-force references for small instances.
//! - [`generators`]: random instances, the set-coverage reduction, and group
//!   transforms.

pub mod baseline;
pub mod cost;
pub mod error;
pub mod generators;
pub mod instance;
pub mod lp;
pub mod metric;
pub mod numfmt;
pub mod oracle;
pub mod rounding;
pub mod simplex;
pub mod solver;
pub mod subsets;

pub use error::Error;
pub use instance::{CenterSet, Group, Instance, MetricCheck, MetricData};
