//! Exact simulation of the N-dimensional mean-field Hawkes system.

mod cluster;
mod expected;
mod log;
mod thinning;

pub use cluster::simulate_cluster_oracle;
pub use expected::expected_counts;
pub use log::EventLog;
pub use thinning::{simulate, simulate_with, SimOptions, SimPath, DEFAULT_EVENT_CAP};
