//! Slot-level Monte Carlo simulation of the full system.

pub mod engine;
pub mod geometry;
pub mod stats;

pub use engine::{run_replication, Conservation, RawTallies, SimOptions};
pub use geometry::sample_node_distances;
pub use stats::{estimate_metrics, simulate, t_interval, Estimate, ReplicationMetrics, SimResult};
