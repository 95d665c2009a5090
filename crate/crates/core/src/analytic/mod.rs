//! Mean-field analytic model.

pub mod backlog;
pub mod metrics;
pub mod radio;
pub mod transforms;

pub use backlog::{backlog_pdf, fixed_point_map, fixed_point_sign_changes, solve_backlog_fixed_point, BacklogModel};
pub use metrics::{
    aoi_metrics, channel_busy_ratio, critical_rate, energy_per_delivered, success_probability, throughput,
    AnalyticModel, AoiMetrics, CriticalRate, Energy, MetricsReport, Throughput,
};
pub use radio::{coverage_radius, mean_inverse_gain, PathGain, TwoRayGround};
pub use transforms::{access_delay, contention_moments, idle_moments, phi_slot, LtMoments, SlotTransforms};
