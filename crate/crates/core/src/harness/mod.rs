//! Experiment orchestration: sweeps, comparison reports and output files.

pub mod acceptance;
pub mod compare;
pub mod summary;
pub mod sweep;

pub use acceptance::{run_acceptance, CriterionOutcome};
pub use compare::{compare_report, Cell, Comparison, AGREEMENT_TARGET, COMPARED_METRICS};
pub use summary::{SweepSummary, TradeoffPoint, SUMMARY_SCHEMA};
pub use sweep::{
    default_s_grid, read_csv, refine_knee, rows_from_csv, rows_to_csv, run_sweep, tradeoff_knee, write_csv, Knee, Mode,
    SweepOutcome, SweepRow, SweepSpec, CSV_SCHEMA,
};
