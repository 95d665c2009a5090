//! JSON run summary: critical rate marker, trade-off curve and knee.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::compare::Comparison;
use super::sweep::{tradeoff_knee, Knee, SweepRow};
use crate::analytic::CriticalRate;
use crate::error::{Error, Result};
use crate::policy::FittedConstants;

pub const SUMMARY_SCHEMA: &str = "sicaoi-summary/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub s_ms: f64,
    pub eh_ms: f64,
    pub ebar_mj: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema: String,
    pub constants: FittedConstants,
    pub u_inf: f64,
    pub lambda_inf: f64,
    /// Critical mean generation time, the regime marker for `S` plots.
    pub s_inf_ms: f64,
    /// Coverage radius under the configured path-loss constants (m).
    pub coverage_radius_m: f64,
    pub tradeoff: Vec<TradeoffPoint>,
    pub knee: Option<Knee>,
    pub knee_refined: Option<Knee>,
    pub comparison: Option<Comparison>,
}

impl SweepSummary {
    pub fn new(
        constants: FittedConstants,
        critical: CriticalRate,
        coverage_radius_m: f64,
        analytic: &[SweepRow],
        knee_refined: Option<Knee>,
        comparison: Option<Comparison>,
    ) -> Self {
        Self {
            schema: SUMMARY_SCHEMA.into(),
            constants,
            u_inf: critical.u_inf,
            lambda_inf: critical.lambda_inf,
            s_inf_ms: critical.s_inf * 1e3,
            coverage_radius_m,
            tradeoff: analytic
                .iter()
                .map(|r| TradeoffPoint {
                    s_ms: r.s_ms,
                    eh_ms: r.eh_ms,
                    ebar_mj: r.ebar_mj,
                })
                .collect(),
            knee: tradeoff_knee(analytic),
            knee_refined,
            comparison,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Artifact(e.to_string()))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}
