//! Sweeps over the mean generation time `S`, CSV rows and trade-off extraction.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{AnalyticModel, MetricsReport};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::numeric::log_grid;
use crate::policy::AccessPolicy;
use crate::profile::SicProfile;
use crate::sim::{simulate, SimOptions, SimResult};

pub const CSV_SCHEMA: &str = "sicaoi-sweep/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Analytic,
    Simulate,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Mean generation times (s), ascending.
    pub s_values: Vec<f64>,
    pub mode: Mode,
    pub sim: SimOptions,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            s_values: default_s_grid(),
            mode: Mode::Analytic,
            sim: SimOptions::default(),
        }
    }
}

/// 30 log-spaced points from 1 ms to 1 s.
pub fn default_s_grid() -> Vec<f64> {
    log_grid(1e-3, 1.0, 30)
}

/// One CSV line. Times in ms, energy in mJ, throughput per node.
/// `*_ci` are 95% half-widths, present for simulated rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "S_ms")]
    pub s_ms: f64,
    pub mode: String,
    #[serde(rename = "P_s")]
    pub p_s: f64,
    pub theta_msg_s: f64,
    pub theta_norm: f64,
    pub theta_kbps: f64,
    pub cbr: f64,
    #[serde(rename = "ED_ms")]
    pub ed_ms: f64,
    #[serde(rename = "EH_ms")]
    pub eh_ms: f64,
    pub zeta_per_s: Option<f64>,
    #[serde(rename = "Ebar_mJ")]
    pub ebar_mj: f64,
    #[serde(rename = "EQ")]
    pub eq: f64,
    #[serde(rename = "StdQ")]
    pub std_q: f64,
    #[serde(rename = "P_s_ci")]
    pub p_s_ci: Option<f64>,
    pub theta_msg_s_ci: Option<f64>,
    pub theta_norm_ci: Option<f64>,
    pub theta_kbps_ci: Option<f64>,
    pub cbr_ci: Option<f64>,
    #[serde(rename = "ED_ms_ci")]
    pub ed_ms_ci: Option<f64>,
    #[serde(rename = "EH_ms_ci")]
    pub eh_ms_ci: Option<f64>,
    #[serde(rename = "Ebar_mJ_ci")]
    pub ebar_mj_ci: Option<f64>,
    #[serde(rename = "EQ_ci")]
    pub eq_ci: Option<f64>,
    #[serde(rename = "StdQ_ci")]
    pub std_q_ci: Option<f64>,
}

impl SweepRow {
    pub fn analytic(r: &MetricsReport) -> Self {
        Self {
            s_ms: r.s * 1e3,
            mode: "analytic".into(),
            p_s: r.p_s,
            theta_msg_s: r.theta,
            theta_norm: r.theta_norm,
            theta_kbps: r.theta_bps * 1e-3,
            cbr: r.cbr,
            ed_ms: r.mean_delay * 1e3,
            eh_ms: r.mean_aoi * 1e3,
            zeta_per_s: Some(r.zeta),
            ebar_mj: r.energy * 1e3,
            eq: r.mean_backlog,
            std_q: r.std_backlog,
            p_s_ci: None,
            theta_msg_s_ci: None,
            theta_norm_ci: None,
            theta_kbps_ci: None,
            cbr_ci: None,
            ed_ms_ci: None,
            eh_ms_ci: None,
            ebar_mj_ci: None,
            eq_ci: None,
            std_q_ci: None,
        }
    }

    pub fn simulated(s: f64, r: &SimResult) -> Self {
        Self {
            s_ms: s * 1e3,
            mode: "simulate".into(),
            p_s: r.pdr.mean,
            theta_msg_s: r.theta.mean,
            theta_norm: r.theta_norm.mean,
            theta_kbps: r.theta_bps.mean * 1e-3,
            cbr: r.cbr.mean,
            ed_ms: r.mean_delay.mean * 1e3,
            eh_ms: r.mean_aoi.mean * 1e3,
            zeta_per_s: None,
            ebar_mj: r.energy.mean * 1e3,
            eq: r.mean_backlog.mean,
            std_q: r.std_backlog.mean,
            p_s_ci: Some(r.pdr.half_width),
            theta_msg_s_ci: Some(r.theta.half_width),
            theta_norm_ci: Some(r.theta_norm.half_width),
            theta_kbps_ci: Some(r.theta_bps.half_width * 1e-3),
            cbr_ci: Some(r.cbr.half_width),
            ed_ms_ci: Some(r.mean_delay.half_width * 1e3),
            eh_ms_ci: Some(r.mean_aoi.half_width * 1e3),
            ebar_mj_ci: Some(r.energy.half_width * 1e3),
            eq_ci: Some(r.mean_backlog.half_width),
            std_q_ci: Some(r.std_backlog.half_width),
        }
    }
}

/// Rows of a sweep, grouped by mode, each in ascending `S`.
#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    pub analytic: Vec<SweepRow>,
    pub simulated: Vec<SweepRow>,
    pub reports: Vec<MetricsReport>,
}

impl SweepOutcome {
    pub fn rows(&self) -> Vec<SweepRow> {
        self.analytic.iter().chain(&self.simulated).cloned().collect()
    }
}

/// Evaluates every `S` of the spec. Points run concurrently; results keep
/// the order of `spec.s_values`.
pub fn run_sweep(
    config: &SystemConfig,
    policy: &AccessPolicy,
    profile: &SicProfile,
    spec: &SweepSpec,
) -> Result<SweepOutcome> {
    if spec.s_values.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(s) = spec.s_values.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "mean generation time {s} must be positive"
        )));
    }
    let mut out = SweepOutcome::default();
    if spec.mode != Mode::Simulate {
        let model = AnalyticModel::new(config, policy, profile)?;
        out.reports = spec
            .s_values
            .par_iter()
            .map(|&s| model.evaluate(s))
            .collect::<Result<Vec<_>>>()?;
        out.analytic = out.reports.iter().map(SweepRow::analytic).collect();
    }
    if spec.mode != Mode::Analytic {
        out.simulated = spec
            .s_values
            .par_iter()
            .map(|&s| simulate(&config.with_generation_time(s), policy, &spec.sim).map(|r| SweepRow::simulated(s, &r)))
            .collect::<Result<Vec<_>>>()?;
    }
    Ok(out)
}

pub fn rows_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Artifact(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| Error::Artifact(e.to_string()))?;
    Ok(format!(
        "# schema: {CSV_SCHEMA}\n{}",
        String::from_utf8(body).expect("csv output is UTF-8")
    ))
}

pub fn rows_from_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Artifact(format!("sweep CSV: {e}"))))
        .collect()
}

pub fn write_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    fs::write(path, rows_to_csv(rows)?).map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>> {
    rows_from_csv(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// AoI-energy operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Knee {
    pub s_ms: f64,
    pub eh_ms: f64,
    pub ebar_mj: f64,
}

/// Sweep point minimizing `(E[H] / min E[H]) * (Ebar / min Ebar)`: the
/// operating point where neither metric is far from its own best value.
pub fn tradeoff_knee(rows: &[SweepRow]) -> Option<Knee> {
    let usable: Vec<&SweepRow> = rows
        .iter()
        .filter(|r| r.eh_ms.is_finite() && r.ebar_mj.is_finite())
        .collect();
    let h0 = usable.iter().map(|r| r.eh_ms).fold(f64::INFINITY, f64::min);
    let e0 = usable.iter().map(|r| r.ebar_mj).fold(f64::INFINITY, f64::min);
    usable
        .into_iter()
        .min_by(|a, b| ((a.eh_ms / h0) * (a.ebar_mj / e0)).total_cmp(&((b.eh_ms / h0) * (b.ebar_mj / e0))))
        .map(|r| Knee {
            s_ms: r.s_ms,
            eh_ms: r.eh_ms,
            ebar_mj: r.ebar_mj,
        })
}

/// Refines the knee between two generation times (s) by golden-section
/// search of `E[H] * Ebar` in `ln S` on the analytic model.
pub fn refine_knee(model: &AnalyticModel, s_lo: f64, s_hi: f64) -> Result<Knee> {
    let cost = |x: f64| -> Result<f64> {
        let r = model.evaluate(x.exp())?;
        Ok(r.mean_aoi * r.energy)
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (s_lo.ln(), s_hi.ln());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (cost(c)?, cost(d)?);
    while b - a > 1e-6 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = cost(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = cost(d)?;
        }
    }
    let r = model.evaluate((0.5 * (a + b)).exp())?;
    Ok(Knee {
        s_ms: r.s * 1e3,
        eh_ms: r.mean_aoi * 1e3,
        ebar_mj: r.energy * 1e3,
    })
}
