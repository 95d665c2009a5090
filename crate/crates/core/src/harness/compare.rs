//! Analytic-versus-simulation comparison.

use serde::{Deserialize, Serialize};

use super::sweep::SweepRow;
use crate::error::{Error, Result};

/// Metrics compared cell by cell; names follow the CSV columns.
pub const COMPARED_METRICS: [&str; 5] = ["P_s", "cbr", "ED_ms", "EH_ms", "theta_norm"];

/// Share of cells that must agree for a sweep to count as validated.
pub const AGREEMENT_TARGET: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub s_ms: f64,
    pub metric: String,
    pub analytic: f64,
    pub simulated: f64,
    pub half_width: f64,
    pub rel_err: f64,
    /// Analytic value inside the simulated confidence interval.
    pub contained: bool,
    /// Contained, or within the relative tolerance.
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rel_tol: f64,
    pub cells: Vec<Cell>,
    pub contained_fraction: f64,
    pub agreement_fraction: f64,
}

impl Comparison {
    pub fn passes(&self) -> bool {
        self.agreement_fraction >= AGREEMENT_TARGET
    }
}

fn metric(row: &SweepRow, name: &str) -> (f64, Option<f64>) {
    match name {
        "P_s" => (row.p_s, row.p_s_ci),
        "cbr" => (row.cbr, row.cbr_ci),
        "ED_ms" => (row.ed_ms, row.ed_ms_ci),
        "EH_ms" => (row.eh_ms, row.eh_ms_ci),
        "theta_norm" => (row.theta_norm, row.theta_norm_ci),
        _ => unreachable!("unknown metric {name}"),
    }
}

/// Per-metric, per-`S` relative error and CI containment. Rows are matched
/// by position and must share the same `S` grid.
pub fn compare_report(analytic: &[SweepRow], simulated: &[SweepRow], rel_tol: f64) -> Result<Comparison> {
    if analytic.len() != simulated.len() {
        return Err(Error::GridMismatch(format!(
            "{} analytic rows vs {} simulated",
            analytic.len(),
            simulated.len()
        )));
    }
    let mut cells = Vec::with_capacity(analytic.len() * COMPARED_METRICS.len());
    for (a, s) in analytic.iter().zip(simulated) {
        if ((a.s_ms - s.s_ms) / a.s_ms).abs() > 1e-9 {
            return Err(Error::GridMismatch(format!("S = {} ms vs {} ms", a.s_ms, s.s_ms)));
        }
        for name in COMPARED_METRICS {
            let (av, _) = metric(a, name);
            let (sv, hw) = metric(s, name);
            let hw = hw.unwrap_or(0.0);
            let diff = (av - sv).abs();
            let rel_err = if sv != 0.0 { diff / sv.abs() } else { diff };
            let contained = diff <= hw;
            cells.push(Cell {
                s_ms: a.s_ms,
                metric: name.into(),
                analytic: av,
                simulated: sv,
                half_width: hw,
                rel_err,
                contained,
                agrees: contained || rel_err <= rel_tol,
            });
        }
    }
    let total = cells.len().max(1) as f64;
    Ok(Comparison {
        rel_tol,
        contained_fraction: cells.iter().filter(|c| c.contained).count() as f64 / total,
        agreement_fraction: cells.iter().filter(|c| c.agrees).count() as f64 / total,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sweep::rows_from_csv;

    fn rows() -> Vec<SweepRow> {
        rows_from_csv(
            "S_ms,mode,P_s,theta_msg_s,theta_norm,theta_kbps,cbr,ED_ms,EH_ms,zeta_per_s,Ebar_mJ,EQ,StdQ,P_s_ci,theta_msg_s_ci,theta_norm_ci,theta_kbps_ci,cbr_ci,ED_ms_ci,EH_ms_ci,Ebar_mJ_ci,EQ_ci,StdQ_ci\n\
             10,simulate,0.8,12,0.12,48,1,40,88,,0.15,24,2,0.01,0.1,0.001,0.4,0,0.5,0.5,0.01,0.1,0.1\n\
             20,simulate,0.8,12,0.24,48,0.9,40,88,,0.15,24,2,0.01,0.1,0.001,0.4,0.01,0.5,0.5,0.01,0.1,0.1\n",
        )
        .unwrap()
    }

    #[test]
    fn identical_rows_have_zero_error() {
        let r = rows();
        let c = compare_report(&r, &r, 0.05).unwrap();
        assert!(c.cells.iter().all(|c| c.rel_err == 0.0 && c.contained));
        assert_eq!(c.agreement_fraction, 1.0);
    }

    #[test]
    fn containment_flag() {
        let sim = rows();
        let mut an = sim.clone();
        an[0].p_s += 0.009;
        an[1].p_s += 0.2;
        let c = compare_report(&an, &sim, 0.05).unwrap();
        let ps: Vec<&Cell> = c.cells.iter().filter(|c| c.metric == "P_s").collect();
        assert!(ps[0].contained && ps[0].agrees);
        assert!(!ps[1].contained && !ps[1].agrees);
        assert!((c.agreement_fraction - 0.9).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch() {
        let sim = rows();
        let mut an = sim.clone();
        an[1].s_ms = 21.0;
        assert!(matches!(compare_report(&an, &sim, 0.05), Err(Error::GridMismatch(_))));
        assert!(matches!(
            compare_report(&an[..1], &sim, 0.05),
            Err(Error::GridMismatch(_))
        ));
    }
}
