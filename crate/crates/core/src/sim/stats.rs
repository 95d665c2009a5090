//! Across-replication point estimates and Student-t confidence intervals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::engine::{run_replication, RawTallies, SimOptions};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::policy::AccessPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Half-width of the two-sided confidence interval.
    pub half_width: f64,
    pub replications: usize,
}

impl Estimate {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.mean).abs() <= self.half_width
    }
}

/// Per-replication metric values derived from raw tallies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationMetrics {
    pub pdr: f64,
    pub theta: f64,
    pub theta_norm: f64,
    pub theta_bps: f64,
    pub cbr: f64,
    pub mean_delay: f64,
    /// `+inf` when no node ever delivered within the measured window.
    pub mean_aoi: f64,
    pub energy: f64,
    pub mean_backlog: f64,
    pub std_backlog: f64,
    pub tx_autocorr: f64,
    pub mean_interdeparture: f64,
    pub mean_contention: f64,
}

impl ReplicationMetrics {
    pub fn from_tallies(r: &RawTallies) -> Self {
        let theta = r.delivered as f64 / (r.n as f64 * r.time);
        let slots = r.slots as f64;
        let (m1, m2) = r.backlog_hist.iter().enumerate().fold((0.0, 0.0), |(a, b), (k, c)| {
            let w = *c as f64 / slots;
            (a + w * k as f64, b + w * (k * k) as f64)
        });
        let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { f64::NAN };
        Self {
            pdr: ratio(r.delivered as f64, r.transmitted as f64),
            theta,
            theta_norm: theta / r.lambda,
            theta_bps: theta * r.packet_bits,
            cbr: r.busy_time / r.time,
            mean_delay: ratio(r.delay_sum, r.transmitted as f64),
            mean_aoi: if r.aoi_time > 0.0 {
                r.aoi_integral / r.aoi_time
            } else {
                f64::INFINITY
            },
            energy: ratio(r.energy, r.delivered as f64),
            mean_backlog: m1,
            std_backlog: (m2 - m1 * m1).max(0.0).sqrt(),
            tx_autocorr: lag_correlation(r),
            mean_interdeparture: ratio(r.interdeparture_sum, r.interdeparture_count as f64),
            mean_contention: ratio(r.contention_sum, r.contention_count as f64),
        }
    }
}

fn lag_correlation(r: &RawTallies) -> f64 {
    let n = r.lag_pairs as f64;
    if n == 0.0 {
        return f64::NAN;
    }
    let (mx, my) = (r.lag_x as f64 / n, r.lag_y as f64 / n);
    let cov = r.lag_xy as f64 / n - mx * my;
    // indicators are 0/1, so E[x^2] = E[x]
    cov / (mx * (1.0 - mx) * my * (1.0 - my)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub pdr: Estimate,
    pub theta: Estimate,
    pub theta_norm: Estimate,
    pub theta_bps: Estimate,
    pub cbr: Estimate,
    pub mean_delay: Estimate,
    pub mean_aoi: Estimate,
    pub energy: Estimate,
    pub mean_backlog: Estimate,
    pub std_backlog: Estimate,
    pub tx_autocorr: Estimate,
    pub mean_interdeparture: Estimate,
    pub mean_contention: Estimate,
    /// Backlog histogram summed over replications.
    pub backlog_hist: Vec<u64>,
}

/// Mean and Student-t interval of `xs` at two-sided level `confidence`.
pub fn t_interval(xs: &[f64], confidence: f64) -> Result<Estimate> {
    let m = xs.len();
    if m < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 replications, got {m}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence {confidence} outside (0, 1)"
        )));
    }
    let mean = xs.iter().sum::<f64>() / m as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (m - 1) as f64)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .inverse_cdf(0.5 + confidence / 2.0);
    let half_width = if var == 0.0 { 0.0 } else { t * (var / m as f64).sqrt() };
    Ok(Estimate {
        mean,
        half_width,
        replications: m,
    })
}

/// Across-replication estimates; warmup is already excluded from the tallies.
pub fn estimate_metrics(replications: &[RawTallies], confidence: f64) -> Result<SimResult> {
    if replications.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 replications, got {}",
            replications.len()
        )));
    }
    if replications
        .windows(2)
        .any(|w| w[0].slots != w[1].slots || w[0].n != w[1].n)
    {
        return Err(Error::InvalidArgument("replications differ in horizon or size".into()));
    }
    let per: Vec<ReplicationMetrics> = replications.iter().map(ReplicationMetrics::from_tallies).collect();
    let est = |f: fn(&ReplicationMetrics) -> f64| t_interval(&per.iter().map(f).collect::<Vec<_>>(), confidence);
    let mut hist = vec![0u64; replications[0].backlog_hist.len()];
    for r in replications {
        hist.iter_mut().zip(&r.backlog_hist).for_each(|(a, b)| *a += b);
    }
    Ok(SimResult {
        pdr: est(|m| m.pdr)?,
        theta: est(|m| m.theta)?,
        theta_norm: est(|m| m.theta_norm)?,
        theta_bps: est(|m| m.theta_bps)?,
        cbr: est(|m| m.cbr)?,
        mean_delay: est(|m| m.mean_delay)?,
        mean_aoi: est(|m| m.mean_aoi)?,
        energy: est(|m| m.energy)?,
        mean_backlog: est(|m| m.mean_backlog)?,
        std_backlog: est(|m| m.std_backlog)?,
        tx_autocorr: est(|m| m.tx_autocorr)?,
        mean_interdeparture: est(|m| m.mean_interdeparture)?,
        mean_contention: est(|m| m.mean_contention)?,
        backlog_hist: hist,
    })
}

/// Runs all replications (in parallel) and reduces them in index order.
pub fn simulate(config: &SystemConfig, policy: &AccessPolicy, options: &SimOptions) -> Result<SimResult> {
    let reps = (0..options.replications as u64)
        .into_par_iter()
        .map(|i| run_replication(config, policy, config.seed, i, options))
        .collect::<Result<Vec<_>>>()?;
    estimate_metrics(&reps, options.confidence)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_have_zero_width() {
        let e = t_interval(&[0.3, 0.3, 0.3], 0.95).unwrap();
        assert_eq!((e.mean, e.half_width), (0.3, 0.0));
        assert!(t_interval(&[1.0], 0.95).is_err());
    }

    #[test]
    fn two_sample_hand_formula() {
        let (a, b) = (1.0, 2.0);
        let e = t_interval(&[a, b], 0.95).unwrap();
        let s = ((a - 1.5f64).powi(2) + (b - 1.5f64).powi(2)).sqrt();
        // t_{0.975, 1} = tan(0.475 pi)
        let t = (0.475 * std::f64::consts::PI).tan();
        assert_eq!(e.mean, 1.5);
        assert!((e.half_width - t * s / 2f64.sqrt()).abs() < 1e-9);
        assert!(e.contains(1.5 + e.half_width * 0.99));
    }

    #[test]
    fn single_replication_is_rejected() {
        let cfg = SystemConfig {
            n: 2,
            ..SystemConfig::default()
        };
        let pol = AccessPolicy::constant(0.5, 1.0, &cfg).unwrap();
        let opts = SimOptions::with_horizon(1000, 1);
        let r = run_replication(&cfg, &pol, 1, 0, &opts).unwrap();
        assert!(estimate_metrics(std::slice::from_ref(&r), 0.95).is_err());
        assert!(estimate_metrics(&[r.clone(), r], 0.95).unwrap().pdr.half_width == 0.0);
    }
}
