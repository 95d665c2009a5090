//! Closed-form performance metrics on top of the solved backlog model.

use serde::{Deserialize, Serialize};

use super::backlog::{solve_backlog_fixed_point, BacklogModel};
use super::radio::{coverage_radius, mean_inverse_gain, mean_tx_power, TwoRayGround};
use super::transforms::{LtMoments, SlotTransforms};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::numeric::{binomial_pmf_with, bisect, ln_factorials};
use crate::policy::{AccessPolicy, FittedConstants};
use crate::profile::SicProfile;

/// `E[J_D | Q = k]`, mean packets decoded in a slot with `k` backlogged nodes,
/// for `k = 0..=n`.
pub fn expected_decoded_table(policy: &AccessPolicy, profile: &SicProfile) -> Result<Vec<f64>> {
    let n = policy.n();
    let lf = ln_factorials(n);
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        let mh = profile.mh_column(policy.gamma[k])?;
        let pmf = binomial_pmf_with(k, policy.p[k], &lf);
        out[k] = (1..=k).map(|h| pmf[h] * mh[h]).sum();
    }
    Ok(out)
}

fn success_from_table(backlog: &BacklogModel, policy: &AccessPolicy, decoded: &[f64]) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, wk) in backlog.w.iter().enumerate().skip(1) {
        num += wk * decoded[k];
        den += wk * k as f64 * policy.p[k];
    }
    if !(den > 0.0) {
        return Err(Error::ModelInconsistency(
            "no transmissions: success probability undefined".into(),
        ));
    }
    Ok(num / den)
}

/// Ratio of mean decoded to mean transmitted packets per slot.
pub fn success_probability(backlog: &BacklogModel, policy: &AccessPolicy, profile: &SicProfile) -> Result<f64> {
    success_from_table(backlog, policy, &expected_decoded_table(policy, profile)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Throughput {
    /// Delivered messages per second per node.
    pub theta: f64,
    /// Delivered fraction of generated messages.
    pub theta_norm: f64,
    pub theta_bps: f64,
}

pub fn throughput(p_s: f64, mean_y: f64, lambda: f64, packet_bits: f64) -> Throughput {
    let theta = p_s / mean_y;
    Throughput {
        theta,
        theta_norm: theta / lambda,
        theta_bps: packet_bits * theta,
    }
}

/// Long-run fraction of time with at least one transmission on air.
pub fn channel_busy_ratio(backlog: &BacklogModel, policy: &AccessPolicy) -> f64 {
    let mut silent = 0.0;
    let mut total = 0.0;
    for (k, wk) in backlog.w.iter().enumerate() {
        let t = policy.t[k];
        silent += wk * (1.0 - policy.p[k]).powi(k as i32) * t;
        total += wk * t;
    }
    1.0 - silent / total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AoiMetrics {
    pub mean: f64,
    /// Exponential decay rate of the AoI tail (1/s); `+inf` when every
    /// transmission succeeds.
    pub zeta: f64,
}

impl AoiMetrics {
    /// Shifted-exponential approximation of `P(H > t)`.
    pub fn ccdf_approx(&self, t: f64) -> f64 {
        (-self.zeta * (t - self.mean) - 1.0).exp().min(1.0)
    }
}

/// Mean AoI and tail decay rate.
///
/// `phi_y_neg(z)` must evaluate `phi_Y(-z)` for `0 <= z < pole`; it is
/// increasing there and diverges at `pole` (pass `+inf` for an entire
/// transform). `zeta` solves `phi_Y(-zeta) = 1 / (1 - P_s)`.
pub fn aoi_metrics(
    mean_d: f64,
    mean_y: f64,
    second_y: f64,
    p_s: f64,
    phi_y_neg: impl Fn(f64) -> f64,
    pole: f64,
    s_cap: f64,
) -> Result<AoiMetrics> {
    if !(p_s > 0.0 && p_s <= 1.0) {
        return Err(Error::InvalidArgument(format!("P_s = {p_s} outside (0, 1]")));
    }
    let mean = mean_d + second_y / (2.0 * mean_y) + mean_y * (1.0 / p_s - 1.0);
    if p_s == 1.0 {
        return Ok(AoiMetrics {
            mean,
            zeta: f64::INFINITY,
        });
    }
    let target = -(-p_s).ln_1p(); // ln(1 / (1 - P_s))
    let limit = pole.min(s_cap);
    let f = |z: f64| {
        if z >= pole {
            return f64::INFINITY;
        }
        let v = phi_y_neg(z);
        if v.is_finite() && v > 0.0 {
            v.ln() - target
        } else {
            f64::INFINITY
        }
    };
    // expand geometrically from 1e-9 until the sign flips or the cap is hit
    let mut lo = 0.0;
    let mut hi = 1e-9;
    while hi < limit && f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    if hi >= limit {
        hi = limit;
        if f(hi) < 0.0 {
            return Err(Error::ModelInconsistency(format!(
                "AoI tail root beyond transform validity (cap {limit:e})"
            )));
        }
    }
    let zeta = bisect(f, lo, hi, 0.0)?;
    Ok(AoiMetrics { mean, zeta })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    /// Mean transmit energy per transmission (J).
    pub tx: f64,
    /// Mean energy per inter-departure time, excluding generation (J).
    pub per_cycle: f64,
    /// Mean energy per delivered packet, generation included (J).
    pub per_delivered: f64,
}

/// Energy accounting for one inter-departure cycle. `inverse_gain` is the
/// disc average of `1/G_d`.
pub fn energy_per_delivered(
    tr: &SlotTransforms,
    moments: &LtMoments,
    policy: &AccessPolicy,
    config: &SystemConfig,
    inverse_gain: f64,
    p_s: f64,
) -> Result<Energy> {
    let v_first = moments.mean_v_first;
    if v_first < -1e-12 * moments.mean_x.max(1e-300) {
        return Err(Error::ModelInconsistency(format!("E[V'] = {v_first:e} < 0")));
    }
    let v_first = v_first.max(0.0);
    let n = policy.n();
    let tx: f64 = (0..n)
        .map(|k| tr.q[k] * mean_tx_power(config, policy.gamma[k + 1], inverse_gain) * policy.t[k + 1])
        .sum();
    let per_cycle = config.p_doze * (moments.mean_r - v_first) + config.p_active * (v_first + moments.mean_c) + tx;
    let per_delivered = (config.e_gen * tr.lambda * moments.mean_y + per_cycle) / p_s;
    Ok(Energy {
        tx,
        per_cycle,
        per_delivered,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalRate {
    /// Asymptotic sum rate (bit/s/Hz).
    pub u_inf: f64,
    pub lambda_inf: f64,
    pub s_inf: f64,
}

/// Generation rate separating SIC-parallel (heavy) from one-at-a-time (light) access.
pub fn critical_rate(constants: &FittedConstants, config: &SystemConfig) -> CriticalRate {
    let u_inf = constants.a_d / (constants.a_gamma * std::f64::consts::LN_2);
    let lambda_inf = config.bandwidth_hz * u_inf / (config.n as f64 * config.packet_bits);
    CriticalRate {
        u_inf,
        lambda_inf,
        s_inf: 1.0 / lambda_inf,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Mean generation time (s).
    pub s: f64,
    pub lambda: f64,
    pub b: f64,
    pub p_s: f64,
    pub theta: f64,
    pub theta_norm: f64,
    pub theta_bps: f64,
    pub cbr: f64,
    /// Mean access delay (s).
    pub mean_delay: f64,
    /// Mean age of information (s).
    pub mean_aoi: f64,
    pub zeta: f64,
    /// Mean energy per delivered packet (J).
    pub energy: f64,
    pub energy_tx: f64,
    pub energy_cycle: f64,
    pub mean_backlog: f64,
    pub std_backlog: f64,
    pub moments: LtMoments,
    pub critical: CriticalRate,
    pub coverage_radius: f64,
}

/// Everything that does not depend on the load, prepared once per policy.
#[derive(Debug, Clone)]
pub struct AnalyticModel {
    pub config: SystemConfig,
    pub policy: AccessPolicy,
    decoded: Vec<f64>,
    pub coverage_radius: f64,
    pub inverse_gain: f64,
}

impl AnalyticModel {
    pub fn new(config: &SystemConfig, policy: &AccessPolicy, profile: &SicProfile) -> Result<Self> {
        if policy.n() != config.n {
            return Err(Error::InvalidArgument(format!(
                "policy covers n = {}, config has n = {}",
                policy.n(),
                config.n
            )));
        }
        let path = TwoRayGround::from_config(config);
        let coverage_radius = coverage_radius(config, &path)?;
        Ok(Self {
            config: config.clone(),
            policy: policy.clone(),
            decoded: expected_decoded_table(policy, profile)?,
            coverage_radius,
            inverse_gain: mean_inverse_gain(&path, coverage_radius, config.r_min),
        })
    }

    pub fn expected_decoded(&self) -> &[f64] {
        &self.decoded
    }

    pub fn solve(&self, lambda: f64) -> Result<(BacklogModel, SlotTransforms)> {
        let backlog = solve_backlog_fixed_point(&self.policy, lambda)?;
        let tr = SlotTransforms::new(&backlog, &self.policy, lambda);
        Ok((backlog, tr))
    }

    /// All metrics at mean generation time `s`.
    pub fn evaluate(&self, s: f64) -> Result<MetricsReport> {
        let lambda = 1.0 / s;
        let (backlog, tr) = self.solve(lambda)?;
        if backlog.p_bar_prime <= 0.0 {
            return Err(Error::ModelInconsistency("p' = 0".into()));
        }
        let m = LtMoments::from_transforms(&tr);
        let p_s = success_from_table(&backlog, &self.policy, &self.decoded)?;
        let thr = throughput(p_s, m.mean_y, lambda, self.config.packet_bits);
        let min_t = self.policy.t.iter().cloned().fold(f64::INFINITY, f64::min);
        let aoi = aoi_metrics(
            m.mean_d,
            m.mean_y,
            m.second_y,
            p_s,
            |z| tr.phi_y(-z),
            tr.y_pole(),
            1e6 / min_t,
        )?;
        let energy = energy_per_delivered(&tr, &m, &self.policy, &self.config, self.inverse_gain, p_s)?;
        Ok(MetricsReport {
            s,
            lambda,
            b: backlog.b,
            p_s,
            theta: thr.theta,
            theta_norm: thr.theta_norm,
            theta_bps: thr.theta_bps,
            cbr: channel_busy_ratio(&backlog, &self.policy),
            mean_delay: m.mean_d,
            mean_aoi: aoi.mean,
            zeta: aoi.zeta,
            energy: energy.per_delivered,
            energy_tx: energy.tx,
            energy_cycle: energy.per_cycle,
            mean_backlog: backlog.mean_backlog(),
            std_backlog: backlog.std_backlog(),
            moments: m,
            critical: critical_rate(&self.policy.constants, &self.config),
            coverage_radius: self.coverage_radius,
        })
    }
}
