//! Sum-rate maximizing access policy: per-backlog transmission probability
//! `p_k`, target SNIR `gamma_k` and slot length `T_k`.

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::numeric::{binomial_pmf_with, linear_fit, ln_factorials};
use crate::profile::{GridSpec, SicProfile};

/// Slot length for target SNIR `gamma`; `None` is the idle slot (no node backlogged).
pub fn slot_duration(gamma: Option<f64>, config: &SystemConfig) -> f64 {
    match gamma {
        None => config.t_oh,
        Some(g) => config.t_oh + config.packet_bits / (config.bandwidth_hz * (1.0 + g).log2()),
    }
}

/// Mean number of packets decoded in a slot where `k` nodes are backlogged
/// and each transmits with probability `p`.
pub fn mean_decoded(k: usize, p: f64, gamma: f64, profile: &SicProfile) -> Result<f64> {
    check_kp(k, p, profile)?;
    let mh = profile.mh_column(gamma)?;
    let pmf = binomial_pmf_with(k, p, &ln_factorials(k));
    Ok(pmf.iter().zip(&mh).map(|(w, m)| w * m).sum())
}

fn check_kp(k: usize, p: f64, profile: &SicProfile) -> Result<()> {
    if k < 1 || k > profile.max_h() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside 1..={}",
            profile.max_h()
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p = {p} outside [0, 1]")));
    }
    Ok(())
}

/// Sum rate `U_k(p, gamma) = log2(1 + gamma) * E[decoded]` in bit/s/Hz.
pub fn sum_rate(k: usize, p: f64, gamma: f64, profile: &SicProfile) -> Result<f64> {
    Ok((1.0 + gamma).log2() * mean_decoded(k, p, gamma, profile)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimumRow {
    pub k: usize,
    pub p: f64,
    pub gamma: f64,
    pub sum_rate: f64,
    pub mean_decoded: f64,
}

/// Exhaustive grid argmax of the sum rate over `p x gamma` for one `k`.
/// The gamma grid is the profile's own grid (capped at `gamma_max`). Ties go
/// to the larger gamma, then the larger p.
pub fn optimize_policy(k: usize, profile: &SicProfile, gamma_max: f64, grid: &GridSpec) -> Result<OptimumRow> {
    let ln_fact = ln_factorials(k);
    optimize_with(k, profile, gamma_max, &grid.p_grid(), &ln_fact)
}

fn optimize_with(
    k: usize,
    profile: &SicProfile,
    gamma_max: f64,
    p_grid: &[f64],
    ln_fact: &[f64],
) -> Result<OptimumRow> {
    check_kp(k, 1.0, profile)?;
    let gammas: Vec<usize> = (0..profile.gamma_grid.len())
        .filter(|j| profile.gamma_grid[*j] <= gamma_max * (1.0 + 1e-12))
        .collect();
    if gammas.is_empty() || p_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut best: Option<OptimumRow> = None;
    for &p in p_grid {
        let pmf = binomial_pmf_with(k, p, ln_fact);
        for &j in &gammas {
            let gamma = profile.gamma_grid[j];
            let d: f64 = (1..=k).map(|h| pmf[h] * profile.mh[h][j]).sum();
            let u = (1.0 + gamma).log2() * d;
            let better = match &best {
                None => true,
                Some(b) => u > b.sum_rate || (u == b.sum_rate && (gamma > b.gamma || (gamma == b.gamma && p > b.p))),
            };
            if better {
                best = Some(OptimumRow {
                    k,
                    p,
                    gamma,
                    sum_rate: u,
                    mean_decoded: d,
                });
            }
        }
    }
    Ok(best.expect("non-empty grid"))
}

/// Argmax rows for `k = 1..=n`.
pub fn optimize_all(profile: &SicProfile, gamma_max: f64, grid: &GridSpec) -> Result<Vec<OptimumRow>> {
    use rayon::prelude::*;
    let n = profile.max_h();
    let ln_fact = ln_factorials(n);
    let p_grid = grid.p_grid();
    (1..=n)
        .into_par_iter()
        .map(|k| optimize_with(k, profile, gamma_max, &p_grid, &ln_fact))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedConstants {
    pub k_c: usize,
    pub a_gamma: f64,
    pub b_gamma: f64,
    pub a_d: f64,
}

/// Fits the closed-form policy to an argmax table.
///
/// The starting breakpoint is the first `k` whose optimum has `p` rounding to
/// 1 (two decimals) with `gamma` below `gamma_max`; `1/gamma*_k ~ a_gamma k +
/// b_gamma` is fitted over `k >= k_c`. Because grid noise makes the argmax
/// near the switch-over ambiguous, `k_c` is then moved to the first `k` where
/// the fitted `p = 1` branch actually beats the best `gamma_max` branch, and
/// the fit is repeated until `k_c` is stable. `a_d` is the slope of mean
/// decoded packets under the fitted branch against `k` over the upper half of
/// the `k` range.
pub fn fit_policy_constants(
    raw: &[OptimumRow],
    profile: &SicProfile,
    gamma_max: f64,
    grid: &GridSpec,
) -> Result<FittedConstants> {
    if raw.len() < 3 {
        return Err(Error::TooFewPoints(raw.len()));
    }
    let mut k_c = raw
        .iter()
        .find(|r| (r.p * 100.0).round() == 100.0 && r.gamma < gamma_max * (1.0 - 1e-9))
        .map(|r| r.k)
        .ok_or_else(|| Error::InvalidArgument("no k with p* = 1 and gamma* < gamma_max".into()))?;
    let p_grid = grid.p_grid();
    let mut fit = fit_inverse_gamma(raw, k_c)?;
    for _ in 0..raw.len() {
        let next = crossover(raw, profile, gamma_max, &p_grid, fit)?;
        if next == k_c {
            break;
        }
        k_c = next;
        fit = fit_inverse_gamma(raw, k_c)?;
    }
    let (a_gamma, b_gamma) = fit;
    let n = raw.iter().map(|r| r.k).max().unwrap_or(0);
    let top: Vec<usize> = raw.iter().map(|r| r.k).filter(|&k| k > n / 2).collect();
    let decoded = top
        .iter()
        .map(|&k| mean_decoded(k, 1.0, closed_form_gamma(k, a_gamma, b_gamma, gamma_max), profile))
        .collect::<Result<Vec<_>>>()?;
    let (a_d, _) = linear_fit(&top.iter().map(|&k| k as f64).collect::<Vec<_>>(), &decoded)?;
    Ok(FittedConstants {
        k_c,
        a_gamma,
        b_gamma,
        a_d,
    })
}

fn closed_form_gamma(k: usize, a_gamma: f64, b_gamma: f64, gamma_max: f64) -> f64 {
    let inv = a_gamma * k as f64 + b_gamma;
    if inv > 0.0 {
        (1.0 / inv).min(gamma_max)
    } else {
        gamma_max
    }
}

fn fit_inverse_gamma(raw: &[OptimumRow], k_c: usize) -> Result<(f64, f64)> {
    let tail: Vec<&OptimumRow> = raw.iter().filter(|r| r.k >= k_c).collect();
    linear_fit(
        &tail.iter().map(|r| r.k as f64).collect::<Vec<_>>(),
        &tail.iter().map(|r| 1.0 / r.gamma).collect::<Vec<_>>(),
    )
}

/// First `k` where the fitted `p = 1` branch lies strictly below `gamma_max`
/// and is at least as good as the best `gamma = gamma_max` choice.
fn crossover(
    raw: &[OptimumRow],
    profile: &SicProfile,
    gamma_max: f64,
    p_grid: &[f64],
    (a, b): (f64, f64),
) -> Result<usize> {
    for r in raw {
        let k = r.k;
        let gamma = closed_form_gamma(k, a, b, gamma_max);
        if gamma >= gamma_max {
            continue;
        }
        let fitted = sum_rate(k, 1.0, gamma, profile)?;
        let mut at_max = 0.0f64;
        for &p in p_grid {
            at_max = at_max.max(sum_rate(k, p, gamma_max, profile)?);
        }
        if fitted >= at_max {
            return Ok(k);
        }
    }
    Err(Error::InvalidArgument(
        "fitted branch never beats the gamma_max branch".into(),
    ))
}

/// Which per-k parameters a policy applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyForm {
    /// Grid argmax values as found.
    Raw,
    /// Closed form: `p = 1/k, gamma = gamma_max` below `k_c`; `p = 1`,
    /// `gamma = 1/(a_gamma k + b_gamma)` from `k_c` on.
    Fitted,
    /// Tables supplied externally (override file).
    Override,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessPolicy {
    pub form: PolicyForm,
    /// `p[k]`, `k = 0..=n`, `p[0] = 0`.
    pub p: Vec<f64>,
    /// `gamma[k]`, `k = 0..=n`; `gamma[0]` is unused and stored as 0.
    pub gamma: Vec<f64>,
    /// `t[k]` slot length (s), `t[0] = T_oh`.
    pub t: Vec<f64>,
    pub constants: FittedConstants,
}

impl AccessPolicy {
    pub fn n(&self) -> usize {
        self.p.len() - 1
    }

    pub fn from_tables(
        form: PolicyForm,
        p: Vec<f64>,
        gamma: Vec<f64>,
        constants: FittedConstants,
        config: &SystemConfig,
    ) -> Result<Self> {
        let n = p.len().checked_sub(1).ok_or(Error::EmptyGrid)?;
        if gamma.len() != n + 1 {
            return Err(Error::InvalidArgument("p and gamma tables differ in length".into()));
        }
        let t = (0..=n)
            .map(|k| slot_duration((k > 0).then(|| gamma[k]), config))
            .collect();
        let pol = Self {
            form,
            p,
            gamma,
            t,
            constants,
        };
        pol.validate(config.gamma_max)?;
        Ok(pol)
    }

    pub fn raw(rows: &[OptimumRow], constants: FittedConstants, config: &SystemConfig) -> Result<Self> {
        let mut p = vec![0.0];
        let mut gamma = vec![0.0];
        for (i, r) in rows.iter().enumerate() {
            if r.k != i + 1 {
                return Err(Error::InvalidArgument(
                    "argmax rows must cover k = 1..=n in order".into(),
                ));
            }
            p.push(r.p);
            gamma.push(r.gamma);
        }
        Self::from_tables(PolicyForm::Raw, p, gamma, constants, config)
    }

    pub fn fitted(constants: FittedConstants, config: &SystemConfig) -> Result<Self> {
        let n = config.n;
        let mut p = vec![0.0; n + 1];
        let mut gamma = vec![0.0; n + 1];
        for k in 1..=n {
            if k < constants.k_c {
                p[k] = 1.0 / k as f64;
                gamma[k] = config.gamma_max;
            } else {
                p[k] = 1.0;
                gamma[k] = closed_form_gamma(k, constants.a_gamma, constants.b_gamma, config.gamma_max);
            }
        }
        Self::from_tables(PolicyForm::Fitted, p, gamma, constants, config)
    }

    /// Frozen `k`-independent parameters, for oracle comparisons.
    pub fn constant(p: f64, gamma: f64, config: &SystemConfig) -> Result<Self> {
        let n = config.n;
        let mut pv = vec![p; n + 1];
        let mut gv = vec![gamma; n + 1];
        pv[0] = 0.0;
        gv[0] = 0.0;
        let c = FittedConstants {
            k_c: 1,
            a_gamma: 0.0,
            b_gamma: 1.0 / gamma,
            a_d: 0.0,
        };
        Self::from_tables(PolicyForm::Override, pv, gv, c, config)
    }

    pub fn validate(&self, gamma_max: f64) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.p[0] != 0.0 {
            return bad("p_0 must be 0".into());
        }
        for k in 1..=self.n() {
            if !(self.p[k] >= 0.0 && self.p[k] <= 1.0) {
                return bad(format!("p_{k} = {} outside [0, 1]", self.p[k]));
            }
            if !(self.gamma[k] > 0.0 && self.gamma[k] <= gamma_max * (1.0 + 1e-12)) {
                return bad(format!("gamma_{k} = {} outside (0, gamma_max]", self.gamma[k]));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::SicProfile;

    fn toy_profile() -> SicProfile {
        // m_1 = 0.9 everywhere; m_h = 0.9 * h * g_j / (g_j + 1) else
        let grid = vec![0.1, 1.0, 10.0];
        let mut mh = vec![vec![0.0; 3]];
        for h in 1..=4 {
            mh.push(
                grid.iter()
                    .map(|g| {
                        if h == 1 {
                            0.9
                        } else {
                            0.9 * h as f64 / (1.0 + g * h as f64)
                        }
                    })
                    .collect(),
            );
        }
        SicProfile {
            stderr: mh.iter().map(|r| vec![0.0; r.len()]).collect(),
            gamma_grid: grid,
            mh,
            trials: 1,
        }
    }

    #[test]
    fn slot_lengths() {
        let cfg = SystemConfig::default();
        assert!((slot_duration(Some(31.0), &cfg) - 1.8e-3).abs() < 1e-15);
        assert_eq!(slot_duration(None, &cfg), 1e-3);
        assert!((slot_duration(Some(1.0), &cfg) - (1e-3 + 4000.0 / 1e6)).abs() < 1e-15);
    }

    #[test]
    fn sum_rate_reductions() {
        let prof = toy_profile();
        let u = sum_rate(1, 1.0, 10.0, &prof).unwrap();
        assert!((u - 11f64.log2() * 0.9).abs() < 1e-12);
        assert_eq!(sum_rate(3, 0.0, 1.0, &prof).unwrap(), 0.0);
        assert!(sum_rate(2, 0.3, 100.0, &prof).is_err());
        // p^h weighting: k = 2, p = 0.5 -> 0.5 * m_1 + 0.25 * m_2
        let d = mean_decoded(2, 0.5, 1.0, &prof).unwrap();
        assert!((d - (0.5 * 0.9 + 0.25 * prof.mh[2][1])).abs() < 1e-12);
    }

    #[test]
    fn single_node_optimum_is_corner() {
        let prof = toy_profile();
        let r = optimize_policy(
            1,
            &prof,
            10.0,
            &GridSpec {
                p_points: 10,
                ..GridSpec::default()
            },
        )
        .unwrap();
        assert_eq!((r.p, r.gamma), (1.0, 10.0));
        assert!(optimize_policy(1, &prof, 0.01, &GridSpec::default()).is_err());
    }

    #[test]
    fn fit_rejects_short_tables() {
        let rows: Vec<OptimumRow> = (1..=3)
            .map(|k| OptimumRow {
                k,
                p: 1.0,
                gamma: 0.5 / k as f64,
                sum_rate: 1.0,
                mean_decoded: k as f64,
            })
            .collect();
        let prof = toy_profile();
        assert!(matches!(
            fit_policy_constants(&rows[..2], &prof, 31.0, &GridSpec::default()),
            Err(Error::TooFewPoints(_))
        ));
    }

    #[test]
    fn fitted_policy_shape() {
        let cfg = SystemConfig::default();
        let c = FittedConstants {
            k_c: 6,
            a_gamma: 0.39,
            b_gamma: 0.78,
            a_d: 0.89,
        };
        let pol = AccessPolicy::fitted(c, &cfg).unwrap();
        assert_eq!(pol.p[0], 0.0);
        assert_eq!(pol.t[0], cfg.t_oh);
        assert!((pol.p[3] - 1.0 / 3.0).abs() < 1e-15 && pol.gamma[3] == 31.0);
        assert_eq!(pol.p[6], 1.0);
        assert!((pol.gamma[10] - 1.0 / 4.68).abs() < 1e-12);
        for k in 1..cfg.n {
            assert!(pol.t[k + 1] >= pol.t[k]);
        }
    }

    #[test]
    fn fitted_policy_clamps_non_positive_closed_form() {
        let cfg = SystemConfig {
            n: 4,
            ..SystemConfig::default()
        };
        let c = FittedConstants {
            k_c: 1,
            a_gamma: 0.4,
            b_gamma: -1.0,
            a_d: 0.9,
        };
        let pol = AccessPolicy::fitted(c, &cfg).unwrap();
        assert_eq!(pol.gamma[1], cfg.gamma_max);
        assert!((pol.gamma[4] - 1.0 / 0.6).abs() < 1e-12);
    }

    #[test]
    fn crossover_ignores_clamped_closed_form() {
        // With b < 0 the closed form clamps to gamma_max at k = 1, which would
        // trivially tie the gamma_max branch; the breakpoint must come later.
        let prof = toy_profile();
        let rows: Vec<OptimumRow> = (1..=4)
            .map(|k| OptimumRow {
                k,
                p: 1.0,
                gamma: 1.0 / (0.4 * k as f64 - 0.2),
                sum_rate: 1.0,
                mean_decoded: 1.0,
            })
            .collect();
        let k = crossover(&rows, &prof, 10.0, &[0.5, 1.0], (0.4, -0.2));
        assert!(!matches!(k, Ok(1)), "{k:?}");
    }
}
