//! Mean-field backlog model: every node is backlogged at a slot boundary
//! independently with probability `b`, found as the fixed point of the
//! renewal-reward balance between idle and busy periods.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{binomial_pmf_with, bisect, ln_factorials};
use crate::policy::AccessPolicy;

/// Binomial(n-1, b) when the tagged node is excluded, Binomial(n, b) otherwise.
pub fn backlog_pdf(b: f64, n: usize, tagged_excluded: bool) -> Vec<f64> {
    let m = if tagged_excluded { n - 1 } else { n };
    binomial_pmf_with(m, b, &ln_factorials(m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacklogModel {
    pub n: usize,
    pub b: f64,
    /// Backlog count among the `n - 1` other nodes.
    pub q: Vec<f64>,
    /// Backlog count among all `n` nodes.
    pub w: Vec<f64>,
    /// `sum_k q_k p_{k+1}`: transmit probability of a backlogged tagged node.
    pub p_bar_prime: f64,
    /// `sum_k q_k T_{k+1}`: mean slot length seen by a backlogged tagged node (s).
    pub t_bar_prime: f64,
}

impl BacklogModel {
    pub fn at(b: f64, policy: &AccessPolicy) -> Self {
        let n = policy.n();
        let q = backlog_pdf(b, n, true);
        let w = backlog_pdf(b, n, false);
        let p_bar_prime = q.iter().enumerate().map(|(k, qk)| qk * policy.p[k + 1]).sum();
        let t_bar_prime = q.iter().enumerate().map(|(k, qk)| qk * policy.t[k + 1]).sum();
        Self {
            n,
            b,
            q,
            w,
            p_bar_prime,
            t_bar_prime,
        }
    }

    pub fn mean_backlog(&self) -> f64 {
        self.n as f64 * self.b
    }

    pub fn std_backlog(&self) -> f64 {
        (self.n as f64 * self.b * (1.0 - self.b)).sqrt()
    }
}

/// `F(b) = (1 - phi_X(lambda)) / (1 + p' - phi_X(lambda))`, with
/// `1 - phi_X(lambda) = sum_k q_k (1 - e^{-lambda T_k})` computed without cancellation.
pub fn fixed_point_map(b: f64, policy: &AccessPolicy, lambda: f64) -> f64 {
    let n = policy.n();
    let q = backlog_pdf(b, n, true);
    let mut no_arrival_c = 0.0;
    let mut p_bar = 0.0;
    for (k, qk) in q.iter().enumerate() {
        no_arrival_c += qk * -(-lambda * policy.t[k]).exp_m1();
        p_bar += qk * policy.p[k + 1];
    }
    no_arrival_c / (no_arrival_c + p_bar)
}

const B_LO: f64 = 1e-15;
const B_HI: f64 = 1.0 - 1e-15;

/// Solves `b = F(b)` by bisection on `F(b) - b`.
pub fn solve_backlog_fixed_point(policy: &AccessPolicy, lambda: f64) -> Result<BacklogModel> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    let g = |b: f64| fixed_point_map(b, policy, lambda) - b;
    // run to bracket collapse; light traffic puts b near 1e-9 where an absolute
    // residual tolerance alone would leave few significant digits
    let b = bisect(g, B_LO, B_HI, 0.0)
        .map_err(|e| Error::ModelInconsistency(format!("fixed point not bracketed on [{B_LO:e}, {B_HI}]: {e}")))?;
    Ok(BacklogModel::at(b, policy))
}

/// Number of sign changes of `F(b) - b` over `points` interior grid points of (0, 1).
pub fn fixed_point_sign_changes(policy: &AccessPolicy, lambda: f64, points: usize) -> usize {
    let mut changes = 0;
    let mut prev: Option<bool> = None;
    for i in 1..=points {
        let b = i as f64 / (points + 1) as f64;
        let v = fixed_point_map(b, policy, lambda) - b;
        if v == 0.0 {
            continue;
        }
        let pos = v > 0.0;
        if let Some(p) = prev {
            if p != pos {
                changes += 1;
            }
        }
        prev = Some(pos);
    }
    changes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;
    use crate::policy::FittedConstants;

    fn table_policy() -> (SystemConfig, AccessPolicy) {
        let cfg = SystemConfig::default();
        let c = FittedConstants {
            k_c: 6,
            a_gamma: 0.39,
            b_gamma: 0.78,
            a_d: 0.89,
        };
        let pol = AccessPolicy::fitted(c, &cfg).unwrap();
        (cfg, pol)
    }

    #[test]
    fn pdf_examples() {
        let q = backlog_pdf(0.5, 3, true);
        assert_eq!(q.len(), 3);
        assert!((q[0] - 0.25).abs() < 1e-15 && (q[1] - 0.5).abs() < 1e-15 && (q[2] - 0.25).abs() < 1e-15);
        let w = backlog_pdf(0.0, 7, false);
        assert_eq!(w[0], 1.0);
        assert!(w[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn residual_and_uniqueness() {
        let (_, pol) = table_policy();
        for s in [1e-3, 1e-2, 0.053, 0.2, 1.0] {
            let m = solve_backlog_fixed_point(&pol, 1.0 / s).unwrap();
            assert!((fixed_point_map(m.b, &pol, 1.0 / s) - m.b).abs() < 1e-10);
            assert!(m.b > 0.0 && m.b < 1.0);
            assert!((m.q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((m.w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(fixed_point_sign_changes(&pol, 1.0 / s, 10_000), 1);
        }
    }

    #[test]
    fn light_and_heavy_limits() {
        let (_, pol) = table_policy();
        let light = solve_backlog_fixed_point(&pol, 1e-6).unwrap();
        assert!(light.b < 1e-3);
        let heavy = solve_backlog_fixed_point(&pol, 1e6).unwrap();
        assert!((heavy.b - 1.0 / (1.0 + heavy.p_bar_prime)).abs() < 1e-3);
        assert!(heavy.b < 1.0 / (1.0 + heavy.p_bar_prime) + 1e-9);
    }

    #[test]
    fn rejects_non_positive_rate() {
        let (_, pol) = table_policy();
        assert!(solve_backlog_fixed_point(&pol, 0.0).is_err());
    }
}
