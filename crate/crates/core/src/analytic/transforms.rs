//! Laplace transforms of the slot, contention, idle, inter-departure and
//! access-delay times seen by a tagged node, and their first two moments.
//!
//! Slot time when the tagged node is idle: `X = T_k` w.p. `q_k`; when it is
//! backlogged: `X' = T_{k+1}` w.p. `q_k`. Contention `C` is a geometric sum
//! of `X'` slots ending in a transmission; the idle time `R` is a sum of `X`
//! slots ending with the first slot containing an arrival. `Y = R + C`,
//! `D = V + C` where `V` runs from the last arrival to the end of its slot.

use serde::{Deserialize, Serialize};

use super::backlog::BacklogModel;
use crate::policy::AccessPolicy;

/// `e^{-x}` weighted mass of one atom, in a form exact for small `x`:
/// `(1 - e^{-x}) / x - e^{-x}`.
fn v_atom(x: f64) -> f64 {
    if x < 1e-2 {
        let x2 = x * x;
        x / 2.0 - x2 / 3.0 + x2 * x / 8.0 - x2 * x2 / 30.0 + x2 * x2 * x / 144.0
    } else {
        -(-x).exp_m1() / x - (-x).exp()
    }
}

/// Slot-time atoms as seen by a tagged node for one solved backlog state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotTransforms {
    pub lambda: f64,
    /// `q_k`, `k = 0..n-1`.
    pub q: Vec<f64>,
    /// `T_k` for the idle tagged node.
    pub t_idle: Vec<f64>,
    /// `T_{k+1}` for the backlogged tagged node.
    pub t_busy: Vec<f64>,
    /// `p_{k+1}`.
    pub p_busy: Vec<f64>,
}

impl SlotTransforms {
    pub fn new(backlog: &BacklogModel, policy: &AccessPolicy, lambda: f64) -> Self {
        let n = policy.n();
        Self {
            lambda,
            q: backlog.q.clone(),
            t_idle: policy.t[..n].to_vec(),
            t_busy: policy.t[1..=n].to_vec(),
            p_busy: policy.p[1..=n].to_vec(),
        }
    }

    fn sum_idle(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.q.iter().zip(&self.t_idle).map(|(q, t)| q * f(*t)).sum()
    }

    pub fn phi_x(&self, s: f64) -> f64 {
        self.sum_idle(|t| (-s * t).exp())
    }

    /// `1 - phi_X(s)` without cancellation for small `s`.
    pub fn one_minus_phi_x(&self, s: f64) -> f64 {
        self.sum_idle(|t| -(-s * t).exp_m1())
    }

    pub fn dphi_x(&self, s: f64) -> f64 {
        self.sum_idle(|t| -t * (-s * t).exp())
    }

    pub fn phi_x_busy(&self, s: f64) -> f64 {
        self.q.iter().zip(&self.t_busy).map(|(q, t)| q * (-s * t).exp()).sum()
    }

    /// Slot transform for an idle (`false`) or backlogged (`true`) tagged node.
    pub fn phi_slot(&self, s: f64, tagged_backlogged: bool) -> f64 {
        if tagged_backlogged {
            self.phi_x_busy(s)
        } else {
            self.phi_x(s)
        }
    }

    pub fn mean_x(&self) -> f64 {
        self.sum_idle(|t| t)
    }

    pub fn second_x(&self) -> f64 {
        self.sum_idle(|t| t * t)
    }

    fn busy_terms(&self, s: f64) -> (f64, f64) {
        let mut tx = 0.0;
        let mut wait = 0.0;
        for ((q, t), p) in self.q.iter().zip(&self.t_busy).zip(&self.p_busy) {
            let e = (-s * t).exp();
            tx += q * p * e;
            wait += q * (1.0 - p) * e;
        }
        (tx, wait)
    }

    pub fn p_bar_prime(&self) -> f64 {
        self.q.iter().zip(&self.p_busy).map(|(q, p)| q * p).sum()
    }

    pub fn t_bar_prime(&self) -> f64 {
        self.q.iter().zip(&self.t_busy).map(|(q, t)| q * t).sum()
    }

    pub fn phi_c(&self, s: f64) -> f64 {
        let (tx, wait) = self.busy_terms(s);
        tx / (1.0 - wait)
    }

    pub fn mean_c(&self) -> f64 {
        self.t_bar_prime() / self.p_bar_prime()
    }

    pub fn second_c(&self) -> f64 {
        let mut sq = 0.0;
        let mut wait = 0.0;
        for ((q, t), p) in self.q.iter().zip(&self.t_busy).zip(&self.p_busy) {
            sq += q * t * t;
            wait += q * (1.0 - p) * t;
        }
        (sq + 2.0 * self.mean_c() * wait) / self.p_bar_prime()
    }

    /// Smallest `z > 0` where `phi_C(-z)` has a pole, `+inf` if none.
    pub fn contention_pole(&self) -> f64 {
        let (_, wait0) = self.busy_terms(0.0);
        if wait0 <= 0.0 {
            return f64::INFINITY;
        }
        let f = |z: f64| self.busy_terms(-z).1 - 1.0;
        let mut hi = 1.0 / self.t_busy.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
        while f(hi) < 0.0 {
            hi *= 2.0;
        }
        crate::numeric::bisect(f, 0.0, hi, 0.0).unwrap_or(hi)
    }

    pub fn phi_r(&self, s: f64) -> f64 {
        let l = self.lambda;
        let num = self.sum_idle(|t| (-s * t).exp() * -(-l * t).exp_m1());
        num / self.one_minus_phi_x(s + l)
    }

    pub fn mean_r(&self) -> f64 {
        self.mean_x() / self.one_minus_phi_x(self.lambda)
    }

    pub fn second_r(&self) -> f64 {
        let a = self.one_minus_phi_x(self.lambda);
        self.second_x() / a - 2.0 * self.mean_x() * self.dphi_x(self.lambda) / (a * a)
    }

    pub fn phi_v(&self, s: f64) -> f64 {
        let l = self.lambda;
        l * self.one_minus_phi_x(s + l) / ((s + l) * self.one_minus_phi_x(l))
    }

    /// `E[V] = 1/lambda + phi_X'(lambda) / (1 - phi_X(lambda))`, summed per atom.
    pub fn mean_v(&self) -> f64 {
        let l = self.lambda;
        self.sum_idle(|t| t * v_atom(l * t)) / self.one_minus_phi_x(l)
    }

    /// Mean length of a slot conditioned on at least one arrival in it.
    pub fn mean_x_hat(&self) -> f64 {
        let l = self.lambda;
        self.sum_idle(|t| t * -(-l * t).exp_m1()) / self.one_minus_phi_x(l)
    }

    /// Time from the first arrival in the activating slot to its end.
    /// By time reversibility of Poisson arrivals, `V' = X^ - V` in law.
    pub fn mean_v_first(&self) -> f64 {
        self.mean_x_hat() - self.mean_v()
    }

    pub fn phi_y(&self, s: f64) -> f64 {
        self.phi_c(s) * self.phi_r(s)
    }

    pub fn phi_d(&self, s: f64) -> f64 {
        self.phi_c(s) * self.phi_v(s)
    }

    /// Upper limit of `z` for which `phi_Y(-z)` is finite.
    pub fn y_pole(&self) -> f64 {
        self.lambda.min(self.contention_pole())
    }
}

/// First two moments of the tagged-node time variables.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LtMoments {
    pub mean_x: f64,
    pub second_x: f64,
    pub mean_c: f64,
    pub second_c: f64,
    pub mean_r: f64,
    pub second_r: f64,
    pub mean_v: f64,
    pub mean_v_first: f64,
    pub mean_y: f64,
    pub second_y: f64,
    pub mean_d: f64,
}

impl LtMoments {
    pub fn from_transforms(tr: &SlotTransforms) -> Self {
        let (mean_c, second_c) = (tr.mean_c(), tr.second_c());
        let (mean_r, second_r) = (tr.mean_r(), tr.second_r());
        let mean_v = tr.mean_v();
        Self {
            mean_x: tr.mean_x(),
            second_x: tr.second_x(),
            mean_c,
            second_c,
            mean_r,
            second_r,
            mean_v,
            mean_v_first: tr.mean_v_first(),
            mean_y: mean_c + mean_r,
            second_y: second_c + 2.0 * mean_c * mean_r + second_r,
            mean_d: mean_c + mean_v,
        }
    }
}

/// Contention time: `(phi_C, E[C], E[C^2])`.
pub fn contention_moments(
    backlog: &BacklogModel,
    policy: &AccessPolicy,
) -> crate::Result<(impl Fn(f64) -> f64, f64, f64)> {
    if backlog.p_bar_prime <= 0.0 {
        return Err(crate::Error::ModelInconsistency(
            "p' = 0: a backlogged node never transmits".into(),
        ));
    }
    // lambda does not enter C
    let tr = SlotTransforms::new(backlog, policy, 1.0);
    let (m, s) = (tr.mean_c(), tr.second_c());
    Ok((move |x| tr.phi_c(x), m, s))
}

/// Idle time: `(phi_R, E[R], E[R^2])`.
pub fn idle_moments(backlog: &BacklogModel, policy: &AccessPolicy, lambda: f64) -> (impl Fn(f64) -> f64, f64, f64) {
    let tr = SlotTransforms::new(backlog, policy, lambda);
    let (m, s) = (tr.mean_r(), tr.second_r());
    (move |x| tr.phi_r(x), m, s)
}

/// Access delay: `(phi_D, E[D])`.
pub fn access_delay(backlog: &BacklogModel, policy: &AccessPolicy, lambda: f64) -> (impl Fn(f64) -> f64, f64) {
    let tr = SlotTransforms::new(backlog, policy, lambda);
    let m = tr.mean_c() + tr.mean_v();
    (move |x| tr.phi_d(x), m)
}

/// Slot transform for one solved backlog state.
pub fn phi_slot(s: f64, backlog: &BacklogModel, policy: &AccessPolicy, tagged_backlogged: bool) -> f64 {
    SlotTransforms::new(backlog, policy, 1.0).phi_slot(s, tagged_backlogged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(t: f64, p: f64, lambda: f64) -> SlotTransforms {
        SlotTransforms {
            lambda,
            q: vec![1.0],
            t_idle: vec![t],
            t_busy: vec![t],
            p_busy: vec![p],
        }
    }

    #[test]
    fn v_atom_series_matches_direct() {
        for x in [1e-3f64, 5e-3, 9.9e-3] {
            let direct = -(-x).exp_m1() / x - (-x).exp();
            assert!(((v_atom(x) - direct) / direct).abs() < 1e-9, "{x}");
        }
        assert!((v_atom(2e-2) - (-(-0.02f64).exp_m1() / 0.02 - (-0.02f64).exp())).abs() < 1e-16);
    }

    #[test]
    fn first_arrival_residual_closed_form() {
        // E[V'] = E[X] / (1 - phi_X(lambda)) - 1/lambda for any idle-slot law.
        let tr = SlotTransforms {
            lambda: 7.0,
            q: vec![0.2, 0.5, 0.3],
            t_idle: vec![1e-3, 4e-3, 0.2],
            t_busy: vec![1e-3, 4e-3, 0.2],
            p_busy: vec![0.0, 0.5, 1.0],
        };
        let mean_x: f64 = tr.q.iter().zip(&tr.t_idle).map(|(q, t)| q * t).sum();
        let phi: f64 = tr.q.iter().zip(&tr.t_idle).map(|(q, t)| q * (-7.0 * t).exp()).sum();
        let want = mean_x / (1.0 - phi) - 1.0 / 7.0;
        assert!(
            (tr.mean_v_first() - want).abs() < 1e-12 * want,
            "{} vs {want}",
            tr.mean_v_first()
        );
    }

    #[test]
    fn single_atom_contention() {
        let (t, p) = (2e-3, 0.3);
        let tr = atom(t, p, 5.0);
        assert!((tr.mean_c() - t / p).abs() < 1e-15);
        assert!((tr.second_c() - t * t * (2.0 - p) / (p * p)).abs() < 1e-15);
        assert!((tr.phi_c(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn transmit_immediately_reduces_to_slot() {
        let tr = SlotTransforms {
            lambda: 3.0,
            q: vec![0.2, 0.5, 0.3],
            t_idle: vec![1e-3, 2e-3, 3e-3],
            t_busy: vec![2e-3, 3e-3, 4e-3],
            p_busy: vec![1.0; 3],
        };
        for s in [0.0, 10.0, 300.0] {
            assert!((tr.phi_c(s) - tr.phi_x_busy(s)).abs() < 1e-15);
        }
        assert!((tr.mean_c() - tr.t_bar_prime()).abs() < 1e-18);
        assert_eq!(tr.contention_pole(), f64::INFINITY);
    }

    #[test]
    fn single_atom_idle_matches_geometric_oracle() {
        let (t, lambda) = (1.8e-3, 20.0);
        let tr = atom(t, 1.0, lambda);
        // N ~ Geometric(1 - e^{-lambda T}) slots of length T
        let mean_n = 1.0 / (1.0 - (-lambda * t).exp());
        assert!((tr.mean_r() - mean_n * t).abs() < 1e-15);
        assert!((tr.phi_r(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn heavy_arrivals_make_idle_one_slot() {
        let tr = atom(1e-3, 1.0, 1e7);
        assert!((tr.mean_r() - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn last_arrival_near_slot_end_for_long_slots() {
        let (t, lambda) = (5.0, 100.0);
        let tr = atom(t, 1.0, lambda);
        let closed = 1.0 / lambda - t * (-lambda * t).exp() / (1.0 - (-lambda * t).exp());
        assert!((tr.mean_v() - closed).abs() < 1e-15);
        assert!((tr.mean_v() - 1.0 / lambda).abs() < 1e-12);
        assert!((tr.phi_v(0.0) - 1.0).abs() < 1e-15);
    }
}
