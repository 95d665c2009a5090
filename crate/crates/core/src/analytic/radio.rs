//! Deterministic path gain, coverage radius and mean transmit power under
//! power control.

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::numeric::adaptive_simpson;

pub trait PathGain {
    /// Linear power gain at distance `r` (m).
    fn gain(&self, r: f64) -> f64;
}

/// Far-field two-ray ground reflection: `G(r) = g (h_tx h_rx)^2 / r^4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoRayGround {
    pub h_tx: f64,
    pub h_rx: f64,
    /// Product of antenna gains; the calibration knob.
    pub antenna_gain: f64,
}

impl TwoRayGround {
    pub fn from_config(config: &SystemConfig) -> Self {
        Self {
            h_tx: config.h_tx,
            h_rx: config.h_rx,
            antenna_gain: config.antenna_gain,
        }
    }
}

impl PathGain for TwoRayGround {
    fn gain(&self, r: f64) -> f64 {
        let hh = self.h_tx * self.h_rx;
        self.antenna_gain * hh * hh / (r * r * r * r)
    }
}

/// Distance-independent gain, for reductions in tests.
#[derive(Debug, Clone, Copy)]
pub struct ConstantGain(pub f64);

impl PathGain for ConstantGain {
    fn gain(&self, _r: f64) -> f64 {
        self.0
    }
}

/// Largest `R` such that a node at `R` reaches `gamma_max / c` at full power:
/// `G(R) P_tx_max / P_N >= gamma_max / c`. Bisection to 0.1 m.
pub fn coverage_radius<G: PathGain>(config: &SystemConfig, path: &G) -> Result<f64> {
    let need = config.gamma_max / config.c();
    let margin = |r: f64| path.gain(r) * config.p_tx_max / config.noise_w - need;
    if margin(1.0) < 0.0 {
        return Err(Error::ModelInconsistency(
            "coverage requirement not met even at 1 m".into(),
        ));
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    while margin(hi) >= 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::ModelInconsistency("coverage radius unbounded".into()));
        }
    }
    while hi - lo > 0.05 {
        let mid = 0.5 * (lo + hi);
        if margin(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `∫_{r_min}^{R} (1/G(r)) (2r/R^2) dr`: mean inverse path gain for nodes
/// scattered uniformly over the disc, excluding the near field below `r_min`.
pub fn mean_inverse_gain<G: PathGain>(path: &G, radius: f64, r_min: f64) -> f64 {
    if radius <= r_min {
        return 0.0;
    }
    let f = |r: f64| 2.0 * r / (radius * radius * path.gain(r));
    adaptive_simpson(&f, r_min, radius, 1e-8)
}

/// Mean transmit power needed to land `gamma / c` at the receiver (W).
pub fn mean_tx_power(config: &SystemConfig, gamma: f64, inverse_gain: f64) -> f64 {
    config.noise_w * gamma / config.c() * inverse_gain
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_root_scaling() {
        let cfg = SystemConfig::default();
        let path = TwoRayGround::from_config(&cfg);
        let r0 = coverage_radius(&cfg, &path).unwrap();
        let r16 = coverage_radius(
            &SystemConfig {
                p_tx_max: 16.0 * cfg.p_tx_max,
                ..cfg.clone()
            },
            &path,
        )
        .unwrap();
        assert!((r16 / r0 - 2.0).abs() < 1e-3);
        let rg = coverage_radius(
            &SystemConfig {
                gamma_max: cfg.gamma_max / 2.0,
                ..cfg.clone()
            },
            &path,
        )
        .unwrap();
        assert!((rg / r0 - 2f64.powf(0.25)).abs() < 1e-3);
    }

    #[test]
    fn closed_form_radius() {
        let cfg = SystemConfig::default();
        let r = coverage_radius(&cfg, &TwoRayGround::from_config(&cfg)).unwrap();
        let exact = (16.0 * cfg.p_tx_max * cfg.c() / (cfg.noise_w * cfg.gamma_max)).powf(0.25);
        assert!((r - exact).abs() <= 0.1, "{r} vs {exact}");
    }

    #[test]
    fn unsatisfiable_at_one_metre() {
        let cfg = SystemConfig {
            p_tx_max: 1e-20,
            ..SystemConfig::default()
        };
        assert!(coverage_radius(&cfg, &TwoRayGround::from_config(&cfg)).is_err());
    }

    #[test]
    fn inverse_gain_closed_form() {
        let path = TwoRayGround {
            h_tx: 1.0,
            h_rx: 4.0,
            antenna_gain: 1.0,
        };
        let (r, rmin) = (722.0, 1.0);
        let v = mean_inverse_gain(&path, r, rmin);
        let exact = (r.powi(6) - rmin.powi(6)) / (3.0 * 16.0 * r * r);
        assert!(((v - exact) / exact).abs() < 1e-8);
        let c = mean_inverse_gain(&ConstantGain(2.0), 10.0, 0.0);
        assert!((c - 0.5).abs() < 1e-12);
    }
}
