//! Scenario parameters and the flat `key = value` config format.
//!
//! Units per key:
//!
//! | key          | unit  | default            |
//! |--------------|-------|--------------------|
//! | `n`          | nodes | 50                 |
//! | `S`          | s     | 0.1 (mean generation time, `1/lambda`) |
//! | `lambda`     | 1/s   | alternative to `S` |
//! | `L`          | bit   | 4000               |
//! | `W`          | Hz    | 1e6                |
//! | `T_oh`       | s     | 1e-3               |
//! | `gamma_max`  | linear| 31                 |
//! | `epsilon`    | prob. | 0.1                |
//! | `P_N`        | W     | -107 dBm           |
//! | `P_N_dBm`    | dBm   | alternative to `P_N` |
//! | `P_a`        | W     | 1e-3               |
//! | `P_d`        | W     | 1e-5               |
//! | `P_tx_max`   | W     | 0.1                |
//! | `E_g`        | J     | 1e-5               |
//! | `h_tx`,`h_rx`| m     | 1, 4               |
//! | `antenna_gain` | linear | 1 (path-gain calibration factor) |
//! | `r_min`      | m     | 1                  |
//! | `seed`       | -     | 1                  |
//! | `mc_trials`  | -     | 100000             |

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Converts a power level in dBm to watts.
pub fn dbm_to_watt(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n: usize,
    /// Per-node Poisson message generation rate (1/s).
    pub lambda: f64,
    pub packet_bits: f64,
    pub bandwidth_hz: f64,
    pub t_oh: f64,
    pub gamma_max: f64,
    pub epsilon: f64,
    pub noise_w: f64,
    pub p_active: f64,
    pub p_doze: f64,
    pub p_tx_max: f64,
    pub e_gen: f64,
    pub h_tx: f64,
    pub h_rx: f64,
    pub antenna_gain: f64,
    pub r_min: f64,
    pub seed: u64,
    pub mc_trials: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n: 50,
            lambda: 10.0,
            packet_bits: 4000.0,
            bandwidth_hz: 1e6,
            t_oh: 1e-3,
            gamma_max: 31.0,
            epsilon: 0.1,
            noise_w: dbm_to_watt(-107.0),
            p_active: 1e-3,
            p_doze: 1e-5,
            p_tx_max: 0.1,
            e_gen: 1e-5,
            h_tx: 1.0,
            h_rx: 4.0,
            antenna_gain: 1.0,
            r_min: 1.0,
            seed: 1,
            mc_trials: 100_000,
        }
    }
}

const KEYS: &[&str] = &[
    "n",
    "S",
    "lambda",
    "L",
    "W",
    "T_oh",
    "gamma_max",
    "epsilon",
    "P_N",
    "P_N_dBm",
    "P_a",
    "P_d",
    "P_tx_max",
    "E_g",
    "h_tx",
    "h_rx",
    "antenna_gain",
    "r_min",
    "seed",
    "mc_trials",
];

impl SystemConfig {
    /// Power-control constant `c = -ln(1 - epsilon)`.
    pub fn c(&self) -> f64 {
        -(-self.epsilon).ln_1p()
    }

    /// Mean message generation time `S = 1/lambda` (s).
    pub fn mean_generation_time(&self) -> f64 {
        1.0 / self.lambda
    }

    pub fn with_generation_time(&self, s: f64) -> Self {
        Self {
            lambda: 1.0 / s,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if self.n < 1 {
            return bad("n must be >= 1".into());
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("L", self.packet_bits),
            ("W", self.bandwidth_hz),
            ("T_oh", self.t_oh),
            ("gamma_max", self.gamma_max),
            ("h_tx", self.h_tx),
            ("h_rx", self.h_rx),
            ("antenna_gain", self.antenna_gain),
            ("r_min", self.r_min),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        for (name, v) in [
            ("P_N", self.noise_w),
            ("P_a", self.p_active),
            ("P_d", self.p_doze),
            ("P_tx_max", self.p_tx_max),
            ("E_g", self.e_gen),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if self.noise_w <= 0.0 {
            return bad("P_N must be positive".into());
        }
        if self.p_doze > self.p_active {
            return bad("P_d must not exceed P_a".into());
        }
        if self.mc_trials < 1 {
            return bad("mc_trials must be >= 1".into());
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses the flat config format. Unknown keys and duplicates are rejected;
    /// absent keys take their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen: Vec<&str> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::ConfigParse { line: line_no, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| perr(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let value = value.trim();
            let key = KEYS
                .iter()
                .find(|k| **k == key)
                .copied()
                .ok_or_else(|| perr(format!("unknown key `{key}`")))?;
            if seen.contains(&key) {
                return Err(perr(format!("duplicate key `{key}`")));
            }
            seen.push(key);
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|_| perr(format!("`{key}`: cannot parse `{value}` as a number")))
            };
            let int = || {
                value
                    .parse::<u64>()
                    .map_err(|_| perr(format!("`{key}`: cannot parse `{value}` as an integer")))
            };
            match key {
                "n" => cfg.n = int()? as usize,
                "S" => cfg.lambda = 1.0 / num()?,
                "lambda" => cfg.lambda = num()?,
                "L" => cfg.packet_bits = num()?,
                "W" => cfg.bandwidth_hz = num()?,
                "T_oh" => cfg.t_oh = num()?,
                "gamma_max" => cfg.gamma_max = num()?,
                "epsilon" => cfg.epsilon = num()?,
                "P_N" => cfg.noise_w = num()?,
                "P_N_dBm" => cfg.noise_w = dbm_to_watt(num()?),
                "P_a" => cfg.p_active = num()?,
                "P_d" => cfg.p_doze = num()?,
                "P_tx_max" => cfg.p_tx_max = num()?,
                "E_g" => cfg.e_gen = num()?,
                "h_tx" => cfg.h_tx = num()?,
                "h_rx" => cfg.h_rx = num()?,
                "antenna_gain" => cfg.antenna_gain = num()?,
                "r_min" => cfg.r_min = num()?,
                "seed" => cfg.seed = int()?,
                "mc_trials" => cfg.mc_trials = int()? as usize,
                _ => unreachable!(),
            }
        }
        if seen.contains(&"S") && seen.contains(&"lambda") {
            return Err(Error::ConfigInvalid("give either `S` or `lambda`, not both".into()));
        }
        if seen.contains(&"P_N") && seen.contains(&"P_N_dBm") {
            return Err(Error::ConfigInvalid("give either `P_N` or `P_N_dBm`, not both".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resolved config in the same format `parse` reads. Floats use the
    /// shortest round-trip representation, so `parse(dump(c)) == c`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# resolved configuration");
        let _ = writeln!(s, "# derived: c = -ln(1 - epsilon) = {:?}", self.c());
        let _ = writeln!(s, "# derived: S = 1/lambda = {:?} s", self.mean_generation_time());
        let _ = writeln!(s, "n = {}  # nodes", self.n);
        let _ = writeln!(s, "lambda = {:?}  # 1/s", self.lambda);
        let _ = writeln!(s, "L = {:?}  # bit", self.packet_bits);
        let _ = writeln!(s, "W = {:?}  # Hz", self.bandwidth_hz);
        let _ = writeln!(s, "T_oh = {:?}  # s", self.t_oh);
        let _ = writeln!(s, "gamma_max = {:?}", self.gamma_max);
        let _ = writeln!(s, "epsilon = {:?}", self.epsilon);
        let _ = writeln!(s, "P_N = {:?}  # W", self.noise_w);
        let _ = writeln!(s, "P_a = {:?}  # W", self.p_active);
        let _ = writeln!(s, "P_d = {:?}  # W", self.p_doze);
        let _ = writeln!(s, "P_tx_max = {:?}  # W", self.p_tx_max);
        let _ = writeln!(s, "E_g = {:?}  # J", self.e_gen);
        let _ = writeln!(s, "h_tx = {:?}  # m", self.h_tx);
        let _ = writeln!(s, "h_rx = {:?}  # m", self.h_rx);
        let _ = writeln!(s, "antenna_gain = {:?}", self.antenna_gain);
        let _ = writeln!(s, "r_min = {:?}  # m", self.r_min);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "mc_trials = {}", self.mc_trials);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_reference_defaults() {
        let cfg = SystemConfig::parse("").unwrap();
        assert_eq!(cfg, SystemConfig::default());
        assert_eq!(cfg.n, 50);
        assert_eq!(cfg.packet_bits, 4000.0);
        assert!((cfg.noise_w - 1.995_262_314_968_883e-14).abs() < 1e-26);
    }

    #[test]
    fn c_constant() {
        let cfg = SystemConfig::default();
        assert!((cfg.c() - 0.105_360_515_657_826_3).abs() < 1e-15);
        assert!(cfg.dump().contains("c = -ln(1 - epsilon) = 0.10536051565782"));
    }

    #[test]
    fn rejects_zero_nodes() {
        assert!(matches!(SystemConfig::parse("n = 0"), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn rejects_unknown_key_with_line() {
        let err = SystemConfig::parse("n = 10\n\nfoo = 3\n").unwrap_err();
        match err {
            Error::ConfigParse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn rejects_negative_bandwidth_and_bad_number() {
        assert!(SystemConfig::parse("W = -1").is_err());
        assert!(matches!(
            SystemConfig::parse("W = abc"),
            Err(Error::ConfigParse { line: 1, .. })
        ));
        assert!(SystemConfig::parse("P_d = 1\nP_a = 0.5").is_err());
    }

    #[test]
    fn s_and_dbm_keys() {
        let cfg = SystemConfig::parse("S = 0.053 # seconds\nP_N_dBm = -107").unwrap();
        assert!((cfg.mean_generation_time() - 0.053).abs() < 1e-15);
        assert!(SystemConfig::parse("S = 1\nlambda = 1").is_err());
    }

    #[test]
    fn dump_round_trips() {
        let cfg = SystemConfig {
            lambda: 1.0 / 0.037,
            noise_w: dbm_to_watt(-99.3),
            seed: 987_654_321,
            ..SystemConfig::default()
        };
        assert_eq!(SystemConfig::parse(&cfg.dump()).unwrap(), cfg);
    }
}
