//! On-disk policy artifacts: a versioned JSON bundle (profile, argmax table,
//! fitted constants) keyed by a content hash, and a plain-text override table.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::policy::{fit_policy_constants, optimize_all, AccessPolicy, FittedConstants, OptimumRow, PolicyForm};
use crate::profile::{build_profile, GridSpec, SicProfile};

pub const POLICY_SCHEMA: &str = "sicaoi-policy/1";

/// Hash of everything that determines the profile and the optimized policy:
/// `n`, `gamma_max`, `epsilon`, the grids, the trial count and the seed.
/// Slot lengths are recomputed from the live config, so `L`, `W`, `T_oh` are
/// deliberately excluded.
pub fn policy_cache_key(config: &SystemConfig, grid: &GridSpec) -> String {
    let canonical = format!(
        "{POLICY_SCHEMA};n={};gamma_max={:?};epsilon={:?};gamma_min={:?};gamma_points={};p_points={};mc_trials={};seed={}",
        config.n,
        config.gamma_max,
        config.epsilon,
        grid.gamma_min,
        grid.gamma_points,
        grid.p_points,
        config.mc_trials,
        config.seed
    );
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Policy plus the profile it was optimized against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyBundle {
    pub schema: String,
    pub key: String,
    pub grid: GridSpec,
    pub constants: FittedConstants,
    pub raw: Vec<OptimumRow>,
    pub profile: SicProfile,
}

impl PolicyBundle {
    /// Estimates the profile, optimizes every `k` and fits the closed form.
    pub fn build(config: &SystemConfig, grid: &GridSpec) -> Result<Self> {
        config.validate()?;
        let profile = build_profile(config, grid);
        let raw = optimize_all(&profile, config.gamma_max, grid)?;
        let constants = fit_policy_constants(&raw, &profile, config.gamma_max, grid)?;
        Ok(Self {
            schema: POLICY_SCHEMA.into(),
            key: policy_cache_key(config, grid),
            grid: grid.clone(),
            constants,
            raw,
            profile,
        })
    }

    pub fn policy(&self, form: PolicyForm, config: &SystemConfig) -> Result<AccessPolicy> {
        self.check(config)?;
        match form {
            PolicyForm::Raw => AccessPolicy::raw(&self.raw, self.constants, config),
            PolicyForm::Fitted => AccessPolicy::fitted(self.constants, config),
            PolicyForm::Override => Err(Error::InvalidArgument(
                "override policies come from a table file".into(),
            )),
        }
    }

    /// Errors unless the bundle was built for this config and its own grid.
    pub fn check(&self, config: &SystemConfig) -> Result<()> {
        if self.schema != POLICY_SCHEMA {
            return Err(Error::Artifact(format!("unsupported schema {:?}", self.schema)));
        }
        let expect = policy_cache_key(config, &self.grid);
        if self.key != expect {
            return Err(Error::Artifact(format!(
                "policy/config hash mismatch: artifact {}, config {}",
                &self.key[..12.min(self.key.len())],
                &expect[..12]
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Artifact(e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Artifact(format!("{}: {e}", path.display())))
    }

    pub fn cache_path(dir: &Path, config: &SystemConfig, grid: &GridSpec) -> PathBuf {
        dir.join(format!("policy-{}.json", &policy_cache_key(config, grid)[..16]))
    }

    /// Loads the cached bundle for `(config, grid)` or builds and stores it.
    pub fn load_or_build(dir: &Path, config: &SystemConfig, grid: &GridSpec) -> Result<Self> {
        let path = Self::cache_path(dir, config, grid);
        if path.exists() {
            let bundle = Self::load(&path)?;
            bundle.check(config)?;
            return Ok(bundle);
        }
        let bundle = Self::build(config, grid)?;
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        bundle.save(&path)?;
        Ok(bundle)
    }
}

/// Renders a policy as a `k p_k gamma_k T_k` table with the constants in a
/// comment header. [`parse_policy_table`] reads it back.
pub fn format_policy_table(policy: &AccessPolicy) -> String {
    let c = &policy.constants;
    let mut out = format!(
        "# {POLICY_SCHEMA} form={:?}\n# k_c = {}\n# a_gamma = {:?}\n# b_gamma = {:?}\n# a_d = {:?}\n# k p_k gamma_k T_k[s]\n",
        policy.form, c.k_c, c.a_gamma, c.b_gamma, c.a_d
    );
    for k in 1..=policy.n() {
        out.push_str(&format!(
            "{k} {:?} {:?} {:?}\n",
            policy.p[k], policy.gamma[k], policy.t[k]
        ));
    }
    out
}

/// Reads a `k p_k gamma_k [T_k]` table covering `k = 1..=n` exactly once.
/// Slot lengths are recomputed from `config`; a listed `T_k` must agree.
pub fn parse_policy_table(text: &str, config: &SystemConfig) -> Result<AccessPolicy> {
    let n = config.n;
    let mut p = vec![f64::NAN; n + 1];
    let mut gamma = vec![f64::NAN; n + 1];
    let mut listed_t = vec![None; n + 1];
    let bad = |line: usize, msg: String| Error::ConfigParse { line, msg };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(bad(
                line,
                format!("expected `k p gamma [T]`, got {} fields", fields.len()),
            ));
        }
        let k: usize = fields[0]
            .parse()
            .map_err(|_| bad(line, format!("bad k {:?}", fields[0])))?;
        if k == 0 || k > n {
            return Err(bad(line, format!("k = {k} outside 1..={n}")));
        }
        if !p[k].is_nan() {
            return Err(bad(line, format!("k = {k} listed twice")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(line, format!("bad number {s:?}")));
        p[k] = num(fields[1])?;
        gamma[k] = num(fields[2])?;
        if let Some(t) = fields.get(3) {
            listed_t[k] = Some((num(t)?, line));
        }
    }
    if let Some(k) = (1..=n).find(|&k| p[k].is_nan()) {
        return Err(Error::ConfigInvalid(format!("policy table misses k = {k}")));
    }
    p[0] = 0.0;
    gamma[0] = 0.0;
    let constants = FittedConstants {
        k_c: 0,
        a_gamma: f64::NAN,
        b_gamma: f64::NAN,
        a_d: f64::NAN,
    };
    let policy = AccessPolicy::from_tables(PolicyForm::Override, p, gamma, constants, config)?;
    for (k, entry) in listed_t.iter().enumerate() {
        if let Some((t, line)) = entry {
            if ((t - policy.t[k]) / policy.t[k]).abs() > 1e-9 {
                return Err(bad(
                    *line,
                    format!("T_{k} = {t} disagrees with config ({})", policy.t[k]),
                ));
            }
        }
    }
    Ok(policy)
}

pub fn load_policy_table(path: &Path, config: &SystemConfig) -> Result<AccessPolicy> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_policy_table(&text, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (SystemConfig, GridSpec) {
        let cfg = SystemConfig {
            n: 8,
            mc_trials: 2000,
            ..SystemConfig::default()
        };
        (
            cfg,
            GridSpec {
                gamma_points: 40,
                p_points: 40,
                ..GridSpec::default()
            },
        )
    }

    #[test]
    fn key_tracks_relevant_inputs_only() {
        let (cfg, grid) = small();
        let k = policy_cache_key(&cfg, &grid);
        assert_eq!(k.len(), 64);
        assert_eq!(
            k,
            policy_cache_key(
                &SystemConfig {
                    packet_bits: 1.0,
                    lambda: 3.0,
                    ..cfg.clone()
                },
                &grid
            )
        );
        assert_ne!(k, policy_cache_key(&SystemConfig { seed: 2, ..cfg.clone() }, &grid));
        assert_ne!(k, policy_cache_key(&cfg, &GridSpec { p_points: 41, ..grid }));
    }

    #[test]
    fn bundle_round_trip_and_mismatch() {
        let (cfg, grid) = small();
        let dir = tempfile::tempdir().unwrap();
        let a = PolicyBundle::load_or_build(dir.path(), &cfg, &grid).unwrap();
        let b = PolicyBundle::load_or_build(dir.path(), &cfg, &grid).unwrap();
        assert!(a == b, "cached bundle differs from the built one");
        let other = SystemConfig {
            epsilon: 0.2,
            ..cfg.clone()
        };
        assert!(matches!(a.check(&other), Err(Error::Artifact(_))));
        assert!(a.policy(PolicyForm::Raw, &cfg).is_ok());
    }

    #[test]
    fn table_round_trip() {
        let cfg = SystemConfig::default();
        let c = FittedConstants {
            k_c: 6,
            a_gamma: 0.39,
            b_gamma: 0.78,
            a_d: 0.89,
        };
        let pol = AccessPolicy::fitted(c, &cfg).unwrap();
        let back = parse_policy_table(&format_policy_table(&pol), &cfg).unwrap();
        assert_eq!(back.p, pol.p);
        assert_eq!(back.gamma, pol.gamma);
        assert_eq!(back.t, pol.t);
    }

    #[test]
    fn table_errors() {
        let cfg = SystemConfig {
            n: 2,
            ..SystemConfig::default()
        };
        assert!(parse_policy_table("1 1 31\n", &cfg).is_err());
        assert!(parse_policy_table("1 1 31\n1 1 31\n2 1 1\n", &cfg).is_err());
        assert!(parse_policy_table("1 1 31\n2 1.5 1\n", &cfg).is_err());
        assert!(matches!(
            parse_policy_table("1 1 31 0.5\n2 1 1\n", &cfg),
            Err(Error::ConfigParse { line: 1, .. })
        ));
        assert!(parse_policy_table("# frozen\n1 0.5 2\n2 0.5 2 # same\n", &cfg).is_ok());
    }
}
