//! Monte Carlo estimation of `m_h(gamma)`, the mean number of packets an
//! ideal SIC receiver decodes when `h` power-controlled nodes transmit
//! together with decoding threshold `gamma`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::numeric::{log_grid, pchip_eval};
use crate::rng::{exp1, stream, Domain};
use crate::sic::{decode_count_unchecked, decode_thresholds};

/// Search grids for the policy optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub gamma_min: f64,
    pub gamma_points: usize,
    pub p_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            gamma_min: 1e-3,
            gamma_points: 200,
            p_points: 200,
        }
    }
}

impl GridSpec {
    pub fn gamma_grid(&self, gamma_max: f64) -> Vec<f64> {
        log_grid(self.gamma_min, gamma_max, self.gamma_points)
    }

    /// Uniform points over (0, 1].
    pub fn p_grid(&self) -> Vec<f64> {
        (1..=self.p_points).map(|i| i as f64 / self.p_points as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SicProfile {
    pub gamma_grid: Vec<f64>,
    /// `mh[h][g]`, `h = 0..=n`; row 0 is identically zero.
    pub mh: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub trials: usize,
}

impl SicProfile {
    pub fn max_h(&self) -> usize {
        self.mh.len() - 1
    }

    fn check_range(&self, gamma: f64) -> Result<()> {
        let lo = self.gamma_grid[0];
        let hi = *self.gamma_grid.last().unwrap();
        let slack = 1e-12 * hi;
        if !(gamma >= lo - slack && gamma <= hi + slack) {
            return Err(Error::OutOfRange { gamma, lo, hi });
        }
        Ok(())
    }

    /// `m_h(gamma)`, monotone cubic interpolation in `ln gamma` between grid nodes.
    pub fn mh_at(&self, h: usize, gamma: f64) -> Result<f64> {
        if h == 0 {
            return Ok(0.0);
        }
        if h > self.max_h() {
            return Err(Error::InvalidArgument(format!(
                "h = {h} exceeds profile size {}",
                self.max_h()
            )));
        }
        self.check_range(gamma)?;
        let xs: Vec<f64> = self.gamma_grid.iter().map(|g| g.ln()).collect();
        let gamma = gamma.clamp(self.gamma_grid[0], *self.gamma_grid.last().unwrap());
        Ok(pchip_eval(&xs, &self.mh[h], gamma.ln()).clamp(0.0, h as f64))
    }

    /// `m_h(gamma)` for every `h = 0..=n`.
    pub fn mh_column(&self, gamma: f64) -> Result<Vec<f64>> {
        self.check_range(gamma)?;
        if let Some(g) = self.gamma_grid.iter().position(|x| *x == gamma) {
            return Ok(self.mh.iter().map(|row| row[g]).collect());
        }
        (0..=self.max_h()).map(|h| self.mh_at(h, gamma)).collect()
    }
}

/// Direct Monte Carlo estimate of `m_h(gamma)`: draw `h` unit-mean
/// exponential fades, scale by `S_0 = gamma / c`, sort descending and run
/// the SIC receiver. Returns `(mean, standard error)`.
pub fn estimate_mh<R: Rng + ?Sized>(
    h: usize,
    gamma: f64,
    config: &SystemConfig,
    trials: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if h == 0 {
        return Ok((0.0, 0.0));
    }
    if h > config.n {
        return Err(Error::InvalidArgument(format!("h = {h} > n = {}", config.n)));
    }
    if !(gamma > 0.0) || trials < 1 {
        return Err(Error::InvalidArgument("need gamma > 0 and trials >= 1".into()));
    }
    let s0 = gamma / config.c();
    let mut powers = vec![0.0; h];
    let (mut sum, mut sumsq) = (0.0, 0.0);
    for _ in 0..trials {
        for p in powers.iter_mut() {
            *p = exp1(rng) * s0;
        }
        // ties carry identical values, so their order does not change the count
        powers.sort_unstable_by(|a, b| b.total_cmp(a));
        let k = decode_count_unchecked(&powers, gamma) as f64;
        sum += k;
        sumsq += k * k;
    }
    Ok(mean_and_stderr(sum, sumsq, trials))
}

fn mean_and_stderr(sum: f64, sumsq: f64, trials: usize) -> (f64, f64) {
    let n = trials as f64;
    let mean = sum / n;
    if trials < 2 {
        return (mean, 0.0);
    }
    let var = ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}

const CHUNK: usize = 2048;

/// Estimates `m_h` for all `h = 1..=n` over the whole gamma grid in one
/// pass. Each trial draws `n` fades; prefix `h` of the trial is an
/// i.i.d. sample for `m_h`. For each prefix the decoded count as a function
/// of gamma is a step function with at most `h` steps (see
/// [`decode_thresholds`]), so a trial costs `O(n^2)` regardless of grid
/// size. Counts are accumulated as integers, which makes the result
/// independent of the parallel schedule.
pub fn build_profile(config: &SystemConfig, grid: &GridSpec) -> SicProfile {
    build_profile_with(
        config.n,
        config.c(),
        &grid.gamma_grid(config.gamma_max),
        config.mc_trials,
        config.seed,
    )
}

pub fn build_profile_with(n: usize, c: f64, gamma_grid: &[f64], trials: usize, seed: u64) -> SicProfile {
    let g = gamma_grid.len();
    let chunks = trials.div_ceil(CHUNK);
    let zero = || (vec![0u64; (n + 1) * (g + 1)], vec![0u64; (n + 1) * (g + 1)]);
    let (hist, hist_sq) = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream(seed, Domain::Profile, chunk as u64);
            let (mut hist, mut hist_sq) = zero();
            let count = CHUNK.min(trials - chunk * CHUNK);
            let mut sorted: Vec<f64> = Vec::with_capacity(n);
            let (mut tails, mut th) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for _ in 0..count {
                sorted.clear();
                for h in 1..=n {
                    let f = exp1(&mut rng);
                    let pos = sorted.partition_point(|x| *x >= f);
                    sorted.insert(pos, f);
                    decode_thresholds(&sorted, c, &mut tails, &mut th);
                    let row = h * (g + 1);
                    for (l, t) in th.iter().enumerate() {
                        // grid cells 0..idx have gamma <= t
                        let idx = gamma_grid.partition_point(|x| *x <= *t);
                        if idx == 0 {
                            // thresholds are non-increasing; the rest are too
                            break;
                        }
                        hist[row + idx] += 1;
                        hist_sq[row + idx] += 2 * (l as u64 + 1) - 1;
                    }
                }
            }
            (hist, hist_sq)
        })
        .reduce(zero, |(mut a, mut asq), (b, bsq)| {
            a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            asq.iter_mut().zip(&bsq).for_each(|(x, y)| *x += y);
            (a, asq)
        });

    let mut mh = vec![vec![0.0; g]; n + 1];
    let mut stderr = vec![vec![0.0; g]; n + 1];
    for h in 1..=n {
        let row = h * (g + 1);
        // count at cell j = number of thresholds with index > j
        let (mut s, mut sq) = (0u64, 0u64);
        for j in (0..g).rev() {
            s += hist[row + j + 1];
            sq += hist_sq[row + j + 1];
            let (m, e) = mean_and_stderr(s as f64, sq as f64, trials);
            mh[h][j] = m;
            stderr[h][j] = e;
        }
    }
    SicProfile {
        gamma_grid: gamma_grid.to_vec(),
        mh,
        stderr,
        trials,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> SystemConfig {
        SystemConfig {
            n: 6,
            mc_trials: 40_000,
            ..SystemConfig::default()
        }
    }

    #[test]
    fn zero_transmitters_decode_nothing() {
        let mut rng = stream(1, Domain::Oracle, 0);
        assert_eq!(estimate_mh(0, 1.0, &small_cfg(), 10, &mut rng).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn single_transmitter_hits_power_control_target() {
        let cfg = small_cfg();
        let mut rng = stream(7, Domain::Oracle, 0);
        for gamma in [0.01, 1.0, 31.0] {
            let (m, se) = estimate_mh(1, gamma, &cfg, 200_000, &mut rng).unwrap();
            assert!((m - 0.9).abs() < 3.0 * se, "gamma {gamma}: {m} +- {se}");
        }
    }

    #[test]
    fn profile_bounds_and_agreement_with_direct_route() {
        let cfg = small_cfg();
        let grid = GridSpec {
            gamma_points: 30,
            ..GridSpec::default()
        };
        let prof = build_profile(&cfg, &grid);
        for h in 0..=cfg.n {
            for j in 0..prof.gamma_grid.len() {
                let m = prof.mh[h][j];
                assert!((0.0..=h as f64).contains(&m));
            }
        }
        assert!(prof.mh[0].iter().all(|v| *v == 0.0));
        let mut rng = stream(99, Domain::Oracle, 1);
        for (h, j) in [(2, 10), (4, 20), (6, 25)] {
            let gamma = prof.gamma_grid[j];
            let (m, se) = estimate_mh(h, gamma, &cfg, 40_000, &mut rng).unwrap();
            let tol = 4.0 * (se * se + prof.stderr[h][j].powi(2)).sqrt();
            assert!(
                (m - prof.mh[h][j]).abs() < tol,
                "h={h} gamma={gamma}: {m} vs {}",
                prof.mh[h][j]
            );
        }
    }

    #[test]
    fn profile_is_deterministic() {
        let cfg = SystemConfig {
            mc_trials: 5000,
            ..small_cfg()
        };
        let grid = GridSpec {
            gamma_points: 12,
            ..GridSpec::default()
        };
        assert_eq!(build_profile(&cfg, &grid), build_profile(&cfg, &grid));
    }

    #[test]
    fn interpolation_range_and_nodes() {
        let cfg = SystemConfig {
            mc_trials: 2000,
            ..small_cfg()
        };
        let prof = build_profile(
            &cfg,
            &GridSpec {
                gamma_points: 20,
                ..GridSpec::default()
            },
        );
        assert!(matches!(prof.mh_at(2, 100.0), Err(Error::OutOfRange { .. })));
        assert!(prof.mh_at(2, 1e-4).is_err());
        let g = prof.gamma_grid[7];
        assert_eq!(prof.mh_at(3, g).unwrap(), prof.mh[3][7]);
        assert_eq!(prof.mh_at(0, 5.0).unwrap(), 0.0);
    }
}
