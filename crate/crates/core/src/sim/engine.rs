//! Slot-by-slot simulation of one replication.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::sample_node_distances;
use crate::analytic::radio::{coverage_radius, PathGain, TwoRayGround};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::policy::AccessPolicy;
use crate::rng::{exp1, stream, Domain};
use crate::sic::decode_count_unchecked;

/// Length and warmup of each replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub horizon_slots: u64,
    /// Leading slots excluded from every tally except the conservation counters.
    pub warmup_slots: u64,
    pub replications: usize,
    pub confidence: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self::with_horizon(100_000, 10)
    }
}

impl SimOptions {
    /// Horizon with the customary 10% warmup.
    pub fn with_horizon(horizon_slots: u64, replications: usize) -> Self {
        Self {
            horizon_slots,
            warmup_slots: horizon_slots / 10,
            replications,
            confidence: 0.95,
        }
    }
}

/// Message accounting over the whole run, warmup included.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conservation {
    pub generated: u64,
    pub delivered: u64,
    /// Arrivals discarded by a busy node, or superseded by a later arrival
    /// in the same activating slot.
    pub dropped: u64,
    pub decode_failed: u64,
    /// Messages still held when the horizon ends.
    pub pending: u64,
}

impl Conservation {
    pub fn balanced(&self) -> bool {
        self.generated == self.delivered + self.dropped + self.decode_failed + self.pending
    }
}

/// Raw sums from the measured part of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTallies {
    pub n: usize,
    pub lambda: f64,
    pub packet_bits: f64,
    pub slots: u64,
    /// Simulated time covered by the measured slots (s).
    pub time: f64,
    pub busy_time: f64,
    pub generated: u64,
    pub transmitted: u64,
    pub delivered: u64,
    pub decode_failed: u64,
    /// Sum of access delays of transmitted messages (s).
    pub delay_sum: f64,
    /// Integral of the AoI sawtooth over all nodes (s^2), from each node's
    /// first delivery on.
    pub aoi_integral: f64,
    /// Node-seconds over which the AoI integral runs.
    pub aoi_time: f64,
    /// Energy spent by all nodes, generation included (J).
    pub energy: f64,
    /// `backlog_hist[k]`: measured slots starting with `k` backlogged nodes.
    pub backlog_hist: Vec<u64>,
    pub interdeparture_sum: f64,
    pub interdeparture_count: u64,
    pub contention_sum: f64,
    pub contention_count: u64,
    /// Lag-1 sums of the per-node transmit indicator: pairs, `sum x_t`,
    /// `sum x_{t+1}`, `sum x_t x_{t+1}`.
    pub lag_pairs: u64,
    pub lag_x: u64,
    pub lag_y: u64,
    pub lag_xy: u64,
    pub conservation: Conservation,
}

impl RawTallies {
    fn new(config: &SystemConfig) -> Self {
        Self {
            n: config.n,
            lambda: config.lambda,
            packet_bits: config.packet_bits,
            slots: 0,
            time: 0.0,
            busy_time: 0.0,
            generated: 0,
            transmitted: 0,
            delivered: 0,
            decode_failed: 0,
            delay_sum: 0.0,
            aoi_integral: 0.0,
            aoi_time: 0.0,
            energy: 0.0,
            backlog_hist: vec![0; config.n + 1],
            interdeparture_sum: 0.0,
            interdeparture_count: 0,
            contention_sum: 0.0,
            contention_count: 0,
            lag_pairs: 0,
            lag_x: 0,
            lag_y: 0,
            lag_xy: 0,
            conservation: Conservation::default(),
        }
    }
}

/// Per-node state, stored column-wise.
struct Nodes {
    backlogged: Vec<bool>,
    /// Last arrival in the activating slot: the message birth for delay and AoI.
    birth: Vec<f64>,
    /// End of the activating slot (start of contention).
    activated: Vec<f64>,
    next_arrival: Vec<f64>,
    /// Birth of the most recently delivered message; NaN before the first delivery.
    last_delivered: Vec<f64>,
    last_tx_end: Vec<f64>,
    transmitted_last_slot: Vec<bool>,
    /// `P_N / G_d(r)`: transmit power per unit of target received SNR.
    power_per_snr: Vec<f64>,
}

/// Simulates `options.horizon_slots` slots of the full system.
///
/// Replication `replication` draws from its own random stream of `seed`, so
/// results do not depend on how replications are scheduled.
pub fn run_replication(
    config: &SystemConfig,
    policy: &AccessPolicy,
    seed: u64,
    replication: u64,
    options: &SimOptions,
) -> Result<RawTallies> {
    config.validate()?;
    if policy.n() != config.n {
        return Err(Error::InvalidArgument(format!(
            "policy covers n = {}, config has n = {}",
            policy.n(),
            config.n
        )));
    }
    if options.warmup_slots >= options.horizon_slots {
        return Err(Error::InvalidArgument(format!(
            "horizon of {} slots does not exceed the warmup of {}",
            options.horizon_slots, options.warmup_slots
        )));
    }
    let path = TwoRayGround::from_config(config);
    let radius = coverage_radius(config, &path)?;
    let mut rng = stream(seed, Domain::Replication, replication);
    let n = config.n;
    let lambda = config.lambda;
    let c = config.c();
    let distances = sample_node_distances(n, radius, config.r_min, &mut rng);
    let mut nodes = Nodes {
        backlogged: vec![false; n],
        birth: vec![0.0; n],
        activated: vec![0.0; n],
        next_arrival: (0..n).map(|_| exp1(&mut rng) / lambda).collect(),
        last_delivered: vec![f64::NAN; n],
        last_tx_end: vec![f64::NAN; n],
        transmitted_last_slot: vec![false; n],
        power_per_snr: distances.iter().map(|&r| config.noise_w / path.gain(r)).collect(),
    };
    let mut tallies = RawTallies::new(config);
    let mut backlog = 0usize;
    let mut t = 0.0f64;
    // (fade, node) of this slot's transmitters; reused across slots
    let mut senders: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut snr: Vec<f64> = Vec::with_capacity(n);
    let mut transmits = vec![false; n];

    for slot in 0..options.horizon_slots {
        let measuring = slot >= options.warmup_slots;
        let k = backlog;
        let len = policy.t[k];
        let t_end = t + len;
        let (p, gamma) = (policy.p[k], policy.gamma[k]);

        senders.clear();
        for i in 0..n {
            transmits[i] = nodes.backlogged[i] && rng.gen::<f64>() < p;
            if transmits[i] {
                senders.push((exp1(&mut rng), i));
            }
        }
        senders.sort_by(|a, b| b.0.total_cmp(&a.0));
        snr.clear();
        snr.extend(senders.iter().map(|(g, _)| g * gamma / c));
        let decoded = if senders.is_empty() {
            0
        } else {
            decode_count_unchecked(&snr, gamma)
        };

        let mut slot_energy = 0.0;
        let mut generated = 0u64;
        for i in 0..n {
            // arrivals inside the slot
            let mut first = f64::NAN;
            let mut last = f64::NAN;
            let mut count = 0u64;
            while nodes.next_arrival[i] < t_end {
                if count == 0 {
                    first = nodes.next_arrival[i];
                }
                last = nodes.next_arrival[i];
                count += 1;
                nodes.next_arrival[i] += exp1(&mut rng) / lambda;
            }
            generated += count;
            if nodes.backlogged[i] {
                tallies.conservation.dropped += count;
                slot_energy += config.p_active * len;
            } else if count > 0 {
                tallies.conservation.dropped += count - 1;
                slot_energy += config.p_doze * (first - t) + config.p_active * (t_end - first);
            } else {
                slot_energy += config.p_doze * len;
            }
            if measuring {
                let g = nodes.last_delivered[i];
                if !g.is_nan() {
                    tallies.aoi_integral += len * (0.5 * (t + t_end) - g);
                    tallies.aoi_time += len;
                }
                if slot > options.warmup_slots {
                    let x = nodes.transmitted_last_slot[i] as u64;
                    let y = transmits[i] as u64;
                    tallies.lag_pairs += 1;
                    tallies.lag_x += x;
                    tallies.lag_y += y;
                    tallies.lag_xy += x * y;
                }
            }
            nodes.transmitted_last_slot[i] = transmits[i];
            if !nodes.backlogged[i] && count > 0 {
                nodes.backlogged[i] = true;
                nodes.birth[i] = last;
                nodes.activated[i] = t_end;
                backlog += 1;
            }
        }

        for (rank, &(_, i)) in senders.iter().enumerate() {
            slot_energy += nodes.power_per_snr[i] * gamma / c * len;
            let ok = rank < decoded;
            if ok {
                tallies.conservation.delivered += 1;
                nodes.last_delivered[i] = nodes.birth[i];
            } else {
                tallies.conservation.decode_failed += 1;
            }
            if measuring {
                tallies.transmitted += 1;
                if ok {
                    tallies.delivered += 1;
                } else {
                    tallies.decode_failed += 1;
                }
                tallies.delay_sum += t_end - nodes.birth[i];
                tallies.contention_sum += t_end - nodes.activated[i];
                tallies.contention_count += 1;
                if !nodes.last_tx_end[i].is_nan() {
                    tallies.interdeparture_sum += t_end - nodes.last_tx_end[i];
                    tallies.interdeparture_count += 1;
                }
            }
            nodes.last_tx_end[i] = t_end;
            nodes.backlogged[i] = false;
            backlog -= 1;
        }

        tallies.conservation.generated += generated;
        if measuring {
            tallies.slots += 1;
            tallies.time += len;
            if !senders.is_empty() {
                tallies.busy_time += len;
            }
            tallies.backlog_hist[k] += 1;
            tallies.generated += generated;
            tallies.energy += slot_energy + config.e_gen * generated as f64;
        }
        t = t_end;
    }
    tallies.conservation.pending = backlog as u64;
    Ok(tallies)
}
