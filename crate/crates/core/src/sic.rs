//! Ideal successive interference cancellation receiver.
//!
//! Packets are decoded strongest first. Packet `l` is decoded iff all
//! stronger packets were decoded and
//! `S_l / (1 + sum_{r > l} S_r) >= gamma`; decoding stops at the first failure.

use crate::error::{Error, Result};

/// Number of packets an ideal SIC receiver decodes from received SNRs
/// (normalized to noise) given in descending order.
pub fn sic_decode_count(sorted_powers: &[f64], gamma: f64) -> Result<usize> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    if sorted_powers.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Unsorted);
    }
    if sorted_powers.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::InvalidArgument("received powers must be non-negative".into()));
    }
    Ok(decode_count_unchecked(sorted_powers, gamma))
}

pub(crate) fn decode_count_unchecked(sorted_powers: &[f64], gamma: f64) -> usize {
    let h = sorted_powers.len();
    // tails[j] = sum of powers strictly weaker than j, accumulated from the
    // weak end so every partial sum is formed the same way.
    let mut tails = vec![0.0; h];
    let mut acc = 0.0;
    for j in (0..h).rev() {
        tails[j] = acc;
        acc += sorted_powers[j];
    }
    sorted_powers
        .iter()
        .zip(&tails)
        .take_while(|(s, tail)| **s >= gamma * (1.0 + **tail))
        .count()
}

/// Decoding thresholds for a set of fading gains under power control
/// (`S_j = g_j * gamma / c`).
///
/// With fades sorted descending, packet `l` passes its SIC test iff
/// `g_l >= c + gamma * sum_{r>l} g_r`, i.e. `gamma <= (g_l - c) / tail_l`.
/// `out[l]` receives the running minimum of those bounds, so the decoded
/// count at `gamma` is the number of entries with `gamma <= out[l]`.
/// The weakest packet has no interference and passes iff `g_h >= c`
/// (bound `+inf`, otherwise `-inf`).
pub fn decode_thresholds(sorted_fades: &[f64], c: f64, tails: &mut Vec<f64>, out: &mut Vec<f64>) {
    let h = sorted_fades.len();
    tails.clear();
    tails.resize(h, 0.0);
    let mut acc = 0.0;
    for j in (0..h).rev() {
        tails[j] = acc;
        acc += sorted_fades[j];
    }
    out.clear();
    let mut running = f64::INFINITY;
    for (g, tail) in sorted_fades.iter().zip(tails.iter()) {
        let bound = if *tail > 0.0 {
            (g - c) / tail
        } else if *g >= c {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        running = running.min(bound);
        out.push(running);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_and_single() {
        assert_eq!(sic_decode_count(&[], 3.0).unwrap(), 0);
        assert_eq!(sic_decode_count(&[2.0 * 5.0], 5.0).unwrap(), 1);
        assert_eq!(sic_decode_count(&[0.5 * 5.0], 5.0).unwrap(), 0);
    }

    #[test]
    fn hand_evaluated_chains() {
        assert_eq!(sic_decode_count(&[10.0, 4.0, 1.0], 1.0).unwrap(), 3);
        assert_eq!(sic_decode_count(&[10.0, 2.0, 1.0], 1.0).unwrap(), 3);
        assert_eq!(sic_decode_count(&[10.0, 1.5, 1.0], 1.0).unwrap(), 1);
    }

    #[test]
    fn stops_at_first_failure() {
        // second packet fails, third would pass on its own
        assert_eq!(sic_decode_count(&[100.0, 1.0, 0.9], 1.0).unwrap(), 1);
        // first fails: nothing decoded even though others are strong
        assert_eq!(sic_decode_count(&[3.0, 3.0, 3.0], 1.0).unwrap(), 0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(sic_decode_count(&[1.0, 2.0], 1.0), Err(Error::Unsorted)));
        assert!(sic_decode_count(&[1.0], 0.0).is_err());
        assert!(sic_decode_count(&[1.0], -1.0).is_err());
        assert!(sic_decode_count(&[2.0, 2.0], 0.5).is_ok());
    }

    fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    proptest! {
        #[test]
        fn count_bounded(v in prop::collection::vec(0.0f64..50.0, 0..12), g in 0.01f64..40.0) {
            let v = sorted_desc(v);
            let k = sic_decode_count(&v, g).unwrap();
            prop_assert!(k <= v.len());
        }

        #[test]
        fn weaker_interferer_never_helps(v in prop::collection::vec(0.01f64..50.0, 1..12),
                                         extra in 0.0f64..1.0, g in 0.01f64..40.0) {
            let v = sorted_desc(v);
            let weakest = *v.last().unwrap();
            let mut more = v.clone();
            more.push(weakest * extra);
            // the extra packet can only add itself after every original one decoded
            let base = sic_decode_count(&v, g).unwrap();
            let with = sic_decode_count(&more, g).unwrap();
            prop_assert!(with <= base || (base == v.len() && with == base + 1));
            let fewer = &v[..v.len() - 1];
            prop_assert!(sic_decode_count(fewer, g).unwrap() >= sic_decode_count(&v, g).unwrap()
                .min(fewer.len()));
        }

        #[test]
        fn thresholds_agree_with_direct_rule(v in prop::collection::vec(0.0f64..8.0, 1..15),
                                             g in 0.001f64..40.0) {
            let c = 0.1053605156578263;
            let fades = sorted_desc(v);
            let (mut tails, mut th) = (Vec::new(), Vec::new());
            decode_thresholds(&fades, c, &mut tails, &mut th);
            let via_thresholds = th.iter().filter(|t| g <= **t).count();
            let powers: Vec<f64> = fades.iter().map(|f| f * g / c).collect();
            let direct = sic_decode_count(&powers, g).unwrap();
            // equality on the boundary is a measure-zero event; allow it only
            // when some threshold sits within rounding of g
            let near = th.iter().any(|t| (t - g).abs() <= 1e-9 * g.max(1.0));
            prop_assert!(via_thresholds == direct || near);
        }
    }
}
