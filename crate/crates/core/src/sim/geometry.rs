//! Node placement inside the coverage disc.

use rand::Rng;

/// Area-uniform radial distances `R sqrt(u)`, clipped below at `r_min`.
pub fn sample_node_distances<R: Rng + ?Sized>(n: usize, radius: f64, r_min: f64, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| radius_from_uniform(rng.gen::<f64>(), radius, r_min))
        .collect()
}

#[inline]
pub fn radius_from_uniform(u: f64, radius: f64, r_min: f64) -> f64 {
    (radius * u.sqrt()).max(r_min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    #[test]
    fn unit_draw_hits_the_edge() {
        assert_eq!(radius_from_uniform(1.0, 700.0, 1.0), 700.0);
        assert_eq!(radius_from_uniform(0.0, 700.0, 1.0), 1.0);
    }

    #[test]
    fn first_moment_is_two_thirds_radius() {
        let mut rng = stream(7, Domain::Oracle, 0);
        let n = 1_000_000;
        let r = sample_node_distances(n, 1.0, 0.0, &mut rng);
        let mean = r.iter().sum::<f64>() / n as f64;
        // Var(r) = 1/2 - 4/9 for the unit disc
        let sigma = ((0.5 - 4.0 / 9.0) / n as f64).sqrt();
        assert!((mean - 2.0 / 3.0).abs() < 3.0 * sigma, "{mean}");
    }

    #[test]
    fn squared_radius_is_uniform_ks() {
        let mut rng = stream(8, Domain::Oracle, 0);
        let n = 20_000;
        let mut u: Vec<f64> = sample_node_distances(n, 300.0, 0.0, &mut rng)
            .iter()
            .map(|r| (r / 300.0).powi(2))
            .collect();
        u.sort_by(f64::total_cmp);
        let d = u
            .iter()
            .enumerate()
            .map(|(i, x)| ((i + 1) as f64 / n as f64 - x).max(x - i as f64 / n as f64))
            .fold(0.0, f64::max);
        // 1% critical value of the one-sample KS statistic
        assert!(d < 1.628 / (n as f64).sqrt(), "D = {d}");
    }
}
