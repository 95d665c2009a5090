//! Small numerical helpers shared by the model and the optimizer.

use crate::error::{Error, Result};

/// `ln(k!)` for `k = 0..=n`.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Binomial(n, p) pmf over `0..=n`, evaluated in log space.
pub fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let lf = ln_factorials(n);
    binomial_pmf_with(n, p, &lf)
}

pub fn binomial_pmf_with(n: usize, p: f64, ln_fact: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if p <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    if p >= 1.0 {
        out[n] = 1.0;
        return out;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    for (k, o) in out.iter_mut().enumerate() {
        let ln_c = ln_fact[n] - ln_fact[k] - ln_fact[n - k];
        *o = (ln_c + k as f64 * lp + (n - k) as f64 * lq).exp();
    }
    // rounding in the log-factorial table grows with n; remove the common drift
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|o| *o /= total);
    out
}

/// Bisection for a root of `f` on `[lo, hi]`; `f(lo)` and `f(hi)` must differ in sign.
/// Stops when `|f(mid)| < ftol` or the bracket collapses to machine precision.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, ftol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::ModelInconsistency(format!(
            "no sign change on [{lo:e}, {hi:e}]: f = {flo:e}, {fhi:e}"
        )));
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() < ftol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Adaptive Simpson quadrature to relative tolerance `rtol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rtol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    // scale the absolute tolerance from a coarse estimate of the integral
    let tol = (rtol * whole.abs()).max(f64::MIN_POSITIVE);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 50)
}

/// Ordinary least-squares line `y = slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument("x and y lengths differ".into()));
    }
    if xs.len() < 3 {
        return Err(Error::TooFewPoints(xs.len()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Monotone piecewise cubic Hermite interpolation (Fritsch-Carlson slopes).
/// Returns node values exactly at the nodes.
pub fn pchip_eval(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    debug_assert!(n == ys.len() && n >= 1);
    if n == 1 {
        return ys[0];
    }
    // interval index i with xs[i] <= x <= xs[i+1]
    let i = match xs.partition_point(|v| *v <= x) {
        0 => 0,
        p if p >= n => n - 2,
        p => p - 1,
    };
    if x == xs[i] {
        return ys[i];
    }
    if x == xs[i + 1] {
        return ys[i + 1];
    }
    let secant = |j: usize| (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]);
    let node_slope = |j: usize| -> f64 {
        if j == 0 {
            return end_slope(
                xs[1] - xs[0],
                xs.get(2).map_or(0.0, |x2| x2 - xs[1]),
                secant(0),
                if n > 2 { secant(1) } else { secant(0) },
            );
        }
        if j == n - 1 {
            return end_slope(
                xs[n - 1] - xs[n - 2],
                if n > 2 { xs[n - 2] - xs[n - 3] } else { 0.0 },
                secant(n - 2),
                if n > 2 { secant(n - 3) } else { secant(n - 2) },
            );
        }
        let (d0, d1) = (secant(j - 1), secant(j));
        if d0 * d1 <= 0.0 {
            return 0.0;
        }
        let (h0, h1) = (xs[j] - xs[j - 1], xs[j + 1] - xs[j]);
        let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
        (w1 + w2) / (w1 / d0 + w2 / d1)
    };
    let h = xs[i + 1] - xs[i];
    let t = (x - xs[i]) / h;
    let (m0, m1) = (node_slope(i), node_slope(i + 1));
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * ys[i] + h10 * h * m0 + h01 * ys[i + 1] + h11 * h * m1
}

// Three-point end slope, clamped to keep monotonicity.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    if h1 == 0.0 {
        return d0;
    }
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// `count` log-spaced points from `lo` to `hi`, endpoints exact.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![hi],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let mut g: Vec<f64> = (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect();
            g[0] = lo;
            g[count - 1] = hi;
            g
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_binomial() {
        let p = binomial_pmf(2, 0.5);
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        assert_eq!(binomial_pmf(7, 0.0)[0], 1.0);
        assert_eq!(binomial_pmf(7, 1.0)[7], 1.0);
    }

    #[test]
    fn binomial_matches_convolution_oracle() {
        let (n, b) = (50, 0.3);
        let mut conv = vec![1.0];
        for _ in 0..n {
            let mut next = vec![0.0; conv.len() + 1];
            for (k, v) in conv.iter().enumerate() {
                next[k] += v * (1.0 - b);
                next[k + 1] += v * b;
            }
            conv = next;
        }
        let pmf = binomial_pmf(n, b);
        for (a, c) in pmf.iter().zip(&conv) {
            assert!((a - c).abs() < 1e-12, "{a} vs {c}");
        }
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_n_no_overflow() {
        let pmf = binomial_pmf(10_000, 0.37);
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bisect_finds_root_and_reports_missing_bracket() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn simpson_polynomial_and_exp() {
        let v = adaptive_simpson(&|r: f64| r.powi(5), 1.0, 700.0, 1e-10);
        let exact = (700f64.powi(6) - 1.0) / 6.0;
        assert!(((v - exact) / exact).abs() < 1e-10);
        let v = adaptive_simpson(&|x: f64| (-x).exp(), 0.0, 20.0, 1e-10);
        assert!((v - (1.0 - (-20f64).exp())).abs() < 1e-9);
    }

    #[test]
    fn fit_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.39 * x + 0.78).collect();
        let (a, b) = linear_fit(&xs, &ys).unwrap();
        assert!((a - 0.39).abs() < 1e-12 && (b - 0.78).abs() < 1e-12);
        assert!(matches!(linear_fit(&xs[..2], &ys[..2]), Err(Error::TooFewPoints(2))));
    }

    #[test]
    fn pchip_is_monotone_and_interpolates() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| if *x < 5.0 { 0.0 } else { 1.0 + x }).collect();
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(pchip_eval(&xs, &ys, *x), *y);
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=900 {
            let v = pchip_eval(&xs, &ys, i as f64 / 100.0);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
        // cubic data reproduced closely in the interior
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!((pchip_eval(&xs, &ys, 4.5) - 20.25).abs() < 0.1);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-3, 31.0, 200);
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[199], 31.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
