//! Production quadrature: Gauss–Legendre panels on geometrically graded
//! meshes and an adaptive Gauss–Kronrod (7, 15) integrator.
//!
//! The oracle module carries its own, unrelated integrator; nothing here is
//! used to produce reference values.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Builds the `n`-point rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a Gauss rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussRule { nodes, weights }
    }

    /// Integrates `f` over `[a, b]` with this rule.
    #[inline]
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Mapped nodes and weights on `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Shared 8-point rule used by panel quadratures.
pub fn gauss8() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(8))
}

/// Shared 16-point rule.
pub fn gauss16() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(16))
}

/// Panel breakpoints on `[a, b]` graded geometrically away from `p`.
///
/// Panel widths double with distance from `p`, so an integrand behaving like
/// a power of `|x - p|` varies by a bounded factor on every panel. `min_gap`
/// is the smallest distance used when `p` touches or lies inside the interval.
pub fn graded_breaks(a: f64, b: f64, p: f64, min_gap: f64) -> Vec<f64> {
    debug_assert!(b > a);
    let min_gap = min_gap.max((b - a) * 1e-12);
    if p > a && p < b {
        let mut left = graded_from(p, a, min_gap);
        left.reverse();
        let right = graded_from(p, b, min_gap);
        left.extend_from_slice(&right[1..]);
        return left;
    }
    if p <= a {
        let delta = (a - p).max(min_gap);
        one_sided(a, b, delta)
    } else {
        let delta = (p - b).max(min_gap);
        let mut v: Vec<f64> = one_sided(-b, -a, delta).into_iter().map(|x| -x).collect();
        v.reverse();
        v
    }
}

// breaks on [start, end] (either orientation) starting at a singular endpoint `start`
fn graded_from(start: f64, end: f64, min_gap: f64) -> Vec<f64> {
    let len = (end - start).abs();
    let dir = (end - start).signum();
    let mut out = vec![start];
    let mut d = min_gap.min(len);
    loop {
        if d >= len * (1.0 - 1e-12) {
            out.push(end);
            break;
        }
        out.push(start + dir * d);
        d *= 2.0;
    }
    out
}

fn one_sided(a: f64, b: f64, delta: f64) -> Vec<f64> {
    let len = b - a;
    let mut out = vec![a];
    let mut k = 1u32;
    loop {
        let off = delta * ((2f64).powi(k as i32) - 1.0);
        if off >= len * (1.0 - 1e-12) {
            out.push(b);
            break;
        }
        out.push(a + off);
        k += 1;
    }
    out
}

/// Inserts extra breakpoints (e.g. discontinuities of the integrand) that fall
/// strictly inside the range of `breaks`.
pub fn with_extra_breaks(mut breaks: Vec<f64>, extra: &[f64]) -> Vec<f64> {
    let (lo, hi) = (breaks[0], breaks[breaks.len() - 1]);
    for &e in extra {
        if e > lo && e < hi {
            breaks.push(e);
        }
    }
    breaks.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    breaks.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + x.abs()));
    breaks
}

/// Sums `rule` over the consecutive panels given by `breaks`.
pub fn integrate_panels<F: FnMut(f64) -> f64>(rule: &GaussRule, breaks: &[f64], mut f: F) -> f64 {
    breaks
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], &mut f))
        .sum()
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate {
    pub value: f64,
    pub error: f64,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod integration of `f` over the finite interval `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the total
/// estimate falls below `max(abs_tol, rel_tol * |value|)`.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<QuadEstimate> {
    adaptive_breaks(&mut f, &[a, b], abs_tol, rel_tol, max_intervals)
}

/// As [`adaptive`], starting from the given initial partition.
pub fn adaptive_breaks<F: FnMut(f64) -> f64>(
    f: &mut F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<QuadEstimate> {
    let mut intervals: Vec<(f64, f64, f64, f64)> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (v, e) = gk15(f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let value: f64 = intervals.iter().map(|i| i.2).sum();
        let error: f64 = intervals.iter().map(|i| i.3).sum();
        if !value.is_finite() {
            return Err(Error::Divergence(format!(
                "non-finite integrand on [{}, {}]",
                breaks[0],
                breaks[breaks.len() - 1]
            )));
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(QuadEstimate { value, error });
        }
        if intervals.len() >= max_intervals {
            return Err(Error::QuadratureBudget {
                estimate: value,
                error_estimate: error,
            });
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty partition");
        let (lo, hi, _, _) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval can no longer be split in floating point
            return Ok(QuadEstimate { value, error });
        }
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// Adaptive integration over `[a, inf)` using the map `x = a + scale * (1 - u) / u`.
pub fn adaptive_to_infinity<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    scale: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<QuadEstimate> {
    let mut g = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let x = a + scale * (1.0 - u) / u;
        f(x) * scale / (u * u)
    };
    let breaks = [0.0, 0.125, 0.25, 0.5, 1.0];
    adaptive_breaks(&mut g, &breaks, abs_tol, rel_tol, max_intervals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rules_integrate_polynomials_exactly() {
        for n in [1usize, 2, 5, 8, 16, 31] {
            let rule = GaussRule::new(n);
            let deg = 2 * n - 1;
            let got = rule.integrate(0.0, 2.0, |x| x.powi(deg as i32));
            let want = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
            assert!((got - want).abs() < 1e-12 * want, "n={n}: {got} vs {want}");
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn graded_breaks_cover_interval_monotonically() {
        let b = graded_breaks(1.0, 10.0, 0.99, 1e-3);
        assert_eq!(b[0], 1.0);
        assert_eq!(*b.last().unwrap(), 10.0);
        assert!(b.windows(2).all(|w| w[1] > w[0]));
        assert!((b[1] - 1.01).abs() < 1e-12);

        let b = graded_breaks(-10.0, -1.0, 0.0, 1e-3);
        assert_eq!(b[0], -10.0);
        assert!((b[b.len() - 2] - (-2.0)).abs() < 1e-12);

        let b = graded_breaks(-1.0, 1.0, 0.25, 0.01);
        assert!(b.contains(&0.25));
        assert!(b.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn graded_panels_resolve_near_singularity() {
        // integral of (x + 1e-4)^(-2) on [0, 5]
        let d = 1e-4;
        let breaks = graded_breaks(0.0, 5.0, -d, 1e-12);
        let got = integrate_panels(gauss8(), &breaks, |x| (x + d).powi(-2));
        let want = 1.0 / d - 1.0 / (5.0 + d);
        assert!((got - want).abs() < 1e-10 * want);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let r = adaptive(|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-10, 0.0, 2000).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn adaptive_to_infinity_power_tail() {
        let r = adaptive_to_infinity(|x: f64| x.powi(-2), 1.0, 1.0, 1e-12, 1e-12, 500).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn adaptive_reports_budget_exhaustion() {
        let e = adaptive(|x: f64| (1.0 / x).sin() / x, 1e-9, 1.0, 1e-14, 0.0, 4).unwrap_err();
        assert!(matches!(e, Error::QuadratureBudget { .. }));
    }
}
