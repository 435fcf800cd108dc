//! Parabolic tails
//!
//! ```text
//! Tail(v; x0, r, t1, t2)   = r^{2s} / (t2 - t1) int_{t1}^{t2} int_{|x - x0| > r} |v| |x - x0|^{-n-2s} dx dt
//! Tail_inf(v; x0, r, t1, t2) = r^{2s} sup_t int_{|x - x0| > r} |v| |x - x0|^{-n-2s} dx
//! ```
//!
//! and the checks of the three tail estimates.
//!
//! Inside the grid domain every node carries the exact integral of the weight
//! over its cell minus the ball; outside, the exterior data is integrated on
//! the same collar and far-field split as the operator's exterior coupling.
//! In time the spatial integrals at the stored levels are interpolated
//! linearly (the trapezoid rule when `t1`, `t2` are levels).

use crate::error::{Error, Result};
use crate::exterior::{ExteriorData, FarTerm};
use crate::geometry::{region_stats, Grid, SpaceTimeField, SpaceTimeRegion};
use crate::nonlocal_op::{collar_outer, collar_rule, far_2d, far_sides_1d};
use crate::quadrature::GaussRule;

/// Which part of `v` enters the tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailTarget {
    PositivePart,
    NegativePart,
    AbsoluteValue,
}

impl TailTarget {
    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            TailTarget::PositivePart => v.max(0.0),
            TailTarget::NegativePart => (-v).max(0.0),
            TailTarget::AbsoluteValue => v.abs(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TailTarget::PositivePart => "positive_part",
            TailTarget::NegativePart => "negative_part",
            TailTarget::AbsoluteValue => "absolute_value",
        }
    }
}

/// Parameters of one tail evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TailQuery {
    pub x0: Vec<f64>,
    pub r: f64,
    pub t1: f64,
    pub t2: f64,
    pub target: TailTarget,
}

impl TailQuery {
    pub fn new(x0: &[f64], r: f64, t1: f64, t2: f64, target: TailTarget) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter {
                name: "radius_r",
                value: r,
                expected: "r > 0",
            });
        }
        if !(t2 > t1) {
            return Err(Error::InvalidParameter {
                name: "t2",
                value: t2,
                expected: "t1 < t2",
            });
        }
        Ok(TailQuery {
            x0: x0.to_vec(),
            r,
            t1,
            t2,
            target,
        })
    }
}

/// Tail value with a time-quadrature error indicator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailValue {
    pub value: f64,
    /// Half the spread between left- and right-endpoint rules over the levels.
    pub error_estimate: f64,
}

/// Exact `int_{[a, b] \ (x0 - r, x0 + r)} |x - x0|^{-1-2s} dx`.
fn cell_weight_1d(a: f64, b: f64, x0: f64, r: f64, s: f64) -> f64 {
    // integral of |x - x0|^{-1-2s} over [p, q] on one side, distances d1 <= d2
    let side = |d1: f64, d2: f64| (d1.powf(-2.0 * s) - d2.powf(-2.0 * s)) / (2.0 * s);
    let mut total = 0.0;
    // right of the ball
    let (lo, hi) = (a.max(x0 + r), b);
    if hi > lo {
        total += side(lo - x0, hi - x0);
    }
    // left of the ball
    let (lo, hi) = (a, b.min(x0 - r));
    if hi > lo {
        total += side(x0 - hi, x0 - lo);
    }
    total
}

/// `int_{cell \ B_r(x0)} |x - x0|^{-2-2s} dx` by recursive subdivision of
/// cells near or across the sphere.
fn cell_weight_2d(c: [f64; 2], hw: f64, x0: &[f64], r: f64, s: f64, rule: &GaussRule, depth: u32) -> f64 {
    let dx = ((c[0] - x0[0]).abs() - hw).max(0.0);
    let dy = ((c[1] - x0[1]).abs() - hw).max(0.0);
    let dmin = (dx * dx + dy * dy).sqrt();
    let fx = (c[0] - x0[0]).abs() + hw;
    let fy = (c[1] - x0[1]).abs() + hw;
    let dmax = (fx * fx + fy * fy).sqrt();
    if dmax <= r {
        return 0.0;
    }
    let smooth = dmin >= r && dmin >= 4.0 * hw;
    if smooth || depth == 0 {
        let mut total = 0.0;
        for (px, wx) in rule.mapped(c[0] - hw, c[0] + hw) {
            for (py, wy) in rule.mapped(c[1] - hw, c[1] + hw) {
                let d2 = (px - x0[0]).powi(2) + (py - x0[1]).powi(2);
                if d2 >= r * r {
                    total += wx * wy * d2.powf(-1.0 - s);
                }
            }
        }
        return total;
    }
    let q = 0.5 * hw;
    let mut total = 0.0;
    for (ox, oy) in [(-q, -q), (-q, q), (q, -q), (q, q)] {
        total += cell_weight_2d([c[0] + ox, c[1] + oy], q, x0, r, s, rule, depth - 1);
    }
    total
}

/// Cell weights `W_j` and exterior quadrature for one `(x0, r)`.
#[derive(Debug, Clone)]
pub struct TailIntegrator {
    grid: Grid,
    order: f64,
    x0: Vec<f64>,
    cell_weights: Vec<f64>,
    collar_points: Vec<f64>,
    collar_weights: Vec<f64>,
    outer: f64,
}

impl TailIntegrator {
    pub fn new(grid: &Grid, order: f64, ext: &ExteriorData, x0: &[f64], r: f64) -> Result<Self> {
        if x0.len() != grid.dim() {
            return Err(Error::Dimension("tail centre and grid dimensions differ".into()));
        }
        if !(r > 0.0) {
            return Err(Error::InvalidParameter {
                name: "radius_r",
                value: r,
                expected: "r > 0",
            });
        }
        ext.check_integrable(order)?;
        let dim = grid.dim();
        let h = grid.spacing();
        let s = order;
        let coords = grid.coordinates();
        let cell_weights: Vec<f64> = if dim == 1 {
            coords
                .iter()
                .map(|&x| cell_weight_1d(x - 0.5 * h, x + 0.5 * h, x0[0], r, s))
                .collect()
        } else {
            let rule = GaussRule::new(4);
            (0..grid.node_count())
                .map(|i| cell_weight_2d([coords[2 * i], coords[2 * i + 1]], 0.5 * h, x0, r, s, &rule, 6))
                .collect()
        };
        let reach = x0.iter().map(|v| v.abs()).fold(0.0, f64::max) + r;
        let inner = grid.outer_half_width();
        let outer = collar_outer(grid, Some(ext), 1.5 * reach);
        let mut breaks: Vec<f64> = ext.radial_breaks().to_vec();
        if dim == 1 {
            breaks.extend([x0[0] + r, x0[0] - r].iter().map(|v| v.abs()));
        }
        let rule = collar_rule(dim, x0, inner, outer, &breaks, 0.25 * h);
        let mut collar_points = Vec::with_capacity(rule.points.len());
        let mut collar_weights = Vec::with_capacity(rule.weights.len());
        for (q, w) in rule.weights.iter().enumerate() {
            let y = &rule.points[q * dim..(q + 1) * dim];
            let d2: f64 = y.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 > r * r {
                collar_points.extend_from_slice(y);
                collar_weights.push(w * d2.powf(-0.5 * dim as f64 - s));
            }
        }
        Ok(TailIntegrator {
            grid: *grid,
            order,
            x0: x0.to_vec(),
            cell_weights,
            collar_points,
            collar_weights,
            outer,
        })
    }

    /// Exact weight of the grid cells outside the ball (used by tests).
    pub fn cell_weights(&self) -> &[f64] {
        &self.cell_weights
    }

    /// `int_{|x - x0| > r} target(v(x)) |x - x0|^{-n-2s} dx` for nodal values
    /// `nodal` inside the domain and `ext` at time `t` outside.
    pub fn spatial(&self, nodal: &[f64], ext: &ExteriorData, t: f64, target: TailTarget) -> f64 {
        let dim = self.grid.dim();
        let inside: f64 = nodal
            .iter()
            .zip(&self.cell_weights)
            .map(|(v, w)| target.apply(*v) * w)
            .sum();
        let collar: f64 = self
            .collar_weights
            .iter()
            .enumerate()
            .map(|(q, w)| w * target.apply(ext.value(&self.collar_points[q * dim..(q + 1) * dim], t)))
            .sum();
        let terms: Vec<FarTerm> = match target {
            TailTarget::PositivePart => ext.positive_part(self.outer).far_terms(t),
            TailTarget::NegativePart => ext.negative_part(self.outer).far_terms(t),
            TailTarget::AbsoluteValue => {
                let mut v = ext.positive_part(self.outer).far_terms(t);
                v.extend(ext.negative_part(self.outer).far_terms(t));
                v
            }
        };
        let far = if dim == 1 {
            far_sides_1d(self.x0[0], self.outer, self.order, &terms).iter().sum()
        } else {
            far_2d(&self.x0, self.outer, self.order, &terms, |_| 1.0)
        };
        inside + collar + far
    }
}

// Spatial integrals on the levels needed to cover [t1, t2], interpolated at
// the ends: returns (times, values) with times[0] = t1 and last = t2.
fn spatial_profile(f: &SpaceTimeField, ext: &ExteriorData, q: &TailQuery) -> Result<(Vec<f64>, Vec<f64>)> {
    let slack = 1e-12 * (1.0 + f.t_last().abs());
    if q.t1 < f.t_first() - slack || q.t2 > f.t_last() + slack {
        return Err(Error::Precondition(format!(
            "tail interval ({}, {}) outside the field's time range [{}, {}]",
            q.t1,
            q.t2,
            f.t_first(),
            f.t_last()
        )));
    }
    let integ = TailIntegrator::new(f.grid(), f.order(), ext, &q.x0, q.r)?;
    let times = f.times();
    let at_level = |m: usize| integ.spatial(f.level(m), ext, times[m], q.target);
    let interp = |t: f64| -> f64 {
        let m = times.partition_point(|&tm| tm <= t);
        if m == 0 {
            return at_level(0);
        }
        if m >= times.len() {
            return at_level(times.len() - 1);
        }
        let (a, b) = (times[m - 1], times[m]);
        if t == a {
            return at_level(m - 1);
        }
        let w = (t - a) / (b - a);
        (1.0 - w) * at_level(m - 1) + w * at_level(m)
    };
    let mut ts = vec![q.t1];
    let mut vs = vec![interp(q.t1)];
    for (m, &tm) in times.iter().enumerate() {
        if tm > q.t1 && tm < q.t2 {
            ts.push(tm);
            vs.push(at_level(m));
        }
    }
    ts.push(q.t2);
    vs.push(interp(q.t2));
    Ok((ts, vs))
}

/// `Tail(v; x0, r, t1, t2)` with `v = target(u)` inside and `target(g)` outside.
pub fn tail(f: &SpaceTimeField, ext: &ExteriorData, q: &TailQuery) -> Result<TailValue> {
    let (ts, vs) = spatial_profile(f, ext, q)?;
    let mut integral = 0.0;
    let mut spread = 0.0;
    for i in 1..ts.len() {
        let dt = ts[i] - ts[i - 1];
        integral += 0.5 * dt * (vs[i] + vs[i - 1]);
        spread += 0.5 * dt * (vs[i] - vs[i - 1]).abs();
    }
    let scale = q.r.powf(2.0 * f.order()) / (q.t2 - q.t1);
    Ok(TailValue {
        value: scale * integral,
        error_estimate: scale * spread,
    })
}

/// `Tail_inf(v; x0, r, t1, t2)`: the supremum over the stored levels in the
/// closed interval and the interpolated end values.
pub fn tail_sup(f: &SpaceTimeField, ext: &ExteriorData, q: &TailQuery) -> Result<TailValue> {
    let (_, vs) = spatial_profile(f, ext, q)?;
    let sup = vs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let inf = vs.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = q.r.powf(2.0 * f.order());
    Ok(TailValue {
        value: scale * sup,
        error_estimate: 0.5 * scale * (sup - inf).min(sup),
    })
}

/// Outcome of a tail-lemma check on one field.
#[derive(Debug, Clone, PartialEq)]
pub struct TailLemmaReport {
    pub lhs: f64,
    /// Tail part of the right-hand side (without the constant).
    pub rhs_tail: f64,
    /// Local part (mean or sup) of the right-hand side.
    pub rhs_local: f64,
    pub c_emp: f64,
    /// Both sides vanish.
    pub degenerate: bool,
    /// Numerator positive with a vanishing denominator.
    pub anomaly: bool,
    pub pass: bool,
}

impl TailLemmaReport {
    fn from_sides(lhs: f64, rhs_tail: f64, rhs_local: f64) -> Self {
        let denom = rhs_tail + rhs_local;
        let tiny = 1e-300;
        let (c_emp, degenerate, anomaly) = if denom.abs() <= tiny {
            if lhs.abs() <= tiny {
                (0.0, true, false)
            } else {
                (f64::INFINITY, false, true)
            }
        } else {
            (lhs / denom, false, false)
        };
        TailLemmaReport {
            lhs,
            rhs_tail,
            rhs_local,
            c_emp,
            degenerate,
            anomaly,
            pass: c_emp.is_finite() && !anomaly,
        }
    }
}

fn require_nonnegative(f: &SpaceTimeField, region: &SpaceTimeRegion, tol: f64) -> Result<()> {
    let e = region_stats(f, region, |v| v)?;
    if e.inf < -tol {
        return Err(Error::Precondition(format!(
            "u has minimum {} < -{tol} on {region}",
            e.inf
        )));
    }
    Ok(())
}

/// Bound of `Tail_inf(u_+)` by `Tail(u_+)` plus a local mean, `t2 = t1 + r^{2s}`:
///
/// `C = Tail_inf(u_+; r, t1, t2) / [eps^{-1} Tail(u_+; r, t1 - eps r^{2s}, t2) + eps^{-1} mean_{B_r x (t1 - eps r^{2s}, t2)} u_+]`.
pub fn check_sup_tail_by_tail(
    f: &SpaceTimeField,
    ext: &ExteriorData,
    x0: &[f64],
    r: f64,
    t1: f64,
    eps: f64,
    positivity_tol: f64,
) -> Result<TailLemmaReport> {
    let s = f.order();
    let t2 = t1 + r.powf(2.0 * s);
    require_nonnegative(
        f,
        &SpaceTimeRegion {
            center: x0.to_vec(),
            radius: r,
            t_lo: t1,
            t_hi: t2,
        },
        positivity_tol,
    )?;
    sup_tail_core(f, ext, x0, r, t1, eps)
}

fn sup_tail_core(f: &SpaceTimeField, ext: &ExteriorData, x0: &[f64], r: f64, t1: f64, eps: f64) -> Result<TailLemmaReport> {
    let s = f.order();
    let d = r.powf(2.0 * s);
    if !(eps > 0.0) || t1 - eps * d < f.t_first() {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            value: eps,
            expected: "0 < eps with t1 - eps r^{2s} inside the field's time range",
        });
    }
    let t2 = t1 + d;
    let t_lo = t1 - eps * d;
    let lhs = tail_sup(f, ext, &TailQuery::new(x0, r, t1, t2, TailTarget::PositivePart)?)?.value;
    let long = tail(f, ext, &TailQuery::new(x0, r, t_lo, t2, TailTarget::PositivePart)?)?.value;
    let mean = region_stats(
        f,
        &SpaceTimeRegion {
            center: x0.to_vec(),
            radius: r,
            t_lo,
            t_hi: t2,
        },
        |v| v.max(0.0),
    )?
    .mean;
    Ok(TailLemmaReport::from_sides(lhs, long / eps, mean / eps))
}

/// The `u_-` version for supersolutions: the check above applied to `-u`
/// with exterior data `-g`.
pub fn check_sup_tail_by_tail_minus(
    f: &SpaceTimeField,
    ext: &ExteriorData,
    x0: &[f64],
    r: f64,
    t1: f64,
    eps: f64,
) -> Result<TailLemmaReport> {
    sup_tail_core(&f.map(|v| -v), &ext.scaled(-1.0), x0, r, t1, eps)
}

/// `C = Tail(u_+; r, t1, t2) / [sup_{B_r x (t1, t2)} u + (r/R)^{2s} Tail(u_-; R, t1, t2)]`
/// with `t2 = t1 + r^{2s}` and `u >= 0` on `B_R x (t1, t2)`.
pub fn check_tail_plus_by_minus(
    f: &SpaceTimeField,
    ext: &ExteriorData,
    x0: &[f64],
    r: f64,
    big_r: f64,
    t1: f64,
    positivity_tol: f64,
) -> Result<TailLemmaReport> {
    if !(r > 0.0 && r < 0.5 * big_r) {
        return Err(Error::InvalidParameter {
            name: "radius_big_r",
            value: big_r,
            expected: "0 < r < R/2",
        });
    }
    let s = f.order();
    let t2 = t1 + r.powf(2.0 * s);
    let big = SpaceTimeRegion {
        center: x0.to_vec(),
        radius: big_r,
        t_lo: t1,
        t_hi: t2,
    };
    require_nonnegative(f, &big, positivity_tol)?;
    let lhs = tail(f, ext, &TailQuery::new(x0, r, t1, t2, TailTarget::PositivePart)?)?.value;
    let minus = tail(f, ext, &TailQuery::new(x0, big_r, t1, t2, TailTarget::NegativePart)?)?.value;
    let sup = region_stats(
        f,
        &SpaceTimeRegion {
            center: x0.to_vec(),
            radius: r,
            t_lo: t1,
            t_hi: t2,
        },
        |v| v,
    )?
    .sup;
    Ok(TailLemmaReport::from_sides(lhs, (r / big_r).powf(2.0 * s) * minus, sup))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(dim: usize, l: f64, n: usize, s: f64) -> SpaceTimeField {
        let g = Grid::new(dim, l, n).unwrap();
        let times: Vec<f64> = (0..=16).map(|m| m as f64 * 0.25).collect();
        SpaceTimeField::from_fn(g, s, times, |_, _| 1.0).unwrap()
    }

    #[test]
    fn unit_field_has_tail_two() {
        let f = ones(1, 3.0, 61, 0.5);
        let ext = ExteriorData::constant(1.0);
        for r in [0.3, 1.0, 2.5] {
            for target in [TailTarget::PositivePart, TailTarget::AbsoluteValue] {
                let q = TailQuery::new(&[0.2], r, 0.5, 1.7, target).unwrap();
                let t = tail(&f, &ext, &q).unwrap().value;
                let ts = tail_sup(&f, &ext, &q).unwrap().value;
                assert!((t - 2.0).abs() < 1e-10, "r={r}: {t}");
                assert!((ts - 2.0).abs() < 1e-10, "r={r}: {ts}");
            }
            let q = TailQuery::new(&[0.2], r, 0.5, 1.7, TailTarget::NegativePart).unwrap();
            assert_eq!(tail(&f, &ext, &q).unwrap().value, 0.0);
        }
    }

    #[test]
    fn unit_field_tail_in_two_dimensions() {
        // r^{2s} int_{|x| > r} |x|^{-2-2s} dx = 2 pi / (2s)
        let s = 0.5;
        let f = ones(2, 2.0, 33, s);
        let ext = ExteriorData::constant(1.0);
        let q = TailQuery::new(&[0.0, 0.0], 0.8, 0.5, 1.0, TailTarget::AbsoluteValue).unwrap();
        let t = tail(&f, &ext, &q).unwrap().value;
        let want = 2.0 * std::f64::consts::PI / (2.0 * s);
        assert!((t - want).abs() < 1e-3 * want, "{t} vs {want}");
    }

    #[test]
    fn homogeneity() {
        let g = Grid::new(1, 2.0, 41).unwrap();
        let f = SpaceTimeField::from_fn(g, 0.4, vec![0.0, 0.5, 1.0], |x, t| (x[0] - t).sin()).unwrap();
        let ext = ExteriorData::power_law(0.7, -0.5);
        let q = TailQuery::new(&[0.1], 0.6, 0.0, 1.0, TailTarget::AbsoluteValue).unwrap();
        let a = tail(&f, &ext, &q).unwrap().value;
        let b = tail(&f.map(|v| -3.0 * v), &ext.scaled(-3.0), &q).unwrap().value;
        assert!((b - 3.0 * a).abs() < 1e-12 * b);
        let a = tail_sup(&f, &ext, &q).unwrap().value;
        let b = tail_sup(&f.map(|v| -3.0 * v), &ext.scaled(-3.0), &q).unwrap().value;
        assert!((b - 3.0 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn annulus_additivity() {
        let s = 0.3;
        let g = Grid::new(1, 3.0, 61).unwrap();
        let ext = ExteriorData::zero();
        let inner = TailIntegrator::new(&g, s, &ext, &[0.0], 0.5).unwrap();
        let outer = TailIntegrator::new(&g, s, &ext, &[0.0], 1.5).unwrap();
        let v = vec![1.0; 61];
        let diff = inner.spatial(&v, &ext, 0.0, TailTarget::AbsoluteValue) - outer.spatial(&v, &ext, 0.0, TailTarget::AbsoluteValue);
        let want = 2.0 * (0.5f64.powf(-2.0 * s) - 1.5f64.powf(-2.0 * s)) / (2.0 * s);
        assert!((diff - want).abs() < 1e-12, "{diff} vs {want}");
    }

    #[test]
    fn monotone_exterior_sup_at_right_end() {
        let g = Grid::new(1, 1.0, 21).unwrap();
        let f = SpaceTimeField::from_fn(g, 0.5, vec![1.0, 1.5, 2.0], |_, _| 0.0).unwrap();
        let ext = ExteriorData::power_law_ramp(1.0, -0.5);
        let q = TailQuery::new(&[0.0], 0.5, 1.0, 2.0, TailTarget::AbsoluteValue).unwrap();
        let sup = tail_sup(&f, &ext, &q).unwrap().value;
        let integ = TailIntegrator::new(&g, 0.5, &ext, &[0.0], 0.5).unwrap();
        let at_end = 0.5f64.powf(1.0) * integ.spatial(f.level(2), &ext, 2.0, TailTarget::AbsoluteValue);
        assert_eq!(sup, at_end);
        assert!(tail(&f, &ext, &q).unwrap().value <= sup);
    }

    #[test]
    fn tail_interval_outside_range_is_rejected() {
        let f = ones(1, 1.0, 11, 0.5);
        let q = TailQuery::new(&[0.0], 0.5, 3.0, 5.0, TailTarget::AbsoluteValue).unwrap();
        assert!(tail(&f, &ExteriorData::constant(1.0), &q).is_err());
    }

    #[test]
    fn divergent_exterior_is_rejected() {
        let f = ones(1, 1.0, 11, 0.25);
        let q = TailQuery::new(&[0.0], 0.5, 0.0, 1.0, TailTarget::AbsoluteValue).unwrap();
        let e = tail(&f, &ExteriorData::power_law(1.0, 0.6), &q).unwrap_err();
        assert!(matches!(e, Error::Divergence(_)));
    }

    #[test]
    fn lemma_closed_forms_for_unit_field() {
        let f = ones(1, 3.0, 61, 0.5);
        let ext = ExteriorData::constant(1.0);
        let eps = 0.5;
        let rep = check_sup_tail_by_tail(&f, &ext, &[0.0], 1.0, 1.5, eps, 0.0).unwrap();
        assert!((rep.c_emp - 2.0 * eps / 3.0).abs() < 1e-10, "{rep:?}");
        let rep = check_tail_plus_by_minus(&f, &ext, &[0.0], 0.5, 2.0, 1.5, 0.0).unwrap();
        assert!((rep.c_emp - 2.0).abs() < 1e-10, "{rep:?}");
        let rep = check_sup_tail_by_tail_minus(&f, &ext, &[0.0], 1.0, 1.5, eps).unwrap();
        assert!(rep.degenerate && rep.pass);
    }

    #[test]
    fn zero_field_is_degenerate_pass() {
        let g = Grid::new(1, 2.0, 41).unwrap();
        let f = SpaceTimeField::from_fn(g, 0.5, (0..33).map(|m| m as f64 * 0.125).collect(), |_, _| 0.0).unwrap();
        let rep = check_sup_tail_by_tail(&f, &ExteriorData::zero(), &[0.0], 1.0, 1.5, 0.5, 0.0).unwrap();
        assert!(rep.degenerate && rep.pass);
        let rep = check_tail_plus_by_minus(&f, &ExteriorData::zero(), &[0.0], 0.5, 1.5, 1.5, 0.0).unwrap();
        assert!(rep.degenerate && rep.pass);
    }

    #[test]
    fn sign_flip_identity() {
        let g = Grid::new(1, 2.0, 41).unwrap();
        let f = SpaceTimeField::from_fn(g, 0.5, (0..9).map(|m| m as f64 * 0.5).collect(), |x, t| {
            (x[0] + t).cos() - 0.3
        })
        .unwrap();
        let ext = ExteriorData::power_law(-0.4, -0.5);
        let a = check_sup_tail_by_tail_minus(&f, &ext, &[0.0], 0.7, 1.5, 0.5).unwrap();
        let b = sup_tail_core(&f.map(|v| -v), &ext.scaled(-1.0), &[0.0], 0.7, 1.5, 0.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn negativity_precondition() {
        let g = Grid::new(1, 2.0, 41).unwrap();
        let f = SpaceTimeField::from_fn(g, 0.5, (0..9).map(|m| m as f64 * 0.5).collect(), |_, _| -1.0).unwrap();
        let e = check_sup_tail_by_tail(&f, &ExteriorData::zero(), &[0.0], 1.0, 1.5, 0.5, 1e-6).unwrap_err();
        assert!(matches!(e, Error::Precondition(_)));
    }
}
