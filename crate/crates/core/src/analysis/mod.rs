//! Empirical checks of the regularity estimates on discrete solutions.
//!
//! Each check measures both sides of an inequality on a [`SpaceTimeField`]
//! and reports the ratio `C_emp`. A constant that exists only as an
//! existential statement cannot be asserted directly; what is checked instead
//! is that `C_emp` is finite and stable when the grid is refined.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{Grid, SpaceTimeField};

mod ensemble;
mod lemmas;
mod theorems;

pub use ensemble::{
    estimate_constants, residual_gate, tail_necessity_probe, EnsembleMember, EnsembleResult, EnsembleSpec, ExteriorGenerator,
    InitialGenerator, MemberProblem, NecessityReport, NecessityRow, ProbeSpec, ResidualGate, TheoremSummary,
    CSV_HEADER,
};
pub use lemmas::{
    check_algebraic_inequality, check_sobolev, check_sobolev_parabolic, check_weighted_poincare,
    search_algebraic_constants, AlgebraicCheck, AlgebraicPart, AlgebraicSearch, LemmaReport, PsiProfile,
};
pub use theorems::{
    verify, verify_harnack, verify_local_boundedness, verify_local_boundedness_signed, verify_tail_lemma,
    verify_weak_harnack,
};

/// Inequalities that can be checked on a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TheoremId {
    Harnack,
    WeakHarnack,
    LocalBoundedness,
    LocalBoundednessSigned,
    SupTailByTail,
    SupTailByTailMinus,
    TailPlusByMinus,
}

impl TheoremId {
    pub const ALL: [TheoremId; 7] = [
        TheoremId::Harnack,
        TheoremId::WeakHarnack,
        TheoremId::LocalBoundedness,
        TheoremId::LocalBoundednessSigned,
        TheoremId::SupTailByTail,
        TheoremId::SupTailByTailMinus,
        TheoremId::TailPlusByMinus,
    ];

    /// The four main estimates.
    pub const MAIN: [TheoremId; 4] = [
        TheoremId::Harnack,
        TheoremId::WeakHarnack,
        TheoremId::LocalBoundedness,
        TheoremId::LocalBoundednessSigned,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::Harnack => "harnack",
            TheoremId::WeakHarnack => "weak_harnack",
            TheoremId::LocalBoundedness => "local_boundedness",
            TheoremId::LocalBoundednessSigned => "local_boundedness_signed",
            TheoremId::SupTailByTail => "sup_tail_by_tail",
            TheoremId::SupTailByTailMinus => "sup_tail_by_tail_minus",
            TheoremId::TailPlusByMinus => "tail_plus_by_minus",
        }
    }

    /// Local boundedness has the affine form `lhs <= C mean + delta tail`;
    /// everything else is a plain ratio.
    fn is_affine(self) -> bool {
        matches!(self, TheoremId::LocalBoundedness | TheoremId::LocalBoundednessSigned)
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TheoremId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown theorem `{s}`")))
    }
}

/// Centre, radii, anchor time and the free parameters of the estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub x0: Vec<f64>,
    pub r: f64,
    pub big_r: f64,
    pub t0: f64,
    /// Harnack time-lag parameter in `(1, 2^{2s})`.
    pub alpha: f64,
    pub theta: f64,
    pub delta: f64,
}

/// Default Harnack lag parameter: the midpoint of `(1, 2^{2s})`.
pub fn default_alpha(s: f64) -> f64 {
    0.5 * (1.0 + 4f64.powf(s))
}

impl Geometry {
    /// Geometry with the default `alpha`, `theta = delta = 1/2`.
    pub fn new(x0: Vec<f64>, r: f64, big_r: f64, t0: f64, s: f64) -> Self {
        Geometry {
            x0,
            r,
            big_r,
            t0,
            alpha: default_alpha(s),
            theta: 0.5,
            delta: 0.5,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    /// End of the lower Harnack cylinder: `t1 = t0 + 2 r^{2s} - alpha (r/2)^{2s}`.
    pub fn harnack_t1(&self, s: f64) -> f64 {
        self.t0 + 2.0 * self.r.powf(2.0 * s) - self.alpha * (0.5 * self.r).powf(2.0 * s)
    }

    /// Checks the admissible ranges that do not involve a field.
    pub fn validate(&self, s: f64) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "radius_r",
                value: self.r,
                expected: "r > 0",
            });
        }
        if !(self.big_r > 2.0 * self.r) || !self.big_r.is_finite() {
            return Err(Error::InvalidParameter {
                name: "radius_big_r",
                value: self.big_r,
                expected: "r < R/2",
            });
        }
        if !(self.alpha > 1.0 && self.alpha < 4f64.powf(s)) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: self.alpha,
                expected: "alpha in (1, 2^{2s})",
            });
        }
        for (name, v) in [("theta", self.theta), ("delta", self.delta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    expected: "a value in (0, 1)",
                });
            }
        }
        if !self.t0.is_finite() || self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("geometry centre and time must be finite".into()));
        }
        Ok(())
    }
}

/// Result of one check.
///
/// Unused right-hand-side slots are NaN. `rhs_inf` holds the pointwise local
/// term (an infimum, or the supremum for the tail-by-minus lemma), `rhs_mean`
/// an averaged local term and `rhs_tail` the tail term including its geometric
/// prefactor.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub theorem: TheoremId,
    pub geometry: Geometry,
    pub lhs: f64,
    pub rhs_inf: f64,
    pub rhs_mean: f64,
    pub rhs_tail: f64,
    pub c_emp: f64,
    /// `C_emp(fine) / C_emp(coarse)` once a second resolution is available.
    pub refinement_ratio: Option<f64>,
    /// Numerator and denominator both vanish.
    pub degenerate: bool,
    /// Positive numerator over a vanishing denominator.
    pub anomaly: bool,
    pub pass: bool,
}

const TINY: f64 = 1e-300;

/// `(c_emp, degenerate, anomaly)` from the sides.
fn constant_from_sides(theorem: TheoremId, lhs: f64, inf: f64, mean: f64, tail: f64) -> (f64, bool, bool) {
    let finite_or_zero = |v: f64| if v.is_nan() { 0.0 } else { v };
    let (num, den) = if theorem.is_affine() {
        ((lhs - finite_or_zero(tail)).max(0.0), finite_or_zero(mean))
    } else {
        (lhs, finite_or_zero(inf) + finite_or_zero(mean) + finite_or_zero(tail))
    };
    if den.abs() <= TINY {
        if num <= TINY {
            (0.0, true, false)
        } else {
            (f64::INFINITY, false, true)
        }
    } else {
        (num / den, false, false)
    }
}

impl VerificationReport {
    pub(crate) fn from_sides(
        theorem: TheoremId,
        geometry: Geometry,
        lhs: f64,
        rhs_inf: f64,
        rhs_mean: f64,
        rhs_tail: f64,
    ) -> Self {
        let (c_emp, degenerate, anomaly) = constant_from_sides(theorem, lhs, rhs_inf, rhs_mean, rhs_tail);
        VerificationReport {
            theorem,
            geometry,
            lhs,
            rhs_inf,
            rhs_mean,
            rhs_tail,
            c_emp,
            refinement_ratio: None,
            degenerate,
            anomaly,
            pass: c_emp.is_finite() && !anomaly,
        }
    }

    /// `C_emp` recomputed from the stored sides; equals `c_emp` for every
    /// report produced by this module.
    pub fn recompute(&self) -> f64 {
        constant_from_sides(self.theorem, self.lhs, self.rhs_inf, self.rhs_mean, self.rhs_tail).0
    }

    /// Fine-resolution report annotated with `C_fine / C_coarse`. Pass
    /// requires both constants finite and the ratio in `[1/2, 2]`.
    pub fn with_refinement(coarse: &VerificationReport, fine: &VerificationReport) -> VerificationReport {
        let ratio = refinement_ratio(coarse.c_emp, fine.c_emp);
        let mut out = fine.clone();
        out.refinement_ratio = Some(ratio);
        out.pass = coarse.pass && fine.pass && ratio_is_stable(ratio);
        out
    }
}

/// `fine / coarse`, with 1 when both vanish.
pub fn refinement_ratio(coarse: f64, fine: f64) -> f64 {
    let scale = coarse.abs().max(fine.abs());
    if scale <= 1e-12 {
        1.0
    } else if coarse.abs() <= TINY {
        f64::INFINITY
    } else {
        fine / coarse
    }
}

/// The stability window `[1/2, 2]`.
pub fn ratio_is_stable(ratio: f64) -> bool {
    ratio.is_finite() && (0.5..=2.0).contains(&ratio)
}

/// Piecewise (bi)linear interpolant of nodal values, clamped to the node box.
pub fn interpolate(grid: &Grid, nodal: &[f64], x: &[f64]) -> f64 {
    let n = grid.nodes_per_axis();
    let h = grid.spacing();
    let l = grid.half_width();
    let locate = |v: f64| -> (usize, f64) {
        let p = ((v + l) / h).clamp(0.0, (n - 1) as f64);
        let i = (p.floor() as usize).min(n - 2);
        (i, p - i as f64)
    };
    match grid.dim() {
        1 => {
            let (i, w) = locate(x[0]);
            (1.0 - w) * nodal[i] + w * nodal[i + 1]
        }
        _ => {
            let (i, wx) = locate(x[0]);
            let (j, wy) = locate(x[1]);
            let at = |a: usize, b: usize| nodal[grid.flat_index([a, b])];
            (1.0 - wx) * (1.0 - wy) * at(i, j)
                + wx * (1.0 - wy) * at(i + 1, j)
                + (1.0 - wx) * wy * at(i, j + 1)
                + wx * wy * at(i + 1, j + 1)
        }
    }
}

/// Max-norm difference between a fine field and the interpolated coarse
/// field, over the coarse levels that also appear (to `1e-9`) in the fine one.
pub fn scheme_error_estimate(coarse: &SpaceTimeField, fine: &SpaceTimeField) -> Result<f64> {
    if coarse.grid().dim() != fine.grid().dim() {
        return Err(Error::Dimension("coarse and fine fields differ in dimension".into()));
    }
    let fg = fine.grid();
    let points: Vec<Vec<f64>> = (0..fg.node_count()).map(|i| fg.point(i)).collect();
    let mut worst: f64 = 0.0;
    let mut matched = 0;
    for (m, &t) in coarse.times().iter().enumerate() {
        let k = fine.nearest_level(t);
        if (fine.times()[k] - t).abs() > 1e-9 * t.abs().max(1.0) {
            continue;
        }
        matched += 1;
        let c = coarse.level(m);
        for (p, &v) in points.iter().zip(fine.level(k)) {
            worst = worst.max((v - interpolate(coarse.grid(), c, p)).abs());
        }
    }
    if matched == 0 {
        return Err(Error::Precondition("coarse and fine fields share no time level".into()));
    }
    Ok(worst)
}

/// Requires `B_radius(center) x [t_lo, t_hi]` inside the field's node box and
/// time range.
pub(crate) fn require_inside(f: &SpaceTimeField, center: &[f64], radius: f64, t_lo: f64, t_hi: f64) -> Result<()> {
    let l = f.grid().half_width();
    let slack = 1e-12 * l;
    if center.len() != f.grid().dim() {
        return Err(Error::Dimension(format!(
            "centre of dimension {} on a {}-dimensional grid",
            center.len(),
            f.grid().dim()
        )));
    }
    if center.iter().any(|c| c.abs() + radius > l + slack) {
        return Err(Error::Precondition(format!(
            "ball of radius {radius} around {center:?} leaves the computational box [-{l}, {l}]"
        )));
    }
    let tt = 1e-9 * f.t_last().abs().max(1.0);
    if t_lo < f.t_first() - tt || t_hi > f.t_last() + tt {
        return Err(Error::Precondition(format!(
            "time window ({t_lo}, {t_hi}) leaves the solved range [{}, {}]",
            f.t_first(),
            f.t_last()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_default_is_midpoint() {
        let g = Geometry::new(vec![0.0], 0.5, 2.0, 1.0, 0.5);
        assert_eq!(g.alpha, 1.5);
        assert!(g.validate(0.5).is_ok());
        assert!(g.clone().with_alpha(1.9).validate(0.3).is_err());
        assert!(Geometry::new(vec![0.0], 1.0, 2.0, 1.0, 0.5).validate(0.5).is_err());
    }

    #[test]
    fn harnack_cylinders_are_lagged() {
        for s in [0.1, 0.5, 0.9] {
            let g = Geometry::new(vec![0.0], 0.7, 2.0, 3.0, s);
            let lower_start = g.harnack_t1(s) - (0.5 * g.r).powf(2.0 * s);
            assert!(lower_start > g.t0);
        }
    }

    #[test]
    fn affine_and_ratio_forms() {
        let g = Geometry::new(vec![0.0], 0.5, 2.0, 1.0, 0.5);
        let r = VerificationReport::from_sides(TheoremId::Harnack, g.clone(), 2.0, 1.0, f64::NAN, 1.0);
        assert_eq!(r.c_emp, 1.0);
        let r = VerificationReport::from_sides(TheoremId::LocalBoundedness, g.clone(), 1.0, f64::NAN, 1.0, 0.25);
        assert_eq!(r.c_emp, 0.75);
        assert_eq!(r.recompute(), r.c_emp);
        let r = VerificationReport::from_sides(TheoremId::LocalBoundedness, g.clone(), -1.0, f64::NAN, 0.0, 0.0);
        assert!(r.degenerate && r.pass);
        let r = VerificationReport::from_sides(TheoremId::LocalBoundedness, g, 1.0, f64::NAN, 0.0, 0.0);
        assert!(r.anomaly && !r.pass);
    }

    #[test]
    fn ratio_window() {
        assert_eq!(refinement_ratio(0.0, 0.0), 1.0);
        assert_eq!(refinement_ratio(2.0, 3.0), 1.5);
        assert!(!ratio_is_stable(refinement_ratio(0.0, 1.0)));
        assert!(ratio_is_stable(0.5) && ratio_is_stable(2.0) && !ratio_is_stable(2.01));
    }

    #[test]
    fn interpolation_is_exact_on_linears() {
        let g = Grid::new(2, 1.0, 9).unwrap();
        let v = g.sample(|x| 2.0 * x[0] - x[1] + 0.5);
        let p = [0.123, -0.77];
        assert!((interpolate(&g, &v, &p) - (2.0 * p[0] - p[1] + 0.5)).abs() < 1e-12);
        let g = Grid::new(1, 1.0, 9).unwrap();
        let v = g.sample(|x| 3.0 * x[0]);
        assert!((interpolate(&g, &v, &[0.31]) - 0.93).abs() < 1e-12);
    }

    #[test]
    fn scheme_error_of_identical_linear_fields_vanishes() {
        let times = vec![0.0, 0.5, 1.0];
        let c = SpaceTimeField::from_fn(Grid::new(1, 1.0, 11).unwrap(), 0.5, times.clone(), |x, t| x[0] + t).unwrap();
        let f = SpaceTimeField::from_fn(Grid::new(1, 1.0, 22).unwrap(), 0.5, vec![0.0, 0.25, 0.5, 0.75, 1.0], |x, t| {
            x[0] + t
        })
        .unwrap();
        assert!(scheme_error_estimate(&c, &f).unwrap() < 1e-12);
    }
}
