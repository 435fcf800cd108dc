//! The Harnack, weak Harnack and local boundedness estimates, plus the tail
//! lemmas wrapped as reports.

use super::{require_inside, Geometry, TheoremId, VerificationReport};
use crate::error::{Error, Result};
use crate::exterior::ExteriorData;
use crate::geometry::{region_stats, Extrema, SpaceTimeField, SpaceTimeRegion};
use crate::tails::{self, tail, tail_sup, TailQuery, TailTarget};

fn stats<F: Fn(f64) -> f64>(f: &SpaceTimeField, x0: &[f64], radius: f64, t_lo: f64, t_hi: f64, tr: F) -> Result<Extrema> {
    region_stats(
        f,
        &SpaceTimeRegion {
            center: x0.to_vec(),
            radius,
            t_lo,
            t_hi,
        },
        tr,
    )
}

fn require_positive(f: &SpaceTimeField, x0: &[f64], radius: f64, t_lo: f64, t_hi: f64, tol: f64) -> Result<()> {
    let e = stats(f, x0, radius, t_lo, t_hi, |v| v)?;
    if e.inf < -tol {
        return Err(Error::Precondition(format!(
            "positivity violated: min u = {} < -{tol} on B_{radius} x ({t_lo}, {t_hi})",
            e.inf
        )));
    }
    Ok(())
}

fn prepare(f: &SpaceTimeField, g: &Geometry) -> Result<f64> {
    let s = f.order();
    g.validate(s)?;
    if g.x0.len() != f.grid().dim() {
        return Err(Error::Dimension(format!(
            "centre of dimension {} on a {}-dimensional grid",
            g.x0.len(),
            f.grid().dim()
        )));
    }
    Ok(s)
}

/// `sup_{U^-(t0, r/2)} u <= C [ inf_{U^-(t1, r/2)} u + (r/R)^{2s} Tail(u_-; R, t0 - r^{2s}, t1) ]`
/// with `t1 = t0 + 2 r^{2s} - alpha (r/2)^{2s}`, for `u >= 0` on
/// `B_R x (t0 - r^{2s}, t1)`.
pub fn verify_harnack(f: &SpaceTimeField, ext: &ExteriorData, g: &Geometry, positivity_tol: f64) -> Result<VerificationReport> {
    let s = prepare(f, g)?;
    let d = g.r.powf(2.0 * s);
    let dh = (0.5 * g.r).powf(2.0 * s);
    let t1 = g.harnack_t1(s);
    require_inside(f, &g.x0, g.big_r, g.t0 - d, t1)?;
    require_positive(f, &g.x0, g.big_r, g.t0 - d, t1, positivity_tol)?;
    let lhs = stats(f, &g.x0, 0.5 * g.r, g.t0 - dh, g.t0, |v| v)?.sup;
    let inf = stats(f, &g.x0, 0.5 * g.r, t1 - dh, t1, |v| v)?.inf;
    let q = TailQuery::new(&g.x0, g.big_r, g.t0 - d, t1, TailTarget::NegativePart)?;
    let tail_term = (g.r / g.big_r).powf(2.0 * s) * tail(f, ext, &q)?.value;
    Ok(VerificationReport::from_sides(TheoremId::Harnack, g.clone(), lhs, inf, f64::NAN, tail_term))
}

/// `mean_{B_r x (t0 - 2r^{2s}, t0 - r^{2s})} u <= C [ inf_{B_r x (t0 + r^{2s}, t0 + 2r^{2s})} u
/// + (r/R)^{2s} Tail_inf(u_-; R, t0 - 2r^{2s}, t0 + 2r^{2s}) ]`.
pub fn verify_weak_harnack(
    f: &SpaceTimeField,
    ext: &ExteriorData,
    g: &Geometry,
    positivity_tol: f64,
) -> Result<VerificationReport> {
    let s = prepare(f, g)?;
    let d = g.r.powf(2.0 * s);
    require_inside(f, &g.x0, g.big_r, g.t0 - 2.0 * d, g.t0 + 2.0 * d)?;
    require_positive(f, &g.x0, g.big_r, g.t0 - 2.0 * d, g.t0 + 2.0 * d, positivity_tol)?;
    let mean = stats(f, &g.x0, g.r, g.t0 - 2.0 * d, g.t0 - d, |v| v)?.mean;
    let inf = stats(f, &g.x0, g.r, g.t0 + d, g.t0 + 2.0 * d, |v| v)?.inf;
    let q = TailQuery::new(&g.x0, g.big_r, g.t0 - 2.0 * d, g.t0 + 2.0 * d, TailTarget::NegativePart)?;
    let tail_term = (g.r / g.big_r).powf(2.0 * s) * tail_sup(f, ext, &q)?.value;
    Ok(VerificationReport::from_sides(TheoremId::WeakHarnack, g.clone(), mean, inf, f64::NAN, tail_term))
}

/// `sup_{U^-(t0, theta r)} u <= C mean_{U^-(t0, r)} u_+ + delta Tail(u_+; r, t0 - r^{2s}, t0)`.
///
/// `C_emp = max(lhs - delta tail, 0) / mean`. A vanishing mean with a
/// non-positive numerator is a degenerate pass; with a positive numerator it
/// is flagged as an anomaly.
pub fn verify_local_boundedness(f: &SpaceTimeField, ext: &ExteriorData, g: &Geometry) -> Result<VerificationReport> {
    let s = prepare(f, g)?;
    let d = g.r.powf(2.0 * s);
    let dt = (g.theta * g.r).powf(2.0 * s);
    require_inside(f, &g.x0, g.r, g.t0 - d, g.t0)?;
    let lhs = stats(f, &g.x0, g.theta * g.r, g.t0 - dt, g.t0, |v| v)?.sup;
    let mean = stats(f, &g.x0, g.r, g.t0 - d, g.t0, |v| v.max(0.0))?.mean;
    let q = TailQuery::new(&g.x0, g.r, g.t0 - d, g.t0, TailTarget::PositivePart)?;
    let tail_term = g.delta * tail(f, ext, &q)?.value;
    Ok(VerificationReport::from_sides(
        TheoremId::LocalBoundedness,
        g.clone(),
        lhs,
        f64::NAN,
        mean,
        tail_term,
    ))
}

/// Local boundedness with the tail of `u_-` outside `B_R`, for `u >= 0` on
/// `B_R x (t0 - r^{2s}, t0)`:
/// `sup_{U^-(t0, theta r)} u <= C mean_{U^-(t0, r)} u_+ + delta (r/R)^{2s} Tail(u_-; R, t0 - r^{2s}, t0)`.
pub fn verify_local_boundedness_signed(
    f: &SpaceTimeField,
    ext: &ExteriorData,
    g: &Geometry,
    positivity_tol: f64,
) -> Result<VerificationReport> {
    let s = prepare(f, g)?;
    let d = g.r.powf(2.0 * s);
    let dt = (g.theta * g.r).powf(2.0 * s);
    require_inside(f, &g.x0, g.big_r, g.t0 - d, g.t0)?;
    require_positive(f, &g.x0, g.big_r, g.t0 - d, g.t0, positivity_tol)?;
    let lhs = stats(f, &g.x0, g.theta * g.r, g.t0 - dt, g.t0, |v| v)?.sup;
    let mean = stats(f, &g.x0, g.r, g.t0 - d, g.t0, |v| v.max(0.0))?.mean;
    let q = TailQuery::new(&g.x0, g.big_r, g.t0 - d, g.t0, TailTarget::NegativePart)?;
    let tail_term = g.delta * (g.r / g.big_r).powf(2.0 * s) * tail(f, ext, &q)?.value;
    Ok(VerificationReport::from_sides(
        TheoremId::LocalBoundednessSigned,
        g.clone(),
        lhs,
        f64::NAN,
        mean,
        tail_term,
    ))
}

/// The tail lemmas as reports, anchored at `t1 = t0`:
///
/// * `SupTailByTail` and its minus version use `eps = delta`;
/// * `TailPlusByMinus` uses `r` and `R`; its local supremum goes in `rhs_inf`.
pub fn verify_tail_lemma(
    theorem: TheoremId,
    f: &SpaceTimeField,
    ext: &ExteriorData,
    g: &Geometry,
    positivity_tol: f64,
) -> Result<VerificationReport> {
    let s = prepare(f, g)?;
    let d = g.r.powf(2.0 * s);
    let (rep, pointwise) = match theorem {
        TheoremId::SupTailByTail => {
            require_inside(f, &g.x0, g.r, g.t0 - g.delta * d, g.t0 + d)?;
            (
                tails::check_sup_tail_by_tail(f, ext, &g.x0, g.r, g.t0, g.delta, positivity_tol)?,
                false,
            )
        }
        TheoremId::SupTailByTailMinus => {
            require_inside(f, &g.x0, g.r, g.t0 - g.delta * d, g.t0 + d)?;
            (tails::check_sup_tail_by_tail_minus(f, ext, &g.x0, g.r, g.t0, g.delta)?, false)
        }
        TheoremId::TailPlusByMinus => {
            require_inside(f, &g.x0, g.big_r, g.t0, g.t0 + d)?;
            (
                tails::check_tail_plus_by_minus(f, ext, &g.x0, g.r, g.big_r, g.t0, positivity_tol)?,
                true,
            )
        }
        other => {
            return Err(Error::Precondition(format!("`{other}` is not a tail lemma")));
        }
    };
    let (inf, mean) = if pointwise {
        (rep.rhs_local, f64::NAN)
    } else {
        (f64::NAN, rep.rhs_local)
    };
    Ok(VerificationReport::from_sides(theorem, g.clone(), rep.lhs, inf, mean, rep.rhs_tail))
}

/// Dispatches to the check named by `theorem`.
pub fn verify(
    theorem: TheoremId,
    f: &SpaceTimeField,
    ext: &ExteriorData,
    g: &Geometry,
    positivity_tol: f64,
) -> Result<VerificationReport> {
    match theorem {
        TheoremId::Harnack => verify_harnack(f, ext, g, positivity_tol),
        TheoremId::WeakHarnack => verify_weak_harnack(f, ext, g, positivity_tol),
        TheoremId::LocalBoundedness => verify_local_boundedness(f, ext, g),
        TheoremId::LocalBoundednessSigned => verify_local_boundedness_signed(f, ext, g, positivity_tol),
        _ => verify_tail_lemma(theorem, f, ext, g, positivity_tol),
    }
}
