//! Standalone inequalities: the algebraic lemma behind the Caccioppoli
//! estimates, the weighted Poincaré inequality and the fractional Sobolev
//! embedding (spatial and parabolic forms).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ratio_is_stable, refinement_ratio};
use crate::error::{Error, Result};
use crate::geometry::{nodes_in_ball, Grid, SpaceTimeField};

/// Which half of the algebraic lemma: `I` for `q > 1`, `Ii` for `q` in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgebraicPart {
    I,
    Ii,
}

impl AlgebraicPart {
    pub fn as_str(self) -> &'static str {
        match self {
            AlgebraicPart::I => "i",
            AlgebraicPart::Ii => "ii",
        }
    }

    /// Stated growth of the constant: `1 + q` for part i,
    /// `q/(1-q) + 1/q` for the second constant of part ii.
    pub fn stated_rate(self, q: f64) -> f64 {
        match self {
            AlgebraicPart::I => 1.0 + q,
            AlgebraicPart::Ii => q / (1.0 - q) + 1.0 / q,
        }
    }
}

impl fmt::Display for AlgebraicPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgebraicPart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "i" | "I" => Ok(AlgebraicPart::I),
            "ii" | "II" => Ok(AlgebraicPart::Ii),
            other => Err(Error::Precondition(format!("unknown lemma part `{other}` (expected i or ii)"))),
        }
    }
}

/// Both sides of the inequality at one tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraicCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`.
    pub slack: f64,
    pub holds: bool,
}

/// `(lhs, positive rhs term, weight of the subtracted constant)`, so that
/// `rhs = first - c * weight`. For part ii the first term excludes `c1`.
fn sides(part: AlgebraicPart, q: f64, a: f64, b: f64, alpha: f64, beta: f64) -> (f64, f64, f64) {
    match part {
        AlgebraicPart::I => {
            // (b/beta)^{(1-q)/2} written as (beta/b)^{(q-1)/2} so that a zero
            // weight gives zero instead of an infinite power.
            let e = 0.5 * (q - 1.0);
            let x = (beta / b).powf(e);
            let y = (alpha / a).powf(e);
            let lhs = (b - a) * (alpha.powf(q + 1.0) * a.powf(-q) - beta.powf(q + 1.0) * b.powf(-q));
            let first = alpha * beta / (q - 1.0) * (x - y) * (x - y);
            let weight = (beta - alpha) * (beta - alpha) * (x * x + y * y);
            (lhs, first, weight)
        }
        AlgebraicPart::Ii => {
            let e = 0.5 * (1.0 - q);
            let lhs = (b - a) * (alpha * alpha * a.powf(-q) - beta * beta * b.powf(-q));
            let d = beta * b.powf(e) - alpha * a.powf(e);
            let weight = (beta - alpha) * (beta - alpha) * (b.powf(1.0 - q) + a.powf(1.0 - q));
            (lhs, d * d, weight)
        }
    }
}

fn validate_tuple(part: AlgebraicPart, q: f64, a: f64, b: f64, alpha: f64, beta: f64) -> Result<()> {
    let q_ok = match part {
        AlgebraicPart::I => q > 1.0 && q.is_finite(),
        AlgebraicPart::Ii => q > 0.0 && q < 1.0,
    };
    if !q_ok {
        return Err(Error::InvalidParameter {
            name: "q",
            value: q,
            expected: match part {
                AlgebraicPart::I => "q > 1 for part i",
                AlgebraicPart::Ii => "q in (0, 1) for part ii",
            },
        });
    }
    for (name, v) in [("a", a), ("b", b)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter {
                name,
                value: v,
                expected: "a, b > 0",
            });
        }
    }
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter {
                name,
                value: v,
                expected: "alpha, beta >= 0",
            });
        }
    }
    Ok(())
}

fn holds(lhs: f64, first: f64, subtracted: f64) -> bool {
    let slack = lhs - first + subtracted;
    slack >= -1e-12 * (lhs.abs() + first.abs() + subtracted.abs())
}

/// Evaluates the inequality with candidate constants.
///
/// Part i reads
/// `(b-a)(alpha^{q+1} a^{-q} - beta^{q+1} b^{-q}) >= alpha beta/(q-1) [(b/beta)^{(1-q)/2} - (a/alpha)^{(1-q)/2}]^2
///  - c_q (beta-alpha)^2 [(b/beta)^{1-q} + (a/alpha)^{1-q}]`
/// and uses `constants[0]`. Part ii reads
/// `(b-a)(alpha^2 a^{-q} - beta^2 b^{-q}) >= c1 (beta b^{(1-q)/2} - alpha a^{(1-q)/2})^2 - c2 (beta-alpha)^2 (b^{1-q} + a^{1-q})`
/// with `constants = [c1, c2]`. Equality within a relative `1e-12` counts as holding.
pub fn check_algebraic_inequality(
    part: AlgebraicPart,
    q: f64,
    a: f64,
    b: f64,
    alpha: f64,
    beta: f64,
    constants: &[f64],
) -> Result<AlgebraicCheck> {
    validate_tuple(part, q, a, b, alpha, beta)?;
    let needed = match part {
        AlgebraicPart::I => 1,
        AlgebraicPart::Ii => 2,
    };
    if constants.len() != needed || constants.iter().any(|c| !(*c >= 0.0)) {
        return Err(Error::Precondition(format!(
            "part {part} needs {needed} nonnegative constant(s), got {constants:?}"
        )));
    }
    let (lhs, first, weight) = sides(part, q, a, b, alpha, beta);
    let (first, c) = match part {
        AlgebraicPart::I => (first, constants[0]),
        AlgebraicPart::Ii => (constants[0] * first, constants[1]),
    };
    let rhs = first - c * weight;
    Ok(AlgebraicCheck {
        lhs,
        rhs,
        slack: lhs - rhs,
        holds: holds(lhs, first, c * weight),
    })
}

/// Outcome of a brute-force constant search at one `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraicSearch {
    pub part: AlgebraicPart,
    pub q: f64,
    /// Fixed first constant of part ii (`q/(1-q)`); NaN for part i.
    pub c1: f64,
    /// Smallest scanned constant with no violation, or NaN if none.
    pub constant: f64,
    pub tuples: usize,
    /// Violations at the selected constant.
    pub violations: usize,
    pub stated_rate: f64,
    /// `constant <= stated_rate`.
    pub tracks_rate: bool,
}

/// Random tuples: `a, b, alpha, beta` log-uniform on `[1e-3, 1e3]`, with
/// `alpha = 0` in about 5% of draws.
fn random_tuples(count: usize, seed: u64) -> Vec<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut draw = || 10f64.powf(rng.gen_range(-3.0..3.0));
            let (a, b, mut alpha, beta) = (draw(), draw(), draw(), draw());
            if rng.gen::<f64>() < 0.05 {
                alpha = 0.0;
            }
            [a, b, alpha, beta]
        })
        .collect()
}

/// Scans the log grid `10^{-2} .. 10^4` (25 points per decade) for the
/// smallest constant without violations over `count` seeded random tuples.
/// For part ii the first constant is held at `q/(1-q)` and the second is
/// scanned.
pub fn search_algebraic_constants(part: AlgebraicPart, q: f64, count: usize, seed: u64) -> Result<AlgebraicSearch> {
    validate_tuple(part, q, 1.0, 1.0, 0.0, 0.0)?;
    let c1 = match part {
        AlgebraicPart::I => 1.0,
        AlgebraicPart::Ii => q / (1.0 - q),
    };
    let tuples: Vec<(f64, f64, f64)> = random_tuples(count, seed)
        .into_iter()
        .map(|[a, b, al, be]| {
            let (lhs, first, w) = sides(part, q, a, b, al, be);
            (lhs, c1 * first, w)
        })
        .collect();
    let mut selected = f64::NAN;
    let mut violations = count;
    for k in 0..=150 {
        let c = 10f64.powf(-2.0 + k as f64 / 25.0);
        let v = tuples.iter().filter(|&&(l, f, w)| !holds(l, f, c * w)).count();
        if v == 0 {
            selected = c;
            violations = 0;
            break;
        }
        violations = v;
    }
    let rate = part.stated_rate(q);
    Ok(AlgebraicSearch {
        part,
        q,
        c1: if part == AlgebraicPart::Ii { c1 } else { f64::NAN },
        constant: selected,
        tuples: count,
        violations,
        stated_rate: rate,
        tracks_rate: selected.is_finite() && selected <= rate,
    })
}

/// Radial weight `psi(x) = Psi(|x - x0|)` with `psi = 1` on `B_{r/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsiProfile {
    /// `psi = 1` on all of `B_r`.
    Constant,
    /// 1 on `B_{r/2}`, then linear down to 0 at `|x - x0| = r`.
    TruncatedCone,
}

impl PsiProfile {
    pub fn eval(self, rho: f64, r: f64) -> f64 {
        match self {
            PsiProfile::Constant => 1.0,
            PsiProfile::TruncatedCone => (2.0 * (1.0 - rho / r)).clamp(0.0, 1.0),
        }
    }
}

/// `C_emp = lhs / rhs` for a lemma evaluated on lattice sums.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub lhs: f64,
    pub rhs: f64,
    pub c_emp: f64,
    pub refinement_ratio: Option<f64>,
    pub degenerate: bool,
    pub pass: bool,
}

impl LemmaReport {
    fn from_sides(lhs: f64, rhs: f64, lhs_negligible: bool) -> Self {
        let (c_emp, degenerate) = if rhs <= 1e-300 {
            if lhs_negligible {
                (0.0, true)
            } else {
                (f64::INFINITY, false)
            }
        } else {
            (lhs / rhs, false)
        };
        LemmaReport {
            lhs,
            rhs,
            c_emp,
            refinement_ratio: None,
            degenerate,
            pass: c_emp.is_finite(),
        }
    }

    /// Fine report annotated with `C_fine / C_coarse`; passes iff both are
    /// finite and the ratio lies in `[1/2, 2]`.
    pub fn with_refinement(coarse: &LemmaReport, fine: &LemmaReport) -> LemmaReport {
        let ratio = refinement_ratio(coarse.c_emp, fine.c_emp);
        LemmaReport {
            refinement_ratio: Some(ratio),
            pass: coarse.pass && fine.pass && ratio_is_stable(ratio),
            ..fine.clone()
        }
    }
}

struct BallLattice {
    points: Vec<Vec<f64>>,
    nodes: Vec<usize>,
    cell: f64,
}

fn ball_lattice(grid: &Grid, x0: &[f64], r: f64) -> Result<BallLattice> {
    if x0.len() != grid.dim() {
        return Err(Error::Dimension(format!(
            "centre of dimension {} on a {}-dimensional grid",
            x0.len(),
            grid.dim()
        )));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter {
            name: "radius_r",
            value: r,
            expected: "r > 0",
        });
    }
    let nodes = nodes_in_ball(grid, x0, r);
    if nodes.len() < 2 {
        return Err(Error::EmptyRegion {
            region: format!("B_{r}({x0:?})"),
        });
    }
    Ok(BallLattice {
        points: nodes.iter().map(|&i| grid.point(i)).collect(),
        nodes,
        cell: grid.cell_volume(),
    })
}

/// `sum_{i != j} |f_i - f_j|^2 |x_i - x_j|^{-n-2s} w_ij h^{2n}` over the ball lattice.
fn double_sum(lat: &BallLattice, f: &[f64], s: f64, pair_weight: impl Fn(usize, usize) -> f64) -> f64 {
    let m = lat.nodes.len();
    let n = lat.points[0].len() as f64;
    let mut acc = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            let d2: f64 = lat.points[i].iter().zip(&lat.points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            let df = f[i] - f[j];
            acc += df * df * d2.powf(-0.5 * (n + 2.0 * s)) * pair_weight(i, j);
        }
    }
    2.0 * acc * lat.cell * lat.cell
}

/// Weighted Poincaré inequality on the nodes strictly inside `B_r(x0)`:
///
/// `C_emp = sum |f - f_psi|^2 psi h^n / (r^{2s} sum_{i != j} |f_i - f_j|^2 |x_i - x_j|^{-n-2s} min(psi_i, psi_j) h^{2n})`
/// with `f_psi` the `psi`-weighted mean.
pub fn check_weighted_poincare(
    grid: &Grid,
    f: &[f64],
    x0: &[f64],
    r: f64,
    s: f64,
    profile: PsiProfile,
) -> Result<LemmaReport> {
    check_order(s)?;
    let lat = ball_lattice(grid, x0, r)?;
    let vals: Vec<f64> = lat.nodes.iter().map(|&i| f[i]).collect();
    let psi: Vec<f64> = lat
        .points
        .iter()
        .map(|p| {
            let rho = p.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            profile.eval(rho, r)
        })
        .collect();
    let wsum: f64 = psi.iter().sum();
    let mean = vals.iter().zip(&psi).map(|(v, w)| v * w).sum::<f64>() / wsum;
    let lhs = vals.iter().zip(&psi).map(|(v, w)| (v - mean) * (v - mean) * w).sum::<f64>() * lat.cell;
    let semi = double_sum(&lat, &vals, s, |i, j| psi[i].min(psi[j]));
    let size = vals.iter().zip(&psi).map(|(v, w)| v * v * w).sum::<f64>() * lat.cell;
    Ok(LemmaReport::from_sides(lhs, r.powf(2.0 * s) * semi, lhs <= 1e-24 * size.max(1e-300)))
}

fn check_order(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter {
            name: "order_s",
            value: s,
            expected: "s in (0, 1)",
        });
    }
    Ok(())
}

/// `kappa* = n / (n - 2s)`; needs `n > 2s`.
fn critical_exponent(n: usize, s: f64) -> Result<f64> {
    check_order(s)?;
    let n = n as f64;
    if n <= 2.0 * s {
        return Err(Error::UnsupportedRegime(format!(
            "the Sobolev embedding needs n > 2s (n = {n}, s = {s})"
        )));
    }
    Ok(n / (n - 2.0 * s))
}

fn ball_mean(vals: &[f64], p: f64) -> f64 {
    vals.iter().map(|v| v.abs().powf(p)).sum::<f64>() / vals.len() as f64
}

/// Spatial fractional Sobolev embedding on `B_r(x0)`:
///
/// `C_emp = (mean |f|^{2 kappa*})^{1/kappa*} / (r^{2s-n} [f]^2_{H^s(B_r)} + mean |f|^2)`.
pub fn check_sobolev(grid: &Grid, f: &[f64], x0: &[f64], r: f64, s: f64) -> Result<LemmaReport> {
    let kstar = critical_exponent(grid.dim(), s)?;
    let lat = ball_lattice(grid, x0, r)?;
    let vals: Vec<f64> = lat.nodes.iter().map(|&i| f[i]).collect();
    let lhs = ball_mean(&vals, 2.0 * kstar).powf(1.0 / kstar);
    let semi = double_sum(&lat, &vals, s, |_, _| 1.0);
    let rhs = r.powf(2.0 * s - grid.dim() as f64) * semi + ball_mean(&vals, 2.0);
    Ok(LemmaReport::from_sides(lhs, rhs, lhs <= 1e-300))
}

/// Parabolic embedding on `B_r(x0) x (t1, t2)` for `kappa` in `[1, kappa*]`
/// (default `(n + 2s)/n`), using the stored levels strictly inside the
/// interval:
///
/// `C_emp = int mean |f|^{2 kappa} dt / ([r^{2s-n} int [f]^2 dt + int mean |f|^2 dt]
///          (sup_t mean |f|^{2 kappa* (kappa-1)/(kappa*-1)})^{(kappa*-1)/kappa*})`.
pub fn check_sobolev_parabolic(
    f: &SpaceTimeField,
    x0: &[f64],
    r: f64,
    t1: f64,
    t2: f64,
    kappa: Option<f64>,
) -> Result<LemmaReport> {
    let s = f.order();
    let n = f.grid().dim();
    let kstar = critical_exponent(n, s)?;
    let kappa = kappa.unwrap_or((n as f64 + 2.0 * s) / n as f64);
    if !(kappa >= 1.0 && kappa <= kstar) {
        return Err(Error::InvalidParameter {
            name: "kappa",
            value: kappa,
            expected: "kappa in [1, kappa*]",
        });
    }
    let levels = f.levels_in_open(t1, t2);
    if levels.is_empty() {
        return Err(Error::EmptyRegion {
            region: format!("time interval ({t1}, {t2})"),
        });
    }
    let lat = ball_lattice(f.grid(), x0, r)?;
    let times = f.times();
    let p_sup = 2.0 * kstar * (kappa - 1.0) / (kstar - 1.0);
    let (mut lhs, mut semi, mut l2, mut sup) = (0.0, 0.0, 0.0, 0.0f64);
    for &m in &levels {
        let lo = if m > 0 { times[m - 1] } else { times[m] };
        let hi = if m + 1 < times.len() { times[m + 1] } else { times[m] };
        let w = 0.5 * (hi - lo);
        let lvl = f.level(m);
        let vals: Vec<f64> = lat.nodes.iter().map(|&i| lvl[i]).collect();
        lhs += w * ball_mean(&vals, 2.0 * kappa);
        semi += w * double_sum(&lat, &vals, s, |_, _| 1.0);
        l2 += w * ball_mean(&vals, 2.0);
        sup = sup.max(ball_mean(&vals, p_sup));
    }
    let rhs = (r.powf(2.0 * s - n as f64) * semi + l2) * sup.powf((kstar - 1.0) / kstar);
    Ok(LemmaReport::from_sides(lhs, rhs, lhs <= 1e-300))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_tuples_are_equalities() {
        for (part, q, c) in [(AlgebraicPart::I, 2.5, vec![1.0]), (AlgebraicPart::Ii, 0.4, vec![0.5, 1.0])] {
            let r = check_algebraic_inequality(part, q, 1.7, 1.7, 0.3, 0.3, &c).unwrap();
            assert_eq!(r.lhs, 0.0);
            assert_eq!(r.rhs, 0.0);
            assert!(r.holds);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(check_algebraic_inequality(AlgebraicPart::I, 0.5, 1.0, 1.0, 0.0, 0.0, &[1.0]).is_err());
        assert!(check_algebraic_inequality(AlgebraicPart::Ii, 1.5, 1.0, 1.0, 0.0, 0.0, &[1.0, 1.0]).is_err());
        assert!(check_algebraic_inequality(AlgebraicPart::I, 2.0, -1.0, 1.0, 0.0, 0.0, &[1.0]).is_err());
        assert!(check_algebraic_inequality(AlgebraicPart::I, 2.0, 1.0, 1.0, -0.1, 0.0, &[1.0]).is_err());
    }

    #[test]
    fn zero_weight_is_finite() {
        let r = check_algebraic_inequality(AlgebraicPart::I, 3.0, 2.0, 0.5, 0.0, 1.0, &[2.0]).unwrap();
        assert!(r.lhs.is_finite() && r.rhs.is_finite());
    }

    #[test]
    fn search_finds_constants_below_the_stated_rates() {
        let s = search_algebraic_constants(AlgebraicPart::I, 2.0, 20_000, 1).unwrap();
        assert_eq!(s.violations, 0);
        assert!(s.tracks_rate, "{s:?}");
        let s = search_algebraic_constants(AlgebraicPart::Ii, 0.5, 20_000, 1).unwrap();
        assert_eq!(s.violations, 0);
        assert!(s.tracks_rate, "{s:?}");
    }

    #[test]
    fn poincare_constant_field_is_degenerate() {
        let g = Grid::new(1, 2.0, 81).unwrap();
        let f = vec![0.7; g.node_count()];
        let r = check_weighted_poincare(&g, &f, &[0.0], 1.0, 0.5, PsiProfile::TruncatedCone).unwrap();
        assert!(r.degenerate && r.pass);
    }

    #[test]
    fn poincare_is_scale_invariant() {
        let rho = 2.5;
        let g1 = Grid::new(1, 2.0, 101).unwrap();
        let g2 = Grid::new(1, 2.0 * rho, 101).unwrap();
        let f1 = g1.sample(|x| x[0] + 0.3 * x[0] * x[0]);
        let f2 = g2.sample(|x| x[0] / rho + 0.3 * (x[0] / rho).powi(2));
        let a = check_weighted_poincare(&g1, &f1, &[0.0], 1.0, 0.4, PsiProfile::TruncatedCone).unwrap();
        let b = check_weighted_poincare(&g2, &f2, &[0.0], rho, 0.4, PsiProfile::TruncatedCone).unwrap();
        assert!((a.c_emp - b.c_emp).abs() < 1e-10 * a.c_emp);
    }

    #[test]
    fn sobolev_exponent_and_regime() {
        assert_eq!(critical_exponent(2, 0.5).unwrap(), 2.0);
        assert!(matches!(critical_exponent(1, 0.5), Err(Error::UnsupportedRegime(_))));
    }

    #[test]
    fn sobolev_constant_field_has_unit_constant() {
        let g = Grid::new(1, 2.0, 81).unwrap();
        let f = vec![-1.3; g.node_count()];
        let r = check_sobolev(&g, &f, &[0.0], 1.0, 0.3).unwrap();
        assert!((r.c_emp - 1.0).abs() < 1e-12);
    }
}
