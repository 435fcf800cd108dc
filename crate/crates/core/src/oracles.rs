//! Reference solutions and reference quadrature.
//!
//! Nothing here calls into [`crate::quadrature`] or the assembly code paths
//! except [`symbol_eigencheck`], which exercises the assembled matrix against
//! an independently integrated exterior load.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exterior::ExteriorData;
use crate::geometry::Grid;
use crate::kernels::{KernelFamily, KernelSpec};
use crate::nonlocal_op::assemble;

/// Value with an empirical error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    pub value: f64,
    pub error_estimate: f64,
}

const TS_MAX_LEVEL: u32 = 12;
// weights and endpoint distances underflow beyond this abscissa
const TS_T_MAX: f64 = 6.5;

// Tanh–sinh on [a, b]. `f` receives (x, x - a, b - x) so integrands singular
// at an endpoint can use the accurate distance.
fn tanh_sinh<F: FnMut(f64, f64, f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<OracleEstimate> {
    let half = 0.5 * (b - a);
    let mut eval = |t: f64| -> f64 {
        let u = 0.5 * PI * t.sinh();
        let cu = u.cosh();
        let w = 0.5 * PI * t.cosh() / (cu * cu);
        // distance to the nearer endpoint, 1 - tanh|u| = 2 / (exp(2|u|) + 1)
        let d = half * 2.0 / ((2.0 * u.abs()).exp() + 1.0);
        if d <= 0.0 || w == 0.0 {
            return 0.0;
        }
        let (x, dl, dr) = if u < 0.0 { (a + d, d, b - a - d) } else { (b - d, b - a - d, d) };
        let v = f(x, dl, dr) * half * w;
        if v.is_finite() {
            v
        } else if x == a || x == b {
            // abscissa rounded onto a singular endpoint
            0.0
        } else {
            f64::NAN
        }
    };
    let mut h = 1.0;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= TS_T_MAX {
        sum += eval(k as f64 * h) + eval(-(k as f64) * h);
        k += 1;
    }
    let mut estimate = sum * h;
    let mut error = f64::INFINITY;
    for level in 1..=TS_MAX_LEVEL {
        h *= 0.5;
        let mut add = 0.0;
        let mut j = 1;
        while (j as f64) * h <= TS_T_MAX {
            add += eval(j as f64 * h) + eval(-(j as f64) * h);
            j += 2;
        }
        sum += add;
        let next = sum * h;
        if !next.is_finite() {
            return Err(Error::Divergence(format!("non-finite integrand on [{a}, {b}]")));
        }
        error = (next - estimate).abs();
        estimate = next;
        if level >= 3 && error <= tol {
            return Ok(OracleEstimate {
                value: estimate,
                error_estimate: error,
            });
        }
    }
    Err(Error::QuadratureBudget {
        estimate,
        error_estimate: error,
    })
}

/// Integration region for [`reference_quadrature`].
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// `[a, b]`
    Interval(f64, f64),
    /// `[a, inf)`
    UpperHalfLine(f64),
    /// `{|x - center| > radius}` on the line
    Exterior1d { center: f64, radius: f64 },
    /// `{|x - center| > radius}` in the plane, integrated in polar coordinates
    Exterior2d { center: [f64; 2], radius: f64 },
}

fn interval_with_points<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, singular: &[f64], tol: f64) -> Result<OracleEstimate> {
    let mut cuts: Vec<f64> = singular.iter().copied().filter(|p| *p > a && *p < b).collect();
    cuts.sort_by(|x, y| x.total_cmp(y));
    let mut pts = vec![a];
    pts.extend(cuts);
    pts.push(b);
    let pieces = (pts.len() - 1) as f64;
    let mut out = OracleEstimate {
        value: 0.0,
        error_estimate: 0.0,
    };
    for w in pts.windows(2) {
        let e = tanh_sinh(|x, _, _| f(x), w[0], w[1], tol / pieces)?;
        out.value += e.value;
        out.error_estimate += e.error_estimate;
    }
    Ok(out)
}

fn upper_half_line<F: FnMut(f64) -> f64>(f: &mut F, a: f64, singular: &[f64], tol: f64) -> Result<OracleEstimate> {
    // finite part up to the last singular point, then x = c + (1 - u) / u
    let c = singular.iter().copied().filter(|p| *p > a).fold(a, f64::max);
    let mut out = if c > a {
        interval_with_points(f, a, c, singular, 0.5 * tol)?
    } else {
        OracleEstimate {
            value: 0.0,
            error_estimate: 0.0,
        }
    };
    let scale = 1.0 + c.abs();
    let tail = tanh_sinh(
        |_, u, du| {
            // u in (0, 1); x = c + scale * (1 - u) / u; du = 1 - u
            let x = c + scale * du / u;
            if !x.is_finite() {
                return 0.0;
            }
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v * (scale / u) / u
            }
        },
        0.0,
        1.0,
        0.5 * tol,
    )?;
    out.value += tail.value;
    out.error_estimate += tail.error_estimate;
    Ok(out)
}

/// Independent adaptive quadrature (tanh–sinh with level doubling) of a
/// one-dimensional or polar two-dimensional integrand.
///
/// `singular` lists abscissae (or radii for [`Region::Exterior2d`]) where the
/// integrand is not smooth. Fails with a budget error carrying the best
/// estimate when `tol` cannot be reached.
pub fn reference_quadrature<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    region: &Region,
    singular: &[f64],
    tol: f64,
) -> Result<OracleEstimate> {
    match *region {
        Region::Interval(a, b) => interval_with_points(&mut |x| f(&[x]), a, b, singular, tol),
        Region::UpperHalfLine(a) => upper_half_line(&mut |x| f(&[x]), a, singular, tol),
        Region::Exterior1d { center, radius } => {
            let right: Vec<f64> = singular.iter().map(|p| p - center).collect();
            let left: Vec<f64> = singular.iter().map(|p| center - p).collect();
            let a = upper_half_line(&mut |z| f(&[center + z]), radius, &right, 0.5 * tol)?;
            let b = upper_half_line(&mut |z| f(&[center - z]), radius, &left, 0.5 * tol)?;
            Ok(OracleEstimate {
                value: a.value + b.value,
                error_estimate: a.error_estimate + b.error_estimate,
            })
        }
        Region::Exterior2d { center, radius } => {
            let mut inner_err: f64 = 0.0;
            let mut failure: Option<Error> = None;
            let outer = interval_with_points(
                &mut |theta| {
                    let (c, s) = (theta.cos(), theta.sin());
                    match upper_half_line(
                        &mut |rho| rho * f(&[center[0] + rho * c, center[1] + rho * s]),
                        radius,
                        singular,
                        0.1 * tol / (2.0 * PI),
                    ) {
                        Ok(e) => {
                            inner_err = inner_err.max(e.error_estimate);
                            e.value
                        }
                        Err(e) => {
                            failure.get_or_insert(e);
                            0.0
                        }
                    }
                },
                0.0,
                2.0 * PI,
                &[0.5 * PI, PI, 1.5 * PI],
                0.9 * tol,
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(OracleEstimate {
                value: outer.value,
                error_estimate: outer.error_estimate + 2.0 * PI * inner_err,
            })
        }
    }
}

/// Kind of reference solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleKind {
    /// Explicit Cauchy–Poisson kernel (`s = 1/2`).
    PoissonKernel,
    /// Numeric Fourier inversion of `exp(-t |xi|^{2s})`.
    FourierKernel,
    /// `u = value`.
    Constant(f64),
}

/// Closed-form or numerically inverted global solution of the fractional heat equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSolution {
    pub kind: OracleKind,
    pub dim: usize,
    pub order: f64,
}

impl OracleSolution {
    /// Heat kernel for `(-Delta)^s`; Poisson formula when `s = 1/2`.
    pub fn heat_kernel(dim: usize, order: f64) -> Self {
        let kind = if order == 0.5 {
            OracleKind::PoissonKernel
        } else {
            OracleKind::FourierKernel
        };
        OracleSolution { kind, dim, order }
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64> {
        match self.kind {
            OracleKind::Constant(c) => Ok(c),
            _ => fractional_heat_kernel(self.dim, self.order, x, t),
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "t",
            value: t,
            expected: "t > 0",
        })
    }
}

/// Heat kernel `p(x, t)` of `(-Delta)^s` in dimension 1 or 2.
pub fn fractional_heat_kernel(dim: usize, order: f64, x: &[f64], t: f64) -> Result<f64> {
    check_time(t)?;
    if x.len() != dim || !(1..=2).contains(&dim) {
        return Err(Error::Dimension(format!("heat kernel in dimension {dim} at a point of length {}", x.len())));
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if order == 0.5 {
        return Ok(if dim == 1 {
            t / (PI * (t * t + r2))
        } else {
            t / (2.0 * PI * (t * t + r2).powf(1.5))
        });
    }
    Ok(fourier_heat_kernel(dim, order, r2.sqrt(), t, 1e-12)?.value)
}

fn bessel_j0(z: f64) -> f64 {
    // J0(z) = (1/pi) int_0^pi cos(z sin th) dth; the trapezoid rule is exact up
    // to terms of order J_{2m}(z), negligible once m > z/2 + 20
    let m = (z.abs() as usize) + 40;
    let h = PI / m as f64;
    let mut s = 0.5 * (1.0 + 1.0);
    for j in 1..m {
        s += (z * (j as f64 * h).sin()).cos();
    }
    s * h / PI
}

/// Numeric Fourier inversion of `exp(-t |xi|^{2s})` at radius `rho`.
///
/// The error estimate is the sum of per-panel tanh–sinh doubling differences
/// plus a bound on the truncated tail.
pub fn fourier_heat_kernel(dim: usize, order: f64, rho: f64, t: f64, tol: f64) -> Result<OracleEstimate> {
    check_time(t)?;
    if !(order > 0.0 && order < 1.0) {
        return Err(Error::InvalidParameter {
            name: "order_s",
            value: order,
            expected: "s in (0, 1)",
        });
    }
    // exp(-t xi^{2s}) < 1e-18 beyond xi_max
    let xi_max = (42.0 / t).powf(0.5 / order);
    let width = (PI / rho.max(1e-300)).min(0.25 * xi_max).min(1.0);
    let panels = (xi_max / width).ceil() as usize;
    let per_panel = tol / panels as f64;
    let weight = |xi: f64| (-t * xi.powf(2.0 * order)).exp();
    let mut value = 0.0;
    let mut error = 0.0;
    for p in 0..panels {
        let (a, b) = (p as f64 * width, (p + 1) as f64 * width);
        let e = if dim == 1 {
            tanh_sinh(|xi, _, _| (xi * rho).cos() * weight(xi), a, b, per_panel)?
        } else {
            tanh_sinh(|xi, _, _| bessel_j0(xi * rho) * weight(xi) * xi, a, b, per_panel)?
        };
        value += e.value;
        error += e.error_estimate;
    }
    let norm = if dim == 1 { 1.0 / PI } else { 1.0 / (2.0 * PI) };
    let tail = weight(xi_max) * xi_max.powi(dim as i32);
    Ok(OracleEstimate {
        value: norm * value,
        error_estimate: norm * (error + tail),
    })
}

/// One row of [`symbol_eigencheck`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolRow {
    pub xi: f64,
    /// `(L_h u)(x_c) / u(x_c)` for the plane wave `u = cos(xi (x - x_c))`.
    pub eigenvalue: f64,
    /// `|xi|^{2s}`.
    pub reference: f64,
}

impl SymbolRow {
    /// `eigenvalue / reference`, 1 for the normalised fractional Laplacian.
    pub fn ratio(&self) -> f64 {
        if self.reference == 0.0 {
            if self.eigenvalue == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            self.eigenvalue / self.reference
        }
    }
}

// int_A^inf z^{-a} cos(xi z) dz: tanh–sinh over half periods up to Z, then the
// asymptotic expansion -Re[e^{i xi Z}/(i xi) sum_k (a)_k Z^{-a-k} / (i xi)^k].
fn oscillatory_power_tail(a_exp: f64, xi: f64, start: f64, tol: f64) -> Result<f64> {
    if xi == 0.0 {
        return Ok(start.powf(1.0 - a_exp) / (a_exp - 1.0));
    }
    let half = PI / xi;
    let z_end = start + half * ((200.0 / half).ceil() + 1.0);
    let panels = ((z_end - start) / half).round() as usize;
    let mut value = 0.0;
    for p in 0..panels {
        let (lo, hi) = (start + p as f64 * half, start + (p + 1) as f64 * half);
        value += tanh_sinh(|z, _, _| z.powf(-a_exp) * (xi * z).cos(), lo, hi, tol / panels as f64)?.value;
    }
    // complex arithmetic by hand: 1/(i xi)^k
    let (mut re_c, mut im_c) = (1.0, 0.0); // (a)_k / (i xi)^k
    let (mut re_s, mut im_s) = (0.0, 0.0);
    for k in 0..12 {
        let zk = z_end.powf(-a_exp - k as f64);
        re_s += re_c * zk;
        im_s += im_c * zk;
        // multiply by (a + k) / (i xi) = -(a + k) i / xi
        let f = (a_exp + k as f64) / xi;
        let (r, i) = (im_c * f, -re_c * f);
        re_c = r;
        im_c = i;
    }
    // e^{i xi Z} / (i xi) = (sin(xi Z) - i cos(xi Z)) / xi
    let (er, ei) = ((xi * z_end).sin() / xi, -(xi * z_end).cos() / xi);
    let tail_re = -(er * re_s - ei * im_s);
    Ok(value + tail_re)
}

/// Eigenvalues of the assembled operator on plane waves at the grid centre.
///
/// The exterior load of the plane wave is integrated independently of the
/// assembly code, so the check exercises the lattice sum, the singular-cell
/// correction and the exterior coupling coefficient together.
pub fn symbol_eigencheck(k: &KernelSpec, grid: &Grid, frequencies: &[f64]) -> Result<Vec<SymbolRow>> {
    if !k.is_translation_invariant() || k.family() == KernelFamily::Modulated {
        return Err(Error::UnsupportedKernel(format!(
            "symbol check needs a translation-invariant kernel, got {}",
            k.family().as_str()
        )));
    }
    if grid.dim() != 1 || k.dim() != 1 {
        return Err(Error::UnsupportedRegime("the plane-wave symbol check is implemented for n = 1".into()));
    }
    let op = assemble(k, grid, 0.0, &ExteriorData::zero())?;
    let c = grid.node_count() / 2;
    let xc = grid.axis_coord(c);
    let lp = grid.outer_half_width();
    let s = k.order();
    let scale = k.scale();
    frequencies
        .iter()
        .map(|&xi| {
            let u: Vec<f64> = (0..grid.node_count()).map(|i| (xi * (grid.axis_coord(i) - xc)).cos()).collect();
            let mu = op.apply_homogeneous(&u)[c];
            let a = 1.0 + 2.0 * s;
            let load = scale
                * (oscillatory_power_tail(a, xi, lp - xc, 1e-13)? + oscillatory_power_tail(a, xi, lp + xc, 1e-13)?);
            Ok(SymbolRow {
                xi,
                eigenvalue: mu - load,
                reference: xi.abs().powf(2.0 * s),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        let e = reference_quadrature(|x| x[0].powf(-0.5), &Region::Interval(0.0, 1.0), &[], 1e-12).unwrap();
        assert!((e.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn exterior_power_integral() {
        let e = reference_quadrature(|x| x[0].powi(-2), &Region::Exterior1d { center: 0.0, radius: 1.0 }, &[], 1e-12).unwrap();
        assert!((e.value - 2.0).abs() < 1e-10, "{e:?}");
    }

    #[test]
    fn planar_exterior_integral() {
        // int_{|x| > 1} |x|^{-3} dx = 2 pi
        let e = reference_quadrature(
            |x| (x[0] * x[0] + x[1] * x[1]).powf(-1.5),
            &Region::Exterior2d { center: [0.0, 0.0], radius: 1.0 },
            &[],
            1e-9,
        )
        .unwrap();
        assert!((e.value - 2.0 * PI).abs() < 1e-8, "{e:?}");
    }

    #[test]
    fn budget_error_carries_estimate() {
        let e = reference_quadrature(|x| (1000.0 * x[0]).sin().abs(), &Region::Interval(0.0, 10.0), &[], 1e-15).unwrap_err();
        assert!(matches!(e, Error::QuadratureBudget { .. }));
    }

    #[test]
    fn poisson_value_at_origin() {
        let p = fractional_heat_kernel(1, 0.5, &[0.0], 1.0).unwrap();
        assert!((p - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn poisson_formula_matches_fourier_inversion() {
        for (x, t) in [(0.0, 1.0), (0.7, 1.0), (3.0, 0.5), (10.0, 2.0)] {
            let closed = fractional_heat_kernel(1, 0.5, &[x], t).unwrap();
            let numeric = fourier_heat_kernel(1, 0.5, x, t, 1e-12).unwrap();
            assert!((closed - numeric.value).abs() < 1e-8, "x={x}: {closed} vs {numeric:?}");
        }
        for (x, t) in [(0.0, 1.0), (1.5, 1.0)] {
            let closed = fractional_heat_kernel(2, 0.5, &[x, 0.0], t).unwrap();
            let numeric = fourier_heat_kernel(2, 0.5, x, t, 1e-11).unwrap();
            assert!((closed - numeric.value).abs() < 1e-8, "x={x}: {closed} vs {numeric:?}");
        }
    }

    #[test]
    fn heat_kernel_self_similarity() {
        for s in [0.3, 0.5, 0.75] {
            for (x, t) in [(0.4, 2.0), (1.3, 0.5)] {
                let a = fractional_heat_kernel(1, s, &[x], t).unwrap();
                let b = t.powf(-0.5 / s) * fractional_heat_kernel(1, s, &[x * t.powf(-0.5 / s)], 1.0).unwrap();
                assert!((a - b).abs() < 1e-8, "s={s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn heat_kernel_has_unit_mass() {
        let h = 0.05;
        let w = 2.0e4;
        let n = (w / h) as i64;
        let mass: f64 = (-n..=n).map(|i| fractional_heat_kernel(1, 0.5, &[i as f64 * h], 1.0).unwrap() * h).sum();
        assert!((mass - 1.0).abs() < 1e-4, "{mass}");
    }

    #[test]
    fn nonpositive_time_is_rejected() {
        assert!(fractional_heat_kernel(1, 0.5, &[0.0], 0.0).is_err());
    }

    #[test]
    fn oscillatory_tail_matches_non_oscillatory_limit() {
        // xi -> 0 limit and a closed form: int_A^inf z^{-2} cos(xi z) dz for small xi ~ 1/A
        let v = oscillatory_power_tail(2.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        // int_A^inf z^{-2} cos(xi z) dz = cos(xi A)/A - xi (pi/2 - Si(xi A)); check against direct quadrature
        let direct = reference_quadrature(
            |z| z[0].powi(-2) * (1.3 * z[0]).cos(),
            &Region::Interval(1.0, 4000.0),
            &(1..4000).map(|k| k as f64).collect::<Vec<_>>(),
            1e-11,
        )
        .unwrap()
        .value;
        let got = oscillatory_power_tail(2.0, 1.3, 1.0, 1e-12).unwrap();
        // remainder beyond 4000 is bounded by 2/(1.3 * 4000^2)
        assert!((got - direct).abs() < 1e-7, "{got} vs {direct}");
    }

    #[test]
    fn symbol_zero_frequency_vanishes() {
        let g = Grid::new(1, 4.0, 257).unwrap();
        let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
        let rows = symbol_eigencheck(&k, &g, &[0.0]).unwrap();
        assert!(rows[0].eigenvalue.abs() < 1e-10, "{rows:?}");
    }

    #[test]
    fn symbol_check_rejects_modulated() {
        let g = Grid::new(1, 4.0, 65).unwrap();
        let m = crate::kernels::Modulation::named("sinusoidal", 0.2).unwrap();
        let k = KernelSpec::modulated(1, 0.5, 2.0, m).unwrap();
        assert!(matches!(symbol_eigencheck(&k, &g, &[1.0]), Err(Error::UnsupportedKernel(_))));
    }
}
