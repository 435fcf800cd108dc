//! Symmetric jump kernels `K(x, y, t)` comparable to `|x - y|^{-n-2s}`.
//!
//! Three families are built in:
//!
//! * `FractionalLaplacian`: `C(n, s) |x - y|^{-n-2s}` with `C(n, s)` chosen so
//!   that the operator acts on plane waves `e^{i xi.x}` with symbol `|xi|^{2s}`;
//! * `ConstantMultiple`: `c |x - y|^{-n-2s}` with `c` in `[1/lambda, lambda]`;
//! * `Modulated`: `a(x, y, t) |x - y|^{-n-2s}` for a bounded symmetric
//!   modulation `a`. This is the extension point covering the full class.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure_finite, Error, Result};
use crate::quadrature::{adaptive_to_infinity, gauss16, graded_breaks, integrate_panels};

type ModulationFn = dyn Fn(&[f64], &[f64], f64) -> f64 + Send + Sync;

/// A symmetric modulation `a(x, y, t)` multiplying the base power law.
#[derive(Clone)]
pub struct Modulation {
    name: String,
    func: Arc<ModulationFn>,
    time_dependent: bool,
}

impl fmt::Debug for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Modulation")
            .field("name", &self.name)
            .field("time_dependent", &self.time_dependent)
            .finish()
    }
}

impl Modulation {
    /// Wraps an arbitrary function. Symmetry and range are not enforced here;
    /// use [`check_ellipticity`] and the symmetry checks to validate it.
    pub fn custom<F>(name: impl Into<String>, time_dependent: bool, f: F) -> Self
    where
        F: Fn(&[f64], &[f64], f64) -> f64 + Send + Sync + 'static,
    {
        Modulation {
            name: name.into(),
            func: Arc::new(f),
            time_dependent,
        }
    }

    /// Looks up a modulation from the built-in registry.
    ///
    /// * `sinusoidal`: `1 + amplitude * sin(t) * cos(sum x + sum y)`
    /// * `product_cosine`: `1 + amplitude * cos(sum x) * cos(sum y)`
    pub fn named(name: &str, amplitude: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&amplitude) {
            return Err(Error::InvalidParameter {
                name: "modulation_amplitude",
                value: amplitude,
                expected: "a value in [0, 1)",
            });
        }
        match name {
            "sinusoidal" => Ok(Modulation::custom("sinusoidal", true, move |x, y, t| {
                let sx: f64 = x.iter().sum();
                let sy: f64 = y.iter().sum();
                1.0 + amplitude * t.sin() * (sx + sy).cos()
            })),
            "product_cosine" => Ok(Modulation::custom("product_cosine", false, move |x, y, _| {
                let sx: f64 = x.iter().sum();
                let sy: f64 = y.iter().sum();
                1.0 + amplitude * sx.cos() * sy.cos()
            })),
            other => Err(Error::UnsupportedKernel(format!(
                "unknown modulation `{other}` (known: sinusoidal, product_cosine)"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_time_dependent(&self) -> bool {
        self.time_dependent
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64], t: f64) -> f64 {
        (self.func)(x, y, t)
    }
}

/// Built-in kernel families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    FractionalLaplacian,
    ConstantMultiple,
    Modulated,
}

impl KernelFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelFamily::FractionalLaplacian => "fractional_laplacian",
            KernelFamily::ConstantMultiple => "constant_multiple",
            KernelFamily::Modulated => "modulated",
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fractional_laplacian" => Ok(KernelFamily::FractionalLaplacian),
            "constant_multiple" => Ok(KernelFamily::ConstantMultiple),
            "modulated" => Ok(KernelFamily::Modulated),
            other => Err(Error::UnsupportedKernel(format!("unknown kernel family `{other}`"))),
        }
    }
}

/// An immutable, symmetric, possibly time-dependent jump kernel.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    dim: usize,
    order: f64,
    lambda: f64,
    family: KernelFamily,
    scale: f64,
    modulation: Option<Modulation>,
}

fn validate_common(dim: usize, order: f64, lambda: f64) -> Result<()> {
    if !(1..=2).contains(&dim) {
        return Err(Error::InvalidParameter {
            name: "dim_n",
            value: dim as f64,
            expected: "n in {1, 2}",
        });
    }
    ensure_finite("order_s", order)?;
    if !(order > 0.0 && order < 1.0) {
        return Err(Error::InvalidParameter {
            name: "order_s",
            value: order,
            expected: "s in (0, 1)",
        });
    }
    if !(lambda >= 1.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            expected: "lambda >= 1",
        });
    }
    Ok(())
}

impl KernelSpec {
    /// The normalised fractional Laplacian kernel. Its declared ellipticity
    /// constant is the smallest admissible one, `max(C, 1/C)`.
    pub fn fractional_laplacian(dim: usize, order: f64) -> Result<Self> {
        validate_common(dim, order, 1.0)?;
        let c = fractional_laplacian_constant(dim, order);
        Ok(KernelSpec {
            dim,
            order,
            lambda: c.max(1.0 / c),
            family: KernelFamily::FractionalLaplacian,
            scale: c,
            modulation: None,
        })
    }

    /// `c |x - y|^{-n-2s}` with declared ellipticity constant `lambda`.
    pub fn constant_multiple(dim: usize, order: f64, c: f64, lambda: f64) -> Result<Self> {
        validate_common(dim, order, lambda)?;
        ensure_finite("scale", c)?;
        if c <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "scale",
                value: c,
                expected: "a positive constant",
            });
        }
        Ok(KernelSpec {
            dim,
            order,
            lambda,
            family: KernelFamily::ConstantMultiple,
            scale: c,
            modulation: None,
        })
    }

    /// `a(x, y, t) |x - y|^{-n-2s}`.
    pub fn modulated(dim: usize, order: f64, lambda: f64, modulation: Modulation) -> Result<Self> {
        validate_common(dim, order, lambda)?;
        Ok(KernelSpec {
            dim,
            order,
            lambda,
            family: KernelFamily::Modulated,
            scale: 1.0,
            modulation: Some(modulation),
        })
    }

    /// Declares a (larger) ellipticity constant.
    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        validate_common(self.dim, self.order, lambda)?;
        self.lambda = lambda;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// Constant factor in front of the power law (`C(n,s)`, `c`, or 1).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn modulation(&self) -> Option<&Modulation> {
        self.modulation.as_ref()
    }

    /// `true` when `K` does not depend on `t`.
    pub fn is_autonomous(&self) -> bool {
        self.modulation.as_ref().is_none_or(|m| !m.is_time_dependent())
    }

    /// `true` when `K(x, y, t)` depends on `x - y` only.
    pub fn is_translation_invariant(&self) -> bool {
        self.modulation.is_none()
    }

    /// `K(x, y, t)`. Coincident points are an error.
    pub fn eval(&self, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
        if x.len() != self.dim || y.len() != self.dim {
            return Err(Error::Dimension(format!(
                "kernel of dimension {} evaluated at points of dimension {} and {}",
                self.dim,
                x.len(),
                y.len()
            )));
        }
        let d2 = dist2(x, y);
        if d2 == 0.0 {
            return Err(Error::SingularEvaluation { point: x.to_vec() });
        }
        Ok(self.eval_off_diagonal(x, y, d2, t))
    }

    /// Kernel value for `x != y` given the squared distance. No checks.
    #[inline]
    pub(crate) fn eval_off_diagonal(&self, x: &[f64], y: &[f64], d2: f64, t: f64) -> f64 {
        let base = self.scale * self.radial_power(d2);
        match &self.modulation {
            None => base,
            Some(m) => base * m.eval(x, y, t),
        }
    }

    /// `|z|^{-n-2s}` from `|z|^2`.
    #[inline]
    pub(crate) fn radial_power(&self, d2: f64) -> f64 {
        d2.powf(-0.5 * (self.dim as f64 + 2.0 * self.order))
    }

    /// `scale * a(x, x, t)`: the kernel prefactor on the diagonal, used by the
    /// singular-cell correction.
    #[inline]
    pub(crate) fn diagonal_prefactor(&self, x: &[f64], t: f64) -> f64 {
        match &self.modulation {
            None => self.scale,
            Some(m) => self.scale * m.eval(x, x, t),
        }
    }

    /// Prefactor `scale * a(x, y, t)` without the power law.
    #[inline]
    pub(crate) fn prefactor(&self, x: &[f64], y: &[f64], t: f64) -> f64 {
        match &self.modulation {
            None => self.scale,
            Some(m) => self.scale * m.eval(x, y, t),
        }
    }

    /// Kernel with `x, y` rescaled by `rho`: `K_rho(x, y, t) = K(rho x, rho y, t) rho^{n+2s}`.
    /// For translation-invariant families this is `K` itself.
    pub fn rescaled(&self, rho: f64) -> Self {
        let mut k = self.clone();
        if let Some(m) = &self.modulation {
            let inner = m.clone();
            k.modulation = Some(Modulation::custom(
                format!("{}@{rho}", inner.name()),
                inner.is_time_dependent(),
                move |x, y, t| {
                    let xs: Vec<f64> = x.iter().map(|v| v * rho).collect();
                    let ys: Vec<f64> = y.iter().map(|v| v * rho).collect();
                    inner.eval(&xs, &ys, t)
                },
            ));
        }
        k
    }
}

#[inline]
pub(crate) fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Outcome of [`check_ellipticity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticityReport {
    pub pass: bool,
    /// Largest value of `max(ratio, 1/ratio)` with `ratio = K |x-y|^{n+2s}`.
    pub worst_ratio: f64,
}

/// A sample `(x, y, t)` for kernel checks.
pub type KernelSample = (Vec<f64>, Vec<f64>, f64);

/// Checks `1/lambda <= K(x,y,t) |x-y|^{n+2s} <= lambda` on every sample.
pub fn check_ellipticity(k: &KernelSpec, samples: &[KernelSample]) -> Result<EllipticityReport> {
    if samples.is_empty() {
        return Err(Error::Precondition("ellipticity check needs at least one sample".into()));
    }
    let exponent = k.dim as f64 + 2.0 * k.order;
    let mut worst: f64 = 1.0;
    for (x, y, t) in samples {
        let v = k.eval(x, y, *t)?;
        let ratio = v * dist2(x, y).sqrt().powf(exponent);
        worst = worst.max(ratio.max(1.0 / ratio));
    }
    Ok(EllipticityReport {
        pass: worst.is_finite() && worst <= k.lambda * (1.0 + 1e-12),
        worst_ratio: worst,
    })
}

/// Deterministic random triples with `|x - y|` log-uniform in `[d_min, d_max]`,
/// `x` uniform in `[-box, box]^n` and `t` uniform in `t_range`.
pub fn sample_triples(
    dim: usize,
    count: usize,
    seed: u64,
    (d_min, d_max): (f64, f64),
    boxed: f64,
    (t_lo, t_hi): (f64, f64),
) -> Vec<KernelSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-boxed..=boxed)).collect();
            let d = (rng.gen_range(d_min.ln()..=d_max.ln())).exp();
            let dir: Vec<f64> = if dim == 1 {
                vec![if rng.gen_bool(0.5) { 1.0 } else { -1.0 }]
            } else {
                let th: f64 = rng.gen_range(0.0..2.0 * PI);
                vec![th.cos(), th.sin()]
            };
            let y: Vec<f64> = x.iter().zip(&dir).map(|(a, u)| a + d * u).collect();
            let t = if t_hi > t_lo { rng.gen_range(t_lo..t_hi) } else { t_lo };
            (x, y, t)
        })
        .collect()
}

/// Normalisation `C(n, s)` making `P.V. int (u(x) - u(y)) C |x-y|^{-n-2s} dy`
/// act on `cos(xi . x)` with eigenvalue `|xi|^{2s}`.
///
/// Computed as the reciprocal of `int_{R^n} (1 - cos y_1) |y|^{-n-2s} dy` by
/// quadrature; for `n = 2` the transverse direction is integrated out first.
pub fn fractional_laplacian_constant(dim: usize, order: f64) -> f64 {
    static CACHE: OnceLock<std::sync::Mutex<Vec<(usize, u64, f64)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = order.to_bits();
    if let Some(&(_, _, c)) = cache
        .lock()
        .expect("cache lock")
        .iter()
        .find(|(d, k, _)| *d == dim && *k == key)
    {
        return c;
    }
    let mut integral = one_minus_cos_moment(order);
    if dim == 2 {
        // int_R (1 + w^2)^{-(2+2s)/2} dw
        let transverse = adaptive_to_infinity(
            |w| (1.0 + w * w).powf(-1.0 - order),
            0.0,
            1.0,
            1e-15,
            1e-14,
            4000,
        )
        .expect("transverse integral converges")
        .value;
        integral *= 2.0 * transverse;
    }
    let c = 1.0 / integral;
    cache.lock().expect("cache lock").push((dim, key, c));
    c
}

/// `int_R (1 - cos y) |y|^{-1-2s} dy`.
fn one_minus_cos_moment(s: f64) -> f64 {
    let periods = 400usize;
    let two_pi = 2.0 * PI;
    let rule = gauss16();
    let f = |y: f64| {
        let h = (0.5 * y).sin();
        2.0 * h * h * y.powf(-1.0 - 2.0 * s)
    };
    // 1 - cos y = sum_k (-1)^{k+1} y^{2k} / (2k)! integrated exactly on [0, eps]
    let eps: f64 = 1e-2;
    let mut head = 0.0;
    let mut fact = 1.0;
    for k in 1..=5 {
        let m = 2 * k;
        fact *= ((m - 1) * m) as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        head += sign * eps.powf(m as f64 - 2.0 * s) / (fact * (m as f64 - 2.0 * s));
    }
    let first = graded_breaks(eps, two_pi, 0.0, eps);
    let mut body = head + integrate_panels(rule, &first, f);
    for k in 1..periods {
        let a = two_pi * k as f64;
        body += integrate_panels(rule, &[a, a + 0.5 * PI, a + PI, a + 1.5 * PI, a + two_pi], f);
    }
    let big_y = two_pi * periods as f64;
    // int_Y^inf y^{-1-2s} dy minus int_Y^inf cos(y) y^{-1-2s} dy, with the
    // oscillatory part expanded by repeated integration by parts (sin Y = 0, cos Y = 1).
    let tail = big_y.powf(-2.0 * s) / (2.0 * s) - cos_tail(big_y, 1.0 + 2.0 * s, 0);
    2.0 * (body + tail)
}

// int_Y^inf cos(y) y^{-a} dy for Y a multiple of 2 pi
fn cos_tail(y: f64, a: f64, depth: usize) -> f64 {
    if depth > 10 {
        return 0.0;
    }
    a * sin_tail(y, a + 1.0, depth + 1)
}

// int_Y^inf sin(y) y^{-a} dy for Y a multiple of 2 pi
fn sin_tail(y: f64, a: f64, depth: usize) -> f64 {
    if depth > 10 {
        return 0.0;
    }
    y.powf(-a) - a * cos_tail(y, a + 1.0, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_multiple_direct_formula() {
        let k = KernelSpec::constant_multiple(1, 0.5, 1.0, 1.0).unwrap();
        assert_eq!(k.eval(&[0.0], &[2.0], 0.3).unwrap(), 0.25);
        assert_eq!(k.eval(&[0.0], &[2.0], 7.0).unwrap(), 0.25);
    }

    #[test]
    fn diagonal_is_a_hard_error() {
        let k = KernelSpec::fractional_laplacian(1, 0.3).unwrap();
        let err = k.eval(&[0.4], &[0.4], 0.0).unwrap_err();
        assert!(matches!(err, Error::SingularEvaluation { .. }));
    }

    #[test]
    fn modulated_kernel_is_symmetric() {
        let m = Modulation::named("sinusoidal", 0.4).unwrap();
        let k = KernelSpec::modulated(1, 0.5, 2.0, m).unwrap();
        for t in [0.0, 0.7, 1.9, 3.3] {
            let a = k.eval(&[0.3], &[1.1], t).unwrap();
            let b = k.eval(&[1.1], &[0.3], t).unwrap();
            assert_eq!(a, b);
        }
        assert!(!k.is_autonomous());
    }

    #[test]
    fn ellipticity_of_unit_constant_multiple() {
        let k = KernelSpec::constant_multiple(1, 0.5, 1.0, 1.0).unwrap();
        let samples = sample_triples(1, 1000, 3, (1e-3, 1e3), 10.0, (0.0, 1.0));
        let r = check_ellipticity(&k, &samples).unwrap();
        assert!(r.pass);
        assert!((r.worst_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ellipticity_of_modulated_range() {
        // a in [0.6, 1.4] declared with lambda = 2
        let m = Modulation::named("product_cosine", 0.4).unwrap();
        let k = KernelSpec::modulated(1, 0.5, 2.0, m).unwrap();
        let samples = sample_triples(1, 2000, 5, (1e-3, 1e3), 10.0, (0.0, 1.0));
        assert!(check_ellipticity(&k, &samples).unwrap().pass);
    }

    #[test]
    fn ellipticity_detects_wrong_exponent() {
        // behaves like |x-y|^{-1-2*0.7} while declaring s = 0.5
        let m = Modulation::custom("mismatched", false, |x, y, _| {
            (x[0] - y[0]).abs().powf(2.0 * 0.5 - 2.0 * 0.7)
        });
        let k = KernelSpec::modulated(1, 0.5, 2.0, m).unwrap();
        let r = check_ellipticity(&k, &[(vec![0.0], vec![10.0], 0.0)]).unwrap();
        assert!(!r.pass);
        // hand value: 10^{0.4}
        assert!((r.worst_ratio - 2.511_886_431_509_58).abs() < 1e-9);
    }

    #[test]
    fn ellipticity_rejects_empty_samples() {
        let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
        assert!(matches!(check_ellipticity(&k, &[]), Err(Error::Precondition(_))));
    }

    #[test]
    fn invalid_orders_are_rejected() {
        assert!(KernelSpec::fractional_laplacian(1, 1.0).is_err());
        assert!(KernelSpec::fractional_laplacian(1, 0.0).is_err());
        assert!(KernelSpec::constant_multiple(1, 0.5, 1.0, 0.5).is_err());
        assert!(KernelSpec::fractional_laplacian(3, 0.5).is_err());
    }

    #[test]
    fn normalisation_at_half_is_one_over_pi() {
        // 1D, s = 1/2: int (1 - cos y) / y^2 dy = pi
        let c = fractional_laplacian_constant(1, 0.5);
        assert!((c - 1.0 / PI).abs() < 1e-9, "{c}");
    }
}
