//! Exterior data: the values `g(y, t)` of the solution outside the
//! computational domain, with a power-series model of the far field.
//!
//! The far-field model `g(y, t) ~ sum_j c_j(t) |y|^{gamma_j}` is used beyond
//! the collar, where integrals against `|x - y|^{-n-2s}` are evaluated in
//! closed form. The leading exponent is the decay exponent `gamma`; all
//! exterior integrals require `gamma < 2s`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ValueFn = dyn Fn(&[f64], f64) -> f64 + Send + Sync;
type FarFn = dyn Fn(f64) -> Vec<FarTerm> + Send + Sync;

/// One term `coefficient * |y|^exponent` of the far-field model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarTerm {
    pub coefficient: f64,
    pub exponent: f64,
}

/// Prescribed values of `u` on the complement of the grid domain.
#[derive(Clone)]
pub struct ExteriorData {
    name: String,
    value: Arc<ValueFn>,
    far: Arc<FarFn>,
    decay_exponent: f64,
    far_field_coefficient: f64,
    time_dependent: bool,
    radial_breaks: Vec<f64>,
}

impl fmt::Debug for ExteriorData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExteriorData")
            .field("name", &self.name)
            .field("decay_exponent", &self.decay_exponent)
            .field("far_field_coefficient", &self.far_field_coefficient)
            .field("time_dependent", &self.time_dependent)
            .field("radial_breaks", &self.radial_breaks)
            .finish()
    }
}

fn norm(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl ExteriorData {
    /// General constructor.
    ///
    /// `far(t)` returns the far-field terms at time `t`; `decay_exponent` is
    /// the growth exponent `gamma` of `|g(y, t)| <= C (1 + |y|)^gamma`, with
    /// `far_field_coefficient` the constant `C`. `radial_breaks` lists radii
    /// `|y|` where `g` fails to be smooth.
    pub fn new<V, F>(
        name: impl Into<String>,
        value: V,
        far: F,
        decay_exponent: f64,
        far_field_coefficient: f64,
        time_dependent: bool,
        radial_breaks: Vec<f64>,
    ) -> Self
    where
        V: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        F: Fn(f64) -> Vec<FarTerm> + Send + Sync + 'static,
    {
        ExteriorData {
            name: name.into(),
            value: Arc::new(value),
            far: Arc::new(far),
            decay_exponent,
            far_field_coefficient,
            time_dependent,
            radial_breaks,
        }
    }

    pub fn zero() -> Self {
        ExteriorData::new("zero", |_, _| 0.0, |_| Vec::new(), f64::NEG_INFINITY, 0.0, false, Vec::new())
    }

    /// `g = c`.
    pub fn constant(c: f64) -> Self {
        ExteriorData::new(
            format!("constant({c})"),
            move |_, _| c,
            move |_| {
                vec![FarTerm {
                    coefficient: c,
                    exponent: 0.0,
                }]
            },
            0.0,
            c.abs(),
            false,
            Vec::new(),
        )
    }

    /// `g = a (1 + |y|)^gamma`, far field expanded binomially in `1/|y|`.
    pub fn power_law(a: f64, gamma: f64) -> Self {
        ExteriorData::new(
            format!("power_law({a}, {gamma})"),
            move |y, _| a * (1.0 + norm(y)).powf(gamma),
            move |_| binomial_far_terms(a, gamma),
            gamma,
            a.abs(),
            false,
            Vec::new(),
        )
    }

    /// `g = t * a (1 + |y|)^gamma`, increasing in time when `a > 0`.
    pub fn power_law_ramp(a: f64, gamma: f64) -> Self {
        ExteriorData::new(
            format!("power_law_ramp({a}, {gamma})"),
            move |y, t| t * a * (1.0 + norm(y)).powf(gamma),
            move |t| binomial_far_terms(t * a, gamma),
            gamma,
            a.abs(),
            true,
            Vec::new(),
        )
    }

    /// `g = value` on the closed shell `r_in <= |y| <= r_out`, zero elsewhere.
    pub fn annulus(value: f64, r_in: f64, r_out: f64) -> Self {
        ExteriorData::new(
            format!("annulus({value}, {r_in}, {r_out})"),
            move |y, _| {
                let r = norm(y);
                if r >= r_in && r <= r_out {
                    value
                } else {
                    0.0
                }
            },
            |_| Vec::new(),
            f64::NEG_INFINITY,
            value.abs(),
            false,
            vec![r_in, r_out],
        )
    }

    /// The half-Laplacian heat kernel `p(y, t + shift)` (`s = 1/2`):
    /// `t / (pi (t^2 + y^2))` in one dimension and
    /// `t / (2 pi (t^2 + |y|^2)^{3/2})` in two.
    pub fn poisson_kernel(dim: usize, shift: f64) -> Self {
        let value = move |y: &[f64], t: f64| {
            let tt = t + shift;
            let r2: f64 = y.iter().map(|v| v * v).sum();
            if dim == 1 {
                tt / (PI * (tt * tt + r2))
            } else {
                tt / (2.0 * PI * (tt * tt + r2).powf(1.5))
            }
        };
        let far = move |t: f64| {
            let tt = t + shift;
            // (t^2 + r^2)^{-p} = r^{-2p} sum_j binom(-p, j) (t^2/r^2)^j
            let (pref, p) = if dim == 1 {
                (tt / PI, 1.0)
            } else {
                (tt / (2.0 * PI), 1.5)
            };
            let mut out = Vec::new();
            let mut binom = 1.0;
            for j in 0..12 {
                out.push(FarTerm {
                    coefficient: pref * binom * (tt * tt).powi(j),
                    exponent: -2.0 * p - 2.0 * j as f64,
                });
                binom *= (-p - j as f64) / (j as f64 + 1.0);
            }
            out
        };
        let gamma = if dim == 1 { -2.0 } else { -3.0 };
        ExteriorData::new(format!("poisson_kernel(n={dim}, shift={shift})"), value, far, gamma, 1.0, true, Vec::new())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn value(&self, y: &[f64], t: f64) -> f64 {
        (self.value)(y, t)
    }

    /// Far-field terms at time `t`.
    pub fn far_terms(&self, t: f64) -> Vec<FarTerm> {
        (self.far)(t)
    }

    /// Far-field model evaluated at radius `r`.
    pub fn far_value(&self, r: f64, t: f64) -> f64 {
        self.far_terms(t)
            .iter()
            .map(|term| term.coefficient * r.powf(term.exponent))
            .sum()
    }

    pub fn decay_exponent(&self) -> f64 {
        self.decay_exponent
    }

    pub fn far_field_coefficient(&self) -> f64 {
        self.far_field_coefficient
    }

    pub fn is_time_dependent(&self) -> bool {
        self.time_dependent
    }

    pub fn radial_breaks(&self) -> &[f64] {
        &self.radial_breaks
    }

    /// Fails unless the tail integrals against `|y|^{-n-2s}` converge, i.e. `gamma < 2s`.
    pub fn check_integrable(&self, order: f64) -> Result<()> {
        let worst = self
            .far_terms(0.0)
            .iter()
            .filter(|t| t.coefficient != 0.0)
            .map(|t| t.exponent)
            .fold(self.decay_exponent, f64::max);
        if worst >= 2.0 * order {
            return Err(Error::Divergence(format!(
                "exterior data `{}` grows like |y|^{worst}; tail integrals need decay exponent < 2s = {}",
                self.name,
                2.0 * order
            )));
        }
        Ok(())
    }

    /// `lambda * g`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let inner = self.clone();
        let far_inner = self.clone();
        ExteriorData {
            name: format!("{lambda}*{}", self.name),
            value: Arc::new(move |y, t| lambda * inner.value(y, t)),
            far: Arc::new(move |t| {
                far_inner
                    .far_terms(t)
                    .into_iter()
                    .map(|term| FarTerm {
                        coefficient: lambda * term.coefficient,
                        ..term
                    })
                    .collect()
            }),
            far_field_coefficient: lambda.abs() * self.far_field_coefficient,
            ..self.clone()
        }
    }

    /// `g_1 + g_2`.
    pub fn sum(&self, other: &Self) -> Self {
        let (a, b) = (self.clone(), other.clone());
        let (fa, fb) = (self.clone(), other.clone());
        let mut breaks = self.radial_breaks.clone();
        breaks.extend_from_slice(&other.radial_breaks);
        ExteriorData {
            name: format!("{}+{}", self.name, other.name),
            value: Arc::new(move |y, t| a.value(y, t) + b.value(y, t)),
            far: Arc::new(move |t| {
                let mut v = fa.far_terms(t);
                v.extend(fb.far_terms(t));
                v
            }),
            decay_exponent: self.decay_exponent.max(other.decay_exponent),
            far_field_coefficient: self.far_field_coefficient + other.far_field_coefficient,
            time_dependent: self.time_dependent || other.time_dependent,
            radial_breaks: breaks,
        }
    }

    /// `g + c`.
    pub fn shifted(&self, c: f64) -> Self {
        self.sum(&ExteriorData::constant(c))
    }

    /// `max(g, 0)`. The far field keeps the model when it is nonnegative at
    /// `reference_radius` and drops it otherwise.
    pub fn positive_part(&self, reference_radius: f64) -> Self {
        self.signed_part(1.0, reference_radius)
    }

    /// `max(-g, 0)`.
    pub fn negative_part(&self, reference_radius: f64) -> Self {
        self.signed_part(-1.0, reference_radius)
    }

    fn signed_part(&self, sign: f64, reference_radius: f64) -> Self {
        let inner = self.clone();
        let far_inner = self.clone();
        ExteriorData {
            name: format!("({}{})_+", if sign < 0.0 { "-" } else { "" }, self.name),
            value: Arc::new(move |y, t| (sign * inner.value(y, t)).max(0.0)),
            far: Arc::new(move |t| {
                if sign * far_inner.far_value(reference_radius, t) > 0.0 {
                    far_inner
                        .far_terms(t)
                        .into_iter()
                        .map(|term| FarTerm {
                            coefficient: sign * term.coefficient,
                            ..term
                        })
                        .collect()
                } else {
                    Vec::new()
                }
            }),
            ..self.clone()
        }
    }
}

/// `a (1 + r)^gamma = a r^gamma sum_j binom(gamma, j) r^{-j}`.
fn binomial_far_terms(a: f64, gamma: f64) -> Vec<FarTerm> {
    let mut out = Vec::with_capacity(16);
    let mut binom = 1.0;
    for j in 0..16 {
        if binom == 0.0 {
            break;
        }
        out.push(FarTerm {
            coefficient: a * binom,
            exponent: gamma - j as f64,
        });
        binom *= (gamma - j as f64) / (j as f64 + 1.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn far_models_match_values_at_large_radius() {
        let cases = [
            ExteriorData::constant(2.5),
            ExteriorData::power_law(1.5, -0.7),
            ExteriorData::power_law_ramp(0.5, -1.2),
            ExteriorData::poisson_kernel(1, 1.0),
            ExteriorData::poisson_kernel(2, 0.5),
        ];
        for g in &cases {
            for r in [60.0, 200.0] {
                let y = if g.name().contains("n=2") { vec![r * 0.6, r * 0.8] } else { vec![-r] };
                let exact = g.value(&y, 1.3);
                let model = g.far_value(r, 1.3);
                assert!(
                    (exact - model).abs() <= 1e-12 * exact.abs().max(1e-300),
                    "{}: {exact} vs {model}",
                    g.name()
                );
            }
        }
    }

    #[test]
    fn integrability_gate() {
        assert!(ExteriorData::power_law(1.0, 1.2).check_integrable(0.5).is_err());
        assert!(ExteriorData::power_law(1.0, 0.9).check_integrable(0.5).is_ok());
        assert!(ExteriorData::constant(3.0).check_integrable(0.1).is_ok());
        assert!(ExteriorData::annulus(-5.0, 6.0, 8.0).check_integrable(0.2).is_ok());
    }

    #[test]
    fn signed_parts() {
        let g = ExteriorData::constant(-3.0);
        assert_eq!(g.positive_part(100.0).value(&[50.0], 0.0), 0.0);
        assert_eq!(g.negative_part(100.0).value(&[50.0], 0.0), 3.0);
        assert_eq!(g.negative_part(100.0).far_value(100.0, 0.0), 3.0);
        assert!(g.positive_part(100.0).far_terms(0.0).is_empty());
        let s = g.sum(&ExteriorData::constant(1.0)).scaled(2.0);
        assert_eq!(s.value(&[10.0], 0.0), -4.0);
        assert_eq!(s.far_value(10.0, 0.0), -4.0);
    }
}
