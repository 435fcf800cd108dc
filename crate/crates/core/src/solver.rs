//! Time stepping for `d_t u + L u = 0` and the discrete weak formulation.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure_finite, Error, Result};
use crate::exterior::ExteriorData;
use crate::geometry::{Grid, SpaceTimeField};
use crate::kernels::KernelSpec;
use crate::nonlocal_op::{assemble_with, AssembledOperator};
use crate::par::Execution;

/// Time discretisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    ImplicitEuler,
    CrankNicolson,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::ImplicitEuler => "implicit_euler",
            Scheme::CrankNicolson => "crank_nicolson",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "implicit_euler" => Ok(Scheme::ImplicitEuler),
            "crank_nicolson" => Ok(Scheme::CrankNicolson),
            other => Err(Error::Precondition(format!(
                "unknown scheme `{other}` (expected implicit_euler or crank_nicolson)"
            ))),
        }
    }
}

/// Everything needed to run one solve.
#[derive(Debug, Clone)]
pub struct SolveSpec {
    pub kernel: KernelSpec,
    pub grid: Grid,
    pub initial: Vec<f64>,
    pub exterior: ExteriorData,
    pub t_span: (f64, f64),
    pub dt: f64,
    pub scheme: Scheme,
    pub execution: Execution,
}

impl SolveSpec {
    pub fn new(
        kernel: KernelSpec,
        grid: Grid,
        initial: Vec<f64>,
        exterior: ExteriorData,
        t_span: (f64, f64),
        dt: f64,
    ) -> Result<Self> {
        let spec = SolveSpec {
            kernel,
            grid,
            initial,
            exterior,
            t_span,
            dt,
            scheme: Scheme::default(),
            execution: Execution::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("dt", self.dt)?;
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: self.dt,
                expected: "dt > 0",
            });
        }
        ensure_finite("t_start", self.t_span.0)?;
        ensure_finite("t_end", self.t_span.1)?;
        if !(self.t_span.1 > self.t_span.0) {
            return Err(Error::InvalidParameter {
                name: "t_end",
                value: self.t_span.1,
                expected: "t_end > t_start",
            });
        }
        if self.initial.len() != self.grid.node_count() {
            return Err(Error::Dimension(format!(
                "initial data has {} values for {} nodes",
                self.initial.len(),
                self.grid.node_count()
            )));
        }
        if self.kernel.dim() != self.grid.dim() {
            return Err(Error::Dimension("kernel and grid dimensions differ".into()));
        }
        if let Some(v) = self.initial.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "initial",
                value: *v,
                expected: "finite nodal values",
            });
        }
        self.exterior.check_integrable(self.kernel.order())
    }

    /// Stored time levels: `M = ceil(span / dt)` uniform steps.
    pub fn times(&self) -> Vec<f64> {
        time_levels(self.t_span, self.dt)
    }
}

pub(crate) fn time_levels(span: (f64, f64), dt: f64) -> Vec<f64> {
    let len = span.1 - span.0;
    let steps = ((len / dt) - 1e-9).ceil().max(1.0) as usize;
    let step = len / steps as f64;
    (0..=steps)
        .map(|m| if m == steps { span.1 } else { span.0 + m as f64 * step })
        .collect()
}

fn factor(op: &AssembledOperator, c: f64, time: f64) -> Result<Cholesky<f64, Dyn>> {
    let n = op.matrix().nrows();
    let a = DMatrix::<f64>::identity(n, n) + op.matrix() * c;
    Cholesky::new(a).ok_or_else(|| Error::LinearSolve {
        time,
        reason: "system matrix is not positive definite".into(),
    })
}

fn check_finite(v: &DVector<f64>, time: f64) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::LinearSolve {
            time,
            reason: "non-finite values in the solution".into(),
        })
    }
}

/// Runs the solve and returns all time levels, including `t_start`.
///
/// Implicit Euler solves `(I + dt M(t_{m+1})) u^{m+1} = u^m + dt b(t_{m+1})`.
/// Crank–Nicolson freezes the kernel at the midpoint and averages the loads.
pub fn solve(spec: &SolveSpec) -> Result<SpaceTimeField> {
    spec.validate()?;
    let times = spec.times();
    let exec = spec.execution;
    let n = spec.grid.node_count();
    let mut values = Vec::with_capacity(n * times.len());
    values.extend_from_slice(&spec.initial);
    let mut u = DVector::from_column_slice(&spec.initial);
    let autonomous = spec.kernel.is_autonomous();
    let ext_static = !spec.exterior.is_time_dependent();

    // cached operator and factorisation for autonomous kernels
    let mut cached: Option<(AssembledOperator, Cholesky<f64, Dyn>, f64)> = None;
    for m in 0..times.len() - 1 {
        let (ta, tb) = (times[m], times[m + 1]);
        let dt = tb - ta;
        let t_frozen = match spec.scheme {
            Scheme::ImplicitEuler => tb,
            Scheme::CrankNicolson => 0.5 * (ta + tb),
        };
        let c = match spec.scheme {
            Scheme::ImplicitEuler => dt,
            Scheme::CrankNicolson => 0.5 * dt,
        };
        let reuse = autonomous
            && cached
                .as_ref()
                .map(|(_, _, cc)| (cc - c).abs() <= 1e-14 * c)
                .unwrap_or(false);
        if !reuse {
            let op = assemble_with(&spec.kernel, &spec.grid, t_frozen, &spec.exterior, exec)?;
            let chol = factor(&op, c, t_frozen)?;
            cached = Some((op, chol, c));
        }
        let (op, chol, _) = cached.as_ref().expect("operator assembled above");
        let load = |t: f64| -> Result<Vec<f64>> {
            if ext_static || t == op.time() {
                Ok(op.exterior_load().to_vec())
            } else {
                op.load_for(&spec.exterior, t, exec)
            }
        };
        let rhs = match spec.scheme {
            Scheme::ImplicitEuler => {
                let b = load(tb)?;
                let mut r = u.clone();
                for (ri, bi) in r.iter_mut().zip(&b) {
                    *ri += dt * bi;
                }
                r
            }
            Scheme::CrankNicolson => {
                let (b0, b1) = (load(ta)?, load(tb)?);
                let mu = op.matrix() * &u;
                let mut r = u.clone();
                for i in 0..n {
                    r[i] += -c * mu[i] + c * (b0[i] + b1[i]);
                }
                r
            }
        };
        u = chol.solve(&rhs);
        check_finite(&u, tb)?;
        values.extend(u.iter());
    }
    SpaceTimeField::new(spec.grid, spec.kernel.order(), times, values)
}

/// Nodewise `max(u, 0)`.
pub fn positive_part(f: &SpaceTimeField) -> SpaceTimeField {
    f.map(|v| v.max(0.0))
}

/// Nodewise `max(-u, 0)`.
pub fn negative_part(f: &SpaceTimeField) -> SpaceTimeField {
    f.map(|v| (-v).max(0.0))
}

/// Smooth space-time bump `A eta(|x - c| / rho) eta((t - tc) / tau)` with
/// `eta(z) = exp(-1 / (1 - z^2))` on `|z| < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub center: Vec<f64>,
    pub radius: f64,
    pub t_center: f64,
    pub t_half_width: f64,
    pub amplitude: f64,
}

fn eta(z: f64) -> f64 {
    if z.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - z * z)).exp()
    }
}

impl TestFunction {
    pub fn new(center: Vec<f64>, radius: f64, t_center: f64, t_half_width: f64) -> Result<Self> {
        if !(radius > 0.0) || !(t_half_width > 0.0) {
            return Err(Error::InvalidParameter {
                name: "test_support",
                value: radius.min(t_half_width),
                expected: "positive spatial radius and temporal half-width",
            });
        }
        Ok(TestFunction {
            center,
            radius,
            t_center,
            t_half_width,
            amplitude: 1.0,
        })
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        let d: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        self.amplitude * eta(d / self.radius) * eta((t - self.t_center) / self.t_half_width)
    }

    /// Errors unless the support lies inside the grid nodes' box and the
    /// open time range of the field.
    pub fn check_support(&self, grid: &Grid, t_first: f64, t_last: f64) -> Result<()> {
        if self.center.len() != grid.dim() {
            return Err(Error::Dimension("test function and grid dimensions differ".into()));
        }
        let l = grid.half_width();
        let inside = self.center.iter().all(|c| c - self.radius >= -l && c + self.radius <= l);
        if !inside {
            return Err(Error::Precondition(format!(
                "test support B_{}({:?}) leaks outside the grid [-{l}, {l}]^n",
                self.radius, self.center
            )));
        }
        if self.t_center - self.t_half_width < t_first || self.t_center + self.t_half_width > t_last {
            return Err(Error::Precondition(format!(
                "test support ({}, {}) leaks outside the time range [{t_first}, {t_last}]",
                self.t_center - self.t_half_width,
                self.t_center + self.t_half_width
            )));
        }
        Ok(())
    }
}

/// Seeded battery of nonnegative bump tests supported inside
/// `[-L, L]^n x (t_first, t_last)`.
pub fn test_battery(grid: &Grid, t_range: (f64, f64), count: usize, seed: u64) -> Vec<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = grid.half_width();
    let span = t_range.1 - t_range.0;
    (0..count)
        .map(|_| {
            let radius = l * rng.gen_range(0.15..0.5);
            let center: Vec<f64> = (0..grid.dim())
                .map(|_| rng.gen_range(-(l - radius)..=(l - radius)))
                .collect();
            let tau = span * rng.gen_range(0.1..0.45);
            let tc = rng.gen_range(t_range.0 + tau..=t_range.1 - tau);
            TestFunction {
                center,
                radius,
                t_center: tc,
                t_half_width: tau,
                amplitude: 1.0,
            }
        })
        .collect()
}

/// Value of the discrete weak form and the sum of absolute contributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakResidual {
    pub value: f64,
    pub scale: f64,
}

impl WeakResidual {
    /// `value / scale`, or 0 when every contribution vanishes.
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.value / self.scale
        } else {
            0.0
        }
    }
}

/// Precomputed `r^m = M(t_m) u^m - b(t_m)` for one field; evaluates
///
/// ```text
/// R(phi) = - sum_{m<M} h^n u^m . (phi^{m+1} - phi^m) + sum_{m>=1} (t_m - t_{m-1}) h^n phi^m . r^m
/// ```
///
/// which is the exact adjoint of the implicit Euler step, so solver output
/// has residual zero up to rounding.
#[derive(Debug, Clone)]
pub struct WeakForm {
    field: SpaceTimeField,
    residuals: Vec<f64>,
}

impl WeakForm {
    pub fn new(f: &SpaceTimeField, k: &KernelSpec, ext: &ExteriorData, exec: Execution) -> Result<Self> {
        let grid = *f.grid();
        let n = grid.node_count();
        let levels = f.level_count();
        let mut residuals = vec![0.0; n * levels];
        let mut op: Option<AssembledOperator> = None;
        for m in 1..levels {
            let t = f.times()[m];
            if op.is_none() || !k.is_autonomous() {
                op = Some(assemble_with(k, &grid, t, ext, exec)?);
            }
            let a = op.as_ref().expect("assembled above");
            let load = if t == a.time() || !ext.is_time_dependent() {
                a.exterior_load().to_vec()
            } else {
                a.load_for(ext, t, exec)?
            };
            let r = a.apply_with_load(f.level(m), &load);
            residuals[m * n..(m + 1) * n].copy_from_slice(&r);
        }
        Ok(WeakForm {
            field: f.clone(),
            residuals,
        })
    }

    pub fn field(&self) -> &SpaceTimeField {
        &self.field
    }

    pub fn evaluate(&self, test: &TestFunction) -> Result<WeakResidual> {
        let f = &self.field;
        test.check_support(f.grid(), f.t_first(), f.t_last())?;
        let grid = f.grid();
        let n = grid.node_count();
        let vol = grid.cell_volume();
        let coords = grid.coordinates();
        let dim = grid.dim();
        let times = f.times();
        let phi_at = |m: usize| -> Vec<f64> {
            (0..n)
                .map(|i| test.eval(&coords[i * dim..(i + 1) * dim], times[m]))
                .collect()
        };
        let mut value = 0.0;
        let mut scale = 0.0;
        let mut prev = phi_at(0);
        for m in 1..times.len() {
            let cur = phi_at(m);
            let u_prev = f.level(m - 1);
            let r = &self.residuals[m * n..(m + 1) * n];
            let dt = times[m] - times[m - 1];
            for i in 0..n {
                let time_term = -vol * u_prev[i] * (cur[i] - prev[i]);
                let space_term = dt * vol * cur[i] * r[i];
                value += time_term + space_term;
                scale += time_term.abs() + space_term.abs();
            }
            prev = cur;
        }
        Ok(WeakResidual { value, scale })
    }
}

/// One-shot weak residual of `f` against `test`.
pub fn weak_residual(f: &SpaceTimeField, k: &KernelSpec, ext: &ExteriorData, test: &TestFunction) -> Result<f64> {
    Ok(WeakForm::new(f, k, ext, Execution::default())?.evaluate(test)?.value)
}
