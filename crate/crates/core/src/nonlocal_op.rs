//! Discretisation of `L u(x) = P.V. int (u(x) - u(y)) K(x, y, t) dy`.
//!
//! On a grid with spacing `h` the discrete operator is
//!
//! ```text
//! (L_h u)_i = sum_{j != i} (u_i - u_j) K(x_i, x_j, t) h^n
//!           + singular-cell correction
//!           + int_{R^n \ Omega} (u_i - g(y, t)) K(x_i, y, t) dy
//! ```
//!
//! The correction replaces the omitted `j = i` cell by
//! `-(1/2) Delta_h u_i * int_cell z_1^2 K(x_i, x_i + z, t) dz`; the first
//! order term cancels by symmetry. The exterior integral is split into a
//! collar `L' < |y|_inf < R_out` (graded Gauss–Legendre panels) and a far
//! field beyond `R_out` where the power-series model of the exterior data is
//! integrated in closed form (one dimension) or by a radial substitution
//! (two dimensions).
//!
//! The assembled matrix is symmetric with nonpositive off-diagonal entries
//! and `M_ii = sum_{j != i} |M_ij| + e_i` where `e_i >= 0` is the exterior
//! coupling coefficient, so `I + dt M` is an M-matrix.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exterior::{ExteriorData, FarTerm};
use crate::geometry::Grid;
use crate::kernels::{dist2, KernelSpec};
use crate::par::Execution;
use crate::quadrature::{
    adaptive_breaks, adaptive_to_infinity, gauss16, gauss8, graded_breaks, integrate_panels,
    with_extra_breaks, QuadEstimate,
};

/// Collar extent relative to the grid domain.
pub const COLLAR_FACTOR: f64 = 10.0;

/// `int_{[-h/2, h/2]^n} z_1^2 |z|^{-n-2s} dz`.
pub fn singular_moment(dim: usize, order: f64, h: f64) -> f64 {
    let e = 2.0 - 2.0 * order;
    match dim {
        1 => 2.0 * (0.5 * h).powf(e) / e,
        _ => {
            // (1/2) int_square |z|^{-2s} = (1/2)(h/2)^{2-2s} * 8/(2-2s) int_0^{pi/4} sec^{2-2s}
            let angular = gauss16().integrate(0.0, 0.25 * PI, |th: f64| th.cos().powf(-e));
            0.5 * (0.5 * h).powf(e) * 8.0 / e * angular
        }
    }
}

/// Outer radius (sup-norm) of the collar quadrature.
pub fn collar_outer(grid: &Grid, ext: Option<&ExteriorData>, extra: f64) -> f64 {
    let inner = grid.outer_half_width();
    let mut outer = COLLAR_FACTOR * inner;
    if let Some(g) = ext {
        for &r in g.radial_breaks() {
            if r.is_finite() {
                outer = outer.max(1.5 * r);
            }
        }
    }
    outer.max(extra)
}

/// Quadrature nodes (flattened with stride `dim`) and weights on the collar
/// `inner < |y|_inf < outer`, graded towards `x`.
#[derive(Debug, Clone, Default)]
pub(crate) struct CollarRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

pub(crate) fn collar_rule(dim: usize, x: &[f64], inner: f64, outer: f64, breaks: &[f64], min_gap: f64) -> CollarRule {
    let mut out = CollarRule::default();
    if dim == 1 {
        let rule = gauss16();
        let mut extra: Vec<f64> = breaks.to_vec();
        extra.extend(breaks.iter().map(|b| -b));
        for (a, b) in [(inner, outer), (-outer, -inner)] {
            let br = with_extra_breaks(graded_breaks(a, b, x[0], min_gap), &extra);
            for w in br.windows(2) {
                for (y, wt) in rule.mapped(w[0], w[1]) {
                    out.points.push(y);
                    out.weights.push(wt);
                }
            }
        }
        return out;
    }
    let rule = gauss8();
    // square annulus as four rectangles: top, bottom (full width) and left, right
    let rects = [
        ((-outer, outer), (inner, outer)),
        ((-outer, outer), (-outer, -inner)),
        ((-outer, -inner), (-inner, inner)),
        ((inner, outer), (-inner, inner)),
    ];
    for ((ax, bx), (ay, by)) in rects {
        let gx = (ax - x[0]).max(x[0] - bx).max(0.0);
        let gy = (ay - x[1]).max(x[1] - by).max(0.0);
        let gap = gx.max(gy).max(min_gap);
        let brx = graded_breaks(ax, bx, x[0], gap);
        let bry = graded_breaks(ay, by, x[1], gap);
        for wx in brx.windows(2) {
            for (px, qx) in rule.mapped(wx[0], wx[1]) {
                for wy in bry.windows(2) {
                    for (py, qy) in rule.mapped(wy[0], wy[1]) {
                        out.points.push(px);
                        out.points.push(py);
                        out.weights.push(qx * qy);
                    }
                }
            }
        }
    }
    out
}

/// `(a)_k / k!` for `a = 1 + 2s`, the binomial series of `(1 - z)^{-a}`.
fn rising_series(a: f64, z: f64) -> impl Iterator<Item = f64> {
    let mut coef = 1.0;
    let mut zk = 1.0;
    (0..).map(move |k: usize| {
        let v = coef * zk;
        coef *= (a + k as f64) / (k as f64 + 1.0);
        zk *= z;
        v
    })
}

/// One-dimensional far field: for each side `sigma = +1, -1`,
/// `int_R^inf (y - sigma x)^{-1-2s} sum_j c_j y^{gamma_j} dy`, expanded in `x / y`.
pub(crate) fn far_sides_1d(x: f64, outer: f64, order: f64, terms: &[FarTerm]) -> [f64; 2] {
    let a = 1.0 + 2.0 * order;
    let mut out = [0.0; 2];
    for (slot, sigma) in [1.0f64, -1.0].into_iter().enumerate() {
        let z = sigma * x / outer;
        let mut total = 0.0;
        for term in terms {
            if term.coefficient == 0.0 {
                continue;
            }
            let base = outer.powf(term.exponent - 2.0 * order);
            let mut sum = 0.0;
            for (k, c) in rising_series(a, z).enumerate().take(200) {
                let add = c / (2.0 * order + k as f64 - term.exponent);
                sum += add;
                if add.abs() <= 1e-17 * sum.abs() {
                    break;
                }
            }
            total += term.coefficient * base * sum;
        }
        out[slot] = total;
    }
    out
}

/// Two-dimensional far field `int_{|y|_inf > R} w(y) g_far(|y|) |x - y|^{-2-2s} dy`
/// by the substitution `rho = rho_min(theta) / u`.
pub(crate) fn far_2d<W: Fn(&[f64]) -> f64>(x: &[f64], outer: f64, order: f64, terms: &[FarTerm], weight: W) -> f64 {
    if terms.iter().all(|t| t.coefficient == 0.0) {
        return 0.0;
    }
    let rule_t = gauss16();
    let rule_u = gauss8();
    let ubreaks = graded_breaks(0.0, 1.0, 0.0, 1e-6);
    let mut total = 0.0;
    for q in 0..8 {
        let (t0, t1) = (q as f64 * 0.25 * PI, (q + 1) as f64 * 0.25 * PI);
        for (th, wt) in rule_t.mapped(t0, t1) {
            let (c, s) = (th.cos(), th.sin());
            let rho_min = outer / c.abs().max(s.abs());
            for wu in ubreaks.windows(2) {
                for (u, wu_) in rule_u.mapped(wu[0], wu[1]) {
                    let rho = rho_min / u;
                    let y = [rho * c, rho * s];
                    let g: f64 = terms.iter().map(|t| t.coefficient * rho.powf(t.exponent)).sum();
                    let k = dist2(x, &y).powf(-(1.0 + order));
                    total += wt * wu_ * rho_min / (u * u) * rho * g * k * weight(&y);
                }
            }
        }
    }
    total
}

/// Per-row data to rebuild exterior loads for new exterior values.
#[derive(Debug, Clone)]
struct RowCoupling {
    /// collar nodes and `w_q K(x_i, y_q, t)`
    rule: CollarRule,
    kernel_weights: Vec<f64>,
    /// far-field prefactors per side (1D) from the kernel modulation
    far_prefactor: [f64; 2],
    /// ghost neighbours for the singular-cell stencil: point and coefficient
    ghosts: Vec<(Vec<f64>, f64)>,
}

/// Discrete operator `u -> M u - b` frozen at `time`.
#[derive(Debug, Clone)]
pub struct AssembledOperator {
    grid: Grid,
    kernel: KernelSpec,
    time: f64,
    matrix: DMatrix<f64>,
    exterior_coupling: Vec<f64>,
    exterior_load: Vec<f64>,
    collar_inner: f64,
    collar_outer: f64,
    rows: Option<Vec<RowCoupling>>,
}

/// Assembles the operator at time `t` against the exterior data `ext`.
pub fn assemble(k: &KernelSpec, grid: &Grid, t: f64, ext: &ExteriorData) -> Result<AssembledOperator> {
    assemble_with(k, grid, t, ext, Execution::default())
}

/// [`assemble`] with an explicit execution policy.
pub fn assemble_with(
    k: &KernelSpec,
    grid: &Grid,
    t: f64,
    ext: &ExteriorData,
    exec: Execution,
) -> Result<AssembledOperator> {
    if k.dim() != grid.dim() {
        return Err(Error::Dimension(format!(
            "kernel of dimension {} on a {}-dimensional grid",
            k.dim(),
            grid.dim()
        )));
    }
    ext.check_integrable(k.order())?;
    let n = grid.node_count();
    let dim = grid.dim();
    let h = grid.spacing();
    let vol = grid.cell_volume();
    let s = k.order();
    let moment = singular_moment(dim, s, h);
    let coords = grid.coordinates();
    let inner = grid.outer_half_width();
    let outer = collar_outer(grid, Some(ext), 0.0);

    // neighbour coefficient c_i = prefactor(x_i) S / (2 h^2)
    let diag_coef: Vec<f64> = exec.map(n, |i| {
        k.diagonal_prefactor(&coords[i * dim..(i + 1) * dim], t) * moment / (2.0 * h * h)
    });

    // dense rows, upper triangle mirrored afterwards for exact symmetry
    let mut rows = vec![0.0; n * n];
    exec.for_each_chunk(&mut rows, n, |i, row| {
        let xi = &coords[i * dim..(i + 1) * dim];
        for j in (i + 1)..n {
            let xj = &coords[j * dim..(j + 1) * dim];
            row[j] = -k.eval_off_diagonal(xi, xj, dist2(xi, xj), t) * vol;
        }
        for (_, _, nb) in grid.axis_neighbours(i) {
            if let Some(j) = nb {
                if j > i {
                    row[j] -= 0.5 * (diag_coef[i] + diag_coef[j]);
                }
            }
        }
    });
    for i in 0..n {
        for j in 0..i {
            rows[i * n + j] = rows[j * n + i];
        }
    }

    let cache_rows = dim == 1;
    let breaks: Vec<f64> = ext.radial_breaks().to_vec();
    let per_row: Vec<(f64, f64, RowCoupling)> = exec.map(n, |i| {
        let xi = &coords[i * dim..(i + 1) * dim];
        let rule = collar_rule(dim, xi, inner, outer, &breaks, 0.25 * h);
        let kw: Vec<f64> = rule
            .weights
            .iter()
            .enumerate()
            .map(|(q, w)| {
                let y = &rule.points[q * dim..(q + 1) * dim];
                w * k.eval_off_diagonal(xi, y, dist2(xi, y), t)
            })
            .collect();
        let far_prefactor = if dim == 1 {
            [k.prefactor(xi, &[outer], t), k.prefactor(xi, &[-outer], t)]
        } else {
            [0.0; 2]
        };
        let mut ghosts = Vec::new();
        for (axis, dir, nb) in grid.axis_neighbours(i) {
            if nb.is_none() {
                let mut p = xi.to_vec();
                p[axis] += dir * h;
                ghosts.push((p, diag_coef[i]));
            }
        }
        let coupling = RowCoupling {
            rule,
            kernel_weights: kw,
            far_prefactor,
            ghosts,
        };
        let e = row_exterior(&coupling, k, xi, t, outer, None);
        let b = row_exterior(&coupling, k, xi, t, outer, Some((ext, t)));
        (e, b, coupling)
    });

    let mut exterior_coupling = Vec::with_capacity(n);
    let mut exterior_load = Vec::with_capacity(n);
    let mut couplings = Vec::with_capacity(n);
    for (e, b, c) in per_row {
        exterior_coupling.push(e);
        exterior_load.push(b);
        couplings.push(c);
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| rows[i * n + j]).sum();
        rows[i * n + i] = -off + exterior_coupling[i];
    }
    let matrix = DMatrix::from_row_slice(n, n, &rows);

    Ok(AssembledOperator {
        grid: *grid,
        kernel: k.clone(),
        time: t,
        matrix,
        exterior_coupling,
        exterior_load,
        collar_inner: inner,
        collar_outer: outer,
        rows: if cache_rows { Some(couplings) } else { None },
    })
}

/// Exterior integral of one row: coupling coefficient when `data` is `None`,
/// otherwise the load `int g(y, t_g) K(x_i, y, t) dy` (plus ghost terms).
fn row_exterior(
    c: &RowCoupling,
    k: &KernelSpec,
    xi: &[f64],
    t: f64,
    outer: f64,
    data: Option<(&ExteriorData, f64)>,
) -> f64 {
    let dim = xi.len();
    let s = k.order();
    let unit = [FarTerm {
        coefficient: 1.0,
        exponent: 0.0,
    }];
    let (collar, ghosts, terms): (f64, f64, Vec<FarTerm>) = match data {
        None => (
            c.kernel_weights.iter().sum(),
            c.ghosts.iter().map(|g| g.1).sum(),
            unit.to_vec(),
        ),
        Some((g, tg)) => (
            c.kernel_weights
                .iter()
                .enumerate()
                .map(|(q, kw)| kw * g.value(&c.rule.points[q * dim..(q + 1) * dim], tg))
                .sum(),
            c.ghosts.iter().map(|(p, coef)| coef * g.value(p, tg)).sum(),
            g.far_terms(tg),
        ),
    };
    let far = if dim == 1 {
        let sides = far_sides_1d(xi[0], outer, s, &terms);
        c.far_prefactor[0] * sides[0] + c.far_prefactor[1] * sides[1]
    } else {
        far_2d(xi, outer, s, &terms, |y| k.prefactor(xi, y, t))
    };
    collar + ghosts + far
}

impl AssembledOperator {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `e_i = int_{R^n \ Omega} K(x_i, y, t) dy` plus ghost-stencil coefficients.
    pub fn exterior_coupling(&self) -> &[f64] {
        &self.exterior_coupling
    }

    /// Load `b_i` for the exterior data used at assembly.
    pub fn exterior_load(&self) -> &[f64] {
        &self.exterior_load
    }

    /// Collar `(inner, outer)` radii used for the exterior integrals.
    pub fn collar(&self) -> (f64, f64) {
        (self.collar_inner, self.collar_outer)
    }

    /// Load for other exterior data sampled at time `t_data`, with the kernel
    /// frozen at the assembly time.
    pub fn load_for(&self, ext: &ExteriorData, t_data: f64, exec: Execution) -> Result<Vec<f64>> {
        ext.check_integrable(self.kernel.order())?;
        let dim = self.grid.dim();
        let coords = self.grid.coordinates();
        let outer = self.collar_outer;
        if let Some(rows) = &self.rows {
            let needs_wider = ext.radial_breaks().iter().any(|&r| r.is_finite() && 1.5 * r > outer);
            if !needs_wider {
                return Ok(exec.map(rows.len(), |i| {
                    row_exterior(&rows[i], &self.kernel, &coords[i * dim..(i + 1) * dim], self.time, outer, Some((ext, t_data)))
                }));
            }
        }
        // rebuild the rows (2D, or data reaching beyond the cached collar)
        let fresh = assemble_with(&self.kernel, &self.grid, self.time, ext, exec)?;
        if t_data == self.time {
            return Ok(fresh.exterior_load);
        }
        fresh.load_for(ext, t_data, exec)
    }

    /// `M u - b`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.apply_with_load(u, &self.exterior_load)
    }

    /// `M u - load`.
    pub fn apply_with_load(&self, u: &[f64], load: &[f64]) -> Vec<f64> {
        let v = &self.matrix * DVector::from_column_slice(u);
        v.iter().zip(load).map(|(a, b)| a - b).collect()
    }

    /// `M u` without exterior values (homogeneous exterior data).
    pub fn apply_homogeneous(&self, u: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(u)).iter().copied().collect()
    }

    /// Bilinear form `E_h(u, v) = h^n v^T (M u - load)`, the lattice version of
    /// `E(u, v)` with the `K/2` convention.
    pub fn bilinear(&self, u: &[f64], v: &[f64], load: &[f64]) -> f64 {
        let r = self.apply_with_load(u, load);
        self.grid.cell_volume() * r.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Symmetric pair weight `w_ij = -M_ij` (kernel times `h^n` plus stencil terms).
    pub fn pair_weight(&self, i: usize, j: usize) -> f64 {
        -self.matrix[(i, j)]
    }

    /// Writes the matrix as CSV rows.
    pub fn write_matrix_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for i in 0..self.matrix.nrows() {
            let row: Vec<String> = (0..self.matrix.ncols()).map(|j| self.matrix[(i, j)].to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// `Phi(x) = 1` for `|x| < 1`, `(1 + (|x|^2 - 1)^4)^{-(n+2s)/8}` otherwise.
pub fn phi(x: &[f64], order: f64) -> f64 {
    let n = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 < 1.0 {
        1.0
    } else {
        (1.0 + (r2 - 1.0).powi(4)).powf(-(n + 2.0 * order) / 8.0)
    }
}

/// `Phi_r(x) = r^{-n} Phi(x / r)`.
pub fn phi_r(r: f64, x: &[f64], order: f64) -> f64 {
    let scaled: Vec<f64> = x.iter().map(|v| v / r).collect();
    r.powi(-(x.len() as i32)) * phi(&scaled, order)
}

/// Adaptive evaluation of `P.V. int (f(x) - f(y)) K(x, y, t) dy` at one point.
///
/// The integrand is symmetrised around `x`, `(f(x) - f(x+z)) K(x, x+z) +
/// (f(x) - f(x-z)) K(x, x-z)`, which removes the first-order singularity.
/// `growth` is the exponent `gamma` of `|f(y)| <= C |y|^gamma` at infinity.
pub fn apply_pointwise<F>(k: &KernelSpec, f: F, growth: f64, x: &[f64], t: f64, tol: f64) -> Result<QuadEstimate>
where
    F: Fn(&[f64]) -> f64,
{
    if x.len() != k.dim() {
        return Err(Error::Dimension("point dimension differs from the kernel's".into()));
    }
    if growth >= 2.0 * k.order() {
        return Err(Error::Divergence(format!(
            "function grows like |y|^{growth}; the principal value needs growth < 2s = {}",
            2.0 * k.order()
        )));
    }
    let fx = f(x);
    // Below `z_min` the second difference is lost to cancellation; the
    // integrand behaves like `c z^{1-2s}` there and that piece is integrated
    // exactly from its value at `z_min`.
    let z_min = 2f64.powi(-14);
    let breaks: Vec<f64> = (-14..=6).map(|e| 2f64.powi(e)).collect();
    let z_tail = *breaks.last().expect("non-empty");
    let p = 2.0 - 2.0 * k.order();
    let head = |g_min: f64| g_min * z_min / p;
    let budget = 4000;
    match x.len() {
        1 => {
            let x0 = x[0];
            let mut g = |z: f64| {
                if z == 0.0 {
                    return 0.0;
                }
                let (yp, ym) = ([x0 + z], [x0 - z]);
                let d2 = z * z;
                (fx - f(&yp)) * k.eval_off_diagonal(x, &yp, d2, t)
                    + (fx - f(&ym)) * k.eval_off_diagonal(x, &ym, d2, t)
            };
            let h0 = head(g(z_min));
            let near = adaptive_breaks(&mut g, &breaks, 0.5 * tol, 0.0, budget)?;
            let far = adaptive_to_infinity(g, z_tail, z_tail, 0.5 * tol, 0.0, budget)?;
            Ok(QuadEstimate {
                value: h0 + near.value + far.value,
                error: near.error + far.error,
            })
        }
        _ => {
            let angular = gauss16();
            let panels: Vec<f64> = (0..=16).map(|i| PI * i as f64 / 16.0).collect();
            let mut g = |rho: f64| {
                if rho == 0.0 {
                    return 0.0;
                }
                let d2 = rho * rho;
                rho * integrate_panels(angular, &panels, |th| {
                    let (c, s) = (th.cos(), th.sin());
                    let yp = [x[0] + rho * c, x[1] + rho * s];
                    let ym = [x[0] - rho * c, x[1] - rho * s];
                    (fx - f(&yp)) * k.eval_off_diagonal(x, &yp, d2, t)
                        + (fx - f(&ym)) * k.eval_off_diagonal(x, &ym, d2, t)
                })
            };
            let h0 = head(g(z_min));
            let near = adaptive_breaks(&mut g, &breaks, 0.5 * tol, 0.0, budget)?;
            let far = adaptive_to_infinity(g, z_tail, z_tail, 0.5 * tol, 0.0, budget)?;
            Ok(QuadEstimate {
                value: h0 + near.value + far.value,
                error: near.error + far.error,
            })
        }
    }
}

/// Outcome of [`check_phi_eigenbounds`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhiEigenReport {
    /// `max(ratio, 1/ratio)` of `|L Phi_r| / (r^{-2s} Phi_r)` over the samples at radius `r`.
    pub c1_emp: f64,
    /// `(radius, c1)` at `r/2`, `r`, `2r`.
    pub c1_by_radius: Vec<(f64, f64)>,
    /// Ratio profile `(sample, |L Phi_r| / (r^{-2s} Phi_r))` at radius `r`.
    pub profile: Vec<(Vec<f64>, f64)>,
    /// `max(v, 1/v)` with `v = Phi_r(x) |x|^{n+2s} / r^{2s}` at `|x| in {r, 2r, 10r, 100r}`.
    pub c2_emp: f64,
    /// Largest relative spread `max/min - 1` of `c1` across the three radii.
    pub spread: f64,
    pub pass: bool,
}

/// Empirical constants of the two-sided bound `|L Phi_r| ~ r^{-2s} Phi_r`.
///
/// `samples` are given for radius `r` and are rescaled for `r/2` and `2r`.
/// Samples must keep at least `margin` away from the plateau edge `|x| = r`.
pub fn check_phi_eigenbounds(
    k: &KernelSpec,
    r: f64,
    samples: &[Vec<f64>],
    tol: f64,
    margin: f64,
) -> Result<PhiEigenReport> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter {
            name: "radius_r",
            value: r,
            expected: "r > 0",
        });
    }
    if samples.is_empty() {
        return Err(Error::Precondition("Phi eigen-bound check needs samples".into()));
    }
    let s = k.order();
    for x in samples {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - r).abs() < margin {
            return Err(Error::Precondition(format!(
                "sample {x:?} lies within {margin} of the plateau edge |x| = {r}"
            )));
        }
    }
    let ratios_at = |rho: f64| -> Result<Vec<(Vec<f64>, f64)>> {
        samples
            .iter()
            .map(|x| {
                let y: Vec<f64> = x.iter().map(|v| v * rho / r).collect();
                let scale = rho.powf(-2.0 * s) * phi_r(rho, &y, s);
                let lphi = apply_pointwise(k, |z| phi_r(rho, z, s), -(k.dim() as f64) - 2.0 * s, &y, 0.0, tol * scale)?;
                Ok((y, lphi.value.abs() / scale))
            })
            .collect()
    };
    let c1_of = |ratios: &[(Vec<f64>, f64)]| ratios.iter().map(|(_, q)| q.max(1.0 / q)).fold(1.0, f64::max);
    let mut c1_by_radius = Vec::new();
    let mut profile = Vec::new();
    for rho in [0.5 * r, r, 2.0 * r] {
        let ratios = ratios_at(rho)?;
        c1_by_radius.push((rho, c1_of(&ratios)));
        if rho == r {
            profile = ratios;
        }
    }
    let c1_emp = c1_by_radius[1].1;
    let hi = c1_by_radius.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = c1_by_radius.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let spread = hi / lo - 1.0;

    let n = k.dim() as f64;
    let c2_emp = [1.0, 2.0, 10.0, 100.0]
        .iter()
        .map(|m| {
            let mut x = vec![0.0; k.dim()];
            x[0] = m * r;
            let v = phi_r(r, &x, s) * (m * r).powf(n + 2.0 * s) / r.powf(2.0 * s);
            v.max(1.0 / v)
        })
        .fold(1.0, f64::max);
    Ok(PhiEigenReport {
        c1_emp,
        c1_by_radius,
        profile,
        c2_emp,
        spread,
        pass: c1_emp.is_finite() && spread <= 0.2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_kernel(s: f64) -> KernelSpec {
        KernelSpec::constant_multiple(1, s, 1.0, 1.0).unwrap()
    }

    #[test]
    fn phi_values() {
        assert_eq!(phi(&[0.0], 0.5), 1.0);
        assert_eq!(phi(&[1.0], 0.5), 1.0);
        assert_eq!(phi_r(2.0, &[0.0], 0.5), 0.5);
        assert!(phi(&[3.0], 0.5) < phi(&[2.0], 0.5));
    }

    #[test]
    fn singular_moment_closed_form_1d() {
        // s = 1/2: int_{-h/2}^{h/2} |z|^0 dz = h
        assert!((singular_moment(1, 0.5, 0.2) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn singular_moment_2d_matches_brute_force() {
        // midpoint sum on a fine sub-lattice, excluding a tiny core handled analytically
        let (s, h) = (0.3, 1.0);
        let m = 800;
        let dz = h / m as f64;
        let mut sum = 0.0;
        for a in 0..m {
            for b in 0..m {
                let z1 = -0.5 * h + (a as f64 + 0.5) * dz;
                let z2 = -0.5 * h + (b as f64 + 0.5) * dz;
                let r2 = z1 * z1 + z2 * z2;
                sum += z1 * z1 * r2.powf(-1.0 - s) * dz * dz;
            }
        }
        let got = singular_moment(2, s, h);
        assert!((got - sum).abs() < 2e-3 * got, "{got} vs {sum}");
    }

    #[test]
    fn constants_are_annihilated() {
        let g = Grid::new(1, 2.0, 41).unwrap();
        for k in [
            unit_kernel(0.5),
            KernelSpec::fractional_laplacian(1, 0.3).unwrap(),
            KernelSpec::modulated(1, 0.7, 2.0, crate::kernels::Modulation::named("product_cosine", 0.4).unwrap()).unwrap(),
        ] {
            let ext = ExteriorData::constant(1.0);
            let op = assemble(&k, &g, 0.3, &ext).unwrap();
            let r = op.apply(&vec![1.0; g.node_count()]);
            let scale = op.exterior_coupling().iter().cloned().fold(0.0, f64::max);
            assert!(r.iter().all(|v| v.abs() <= 1e-12 * scale), "{:?}", &r[..3]);
        }
    }

    #[test]
    fn matrix_is_symmetric_m_matrix() {
        let g = Grid::new(1, 1.5, 31).unwrap();
        let m = crate::kernels::Modulation::named("sinusoidal", 0.4).unwrap();
        let k = KernelSpec::modulated(1, 0.4, 2.0, m).unwrap();
        let op = assemble(&k, &g, 0.8, &ExteriorData::zero()).unwrap();
        let a = op.matrix();
        let n = a.nrows();
        for i in 0..n {
            let mut off = 0.0;
            for j in 0..n {
                assert_eq!(a[(i, j)], a[(j, i)]);
                if i != j {
                    assert!(a[(i, j)] <= 0.0);
                    off += a[(i, j)];
                }
            }
            assert!(a[(i, i)] + off >= 0.0);
            assert!((a[(i, i)] + off - op.exterior_coupling()[i]).abs() <= 1e-9 * a[(i, i)]);
        }
    }

    #[test]
    fn exterior_coupling_matches_closed_form() {
        // unit kernel, s = 1/2: int_{|y| > L'} (y - x)^{-2} over both sides = 1/(L'-x) + 1/(L'+x)
        let g = Grid::new(1, 2.0, 21).unwrap();
        let k = unit_kernel(0.5);
        let op = assemble(&k, &g, 0.0, &ExteriorData::zero()).unwrap();
        let lp = g.outer_half_width();
        let h = g.spacing();
        let stencil = singular_moment(1, 0.5, h) / (2.0 * h * h);
        for i in [0usize, 5, 10, 20] {
            let x = g.axis_coord(i);
            let mut want = 1.0 / (lp - x) + 1.0 / (lp + x);
            if i == 0 || i == 20 {
                want += stencil;
            }
            let got = op.exterior_coupling()[i];
            assert!((got - want).abs() < 1e-10 * want, "i={i}: {got} vs {want}");
        }
    }

    #[test]
    fn two_dimensional_assembly_annihilates_constants() {
        let g = Grid::new(2, 1.0, 7).unwrap();
        let k = KernelSpec::fractional_laplacian(2, 0.5).unwrap();
        let op = assemble(&k, &g, 0.0, &ExteriorData::constant(2.0)).unwrap();
        let r = op.apply(&vec![2.0; g.node_count()]);
        let scale = op.exterior_coupling().iter().cloned().fold(0.0, f64::max);
        assert!(r.iter().all(|v| v.abs() <= 1e-11 * scale));
        // exterior coupling agrees with a radial cross-check on the centre node:
        // int_{|y|_inf > L'} C |y|^{-3} dy >= C * 2 pi / (sqrt(2) L'), <= C * 2 pi / L'
        let c = k.scale();
        let lp = g.outer_half_width();
        let centre = g.node_count() / 2;
        let e = op.exterior_coupling()[centre];
        assert!(e > c * 2.0 * PI / (2f64.sqrt() * lp) && e < c * 2.0 * PI / lp, "{e}");
    }

    #[test]
    fn pointwise_of_constant_is_zero() {
        let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
        let v = apply_pointwise(&k, |_| 1.0, 0.0, &[0.3], 0.0, 1e-10).unwrap();
        assert!(v.value.abs() < 1e-12);
    }

    #[test]
    fn pointwise_rejects_growth() {
        let k = KernelSpec::fractional_laplacian(1, 0.25).unwrap();
        let e = apply_pointwise(&k, |y| y[0].abs(), 1.0, &[0.0], 0.0, 1e-8).unwrap_err();
        assert!(matches!(e, Error::Divergence(_)));
    }

    #[test]
    fn collar_and_far_field_integrate_power_law_exactly() {
        // int_{|y| > L'} |y - x|^{-2} over the collar (quadrature) plus the far field (series)
        let (x, lp) = (0.7, 3.0);
        let outer = COLLAR_FACTOR * lp;
        let rule = collar_rule(1, &[x], lp, outer, &[], 0.01);
        let collar: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(y, w)| w * (y - x).powi(-2))
            .sum();
        let unit = [FarTerm {
            coefficient: 1.0,
            exponent: 0.0,
        }];
        let far: f64 = far_sides_1d(x, outer, 0.5, &unit).iter().sum();
        let want = 1.0 / (lp - x) + 1.0 / (lp + x);
        assert!((collar + far - want).abs() < 1e-12 * want, "{} vs {want}", collar + far);
    }
}
