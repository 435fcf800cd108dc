//! Seeded solution ensembles and the empirical-constant table.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{scheme_error_estimate, verify, verify_harnack, Geometry, TheoremId, VerificationReport};
use crate::error::{Error, Result};
use crate::exterior::ExteriorData;
use crate::geometry::{Grid, SpaceTimeField};
use crate::kernels::{KernelFamily, KernelSpec, Modulation};
use crate::par::Execution;
use crate::solver::{solve, test_battery, Scheme, SolveSpec, WeakForm};

/// Exact column order of the results table.
pub const CSV_HEADER: &str =
    "theorem_id,member_id,N,dt,s,lambda,alpha,theta,delta,lhs,rhs_inf,rhs_mean,rhs_tail,C_emp,refinement_ratio,pass";

/// Initial data: `baseline + sum_k a_k exp(-|x - c_k|^2 / w_k^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialGenerator {
    pub baseline: f64,
    /// Inclusive range of the number of bumps.
    pub bumps: (usize, usize),
    pub amplitude: (f64, f64),
    pub width: (f64, f64),
    /// Bump centres are uniform in `[-spread, spread]^n` around the origin.
    pub spread: f64,
}

impl Default for InitialGenerator {
    fn default() -> Self {
        InitialGenerator {
            baseline: 0.0,
            bumps: (1, 3),
            amplitude: (0.5, 2.0),
            width: (0.4, 1.2),
            spread: 1.0,
        }
    }
}

/// Exterior data: `baseline + a (1 + |y|)^gamma - mass * 1{r_in <= |y| <= r_out}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorGenerator {
    pub baseline: f64,
    pub amplitude: (f64, f64),
    /// Range of `gamma`; must stay below `2s` for every member.
    pub decay: (f64, f64),
    /// Optional negative mass on an annulus: `(mass, r_in, r_out)`.
    pub negative_mass: Option<(f64, f64, f64)>,
}

impl Default for ExteriorGenerator {
    fn default() -> Self {
        ExteriorGenerator {
            baseline: 0.0,
            amplitude: (0.0, 0.5),
            decay: (-2.0, -0.5),
            negative_mass: None,
        }
    }
}

/// A seeded family of problems on a common grid.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub dim: usize,
    /// Kernel families, assigned to members cyclically.
    pub families: Vec<KernelFamily>,
    /// Range of the order `s`.
    pub order: (f64, f64),
    pub lambda: f64,
    /// Built-in modulation used by the modulated family.
    pub modulation: String,
    pub count: usize,
    pub seed: u64,
    pub half_width: f64,
    /// Nodes per axis of the coarse run.
    pub nodes: usize,
    pub dt: f64,
    pub scheme: Scheme,
    pub x0: Vec<f64>,
    pub r: f64,
    pub big_r: f64,
    /// Anchor time; defaults to `2.5 r^{2s}` per member.
    pub t0: Option<f64>,
    /// End time; defaults to `5 r^{2s}` per member.
    pub t_end: Option<f64>,
    /// Harnack lag; defaults to the midpoint of `(1, 2^{2s})` per member.
    pub alpha: Option<f64>,
    pub theta: f64,
    pub delta: f64,
    pub initial: InitialGenerator,
    pub exterior: ExteriorGenerator,
    /// Also solve at `2N` nodes and `dt/2` and report refinement ratios.
    pub refine: bool,
    /// Size of the weak-residual battery for the sub/supersolution gate.
    pub residual_tests: usize,
    pub execution: Execution,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            dim: 1,
            families: vec![KernelFamily::FractionalLaplacian],
            order: (0.3, 0.7),
            lambda: 2.0,
            modulation: "product_cosine".into(),
            count: 20,
            seed: 0,
            half_width: 4.0,
            nodes: 256,
            dt: 1.0 / 64.0,
            scheme: Scheme::ImplicitEuler,
            x0: vec![0.0],
            r: 0.5,
            big_r: 2.0,
            t0: None,
            t_end: None,
            alpha: None,
            theta: 0.5,
            delta: 0.5,
            initial: InitialGenerator::default(),
            exterior: ExteriorGenerator::default(),
            refine: true,
            residual_tests: 20,
            execution: Execution::default(),
        }
    }
}

/// The concrete problem of one member.
#[derive(Debug, Clone)]
pub struct MemberProblem {
    pub kernel: KernelSpec,
    pub initial: Vec<f64>,
    pub exterior: ExteriorData,
    pub geometry: Geometry,
    pub t_end: f64,
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(Error::Precondition("the ensemble needs at least one kernel family".into()));
        }
        if !(self.order.0 > 0.0 && self.order.1 < 1.0 && self.order.0 <= self.order.1) {
            return Err(Error::InvalidParameter {
                name: "order_s",
                value: self.order.0,
                expected: "0 < s_min <= s_max < 1",
            });
        }
        if self.exterior.decay.1 >= 2.0 * self.order.0 && self.exterior.amplitude.1 > 0.0 {
            return Err(Error::InvalidParameter {
                name: "decay_gamma",
                value: self.exterior.decay.1,
                expected: "gamma < 2s for every member (otherwise the tail diverges)",
            });
        }
        if self.initial.bumps.0 > self.initial.bumps.1 {
            return Err(Error::Precondition("bump count range is reversed".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: self.dt,
                expected: "dt > 0",
            });
        }
        Grid::new(self.dim, self.half_width, self.nodes)?;
        Ok(())
    }

    /// Deterministic problem of member `id`; depends only on `(seed, id)`.
    pub fn member_problem(&self, id: usize) -> Result<MemberProblem> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let s = uniform(&mut rng, self.order);
        let family = self.families[id % self.families.len()];
        let kernel = match family {
            KernelFamily::FractionalLaplacian => KernelSpec::fractional_laplacian(self.dim, s)?,
            KernelFamily::ConstantMultiple => {
                let l = self.lambda.ln();
                let c = uniform(&mut rng, (-l, l)).exp();
                KernelSpec::constant_multiple(self.dim, s, c, self.lambda)?
            }
            KernelFamily::Modulated => {
                let a = uniform(&mut rng, (0.0, 1.0 - 1.0 / self.lambda));
                KernelSpec::modulated(self.dim, s, self.lambda, Modulation::named(&self.modulation, a)?)?
            }
        };
        let grid = Grid::new(self.dim, self.half_width, self.nodes)?;
        let g = &self.initial;
        let nb = if g.bumps.1 > g.bumps.0 {
            rng.gen_range(g.bumps.0..=g.bumps.1)
        } else {
            g.bumps.0
        };
        let bumps: Vec<(Vec<f64>, f64, f64)> = (0..nb)
            .map(|_| {
                let c: Vec<f64> = (0..self.dim).map(|_| uniform(&mut rng, (-g.spread, g.spread))).collect();
                (c, uniform(&mut rng, g.amplitude), uniform(&mut rng, g.width))
            })
            .collect();
        let baseline = g.baseline;
        let initial_fn = move |x: &[f64]| {
            baseline
                + bumps
                    .iter()
                    .map(|(c, a, w)| {
                        let d2: f64 = x.iter().zip(c).map(|(p, q)| (p - q) * (p - q)).sum();
                        a * (-d2 / (w * w)).exp()
                    })
                    .sum::<f64>()
        };
        let initial = grid.sample(&initial_fn);
        let e = &self.exterior;
        let a = uniform(&mut rng, e.amplitude);
        let gamma = uniform(&mut rng, e.decay);
        let mut exterior = ExteriorData::constant(e.baseline);
        if a != 0.0 {
            exterior = exterior.sum(&ExteriorData::power_law(a, gamma));
        }
        if let Some((mass, r_in, r_out)) = e.negative_mass {
            exterior = exterior.sum(&ExteriorData::annulus(-mass, r_in, r_out));
        }
        exterior.check_integrable(s)?;
        let d = self.r.powf(2.0 * s);
        let mut geometry = Geometry::new(self.x0.clone(), self.r, self.big_r, self.t0.unwrap_or(2.5 * d), s)
            .with_theta(self.theta)
            .with_delta(self.delta);
        if let Some(alpha) = self.alpha {
            geometry = geometry.with_alpha(alpha);
        }
        geometry.validate(s)?;
        Ok(MemberProblem {
            kernel,
            initial,
            exterior,
            geometry,
            t_end: self.t_end.unwrap_or(5.0 * d),
        })
    }
}

/// Sub/supersolution gate: extreme weak residuals of the fine run over the
/// battery, and the band `2 |R_coarse - R_fine| + 1e-10 scale` they are
/// compared against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualGate {
    pub max: f64,
    pub min: f64,
    pub band: f64,
}

impl ResidualGate {
    pub fn is_subsolution(&self) -> bool {
        self.max <= self.band
    }

    pub fn is_supersolution(&self) -> bool {
        self.min >= -self.band
    }
}

/// Evaluates the residual battery on a coarse/fine pair of runs.
pub fn residual_gate(
    coarse: &SpaceTimeField,
    fine: &SpaceTimeField,
    k: &KernelSpec,
    ext: &ExteriorData,
    tests: usize,
    seed: u64,
    exec: Execution,
) -> Result<ResidualGate> {
    let battery = test_battery(fine.grid(), (fine.t_first(), fine.t_last()), tests, seed);
    let wc = WeakForm::new(coarse, k, ext, exec)?;
    let wf = WeakForm::new(fine, k, ext, exec)?;
    let mut gate = ResidualGate {
        max: f64::NEG_INFINITY,
        min: f64::INFINITY,
        band: 0.0,
    };
    for t in &battery {
        let c = wc.evaluate(t)?;
        let f = wf.evaluate(t)?;
        gate.max = gate.max.max(f.value);
        gate.min = gate.min.min(f.value);
        gate.band = gate.band.max(2.0 * (c.value - f.value).abs() + 1e-10 * f.scale.max(c.scale));
    }
    Ok(gate)
}

/// Everything measured on one member.
#[derive(Debug, Clone)]
pub struct EnsembleMember {
    pub id: usize,
    pub s: f64,
    pub lambda: f64,
    /// Nodes and step of the run the reports refer to.
    pub nodes: usize,
    pub dt: f64,
    pub geometry: Option<Geometry>,
    /// Max-norm coarse/fine difference (0 without refinement).
    pub scheme_error: f64,
    pub gate: Option<ResidualGate>,
    /// One entry per requested theorem, in request order.
    pub reports: Vec<(TheoremId, std::result::Result<VerificationReport, String>)>,
}

/// Per-theorem statistics over the ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremSummary {
    pub theorem: TheoremId,
    pub evaluated: usize,
    pub failures: usize,
    pub passed: usize,
    pub c_max: f64,
    pub c_median: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub seed: u64,
    pub members: Vec<EnsembleMember>,
    pub theorems: Vec<TheoremId>,
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}

impl EnsembleResult {
    /// Writes the table in member order, then theorem order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for m in &self.members {
            for (theorem, rep) in &m.reports {
                let (alpha, theta, delta) = m
                    .geometry
                    .as_ref()
                    .map_or((f64::NAN, f64::NAN, f64::NAN), |g| (g.alpha, g.theta, g.delta));
                let head = format!(
                    "{},{},{},{},{},{},{},{},{}",
                    theorem,
                    m.id,
                    m.nodes,
                    num(m.dt),
                    num(m.s),
                    num(m.lambda),
                    num(alpha),
                    num(theta),
                    num(delta)
                );
                match rep {
                    Ok(r) => writeln!(
                        w,
                        "{head},{},{},{},{},{},{},{}",
                        num(r.lhs),
                        num(r.rhs_inf),
                        num(r.rhs_mean),
                        num(r.rhs_tail),
                        num(r.c_emp),
                        num(r.refinement_ratio.unwrap_or(f64::NAN)),
                        r.pass
                    )?,
                    Err(_) => writeln!(w, "{head},NaN,NaN,NaN,NaN,NaN,NaN,false")?,
                }
            }
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a vector cannot fail");
        String::from_utf8(buf).expect("the table is ASCII")
    }

    /// `(member, theorem, message)` for every row that raised an error.
    pub fn failures(&self) -> Vec<(usize, TheoremId, String)> {
        self.members
            .iter()
            .flat_map(|m| {
                m.reports
                    .iter()
                    .filter_map(move |(t, r)| r.as_ref().err().map(|e| (m.id, *t, e.clone())))
            })
            .collect()
    }

    pub fn summaries(&self) -> Vec<TheoremSummary> {
        self.theorems
            .iter()
            .map(|&theorem| {
                let reps: Vec<&std::result::Result<VerificationReport, String>> = self
                    .members
                    .iter()
                    .flat_map(|m| m.reports.iter().filter(|(t, _)| *t == theorem).map(|(_, r)| r))
                    .collect();
                let ok: Vec<&VerificationReport> = reps.iter().filter_map(|r| r.as_ref().ok()).collect();
                let mut cs: Vec<f64> = ok.iter().map(|r| r.c_emp).filter(|c| c.is_finite()).collect();
                cs.sort_by(f64::total_cmp);
                let ratios: Vec<f64> = ok.iter().filter_map(|r| r.refinement_ratio).collect();
                TheoremSummary {
                    theorem,
                    evaluated: reps.len(),
                    failures: reps.len() - ok.len(),
                    passed: ok.iter().filter(|r| r.pass).count(),
                    c_max: cs.last().copied().unwrap_or(f64::NAN),
                    c_median: if cs.is_empty() {
                        f64::NAN
                    } else if cs.len() % 2 == 1 {
                        cs[cs.len() / 2]
                    } else {
                        0.5 * (cs[cs.len() / 2 - 1] + cs[cs.len() / 2])
                    },
                    ratio_min: ratios.iter().copied().fold(f64::NAN, f64::min),
                    ratio_max: ratios.iter().copied().fold(f64::NAN, f64::max),
                }
            })
            .collect()
    }

    /// `true` when every row evaluated and passed.
    pub fn all_pass(&self) -> bool {
        self.members
            .iter()
            .all(|m| m.reports.iter().all(|(_, r)| r.as_ref().is_ok_and(|r| r.pass)))
    }
}

fn run_member(spec: &EnsembleSpec, id: usize, theorems: &[TheoremId], inner: Execution) -> EnsembleMember {
    let mut member = EnsembleMember {
        id,
        s: f64::NAN,
        lambda: spec.lambda,
        nodes: if spec.refine { 2 * spec.nodes } else { spec.nodes },
        dt: if spec.refine { 0.5 * spec.dt } else { spec.dt },
        geometry: None,
        scheme_error: 0.0,
        gate: None,
        reports: Vec::new(),
    };
    let fail_all = |member: &mut EnsembleMember, e: Error| {
        member.reports = theorems.iter().map(|&t| (t, Err(e.to_string()))).collect();
    };
    let problem = match spec.member_problem(id) {
        Ok(p) => p,
        Err(e) => {
            fail_all(&mut member, e);
            return member;
        }
    };
    member.s = problem.kernel.order();
    member.lambda = problem.kernel.lambda();
    member.geometry = Some(problem.geometry.clone());
    let run = |nodes: usize, dt: f64| -> Result<SpaceTimeField> {
        let grid = Grid::new(spec.dim, spec.half_width, nodes)?;
        let initial = if nodes == spec.nodes {
            problem.initial.clone()
        } else {
            // Same generator draw, sampled on the finer grid.
            spec.member_problem_on(id, &grid)?
        };
        let s = SolveSpec::new(
            problem.kernel.clone(),
            grid,
            initial,
            problem.exterior.clone(),
            (0.0, problem.t_end),
            dt,
        )?
        .with_scheme(spec.scheme)
        .with_execution(inner);
        solve(&s)
    };
    let coarse = match run(spec.nodes, spec.dt) {
        Ok(f) => f,
        Err(e) => {
            fail_all(&mut member, e);
            return member;
        }
    };
    let fine = if spec.refine {
        match run(2 * spec.nodes, 0.5 * spec.dt) {
            Ok(f) => Some(f),
            Err(e) => {
                fail_all(&mut member, e);
                return member;
            }
        }
    } else {
        None
    };
    let mut tol = 0.0;
    if let Some(fine) = &fine {
        match scheme_error_estimate(&coarse, fine) {
            Ok(err) => {
                member.scheme_error = err;
                tol = 10.0 * err;
            }
            Err(e) => {
                fail_all(&mut member, e);
                return member;
            }
        }
        if spec.residual_tests > 0 {
            match residual_gate(
                &coarse,
                fine,
                &problem.kernel,
                &problem.exterior,
                spec.residual_tests,
                spec.seed ^ id as u64,
                inner,
            ) {
                Ok(g) => member.gate = Some(g),
                Err(e) => {
                    fail_all(&mut member, e);
                    return member;
                }
            }
        }
    }
    let g = &problem.geometry;
    for &theorem in theorems {
        let gated = match (theorem, member.gate) {
            (TheoremId::LocalBoundedness | TheoremId::LocalBoundednessSigned, Some(gate)) if !gate.is_subsolution() => {
                Some(format!("subsolution gate failed: max residual {} > {}", gate.max, gate.band))
            }
            (TheoremId::WeakHarnack, Some(gate)) if !gate.is_supersolution() => Some(format!(
                "supersolution gate failed: min residual {} < -{}",
                gate.min, gate.band
            )),
            _ => None,
        };
        if let Some(msg) = gated {
            member.reports.push((theorem, Err(msg)));
            continue;
        }
        let rep = verify(theorem, &coarse, &problem.exterior, g, tol).and_then(|c| match &fine {
            Some(f) => verify(theorem, f, &problem.exterior, g, tol).map(|f| VerificationReport::with_refinement(&c, &f)),
            None => Ok(c),
        });
        member.reports.push((theorem, rep.map_err(|e| e.to_string())));
    }
    member
}

impl EnsembleSpec {
    /// Initial data of member `id` sampled on another grid (same generator draw).
    fn member_problem_on(&self, id: usize, grid: &Grid) -> Result<Vec<f64>> {
        let mut spec = self.clone();
        spec.half_width = grid.half_width();
        spec.nodes = grid.nodes_per_axis();
        spec.dim = grid.dim();
        Ok(spec.member_problem(id)?.initial)
    }
}

/// Solves and verifies every member. Members run concurrently under
/// `spec.execution`; results are collected in member order, so the table is
/// identical for any thread count. Member errors are recorded per row.
pub fn estimate_constants(spec: &EnsembleSpec, theorems: &[TheoremId]) -> Result<EnsembleResult> {
    spec.validate()?;
    let inner = if spec.execution.is_parallel() && spec.count > 1 {
        Execution::Sequential
    } else {
        spec.execution
    };
    let members = spec.execution.map(spec.count, |id| run_member(spec, id, theorems, inner));
    Ok(EnsembleResult {
        seed: spec.seed,
        members,
        theorems: theorems.to_vec(),
    })
}

/// Set-up of the tail necessity probe.
///
/// The family is `u_M` with exterior data `-M` on the annulus
/// `annulus.0 <= |y| <= annulus.1` and initial data `A * plateau`, where the
/// plateau is 1 on `|x| <= L - 1` and tapers to 0 at `|x| = L`. The amplitude
/// `A` is fixed across the family: `1.02 * M_max * max(w / u_1)` over the
/// Harnack window, with `u_1` the plateau solution with zero exterior data and
/// `w` the zero-initial solution with unit annulus data. This keeps every
/// member nonnegative on `B_R` while the largest one nearly touches zero.
#[derive(Debug, Clone)]
pub struct ProbeSpec {
    pub order: f64,
    pub half_width: f64,
    pub nodes: usize,
    pub dt: f64,
    pub r: f64,
    pub big_r: f64,
    pub annulus: (f64, f64),
    pub masses: Vec<f64>,
    /// Width of a notch `x^2 / (x^2 + notch^2)` cut into the plateau at the
    /// origin (0 for none).
    pub notch: f64,
    /// Anchor time `t0` in units of `r^{2s}`.
    pub t0_factor: f64,
    pub execution: Execution,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec {
            order: 0.5,
            half_width: 4.0,
            nodes: 256,
            dt: 1.0 / 64.0,
            r: 0.5,
            big_r: 1.05,
            annulus: (6.0, 8.0),
            masses: vec![1.0, 10.0, 100.0],
            notch: 0.6,
            t0_factor: 2.75,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NecessityRow {
    pub mass: f64,
    pub sup: f64,
    pub inf: f64,
    /// Tail-free Harnack ratio `sup / inf`.
    pub ratio: f64,
    pub tail_term: f64,
    pub c_emp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NecessityReport {
    pub amplitude: f64,
    pub rows: Vec<NecessityRow>,
    /// `ratio(M_last) / ratio(M_first)`.
    pub ratio_growth: f64,
    /// `max C_emp / min C_emp` over the family.
    pub c_spread: f64,
}

impl NecessityReport {
    /// The tail-free ratio grows at least tenfold while `C_emp` moves by at
    /// most a factor 2.
    pub fn pass(&self) -> bool {
        self.ratio_growth >= 10.0 && self.c_spread <= 2.0
    }
}

pub fn tail_necessity_probe(spec: &ProbeSpec) -> Result<NecessityReport> {
    if spec.masses.len() < 2 {
        return Err(Error::Precondition("the probe needs at least two masses".into()));
    }
    let s = spec.order;
    let k = KernelSpec::fractional_laplacian(1, s)?;
    let grid = Grid::new(1, spec.half_width, spec.nodes)?;
    let l = spec.half_width;
    let notch = spec.notch;
    let plateau = grid.sample(|x| {
        let a = x[0].abs();
        let p = if a <= l - 1.0 {
            1.0
        } else {
            0.5 * (1.0 + (std::f64::consts::PI * (a - (l - 1.0))).cos())
        };
        if notch > 0.0 {
            p * a * a / (a * a + notch * notch)
        } else {
            p
        }
    });
    let d = spec.r.powf(2.0 * s);
    let g = Geometry::new(vec![0.0], spec.r, spec.big_r, spec.t0_factor * d, s);
    g.validate(s)?;
    let t1 = g.harnack_t1(s);
    let t_end = g.t0 + 2.0 * d;
    let run = |initial: Vec<f64>, ext: ExteriorData| -> Result<SpaceTimeField> {
        solve(
            &SolveSpec::new(k.clone(), grid, initial, ext, (0.0, t_end), spec.dt)?.with_execution(spec.execution),
        )
    };
    let (a_in, a_out) = spec.annulus;
    let u1 = run(plateau.clone(), ExteriorData::zero())?;
    let w = run(vec![0.0; grid.node_count()], ExteriorData::annulus(1.0, a_in, a_out))?;
    let nodes = crate::geometry::nodes_in_ball(&grid, &g.x0, g.big_r);
    let mut worst: f64 = 0.0;
    for m in u1.levels_in_open(g.t0 - d, t1) {
        let (a, b) = (u1.level(m), w.level(m));
        for &i in &nodes {
            worst = worst.max(b[i] / a[i]);
        }
    }
    let m_max = spec.masses.iter().copied().fold(0.0, f64::max);
    let amplitude = 1.02 * m_max * worst;
    let mut rows = Vec::new();
    for &mass in &spec.masses {
        let f = run(
            plateau.iter().map(|v| amplitude * v).collect(),
            ExteriorData::annulus(-mass, a_in, a_out),
        )?;
        let rep = verify_harnack(&f, &ExteriorData::annulus(-mass, a_in, a_out), &g, 0.0)?;
        rows.push(NecessityRow {
            mass,
            sup: rep.lhs,
            inf: rep.rhs_inf,
            ratio: rep.lhs / rep.rhs_inf,
            tail_term: rep.rhs_tail,
            c_emp: rep.c_emp,
        });
    }
    let first = &rows[0];
    let last = &rows[rows.len() - 1];
    let cs = rows.iter().map(|r| r.c_emp);
    let c_max = cs.clone().fold(f64::NEG_INFINITY, f64::max);
    let c_min = cs.fold(f64::INFINITY, f64::min);
    Ok(NecessityReport {
        amplitude,
        ratio_growth: last.ratio / first.ratio,
        c_spread: c_max / c_min,
        rows,
    })
}
