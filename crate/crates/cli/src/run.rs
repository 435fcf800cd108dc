//! Run orchestration and report emission.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use nonlocal_parabolic::analysis::{
    check_sobolev, check_weighted_poincare, estimate_constants, residual_gate, scheme_error_estimate,
    search_algebraic_constants, verify, AlgebraicPart, EnsembleMember, EnsembleResult, EnsembleSpec,
    ExteriorGenerator, Geometry, InitialGenerator, LemmaReport, PsiProfile, TheoremId, VerificationReport,
};
use nonlocal_parabolic::geometry::{write_field_binary, write_field_csv};
use nonlocal_parabolic::kernels::KernelFamily;
use nonlocal_parabolic::nonlocal_op::check_phi_eigenbounds;
use nonlocal_parabolic::oracles::fractional_heat_kernel;
use nonlocal_parabolic::solver::test_battery;
use nonlocal_parabolic::tails::{tail, tail_sup, TailQuery};
use nonlocal_parabolic::{
    solve, Execution, ExteriorData, Grid, KernelSpec, Modulation, SolveSpec, SpaceTimeField, WeakForm,
};

use crate::config::{parse_target, Command, RunConfig};

/// Command-line settings that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub refine: bool,
    /// Worker threads; 1 selects the sequential code path.
    pub jobs: Option<usize>,
}

/// Outcome of a run that did not error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    VerificationFailed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::VerificationFailed => 2,
        }
    }

    fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::VerificationFailed
        }
    }
}

/// Name of the marker left in the output directory when a run errors.
pub const FAILED_MARKER: &str = "FAILED";

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Resolved per-run context shared by the commands.
struct Ctx<'a> {
    cfg: &'a RunConfig,
    command: Command,
    dir: PathBuf,
    seed: u64,
    refine: bool,
    exec: Execution,
}

impl Ctx<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))
    }

    fn write_field(&self, stem: &str, f: &SpaceTimeField) -> Result<Vec<String>> {
        let mut names = Vec::new();
        for format in &self.cfg.output.formats {
            let name = match format.as_str() {
                "binary" => format!("{stem}.bin"),
                _ => format!("{stem}.csv"),
            };
            let file = fs::File::create(self.path(&name)).with_context(|| format!("creating {name}"))?;
            let w = BufWriter::new(file);
            if format == "binary" {
                write_field_binary(f, w)?;
            } else {
                write_field_csv(f, w)?;
            }
            names.push(name);
        }
        Ok(names)
    }

    fn summary(&self, pass: bool, results: Value) -> Result<()> {
        let doc = json!({
            "command": self.command.as_str(),
            "seed": self.seed,
            "config_sha256": config_hash(&self.cfg.source),
            "refine": self.refine,
            "pass": pass,
            "results": results,
        });
        self.write("summary.json", serde_json::to_string_pretty(&doc)? + "\n")
    }

    /// Nodes and step of the single-kernel run (`--refine` doubles/halves).
    fn resolution(&self) -> (usize, f64) {
        let (n, dt) = (self.cfg.grid.nodes_per_axis, self.cfg.time.step_dt);
        if self.refine {
            (2 * n, 0.5 * dt)
        } else {
            (n, dt)
        }
    }
}

fn solve_with(
    cfg: &RunConfig,
    k: &KernelSpec,
    initial: impl Fn(&Grid) -> Result<Vec<f64>>,
    ext: &ExteriorData,
    nodes: usize,
    dt: f64,
    exec: Execution,
) -> Result<SpaceTimeField> {
    let grid = Grid::new(cfg.grid.dim_n, cfg.grid.half_width_l, nodes)?;
    let spec = SolveSpec::new(
        k.clone(),
        grid,
        initial(&grid)?,
        ext.clone(),
        (cfg.time.time_start, cfg.time_end()?),
        dt,
    )?
    .with_scheme(cfg.scheme)
    .with_execution(exec);
    Ok(solve(&spec)?)
}

/// Configured initial data sampled on `grid` (which may be finer than the configured one).
fn initial_on(cfg: &RunConfig, grid: &Grid) -> Result<Vec<f64>> {
    let mut c = cfg.clone();
    c.grid.nodes_per_axis = grid.nodes_per_axis();
    c.initial_values()
}

fn configured_solve(ctx: &Ctx, nodes: usize, dt: f64) -> Result<SpaceTimeField> {
    let cfg = ctx.cfg;
    solve_with(
        cfg,
        &cfg.kernel_spec()?,
        |g| initial_on(cfg, g),
        &cfg.exterior_data()?,
        nodes,
        dt,
        ctx.exec,
    )
}

/// Largest relative weak residual over a seeded battery of test functions.
fn residual_norm(ctx: &Ctx, f: &SpaceTimeField) -> Result<f64> {
    let k = ctx.cfg.kernel_spec()?;
    let ext = ctx.cfg.exterior_data()?;
    let wf = WeakForm::new(f, &k, &ext, ctx.exec)?;
    let mut worst: f64 = 0.0;
    for t in test_battery(f.grid(), (f.t_first(), f.t_last()), 8, ctx.seed) {
        worst = worst.max(wf.evaluate(&t)?.relative());
    }
    Ok(worst)
}

fn extrema(f: &SpaceTimeField) -> (f64, f64) {
    f.values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn cmd_solve(ctx: &Ctx) -> Result<Status> {
    let (nodes, dt) = ctx.resolution();
    let f = configured_solve(ctx, nodes, dt)?;
    let files = ctx.write_field("field", &f)?;
    let (lo, hi) = extrema(&f);
    let residual = residual_norm(ctx, &f)?;
    ctx.summary(
        true,
        json!({
            "nodes_per_axis": nodes,
            "dt": dt,
            "levels": f.level_count(),
            "scheme": ctx.cfg.scheme.as_str(),
            "kernel": ctx.cfg.kernel.family,
            "order_s": f.order(),
            "exterior": ctx.cfg.exterior_data()?.name(),
            "min": lo,
            "max": hi,
            "weak_residual_max_relative": residual,
            "field_files": files,
        }),
    )?;
    Ok(Status::Pass)
}

fn cmd_tail(ctx: &Ctx) -> Result<Status> {
    let tq = ctx
        .cfg
        .tail
        .as_ref()
        .ok_or_else(|| anyhow!("the tail command needs a [tail] section"))?;
    let (nodes, dt) = ctx.resolution();
    let f = configured_solve(ctx, nodes, dt)?;
    let files = ctx.write_field("field", &f)?;
    let ext = ctx.cfg.exterior_data()?;
    let x0 = tq.center_x0.clone().unwrap_or_else(|| vec![0.0; f.grid().dim()]);
    let q = TailQuery::new(&x0, tq.radius_r, tq.time_t1, tq.time_t2, parse_target(&tq.target)?)?;
    let avg = tail(&f, &ext, &q)?;
    let sup = tail_sup(&f, &ext, &q)?;
    let results = json!({
        "x0": x0,
        "radius_r": tq.radius_r,
        "time_t1": tq.time_t1,
        "time_t2": tq.time_t2,
        "target": tq.target,
        "tail": avg.value,
        "tail_error_estimate": avg.error_estimate,
        "tail_sup": sup.value,
        "nodes_per_axis": nodes,
        "dt": dt,
        "field_files": files,
    });
    ctx.write("tail.json", serde_json::to_string_pretty(&results)? + "\n")?;
    ctx.summary(true, results)?;
    Ok(Status::Pass)
}

/// Geometry of a single-kernel verification run.
pub fn configured_geometry(cfg: &RunConfig) -> Result<Geometry> {
    let s = cfg.order()?;
    let g = &cfg.geometry;
    let geometry = Geometry::new(cfg.center(), g.radius_r, g.radius_big_r, cfg.time_t0()?, s)
        .with_alpha(cfg.alpha.expect("resolved with order_s"))
        .with_theta(g.theta)
        .with_delta(g.delta);
    geometry.validate(s)?;
    Ok(geometry)
}

fn cmd_verify(ctx: &Ctx) -> Result<Status> {
    let cfg = ctx.cfg;
    let k = cfg.kernel_spec()?;
    let ext = cfg.exterior_data()?;
    let geometry = configured_geometry(cfg)?;
    let (nodes, dt) = (cfg.grid.nodes_per_axis, cfg.time.step_dt);
    let coarse = configured_solve(ctx, nodes, dt)?;
    let mut files = ctx.write_field("field", &coarse)?;
    let mut member = EnsembleMember {
        id: 0,
        s: k.order(),
        lambda: k.lambda(),
        nodes,
        dt,
        geometry: Some(geometry.clone()),
        scheme_error: 0.0,
        gate: None,
        reports: Vec::new(),
    };
    let fine = if ctx.refine {
        let fine = configured_solve(ctx, 2 * nodes, 0.5 * dt)?;
        files.extend(ctx.write_field("field_fine", &fine)?);
        member.nodes = 2 * nodes;
        member.dt = 0.5 * dt;
        member.scheme_error = scheme_error_estimate(&coarse, &fine)?;
        if cfg.ensemble.residual_tests > 0 {
            member.gate = Some(residual_gate(
                &coarse,
                &fine,
                &k,
                &ext,
                cfg.ensemble.residual_tests,
                ctx.seed,
                ctx.exec,
            )?);
        }
        Some(fine)
    } else {
        None
    };
    let tol = 10.0 * member.scheme_error;
    for &theorem in &cfg.theorems {
        let gated = match (theorem, member.gate) {
            (TheoremId::LocalBoundedness | TheoremId::LocalBoundednessSigned, Some(g)) if !g.is_subsolution() => {
                Some(format!("subsolution gate failed: max residual {} > {}", g.max, g.band))
            }
            (TheoremId::WeakHarnack, Some(g)) if !g.is_supersolution() => {
                Some(format!("supersolution gate failed: min residual {} < -{}", g.min, g.band))
            }
            _ => None,
        };
        if let Some(msg) = gated {
            member.reports.push((theorem, Err(msg)));
            continue;
        }
        let rep = verify(theorem, &coarse, &ext, &geometry, tol).and_then(|c| match &fine {
            Some(f) => verify(theorem, f, &ext, &geometry, tol).map(|f| VerificationReport::with_refinement(&c, &f)),
            None => Ok(c),
        });
        member.reports.push((theorem, rep.map_err(|e| e.to_string())));
    }
    let gate = member.gate;
    let scheme_error = member.scheme_error;
    let result = EnsembleResult {
        seed: ctx.seed,
        members: vec![member],
        theorems: cfg.theorems.clone(),
    };
    write_results(ctx, &result)?;
    let pass = result.all_pass();
    ctx.summary(
        pass,
        json!({
            "theorems": summaries_json(&result),
            "failures": failures_json(&result),
            "positivity_tolerance": tol,
            "scheme_error": scheme_error,
            "residual_gate": gate.map(|g| json!({"max": g.max, "min": g.min, "band": g.band})),
            "geometry": geometry_json(&geometry),
            "field_files": files,
        }),
    )?;
    Ok(Status::from_pass(pass))
}

fn geometry_json(g: &Geometry) -> Value {
    json!({
        "center_x0": g.x0,
        "radius_r": g.r,
        "radius_big_r": g.big_r,
        "time_t0": g.t0,
        "alpha": g.alpha,
        "theta": g.theta,
        "delta": g.delta,
    })
}

fn write_results(ctx: &Ctx, result: &EnsembleResult) -> Result<()> {
    let file = fs::File::create(ctx.path("results.csv")).context("creating results.csv")?;
    result.write_csv(BufWriter::new(file))?;
    Ok(())
}

fn summaries_json(result: &EnsembleResult) -> Value {
    result
        .summaries()
        .iter()
        .map(|s| {
            json!({
                "theorem_id": s.theorem.as_str(),
                "evaluated": s.evaluated,
                "errors": s.failures,
                "passed": s.passed,
                "C_max": s.c_max,
                "C_median": s.c_median,
                "refinement_ratio_min": s.ratio_min,
                "refinement_ratio_max": s.ratio_max,
            })
        })
        .collect()
}

fn failures_json(result: &EnsembleResult) -> Value {
    result
        .failures()
        .into_iter()
        .map(|(m, t, e)| json!({"member_id": m, "theorem_id": t.as_str(), "error": e}))
        .collect()
}

/// Ensemble described by the configuration.
pub fn ensemble_spec(cfg: &RunConfig, seed: u64, refine: bool, exec: Execution) -> Result<EnsembleSpec> {
    let en = &cfg.ensemble;
    let families = match &en.families {
        Some(list) => list.iter().map(|f| f.parse::<KernelFamily>()).collect::<Result<Vec<_>, _>>()?,
        None => vec![cfg.kernel.family.parse::<KernelFamily>()?],
    };
    let g = &cfg.geometry;
    Ok(EnsembleSpec {
        dim: cfg.grid.dim_n,
        families,
        order: (en.order_s_range[0], en.order_s_range[1]),
        lambda: cfg.kernel.lambda,
        modulation: en.modulation.clone(),
        count: en.count,
        seed,
        half_width: cfg.grid.half_width_l,
        nodes: cfg.grid.nodes_per_axis,
        dt: cfg.time.step_dt,
        scheme: cfg.scheme,
        x0: cfg.center(),
        r: g.radius_r,
        big_r: g.radius_big_r,
        t0: g.time_t0,
        t_end: cfg.time.time_end,
        alpha: g.alpha,
        theta: g.theta,
        delta: g.delta,
        initial: InitialGenerator {
            baseline: en.initial_baseline,
            bumps: (en.bump_count[0], en.bump_count[1]),
            amplitude: (en.bump_amplitude[0], en.bump_amplitude[1]),
            width: (en.bump_width[0], en.bump_width[1]),
            spread: en.bump_spread,
        },
        exterior: ExteriorGenerator {
            baseline: en.exterior_baseline,
            amplitude: (en.exterior_amplitude[0], en.exterior_amplitude[1]),
            decay: (en.decay_gamma_range[0], en.decay_gamma_range[1]),
            negative_mass: en
                .negative_mass
                .map(|m| (m, en.negative_radius_inner, en.negative_radius_outer)),
        },
        refine,
        residual_tests: en.residual_tests,
        execution: exec,
    })
}

fn cmd_estimate(ctx: &Ctx) -> Result<Status> {
    let spec = ensemble_spec(ctx.cfg, ctx.seed, ctx.refine, ctx.exec)?;
    let result = estimate_constants(&spec, &ctx.cfg.theorems)?;
    write_results(ctx, &result)?;
    let pass = result.all_pass();
    ctx.summary(
        pass,
        json!({
            "members": spec.count,
            "nodes_per_axis": if spec.refine { 2 * spec.nodes } else { spec.nodes },
            "dt": if spec.refine { 0.5 * spec.dt } else { spec.dt },
            "theorems": summaries_json(&result),
            "failures": failures_json(&result),
        }),
    )?;
    Ok(Status::from_pass(pass))
}

fn cmd_oracle(ctx: &Ctx) -> Result<Status> {
    let cfg = ctx.cfg;
    let s = cfg.order()?;
    if s != 0.5 || cfg.kernel.family != "fractional_laplacian" || cfg.kernel.lambda != 1.0 {
        bail!("the oracle command compares against the Poisson kernel: it needs family = fractional_laplacian, order_s = 0.5, lambda = 1");
    }
    let dim = cfg.grid.dim_n;
    let shift = cfg.oracle.shift_time;
    let t_start = cfg.time.time_start;
    let exact = move |x: &[f64], t: f64| fractional_heat_kernel(dim, 0.5, x, shift + t - t_start);
    let ext = ExteriorData::poisson_kernel(dim, shift - t_start);
    let (nodes, dt) = ctx.resolution();
    let f = solve_with(
        cfg,
        &KernelSpec::fractional_laplacian(dim, 0.5)?,
        |g| Ok(g.sample(|x| exact(x, t_start).unwrap_or(f64::NAN))),
        &ext,
        nodes,
        dt,
        ctx.exec,
    )?;
    let files = ctx.write_field("field", &f)?;
    let grid = *f.grid();
    let mut csv = String::from("time,max_abs_error,max_exact\n");
    let (mut err, mut peak): (f64, f64) = (0.0, 0.0);
    for (m, &t) in f.times().iter().enumerate() {
        let (mut e_m, mut p_m): (f64, f64) = (0.0, 0.0);
        for (i, &v) in f.level(m).iter().enumerate() {
            let u = exact(&grid.point(i), t)?;
            e_m = e_m.max((v - u).abs());
            p_m = p_m.max(u.abs());
        }
        csv.push_str(&format!("{t},{e_m},{p_m}\n"));
        err = err.max(e_m);
        peak = peak.max(p_m);
    }
    ctx.write("oracle.csv", csv)?;
    let rel = err / peak;
    let pass = rel <= cfg.oracle.tolerance_rel;
    ctx.summary(
        pass,
        json!({
            "nodes_per_axis": nodes,
            "dt": dt,
            "max_abs_error": err,
            "relative_error": rel,
            "tolerance_rel": cfg.oracle.tolerance_rel,
            "field_files": files,
        }),
    )?;
    Ok(Status::from_pass(pass))
}

struct LemmaRow {
    lemma: String,
    kernel: String,
    parameter: &'static str,
    value: f64,
    nodes: usize,
    c_emp: f64,
    reference: f64,
    stability: f64,
    pass: bool,
}

fn lemma_row(lemma: &str, s: f64, nodes: usize, coarse: &LemmaReport, fine: &LemmaReport) -> LemmaRow {
    let r = LemmaReport::with_refinement(coarse, fine);
    LemmaRow {
        lemma: lemma.into(),
        kernel: String::new(),
        parameter: "s",
        value: s,
        nodes,
        c_emp: r.c_emp,
        reference: coarse.c_emp,
        stability: r.refinement_ratio.unwrap_or(f64::NAN),
        pass: r.pass,
    }
}

fn cmd_lemma_check(ctx: &Ctx) -> Result<Status> {
    let cfg = ctx.cfg;
    let lm = &cfg.lemma;
    let mut rows = Vec::new();
    for (part, qs) in [(AlgebraicPart::I, &lm.algebraic_q_part_i), (AlgebraicPart::Ii, &lm.algebraic_q_part_ii)] {
        for &q in qs {
            let s = search_algebraic_constants(part, q, lm.algebraic_tuples, ctx.seed)?;
            rows.push(LemmaRow {
                lemma: format!("algebraic_{part}"),
                kernel: String::new(),
                parameter: "q",
                value: q,
                nodes: s.tuples,
                c_emp: s.constant,
                reference: s.stated_rate,
                stability: f64::NAN,
                pass: s.violations == 0 && s.tracks_rate,
            });
        }
    }

    let coarse = cfg.grid();
    let fine = coarse.refined();
    let x0 = cfg.center();
    let r = lm.radius_r;
    let sample = |g: &Grid| initial_on(cfg, g);
    let (fc, ff) = (sample(&coarse)?, sample(&fine)?);
    let cone = coarse.sample(|x| x[0]);
    let cone_fine = fine.sample(|x| x[0]);
    for &s in &lm.orders_s {
        for (name, psi, a, b) in [
            ("poincare_constant_weight", PsiProfile::Constant, &fc, &ff),
            ("poincare_cone_weight", PsiProfile::TruncatedCone, &cone, &cone_fine),
        ] {
            let c = check_weighted_poincare(&coarse, a, &x0, r, s, psi)?;
            let f = check_weighted_poincare(&fine, b, &x0, r, s, psi)?;
            rows.push(lemma_row(name, s, fine.nodes_per_axis(), &c, &f));
        }
        if (coarse.dim() as f64) > 2.0 * s {
            let c = check_sobolev(&coarse, &fc, &x0, r, s)?;
            let f = check_sobolev(&fine, &ff, &x0, r, s)?;
            rows.push(lemma_row("sobolev", s, fine.nodes_per_axis(), &c, &f));
        }
        let mut kernels = vec![(KernelSpec::fractional_laplacian(coarse.dim(), s)?, 1e-6)];
        if cfg.kernel.family == "modulated" {
            let name = cfg.kernel.modulation.as_deref().unwrap_or("product_cosine");
            let m = Modulation::named(name, cfg.kernel.modulation_amplitude)?;
            // Oscillatory kernels need a looser quadrature budget.
            kernels.push((KernelSpec::modulated(coarse.dim(), s, cfg.kernel.lambda, m)?, 1e-3));
        }
        let samples: Vec<Vec<f64>> = [0.0, 0.5, 3.0, 10.0]
            .iter()
            .map(|v| {
                let mut x = vec![0.0; coarse.dim()];
                x[0] = v * r;
                x
            })
            .collect();
        for (k, tol) in kernels {
            let rep = check_phi_eigenbounds(&k, r, &samples, tol, 0.25 * r)?;
            rows.push(LemmaRow {
                lemma: "phi_eigenbounds".into(),
                kernel: k.family().as_str().into(),
                parameter: "s",
                value: s,
                nodes: 0,
                c_emp: rep.c1_emp,
                reference: rep.c2_emp,
                stability: rep.spread,
                pass: rep.pass,
            });
        }
    }
    let mut csv = String::from("lemma,kernel,parameter,value,N,C_emp,reference,stability,pass\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.lemma, r.kernel, r.parameter, r.value, r.nodes, r.c_emp, r.reference, r.stability, r.pass
        ));
    }
    ctx.write("lemmas.csv", csv)?;
    let pass = rows.iter().all(|r| r.pass);
    let failed: Vec<Value> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| json!({"lemma": r.lemma, "kernel": r.kernel, r.parameter: r.value}))
        .collect();
    ctx.summary(pass, json!({"rows": rows.len(), "failed": failed}))?;
    Ok(Status::from_pass(pass))
}

/// Output directory of a run: `--out` wins over `output.directory`.
pub fn output_dir(cfg: &RunConfig, ov: &Overrides) -> PathBuf {
    ov.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.directory))
}

/// Executes `command`, writing every artifact into the output directory.
pub fn run(cfg: &RunConfig, command: Command, ov: &Overrides) -> Result<Status> {
    if let Some(c) = cfg.command {
        if c != command {
            bail!("configuration is for `{c}` but `{command}` was requested");
        }
    }
    let dir = output_dir(cfg, ov);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let marker = dir.join(FAILED_MARKER);
    if marker.exists() {
        fs::remove_file(&marker)?;
    }
    let ctx = Ctx {
        cfg,
        command,
        dir,
        seed: ov.seed.unwrap_or(cfg.seed),
        refine: ov.refine,
        exec: if ov.jobs == Some(1) {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
    };
    match command {
        Command::Solve => cmd_solve(&ctx),
        Command::Tail => cmd_tail(&ctx),
        Command::Verify => cmd_verify(&ctx),
        Command::Estimate => cmd_estimate(&ctx),
        Command::Oracle => cmd_oracle(&ctx),
        Command::LemmaCheck => cmd_lemma_check(&ctx),
    }
}

/// Leaves a marker with the error chain next to any partial output.
pub fn mark_failed(dir: &Path, err: &anyhow::Error) {
    if dir.is_dir() {
        let _ = fs::write(dir.join(FAILED_MARKER), format!("{err:#}\n"));
    }
}
