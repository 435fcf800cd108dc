//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test --test acceptance`.

use std::time::Instant;

use nonlocal_parabolic::analysis::{
    check_sobolev, check_sobolev_parabolic, check_weighted_poincare, estimate_constants, search_algebraic_constants,
    tail_necessity_probe, AlgebraicPart, EnsembleSpec, ExteriorGenerator, LemmaReport, ProbeSpec, PsiProfile,
    TheoremId,
};
use nonlocal_parabolic::nonlocal_op::check_phi_eigenbounds;
use nonlocal_parabolic::oracles::{fractional_heat_kernel, symbol_eigencheck};
use nonlocal_parabolic::tails::{tail, tail_sup, TailQuery, TailTarget};
use nonlocal_parabolic::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn mixed_families() -> Vec<KernelFamily> {
    vec![
        KernelFamily::FractionalLaplacian,
        KernelFamily::ConstantMultiple,
        KernelFamily::Modulated,
    ]
}

/// Max over all levels of the max-norm error, relative to the largest exact value.
fn poisson_error(nodes: usize, dt: f64) -> f64 {
    let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
    let grid = Grid::new(1, 8.0, nodes).unwrap();
    let exact = |x: f64, t: f64| fractional_heat_kernel(1, 0.5, &[x], 1.0 + t).unwrap();
    let init = grid.sample(|x| exact(x[0], 0.0));
    let spec = SolveSpec::new(k, grid, init, ExteriorData::poisson_kernel(1, 1.0), (0.0, 1.0), dt).unwrap();
    let f = solve(&spec).unwrap();
    let mut err: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for (m, &t) in f.times().iter().enumerate() {
        for (i, v) in f.level(m).iter().enumerate() {
            let e = exact(grid.axis_coord(i), t);
            err = err.max((v - e).abs());
            peak = peak.max(e.abs());
        }
    }
    err / peak
}

fn criterion_1() -> Outcome {
    let errs: Vec<f64> = [(256, 1.0 / 64.0), (512, 1.0 / 128.0), (1024, 1.0 / 256.0)]
        .iter()
        .map(|&(n, dt)| poisson_error(n, dt))
        .collect();
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    outcome(
        errs[2] <= 0.02 && monotone,
        format!(
            "relative max-norm error {:.3e} / {:.3e} / {:.3e} at N = 256 / 512 / 1024",
            errs[0], errs[1], errs[2]
        ),
    )
}

fn criterion_2() -> Outcome {
    let c = 1.5;
    let kernels = vec![
        KernelSpec::fractional_laplacian(1, 0.4).unwrap(),
        KernelSpec::constant_multiple(1, 0.6, 1.7, 2.0).unwrap(),
        KernelSpec::modulated(1, 0.5, 3.0, Modulation::named("sinusoidal", 0.5).unwrap()).unwrap(),
        KernelSpec::modulated(1, 0.7, 3.0, Modulation::named("product_cosine", 0.5).unwrap()).unwrap(),
        KernelSpec::fractional_laplacian(2, 0.5).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for k in kernels {
        let grid = Grid::new(k.dim(), 3.0, if k.dim() == 1 { 128 } else { 16 }).unwrap();
        let spec = SolveSpec::new(
            k,
            grid,
            vec![c; grid.node_count()],
            ExteriorData::constant(c),
            (0.0, 1.0),
            0.01,
        )
        .unwrap();
        let f = solve(&spec).unwrap();
        assert_eq!(f.level_count(), 101);
        worst = worst.max(f.values().iter().map(|v| (v - c).abs()).fold(0.0, f64::max));
    }
    outcome(
        worst <= 1e-12,
        format!("max |u - c| = {worst:.2e} over 100 steps, 5 kernels"),
    )
}

fn criterion_3() -> Outcome {
    let spec = EnsembleSpec {
        families: mixed_families(),
        seed: 3,
        exterior: ExteriorGenerator {
            negative_mass: Some((0.8, 5.0, 7.0)),
            ..ExteriorGenerator::default()
        },
        ..EnsembleSpec::default()
    };
    let mut violations = 0usize;
    let mut worst: f64 = 0.0;
    for id in 0..spec.count {
        let p = spec.member_problem(id).unwrap();
        let grid = Grid::new(1, spec.half_width, spec.nodes).unwrap();
        // Range of the data: initial values and the exterior sampled densely.
        let mut lo = p.initial.iter().copied().fold(f64::INFINITY, f64::min);
        let mut hi = p.initial.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for j in 0..200_000 {
            let y = grid.half_width() + j as f64 * 1e-3;
            for v in [p.exterior.value(&[y], 0.0), p.exterior.value(&[-y], 0.0)] {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let f = solve(&SolveSpec::new(p.kernel, grid, p.initial, p.exterior, (0.0, p.t_end), spec.dt).unwrap()).unwrap();
        for &v in f.values() {
            let over = (lo - v).max(v - hi);
            worst = worst.max(over);
            if over > 1e-12 {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations over 20 members (largest excursion {worst:.2e})"),
    )
}

fn criterion_4() -> Outcome {
    let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
    let grid = Grid::new(1, 8.0, 2048).unwrap();
    let rows = symbol_eigencheck(&k, &grid, &[0.5, 1.0, 2.0]).unwrap();
    let worst = rows.iter().map(|r| (r.ratio() - 1.0).abs()).fold(0.0, f64::max);
    outcome(
        worst <= 0.02,
        format!(
            "eigenvalue / |xi|^(2s) = {} at N = 2048",
            rows.iter()
                .map(|r| format!("{:.6}", r.ratio()))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn ensemble_outcome(spec: &EnsembleSpec, theorems: &[TheoremId]) -> (bool, String) {
    let res = estimate_constants(spec, theorems).unwrap();
    let mut parts = Vec::new();
    for s in res.summaries() {
        parts.push(format!(
            "{} C_max {:.3} ratio [{:.3}, {:.3}] {}/{} pass",
            s.theorem, s.c_max, s.ratio_min, s.ratio_max, s.passed, s.evaluated
        ));
    }
    for (m, t, e) in res.failures() {
        parts.push(format!("member {m} {t}: {e}"));
    }
    (res.all_pass(), parts.join("; "))
}

fn criterion_5() -> Outcome {
    let spec = EnsembleSpec {
        families: mixed_families(),
        seed: 5,
        ..EnsembleSpec::default()
    };
    let (pass, detail) = ensemble_outcome(&spec, &TheoremId::MAIN);
    outcome(pass, detail)
}

fn criterion_6() -> Outcome {
    let p = tail_necessity_probe(&ProbeSpec::default()).unwrap();
    let rows: Vec<String> = p
        .rows
        .iter()
        .map(|r| format!("M={}: sup/inf {:.3}, C {:.3}", r.mass, r.ratio, r.c_emp))
        .collect();
    outcome(
        p.pass(),
        format!(
            "sup/inf grows {:.2}x, C_emp spread {:.3}x ({})",
            p.ratio_growth,
            p.c_spread,
            rows.join(", ")
        ),
    )
}

fn stable(coarse: &LemmaReport, fine: &LemmaReport) -> (bool, f64) {
    let r = LemmaReport::with_refinement(coarse, fine);
    (r.pass, r.refinement_ratio.unwrap())
}

fn criterion_7() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();

    let mut found = Vec::new();
    for (part, qs) in [
        (AlgebraicPart::I, [1.5, 2.0, 3.0, 5.0, 9.0]),
        (AlgebraicPart::Ii, [0.1, 0.25, 0.5, 0.75, 0.9]),
    ] {
        for q in qs {
            let s = search_algebraic_constants(part, q, 100_000, 7).unwrap();
            ok &= s.violations == 0 && s.tracks_rate;
            found.push(format!("{part}:q={q}:c={:.3}/rate {:.3}", s.constant, s.stated_rate));
        }
    }
    notes.push(format!("algebraic {}", found.join(" ")));

    let bumps = |x: &[f64]| (-(x[0] - 0.3).powi(2) / 0.2).exp() + 0.5 * (-(x[0] + 0.4).powi(2) / 0.5).exp();
    let mut worst: f64 = 1.0;
    for s in [0.3, 0.5, 0.7] {
        let (g1, g2) = (Grid::new(1, 4.0, 256).unwrap(), Grid::new(1, 4.0, 512).unwrap());
        for (f, psi) in [
            (&(|x: &[f64]| x[0]) as &dyn Fn(&[f64]) -> f64, PsiProfile::TruncatedCone),
            (&bumps as &dyn Fn(&[f64]) -> f64, PsiProfile::Constant),
        ] {
            let a = check_weighted_poincare(&g1, &g1.sample(f), &[0.0], 1.0, s, psi).unwrap();
            let b = check_weighted_poincare(&g2, &g2.sample(f), &[0.0], 1.0, s, psi).unwrap();
            let (p, r) = stable(&a, &b);
            ok &= p;
            worst = worst.max(r.max(1.0 / r));
        }
    }
    notes.push(format!("poincare worst ratio {worst:.3}"));

    let mut worst: f64 = 1.0;
    for s in [0.2, 0.4] {
        let (g1, g2) = (Grid::new(1, 4.0, 256).unwrap(), Grid::new(1, 4.0, 512).unwrap());
        let a = check_sobolev(&g1, &g1.sample(bumps), &[0.0], 1.0, s).unwrap();
        let b = check_sobolev(&g2, &g2.sample(bumps), &[0.0], 1.0, s).unwrap();
        let (p, r) = stable(&a, &b);
        ok &= p;
        worst = worst.max(r.max(1.0 / r));
    }
    let bump2 = |x: &[f64]| (-(x[0] - 0.3).powi(2) / 0.2 - x[1] * x[1] / 0.3).exp();
    let (g1, g2) = (Grid::new(2, 2.0, 48).unwrap(), Grid::new(2, 2.0, 96).unwrap());
    let a = check_sobolev(&g1, &g1.sample(bump2), &[0.0, 0.0], 1.0, 0.5).unwrap();
    let b = check_sobolev(&g2, &g2.sample(bump2), &[0.0, 0.0], 1.0, 0.5).unwrap();
    let (p, r) = stable(&a, &b);
    ok &= p;
    worst = worst.max(r.max(1.0 / r));
    let k = KernelSpec::fractional_laplacian(1, 0.3).unwrap();
    let parabolic = |nodes: usize, dt: f64| {
        let grid = Grid::new(1, 4.0, nodes).unwrap();
        let f = solve(&SolveSpec::new(k.clone(), grid, grid.sample(bumps), ExteriorData::zero(), (0.0, 1.0), dt).unwrap())
            .unwrap();
        check_sobolev_parabolic(&f, &[0.0], 1.0, 0.2, 0.8, None).unwrap()
    };
    let (p, r) = stable(&parabolic(256, 1.0 / 64.0), &parabolic(512, 1.0 / 128.0));
    ok &= p;
    worst = worst.max(r.max(1.0 / r));
    notes.push(format!("sobolev worst ratio {worst:.3}"));

    let mut worst_spread: f64 = 0.0;
    let samples: Vec<Vec<f64>> = [0.0, 0.5, 3.0, 10.0].iter().map(|v| vec![*v]).collect();
    for s in [0.3, 0.5, 0.7] {
        for (k, tol) in [
            (KernelSpec::fractional_laplacian(1, s).unwrap(), 1e-6),
            (
                KernelSpec::modulated(1, s, 2.0, Modulation::named("product_cosine", 0.4).unwrap()).unwrap(),
                1e-3,
            ),
        ] {
            let rep = check_phi_eigenbounds(&k, 1.0, &samples, tol, 0.25).unwrap();
            ok &= rep.pass;
            worst_spread = worst_spread.max(rep.spread);
        }
    }
    notes.push(format!("Phi_r spread over r in {{0.5, 1, 2}} at most {:.1}%", 100.0 * worst_spread));
    outcome(ok, notes.join("; "))
}

fn criterion_8() -> Outcome {
    let spec = EnsembleSpec {
        families: mixed_families(),
        seed: 8,
        exterior: ExteriorGenerator {
            negative_mass: Some((0.3, 6.0, 8.0)),
            ..ExteriorGenerator::default()
        },
        ..EnsembleSpec::default()
    };
    let (mut pass, detail) = ensemble_outcome(
        &spec,
        &[
            TheoremId::SupTailByTail,
            TheoremId::SupTailByTailMinus,
            TheoremId::TailPlusByMinus,
        ],
    );
    let times: Vec<f64> = (0..=64).map(|m| m as f64 / 64.0).collect();
    let one = SpaceTimeField::from_fn(Grid::new(1, 4.0, 321).unwrap(), 0.5, times, |_, _| 1.0).unwrap();
    let ext = ExteriorData::constant(1.0);
    let q = TailQuery::new(&[0.0], 1.0, 0.25, 0.75, TailTarget::AbsoluteValue).unwrap();
    let avg = tail(&one, &ext, &q).unwrap().value;
    let sup = tail_sup(&one, &ext, &q).unwrap().value;
    pass &= (avg - 2.0).abs() <= 0.02 && (sup - 2.0).abs() <= 0.02;
    outcome(pass, format!("{detail}; u = 1: Tail = {avg:.6}, Tail_inf = {sup:.6}"))
}

fn criterion_9() -> Outcome {
    let spec = EnsembleSpec {
        families: mixed_families(),
        count: 4,
        nodes: 64,
        dt: 1.0 / 16.0,
        seed: 9,
        exterior: ExteriorGenerator {
            negative_mass: Some((0.3, 6.0, 8.0)),
            ..ExteriorGenerator::default()
        },
        ..EnsembleSpec::default()
    };
    let a = estimate_constants(&spec, &TheoremId::ALL).unwrap().csv_string();
    let b = estimate_constants(&spec, &TheoremId::ALL).unwrap().csv_string();
    let seq = EnsembleSpec {
        execution: Execution::Sequential,
        ..spec
    };
    let c = estimate_constants(&seq, &TheoremId::ALL).unwrap().csv_string();
    outcome(
        a == b && a == c,
        format!(
            "{} CSV bytes; repeat identical: {}; sequential identical: {}",
            a.len(),
            a == b,
            a == c
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("oracle convergence", criterion_1),
        ("exactness on constants", criterion_2),
        ("discrete maximum principle", criterion_3),
        ("symbol normalisation", criterion_4),
        ("theorem stability", criterion_5),
        ("tail necessity probe", criterion_6),
        ("lemma suites", criterion_7),
        ("tail lemma checks", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} [{}] {}: {} ({:.1}s)",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
