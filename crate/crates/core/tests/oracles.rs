//! Cross-checks of the lattice machinery against closed forms and the
//! independent reference quadrature.

use std::f64::consts::PI;

use libm::tgamma;
use nonlocal_parabolic::kernels::fractional_laplacian_constant;
use nonlocal_parabolic::nonlocal_op::apply_pointwise;
use nonlocal_parabolic::oracles::{fractional_heat_kernel, reference_quadrature, Region};
use nonlocal_parabolic::tails::{tail, TailQuery, TailTarget};
use nonlocal_parabolic::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn normalisation_matches_gamma_formula() {
    for s in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let one = s * 4f64.powf(s) * tgamma(0.5 + s) / (PI.sqrt() * tgamma(1.0 - s));
        let two = s * 4f64.powf(s) * tgamma(1.0 + s) / (PI * tgamma(1.0 - s));
        for (dim, exact) in [(1, one), (2, two)] {
            let c = fractional_laplacian_constant(dim, s);
            assert!((c - exact).abs() <= 1e-9 * exact, "n={dim} s={s}: {c} vs {exact}");
        }
    }
}

#[test]
fn half_laplacian_of_the_cauchy_profile() {
    // p(x, 1) = 1 / (pi (1 + x^2)) solves d_t p = -(-Delta)^{1/2} p, so
    // (-Delta)^{1/2} p(., 1) = -d_t p = (1 - x^2) / (pi (1 + x^2)^2).
    let k = KernelSpec::fractional_laplacian(1, 0.5).unwrap();
    for x in [0.0, 0.3, 1.0, 2.5, 7.0] {
        let got = apply_pointwise(&k, |y| 1.0 / (PI * (1.0 + y[0] * y[0])), -2.0, &[x], 0.0, 1e-10).unwrap();
        let exact = (1.0 - x * x) / (PI * (1.0 + x * x).powi(2));
        assert!((got.value - exact).abs() <= 1e-7, "x={x}: {} vs {exact}", got.value);
    }
}

#[test]
fn fractional_laplacian_of_the_bessel_potential_profile() {
    // (-Delta)^s (1 + x^2)^{-(1-2s)/2} = 4^s G((1+2s)/2) / G((1-2s)/2) (1 + x^2)^{-(1+2s)/2}, s < 1/2.
    for s in [0.15, 0.3, 0.4] {
        let k = KernelSpec::fractional_laplacian(1, s).unwrap();
        let c = 4f64.powf(s) * tgamma(0.5 + s) / tgamma(0.5 - s);
        let p = 0.5 - s;
        for x in [0.0, 0.8, 3.0] {
            let got = apply_pointwise(&k, |y| (1.0 + y[0] * y[0]).powf(-p), -2.0 * p, &[x], 0.0, 1e-9).unwrap();
            let exact = c * (1.0 + x * x).powf(-0.5 - s);
            assert!((got.value - exact).abs() <= 1e-6 * exact, "s={s} x={x}: {} vs {exact}", got.value);
        }
    }
}

#[test]
fn poisson_tail_matches_reference_quadrature() {
    // Tail(p; 0, 1, 1, 2) with s = 1/2: (1/(t2-t1)) int_1^2 int_{|y|>1} p(y, t) |y|^{-2} dy dt.
    let grid = Grid::new(1, 4.0, 257).unwrap();
    let times: Vec<f64> = (0..=64).map(|m| 1.0 + m as f64 / 64.0).collect();
    let f = SpaceTimeField::from_fn(grid, 0.5, times, |x, t| fractional_heat_kernel(1, 0.5, x, t).unwrap()).unwrap();
    let ext = ExteriorData::poisson_kernel(1, 0.0);
    let q = TailQuery::new(&[0.0], 1.0, 1.0, 2.0, TailTarget::AbsoluteValue).unwrap();
    let got = tail(&f, &ext, &q).unwrap().value;
    let reference = reference_quadrature(
        |t| {
            reference_quadrature(
                |y| fractional_heat_kernel(1, 0.5, y, t[0]).unwrap() / (y[0] * y[0]),
                &Region::Exterior1d { center: 0.0, radius: 1.0 },
                &[],
                1e-11,
            )
            .unwrap()
            .value
        },
        &Region::Interval(1.0, 2.0),
        &[],
        1e-10,
    )
    .unwrap()
    .value;
    assert!((got - reference).abs() <= 0.01 * reference, "{got} vs {reference}");
}

#[test]
fn reference_quadrature_on_random_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..50 {
        let (est, exact) = match case % 3 {
            0 => {
                // int_a^b x^p dx
                let (a, b): (f64, f64) = (rng.gen_range(0.1..2.0), rng.gen_range(2.5..6.0));
                let p: f64 = rng.gen_range(-2.5..3.0);
                let exact = (b.powf(p + 1.0) - a.powf(p + 1.0)) / (p + 1.0);
                (reference_quadrature(|x| x[0].powf(p), &Region::Interval(a, b), &[], 1e-12).unwrap().value, exact)
            }
            1 => {
                // int_{|x - c| > r} |x - c|^{-1-2s} dx = r^{-2s} / s
                let (c, r, s): (f64, f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(0.2..3.0), rng.gen_range(0.1..0.9));
                let est = reference_quadrature(
                    |x| (x[0] - c).abs().powf(-1.0 - 2.0 * s),
                    &Region::Exterior1d { center: c, radius: r },
                    &[],
                    1e-11,
                )
                .unwrap()
                .value;
                (est, r.powf(-2.0 * s) / s)
            }
            _ => {
                // int_{|x| > r} |x|^{-2-2s} dx over the plane = pi r^{-2s} / s
                let (r, s): (f64, f64) = (rng.gen_range(0.2..3.0), rng.gen_range(0.1..0.9));
                let est = reference_quadrature(
                    |x| (x[0] * x[0] + x[1] * x[1]).powf(-1.0 - s),
                    &Region::Exterior2d { center: [0.0, 0.0], radius: r },
                    &[],
                    1e-10,
                )
                .unwrap()
                .value;
                (est, PI * r.powf(-2.0 * s) / s)
            }
        };
        assert!((est - exact).abs() <= 1e-8 * exact.abs(), "case {case}: {est} vs {exact}");
    }
}
