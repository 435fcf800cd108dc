//! Invariants checked on randomly drawn inputs.

use nonlocal_parabolic::analysis::{
    check_algebraic_inequality, verify, AlgebraicPart, Geometry, TheoremId,
};
use nonlocal_parabolic::geometry::{cylinder, field_extrema, read_field_binary, write_field_binary, Orientation};
use nonlocal_parabolic::nonlocal_op::assemble_with;
use nonlocal_parabolic::tails::{tail, TailQuery, TailTarget};
use nonlocal_parabolic::*;
use proptest::prelude::*;

fn bump_field(s: f64, shift: f64, width: f64) -> SpaceTimeField {
    let grid = Grid::new(1, 4.0, 96).unwrap();
    let times: Vec<f64> = (0..=40).map(|m| m as f64 / 16.0).collect();
    SpaceTimeField::from_fn(grid, s, times, |x, t| {
        0.2 + (-(x[0] - shift).powi(2) / (width * width)).exp() * (1.0 + 0.3 * t)
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operator_is_an_m_matrix_annihilating_constants(s in 0.1f64..0.9, n in 12usize..40, c in -5.0f64..5.0) {
        let k = KernelSpec::fractional_laplacian(1, s).unwrap();
        let grid = Grid::new(1, 2.0, n).unwrap();
        let ext = ExteriorData::constant(c);
        let op = assemble_with(&k, &grid, 0.0, &ext, Execution::Sequential).unwrap();
        let m = op.matrix();
        for i in 0..n {
            prop_assert!(m[(i, i)] > 0.0);
            for j in 0..n {
                if i != j {
                    prop_assert!(m[(i, j)] <= 0.0);
                    prop_assert_eq!(m[(i, j)], m[(j, i)]);
                }
            }
        }
        let r = op.apply(&vec![c; n]);
        let scale = m[(0, 0)].abs() * c.abs().max(1.0);
        prop_assert!(r.iter().all(|v| v.abs() <= 1e-12 * scale), "{r:?}");
    }

    #[test]
    fn sequential_and_parallel_assembly_agree_bitwise(s in 0.1f64..0.9, n in 8usize..32) {
        let k = KernelSpec::modulated(1, s, 2.0, Modulation::named("product_cosine", 0.3).unwrap()).unwrap();
        let grid = Grid::new(1, 2.0, n).unwrap();
        let ext = ExteriorData::power_law(0.4, -1.0);
        let a = assemble_with(&k, &grid, 0.3, &ext, Execution::Sequential).unwrap();
        let b = assemble_with(&k, &grid, 0.3, &ext, Execution::Parallel).unwrap();
        prop_assert_eq!(a.matrix(), b.matrix());
        prop_assert_eq!(a.exterior_load(), b.exterior_load());
    }

    #[test]
    fn constants_are_stationary(s in 0.1f64..0.9, c in -3.0f64..3.0) {
        let k = KernelSpec::constant_multiple(1, s, 1.5, 2.0).unwrap();
        let grid = Grid::new(1, 2.0, 32).unwrap();
        let spec = SolveSpec::new(k, grid, vec![c; 32], ExteriorData::constant(c), (0.0, 0.5), 0.05).unwrap();
        let f = solve(&spec).unwrap();
        prop_assert!(f.values().iter().all(|v| (v - c).abs() <= 1e-12 * c.abs().max(1.0)));
    }

    #[test]
    fn extrema_scale_with_the_field(lambda in 1e-3f64..1e3, t0 in 1.0f64..2.5, r in 0.3f64..1.5) {
        let f = bump_field(0.4, 0.3, 0.7);
        let c = cylinder(&[0.1], t0, r, 0.4, Orientation::Backward).unwrap();
        let a = field_extrema(&f, &c).unwrap();
        let b = field_extrema(&f.map(|v| lambda * v), &c).unwrap();
        for (x, y) in [(a.sup, b.sup), (a.inf, b.inf), (a.mean, b.mean)] {
            prop_assert!((lambda * x - y).abs() <= 1e-12 * y.abs());
        }
        prop_assert_eq!(a.node_count, b.node_count);
    }

    #[test]
    fn tails_are_positively_homogeneous(lambda in 1e-3f64..1e3, r in 0.3f64..1.5) {
        let f = bump_field(0.6, -0.2, 0.5);
        let ext = ExteriorData::power_law(0.5, -0.7);
        let q = TailQuery::new(&[0.0], r, 0.5, 2.0, TailTarget::AbsoluteValue).unwrap();
        let a = tail(&f, &ext, &q).unwrap().value;
        let b = tail(&f.map(|v| lambda * v), &ext.scaled(lambda), &q).unwrap().value;
        prop_assert!((lambda * a - b).abs() <= 1e-10 * b);
    }

    #[test]
    fn empirical_constants_are_scale_invariant(lambda in 1e-3f64..1e3, shift in -0.5f64..0.5) {
        let s = 0.5;
        let f = bump_field(s, shift, 0.8);
        let ext = ExteriorData::power_law(0.3, -1.0);
        let g = Geometry::new(vec![0.0], 0.5, 2.0, 1.2, s);
        for theorem in TheoremId::ALL {
            let a = verify(theorem, &f, &ext, &g, 0.0).unwrap();
            let b = verify(theorem, &f.map(|v| lambda * v), &ext.scaled(lambda), &g, 0.0).unwrap();
            prop_assert!((a.c_emp - b.c_emp).abs() <= 1e-10 * a.c_emp.abs().max(1e-300), "{theorem}: {} vs {}", a.c_emp, b.c_emp);
            prop_assert_eq!(a.c_emp, a.recompute());
            prop_assert_eq!(b.pass, a.pass);
        }
    }

    #[test]
    fn binary_fields_round_trip_exactly(seed in 0u64..1000, n in 3usize..20, m in 1usize..6) {
        let grid = Grid::new(1, 1.5, n).unwrap();
        let times: Vec<f64> = (0..=m).map(|j| j as f64 * 0.1 + seed as f64 * 1e-3).collect();
        let f = SpaceTimeField::from_fn(grid, 0.35, times, |x, t| (x[0] * 7.1 + t * seed as f64).sin() / 3.0).unwrap();
        let mut buf = Vec::new();
        write_field_binary(&f, &mut buf).unwrap();
        let g = read_field_binary(buf.as_slice()).unwrap();
        prop_assert_eq!(f.times(), g.times());
        prop_assert!(f.values().iter().zip(g.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
        prop_assert_eq!(f.order().to_bits(), g.order().to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn algebraic_part_i_holds_at_the_stated_rate(
        q in 1.05f64..9.0,
        la in -3.0f64..3.0, lb in -3.0f64..3.0, lal in -3.0f64..3.0, lbe in -3.0f64..3.0,
    ) {
        let p = |e: f64| 10f64.powf(e);
        let c = check_algebraic_inequality(AlgebraicPart::I, q, p(la), p(lb), p(lal), p(lbe), &[AlgebraicPart::I.stated_rate(q)]).unwrap();
        prop_assert!(c.holds, "{c:?}");
    }

    #[test]
    fn algebraic_part_ii_holds_at_the_stated_rate(
        q in 0.05f64..0.95,
        la in -3.0f64..3.0, lb in -3.0f64..3.0, lal in -3.0f64..3.0, lbe in -3.0f64..3.0,
    ) {
        let p = |e: f64| 10f64.powf(e);
        let constants = [q / (1.0 - q), AlgebraicPart::Ii.stated_rate(q)];
        let c = check_algebraic_inequality(AlgebraicPart::Ii, q, p(la), p(lb), p(lal), p(lbe), &constants).unwrap();
        prop_assert!(c.holds, "{c:?}");
    }

    #[test]
    fn algebraic_inequalities_are_tight_on_the_diagonal(q in 1.05f64..9.0, la in -3.0f64..3.0, lal in -3.0f64..3.0) {
        // a = b and alpha = beta make both sides vanish.
        let (a, al) = (10f64.powf(la), 10f64.powf(lal));
        let c = check_algebraic_inequality(AlgebraicPart::I, q, a, a, al, al, &[0.0]).unwrap();
        prop_assert!(c.holds);
        prop_assert!(c.lhs.abs() <= 1e-12 * (al.powf(q + 1.0) * a.powf(-q)).max(1.0) && c.rhs.abs() <= 1e-12 * al.max(1.0));
    }
}
