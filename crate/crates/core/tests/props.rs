use std::f64::consts::PI;

use proptest::prelude::*;

use bwalk_core::*;

fn kernel1(alpha: f64, radius: u32) -> JumpKernel {
    build_kernel(1, alpha, AngularProfile::constant(1, 1.0).unwrap(), radius).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernels_are_normalised(alpha in 0.05f64..1.95, radius in 4u32..200) {
        let k = kernel1(alpha, radius);
        let core: f64 = k.core().iter().map(|(_, p)| p).sum();
        prop_assert!((core + k.p_tail() - 1.0).abs() < 1e-12);
        prop_assert!(k.core().iter().all(|(z, p)| *p > 0.0 && k.pmf([-z[0], -z[1]]) == *p));
    }

    #[test]
    fn symbol_is_even_and_inside_the_unit_interval(alpha in 0.05f64..1.95, s in 1e-6f64..PI) {
        let k = kernel1(alpha, 16);
        let v = kernel_symbol(&k, &[s]);
        prop_assert!(v > -1.0 && v < 1.0);
        prop_assert_eq!(v, kernel_symbol(&k, &[-s]));
        prop_assert!((v - kernel_symbol(&k, &[s + 2.0 * PI])).abs() < 1e-13);
        let smooth = 1.0 - k.smoothed_deficit(&[s]);
        prop_assert!((v - smooth).abs() < 1e-11, "{} vs {}", v, smooth);
    }

    #[test]
    fn planar_symbol_is_even_and_bounded(
        alpha in 0.1f64..1.9,
        s0 in -PI..PI,
        s1 in -PI..PI,
        tilt in 0.0f64..0.6,
    ) {
        prop_assume!(s0.hypot(s1) > 1e-6);
        let values = (0..8).map(|j| 1.0 + tilt * (PI * j as f64 / 2.0).cos()).collect();
        let k = build_kernel(2, alpha, AngularProfile::tabulated(values).unwrap(), 6).unwrap();
        let v = kernel_symbol(&k, &[s0, s1]);
        prop_assert!(v > -1.0 && v < 1.0, "{}", v);
        prop_assert!((v - kernel_symbol(&k, &[-s0, -s1])).abs() < 1e-14);
    }

    #[test]
    fn generator_is_linear_and_kills_constants(
        f in prop::collection::vec(-1.0f64..1.0, 64),
        g in prop::collection::vec(-1.0f64..1.0, 64),
        c in -5.0f64..5.0,
        alpha in 0.2f64..1.8,
    ) {
        let k = kernel1(alpha, 8);
        let grid = TorusGrid::new(1, 64).unwrap();
        let field = |v: Vec<f64>| ScalarField::new(grid, v, 0.0, 0.0);
        let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + c * b).collect();
        let lf = apply_generator(&k, &field(f)).unwrap();
        let lg = apply_generator(&k, &field(g)).unwrap();
        let ls = apply_generator(&k, &field(sum)).unwrap();
        let lc = apply_generator(&k, &field(vec![c; 64])).unwrap();
        for i in 0..64 {
            let s = grid.site(i);
            prop_assert!((ls.value(s) - lf.value(s) - c * lg.value(s)).abs() < 1e-12);
            prop_assert!(lc.value(s).abs() < 1e-12);
        }
    }

    #[test]
    fn solved_fields_conserve_mass_and_compose(
        alpha in 0.3f64..1.9,
        t1 in 0.01f64..3.0,
        t2 in 0.01f64..3.0,
    ) {
        let k = kernel1(alpha, 8);
        let grid = TorusGrid::new(1, 64).unwrap();
        let solver = Solver::new(&k, grid, SolverOptions::default()).unwrap();
        let a = solver.solve_p(t1).unwrap();
        let b = solver.solve_p(t2).unwrap();
        let ab = solver.solve_p(t1 + t2).unwrap();
        let (s, e) = ab.total();
        prop_assert!((s * e.exp() - 1.0).abs() < 1e-10);
        prop_assert!(ab.min_mantissa() > 0.0);
        for i in (0..64).step_by(5) {
            let x = grid.site(i)[0];
            let conv: f64 = (0..64)
                .map(|j| {
                    let y = grid.site(j)[0];
                    let w = grid.site(grid.wrapped_index([x - y, 0]));
                    a.value([y, 0]) * b.value(w)
                })
                .sum();
            prop_assert!((conv - ab.value([x, 0])).abs() < 1e-12);
        }
    }

    #[test]
    fn second_moment_dominates(nu in 0.0f64..1.5, t in 0.0f64..3.0, alpha in 0.5f64..1.5) {
        let k = kernel1(alpha, 8);
        let grid = TorusGrid::new(1, 64).unwrap();
        let solver = Solver::new(&k, grid, SolverOptions { richardson_limit: 1.0, ..Default::default() })
            .unwrap();
        let m1 = solver.solve_m1(nu, t).unwrap();
        let m2 = solver.solve_m2(nu, t, 16).unwrap().m2;
        for i in 0..64 {
            prop_assert!(m2.ln_abs(i) >= 2.0 * m1.ln_abs(i) - 1e-12);
            prop_assert!(m2.ln_abs(i) >= m1.ln_abs(i) - 1e-12);
        }
    }

    #[test]
    fn front_is_invariant_under_joint_rescaling(lambda_exp in -200.0f64..200.0, t in 3.0f64..6.0) {
        let k = kernel1(1.0, 16);
        let m1 = solve_m1(&k, 1.0, t, TorusGrid::new(1, 4096).unwrap()).unwrap();
        let lambda = 10f64.powf(lambda_exp);
        let a = front_radius(&m1, [1.0, 0.0], 1.0).unwrap();
        let b = front_radius(&m1.scaled(lambda), [1.0, 0.0], lambda).unwrap();
        prop_assert_eq!(a.radius, b.radius);
        prop_assert_eq!(a.site, b.site);
    }

    #[test]
    fn gamma_identity(alpha in 1e-3f64..1.999, d in 1usize..4) {
        let g = gamma(alpha, d).unwrap();
        let df = d as f64;
        prop_assert!((g * (df + alpha) - (2.0 + df / alpha)).abs() < 1e-12 * (2.0 + df / alpha));
    }

    #[test]
    fn field_renormalisation_keeps_values(
        v in prop::collection::vec(1e-12f64..1e12, 16),
        e in -800.0f64..800.0,
        shift in -100.0f64..100.0,
    ) {
        let grid = TorusGrid::new(1, 16).unwrap();
        let f = ScalarField::new(grid, v.clone(), e, 1.0);
        let max = f.mantissa().iter().cloned().fold(0.0, f64::max);
        prop_assert!((1e-3..=1e3).contains(&max));
        for (i, x) in v.iter().enumerate() {
            prop_assert!((f.ln_abs(i) - (x.ln() + e)).abs() < 1e-9);
            prop_assert!((f.shifted(shift).ln_abs(i) - (x.ln() + e + shift)).abs() < 1e-9);
        }
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        prop_assert_eq!(ScalarField::read_binary(buf.as_slice()).unwrap(), f);
    }
}
