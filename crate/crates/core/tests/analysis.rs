use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bwalk_core::*;

fn kernel() -> JumpKernel {
    build_kernel(1, 1.0, AngularProfile::constant(1, 1.0).unwrap(), 16).unwrap()
}

#[test]
fn gamma_balances_the_exponents() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let alpha = rng.random_range(0.01..1.99);
        let d = rng.random_range(1..=3usize);
        let g = gamma(alpha, d).unwrap();
        let df = d as f64;
        assert!((g * (df + alpha) - (2.0 + df / alpha)).abs() < 1e-12);
    }
    assert_eq!(gamma(1.0, 1).unwrap(), 1.5);
    assert!((gamma(1.0, 2).unwrap() - 4.0 / 3.0).abs() < 1e-15);
    assert!((gamma(1.5, 1).unwrap() - 16.0 / 15.0).abs() < 1e-15);
    assert!(gamma(0.0, 1).is_err());
    assert!(gamma(2.0, 1).is_err());
    assert!(gamma(1.0, 0).is_err());
}

#[test]
fn front_follows_the_exponential_law() {
    let k = kernel();
    let nu = 1.0;
    let solver = Solver::new(
        &k,
        TorusGrid::new(1, 1 << 17).unwrap(),
        SolverOptions::default(),
    )
    .unwrap();
    let crossings: Vec<FrontCrossing> = [6.0, 8.0, 10.0, 12.0]
        .iter()
        .map(|t| front_radius(&solver.solve_m1(nu, *t).unwrap(), [1.0, 0.0], 1.0).unwrap())
        .collect();
    let at10 = crossings[2].radius as f64;
    let predicted = predicted_front_radius(&k, nu, 10.0, [1.0, 0.0]);
    assert!(
        (at10 / predicted - 1.0).abs() < 0.15,
        "{at10} vs {predicted}"
    );
    let rep = fit_front(&k, nu, [1.0, 0.0], crossings).unwrap();
    assert_eq!(rep.target_rate, 0.5);
    assert!(
        (rep.exponential_rate / 0.5 - 1.0).abs() < 0.03,
        "{}",
        rep.exponential_rate
    );
    // the t^{1/(d+α)} prefactor adds about 1/(2t) to the raw slope
    assert!(rep.raw_slope > rep.exponential_rate);
}

#[test]
fn front_level_scales_with_the_field() {
    let k = kernel();
    let m1 = solve_m1(&k, 1.0, 6.0, TorusGrid::new(1, 1 << 14).unwrap()).unwrap();
    for &lambda in &[2.0, 0.37, 1e5, 1e-40] {
        let base = front_radius(&m1, [1.0, 0.0], 1.0).unwrap();
        let scaled = front_radius(&m1.scaled(lambda), [1.0, 0.0], lambda).unwrap();
        assert_eq!(base.radius, scaled.radius, "λ={lambda}");
        assert_eq!(base.site, scaled.site);
        assert!((base.refined - scaled.refined).abs() < 1e-9);
    }
    assert!(front_radius(&m1, [1.0, 0.0], 0.0).is_err());
    assert!(front_radius(&m1, [1.0, 0.0], 1e9).is_err());
}

#[test]
fn front_in_huge_exponents() {
    let k = kernel();
    let m1 = solve_m1(&k, 30.0, 30.0, TorusGrid::new(1, 1 << 12).unwrap()).unwrap();
    assert!(m1.exponent() > 800.0);
    // m₁ ≥ e^{800} nearly everywhere, so a crossing exists only for huge thresholds
    let thr = (m1.ln_abs(m1.grid().index([1000, 0]).unwrap()) - 0.5).exp();
    assert!(thr.is_infinite());
    assert!(front_radius(&m1, [1.0, 0.0], 1.0).is_err());
}

#[test]
fn intermittency_profile_and_classification() {
    let k = kernel();
    let nu = 0.5;
    let g = gamma(1.0, 1).unwrap();
    let solver = Solver::new(
        &k,
        TorusGrid::new(1, 1 << 14).unwrap(),
        SolverOptions::default(),
    )
    .unwrap();
    let radii = RadiiSpec {
        absolute: vec![0.0, 3.0],
        scaled: vec![1.0, 1.75],
        ..RadiiSpec::default()
    };
    let mut profiles = Vec::new();
    for &t in &[5.0, 10.0, 20.0] {
        let m1 = solver.solve_m1(nu, t).unwrap();
        let sm = solver.solve_m2(nu, t, 64).unwrap();
        let prof = intermittency_scan(&m1, &sm.m2, t, g, &radii).unwrap();
        for p in &prof.points {
            if let Some(r) = p.rho {
                assert!(r >= 1.0 - 1e-6, "{}: ρ = {r}", p.label);
            }
        }
        let labels: Vec<&str> = prof.points.iter().map(|p| p.label.as_str()).collect();
        assert_eq!(
            labels,
            ["r=0", "r=3", "t^1", "t^1.75", "1*t^gamma", "t^(gamma+0.25)"]
        );
        profiles.push(prof);
    }
    let classes = regime_classify(&profiles, RegimeThresholds::default()).unwrap();
    let by = |l: &str| classes.iter().find(|c| c.label == l).unwrap();
    assert_eq!(by("t^1").regime, Regime::NonIntermittent);
    assert_eq!(by("r=0").regime, Regime::NonIntermittent);
    assert!(regime_classify(&profiles[..2], RegimeThresholds::default()).is_err());
}

#[test]
fn scan_skips_what_it_cannot_resolve() {
    let k = kernel();
    let g = TorusGrid::new(1, 256).unwrap();
    let m1 = solve_m1(&k, 0.5, 2.0, g).unwrap();
    let m2 = solve_m2(&k, 0.5, 2.0, g, 16).unwrap().m2;
    let radii = RadiiSpec {
        absolute: vec![1000.0],
        ..RadiiSpec::default()
    };
    let prof = intermittency_scan(&m1, &m2, 2.0, 1.5, &radii).unwrap();
    assert_eq!(prof.points[0].skipped.as_deref(), Some("outside window"));
    assert!(intermittency_scan(&m1, &m2, 3.0, 1.5, &radii).is_err());
}
