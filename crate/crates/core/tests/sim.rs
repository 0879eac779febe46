use statrs::distribution::{ChiSquared, ContinuousCDF};

use bwalk_core::*;

fn kernel() -> JumpKernel {
    build_kernel(1, 1.0, AngularProfile::constant(1, 1.0).unwrap(), 16).unwrap()
}

#[test]
fn without_branching_the_population_stays_one() {
    let k = kernel();
    let cfg = SimConfig::new(0.0, vec![0.5, 1.0, 3.0], 200, 1);
    for run in simulate_many(&k, &cfg, 0..200).unwrap() {
        assert!(run.valid);
        for snap in &run.snapshots {
            assert_eq!(snap.total, 1);
            assert_eq!(snap.counts.values().sum::<u64>(), 1);
        }
    }
}

#[test]
fn yule_moments_of_the_population() {
    let k = kernel();
    let (nu, t) = (0.5, 4.0);
    let cfg = SimConfig::new(nu, vec![t], 10_000, 7);
    let est = &estimate_moments(&k, &cfg).unwrap()[0];
    assert_eq!(est.replicas_used, 10_000);
    assert!(!est.flagged);
    let m1 = (nu * t).exp();
    let m2 = 2.0 * (2.0 * nu * t).exp() - m1;
    let z1 = (est.total_mean - m1) / est.total_se;
    let z2 = (est.total_sq_mean - m2) / est.total_sq_se;
    assert!(z1.abs() <= 4.0, "E N: z = {z1}");
    assert!(z2.abs() <= 4.0, "E N²: z = {z2}");

    // Σ_x m̂₁ equals the mean population
    let sum: f64 = est.sites.iter().map(|s| s.m1).sum();
    assert!((sum / est.total_mean - 1.0).abs() < 1e-12);
    // n² ≥ n replica by replica, so the averages keep the order
    assert!(est.sites.iter().all(|s| s.m2 >= s.m1));

    // neighbouring replicas are uncorrelated
    let xs: Vec<f64> = est.replica_totals.iter().map(|v| *v as f64).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let lag: f64 = xs
        .windows(2)
        .map(|w| (w[0] - mean) * (w[1] - mean))
        .sum::<f64>()
        / (n - 1.0);
    let rho = lag / var;
    assert!(rho.abs() <= 4.0 / n.sqrt(), "lag-1 correlation {rho}");
}

#[test]
fn single_particle_law_matches_the_solver() {
    let k = kernel();
    let t = 2.0;
    let replicas = 100_000;
    let cfg = SimConfig::new(0.0, vec![t], replicas, 99);
    let est = &estimate_moments(&k, &cfg).unwrap()[0];
    let p = solve_p(&k, t, TorusGrid::new(1, 1 << 16).unwrap()).unwrap();
    let mut stat = 0.0;
    let mut inner_p = 0.0;
    let mut inner_n = 0.0;
    for x in -20..=20 {
        let e = p.value([x, 0]) * replicas as f64;
        let n = est.at([x, 0]).m1 * replicas as f64;
        stat += (n - e).powi(2) / e;
        inner_p += p.value([x, 0]);
        inner_n += n;
    }
    let e = (1.0 - inner_p) * replicas as f64;
    stat += (replicas as f64 - inner_n - e).powi(2) / e;
    let crit = ChiSquared::new(41.0).unwrap().inverse_cdf(1.0 - 1e-3);
    assert!(stat < crit, "χ² = {stat:.1} vs {crit:.1}");
}

#[test]
fn estimates_are_bit_reproducible() {
    let k = kernel();
    let cfg = SimConfig::new(0.7, vec![1.0, 2.5], 1500, 42);
    let render = |est: &[MomentEstimate]| {
        let mut buf = Vec::new();
        for e in est {
            e.write_csv(1, &mut buf).unwrap();
        }
        buf
    };
    let a = render(&estimate_moments(&k, &cfg).unwrap());
    let b = render(&estimate_moments(&k, &cfg).unwrap());
    assert_eq!(a, b);
    let other = SimConfig::new(0.7, vec![1.0, 2.5], 1500, 43);
    assert_ne!(a, render(&estimate_moments(&k, &other).unwrap()));

    let runs = simulate_many(&k, &cfg, 0..20).unwrap();
    let again = simulate_many(&k, &cfg, 10..20).unwrap();
    assert_eq!(runs[10..], again[..]);
}

#[test]
fn capped_runs_are_excluded_and_flagged() {
    let k = kernel();
    let mut cfg = SimConfig::new(2.0, vec![3.0], 200, 3);
    cfg.particle_cap = 50;
    let est = &estimate_moments(&k, &cfg).unwrap()[0];
    assert!(est.excluded > 2);
    assert!(est.flagged);
    assert_eq!(est.excluded + est.replicas_used, 200);
    let few = SimConfig::new(0.5, vec![1.0], 50, 3);
    assert!(estimate_moments(&k, &few).is_err());
}

#[test]
fn snapshot_csv_lists_every_particle_site() {
    let k = kernel();
    let cfg = SimConfig::new(1.0, vec![0.0, 1.0], 3, 5);
    let runs = simulate_many(&k, &cfg, 0..3).unwrap();
    let mut buf = Vec::new();
    sim::write_snapshots_csv(&runs, 1, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("replica,t,x,count"));
    let total: u64 = lines
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    let want: u64 = runs
        .iter()
        .flat_map(|r| r.snapshots.iter().map(|s| s.total))
        .sum();
    assert_eq!(total, want);
    // N(0) = 1 at the origin
    for r in &runs {
        assert_eq!(r.snapshots[0].total, 1);
        assert_eq!(r.snapshots[0].counts.get(&[0, 0]), Some(&1));
    }
}
