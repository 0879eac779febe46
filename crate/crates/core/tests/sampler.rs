use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use bwalk_core::special::hurwitz_zeta;
use bwalk_core::*;

const DRAWS: usize = 1_000_000;

fn kernel(alpha: f64) -> JumpKernel {
    build_kernel(1, alpha, AngularProfile::constant(1, 1.0).unwrap(), 16).unwrap()
}

fn draws(k: &JumpKernel, seed: u64) -> Vec<i64> {
    let s = JumpSampler::new(k).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..DRAWS)
        .map(|_| sample_jump(&s, &mut rng).unwrap()[0])
        .collect()
}

#[test]
fn chi_square_on_the_core_cells() {
    for &alpha in &[0.5, 1.0, 1.5] {
        let k = kernel(alpha);
        let zs = draws(&k, 11);
        // cells z = −10..=10 without 0, plus one lumped cell for |z| > 10
        let mut counts = [0u64; 21];
        for z in &zs {
            let cell = if z.abs() <= 10 { (z + 10) as usize } else { 10 };
            counts[cell] += 1;
        }
        let mut stat = 0.0;
        let mut inner = 0.0;
        for (c, n) in counts.iter().enumerate() {
            if c == 10 {
                continue;
            }
            let p = k.pmf([c as i64 - 10, 0]);
            inner += p;
            let e = p * DRAWS as f64;
            stat += (*n as f64 - e).powi(2) / e;
        }
        let e = (1.0 - inner) * DRAWS as f64;
        stat += (counts[10] as f64 - e).powi(2) / e;
        let crit = ChiSquared::new(20.0).unwrap().inverse_cdf(1.0 - 1e-3);
        assert!(stat < crit, "α={alpha}: χ²={stat:.1} vs {crit:.1}");
    }
}

#[test]
fn radial_ks_distance_is_small() {
    for &alpha in &[0.5, 1.0, 1.5] {
        let k = kernel(alpha);
        let mut radii: Vec<u64> = draws(&k, 12).iter().map(|z| z.unsigned_abs()).collect();
        radii.sort_unstable();
        // P(|z| > r) = 2 C ζ(1+α, r+1)
        let survival = |r: u64| 2.0 * k.norm() * hurwitz_zeta(1.0 + alpha, r as f64 + 1.0);
        let mut ks: f64 = 0.0;
        let mut i = 0;
        let mut r = 1u64;
        while i < radii.len() && r < 1 << 40 {
            while i < radii.len() && radii[i] <= r {
                i += 1;
            }
            let emp = i as f64 / radii.len() as f64;
            ks = ks.max((emp - (1.0 - survival(r))).abs());
            // geometric sweep beyond the core; the CDF is flat in between
            r = if r < 4096 { r + 1 } else { r + r / 64 };
        }
        assert!(ks < 0.005, "α={alpha}: KS = {ks}");
    }
}

#[test]
fn hill_estimator_recovers_alpha() {
    for &alpha in &[0.5, 1.0, 1.5] {
        let k = kernel(alpha);
        let mut radii: Vec<f64> = draws(&k, 13)
            .iter()
            .map(|z| z.unsigned_abs() as f64)
            .collect();
        radii.sort_by(|a, b| b.total_cmp(a));
        let top = DRAWS / 100;
        let base = radii[top].ln();
        let h: f64 = radii[..top].iter().map(|r| r.ln() - base).sum::<f64>() / top as f64;
        let est = 1.0 / h;
        assert!((est / alpha - 1.0).abs() < 0.15, "α={alpha}: Hill = {est}");
    }
}

#[test]
fn draws_are_centred() {
    // α > 1: the mean exists; α ≤ 1: sign balance
    let k = kernel(1.5);
    let zs = draws(&k, 14);
    let n = zs.len() as f64;
    let mean = zs.iter().map(|z| *z as f64).sum::<f64>() / n;
    let var = zs.iter().map(|z| (*z as f64 - mean).powi(2)).sum::<f64>() / n;
    assert!(mean.abs() < 4.0 * var.sqrt() / 1e3, "mean {mean}");

    for &alpha in &[0.5, 1.0] {
        let zs = draws(&kernel(alpha), 15);
        let pos = zs.iter().filter(|z| **z > 0).count() as f64;
        assert!(zs.iter().all(|z| *z != 0));
        let frac = pos / n;
        assert!(
            (frac - 0.5).abs() < 4.0 * (0.25 / n).sqrt(),
            "α={alpha}: {frac}"
        );
    }
}

#[test]
fn planar_draws_follow_the_table() {
    let values = (0..16)
        .map(|j| 1.0 + 0.5 * (4.0 * std::f64::consts::PI * j as f64 / 16.0).cos())
        .collect();
    let k = build_kernel(2, 1.0, AngularProfile::tabulated(values).unwrap(), 6).unwrap();
    let s = JumpSampler::new(&k).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 400_000;
    let cells: Vec<Site> = vec![[1, 0], [0, 1], [1, 1], [2, 0], [0, 2], [-3, 1], [5, 5]];
    let mut counts = vec![0u64; cells.len()];
    let mut far = 0u64;
    for _ in 0..n {
        let z = s.sample(&mut rng).unwrap();
        assert_ne!(z, [0, 0]);
        if let Some(c) = cells.iter().position(|c| *c == z) {
            counts[c] += 1;
        }
        if (z[0] as f64).hypot(z[1] as f64) > 6.0 {
            far += 1;
        }
    }
    for (c, cnt) in cells.iter().zip(&counts) {
        let p = k.pmf(*c);
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        let f = *cnt as f64 / n as f64;
        assert!((f - p).abs() < 4.5 * sd, "{c:?}: {f} vs {p}");
    }
    let p = k.p_tail();
    let f = far as f64 / n as f64;
    assert!((f - p).abs() < 4.5 * (p * (1.0 - p) / n as f64).sqrt());
}

#[test]
fn streams_are_reproducible() {
    let k = kernel(0.8);
    let s = JumpSampler::new(&k).unwrap();
    let mut a = ChaCha8Rng::seed_from_u64(5);
    let mut b = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        assert_eq!(s.sample(&mut a).unwrap(), s.sample(&mut b).unwrap());
    }
}
