//! Special functions: Riemann and Hurwitz zeta on the real line, and the
//! pole-free constant relating a power-law tail to its Fourier cusp.

use std::f64::consts::PI;

use statrs::function::gamma::{gamma, ln_gamma};

/// B_2, B_4, ..., B_26.
const BERNOULLI_EVEN: [f64; 13] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
];

const EM_SHIFT: usize = 16;

/// Hurwitz zeta `ζ(s, q) = Σ_{n≥0} (q+n)^{-s}` for real `s ≠ 1`, `q > 0`.
///
/// Euler–Maclaurin with a shift of 16 terms; this is the analytic
/// continuation for `s < 1` as well, accurate to ~1e-15 relative for
/// `s > -6`.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    assert!(q > 0.0, "hurwitz_zeta needs q > 0");
    assert!(s != 1.0, "hurwitz_zeta has a pole at s = 1");
    let mut head = 0.0;
    for n in (0..EM_SHIFT).rev() {
        head += (q + n as f64).powf(-s);
    }
    let a = q + EM_SHIFT as f64;
    let a_pow = a.powf(-s);
    let mut sum = head + a * a_pow / (s - 1.0) + 0.5 * a_pow;
    // rising factorial s(s+1)...(s+2k-2) / (2k)! times a^{-s-2k+1}
    let mut factor = s / a * a_pow;
    let mut fact = 2.0;
    for (k, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = b / fact * factor;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        let m = 2.0 * (k as f64 + 1.0);
        factor *= (s + m - 1.0) * (s + m) / (a * a);
        fact *= (m + 1.0) * (m + 2.0);
    }
    sum
}

/// Riemann zeta on the real line, `s ≠ 1`.
pub fn zeta(s: f64) -> f64 {
    if s == 0.0 {
        return -0.5;
    }
    if s > 0.0 {
        return hurwitz_zeta(s, 1.0);
    }
    // Reflection: ζ(s) = 2^s π^{s-1} sin(πs/2) Γ(1-s) ζ(1-s).
    let one_minus = 1.0 - s;
    let ln_mag = s * 2f64.ln() + (s - 1.0) * PI.ln() + ln_gamma(one_minus);
    (PI * s / 2.0).sin() * ln_mag.exp() * hurwitz_zeta(one_minus, 1.0)
}

/// `-Γ(-α) cos(απ/2)` for `α ∈ (0, 2)`, evaluated as `π / (2 Γ(1+α) sin(απ/2))`.
///
/// This equals `∫_0^∞ u^{-1-α} (1 - cos u) du`; the rewritten form has no
/// pole at `α = 1`, where it takes the value `π/2`.
pub fn stable_prefactor(alpha: f64) -> f64 {
    debug_assert!(alpha > 0.0 && alpha < 2.0);
    PI / (2.0 * gamma(1.0 + alpha) * (alpha * PI / 2.0).sin())
}

/// Coefficients of the regular part of the one-dimensional power-law symbol.
///
/// For `a(z) = |z|^{-1-α}` summed over `z ≠ 0`,
/// `Σ a(z)(1 - cos zσ) = 2 [K_α |σ|^α + Σ_{m≥1} c_m σ^{2m}]` on `|σ| < 2π`,
/// with `c_m = (-1)^{m+1} ζ(1+α-2m) / (2m)!`. Returns `c_1, c_2, ...`
/// until the terms at `σ = π` drop below 1e-19.
pub fn power_symbol_series(alpha: f64) -> Vec<f64> {
    let mut coeffs = Vec::with_capacity(40);
    coeffs.push(zeta(alpha - 1.0) / 2.0);
    // m ≥ 2 through the reflection formula in a form without cancellation:
    // c_m = -cos(απ/2) 2^{1+α} π^α ζ(2m-α) Γ(2m-α) / Γ(2m+1) (2π)^{-2m}
    let pre = -(alpha * PI / 2.0).cos() * 2f64.powf(1.0 + alpha) * PI.powf(alpha);
    for m in 2..60 {
        let two_m = 2.0 * m as f64;
        let ln_ratio = ln_gamma(two_m - alpha) - ln_gamma(two_m + 1.0);
        let c = pre * hurwitz_zeta(two_m - alpha, 1.0) * (ln_ratio - two_m * (2.0 * PI).ln()).exp();
        coeffs.push(c);
        if (c * PI.powf(two_m)).abs() < 1e-19 {
            break;
        }
    }
    coeffs
}
