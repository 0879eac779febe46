//! Evaluation of `â(σ) = Σ_z a(z) cos(z·σ)`.
//!
//! All routes compute the deficit `1 − â(σ)` directly, which keeps full
//! relative precision near `σ = 0` where `1 − â ~ b₀|σ|^α`.
//!
//! The general route splits the lattice sum with the smooth cutoff `χ`:
//!
//! ```text
//! 1 − â(σ) = Σ_z a(z)χ(|z|)(1 − cos z·σ)            explicit, |z| ≤ 60
//!          + b₀(σ̇)|σ|^α − C ∫ a₀(ẋ)|x|^{-d-α}χ(|x|)(1 − cos x·σ) dx
//! ```
//!
//! where the second line is the continuum integral of the smooth remainder.
//! In one dimension a closed-form Hurwitz series is also available and is
//! used for whole grids.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;

use super::profile::{AngularProfile, TrigPoly};
use super::{cutoff, pairwise_sum, polar_angle, JumpKernel, CUTOFF_OUTER};
use crate::fft::Transform;
use crate::grid::TorusGrid;
use crate::quad::GaussLegendre;
use crate::special::{power_symbol_series, stable_prefactor};

/// Step of the `J(κ)` interpolation table.
const J_TABLE_STEP: f64 = 5e-4;
/// Table covers `κ ∈ [0, J_TABLE_MAX]`, enough for `|σ| ≤ π√2`.
const J_TABLE_MAX: f64 = 4.5;

#[derive(Debug, Clone)]
pub(crate) struct SymbolData {
    alpha: f64,
    /// `(r_i, W_i)` with `W_i = w_i r_i^{-1-α} χ(r_i)` on `[1, 60]`.
    radial: Vec<(f64, f64)>,
    /// `(z, a(z)χ(|z|))` for every `0 < |z| ≤ 60`.
    near: Vec<([i64; 2], f64)>,
    near_mass: f64,
    /// One-dimensional series: `2Ca₀K_α` and `2Ca₀c_m`.
    series: Option<(f64, Vec<f64>)>,
    /// Angular profile in the Fourier basis, scaled by `C`.
    tail_poly: TrigPoly,
    /// `b₀(φ)` in the Fourier basis.
    b0_poly: TrigPoly,
    j_table: OnceLock<JTable>,
}

#[derive(Debug, Clone)]
struct JTable {
    /// `(J, J', J'')` at `κ = i·h`.
    rows: Vec<[f64; 3]>,
}

impl SymbolData {
    pub(crate) fn new(dim: usize, alpha: f64, profile: &AngularProfile, norm: f64) -> Self {
        let radial = radial_nodes(alpha);
        let reach = CUTOFF_OUTER as i64;
        let mut near = Vec::new();
        let c =
            |x: [f64; 2], r: f64| norm * profile.at(x) * r.powf(-(dim as f64) - alpha) * cutoff(r);
        if dim == 1 {
            for n in 1..=reach {
                let r = n as f64;
                near.push(([n, 0], c([1.0, 0.0], r)));
                near.push(([-n, 0], c([-1.0, 0.0], r)));
            }
        } else {
            for i in -reach..=reach {
                for j in -reach..=reach {
                    let r = (i as f64).hypot(j as f64);
                    if r == 0.0 || r > CUTOFF_OUTER {
                        continue;
                    }
                    near.push(([i, j], c([i as f64, j as f64], r)));
                }
            }
        }
        let near_mass = pairwise_sum(&near.iter().map(|(_, v)| *v).collect::<Vec<_>>());

        let k = stable_prefactor(alpha);
        let series = (dim == 1).then(|| {
            let scale = 2.0 * norm * profile.at([1.0, 0.0]);
            let coeffs = power_symbol_series(alpha)
                .into_iter()
                .map(|c| scale * c)
                .collect();
            (scale * k, coeffs)
        });

        let mut tail_poly = profile.poly();
        tail_poly.c0 *= norm;
        tail_poly.cos.iter_mut().for_each(|v| *v *= norm);
        tail_poly.sin.iter_mut().for_each(|v| *v *= norm);
        let b0_poly = if dim == 1 {
            TrigPoly {
                c0: 2.0 * k * tail_poly.c0,
                cos: vec![0.0; tail_poly.cos.len()],
                sin: vec![0.0; tail_poly.sin.len()],
            }
        } else {
            b0_fourier(alpha, &tail_poly)
        };

        Self {
            alpha,
            radial,
            near,
            near_mass,
            series,
            tail_poly,
            b0_poly,
            j_table: OnceLock::new(),
        }
    }

    /// `J(κ) = ∫_0^∞ r^{-1-α} χ(r) (1 − cos rκ) dr`.
    fn j_radial(&self, kappa: f64) -> f64 {
        let mut s = 0.0;
        for &(r, w) in &self.radial {
            let h = (0.5 * r * kappa).sin();
            s += w * h * h;
        }
        j_inner(self.alpha, kappa)[0] + 2.0 * s
    }

    fn j_table(&self) -> &JTable {
        self.j_table.get_or_init(|| {
            let n = (J_TABLE_MAX / J_TABLE_STEP).ceil() as usize + 1;
            let rows = (0..n)
                .into_par_iter()
                .map(|i| {
                    let kappa = i as f64 * J_TABLE_STEP;
                    let [_, mut d1, mut d2] = j_inner(self.alpha, kappa);
                    for &(r, w) in &self.radial {
                        let (s, c) = (r * kappa).sin_cos();
                        d1 += w * r * s;
                        d2 += w * r * r * c;
                    }
                    [self.j_radial(kappa), d1, d2]
                })
                .collect();
            JTable { rows }
        })
    }

    /// Quintic Hermite interpolation of `J` on the table.
    fn j_interp(&self, kappa: f64) -> f64 {
        let kappa = kappa.abs();
        let table = self.j_table();
        let h = J_TABLE_STEP;
        let pos = kappa / h;
        let i = (pos.floor() as usize).min(table.rows.len() - 2);
        let u = pos - i as f64;
        let [f0, d0, s0] = table.rows[i];
        let [f1, d1, s1] = table.rows[i + 1];
        let (d0, d1) = (d0 * h, d1 * h);
        let (s0, s1) = (s0 * h * h, s1 * h * h);
        let u2 = u * u;
        let u3 = u2 * u;
        let u4 = u3 * u;
        let u5 = u4 * u;
        let h00 = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
        let h01 = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
        let h10 = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
        let h11 = -4.0 * u3 + 7.0 * u4 - 3.0 * u5;
        let h20 = 0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5);
        let h21 = 0.5 * (u3 - 2.0 * u4 + u5);
        h00 * f0 + h01 * f1 + h10 * d0 + h11 * d1 + h20 * s0 + h21 * s1
    }

    /// `∫ C a₀(θ) J(|σ| cos(θ − φ)) dθ` by the trapezoid rule, which is
    /// spectrally accurate for this smooth periodic integrand.
    fn angular_j(&self, norm_sigma: f64, phi: f64, j: impl Fn(f64) -> f64) -> f64 {
        let deg = self.tail_poly.degree();
        let x = CUTOFF_OUTER * norm_sigma;
        let n = (x + 12.0 * x.cbrt() + deg as f64 + 32.0).ceil() as usize;
        let n = n.div_ceil(4) * 4;
        let dth = 2.0 * PI / n as f64;
        let values: Vec<f64> = (0..n)
            .map(|i| j(norm_sigma * (i as f64 * dth).cos()))
            .collect();
        // Only even modes of J(κ cos θ) survive; project the profile onto them.
        let mut total = self.tail_poly.c0 * values.iter().sum::<f64>();
        for (k, (a, b)) in self
            .tail_poly
            .cos
            .iter()
            .zip(&self.tail_poly.sin)
            .enumerate()
        {
            let k = k + 1;
            if *a == 0.0 && *b == 0.0 {
                continue;
            }
            let (sp, cp) = (k as f64 * phi).sin_cos();
            let weight = a * cp + b * sp;
            if weight == 0.0 {
                continue;
            }
            let proj: f64 = values
                .iter()
                .enumerate()
                .map(|(i, v)| v * (2.0 * PI * ((k * i) % n) as f64 / n as f64).cos())
                .sum();
            total += weight * proj;
        }
        total * dth
    }

    fn b0_at(&self, phi: f64) -> f64 {
        self.b0_poly.eval(phi)
    }
}

/// `∫_0^1 r^{-1-α}(1 − cos rκ) dr` and its first two `κ`-derivatives, from
/// the power series of the cosine (`χ = 1` on `[0, 1]` to double precision).
fn j_inner(alpha: f64, kappa: f64) -> [f64; 3] {
    let k2 = kappa * kappa;
    let mut out = [0.0; 3];
    // t = (−1)^{m+1} κ^{2m−2}/(2m)!
    let mut t = 0.5;
    for m in 1..200 {
        let mf = m as f64;
        let two_m = 2.0 * mf;
        let c = t / (two_m - alpha);
        out[0] += c * k2;
        out[1] += c * two_m * kappa;
        out[2] += c * two_m * (two_m - 1.0);
        if mf > kappa && c.abs() * k2.max(1.0) * two_m * two_m < 1e-18 * out[2].abs().max(1e-300) {
            break;
        }
        t *= -k2 / ((two_m + 1.0) * (two_m + 2.0));
    }
    out
}

/// Gauss–Legendre panels for the radial integral over `[1, 60]`.
fn radial_nodes(alpha: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let gl = GaussLegendre::new(12);
    let width = 0.5;
    let panels = ((CUTOFF_OUTER - 1.0) / width).round() as usize;
    for p in 0..panels {
        let a = 1.0 + p as f64 * width;
        for (r, w) in gl.mapped(a, a + width) {
            out.push((r, w * r.powf(-1.0 - alpha) * cutoff(r)));
        }
    }
    out
}

/// `b₀(φ) = K_α ∫ C a₀(θ)|cos(θ − φ)|^α dθ` mode by mode.
///
/// Convolution with `|cos|^α` is diagonal in the Fourier basis with
/// multipliers `λ_k = ∫|cos u|^α cos(ku) du`, known in closed form.
fn b0_fourier(alpha: f64, tail: &TrigPoly) -> TrigPoly {
    let k_alpha = stable_prefactor(alpha);
    let lambda = |k: usize| abs_cos_moment(alpha, k) * k_alpha;
    TrigPoly {
        c0: tail.c0 * lambda(0),
        cos: tail
            .cos
            .iter()
            .enumerate()
            .map(|(i, a)| a * lambda(i + 1))
            .collect(),
        sin: tail
            .sin
            .iter()
            .enumerate()
            .map(|(i, b)| b * lambda(i + 1))
            .collect(),
    }
}

/// `∫_0^{2π} |cos u|^α cos(ku) du`; zero for odd `k`.
pub(crate) fn abs_cos_moment(alpha: f64, k: usize) -> f64 {
    use statrs::function::gamma::ln_gamma;
    if k % 2 == 1 {
        return 0.0;
    }
    // 2π Γ(α+1) / (2^α Γ(1 + (α+k)/2) Γ(1 + (α−k)/2)), with the reflection
    // formula for the second gamma when its argument is non-positive.
    let a = 1.0 + (alpha + k as f64) / 2.0;
    let b = 1.0 + (alpha - k as f64) / 2.0;
    let ln_num = (2.0 * PI).ln() + ln_gamma(alpha + 1.0) - alpha * 2f64.ln() - ln_gamma(a);
    if b > 0.0 {
        (ln_num - ln_gamma(b)).exp()
    } else {
        // 1/Γ(b) = Γ(1−b) sin(πb)/π
        let s = (PI * b).sin();
        (ln_num + ln_gamma(1.0 - b)).exp() * s / PI
    }
}

fn reduce(s: f64) -> f64 {
    let two_pi = 2.0 * PI;
    s - two_pi * (s / two_pi).round()
}

impl JumpKernel {
    /// `â(σ)`; `σ` has one entry per dimension and is reduced modulo `2π`.
    pub fn symbol(&self, sigma: &[f64]) -> f64 {
        1.0 - self.symbol_deficit(sigma)
    }

    /// `1 − â(σ)`, computed without cancellation.
    pub fn symbol_deficit(&self, sigma: &[f64]) -> f64 {
        assert_eq!(sigma.len(), self.dim, "σ must have one entry per dimension");
        if self.dim == 1 {
            self.series_deficit(sigma[0])
        } else {
            self.smoothed_deficit(sigma)
        }
    }

    /// One-dimensional deficit from the Hurwitz series (exact up to rounding).
    fn series_deficit(&self, sigma: f64) -> f64 {
        let s = reduce(sigma).abs();
        if s == 0.0 {
            return 0.0;
        }
        let (lead, coeffs) = self.symbol.series.as_ref().expect("one-dimensional kernel");
        let s2 = s * s;
        let mut acc = 0.0;
        // Horner in σ² from the highest term
        for c in coeffs.iter().rev() {
            acc = acc * s2 + c;
        }
        lead * s.powf(self.alpha) + acc * s2
    }

    /// Deficit by the smooth-cutoff route; valid in both dimensions.
    pub fn smoothed_deficit(&self, sigma: &[f64]) -> f64 {
        assert_eq!(sigma.len(), self.dim);
        let s = [
            reduce(sigma[0]),
            if self.dim == 2 { reduce(sigma[1]) } else { 0.0 },
        ];
        let norm_sigma = s[0].hypot(s[1]);
        if norm_sigma == 0.0 {
            return 0.0;
        }
        let explicit: f64 = self
            .symbol
            .near
            .iter()
            .map(|(z, v)| {
                let h = (0.5 * (z[0] as f64 * s[0] + z[1] as f64 * s[1])).sin();
                2.0 * v * h * h
            })
            .sum();
        let phi = polar_angle(s);
        let (b0, j) = if self.dim == 1 {
            (
                self.symbol.b0_at(0.0),
                self.symbol.tail_poly.c0 * 2.0 * self.symbol.j_radial(norm_sigma),
            )
        } else {
            (
                self.symbol.b0_at(phi),
                self.symbol
                    .angular_j(norm_sigma, phi, |k| self.symbol.j_radial(k)),
            )
        };
        explicit + b0 * norm_sigma.powf(self.alpha) - j
    }

    /// Deficit at every dual node of `grid`, in FFT order.
    pub fn deficit_grid(&self, grid: &TorusGrid) -> Vec<f64> {
        assert_eq!(grid.dim(), self.dim);
        let m = grid.m();
        if self.dim == 1 {
            return (0..m)
                .into_par_iter()
                .map(|k| self.series_deficit(grid.dual_node(k)))
                .collect();
        }
        // explicit part: Σ aχ − Re Σ aχ e^{-iz·σ}, folded onto the torus
        let mut buf = vec![Complex64::new(0.0, 0.0); m * m];
        let mi = m as i64;
        for (z, v) in &self.symbol.near {
            let i = z[0].rem_euclid(mi) as usize;
            let j = z[1].rem_euclid(mi) as usize;
            buf[i * m + j].re += v;
        }
        Transform::new(2, m).forward(&mut buf);
        let near_mass = self.symbol.near_mass;
        let sym = &self.symbol;
        let alpha = self.alpha;
        let mut out = vec![0.0; m * m];
        out.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            let s0 = grid.dual_node(i);
            for (j, cell) in row.iter_mut().enumerate() {
                let s1 = grid.dual_node(j);
                let ns = s0.hypot(s1);
                if ns == 0.0 {
                    *cell = 0.0;
                    continue;
                }
                let phi = polar_angle([s0, s1]);
                let tail =
                    sym.b0_at(phi) * ns.powf(alpha) - sym.angular_j(ns, phi, |k| sym.j_interp(k));
                *cell = near_mass - buf[i * m + j].re + tail;
            }
        });
        out
    }
}

/// Log–log least-squares fit of `1 − â(σu) ≈ b|σ|^p` over `σ ∈ [1e-3, 1e-2]`
/// along the direction at polar angle `phi`. Returns `(p, b)`.
pub fn cusp_fit(kernel: &JumpKernel, phi: f64) -> (f64, f64) {
    let n = 21;
    let (lo, hi) = (1e-3f64.ln(), 1e-2f64.ln());
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let ls = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let s = ls.exp();
        let sigma: Vec<f64> = if kernel.dim() == 1 {
            vec![s]
        } else {
            vec![s * phi.cos(), s * phi.sin()]
        };
        xs.push(ls);
        ys.push(kernel.symbol_deficit(&sigma).ln());
    }
    let (slope, intercept) = crate::analysis::linear_fit(&xs, &ys);
    (slope, intercept.exp())
}
