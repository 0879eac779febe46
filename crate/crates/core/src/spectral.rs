//! Transition probabilities and moment fields by Fourier inversion on a
//! periodic window.
//!
//! `p̂(t,σ) = exp(−(1 − â(σ))t)`; `m₁ = e^{νt} p`; and `m₂` from the Duhamel
//! representation
//!
//! ```text
//! m₂(t) = m₁(t) + 2ν ∫_0^t m₁(t−s) ⋆ m₁(s)² ds,
//! ```
//!
//! carried out on `e^{−2νt}`-rescaled mantissas so nothing overflows.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fft::Transform;
use crate::grid::{ScalarField, TorusGrid};
use crate::kernel::JumpKernel;

/// Guard settings shared by all solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Escalate the aliasing guard to an error.
    pub strict: bool,
    /// Largest tolerated estimate of the mass wrapped around the window.
    pub aliasing_limit: f64,
    /// Largest tolerated relative Richardson gap of the Duhamel quadrature at `x = 0`.
    pub richardson_limit: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            strict: false,
            aliasing_limit: 1e-4,
            richardson_limit: 1e-2,
        }
    }
}

/// Spectral solver bound to one kernel and one window.
pub struct Solver<'k> {
    kernel: &'k JumpKernel,
    grid: TorusGrid,
    /// `1 − â` at the dual nodes, FFT order.
    deficit: Vec<f64>,
    transform: Transform,
    options: SolverOptions,
}

/// `m₂` with the coarse-step companion used for the Richardson check.
#[derive(Debug, Clone)]
pub struct SecondMoment {
    pub m2: ScalarField,
    pub m2_coarse: ScalarField,
    /// `|m₂ − m₂_coarse| / m₂` at the origin.
    pub richardson_gap: f64,
}

impl<'k> Solver<'k> {
    pub fn new(kernel: &'k JumpKernel, grid: TorusGrid, options: SolverOptions) -> Result<Self> {
        if grid.dim() != kernel.dim() {
            return Err(invalid("grid", "dimension differs from the kernel"));
        }
        let need = 2 * kernel.radius() as usize + 2;
        if grid.m() < need {
            return Err(Error::GridTooSmall(format!(
                "M = {} is below 2R+2 = {need}",
                grid.m()
            )));
        }
        Ok(Self {
            kernel,
            grid,
            deficit: kernel.deficit_grid(&grid),
            transform: Transform::new(grid.dim(), grid.m()),
            options,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn kernel(&self) -> &JumpKernel {
        self.kernel
    }

    /// `1 − â` at the dual nodes in FFT order.
    pub fn deficit(&self) -> &[f64] {
        &self.deficit
    }

    /// A-priori bound on the mass of `p(t,·)` beyond the window:
    /// `t · Σ_{|z| > M/2} a(z) ≈ t C A₀ (M/2)^{-α} / α`.
    pub fn aliasing_estimate(&self, t: f64) -> f64 {
        let k = self.kernel;
        let half = (self.grid.m() / 2) as f64;
        t * k.norm() * k.profile().sphere_integral() * half.powf(-k.alpha()) / k.alpha()
    }

    fn guard(&self, t: f64) -> Result<()> {
        let mass = self.aliasing_estimate(t);
        if self.options.strict && mass > self.options.aliasing_limit {
            return Err(Error::Aliasing {
                mass,
                limit: self.options.aliasing_limit,
            });
        }
        Ok(())
    }

    fn spectrum(&self, t: f64) -> Vec<Complex64> {
        self.deficit
            .iter()
            .map(|d| Complex64::new((-d * t).exp(), 0.0))
            .collect()
    }

    /// Inverse transform of an FFT-ordered spectrum into window order.
    fn to_window(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.transform.inverse(&mut spec);
        let inv = 1.0 / self.grid.len() as f64;
        (0..self.grid.len())
            .map(|i| spec[self.grid.shift(i)].re * inv)
            .collect()
    }

    /// Forward transform of a window-ordered real array into FFT order.
    fn to_spectrum(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for (i, v) in values.iter().enumerate() {
            buf[self.grid.shift(i)].re = *v;
        }
        self.transform.forward(&mut buf);
        buf
    }

    fn p_values(&self, t: f64) -> Vec<f64> {
        if t == 0.0 {
            return ScalarField::delta(self.grid, 0.0).mantissa().to_vec();
        }
        self.to_window(self.spectrum(t))
    }

    /// `p(t,·)` on the window.
    pub fn solve_p(&self, t: f64) -> Result<ScalarField> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(invalid("t", format!("must be finite and ≥ 0, got {t}")));
        }
        self.guard(t)?;
        Ok(ScalarField::new(self.grid, self.p_values(t), 0.0, t))
    }

    /// `m₁(t,·) = e^{νt} p(t,·)`.
    pub fn solve_m1(&self, nu: f64, t: f64) -> Result<ScalarField> {
        check_rate(nu)?;
        Ok(self.solve_p(t)?.shifted(nu * t))
    }

    /// `m₂(t,·)` by composite Simpson in `s` over `2·n_steps` panels, with the
    /// `n_steps`-panel result on the shared even nodes as the Richardson companion.
    pub fn solve_m2(&self, nu: f64, t: f64, n_steps: usize) -> Result<SecondMoment> {
        check_rate(nu)?;
        if n_steps < 8 || !n_steps.is_multiple_of(2) {
            return Err(invalid(
                "n_steps",
                format!("must be even and ≥ 8, got {n_steps}"),
            ));
        }
        let p_t = self.solve_p(t)?;
        if nu == 0.0 || t == 0.0 {
            // no branching or no elapsed time: the integral term vanishes
            let m1 = p_t.shifted(nu * t);
            return Ok(SecondMoment {
                m2: m1.clone(),
                m2_coarse: m1,
                richardson_gap: 0.0,
            });
        }
        let n_fine = 2 * n_steps;
        let h = t / n_fine as f64;
        let len = self.grid.len();
        let mut fine = vec![Complex64::new(0.0, 0.0); len];
        let mut coarse = vec![Complex64::new(0.0, 0.0); len];
        let simpson = |j: usize, n: usize| -> f64 {
            if j == 0 || j == n {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        for j in 0..=n_fine {
            let s = j as f64 * h;
            // FFT of p(s)², with p(0)² = δ
            let q_hat = if j == 0 {
                vec![Complex64::new(1.0, 0.0); len]
            } else {
                let p_s = self.p_values(s);
                let sq: Vec<f64> = p_s.iter().map(|v| v * v).collect();
                self.to_spectrum(&sq)
            };
            let lag = t - s;
            let damp = (-nu * lag).exp();
            let wf = simpson(j, n_fine) * h / 3.0;
            let wc = if j % 2 == 0 {
                simpson(j / 2, n_steps) * 2.0 * h / 3.0
            } else {
                0.0
            };
            for (k, q) in q_hat.iter().enumerate() {
                let g = q * (damp * (-self.deficit[k] * lag).exp());
                fine[k] += g * wf;
                if wc != 0.0 {
                    coarse[k] += g * wc;
                }
            }
        }
        let base = (-nu * t).exp();
        let assemble = |integral: Vec<Complex64>| -> Vec<f64> {
            let i_vals = self.to_window(integral);
            p_t.mantissa()
                .iter()
                .zip(&i_vals)
                .map(|(p, i)| base * p * p_t.exponent().exp() + 2.0 * nu * i)
                .collect()
        };
        let m2_vals = assemble(fine);
        let m2c_vals = assemble(coarse);
        let origin = self.grid.index([0, 0]).expect("origin");
        let gap = ((m2_vals[origin] - m2c_vals[origin]) / m2_vals[origin]).abs();
        if gap > self.options.richardson_limit {
            return Err(Error::QuadratureUnresolved {
                gap,
                limit: self.options.richardson_limit,
            });
        }
        let e = 2.0 * nu * t;
        Ok(SecondMoment {
            m2: ScalarField::new(self.grid, m2_vals, e, t),
            m2_coarse: ScalarField::new(self.grid, m2c_vals, e, t),
            richardson_gap: gap,
        })
    }

    /// `(Lf)(x) = Σ_z [f(x+z) − f(x)] a(z)` on the periodic window.
    pub fn apply_generator(&self, field: &ScalarField) -> Result<ScalarField> {
        if field.grid() != &self.grid {
            return Err(invalid("field", "field lives on a different grid"));
        }
        let mut spec = self.to_spectrum(field.mantissa());
        for (v, d) in spec.iter_mut().zip(&self.deficit) {
            *v *= -d;
        }
        Ok(ScalarField::new(
            self.grid,
            self.to_window(spec),
            field.exponent(),
            field.time(),
        ))
    }
}

fn check_rate(nu: f64) -> Result<()> {
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(invalid(
            "nu",
            format!("branching rate must be ≥ 0, got {nu}"),
        ));
    }
    Ok(())
}

/// `p(t,·)` with default options.
pub fn solve_p(kernel: &JumpKernel, t: f64, grid: TorusGrid) -> Result<ScalarField> {
    Solver::new(kernel, grid, SolverOptions::default())?.solve_p(t)
}

/// `m₁(t,·)` with default options.
pub fn solve_m1(kernel: &JumpKernel, nu: f64, t: f64, grid: TorusGrid) -> Result<ScalarField> {
    Solver::new(kernel, grid, SolverOptions::default())?.solve_m1(nu, t)
}

/// `m₂(t,·)` with default options.
pub fn solve_m2(
    kernel: &JumpKernel,
    nu: f64,
    t: f64,
    grid: TorusGrid,
    n_steps: usize,
) -> Result<SecondMoment> {
    Solver::new(kernel, grid, SolverOptions::default())?.solve_m2(nu, t, n_steps)
}

/// `Lf` with default options.
pub fn apply_generator(kernel: &JumpKernel, field: &ScalarField) -> Result<ScalarField> {
    Solver::new(kernel, *field.grid(), SolverOptions::default())?.apply_generator(field)
}

/// Partial sums of `p(t,x) = e^{−t} Σ_n aₙ(x) tⁿ/n!` from direct convolution
/// powers on the box `|x_i| ≤ L` with the kernel truncated to the same box.
///
/// This path uses no transforms and serves as an independent oracle.
pub struct SeriesOracle {
    dim: usize,
    half_width: i64,
    /// `a_n` on the box, `n = 0..=N`.
    powers: Vec<Vec<f64>>,
}

impl SeriesOracle {
    pub fn new(kernel: &JumpKernel, half_width: usize, n_terms: usize) -> Result<Self> {
        let l = half_width as i64;
        let need = 2 * kernel.radius() as i64 + 1;
        if 2 * l + 1 < need {
            return Err(invalid(
                "half_width",
                format!("box of width {} is below 2R+1 = {need}", 2 * l + 1),
            ));
        }
        if n_terms < 1 {
            return Err(invalid("N", "need at least one term"));
        }
        let dim = kernel.dim();
        let w = (2 * l + 1) as usize;
        let len = w.pow(dim as u32);
        let site = |i: usize| -> [i64; 2] {
            if dim == 1 {
                [i as i64 - l, 0]
            } else {
                [(i / w) as i64 - l, (i % w) as i64 - l]
            }
        };
        let a: Vec<f64> = (0..len).map(|i| kernel.pmf(site(i))).collect();
        let mut powers = Vec::with_capacity(n_terms + 1);
        let mut delta = vec![0.0; len];
        delta[if dim == 1 {
            l as usize
        } else {
            l as usize * w + l as usize
        }] = 1.0;
        powers.push(delta);
        for n in 1..=n_terms {
            let prev = &powers[n - 1];
            let next = convolve_box(prev, &a, dim, l);
            powers.push(next);
        }
        Ok(Self {
            dim,
            half_width: l,
            powers,
        })
    }

    pub fn n_terms(&self) -> usize {
        self.powers.len() - 1
    }

    /// `e^{−t}·Σ_{n≤N} aₙ(x)tⁿ/n!` and the bound on the omitted terms.
    pub fn eval(&self, t: f64, x: [i64; 2]) -> Result<(f64, f64)> {
        let n = self.n_terms();
        if !(t >= 0.0) || t >= n as f64 + 2.0 {
            return Err(invalid(
                "t",
                format!("truncation bound needs 0 ≤ t < N+2 = {}", n + 2),
            ));
        }
        let l = self.half_width;
        if x.iter().take(self.dim).any(|c| c.abs() > l) {
            return Err(invalid("x", "outside the convolution box"));
        }
        let w = (2 * l + 1) as usize;
        let idx = if self.dim == 1 {
            (x[0] + l) as usize
        } else {
            (x[0] + l) as usize * w + (x[1] + l) as usize
        };
        let mut term = 1.0;
        let mut sum = 0.0;
        for (k, a) in self.powers.iter().enumerate() {
            if k > 0 {
                term *= t / k as f64;
            }
            sum += a[idx] * term;
        }
        let e = (-t).exp();
        // e^{−t} t^{N+1}/(N+1)! / (1 − t/(N+2))
        let next = term * t / (n + 1) as f64;
        let bound = e * next / (1.0 - t / (n as f64 + 2.0));
        Ok((e * sum, bound))
    }
}

fn convolve_box(f: &[f64], a: &[f64], dim: usize, l: i64) -> Vec<f64> {
    use rayon::prelude::*;
    let w = (2 * l + 1) as usize;
    if dim == 1 {
        (0..w)
            .into_par_iter()
            .map(|i| {
                let x = i as i64 - l;
                // Σ_y f(y) a(x − y) with x − y in the box
                let lo = (x - l).max(-l);
                let hi = (x + l).min(l);
                let mut s = 0.0;
                for y in lo..=hi {
                    s += f[(y + l) as usize] * a[(x - y + l) as usize];
                }
                s
            })
            .collect()
    } else {
        (0..w * w)
            .into_par_iter()
            .map(|i| {
                let (x0, x1) = ((i / w) as i64 - l, (i % w) as i64 - l);
                let mut s = 0.0;
                for y0 in (x0 - l).max(-l)..=(x0 + l).min(l) {
                    for y1 in (x1 - l).max(-l)..=(x1 + l).min(l) {
                        let fi = (y0 + l) as usize * w + (y1 + l) as usize;
                        let ai = (x0 - y0 + l) as usize * w + (x1 - y1 + l) as usize;
                        s += f[fi] * a[ai];
                    }
                }
                s
            })
            .collect()
    }
}

/// Single-point series oracle on a default box (`L = 1024` in one dimension, 24 in two).
pub fn series_p(kernel: &JumpKernel, t: f64, x: [i64; 2], n_terms: usize) -> Result<f64> {
    let l = if kernel.dim() == 1 { 1024 } else { 24 };
    let l = l.max(kernel.radius() as usize);
    Ok(SeriesOracle::new(kernel, l, n_terms)?.eval(t, x)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_kernel, AngularProfile};

    fn cauchy() -> JumpKernel {
        build_kernel(1, 1.0, AngularProfile::constant(1, 1.0).unwrap(), 16).unwrap()
    }

    #[test]
    fn delta_at_time_zero() {
        let k = cauchy();
        let g = TorusGrid::new(1, 256).unwrap();
        let p = solve_p(&k, 0.0, g).unwrap();
        assert_eq!(p.value([0, 0]), 1.0);
        assert_eq!(p.total().0, 1.0);
    }

    #[test]
    fn nu_zero_collapses_second_moment() {
        let k = cauchy();
        let g = TorusGrid::new(1, 256).unwrap();
        let s = Solver::new(&k, g, SolverOptions::default()).unwrap();
        let m2 = s.solve_m2(0.0, 2.0, 8).unwrap();
        assert_eq!(m2.m2, s.solve_m1(0.0, 2.0).unwrap());
    }

    #[test]
    fn rejects_small_windows_and_bad_steps() {
        let k = cauchy();
        assert!(Solver::new(&k, TorusGrid::new(1, 32).unwrap(), SolverOptions::default()).is_err());
        let s = Solver::new(&k, TorusGrid::new(1, 64).unwrap(), SolverOptions::default()).unwrap();
        assert!(s.solve_m2(0.5, 1.0, 7).is_err());
        assert!(s.solve_m2(0.5, 1.0, 10).is_ok());
        assert!(s.solve_m1(-1.0, 1.0).is_err());
    }

    #[test]
    fn strict_mode_escalates_aliasing() {
        let k = build_kernel(1, 0.5, AngularProfile::constant(1, 1.0).unwrap(), 16).unwrap();
        let g = TorusGrid::new(1, 1024).unwrap();
        let strict = SolverOptions {
            strict: true,
            ..SolverOptions::default()
        };
        assert!(matches!(
            Solver::new(&k, g, strict).unwrap().solve_p(2.0),
            Err(Error::Aliasing { .. })
        ));
        assert!(Solver::new(&k, g, SolverOptions::default())
            .unwrap()
            .solve_p(2.0)
            .is_ok());
    }

    #[test]
    fn series_rejects_large_t() {
        let k = cauchy();
        let o = SeriesOracle::new(&k, 64, 5).unwrap();
        assert!(o.eval(7.0, [0, 0]).is_err());
        let (v, _) = o.eval(0.0, [0, 0]).unwrap();
        assert_eq!(v, 1.0);
    }
}
