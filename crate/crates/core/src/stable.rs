//! The symmetric stable limit: `b₀(σ̇)`, the density `S`, and comparisons of
//! solved transition probabilities against the local limit and the far tail.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::ScalarField;
use crate::kernel::{AngularProfile, JumpKernel, Site, TrigPoly};
use crate::quad::{tanh_sinh_adaptive, GaussLegendre, TanhSinh};
use crate::special::stable_prefactor;

/// Limit law with symbol `exp(−b₀(σ̇)|σ|^α)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableSpec {
    dim: usize,
    alpha: f64,
    b0: B0,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum B0 {
    Scalar(f64),
    /// Values at `φ_j = 2πj/N` and their trigonometric interpolant.
    Directional {
        values: Vec<f64>,
        poly: TrigPoly,
    },
}

/// Node-doubling tolerance for the `b₀` quadrature.
const B0_TOL: f64 = 1e-6;
/// Directions used for a two-dimensional constant profile.
const ISOTROPIC_NODES: usize = 8;

/// `b₀(σ̇) = K_α ∫_{S^{d−1}} C a₀(ẋ) |ẋ·σ̇|^α dS` with `K_α = −Γ(−α)cos(απ/2)`.
pub fn compute_b0(alpha: f64, profile: &AngularProfile, norm: f64) -> Result<StableSpec> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid("alpha", format!("α ∈ (0,2) required, got {alpha}")));
    }
    if !(norm.is_finite() && norm > 0.0) {
        return Err(invalid("norm", format!("C must be positive, got {norm}")));
    }
    let k = stable_prefactor(alpha);
    if profile.dim() == 1 {
        return Ok(StableSpec {
            dim: 1,
            alpha,
            b0: B0::Scalar(2.0 * k * norm * profile.at([1.0, 0.0])),
        });
    }
    let n = if profile.is_constant() {
        ISOTROPIC_NODES
    } else {
        profile.values().len()
    };
    let mut values = Vec::with_capacity(n);
    for j in 0..n {
        let phi = 2.0 * PI * j as f64 / n as f64;
        // a₀ is π-periodic, so the circle folds onto |u| < π/2 twice
        let (v, err) = tanh_sinh_adaptive(-PI / 2.0, PI / 2.0, 1e-13, |u, dl, dh| {
            profile.at_angle(phi + u) * dl.min(dh).sin().powf(alpha)
        });
        if err > B0_TOL * v.abs() {
            return Err(Error::NoConvergence(format!(
                "b₀ at φ = {phi:.4}: node doubling changed the value by {err:.2e}"
            )));
        }
        values.push(2.0 * k * norm * v);
    }
    let poly = TrigPoly::interpolate(&values);
    Ok(StableSpec {
        dim: 2,
        alpha,
        b0: B0::Directional { values, poly },
    })
}

impl StableSpec {
    /// One-dimensional spec with a given `b₀`.
    pub fn scalar(alpha: f64, b0: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(invalid("alpha", format!("α ∈ (0,2) required, got {alpha}")));
        }
        if !(b0.is_finite() && b0 > 0.0) {
            return Err(invalid("b0", format!("must be positive, got {b0}")));
        }
        Ok(Self {
            dim: 1,
            alpha,
            b0: B0::Scalar(b0),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `b₀` in the direction of `v` (any nonzero vector; only the angle matters).
    pub fn b0(&self, v: [f64; 2]) -> f64 {
        match &self.b0 {
            B0::Scalar(b) => *b,
            B0::Directional { poly, .. } => poly.eval(v[1].atan2(v[0])),
        }
    }

    pub fn b0_at_angle(&self, phi: f64) -> f64 {
        self.b0([phi.cos(), phi.sin()])
    }

    /// Tabulated values (a single entry in one dimension).
    pub fn b0_table(&self) -> Vec<f64> {
        match &self.b0 {
            B0::Scalar(b) => vec![*b],
            B0::Directional { values, .. } => values.clone(),
        }
    }

    /// `S(y) = (2π)^{-d} ∫ e^{iσ·y − b₀(σ̇)|σ|^α} dσ`.
    pub fn density(&self, y: &[f64]) -> Result<f64> {
        stable_density(self, y)
    }
}

/// Largest panel count before a transform is declared out of reach.
const MAX_PANELS: usize = 2_000_000;
/// Relative error estimate above which the density is refused.
const DENSITY_REL_LIMIT: f64 = 1e-3;

/// `∫_0^∞ σ^p cos(σy) e^{−bσ^α} dσ` for `p ∈ {0, 1}`, with an error estimate.
fn damped_cosine(b: f64, alpha: f64, y: f64, p: i32, rules: &Rules) -> Result<(f64, f64)> {
    let y = y.abs();
    let s_max = (40.0 / b).powf(1.0 / alpha) * if p == 1 { 1.15 } else { 1.0 };
    // twenty Gauss nodes resolve one full period of the cosine
    let mut width = s_max / 16.0;
    if y > 0.0 {
        width = width.min(2.0 * PI / y);
    }
    let panels = (s_max / width).ceil() as usize;
    if panels > MAX_PANELS {
        return Err(Error::NoConvergence(format!(
            "stable density at |y| = {y:.3e} needs {panels} oscillation panels; use the tail asymptote"
        )));
    }
    let f = |s: f64| s.powi(p) * (s * y).cos() * (-b * s.powf(alpha)).exp();
    // first panel carries the σ^α singularity at the origin
    let first = rules.ts_fine.integrate(0.0, width, f);
    let first_coarse = rules.ts_coarse.integrate(0.0, width, f);
    let mut total = first;
    let mut err = (first - first_coarse).abs();
    let mut abs_sum = first.abs();
    for k in 1..panels {
        let a = k as f64 * width;
        let hi = rules.gl_hi.integrate(a, a + width, f);
        let lo = rules.gl_lo.integrate(a, a + width, f);
        total += hi;
        err += (hi - lo).abs();
        abs_sum += hi.abs();
    }
    err += abs_sum * f64::EPSILON * (panels as f64).sqrt();
    Ok((total, err))
}

struct Rules {
    gl_hi: GaussLegendre,
    gl_lo: GaussLegendre,
    ts_fine: TanhSinh,
    ts_coarse: TanhSinh,
}

impl Rules {
    fn new() -> Self {
        Self {
            gl_hi: GaussLegendre::new(20),
            gl_lo: GaussLegendre::new(14),
            ts_fine: TanhSinh::new(1.0 / 16.0),
            ts_coarse: TanhSinh::new(1.0 / 8.0),
        }
    }
}

/// Stable density; see [`StableSpec::density`].
pub fn stable_density(spec: &StableSpec, y: &[f64]) -> Result<f64> {
    assert_eq!(y.len(), spec.dim, "y must have one entry per dimension");
    let rules = Rules::new();
    let (value, err) = if spec.dim == 1 {
        let (v, e) = damped_cosine(spec.b0([1.0, 0.0]), spec.alpha, y[0], 0, &rules)?;
        (v / PI, e / PI)
    } else {
        planar_density(spec, [y[0], y[1]], &rules)?
    };
    if !(value > 0.0) || err > DENSITY_REL_LIMIT * value {
        return Err(Error::NoConvergence(format!(
            "stable density at y = {y:?}: value {value:.3e} with error estimate {err:.2e}; use the tail asymptote"
        )));
    }
    Ok(value)
}

fn planar_density(spec: &StableSpec, y: [f64; 2], rules: &Rules) -> Result<(f64, f64)> {
    let ny = y[0].hypot(y[1]);
    let psi = y[1].atan2(y[0]);
    // integrand is π-periodic in φ, so integrate [0, π) and double; each
    // doubling of the trapezoid reuses the previous nodes
    let node = |phi: f64| -> Result<(f64, f64)> {
        let rho = ny * (phi - psi).cos();
        damped_cosine(spec.b0_at_angle(phi), spec.alpha, rho, 1, rules)
    };
    let norm = 2.0 / (4.0 * PI * PI);
    let mut n = 16;
    let (mut sum, mut err) = (0.0, 0.0);
    for j in 0..n {
        let (v, e) = node(PI * j as f64 / n as f64)?;
        sum += v;
        err += e;
    }
    let mut prev = sum * PI / n as f64 * norm;
    loop {
        for j in 0..n {
            let (v, e) = node(PI * (2 * j + 1) as f64 / (2 * n) as f64)?;
            sum += v;
            err += e;
        }
        n *= 2;
        let scale = PI / n as f64 * norm;
        let value = sum * scale;
        let gap = (value - prev).abs();
        if gap <= 1e-10 * value.abs().max(1e-300) || n >= 1024 {
            return Ok((value, err * scale + gap));
        }
        prev = value;
    }
}

/// Pointwise ratio field with its worst deviation from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub time: f64,
    pub inner: f64,
    pub outer: f64,
    pub points: Vec<RatioPoint>,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub site: Site,
    pub ratio: f64,
}

impl RatioReport {
    fn from_points(time: f64, inner: f64, outer: f64, points: Vec<RatioPoint>) -> Self {
        let max_deviation = points
            .iter()
            .fold(0.0f64, |m, p| m.max((p.ratio - 1.0).abs()));
        Self {
            time,
            inner,
            outer,
            points,
            max_deviation,
        }
    }

    pub fn write_csv(&self, mut w: impl std::io::Write, dim: usize) -> std::io::Result<()> {
        if dim == 1 {
            writeln!(w, "x,ratio")?;
        } else {
            writeln!(w, "x,y,ratio")?;
        }
        for p in &self.points {
            if dim == 1 {
                writeln!(w, "{},{:e}", p.site[0], p.ratio)?;
            } else {
                writeln!(w, "{},{},{:e}", p.site[0], p.site[1], p.ratio)?;
            }
        }
        Ok(())
    }
}

/// `r(x) = p(t,x) t^{d/α} / S(x/t^{1/α})` on `|x| ≤ K t^{1/α}`.
pub fn local_limit_check(
    p: &ScalarField,
    spec: &StableSpec,
    t: f64,
    k: f64,
) -> Result<RatioReport> {
    let grid = p.grid();
    if grid.dim() != spec.dim() {
        return Err(invalid("spec", "dimension differs from the field"));
    }
    let scale = t.powf(1.0 / spec.alpha());
    if scale < 10.0 {
        return Err(invalid(
            "t",
            format!("t^(1/α) = {scale:.3} is below 10 lattice spacings"),
        ));
    }
    let outer = k * scale;
    if outer > grid.max_coord() as f64 {
        return Err(Error::GridTooSmall(format!(
            "local-limit disc of radius {outer:.1} does not fit in the window"
        )));
    }
    let dim = grid.dim() as i32;
    let idx: Vec<usize> = (0..grid.len())
        .filter(|&i| grid.radius(i) <= outer)
        .collect();
    let points = idx
        .par_iter()
        .map(|&i| {
            let s = grid.site(i);
            let y: Vec<f64> = s[..grid.dim()].iter().map(|v| *v as f64 / scale).collect();
            let dens = stable_density(spec, &y)?;
            let pv = p.mantissa()[i] * p.exponent().exp();
            Ok(RatioPoint {
                site: s,
                ratio: pv * scale.powi(dim) / dens,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RatioReport::from_points(t, 0.0, outer, points))
}

/// `r(x) = p(t,x)|x|^{d+α} / (C a₀(ẋ) t)` on `inner_factor·t^{1/α} ≤ |x| ≤ outer`.
pub fn tail_check(
    p: &ScalarField,
    kernel: &JumpKernel,
    t: f64,
    inner_factor: f64,
    outer: f64,
) -> Result<RatioReport> {
    let grid = p.grid();
    if grid.dim() != kernel.dim() {
        return Err(invalid("kernel", "dimension differs from the field"));
    }
    let alpha = kernel.alpha();
    let inner = inner_factor * t.powf(1.0 / alpha);
    let outer = outer.min(grid.max_coord() as f64);
    let dpa = grid.dim() as f64 + alpha;
    let scale = p.exponent().exp();
    let points: Vec<RatioPoint> = (0..grid.len())
        .filter_map(|i| {
            let r = grid.radius(i);
            if r < inner || r > outer {
                return None;
            }
            let s = grid.site(i);
            let c = kernel.tail_coefficient([s[0] as f64, s[1] as f64]);
            Some(RatioPoint {
                site: s,
                ratio: p.mantissa()[i] * scale * r.powf(dpa) / (c * t),
            })
        })
        .collect();
    if points.is_empty() {
        return Err(Error::GridTooSmall(format!(
            "far-field annulus [{inner:.1}, {outer:.1}] is empty"
        )));
    }
    Ok(RatioReport::from_points(t, inner, outer, points))
}

/// Least-squares `b₀` for a one-dimensional field against `t^{-1/α} S_b(x/t^{1/α})`
/// on `|x| ≤ K t^{1/α}`, by golden-section search.
pub fn fit_b0(p: &ScalarField, alpha: f64, t: f64, k: f64) -> Result<f64> {
    let grid = p.grid();
    if grid.dim() != 1 {
        return Err(invalid("field", "b₀ fitting is one-dimensional"));
    }
    let scale = t.powf(1.0 / alpha);
    let outer = (k * scale).min(grid.max_coord() as f64);
    let data: Vec<(f64, f64)> = (0..grid.len())
        .filter(|&i| grid.radius(i) <= outer)
        .map(|i| {
            let x = grid.site(i)[0] as f64;
            (x / scale, p.mantissa()[i] * p.exponent().exp() * scale)
        })
        .collect();
    let p0 = p.value([0, 0]) * scale;
    if !(p0 > 0.0) {
        return Err(invalid("field", "non-positive value at the origin"));
    }
    // S_b(0) = Γ(1+1/α) / (π b^{1/α})
    let g = statrs::function::gamma::gamma(1.0 + 1.0 / alpha);
    let guess = (g / (PI * p0)).powf(alpha);
    let loss = |b: f64| -> Result<f64> {
        let spec = StableSpec::scalar(alpha, b)?;
        let parts = data
            .par_iter()
            .map(|(y, v)| Ok((stable_density(&spec, &[*y])? - v).powi(2)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(parts.iter().sum())
    };
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.7 * guess, 1.4 * guess);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (loss(c)?, loss(d)?);
    while (b - a) > 1e-9 * guess {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = loss(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = loss(d)?;
        }
    }
    Ok(0.5 * (a + b))
}
