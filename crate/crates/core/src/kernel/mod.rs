//! The lattice jump law `a(z) = C·a₀(ż)/|z|^{d+α}`, its symbol and an exact sampler.

mod profile;
mod sampler;
mod symbol;

use std::f64::consts::PI;
use std::io::Write;

use statrs::function::erf::erfc;

pub use profile::{AngularProfile, TrigPoly};
pub use sampler::{JumpSampler, Site};
pub use symbol::cusp_fit;

use crate::error::{invalid, Result};
use crate::quad::GaussLegendre;
use crate::special::hurwitz_zeta;
use crate::stable::{compute_b0, StableSpec};

/// Centre and width of the smooth radial cutoff `χ(r) = ½ erfc((r − R_c)/w)`.
///
/// Near-field lattice sums are done explicitly against `χ`; the remainder
/// `1 − χ` is smooth on the scale `w`, so its lattice sum equals the
/// continuum integral up to `exp(−(κw)²/4)` with `κ ≥ π`.
pub(crate) const CUTOFF_CENTRE: f64 = 32.0;
pub(crate) const CUTOFF_WIDTH: f64 = 4.0;
/// Radius beyond which `χ < 1e-22`.
pub(crate) const CUTOFF_OUTER: f64 = CUTOFF_CENTRE + 7.0 * CUTOFF_WIDTH;
/// Radius below which `1 − χ < 1e-22`.
pub(crate) const CUTOFF_INNER: f64 = 4.0;

pub(crate) fn cutoff(r: f64) -> f64 {
    0.5 * erfc((r - CUTOFF_CENTRE) / CUTOFF_WIDTH)
}

/// Largest supported core radius per dimension.
const MAX_RADIUS_1D: u32 = 1 << 22;
const MAX_RADIUS_2D: u32 = 2048;

/// Symmetric heavy-tailed jump distribution on `ℤᵈ`, `d ∈ {1, 2}`.
///
/// Immutable after construction; share it freely across threads.
#[derive(Debug, Clone)]
pub struct JumpKernel {
    dim: usize,
    alpha: f64,
    profile: AngularProfile,
    radius: u32,
    norm: f64,
    core: Vec<(Site, f64)>,
    core_mass: f64,
    p_tail: f64,
    stable: StableSpec,
    symbol: symbol::SymbolData,
}

/// Builds the kernel with pmf `C·a₀(ż)/|z|^{d+α}` at every `z ≠ 0`.
///
/// `radius` is the (Euclidean) radius of the explicit table used by the
/// sampler; the mass beyond it is kept as `p_tail`.
pub fn build_kernel(
    dim: usize,
    alpha: f64,
    profile: AngularProfile,
    radius: u32,
) -> Result<JumpKernel> {
    if dim != 1 && dim != 2 {
        return Err(invalid("dim", format!("must be 1 or 2, got {dim}")));
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid("alpha", format!("α ∈ (0,2) required, got {alpha}")));
    }
    if profile.dim() != dim {
        return Err(invalid(
            "profile",
            format!("profile is {}-dimensional, kernel is {dim}", profile.dim()),
        ));
    }
    let max_radius = if dim == 1 {
        MAX_RADIUS_1D
    } else {
        MAX_RADIUS_2D
    };
    if !(4..=max_radius).contains(&radius) {
        return Err(invalid(
            "radius",
            format!("need 4 ≤ R ≤ {max_radius}, got {radius}"),
        ));
    }

    let norm = if dim == 1 {
        1.0 / (2.0 * profile.at([1.0, 0.0]) * hurwitz_zeta(1.0 + alpha, 1.0))
    } else {
        1.0 / planar_sum(alpha, &profile)
    };

    let core = core_table(dim, alpha, &profile, norm, radius);
    let core_mass = pairwise_sum(&core.iter().map(|(_, p)| *p).collect::<Vec<_>>());
    let p_tail = 1.0 - core_mass;

    let stable = compute_b0(alpha, &profile, norm)?;
    let symbol = symbol::SymbolData::new(dim, alpha, &profile, norm);
    Ok(JumpKernel {
        dim,
        alpha,
        profile,
        radius,
        norm,
        core,
        core_mass,
        p_tail,
        stable,
        symbol,
    })
}

/// `Σ_{z ≠ 0} a₀(ż)|z|^{-2-α}` on `ℤ²`.
fn planar_sum(alpha: f64, profile: &AngularProfile) -> f64 {
    let reach = CUTOFF_OUTER.ceil() as i64;
    let mut near = Vec::new();
    for i in -reach..=reach {
        for j in -reach..=reach {
            if i == 0 && j == 0 {
                continue;
            }
            let (x, y) = (i as f64, j as f64);
            let r = x.hypot(y);
            if r > CUTOFF_OUTER {
                continue;
            }
            near.push(profile.at([x, y]) * r.powf(-2.0 - alpha) * cutoff(r));
        }
    }
    pairwise_sum(&near) + profile.sphere_integral() * far_radial_integral(alpha)
}

/// `∫_{r_lo}^∞ r^{-1-α} (1 − χ(r)) dr`.
pub(crate) fn far_radial_integral(alpha: f64) -> f64 {
    let gl = GaussLegendre::new(16);
    let mut total = 0.0;
    let step = 1.0;
    let mut a = CUTOFF_INNER;
    while a < CUTOFF_OUTER {
        total += gl.integrate(a, a + step, |r| r.powf(-1.0 - alpha) * (1.0 - cutoff(r)));
        a += step;
    }
    total + CUTOFF_OUTER.powf(-alpha) / alpha
}

fn core_table(
    dim: usize,
    alpha: f64,
    profile: &AngularProfile,
    norm: f64,
    radius: u32,
) -> Vec<(Site, f64)> {
    let r = radius as i64;
    let mut out = Vec::new();
    if dim == 1 {
        let c = norm * profile.at([1.0, 0.0]);
        for z in -r..=r {
            if z != 0 {
                out.push(([z, 0], c * (z.unsigned_abs() as f64).powf(-1.0 - alpha)));
            }
        }
    } else {
        let r2 = r * r;
        for i in -r..=r {
            for j in -r..=r {
                let n2 = i * i + j * j;
                if n2 == 0 || n2 > r2 {
                    continue;
                }
                let (x, y) = (i as f64, j as f64);
                let p = norm * profile.at([x, y]) * (n2 as f64).powf(-1.0 - alpha / 2.0);
                out.push(([i, j], p));
            }
        }
        symmetrize(&mut out);
    }
    out
}

/// Forces `a(z) = a(−z)` bit-for-bit; the interpolated profile is even only
/// up to rounding.
fn symmetrize(table: &mut [(Site, f64)]) {
    let n = table.len();
    // The table is generated in lexicographic order, which is reversed by z ↦ −z.
    for k in 0..n / 2 {
        let mirror = n - 1 - k;
        debug_assert_eq!(table[k].0, [-table[mirror].0[0], -table[mirror].0[1]]);
        let v = 0.5 * (table[k].1 + table[mirror].1);
        table[k].1 = v;
        table[mirror].1 = v;
    }
}

pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 64 {
        let mut s = 0.0;
        let mut c = 0.0;
        for x in v {
            let y = x - c;
            let t = s + y;
            c = (t - s) - y;
            s = t;
        }
        s
    } else {
        let mid = v.len() / 2;
        pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
    }
}

impl JumpKernel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn profile(&self) -> &AngularProfile {
        &self.profile
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Normalisation constant `C`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Tail coefficient `c(ż) = C·a₀(ż)` in the direction of `x`.
    pub fn tail_coefficient(&self, x: [f64; 2]) -> f64 {
        self.norm * self.profile.at(x)
    }

    /// Explicit table `(z, a(z))` for `0 < |z| ≤ R`.
    pub fn core(&self) -> &[(Site, f64)] {
        &self.core
    }

    pub fn core_mass(&self) -> f64 {
        self.core_mass
    }

    /// Mass of `|z| > R`.
    pub fn p_tail(&self) -> f64 {
        self.p_tail
    }

    pub fn stable(&self) -> &StableSpec {
        &self.stable
    }

    /// `a(z)` for any lattice point.
    pub fn pmf(&self, z: Site) -> f64 {
        if self.dim == 1 {
            if z[1] != 0 {
                return 0.0;
            }
            if z[0] == 0 {
                return 0.0;
            }
            return self.norm
                * self.profile.at([1.0, 0.0])
                * (z[0].unsigned_abs() as f64).powf(-1.0 - self.alpha);
        }
        if z == [0, 0] {
            return 0.0;
        }
        let r = (z[0] as f64).hypot(z[1] as f64);
        if r <= self.radius as f64 {
            // keep the exact symmetric value from the table
            if let Some(p) = self.core_lookup(z) {
                return p;
            }
        }
        self.norm * self.profile.at([z[0] as f64, z[1] as f64]) * r.powf(-2.0 - self.alpha)
    }

    fn core_lookup(&self, z: Site) -> Option<f64> {
        self.core
            .binary_search_by(|(s, _)| s.cmp(&z))
            .ok()
            .map(|i| self.core[i].1)
    }

    /// Exact `Σ_{|z|>R} a(z)` in one dimension, via the Hurwitz zeta function.
    pub fn tail_mass_1d(&self) -> Option<f64> {
        (self.dim == 1).then(|| {
            2.0 * self.norm
                * self.profile.at([1.0, 0.0])
                * hurwitz_zeta(1.0 + self.alpha, self.radius as f64 + 1.0)
        })
    }

    /// Writes the core table as CSV preceded by a `#` header line.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(
            w,
            "# d={} alpha={:e} C={:e} R={} p_tail={:e}",
            self.dim, self.alpha, self.norm, self.radius, self.p_tail
        )?;
        if self.dim == 1 {
            writeln!(w, "z,a")?;
            for (z, p) in &self.core {
                writeln!(w, "{},{:e}", z[0], p)?;
            }
        } else {
            writeln!(w, "z1,z2,a")?;
            for (z, p) in &self.core {
                writeln!(w, "{},{},{:e}", z[0], z[1], p)?;
            }
        }
        Ok(())
    }
}

/// Angle of the direction `σ̇` used by the two-dimensional `b₀` table.
pub(crate) fn polar_angle(v: [f64; 2]) -> f64 {
    let a = v[1].atan2(v[0]);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}
