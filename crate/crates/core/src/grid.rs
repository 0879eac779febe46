//! Periodic windows of `ℤᵈ` and log-scaled fields on them.

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::Site;

/// Largest number of points a grid may hold.
const MAX_POINTS: usize = 1 << 26;

/// The window `{−M/2, …, M/2−1}^d` with periodic wrap.
///
/// Window points are stored row-major (first coordinate slowest). Dual
/// nodes `σ_k = 2πk/M` are indexed in FFT order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    dim: usize,
    m: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, m: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(invalid("dim", format!("must be 1 or 2, got {dim}")));
        }
        if m < 8 || !m.is_power_of_two() {
            return Err(invalid("M", format!("must be a power of two ≥ 8, got {m}")));
        }
        if m.checked_pow(dim as u32).is_none_or(|n| n > MAX_POINTS) {
            return Err(invalid(
                "M",
                format!("{m}^{dim} points exceed {MAX_POINTS}"),
            ));
        }
        Ok(Self { dim, m })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per dimension.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest coordinate inside the window (`M/2 − 1`).
    pub fn max_coord(&self) -> i64 {
        (self.m / 2) as i64 - 1
    }

    pub fn site(&self, index: usize) -> Site {
        let h = (self.m / 2) as i64;
        if self.dim == 1 {
            [index as i64 - h, 0]
        } else {
            [(index / self.m) as i64 - h, (index % self.m) as i64 - h]
        }
    }

    /// Window index of `site`, if it lies in the window.
    pub fn index(&self, site: Site) -> Option<usize> {
        let h = (self.m / 2) as i64;
        let inside = |x: i64| (-h..h).contains(&x);
        if self.dim == 1 {
            (site[1] == 0 && inside(site[0])).then(|| (site[0] + h) as usize)
        } else {
            (inside(site[0]) && inside(site[1]))
                .then(|| (site[0] + h) as usize * self.m + (site[1] + h) as usize)
        }
    }

    /// Window index of `site` after periodic reduction.
    pub fn wrapped_index(&self, site: Site) -> usize {
        let m = self.m as i64;
        let h = m / 2;
        let w = |x: i64| ((x + h).rem_euclid(m)) as usize;
        if self.dim == 1 {
            w(site[0])
        } else {
            w(site[0]) * self.m + w(site[1])
        }
    }

    /// `2πk/M` with `k` taken in `[−M/2, M/2)`, for FFT index `k`.
    pub fn dual_node(&self, k: usize) -> f64 {
        let k = if k < self.m / 2 {
            k as f64
        } else {
            k as f64 - self.m as f64
        };
        2.0 * PI * k / self.m as f64
    }

    /// Maps a window-ordered index to FFT order and back (the shift is an involution).
    pub fn shift(&self, index: usize) -> usize {
        let h = self.m / 2;
        if self.dim == 1 {
            (index + h) % self.m
        } else {
            let (i, j) = (index / self.m, index % self.m);
            ((i + h) % self.m) * self.m + (j + h) % self.m
        }
    }

    /// Euclidean norm of the window coordinate at `index`.
    pub fn radius(&self, index: usize) -> f64 {
        let s = self.site(index);
        (s[0] as f64).hypot(s[1] as f64)
    }
}

/// Field values `mantissa · exp(exponent)` over a window at time `t`.
///
/// The shared exponent absorbs growth like `e^{νt}`; mantissas are kept with
/// maximum modulus in `[1e-3, 1e3]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    mantissa: Vec<f64>,
    exponent: f64,
    time: f64,
}

const BAND_LO: f64 = 1e-3;
const BAND_HI: f64 = 1e3;

impl ScalarField {
    pub fn new(grid: TorusGrid, mantissa: Vec<f64>, exponent: f64, time: f64) -> Self {
        assert_eq!(mantissa.len(), grid.len());
        let mut f = Self {
            grid,
            mantissa,
            exponent,
            time,
        };
        f.renormalize();
        f
    }

    /// Kronecker delta at the origin.
    pub fn delta(grid: TorusGrid, time: f64) -> Self {
        let mut m = vec![0.0; grid.len()];
        m[grid.index([0, 0]).expect("origin is in every window")] = 1.0;
        Self::new(grid, m, 0.0, time)
    }

    fn renormalize(&mut self) {
        let max = self.max_abs_mantissa();
        if max == 0.0 || !max.is_finite() || (BAND_LO..=BAND_HI).contains(&max) {
            return;
        }
        let inv = 1.0 / max;
        self.mantissa.iter_mut().for_each(|v| *v *= inv);
        self.exponent += max.ln();
    }

    fn max_abs_mantissa(&self) -> f64 {
        self.mantissa.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn mantissa(&self) -> &[f64] {
        &self.mantissa
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Mantissa at `site`; panics outside the window.
    pub fn mantissa_at(&self, site: Site) -> f64 {
        self.mantissa[self.grid.index(site).expect("site outside window")]
    }

    /// True value at `site` (may overflow to infinity).
    pub fn value(&self, site: Site) -> f64 {
        self.mantissa_at(site) * self.exponent.exp()
    }

    /// `ln |value|` at window index `index`.
    pub fn ln_abs(&self, index: usize) -> f64 {
        self.mantissa[index].abs().ln() + self.exponent
    }

    /// `value(site) ≥ threshold`, decided without forming the value.
    pub fn at_least(&self, index: usize, threshold: f64) -> bool {
        let level = threshold * (-self.exponent).exp();
        if level.is_normal() {
            self.mantissa[index] >= level
        } else {
            self.mantissa[index].ln() + self.exponent >= threshold.ln()
        }
    }

    /// Multiplies every value by `λ > 0`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self::new(
            self.grid,
            self.mantissa.iter().map(|v| v * lambda).collect(),
            self.exponent,
            self.time,
        )
    }

    /// Multiplies every value by `exp(shift)` without touching mantissas.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut f = self.clone();
        f.exponent += shift;
        f
    }

    /// `(Σ mantissa, exponent)`; the total is `Σ · exp(exponent)`.
    pub fn total(&self) -> (f64, f64) {
        (crate::kernel::pairwise_sum(&self.mantissa), self.exponent)
    }

    pub fn min_mantissa(&self) -> f64 {
        self.mantissa.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Writes `x[,y],mantissa,exponent,value`; `value` is empty when it
    /// over- or underflows.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        if self.grid.dim == 1 {
            writeln!(w, "x,mantissa,exponent,value")?;
        } else {
            writeln!(w, "x,y,mantissa,exponent,value")?;
        }
        let scale = self.exponent.exp();
        for (i, m) in self.mantissa.iter().enumerate() {
            let s = self.grid.site(i);
            let v = m * scale;
            let representable = v.is_normal() || *m == 0.0;
            if self.grid.dim == 1 {
                write!(w, "{},", s[0])?;
            } else {
                write!(w, "{},{},", s[0], s[1])?;
            }
            if representable {
                writeln!(w, "{:e},{:e},{:e}", m, self.exponent, v)?;
            } else {
                writeln!(w, "{:e},{:e},", m, self.exponent)?;
            }
        }
        Ok(())
    }

    /// Little-endian layout: `u32 d, u32 M, f64 t, f64 E`, then `M^d` f64
    /// mantissas in row-major window order.
    pub fn write_binary(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(&(self.grid.dim as u32).to_le_bytes())?;
        w.write_all(&(self.grid.m as u32).to_le_bytes())?;
        w.write_all(&self.time.to_le_bytes())?;
        w.write_all(&self.exponent.to_le_bytes())?;
        for m in &self.mantissa {
            w.write_all(&m.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Self> {
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let dim = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let m = u32::from_le_bytes(b4) as usize;
        let grid = TorusGrid::new(dim, m)?;
        r.read_exact(&mut b8)?;
        let time = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let exponent = f64::from_le_bytes(b8);
        let mut mantissa = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            r.read_exact(&mut b8)?;
            mantissa.push(f64::from_le_bytes(b8));
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "trailing bytes after field data",
            )));
        }
        // stored fields are already normalised; keep them bit-exact
        Ok(Self {
            grid,
            mantissa,
            exponent,
            time,
        })
    }
}
