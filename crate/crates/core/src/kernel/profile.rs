use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real trigonometric polynomial `c₀ + Σ_k (a_k cos kθ + b_k sin kθ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    pub c0: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigPoly {
    /// Interpolant through `N` equispaced samples at `θ_j = 2πj/N`, `N` even.
    ///
    /// The Nyquist mode carries only its cosine part so the interpolant is real
    /// and reproduces the samples exactly.
    pub fn interpolate(values: &[f64]) -> Self {
        let n = values.len();
        assert!(n >= 2 && n.is_multiple_of(2));
        let half = n / 2;
        let nf = n as f64;
        let c0 = values.iter().sum::<f64>() / nf;
        let mut cos = vec![0.0; half];
        let mut sin = vec![0.0; half];
        for k in 1..=half {
            let (mut ca, mut sa) = (0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                // k·j reduced mod n keeps the angle small and exact
                let ang = 2.0 * PI * ((k * j) % n) as f64 / nf;
                ca += v * ang.cos();
                sa += v * ang.sin();
            }
            if k == half {
                cos[k - 1] = ca / nf;
            } else {
                cos[k - 1] = 2.0 * ca / nf;
                sin[k - 1] = 2.0 * sa / nf;
            }
        }
        Self { c0, cos, sin }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            c0: c,
            cos: Vec::new(),
            sin: Vec::new(),
        }
    }

    pub fn degree(&self) -> usize {
        self.cos.len()
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let mut v = self.c0;
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            if *a == 0.0 && *b == 0.0 {
                continue;
            }
            let (s, c) = ((k + 1) as f64 * theta).sin_cos();
            v += a * c + b * s;
        }
        v
    }

    /// Upper bound on `|f|` from the coefficient moduli.
    pub fn abs_bound(&self) -> f64 {
        self.c0.abs()
            + self
                .cos
                .iter()
                .zip(&self.sin)
                .map(|(a, b)| a.hypot(*b))
                .sum::<f64>()
    }

    /// Upper bound on `|f'|`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(k, (a, b))| (k + 1) as f64 * a.hypot(*b))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Shape {
    Constant(f64),
    Tabulated { values: Vec<f64>, poly: TrigPoly },
}

/// Direction dependence `a₀(ż)` of the jump tail.
///
/// In one dimension symmetry leaves a single value. In two dimensions the
/// profile is given at `N` equispaced angles and extended by trigonometric
/// interpolation; it must be even (`a₀(θ+π) = a₀(θ)`) and strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularProfile {
    dim: usize,
    shape: Shape,
    min: f64,
    max: f64,
}

const EVENNESS_TOL: f64 = 1e-12;

impl AngularProfile {
    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidProfile(format!(
                "dimension {dim} is not 1 or 2"
            )));
        }
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "a₀ must be strictly positive, got {value}"
            )));
        }
        Ok(Self {
            dim,
            shape: Shape::Constant(value),
            min: value,
            max: value,
        })
    }

    /// Two-dimensional profile tabulated at `θ_j = 2πj/N`.
    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidProfile(format!(
                "need an even number of angles, got {n}"
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidProfile(format!(
                "tabulated a₀ must be strictly positive, found {v}"
            )));
        }
        let half = n / 2;
        for j in 0..half {
            let (u, v) = (values[j], values[j + half]);
            if (u - v).abs() > EVENNESS_TOL * u.max(v) {
                return Err(Error::InvalidProfile(format!(
                    "a₀ is not even: a₀(θ_{j}) = {u} but a₀(θ_{j}+π) = {v}"
                )));
            }
        }
        let poly = TrigPoly::interpolate(&values);
        let probes = 16 * n;
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..probes {
            let v = poly.eval(2.0 * PI * i as f64 / probes as f64);
            min = min.min(v);
            max = max.max(v);
        }
        if min <= 0.0 {
            return Err(Error::InvalidProfile(format!(
                "interpolated a₀ reaches {min:.3e} between the tabulated angles"
            )));
        }
        Ok(Self {
            dim: 2,
            shape: Shape::Tabulated { values, poly },
            min,
            max,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.shape, Shape::Constant(_))
    }

    /// Tabulated values, or the single constant.
    pub fn values(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Constant(c) => vec![*c],
            Shape::Tabulated { values, .. } => values.clone(),
        }
    }

    /// `a₀` at polar angle `θ` (ignored for constant profiles).
    pub fn at_angle(&self, theta: f64) -> f64 {
        match &self.shape {
            Shape::Constant(c) => *c,
            Shape::Tabulated { poly, .. } => poly.eval(theta),
        }
    }

    /// `a₀` in the direction of a nonzero lattice or real vector.
    ///
    /// `x` and `−x` give bit-identical values.
    pub fn at(&self, x: [f64; 2]) -> f64 {
        match &self.shape {
            Shape::Constant(c) => *c,
            Shape::Tabulated { poly, .. } => {
                let upper = x[1] > 0.0 || (x[1] == 0.0 && x[0] > 0.0);
                let x = if upper { x } else { [-x[0], -x[1]] };
                poly.eval(x[1].atan2(x[0]))
            }
        }
    }

    pub fn poly(&self) -> TrigPoly {
        match &self.shape {
            Shape::Constant(c) => TrigPoly::constant(*c),
            Shape::Tabulated { poly, .. } => poly.clone(),
        }
    }

    /// `∫_{S^{d-1}} a₀ dS`: the two-point sum in one dimension.
    pub fn sphere_integral(&self) -> f64 {
        match (&self.shape, self.dim) {
            (Shape::Constant(c), 1) => 2.0 * c,
            (Shape::Constant(c), _) => 2.0 * PI * c,
            (Shape::Tabulated { poly, .. }, _) => 2.0 * PI * poly.c0,
        }
    }

    /// Minimum over a fine probe grid (exact for constants).
    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    /// Rigorous upper bound on `a₀`.
    pub fn upper_bound(&self) -> f64 {
        match &self.shape {
            Shape::Constant(c) => *c,
            Shape::Tabulated { poly, .. } => poly.abs_bound().max(self.max),
        }
    }

    /// Rigorous positive lower bound on `a₀`, from the probe minimum and the
    /// derivative bound.
    pub fn lower_bound(&self) -> f64 {
        match &self.shape {
            Shape::Constant(c) => *c,
            Shape::Tabulated { values, poly } => {
                let spacing = 2.0 * PI / (16 * values.len()) as f64;
                let lb = self.min - 0.5 * spacing * poly.lipschitz_bound();
                if lb > 0.0 {
                    lb
                } else {
                    0.5 * self.min
                }
            }
        }
    }

    pub fn lipschitz_bound(&self) -> f64 {
        match &self.shape {
            Shape::Constant(_) => 0.0,
            Shape::Tabulated { poly, .. } => poly.lipschitz_bound(),
        }
    }
}
