//! Fixed quadrature rules used by the symbol, b₀ and stable-density code.

use std::f64::consts::PI;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tanh–sinh (double exponential) rule on `[a, b]` at step `h`.
///
/// Each node carries its distance to the nearer endpoint, computed without
/// cancellation, so integrands with algebraic endpoint singularities can be
/// evaluated accurately.
#[derive(Debug, Clone)]
pub struct TanhSinh {
    /// `(offset from a, offset from b (negative), weight)` on `[0, 1]`-scaled form.
    points: Vec<(f64, f64, f64)>,
}

impl TanhSinh {
    /// Rule with step `h`, truncated once nodes come within 1e-290 of an endpoint.
    pub fn new(h: f64) -> Self {
        let mut points = Vec::new();
        let mut k: i64 = 0;
        loop {
            let t = k as f64 * h;
            let u = 0.5 * PI * t.sinh();
            let cu = u.cosh();
            // x = tanh(u) on [-1,1]; distance to -1 is 1 + tanh(u) = 2 / (1 + e^{-2u})
            let w = h * 0.5 * PI * t.cosh() / (cu * cu);
            let from_lo = 2.0 / (1.0 + (-2.0 * u).exp());
            let from_hi = 2.0 / (1.0 + (2.0 * u).exp());
            if from_hi < 1e-290 || w == 0.0 {
                break;
            }
            points.push((from_lo, from_hi, w));
            if k > 0 {
                points.push((from_hi, from_lo, w));
            }
            k += 1;
        }
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nodes on `[a, b]` as `(x, x - a, b - x, weight)`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        self.points.iter().map(move |&(lo, hi, w)| {
            let dl = half * lo;
            let dh = half * hi;
            let x = if dl < dh { a + dl } else { b - dh };
            (x, dl, dh, half * w)
        })
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, _, _, w)| w * f(x)).sum()
    }
}

/// Integrates with tanh–sinh, halving the step until two levels agree.
///
/// Returns `(value, |difference of the last two levels|)`.
pub fn tanh_sinh_adaptive(
    a: f64,
    b: f64,
    tol: f64,
    f: impl Fn(f64, f64, f64) -> f64,
) -> (f64, f64) {
    let mut h = 0.5;
    let mut prev = f64::NAN;
    let mut err = f64::INFINITY;
    for _ in 0..8 {
        let rule = TanhSinh::new(h);
        let v: f64 = rule
            .mapped(a, b)
            .map(|(x, dl, dh, w)| w * f(x, dl, dh))
            .sum();
        if prev.is_finite() {
            err = (v - prev).abs();
            if err <= tol * v.abs().max(1e-300) {
                return (v, err);
            }
        }
        prev = v;
        h *= 0.5;
    }
    (prev, err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        let v = gl.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
        assert!((gl.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        // ∫_0^1 x^{-1/2} dx = 2
        let (v, _) = tanh_sinh_adaptive(0.0, 1.0, 1e-13, |_, dl, _| dl.powf(-0.5));
        assert!((v - 2.0).abs() < 1e-12);
        // ∫_{-π/2}^{π/2} cos^{0.3} u du = √π Γ(0.65)/Γ(1.15)
        let (v, _) = tanh_sinh_adaptive(-PI / 2.0, PI / 2.0, 1e-13, |_, dl, dh| {
            dl.min(dh).sin().powf(0.3)
        });
        let exact =
            PI.sqrt() * statrs::function::gamma::gamma(0.65) / statrs::function::gamma::gamma(1.15);
        assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
    }
}
