use std::f64::consts::PI;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use super::JumpKernel;
use crate::error::{Error, Result};

/// Lattice point; one-dimensional kernels use the first coordinate only.
pub type Site = [i64; 2];

const MAX_PROPOSALS: u64 = 1_000_000;
/// Tail radii beyond this are redrawn so coordinates stay exactly representable.
const MAX_TAIL_RADIUS: f64 = 9_007_199_254_740_992.0; // 2^53
const HALF_DIAGONAL: f64 = 0.707_2;

/// Exact sampler for the jump law of a [`JumpKernel`].
///
/// The core `|z| ≤ R` is drawn from an alias table. The tail draws a
/// continuous Pareto radius with the direction from `a₀`, rounds to the
/// lattice and accepts with the ratio of the true pmf to the proposal
/// density at the continuous point, which makes the accepted law exact.
/// The only bias is the redraw of radii above `2^53`, whose mass is
/// reported by [`JumpSampler::truncated_mass`].
#[derive(Debug, Clone)]
pub struct JumpSampler<'k> {
    kernel: &'k JumpKernel,
    alias: WeightedAliasIndex<f64>,
    tail: TailEnvelope,
}

#[derive(Debug, Clone, Copy)]
struct TailEnvelope {
    /// Inner radius of the Pareto proposal.
    r_env: f64,
    /// Bound on the acceptance ratio before normalisation.
    bound: f64,
    a0_max: f64,
}

impl<'k> JumpSampler<'k> {
    pub fn new(kernel: &'k JumpKernel) -> Result<Self> {
        let weights: Vec<f64> = kernel.core().iter().map(|(_, p)| *p).collect();
        let alias = WeightedAliasIndex::new(weights).map_err(|e| Error::InvalidParameter {
            name: "kernel",
            reason: format!("alias table: {e}"),
        })?;
        let r = kernel.radius() as f64;
        let dpa = kernel.dim() as f64 + kernel.alpha();
        let tail = if kernel.dim() == 1 {
            TailEnvelope {
                r_env: r + 0.5,
                bound: ((r + 1.5) / (r + 1.0)).powf(dpa),
                a0_max: 1.0,
            }
        } else {
            let profile = kernel.profile();
            let dtheta = (HALF_DIAGONAL / r).asin();
            let angular = 1.0 + profile.lipschitz_bound() * dtheta / profile.lower_bound();
            TailEnvelope {
                r_env: r - 1.0,
                bound: angular * (1.0 + HALF_DIAGONAL / r).powf(dpa),
                a0_max: profile.upper_bound(),
            }
        };
        Ok(Self {
            kernel,
            alias,
            tail,
        })
    }

    pub fn kernel(&self) -> &JumpKernel {
        self.kernel
    }

    /// Probability mass of tail radii redrawn because they exceed `2^53`.
    pub fn truncated_mass(&self) -> f64 {
        (self.tail.r_env / MAX_TAIL_RADIUS).powf(self.kernel.alpha()) * self.kernel.p_tail()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Site> {
        if rng.random::<f64>() < self.kernel.p_tail() {
            self.sample_tail(rng)
        } else {
            Ok(self.kernel.core()[self.alias.sample(rng)].0)
        }
    }

    fn pareto<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            // 1 − U ∈ (0, 1] avoids an infinite radius
            let u = 1.0 - rng.random::<f64>();
            let r = self.tail.r_env * u.powf(-1.0 / self.kernel.alpha());
            if r <= MAX_TAIL_RADIUS {
                return r;
            }
        }
    }

    /// Draw from `a` conditioned on `|z| > R`.
    pub fn sample_tail<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Site> {
        let alpha = self.kernel.alpha();
        let radius = self.kernel.radius() as f64;
        for _ in 0..MAX_PROPOSALS {
            let r = self.pareto(rng);
            if self.kernel.dim() == 1 {
                let n = r.round();
                let ratio = (r / n).powf(1.0 + alpha) / self.tail.bound;
                if rng.random::<f64>() < ratio {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    return Ok([(sign * n) as i64, 0]);
                }
                continue;
            }
            let profile = self.kernel.profile();
            let theta = loop {
                let th = 2.0 * PI * rng.random::<f64>();
                if rng.random::<f64>() * self.tail.a0_max < profile.at_angle(th) {
                    break th;
                }
            };
            let x = [r * theta.cos(), r * theta.sin()];
            let z = [x[0].round(), x[1].round()];
            let nz = z[0].hypot(z[1]);
            if nz <= radius {
                continue;
            }
            let ratio = profile.at(z) / profile.at_angle(theta) * (r / nz).powf(2.0 + alpha)
                / self.tail.bound;
            debug_assert!(ratio <= 1.0 + 1e-12, "envelope violated: {ratio}");
            if rng.random::<f64>() < ratio {
                return Ok([z[0] as i64, z[1] as i64]);
            }
        }
        Err(Error::SamplerExhausted {
            iterations: MAX_PROPOSALS,
            bound: self.tail.bound,
        })
    }
}
