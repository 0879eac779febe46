//! Branching random walks on `ℤᵈ` (`d ∈ {1, 2}`) with heavy-tailed jumps.
//!
//! Particles jump at rate 1 with law `a(z) = C·a₀(ż)/|z|^{d+α}` and split at
//! rate `ν`. The crate provides
//!
//! - [`kernel`]: the jump law, its symbol `â(σ)` and an exact sampler;
//! - [`spectral`]: `p(t,x)`, `m₁` and `m₂` on a periodic window;
//! - [`stable`]: the stable limit and far-tail comparisons;
//! - [`sim`]: event-driven Monte Carlo of the particle system;
//! - [`analysis`]: fronts of `m₁` and the intermittency ratio `m₂/m₁²`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
mod fft;
pub mod grid;
pub mod kernel;
pub mod quad;
pub mod sim;
pub mod special;
pub mod spectral;
pub mod stable;

pub use analysis::{
    fit_front, front_radius, gamma, intermittency_scan, predicted_front_radius, regime_classify,
    FrontCrossing, FrontReport, IntermittencyProfile, ProbePoint, RadiiSpec, Regime, RegimeLabel,
    RegimeThresholds,
};
pub use error::{Error, Result};
pub use grid::{ScalarField, TorusGrid};
pub use kernel::{build_kernel, cusp_fit, AngularProfile, JumpKernel, JumpSampler, Site};
pub use sim::{
    estimate_moments, simulate, simulate_many, MomentEstimate, PopulationSnapshot, ReplicaRun,
    SimConfig, SiteMoment,
};
pub use spectral::{
    apply_generator, series_p, solve_m1, solve_m2, solve_p, SecondMoment, SeriesOracle, Solver,
    SolverOptions,
};
pub use stable::{
    compute_b0, fit_b0, local_limit_check, stable_density, tail_check, RatioPoint, RatioReport,
    StableSpec,
};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `â(σ)` for a kernel; `σ` is reduced modulo `2π`.
pub fn kernel_symbol(kernel: &JumpKernel, sigma: &[f64]) -> f64 {
    kernel.symbol(sigma)
}

/// One jump drawn from `a`.
pub fn sample_jump<R: rand::Rng + ?Sized>(sampler: &JumpSampler<'_>, rng: &mut R) -> Result<Site> {
    sampler.sample(rng)
}
