//! Event-driven Monte Carlo of the branching random walk.
//!
//! With `K` particles alive all clocks are exchangeable, so the next event
//! arrives after an `Exp(K(1+ν))` wait and hits a uniformly chosen particle:
//! a jump with probability `1/(1+ν)`, otherwise a split in place.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::kernel::{JumpKernel, JumpSampler, Site};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub nu: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub replicas: usize,
    pub base_seed: u64,
    pub particle_cap: usize,
}

impl SimConfig {
    pub fn new(nu: f64, snapshot_times: Vec<f64>, replicas: usize, base_seed: u64) -> Self {
        let t_end = snapshot_times.iter().copied().fold(0.0, f64::max);
        Self {
            nu,
            t_end,
            snapshot_times,
            replicas,
            base_seed,
            particle_cap: 1_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            problems.push(format!("ν must be ≥ 0, got {}", self.nu));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            problems.push(format!("t_end must be ≥ 0, got {}", self.t_end));
        }
        if self.snapshot_times.is_empty() {
            problems.push("no snapshot times".into());
        }
        if self.snapshot_times.windows(2).any(|w| !(w[0] <= w[1])) {
            problems.push("snapshot times must be sorted".into());
        }
        if self
            .snapshot_times
            .iter()
            .any(|t| !(*t >= 0.0 && *t <= self.t_end))
        {
            problems.push("snapshot times must lie in [0, t_end]".into());
        }
        if self.replicas == 0 {
            problems.push("need at least one replica".into());
        }
        if self.particle_cap == 0 {
            problems.push("particle cap must be positive".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(invalid("sim", problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSnapshot {
    pub time: f64,
    pub counts: BTreeMap<Site, u64>,
    pub total: u64,
}

impl PopulationSnapshot {
    fn from_particles(time: f64, particles: &[Site]) -> Self {
        let mut counts = BTreeMap::new();
        for p in particles {
            *counts.entry(*p).or_insert(0) += 1;
        }
        Self {
            time,
            counts,
            total: particles.len() as u64,
        }
    }
}

/// Snapshots of one replica. A replica that hit the particle cap is
/// invalid and carries only the snapshots taken before the cap was reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRun {
    pub replica: u64,
    pub snapshots: Vec<PopulationSnapshot>,
    pub valid: bool,
}

/// Generator for replica `index`: one ChaCha stream per replica under the base seed.
pub fn replica_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

pub fn simulate(kernel: &JumpKernel, config: &SimConfig, replica: u64) -> Result<ReplicaRun> {
    config.validate()?;
    let sampler = JumpSampler::new(kernel)?;
    run_replica(&sampler, config, replica)
}

fn run_replica(sampler: &JumpSampler<'_>, config: &SimConfig, replica: u64) -> Result<ReplicaRun> {
    let mut rng = replica_rng(config.base_seed, replica);
    let mut particles: Vec<Site> = vec![[0, 0]];
    let mut snapshots = Vec::with_capacity(config.snapshot_times.len());
    let mut next = 0;
    let mut t = 0.0;
    let jump_probability = 1.0 / (1.0 + config.nu);
    loop {
        let k = particles.len();
        let rate = k as f64 * (1.0 + config.nu);
        let wait: f64 = Exp1.sample(&mut rng);
        let t_new = t + wait / rate;
        // the state is constant on [t, t_new)
        while next < config.snapshot_times.len() && config.snapshot_times[next] < t_new {
            snapshots.push(PopulationSnapshot::from_particles(
                config.snapshot_times[next],
                &particles,
            ));
            next += 1;
        }
        if next == config.snapshot_times.len() || t_new > config.t_end {
            break;
        }
        t = t_new;
        let who = rng.random_range(0..k);
        if rng.random::<f64>() < jump_probability {
            let z = sampler.sample(&mut rng)?;
            let p = &mut particles[who];
            p[0] = p[0].saturating_add(z[0]);
            p[1] = p[1].saturating_add(z[1]);
        } else {
            let p = particles[who];
            particles.push(p);
            if particles.len() > config.particle_cap {
                return Ok(ReplicaRun {
                    replica,
                    snapshots,
                    valid: false,
                });
            }
        }
    }
    Ok(ReplicaRun {
        replica,
        snapshots,
        valid: true,
    })
}

/// Runs replicas `range` in parallel; results are in replica order.
pub fn simulate_many(
    kernel: &JumpKernel,
    config: &SimConfig,
    range: std::ops::Range<u64>,
) -> Result<Vec<ReplicaRun>> {
    config.validate()?;
    let sampler = JumpSampler::new(kernel)?;
    range
        .into_par_iter()
        .map(|r| run_replica(&sampler, config, r))
        .collect()
}

/// Writes `replica,t,x[,y],count` rows.
pub fn write_snapshots_csv(
    runs: &[ReplicaRun],
    dim: usize,
    mut w: impl Write,
) -> std::io::Result<()> {
    if dim == 1 {
        writeln!(w, "replica,t,x,count")?;
    } else {
        writeln!(w, "replica,t,x,y,count")?;
    }
    for run in runs {
        for snap in &run.snapshots {
            for (s, c) in &snap.counts {
                if dim == 1 {
                    writeln!(w, "{},{:e},{},{}", run.replica, snap.time, s[0], c)?;
                } else {
                    writeln!(w, "{},{:e},{},{},{}", run.replica, snap.time, s[0], s[1], c)?;
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteMoment {
    pub site: Site,
    pub m1: f64,
    pub m1_se: f64,
    pub m2: f64,
    pub m2_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub time: f64,
    pub replicas_used: usize,
    pub excluded: usize,
    /// More than 1% of replicas were excluded.
    pub flagged: bool,
    pub sites: Vec<SiteMoment>,
    pub total_mean: f64,
    pub total_se: f64,
    pub total_sq_mean: f64,
    pub total_sq_se: f64,
    /// `N(t)` per valid replica, in replica order.
    pub replica_totals: Vec<u64>,
}

#[derive(Default, Clone)]
struct Sums {
    s1: f64,
    s2: f64,
    s4: f64,
}

impl Sums {
    fn add(&mut self, n: f64) {
        let n2 = n * n;
        self.s1 += n;
        self.s2 += n2;
        self.s4 += n2 * n2;
    }

    /// Means and standard errors of `n` and `n²` over `r` replicas.
    fn moments(&self, r: f64) -> (f64, f64, f64, f64) {
        let m1 = self.s1 / r;
        let m2 = self.s2 / r;
        let m4 = self.s4 / r;
        let dof = r / (r - 1.0).max(1.0);
        let se1 = ((m2 - m1 * m1).max(0.0) * dof / r).sqrt();
        let se2 = ((m4 - m2 * m2).max(0.0) * dof / r).sqrt();
        (m1, se1, m2, se2)
    }
}

const CHUNK: u64 = 512;
const EXCLUSION_LIMIT: f64 = 0.01;

impl MomentEstimate {
    /// Moments at `site`; unoccupied sites report zero with standard error `1/R`.
    pub fn at(&self, site: Site) -> SiteMoment {
        match self.sites.binary_search_by(|m| m.site.cmp(&site)) {
            Ok(i) => self.sites[i],
            Err(_) => {
                let se = 1.0 / self.replicas_used.max(1) as f64;
                SiteMoment {
                    site,
                    m1: 0.0,
                    m1_se: se,
                    m2: 0.0,
                    m2_se: se,
                }
            }
        }
    }

    pub fn write_csv(&self, dim: usize, mut w: impl Write) -> std::io::Result<()> {
        if dim == 1 {
            writeln!(w, "t,x,m1_hat,m1_se,m2_hat,m2_se")?;
        } else {
            writeln!(w, "t,x,y,m1_hat,m1_se,m2_hat,m2_se")?;
        }
        for s in &self.sites {
            if dim == 1 {
                write!(w, "{:e},{},", self.time, s.site[0])?;
            } else {
                write!(w, "{:e},{},{},", self.time, s.site[0], s.site[1])?;
            }
            writeln!(w, "{:e},{:e},{:e},{:e}", s.m1, s.m1_se, s.m2, s.m2_se)?;
        }
        Ok(())
    }
}

/// Sample moments of `n(t,x)` per snapshot time, reduced in replica order.
pub fn estimate_moments(kernel: &JumpKernel, config: &SimConfig) -> Result<Vec<MomentEstimate>> {
    config.validate()?;
    if config.replicas < 100 {
        return Err(invalid(
            "replicas",
            format!(
                "moment estimation needs ≥ 100 replicas, got {}",
                config.replicas
            ),
        ));
    }
    let sampler = JumpSampler::new(kernel)?;
    let n_snap = config.snapshot_times.len();
    let mut site_sums: Vec<BTreeMap<Site, Sums>> = vec![BTreeMap::new(); n_snap];
    let mut totals: Vec<Sums> = vec![Sums::default(); n_snap];
    let mut replica_totals: Vec<Vec<u64>> = vec![Vec::new(); n_snap];
    let mut excluded = 0usize;
    let replicas = config.replicas as u64;
    let mut start = 0;
    while start < replicas {
        let end = (start + CHUNK).min(replicas);
        let runs: Vec<ReplicaRun> = (start..end)
            .into_par_iter()
            .map(|r| run_replica(&sampler, config, r))
            .collect::<Result<_>>()?;
        for run in runs {
            if !run.valid {
                excluded += 1;
                continue;
            }
            for (i, snap) in run.snapshots.iter().enumerate() {
                for (site, c) in &snap.counts {
                    site_sums[i].entry(*site).or_default().add(*c as f64);
                }
                totals[i].add(snap.total as f64);
                replica_totals[i].push(snap.total);
            }
        }
        start = end;
    }
    let used = config.replicas - excluded;
    let r = used as f64;
    let flagged = excluded as f64 > EXCLUSION_LIMIT * config.replicas as f64;
    Ok((0..n_snap)
        .map(|i| {
            let sites = site_sums[i]
                .iter()
                .map(|(site, s)| {
                    let (m1, m1_se, m2, m2_se) = s.moments(r);
                    SiteMoment {
                        site: *site,
                        m1,
                        m1_se,
                        m2,
                        m2_se,
                    }
                })
                .collect();
            let (total_mean, total_se, total_sq_mean, total_sq_se) = totals[i].moments(r);
            MomentEstimate {
                time: config.snapshot_times[i],
                replicas_used: used,
                excluded,
                flagged,
                sites,
                total_mean,
                total_se,
                total_sq_mean,
                total_sq_se,
                replica_totals: std::mem::take(&mut replica_totals[i]),
            }
        })
        .collect())
}
