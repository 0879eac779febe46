//! Experiment pipelines and their artifacts.
//!
//! Every run writes into one directory:
//!
//! - `config.toml`: the canonical echo of the configuration;
//! - plot-ready CSV tables, one family per experiment kind;
//! - `checks.csv` and `summary.json`: acceptance checks and fitted numbers;
//! - `manifest.json`: versions, seeds, wall time and guard-band diagnostics.
//!
//! A run that aborts on an error leaves its partial artifacts in place next
//! to an `INVALID` file holding the diagnostic.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use bwalk_core::{
    build_kernel, cusp_fit, estimate_moments, fit_b0, fit_front, front_radius, gamma,
    intermittency_scan, local_limit_check, predicted_front_radius, regime_classify, simulate_many,
    tail_check, Error as CoreError, JumpKernel, MomentEstimate, ScalarField, SeriesOracle, Site,
    Solver, TorusGrid,
};

use crate::config::{ExperimentConfig, Kind};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    /// 2 for anything the configuration can fix, 3 for numerical guards and I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_)
            | RunError::Core(CoreError::InvalidParameter { .. })
            | RunError::Core(CoreError::InvalidProfile(_)) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Escalates the aliasing guard to an error.
    pub strict: bool,
    /// Overrides `experiment.output`.
    pub out: Option<PathBuf>,
}

/// One acceptance check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value <= limit,
        }
    }

    fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value >= limit,
        }
    }

    fn above(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value > limit,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AliasingDiagnostic {
    pub t: f64,
    pub estimated_mass: f64,
    pub limit: f64,
    pub exceeded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RichardsonDiagnostic {
    pub t: f64,
    pub gap: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct McDiagnostic {
    pub t: f64,
    pub replicas_used: usize,
    pub excluded: usize,
    pub flagged: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    pub aliasing: Vec<AliasingDiagnostic>,
    pub richardson: Vec<RichardsonDiagnostic>,
    pub mc: Vec<McDiagnostic>,
}

/// What a completed run produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub checks: Vec<Check>,
    pub results: Value,
    pub diagnostics: Diagnostics,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    dir: &'a Path,
    strict: bool,
    checks: Vec<Check>,
    diag: Diagnostics,
}

/// Runs one experiment and writes its artifacts.
///
/// Check failures are reported in the outcome; errors abort the run and mark
/// the directory `INVALID`.
pub fn run_experiment(
    config: &ExperimentConfig,
    warnings: &[String],
    options: &RunOptions,
) -> Result<Outcome, RunError> {
    let dir = options
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.experiment.output));
    fs::create_dir_all(&dir).map_err(|source| RunError::Io {
        path: dir.clone(),
        source,
    })?;
    let invalid = dir.join("INVALID");
    if invalid.exists() {
        fs::remove_file(&invalid).map_err(|source| RunError::Io {
            path: invalid.clone(),
            source,
        })?;
    }
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let mut ctx = Ctx {
        cfg: config,
        dir: &dir,
        strict: options.strict,
        checks: Vec::new(),
        diag: Diagnostics::default(),
    };
    let result = ctx
        .emit("config.toml", |w| w.write_all(config.echo().as_bytes()))
        .and_then(|_| ctx.dispatch());
    let wall = clock.elapsed().as_secs_f64();
    let mut manifest = json!({
        "tool": "bwalk",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": bwalk_core::VERSION,
        "kind": config.experiment.kind,
        "started_unix": started,
        "wall_time_s": wall,
        "threads": rayon::current_num_threads(),
        "strict": options.strict || config.numerics.strict,
        "seeds": {
            "base_seed": config.mc.seed,
            "replicas": config.mc.replicas,
            "stream": "ChaCha8 per replica, derived from (base_seed, replica index)",
        },
        "warnings": warnings,
        "diagnostics": ctx.diag,
    });
    match result {
        Ok(results) => {
            if !config.checks.enabled {
                ctx.checks.clear();
            }
            let passed = ctx.checks.iter().all(|c| c.pass);
            let checks = ctx.checks.clone();
            ctx.emit("checks.csv", |w| {
                writeln!(w, "name,value,limit,pass")?;
                for c in &checks {
                    writeln!(w, "{},{:e},{:e},{}", c.name, c.value, c.limit, c.pass)?;
                }
                Ok(())
            })?;
            let summary = json!({
                "kind": config.experiment.kind,
                "passed": passed,
                "checks": checks,
                "results": results,
            });
            ctx.emit_json("summary.json", &summary)?;
            manifest["status"] = json!(if passed { "pass" } else { "check-failure" });
            manifest["checks"] = json!(checks);
            ctx.emit_json("manifest.json", &manifest)?;
            Ok(Outcome {
                out_dir: dir.clone(),
                checks,
                results,
                diagnostics: ctx.diag,
            })
        }
        Err(e) => {
            manifest["status"] = json!("invalid");
            manifest["error"] = json!(e.to_string());
            // best effort; the original error is what gets returned
            let _ = ctx.emit_json("manifest.json", &manifest);
            let _ = fs::write(&invalid, format!("{e}\n"));
            Err(e)
        }
    }
}

fn fmt_t(t: f64) -> String {
    format!("{t}")
}

fn unit(dir: &[f64]) -> [f64; 2] {
    let n = dir[0].hypot(dir[1]);
    [dir[0] / n, dir[1] / n]
}

impl Ctx<'_> {
    fn emit(
        &self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    ) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let wrap = |source| RunError::Io {
            path: path.clone(),
            source,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(wrap)?);
        body(&mut w).map_err(wrap)?;
        w.flush().map_err(wrap)
    }

    fn emit_json(&self, name: &str, value: &Value) -> Result<(), RunError> {
        self.emit(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }

    fn emit_field(&self, stem: &str, field: &ScalarField) -> Result<(), RunError> {
        self.emit(&format!("{stem}.csv"), |w| field.write_csv(w))?;
        if self.cfg.numerics.binary {
            self.emit(&format!("{stem}.bin"), |w| field.write_binary(w))?;
        }
        Ok(())
    }

    fn kernel(&self) -> Result<JumpKernel, RunError> {
        let k = &self.cfg.kernel;
        let kernel = build_kernel(k.d, k.alpha, self.cfg.profile()?, k.radius)?;
        self.emit("kernel.csv", |w| kernel.write_csv(w))?;
        Ok(kernel)
    }

    fn solver<'k>(&self, kernel: &'k JumpKernel) -> Result<Solver<'k>, RunError> {
        let grid = TorusGrid::new(self.cfg.kernel.d, self.cfg.numerics.m)?;
        Ok(Solver::new(
            kernel,
            grid,
            self.cfg.solver_options(self.strict),
        )?)
    }

    fn note_aliasing(&mut self, solver: &Solver, t: f64) {
        let mass = solver.aliasing_estimate(t);
        let limit = self.cfg.numerics.aliasing_limit;
        self.diag.aliasing.push(AliasingDiagnostic {
            t,
            estimated_mass: mass,
            limit,
            exceeded: mass > limit,
        });
    }

    fn dispatch(&mut self) -> Result<Value, RunError> {
        match self.cfg.experiment.kind {
            Kind::Density => self.density(),
            Kind::Moments => self.moments(),
            Kind::LocalLimit => self.local_limit(),
            Kind::Front => self.front(),
            Kind::Intermittency => self.intermittency(),
            Kind::McValidate => self.mc_validate(),
        }
    }

    fn density(&mut self) -> Result<Value, RunError> {
        let kernel = self.kernel()?;
        let solver = self.solver(&kernel)?;
        let c = &self.cfg.checks;
        let m = self.cfg.numerics.m;
        let mut per_time = Vec::new();
        let mut fields = Vec::new();
        for &t in &self.cfg.dynamics.times {
            self.note_aliasing(&solver, t);
            let p = solver.solve_p(t)?;
            self.emit_field(&format!("p_t{}", fmt_t(t)), &p)?;
            let (s, e) = p.total();
            let mass_err = (s * e.exp() - 1.0).abs();
            let min_p = p.min_mantissa() * e.exp();
            self.checks.push(Check::at_most(
                format!("mass t={}", fmt_t(t)),
                mass_err,
                c.mass_tol,
            ));
            self.checks
                .push(Check::above(format!("min p t={}", fmt_t(t)), min_p, 0.0));
            let mut entry = json!({ "t": t, "mass_error": mass_err, "min_p": min_p });
            if c.tail {
                let rep = tail_check(&p, &kernel, t, c.tail_inner, c.tail_outer * m as f64)?;
                self.emit(&format!("tail_t{}.csv", fmt_t(t)), |w| {
                    rep.write_csv(w, kernel.dim())
                })?;
                self.checks.push(Check::at_most(
                    format!("tail t={}", fmt_t(t)),
                    rep.max_deviation,
                    c.tail_tol,
                ));
                entry["tail"] = json!({
                    "inner": rep.inner,
                    "outer": rep.outer,
                    "points": rep.points.len(),
                    "max_deviation": rep.max_deviation,
                });
            }
            per_time.push(entry);
            fields.push((t, p));
        }
        let mut results = json!({ "times": per_time });
        if c.series_terms > 0 {
            let oracle = SeriesOracle::new(&kernel, c.series_box, c.series_terms)?;
            let r = c.series_radius;
            let sites: Vec<Site> = if kernel.dim() == 1 {
                (-r..=r).map(|x| [x, 0]).collect()
            } else {
                (-r..=r)
                    .flat_map(|x| (-r..=r).map(move |y| [x, y]))
                    .collect()
            };
            let mut rows = Vec::with_capacity(sites.len() * fields.len());
            for (t, p) in &fields {
                for &s in &sites {
                    let (series, bound) = oracle.eval(*t, s)?;
                    rows.push((*t, s, series, p.value(s), bound));
                }
            }
            let dim = kernel.dim();
            self.emit("series.csv", |w| {
                if dim == 1 {
                    writeln!(w, "t,x,series,spectral,abs_diff,truncation_bound")?;
                } else {
                    writeln!(w, "t,x,y,series,spectral,abs_diff,truncation_bound")?;
                }
                for (t, s, a, b, bound) in &rows {
                    if dim == 1 {
                        write!(w, "{:e},{},", t, s[0])?;
                    } else {
                        write!(w, "{:e},{},{},", t, s[0], s[1])?;
                    }
                    writeln!(w, "{:e},{:e},{:e},{:e}", a, b, (a - b).abs(), bound)?;
                }
                Ok(())
            })?;
            let worst = rows.iter().fold(0.0f64, |m, r| m.max((r.2 - r.3).abs()));
            let bound = rows.iter().fold(0.0f64, |m, r| m.max(r.4));
            self.checks
                .push(Check::at_most("series vs spectral", worst, c.series_tol));
            results["series"] = json!({
                "terms": c.series_terms,
                "radius": r,
                "max_abs_diff": worst,
                "max_truncation_bound": bound,
            });
        }
        Ok(results)
    }

    fn moments(&mut self) -> Result<Value, RunError> {
        let kernel = self.kernel()?;
        let solver = self.solver(&kernel)?;
        let nu = self.cfg.dynamics.nu;
        let n_steps = self.cfg.numerics.n_steps;
        let mut per_time = Vec::new();
        for &t in &self.cfg.dynamics.times {
            self.note_aliasing(&solver, t);
            let m1 = solver.solve_m1(nu, t)?;
            let sm = solver.solve_m2(nu, t, n_steps)?;
            let tag = fmt_t(t);
            self.emit_field(&format!("m1_t{tag}"), &m1)?;
            self.emit_field(&format!("m2_t{tag}"), &sm.m2)?;
            self.diag.richardson.push(RichardsonDiagnostic {
                t,
                gap: sm.richardson_gap,
                limit: self.cfg.numerics.richardson_limit,
            });
            let (s, e) = m1.total();
            let mass_err = ((s.ln() + e - nu * t).exp() - 1.0).abs();
            let mut over_sq = f64::INFINITY;
            let mut over_m1 = f64::INFINITY;
            let mut collapse = 0.0f64;
            for i in 0..m1.grid().len() {
                let (l1, l2) = (m1.ln_abs(i), sm.m2.ln_abs(i));
                over_sq = over_sq.min(l2 - 2.0 * l1);
                over_m1 = over_m1.min(l2 - l1);
                collapse = collapse.max((l2 - l1).abs());
            }
            self.checks.push(Check::at_most(
                format!("m1 mass t={tag}"),
                mass_err,
                self.cfg.checks.mass_tol,
            ));
            self.checks.push(Check::at_most(
                format!("richardson t={tag}"),
                sm.richardson_gap,
                self.cfg.numerics.richardson_limit,
            ));
            self.checks.push(Check::at_least(
                format!("min m2/m1^2 t={tag}"),
                over_sq.exp(),
                1.0 - 1e-6,
            ));
            self.checks.push(Check::at_least(
                format!("min m2/m1 t={tag}"),
                over_m1.exp(),
                1.0 - 1e-9,
            ));
            if nu == 0.0 {
                self.checks.push(Check::at_most(
                    format!("m2 = m1 collapse t={tag}"),
                    collapse,
                    0.0,
                ));
            }
            per_time.push(json!({
                "t": t,
                "m1_mass_error": mass_err,
                "richardson_gap": sm.richardson_gap,
                "min_m2_over_m1_sq": over_sq.exp(),
                "min_m2_over_m1": over_m1.exp(),
                "m1_origin": m1.value([0, 0]),
                "m2_origin": sm.m2.value([0, 0]),
            }));
        }
        Ok(json!({ "nu": nu, "n_steps": n_steps, "times": per_time }))
    }

    fn local_limit(&mut self) -> Result<Value, RunError> {
        let kernel = self.kernel()?;
        let solver = self.solver(&kernel)?;
        let c = self.cfg.checks.clone();
        let mut per_time = Vec::new();
        let mut last = None;
        for &t in &self.cfg.dynamics.times {
            self.note_aliasing(&solver, t);
            let p = solver.solve_p(t)?;
            let rep = local_limit_check(&p, kernel.stable(), t, c.local_k)?;
            let tag = fmt_t(t);
            self.emit(&format!("ratio_t{tag}.csv"), |w| {
                rep.write_csv(w, kernel.dim())
            })?;
            self.checks.push(Check::at_most(
                format!("local limit t={tag}"),
                rep.max_deviation,
                c.local_tol,
            ));
            per_time.push(json!({
                "t": t,
                "radius": rep.outer,
                "points": rep.points.len(),
                "max_deviation": rep.max_deviation,
            }));
            last = Some((t, p));
        }
        let mut routes = vec![
            ("formula", kernel.stable().b0([1.0, 0.0])),
            ("symbol cusp", cusp_fit(&kernel, 0.0).1),
        ];
        if kernel.dim() == 1 {
            let (t, p) = last.expect("times are non-empty");
            routes.push(("density fit", fit_b0(&p, kernel.alpha(), t, c.local_k)?));
        }
        self.emit("b0.csv", |w| {
            writeln!(w, "route,b0")?;
            for (name, v) in &routes {
                writeln!(w, "{name},{v:e}")?;
            }
            Ok(())
        })?;
        for i in 0..routes.len() {
            for j in i + 1..routes.len() {
                let (a, b) = (routes[i], routes[j]);
                self.checks.push(Check::at_most(
                    format!("b0 {} vs {}", a.0, b.0),
                    (a.1 / b.1 - 1.0).abs(),
                    c.b0_tol,
                ));
            }
        }
        let b0: serde_json::Map<String, Value> = routes
            .iter()
            .map(|(n, v)| (n.to_string(), json!(v)))
            .collect();
        Ok(json!({ "times": per_time, "b0": b0 }))
    }

    fn front(&mut self) -> Result<Value, RunError> {
        let kernel = self.kernel()?;
        let cfg = self.cfg;
        let nu = cfg.dynamics.nu;
        let dir = unit(&cfg.analysis.direction);
        let dir = if kernel.dim() == 1 { [1.0, 0.0] } else { dir };
        let threshold = cfg.analysis.threshold;
        let dpa = kernel.dim() as f64 + kernel.alpha();
        // m₁ ≈ C a₀ t e^{νt} / r^{d+α} beyond the bulk, so a level λ moves the radius by λ^{-1/(d+α)}
        let level_shift = threshold.powf(-1.0 / dpa);
        let t_last = *cfg.dynamics.times.last().expect("times are non-empty");
        let largest = predicted_front_radius(&kernel, nu, t_last, dir) * level_shift;
        if (cfg.numerics.m as f64) < 8.0 * largest {
            return Err(RunError::Config(format!(
                "numerics.m = {} is below 8 × the predicted front radius {:.0} at t = {}",
                cfg.numerics.m, largest, t_last
            )));
        }
        let solver = self.solver(&kernel)?;
        let mut crossings = Vec::new();
        for &t in &cfg.dynamics.times {
            self.note_aliasing(&solver, t);
            let m1 = solver.solve_m1(nu, t)?;
            crossings.push(front_radius(&m1, dir, threshold)?);
        }
        let rep = fit_front(&kernel, nu, dir, crossings)?;
        let predicted: Vec<f64> = rep.predicted.iter().map(|p| p * level_shift).collect();
        self.emit("front.csv", |w| {
            writeln!(w, "t,radius,refined,site_x,site_y,predicted,residual")?;
            for ((c, p), r) in rep.crossings.iter().zip(&predicted).zip(&rep.residuals) {
                writeln!(
                    w,
                    "{:e},{},{:e},{},{},{:e},{:e}",
                    c.time, c.radius, c.refined, c.site[0], c.site[1], p, r
                )?;
            }
            Ok(())
        })?;
        let checks = &cfg.checks;
        self.checks.push(Check::at_most(
            "front exponential rate",
            (rep.exponential_rate / rep.target_rate - 1.0).abs(),
            checks.front_slope_tol,
        ));
        let t_cmp = if checks.front_radius_time == 0.0 {
            t_last
        } else {
            checks.front_radius_time
        };
        let i = cfg
            .dynamics
            .times
            .iter()
            .position(|t| *t == t_cmp)
            .expect("validated against dynamics.times");
        let radius_dev = (rep.crossings[i].refined / predicted[i] - 1.0).abs();
        self.checks.push(Check::at_most(
            format!("front radius t={}", fmt_t(t_cmp)),
            radius_dev,
            checks.front_radius_tol,
        ));
        Ok(json!({
            "nu": nu,
            "threshold": threshold,
            "direction": dir,
            "exponential_rate": rep.exponential_rate,
            "raw_slope": rep.raw_slope,
            "target_rate": rep.target_rate,
            "residuals": rep.residuals,
            "radius_time": t_cmp,
            "radius_deviation": radius_dev,
            "crossings": rep.crossings,
            "predicted": predicted,
        }))
    }

    fn intermittency(&mut self) -> Result<Value, RunError> {
        let kernel = self.kernel()?;
        let solver = self.solver(&kernel)?;
        let cfg = self.cfg;
        let nu = cfg.dynamics.nu;
        let g = gamma(kernel.alpha(), kernel.dim())?;
        let mut radii = cfg.radii();
        if kernel.dim() == 1 {
            radii.direction = [1.0, 0.0];
        }
        let mut profiles = Vec::new();
        for &t in &cfg.dynamics.times {
            self.note_aliasing(&solver, t);
            let m1 = solver.solve_m1(nu, t)?;
            let sm = solver.solve_m2(nu, t, cfg.numerics.n_steps)?;
            self.diag.richardson.push(RichardsonDiagnostic {
                t,
                gap: sm.richardson_gap,
                limit: cfg.numerics.richardson_limit,
            });
            profiles.push(intermittency_scan(&m1, &sm.m2, t, g, &radii)?);
        }
        let labels = regime_classify(&profiles, cfg.thresholds())?;
        self.emit("intermittency.csv", |w| {
            writeln!(
                w,
                "t,label,requested_radius,x,y,scaled_coordinate,rho,ln_rho,skipped"
            )?;
            for prof in &profiles {
                for p in &prof.points {
                    let opt = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
                    writeln!(
                        w,
                        "{:e},{},{:e},{},{},{},{},{},{}",
                        prof.time,
                        p.label,
                        p.requested_radius,
                        p.site[0],
                        p.site[1],
                        opt(p.scaled_coordinate),
                        opt(p.rho),
                        opt(p.ln_rho),
                        p.skipped.as_deref().unwrap_or("")
                    )?;
                }
            }
            Ok(())
        })?;
        self.emit("regimes.csv", |w| {
            writeln!(w, "label,growth_exponent,regime,times_used")?;
            for l in &labels {
                let regime = serde_json::to_value(l.regime).expect("regime serializes");
                writeln!(
                    w,
                    "{},{:e},{},{}",
                    l.label,
                    l.growth_exponent,
                    regime.as_str().unwrap_or_default(),
                    l.times_used
                )?;
            }
            Ok(())
        })?;

        let rho_of = |label: &str| -> Vec<Option<f64>> {
            profiles
                .iter()
                .map(|p| {
                    p.points
                        .iter()
                        .find(|q| q.label == label)
                        .and_then(|q| q.ln_rho)
                })
                .collect()
        };
        let min_rho = profiles
            .iter()
            .flat_map(|p| p.points.iter().filter_map(|q| q.rho))
            .fold(f64::INFINITY, f64::min);
        self.checks
            .push(Check::at_least("min rho", min_rho, 1.0 - 1e-6));
        let mut results = json!({
            "nu": nu,
            "gamma": g,
            "profiles": profiles,
            "regimes": labels,
        });
        let checks = &cfg.checks;
        if radii.absolute.contains(&0.0) {
            let origin: Vec<f64> = rho_of("r=0")
                .into_iter()
                .map(|l| l.unwrap_or(f64::NAN))
                .collect();
            let hi = origin.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = origin.iter().cloned().fold(f64::INFINITY, f64::min);
            let band = (hi - lo).exp();
            self.checks
                .push(Check::at_most("rho(t,0) band", band, checks.rho_band));
            results["origin_band"] = json!(band);
        }
        let inside = format!("{}*t^gamma", radii.b);
        let outside = format!("t^(gamma+{})", radii.eps);
        let slope = labels
            .iter()
            .find(|l| l.label == outside)
            .map_or(f64::NAN, |l| l.growth_exponent);
        self.checks.push(Check::at_least(
            "outside growth exponent",
            slope,
            checks.outside_slope_min,
        ));
        let gap = rho_of(&outside)
            .into_iter()
            .zip(rho_of(&inside))
            .map(|(o, i)| match (o, i) {
                (Some(o), Some(i)) => o - i,
                _ => f64::NAN,
            })
            .fold(f64::INFINITY, |m, v| {
                if v.is_nan() || m.is_nan() {
                    f64::NAN
                } else {
                    m.min(v)
                }
            });
        self.checks
            .push(Check::above("ln rho outside minus inside", gap, 0.0));
        results["outside_growth_exponent"] = json!(slope);
        results["min_outside_inside_gap"] = json!(gap);
        Ok(results)
    }

    fn mc_validate(&mut self) -> Result<Value, RunError> {
        let kernel = self.kernel()?;
        let solver = self.solver(&kernel)?;
        let cfg = self.cfg;
        let nu = cfg.dynamics.nu;
        let sim = cfg.sim_config();
        let estimates = estimate_moments(&kernel, &sim)?;
        let z_max = cfg.checks.z_max;
        let sites: Vec<Site> = cfg.mc.sites.iter().map(|x| [*x, 0]).collect();
        let mut rows = Vec::new();
        let mut population = Vec::new();
        let mut per_time = Vec::new();
        for est in &estimates {
            let t = est.time;
            let tag = fmt_t(t);
            self.diag.mc.push(McDiagnostic {
                t,
                replicas_used: est.replicas_used,
                excluded: est.excluded,
                flagged: est.flagged,
            });
            self.emit(&format!("mc_t{tag}.csv"), |w| {
                est.write_csv(kernel.dim(), w)
            })?;
            self.note_aliasing(&solver, t);
            let m1 = solver.solve_m1(nu, t)?;
            let sm = solver.solve_m2(nu, t, cfg.numerics.n_steps)?;
            self.diag.richardson.push(RichardsonDiagnostic {
                t,
                gap: sm.richardson_gap,
                limit: cfg.numerics.richardson_limit,
            });
            let (mut z1_max, mut z2_max) = (0.0f64, 0.0f64);
            for &s in &sites {
                let hat = est.at(s);
                let (e1, e2) = (m1.value(s), sm.m2.value(s));
                let z1 = (hat.m1 - e1) / hat.m1_se;
                let z2 = (hat.m2 - e2) / hat.m2_se;
                z1_max = z1_max.max(z1.abs());
                z2_max = z2_max.max(z2.abs());
                rows.push((t, s, hat, e1, z1, e2, z2));
            }
            let (yule1, yule2) = ((nu * t).exp(), 2.0 * (2.0 * nu * t).exp() - (nu * t).exp());
            let zn = (est.total_mean - yule1) / est.total_se;
            let zn2 = (est.total_sq_mean - yule2) / est.total_sq_se;
            population.push((est.clone(), yule1, zn, yule2, zn2));
            self.checks
                .push(Check::at_most(format!("max |z| m1 t={tag}"), z1_max, z_max));
            self.checks
                .push(Check::at_most(format!("max |z| m2 t={tag}"), z2_max, z_max));
            self.checks
                .push(Check::at_most(format!("|z| N t={tag}"), zn.abs(), z_max));
            self.checks
                .push(Check::at_most(format!("|z| N^2 t={tag}"), zn2.abs(), z_max));
            self.checks.push(Check::at_most(
                format!("mc flagged t={tag}"),
                if est.flagged { 1.0 } else { 0.0 },
                0.0,
            ));
            per_time.push(json!({
                "t": t,
                "max_abs_z_m1": z1_max,
                "max_abs_z_m2": z2_max,
                "z_population": zn,
                "z_population_sq": zn2,
                "replicas_used": est.replicas_used,
                "excluded": est.excluded,
            }));
        }
        self.emit("mc_vs_solver.csv", |w| {
            writeln!(w, "t,x,m1_hat,m1_se,m1,z_m1,m2_hat,m2_se,m2,z_m2")?;
            for (t, s, h, e1, z1, e2, z2) in &rows {
                writeln!(
                    w,
                    "{:e},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                    t, s[0], h.m1, h.m1_se, e1, z1, h.m2, h.m2_se, e2, z2
                )?;
            }
            Ok(())
        })?;
        self.emit("population.csv", |w| write_population(w, &population))?;
        if cfg.mc.snapshots {
            let runs = simulate_many(&kernel, &sim, 0..sim.replicas as u64)?;
            self.emit("snapshots.csv", |w| {
                bwalk_core::sim::write_snapshots_csv(&runs, kernel.dim(), w)
            })?;
        }
        Ok(json!({
            "nu": nu,
            "replicas": sim.replicas,
            "seed": sim.base_seed,
            "times": per_time,
        }))
    }
}

type PopulationRow = (MomentEstimate, f64, f64, f64, f64);

fn write_population(w: &mut impl Write, rows: &[PopulationRow]) -> io::Result<()> {
    writeln!(
        w,
        "t,n_mean,n_se,yule_mean,z_n,n_sq_mean,n_sq_se,yule_sq,z_n_sq"
    )?;
    for (e, y1, z1, y2, z2) in rows {
        writeln!(
            w,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            e.time, e.total_mean, e.total_se, y1, z1, e.total_sq_mean, e.total_sq_se, y2, z2
        )?;
    }
    Ok(())
}
