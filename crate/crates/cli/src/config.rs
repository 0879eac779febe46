//! Experiment configuration.
//!
//! The format is TOML with seven sections. Only `[experiment]`, `[kernel]`,
//! `[dynamics]` and `[numerics]` are required; the rest fall back to
//! defaults. See the README for the full key list.
//!
//! Parsing never stops at the first problem: every violation is collected
//! and reported together.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use bwalk_core::{AngularProfile, RadiiSpec, RegimeThresholds, SimConfig, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Density,
    Moments,
    LocalLimit,
    Front,
    Intermittency,
    McValidate,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::Density,
        Kind::Moments,
        Kind::LocalLimit,
        Kind::Front,
        Kind::Intermittency,
        Kind::McValidate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Density => "density",
            Kind::Moments => "moments",
            Kind::LocalLimit => "local-limit",
            Kind::Front => "front",
            Kind::Intermittency => "intermittency",
            Kind::McValidate => "mc-validate",
        }
    }

    fn needs_nu(self) -> bool {
        matches!(
            self,
            Kind::Moments | Kind::Front | Kind::Intermittency | Kind::McValidate
        )
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Kind::ALL.iter().map(|k| k.as_str()).collect();
                format!(
                    "unknown experiment kind {s:?}; expected one of {}",
                    names.join(", ")
                )
            })
    }
}

/// `a₀`: one number for a constant profile, or a table of values at
/// equally spaced angles (two dimensions only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Constant(f64),
    Table(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSection {
    pub kind: Kind,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSection {
    pub d: usize,
    pub alpha: f64,
    pub profile: Profile,
    pub radius: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSection {
    pub nu: f64,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericsSection {
    pub m: usize,
    pub n_steps: usize,
    pub aliasing_limit: f64,
    pub richardson_limit: f64,
    pub strict: bool,
    pub binary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSection {
    pub replicas: usize,
    pub seed: u64,
    pub cap: usize,
    /// Lattice coordinates compared against the solver (first axis; second is 0).
    pub sites: Vec<i64>,
    pub snapshots: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSection {
    pub b: f64,
    pub eps: f64,
    pub threshold: f64,
    pub radii: Vec<f64>,
    pub scaled_radii: Vec<f64>,
    pub direction: Vec<f64>,
    pub non_intermittent: f64,
    pub intermittent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChecksSection {
    pub enabled: bool,
    pub mass_tol: f64,
    pub tail: bool,
    pub tail_inner: f64,
    /// Outer radius of the far-field annulus as a fraction of `M`.
    pub tail_outer: f64,
    pub tail_tol: f64,
    pub series_terms: usize,
    pub series_radius: i64,
    /// Half width of the box on which the series oracle convolves.
    pub series_box: usize,
    pub series_tol: f64,
    pub local_k: f64,
    pub local_tol: f64,
    pub b0_tol: f64,
    pub front_slope_tol: f64,
    pub front_radius_tol: f64,
    /// Time at which the radius is compared with the leading term; `0` means the last time.
    pub front_radius_time: f64,
    pub z_max: f64,
    pub rho_band: f64,
    pub outside_slope_min: f64,
}

/// A fully validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub kernel: KernelSection,
    pub dynamics: DynamicsSection,
    pub numerics: NumericsSection,
    pub mc: McSection,
    pub analysis: AnalysisSection,
    pub checks: ChecksSection,
}

/// Everything wrong with a configuration, plus non-fatal warnings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigErrors {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.errors.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "error: {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// A parsed configuration with the warnings raised along the way.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub config: ExperimentConfig,
    pub warnings: Vec<String>,
}

const SECTIONS: [&str; 7] = [
    "experiment",
    "kernel",
    "dynamics",
    "numerics",
    "mc",
    "analysis",
    "checks",
];

struct Reader<'a> {
    root: &'a Table,
    strict: bool,
    errors: Vec<String>,
    warnings: Vec<String>,
}

impl<'a> Reader<'a> {
    fn section(&mut self, name: &str, required: bool) -> Option<&'a Table> {
        match self.root.get(name) {
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                self.errors.push(format!("[{name}] must be a table"));
                None
            }
            None => {
                if required {
                    self.errors.push(format!("missing section [{name}]"));
                }
                None
            }
        }
    }

    fn unknown(&mut self, what: String) {
        if self.strict {
            self.errors.push(what);
        } else {
            self.warnings.push(what);
        }
    }

    fn check_keys(&mut self, name: &str, table: Option<&Table>, known: &[&str]) {
        let Some(table) = table else { return };
        for key in table.keys() {
            if !known.contains(&key.as_str()) {
                self.unknown(format!("unknown key {name}.{key}"));
            }
        }
    }

    fn get<T>(
        &mut self,
        table: Option<&Table>,
        section: &str,
        key: &str,
        default: Option<T>,
        conv: impl Fn(&Value) -> Option<T>,
        expected: &str,
    ) -> Option<T> {
        match table.and_then(|t| t.get(key)) {
            Some(v) => {
                let out = conv(v);
                if out.is_none() {
                    self.errors
                        .push(format!("{section}.{key} must be {expected}, got {v}"));
                }
                out
            }
            None => {
                if default.is_none() {
                    self.errors
                        .push(format!("missing mandatory key {section}.{key}"));
                }
                default
            }
        }
    }

    fn float(&mut self, t: Option<&Table>, s: &str, k: &str, d: Option<f64>) -> Option<f64> {
        self.get(t, s, k, d, as_float, "a number")
    }

    fn uint(&mut self, t: Option<&Table>, s: &str, k: &str, d: Option<u64>) -> Option<u64> {
        self.get(
            t,
            s,
            k,
            d,
            |v| v.as_integer().and_then(|i| u64::try_from(i).ok()),
            "a non-negative integer",
        )
    }

    fn boolean(&mut self, t: Option<&Table>, s: &str, k: &str, d: bool) -> bool {
        self.get(t, s, k, Some(d), Value::as_bool, "a boolean")
            .unwrap_or(d)
    }

    fn floats(
        &mut self,
        t: Option<&Table>,
        s: &str,
        k: &str,
        d: Option<Vec<f64>>,
    ) -> Option<Vec<f64>> {
        self.get(
            t,
            s,
            k,
            d,
            |v| v.as_array()?.iter().map(as_float).collect(),
            "an array of numbers",
        )
    }

    fn require(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.errors.push(msg());
        }
    }
}

fn as_float(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

/// Parses and validates a configuration.
///
/// Unknown keys are errors when `strict` is set and warnings otherwise.
pub fn parse_config(text: &str, strict: bool) -> Result<Parsed, ConfigErrors> {
    let root: Table = match text.parse() {
        Ok(t) => t,
        Err(e) => {
            return Err(ConfigErrors {
                errors: vec![format!("not valid TOML: {e}")],
                warnings: Vec::new(),
            })
        }
    };
    let mut r = Reader {
        root: &root,
        strict,
        errors: Vec::new(),
        warnings: Vec::new(),
    };
    for key in root.keys() {
        if !SECTIONS.contains(&key.as_str()) {
            r.unknown(format!("unknown section [{key}]"));
        }
    }

    let exp = r.section("experiment", true);
    r.check_keys("experiment", exp, &["kind", "output"]);
    let kind = r.get(
        exp,
        "experiment",
        "kind",
        None,
        |v| v.as_str().and_then(|s| s.parse::<Kind>().ok()),
        "one of density, moments, local-limit, front, intermittency, mc-validate",
    );
    let output = r
        .get(
            exp,
            "experiment",
            "output",
            Some("bwalk-out".to_string()),
            |v| v.as_str().map(str::to_string),
            "a string",
        )
        .unwrap_or_default();

    let ker = r.section("kernel", true);
    r.check_keys("kernel", ker, &["d", "alpha", "profile", "radius"]);
    let d = r.uint(ker, "kernel", "d", None).map(|v| v as usize);
    let alpha = r.float(ker, "kernel", "alpha", None);
    let profile = r.get(
        ker,
        "kernel",
        "profile",
        Some(Profile::Constant(1.0)),
        |v| match v {
            Value::Array(a) => a
                .iter()
                .map(as_float)
                .collect::<Option<Vec<_>>>()
                .map(Profile::Table),
            other => as_float(other).map(Profile::Constant),
        },
        "a number or an array of numbers",
    );
    let radius = r.uint(ker, "kernel", "radius", Some(16));
    if let Some(d) = d {
        r.require(d == 1 || d == 2, || {
            format!("kernel.d must be 1 or 2, got {d}")
        });
    }
    if let Some(a) = alpha {
        r.require(a > 0.0 && a < 2.0, || {
            format!("kernel.alpha = {a} violates α ∈ (0,2)")
        });
    }
    if let Some(radius) = radius {
        r.require(radius >= 4 && radius <= u32::MAX as u64, || {
            format!("kernel.radius must be at least 4, got {radius}")
        });
    }
    if let (Some(p), Some(d)) = (&profile, d) {
        let check = match p {
            Profile::Constant(c) => AngularProfile::constant(d.clamp(1, 2), *c).map(|_| ()),
            Profile::Table(v) if d == 2 => AngularProfile::tabulated(v.clone()).map(|_| ()),
            Profile::Table(_) => Err(bwalk_core::Error::InvalidProfile(
                "a tabulated profile needs d = 2".into(),
            )),
        };
        if let Err(e) = check {
            r.errors.push(format!("kernel.profile: {e}"));
        }
    }

    let dynm = r.section("dynamics", true);
    r.check_keys("dynamics", dynm, &["nu", "times"]);
    let nu_default = match kind {
        Some(k) if k.needs_nu() => None,
        _ => Some(0.0),
    };
    let nu = r.float(dynm, "dynamics", "nu", nu_default);
    let times = r.floats(dynm, "dynamics", "times", None);
    if let Some(nu) = nu {
        r.require(nu >= 0.0 && nu.is_finite(), || {
            format!("dynamics.nu = {nu} must be ≥ 0 (rates are nonnegative)")
        });
    }
    if let Some(ts) = &times {
        r.require(!ts.is_empty(), || "dynamics.times is empty".into());
        r.require(ts.iter().all(|t| *t >= 0.0 && t.is_finite()), || {
            "dynamics.times must be finite and ≥ 0".into()
        });
        r.require(ts.windows(2).all(|w| w[0] < w[1]), || {
            "dynamics.times must be strictly increasing".into()
        });
    }

    let num = r.section("numerics", true);
    r.check_keys(
        "numerics",
        num,
        &[
            "m",
            "n_steps",
            "aliasing_limit",
            "richardson_limit",
            "strict",
            "binary",
        ],
    );
    let m = r.uint(num, "numerics", "m", None).map(|v| v as usize);
    let n_steps = r
        .uint(num, "numerics", "n_steps", Some(64))
        .map(|v| v as usize);
    let defaults = SolverOptions::default();
    let aliasing_limit = r.float(
        num,
        "numerics",
        "aliasing_limit",
        Some(defaults.aliasing_limit),
    );
    let richardson_limit = r.float(
        num,
        "numerics",
        "richardson_limit",
        Some(defaults.richardson_limit),
    );
    let num_strict = r.boolean(num, "numerics", "strict", false);
    let binary = r.boolean(num, "numerics", "binary", false);
    if let Some(m) = m {
        r.require(m.is_power_of_two() && m >= 8, || {
            format!("numerics.m must be a power of two ≥ 8, got {m}")
        });
    }
    if let Some(n) = n_steps {
        r.require(n >= 8 && n % 2 == 0, || {
            format!("numerics.n_steps must be even and ≥ 8, got {n}")
        });
    }

    let mc_needed = kind == Some(Kind::McValidate);
    let mc = r.section("mc", mc_needed);
    r.check_keys("mc", mc, &["replicas", "seed", "cap", "sites", "snapshots"]);
    let replicas = r
        .uint(mc, "mc", "replicas", (!mc_needed).then_some(10_000))
        .map(|v| v as usize);
    // the seed is mandatory whenever the section is used
    let seed = r.uint(mc, "mc", "seed", (!mc_needed && mc.is_none()).then_some(0));
    let cap = r.uint(mc, "mc", "cap", Some(1_000_000)).map(|v| v as usize);
    let sites = r
        .get(
            mc,
            "mc",
            "sites",
            Some(vec![0, 5, -5, 20, -20]),
            |v| v.as_array()?.iter().map(Value::as_integer).collect(),
            "an array of integers",
        )
        .unwrap_or_default();
    let snapshots = r.boolean(mc, "mc", "snapshots", false);
    if let Some(n) = replicas {
        if mc_needed {
            r.require(n >= 100, || format!("mc.replicas must be ≥ 100, got {n}"));
        }
    }
    if let Some(c) = cap {
        r.require(c > 0, || "mc.cap must be positive".into());
    }

    let ana = r.section("analysis", false);
    r.check_keys(
        "analysis",
        ana,
        &[
            "b",
            "eps",
            "threshold",
            "radii",
            "scaled_radii",
            "direction",
            "non_intermittent",
            "intermittent",
        ],
    );
    let rd = RadiiSpec::default();
    let th = RegimeThresholds::default();
    let b = r.float(ana, "analysis", "b", Some(rd.b));
    let eps = r.float(ana, "analysis", "eps", Some(rd.eps));
    let threshold = r.float(ana, "analysis", "threshold", Some(1.0));
    let radii = r.floats(ana, "analysis", "radii", Some(rd.absolute.clone()));
    let scaled_radii = r.floats(ana, "analysis", "scaled_radii", Some(Vec::new()));
    let direction = r.floats(ana, "analysis", "direction", Some(rd.direction.to_vec()));
    let non_int = r.float(
        ana,
        "analysis",
        "non_intermittent",
        Some(th.non_intermittent),
    );
    let int = r.float(ana, "analysis", "intermittent", Some(th.intermittent));
    for (key, v) in [("b", b), ("eps", eps), ("threshold", threshold)] {
        if let Some(v) = v {
            r.require(v > 0.0 && v.is_finite(), || {
                format!("analysis.{key} must be positive")
            });
        }
    }
    if let (Some(a), Some(b)) = (non_int, int) {
        r.require(a < b, || {
            "analysis.non_intermittent must be below analysis.intermittent".into()
        });
    }
    if let Some(dir) = &direction {
        r.require(
            dir.len() == 2 && dir.iter().all(|v| v.is_finite()) && dir[0].hypot(dir[1]) > 0.0,
            || "analysis.direction must be a nonzero pair [x, y]".into(),
        );
    }

    let chk = r.section("checks", false);
    let check_keys = [
        "enabled",
        "mass_tol",
        "tail",
        "tail_inner",
        "tail_outer",
        "tail_tol",
        "series_terms",
        "series_radius",
        "series_box",
        "series_tol",
        "local_k",
        "local_tol",
        "b0_tol",
        "front_slope_tol",
        "front_radius_tol",
        "front_radius_time",
        "z_max",
        "rho_band",
        "outside_slope_min",
    ];
    r.check_keys("checks", chk, &check_keys);
    let enabled = r.boolean(chk, "checks", "enabled", true);
    let tail = r.boolean(chk, "checks", "tail", false);
    let tol = |r: &mut Reader, key: &str, default: f64| -> f64 {
        let v = r
            .float(chk, "checks", key, Some(default))
            .unwrap_or(default);
        r.require(v > 0.0 && v.is_finite(), || {
            format!("checks.{key} must be positive")
        });
        v
    };
    let mass_tol = tol(&mut r, "mass_tol", 1e-8);
    let tail_inner = tol(&mut r, "tail_inner", 30.0);
    let tail_outer = tol(&mut r, "tail_outer", 0.125);
    let tail_tol = tol(&mut r, "tail_tol", 0.10);
    let series_tol = tol(&mut r, "series_tol", 1e-6);
    let local_k = tol(&mut r, "local_k", 3.0);
    let local_tol = tol(&mut r, "local_tol", 0.05);
    let b0_tol = tol(&mut r, "b0_tol", 0.03);
    let front_slope_tol = tol(&mut r, "front_slope_tol", 0.03);
    let front_radius_tol = tol(&mut r, "front_radius_tol", 0.15);
    let z_max = tol(&mut r, "z_max", 4.0);
    let rho_band = tol(&mut r, "rho_band", 2.0);
    let outside_slope_min = tol(&mut r, "outside_slope_min", 0.3);
    let front_radius_time = r
        .float(chk, "checks", "front_radius_time", Some(0.0))
        .unwrap_or(0.0);
    let series_terms = r.uint(chk, "checks", "series_terms", Some(0)).unwrap_or(0) as usize;
    let radius_default = if d == Some(2) { 10 } else { 50 };
    let series_radius = r
        .uint(chk, "checks", "series_radius", Some(radius_default))
        .unwrap_or(radius_default) as i64;
    let box_default = if d == Some(2) { 24 } else { 1024 };
    let series_box = r
        .uint(chk, "checks", "series_box", Some(box_default))
        .unwrap_or(box_default) as usize;
    r.require(
        series_terms == 0 || series_box as i64 >= series_radius,
        || "checks.series_box must be at least checks.series_radius".into(),
    );
    if let (Some(ts), true) = (&times, series_terms > 0) {
        r.require(ts.iter().all(|t| *t < series_terms as f64 + 2.0), || {
            format!(
                "the series check needs every time below checks.series_terms + 2 = {}",
                series_terms + 2
            )
        });
    }
    r.require(tail_outer <= 0.5, || {
        "checks.tail_outer is a fraction of M and must be ≤ 0.5".into()
    });
    if let Some(ts) = &times {
        if front_radius_time != 0.0 && kind == Some(Kind::Front) {
            r.require(ts.contains(&front_radius_time), || {
                format!(
                    "checks.front_radius_time = {front_radius_time} is not one of dynamics.times"
                )
            });
        }
    }

    // cross-section rules
    if let (Some(m), Some(radius)) = (m, radius) {
        r.require(m as u64 >= 2 * radius + 2, || {
            format!(
                "numerics.m = {m} is below 2·kernel.radius + 2 = {}",
                2 * radius + 2
            )
        });
    }
    if let (Some(k), Some(ts)) = (kind, &times) {
        let need = match k {
            Kind::Intermittency => 3,
            Kind::Front => 2,
            _ => 1,
        };
        r.require(ts.len() >= need, || {
            format!("{k} needs at least {need} entries in dynamics.times")
        });
    }
    if !r.errors.is_empty() {
        return Err(ConfigErrors {
            errors: r.errors,
            warnings: r.warnings,
        });
    }
    let config = ExperimentConfig {
        experiment: ExperimentSection {
            kind: kind.unwrap(),
            output,
        },
        kernel: KernelSection {
            d: d.unwrap(),
            alpha: alpha.unwrap(),
            profile: profile.unwrap(),
            radius: radius.unwrap() as u32,
        },
        dynamics: DynamicsSection {
            nu: nu.unwrap(),
            times: times.unwrap(),
        },
        numerics: NumericsSection {
            m: m.unwrap(),
            n_steps: n_steps.unwrap(),
            aliasing_limit: aliasing_limit.unwrap(),
            richardson_limit: richardson_limit.unwrap(),
            strict: num_strict,
            binary,
        },
        mc: McSection {
            replicas: replicas.unwrap(),
            seed: seed.unwrap(),
            cap: cap.unwrap(),
            sites,
            snapshots,
        },
        analysis: AnalysisSection {
            b: b.unwrap(),
            eps: eps.unwrap(),
            threshold: threshold.unwrap(),
            radii: radii.unwrap(),
            scaled_radii: scaled_radii.unwrap(),
            direction: direction.unwrap(),
            non_intermittent: non_int.unwrap(),
            intermittent: int.unwrap(),
        },
        checks: ChecksSection {
            enabled,
            mass_tol,
            tail,
            tail_inner,
            tail_outer,
            tail_tol,
            series_terms,
            series_radius,
            series_box,
            series_tol,
            local_k,
            local_tol,
            b0_tol,
            front_slope_tol,
            front_radius_tol,
            front_radius_time,
            z_max,
            rho_band,
            outside_slope_min,
        },
    };
    Ok(Parsed {
        config,
        warnings: r.warnings,
    })
}

impl ExperimentConfig {
    /// Canonical TOML with every default filled in; parsing it back gives
    /// the same configuration and the same text.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn profile(&self) -> bwalk_core::Result<AngularProfile> {
        match &self.kernel.profile {
            Profile::Constant(c) => AngularProfile::constant(self.kernel.d, *c),
            Profile::Table(v) => AngularProfile::tabulated(v.clone()),
        }
    }

    pub fn solver_options(&self, strict_flag: bool) -> SolverOptions {
        SolverOptions {
            strict: self.numerics.strict || strict_flag,
            aliasing_limit: self.numerics.aliasing_limit,
            richardson_limit: self.numerics.richardson_limit,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        let mut s = SimConfig::new(
            self.dynamics.nu,
            self.dynamics.times.clone(),
            self.mc.replicas,
            self.mc.seed,
        );
        s.particle_cap = self.mc.cap;
        s
    }

    pub fn radii(&self) -> RadiiSpec {
        RadiiSpec {
            absolute: self.analysis.radii.clone(),
            scaled: self.analysis.scaled_radii.clone(),
            b: self.analysis.b,
            eps: self.analysis.eps,
            direction: [self.analysis.direction[0], self.analysis.direction[1]],
        }
    }

    pub fn thresholds(&self) -> RegimeThresholds {
        RegimeThresholds {
            non_intermittent: self.analysis.non_intermittent,
            intermittent: self.analysis.intermittent,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[experiment]
kind = "density"

[kernel]
d = 1
alpha = 1.0

[dynamics]
times = [2.0]

[numerics]
m = 4096
"#;

    #[test]
    fn minimal_density_round_trips() {
        let p = parse_config(MINIMAL, true).unwrap();
        assert!(p.warnings.is_empty());
        let c = p.config;
        assert_eq!(c.experiment.kind, Kind::Density);
        assert_eq!(c.kernel.radius, 16);
        assert_eq!(c.dynamics.nu, 0.0);
        assert_eq!(c.numerics.n_steps, 64);
        let echo = c.echo();
        let again = parse_config(&echo, true).unwrap().config;
        assert_eq!(again, c);
        assert_eq!(again.echo(), echo);
    }

    #[test]
    fn every_violation_is_reported() {
        let text = r#"
[experiment]
kind = "moments"

[kernel]
d = 3
alpha = 2.5

[dynamics]
nu = -1.0
times = [2.0, 1.0]

[numerics]
m = 1000
"#;
        let e = parse_config(text, false).unwrap_err();
        let all = e.errors.join("\n");
        assert!(all.contains("α ∈ (0,2)"), "{all}");
        assert!(all.contains("kernel.d"));
        assert!(all.contains("dynamics.nu"));
        assert!(all.contains("strictly increasing"));
        assert!(all.contains("numerics.m"));
        assert!(e.errors.len() >= 5);
    }

    #[test]
    fn missing_keys_are_named() {
        let text = "[experiment]\nkind = \"front\"\n[kernel]\nd = 1\n[dynamics]\ntimes = [1.0, 2.0]\n[numerics]\nm = 64\n";
        let e = parse_config(text, false).unwrap_err();
        assert!(e
            .errors
            .iter()
            .any(|s| s == "missing mandatory key kernel.alpha"));
        assert!(e
            .errors
            .iter()
            .any(|s| s == "missing mandatory key dynamics.nu"));
    }

    #[test]
    fn unknown_keys_depend_on_strictness() {
        let text = format!("{MINIMAL}\n[checks]\nmass_tolerance = 1e-9\n");
        let lenient = parse_config(&text, false).unwrap();
        assert_eq!(lenient.warnings, ["unknown key checks.mass_tolerance"]);
        let strict = parse_config(&text, true).unwrap_err();
        assert_eq!(strict.errors, ["unknown key checks.mass_tolerance"]);
    }

    #[test]
    fn mc_needs_a_seed() {
        let text = MINIMAL
            .replace("density", "mc-validate")
            .replace("[numerics]", "[mc]\nreplicas = 200\n[numerics]");
        let text = text.replace("times = [2.0]", "nu = 0.5\ntimes = [2.0]");
        let e = parse_config(&text, true).unwrap_err();
        assert_eq!(e.errors, ["missing mandatory key mc.seed"]);
    }

    #[test]
    fn tabulated_profiles_need_two_dimensions() {
        let text = MINIMAL.replace("alpha = 1.0", "alpha = 1.0\nprofile = [1.0, 2.0]");
        assert!(parse_config(&text, true).is_err());
        let text = MINIMAL
            .replace("d = 1", "d = 2")
            .replace("alpha = 1.0", "alpha = 1.0\nprofile = [1.0, 2.0, 1.0, 2.0]")
            .replace("4096", "64");
        let c = parse_config(&text, true).unwrap().config;
        assert_eq!(c.kernel.profile, Profile::Table(vec![1.0, 2.0, 1.0, 2.0]));
        assert_eq!(parse_config(&c.echo(), true).unwrap().config, c);
    }
}
