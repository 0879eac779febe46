//! Front extraction and the intermittency ratio `m₂/m₁²`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::ScalarField;
use crate::kernel::{JumpKernel, Site};

/// Phase-boundary exponent `γ = (2α + d) / (α(α + d))`.
pub fn gamma(alpha: f64, dim: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid("alpha", format!("α ∈ (0,2) required, got {alpha}")));
    }
    if dim == 0 {
        return Err(invalid("dim", "d ≥ 1 required"));
    }
    let d = dim as f64;
    Ok((2.0 * alpha + d) / (alpha * (alpha + d)))
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need two points for a line");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Lattice points `round(r·u)`, `r = 0, 1, …`, while they stay in the window.
fn ray(field: &ScalarField, direction: [f64; 2]) -> Result<Vec<(Site, usize)>> {
    let grid = field.grid();
    let norm = direction[0].hypot(direction[1]);
    if !(norm > 0.0) {
        return Err(invalid("direction", "must be a nonzero vector"));
    }
    let u = [direction[0] / norm, direction[1] / norm];
    if grid.dim() == 1 && u[1] != 0.0 {
        return Err(invalid("direction", "one-dimensional rays are ±1"));
    }
    let mut out = Vec::new();
    for r in 0.. {
        let site = [
            (r as f64 * u[0]).round() as i64,
            (r as f64 * u[1]).round() as i64,
        ];
        match grid.index(site) {
            Some(i) => out.push((site, i)),
            None => break,
        }
    }
    Ok(out)
}

/// Outermost level crossing along a ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontCrossing {
    pub time: f64,
    /// Largest ray step `r` with `m₁ ≥ threshold` at `r` and `< threshold` at `r+1`.
    pub radius: u64,
    pub site: Site,
    /// Log-linear interpolation of the crossing between `r` and `r+1`.
    pub refined: f64,
}

pub fn front_radius(
    field: &ScalarField,
    direction: [f64; 2],
    threshold: f64,
) -> Result<FrontCrossing> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(invalid(
            "threshold",
            format!("must be positive, got {threshold}"),
        ));
    }
    let points = ray(field, direction)?;
    let last = points
        .iter()
        .rposition(|(_, i)| field.at_least(*i, threshold))
        .ok_or_else(|| {
            Error::NotFound(format!(
                "field stays below {threshold} along the ray at t = {}",
                field.time()
            ))
        })?;
    if last + 1 == points.len() {
        return Err(Error::NotFound(format!(
            "field exceeds {threshold} at the window edge at t = {}; enlarge M",
            field.time()
        )));
    }
    let m = field.mantissa();
    let (site, i) = points[last];
    let (_, j) = points[last + 1];
    let above = m[i].ln() + field.exponent() - threshold.ln();
    let refined = last as f64 + above / (m[i] / m[j]).ln();
    Ok(FrontCrossing {
        time: field.time(),
        radius: last as u64,
        site,
        refined,
    })
}

/// `[C a₀(u) t]^{1/(d+α)} e^{νt/(d+α)}`.
pub fn predicted_front_radius(kernel: &JumpKernel, nu: f64, t: f64, direction: [f64; 2]) -> f64 {
    let dpa = kernel.dim() as f64 + kernel.alpha();
    (kernel.tail_coefficient(direction) * t).powf(1.0 / dpa) * (nu * t / dpa).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontReport {
    pub direction: [f64; 2],
    pub crossings: Vec<FrontCrossing>,
    pub predicted: Vec<f64>,
    /// Slope of `ln r_F` against `t`.
    pub raw_slope: f64,
    /// Slope of `ln r_F − ln(C a₀ t)/(d+α)` against `t`: the exponential rate.
    pub exponential_rate: f64,
    pub target_rate: f64,
    /// Residuals of the exponential-rate fit.
    pub residuals: Vec<f64>,
}

/// Fits the front law to crossings at several times (refined radii).
pub fn fit_front(
    kernel: &JumpKernel,
    nu: f64,
    direction: [f64; 2],
    crossings: Vec<FrontCrossing>,
) -> Result<FrontReport> {
    if crossings.len() < 2 {
        return Err(invalid("times", "front fit needs at least two times"));
    }
    let dpa = kernel.dim() as f64 + kernel.alpha();
    let c = kernel.tail_coefficient(direction);
    let ts: Vec<f64> = crossings.iter().map(|c| c.time).collect();
    let ln_r: Vec<f64> = crossings.iter().map(|c| c.refined.ln()).collect();
    let (raw_slope, _) = linear_fit(&ts, &ln_r);
    let reduced: Vec<f64> = ts
        .iter()
        .zip(&ln_r)
        .map(|(t, l)| l - (c * t).ln() / dpa)
        .collect();
    let (rate, icept) = linear_fit(&ts, &reduced);
    let residuals = ts
        .iter()
        .zip(&reduced)
        .map(|(t, y)| y - (rate * t + icept))
        .collect();
    Ok(FrontReport {
        direction,
        predicted: ts
            .iter()
            .map(|t| predicted_front_radius(kernel, nu, *t, direction))
            .collect(),
        crossings,
        raw_slope,
        exponential_rate: rate,
        target_rate: nu / dpa,
        residuals,
    })
}

/// Which radii to probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiiSpec {
    /// Absolute radii.
    pub absolute: Vec<f64>,
    /// Exponents `u` giving radii `t^u`.
    pub scaled: Vec<f64>,
    /// Inner canonical probe `B·t^γ`.
    pub b: f64,
    /// Outer canonical probe `t^{γ+ε}`.
    pub eps: f64,
    pub direction: [f64; 2],
}

impl Default for RadiiSpec {
    fn default() -> Self {
        Self {
            absolute: vec![0.0],
            scaled: Vec::new(),
            b: 1.0,
            eps: 0.25,
            direction: [1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    /// Stable name of the probe across times, used for classification.
    pub label: String,
    pub requested_radius: f64,
    pub site: Site,
    /// `ln r / ln t` at the probed site (`None` at the origin).
    pub scaled_coordinate: Option<f64>,
    pub rho: Option<f64>,
    pub ln_rho: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntermittencyProfile {
    pub time: f64,
    pub gamma: f64,
    pub points: Vec<ProbePoint>,
}

/// Below this `m₁²` a radius is skipped.
const M1_SQUARED_FLOOR: f64 = 1e-280;

/// `ρ(t, r) = m₂/m₁²` along a ray, in log space.
pub fn intermittency_scan(
    m1: &ScalarField,
    m2: &ScalarField,
    t: f64,
    gamma: f64,
    radii: &RadiiSpec,
) -> Result<IntermittencyProfile> {
    if m1.grid() != m2.grid() {
        return Err(invalid("m2", "fields live on different grids"));
    }
    if (m1.time() - t).abs() > 1e-12 * t.max(1.0) || (m2.time() - t).abs() > 1e-12 * t.max(1.0) {
        return Err(invalid("t", "fields are not at the requested time"));
    }
    let grid = m1.grid();
    let norm = radii.direction[0].hypot(radii.direction[1]);
    let u = [radii.direction[0] / norm, radii.direction[1] / norm];
    let mut requests: Vec<(String, f64)> = Vec::new();
    for r in &radii.absolute {
        requests.push((format!("r={r}"), *r));
    }
    for e in &radii.scaled {
        requests.push((format!("t^{e}"), t.powf(*e)));
    }
    requests.push((format!("{}*t^gamma", radii.b), radii.b * t.powf(gamma)));
    requests.push((
        format!("t^(gamma+{})", radii.eps),
        t.powf(gamma + radii.eps),
    ));
    let floor = M1_SQUARED_FLOOR.ln();
    let points = requests
        .into_iter()
        .map(|(label, r)| {
            let site = [(r * u[0]).round() as i64, (r * u[1]).round() as i64];
            let dist = (site[0] as f64).hypot(site[1] as f64);
            let scaled_coordinate = (dist > 0.0 && t != 1.0).then(|| dist.ln() / t.ln());
            let mut p = ProbePoint {
                label,
                requested_radius: r,
                site,
                scaled_coordinate,
                rho: None,
                ln_rho: None,
                skipped: None,
            };
            match grid.index(site) {
                None => p.skipped = Some("outside window".into()),
                Some(i) => {
                    let l1 = m1.ln_abs(i);
                    if 2.0 * l1 < floor {
                        p.skipped = Some("m1 squared below 1e-280".into());
                    } else {
                        let l = m2.ln_abs(i) - 2.0 * l1;
                        p.ln_rho = Some(l);
                        p.rho = Some(l.exp());
                    }
                }
            }
            p
        })
        .collect();
    Ok(IntermittencyProfile {
        time: t,
        gamma,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    NonIntermittent,
    Transition,
    Intermittent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    /// Growth exponents at or below this are non-intermittent.
    pub non_intermittent: f64,
    /// Growth exponents at or above this are intermittent.
    pub intermittent: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            non_intermittent: 0.05,
            intermittent: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeLabel {
    pub label: String,
    /// Slope of `ln ρ` against `ln t`.
    pub growth_exponent: f64,
    pub regime: Regime,
    pub times_used: usize,
}

/// Labels each probe by the growth exponent of `ρ` in `t`.
pub fn regime_classify(
    profiles: &[IntermittencyProfile],
    thresholds: RegimeThresholds,
) -> Result<Vec<RegimeLabel>> {
    let mut times: Vec<f64> = profiles.iter().map(|p| p.time).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    if times.len() < 3 {
        return Err(invalid(
            "profiles",
            format!(
                "classification needs ≥ 3 distinct times, got {}",
                times.len()
            ),
        ));
    }
    if !(thresholds.non_intermittent < thresholds.intermittent) {
        return Err(invalid(
            "thresholds",
            "non-intermittent bound must be below intermittent",
        ));
    }
    let mut labels: Vec<String> = Vec::new();
    for p in profiles {
        for q in &p.points {
            if !labels.contains(&q.label) {
                labels.push(q.label.clone());
            }
        }
    }
    let mut out = Vec::new();
    for label in labels {
        let (xs, ys): (Vec<f64>, Vec<f64>) = profiles
            .iter()
            .filter_map(|p| {
                p.points
                    .iter()
                    .find(|q| q.label == label)
                    .and_then(|q| q.ln_rho)
                    .map(|l| (p.time.ln(), l))
            })
            .unzip();
        if xs.len() < 3 {
            continue;
        }
        let (slope, _) = linear_fit(&xs, &ys);
        let regime = if slope <= thresholds.non_intermittent {
            Regime::NonIntermittent
        } else if slope >= thresholds.intermittent {
            Regime::Intermittent
        } else {
            Regime::Transition
        };
        out.push(RegimeLabel {
            label,
            growth_exponent: slope,
            regime,
            times_used: xs.len(),
        });
    }
    Ok(out)
}
