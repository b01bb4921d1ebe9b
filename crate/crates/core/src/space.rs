//! Ambient warped cylinders `M = [a, ∞) × Sⁿ`, metric `dr² + φ²(r) g_{Sⁿ}`.
//!
//! Built-in warps: Euclidean (φ = r), hyperbolic (φ = sinh r) and the
//! deSitter-Schwarzschild family defined by (φ′)² = 1 − m φ^{1−n} + κ φ²
//! with φ(0) = s₀, the positive root of 1 − m s^{1−n} + κ s² = 0.
//! Custom warps are loaded from sampled tables with derivative columns.
//!
//! For the deSitter-Schwarzschild family, φ(r) is stored as a dense
//! monotone tabulation built by integrating r(s) = ∫ dσ/√(1 − mσ^{1−n} + κσ²)
//! under the substitution σ = s₀(1 + ζ²), which removes the inverse
//! square-root singularity at the horizon. Derivatives are always
//! reported from the closed forms, never by differentiating the
//! interpolant.

use crate::error::Error;
use crate::numerics::{interp, quad, roots, unit_sphere_area};
use crate::Result;

/// Warp function and its first three derivatives at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpPoint {
    pub phi: f64,
    pub dphi: f64,
    pub d2phi: f64,
    pub d3phi: f64,
}

/// Ricci curvature of the ambient metric, split as
/// `Ric = radial · dr² + tangential · g_{Sⁿ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicciPair {
    pub radial: f64,
    pub tangential: f64,
}

/// Margins and sampled diagnostics for the admissibility conditions
/// (i) φ″ ≥ κφ, (ii) 0 < φ′ ≤ √(1 + κφ²), (iii) ∂_r(φ″/φ) ≤ 0.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub a: f64,
    pub r_max: f64,
    pub samples: usize,
    /// min over the grid of (φ″ − κφ)/(1 + κφ), scale-normalized so the
    /// sign survives rounding when φ is astronomically large.
    pub margin_convexity: f64,
    /// min over the grid of min(φ′, (1 + κφ² − (φ′)²)/(1 + κφ²)).
    pub margin_gradient: f64,
    /// min over the grid of −∂_r(φ″/φ).
    pub margin_ricci_monotone: f64,
    pub pass_convexity: bool,
    pub pass_gradient: bool,
    pub pass_ricci_monotone: bool,
    pub pass: bool,
    /// Q₁ = (φ′)²/(1 + κφ²), sampled on the grid (expected nondecreasing, ≤ 1).
    pub q1: Vec<f64>,
    /// Q₂ = 1 + κφ² − (φ′)², sampled (expected nonincreasing).
    pub q2: Vec<f64>,
    /// Q₃ = 1 − (φ′)² + φφ″, sampled (expected nonincreasing).
    pub q3: Vec<f64>,
    pub q1_monotone_violations: usize,
    pub q2_monotone_violations: usize,
    pub q3_monotone_violations: usize,
}

/// Condition margins must exceed this (slightly negative) floor to pass.
pub const ASSUMPTION_MARGIN_FLOOR: f64 = -1e-10;

/// Sampled warp table for custom spaces: radii with φ and three
/// derivative columns.
#[derive(Debug, Clone)]
pub struct SampledWarp {
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub d2phi: Vec<f64>,
    pub d3phi: Vec<f64>,
}

impl SampledWarp {
    pub fn validate(&self) -> Result<()> {
        let k = self.r.len();
        if k < 4 {
            return Err(Error::construction("custom warp table needs at least 4 rows"));
        }
        if [&self.phi, &self.dphi, &self.d2phi, &self.d3phi]
            .iter()
            .any(|c| c.len() != k)
        {
            return Err(Error::construction("custom warp table has ragged columns"));
        }
        if !self.r.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::construction("custom warp table radii must increase"));
        }
        Ok(())
    }

    /// Parse CSV with header `r,phi,dphi,d2phi,d3phi`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::parse("empty warp table"))?;
        if header.trim() != "r,phi,dphi,d2phi,d3phi" {
            return Err(Error::parse(format!(
                "warp table header must be `r,phi,dphi,d2phi,d3phi`, got `{}`",
                header.trim()
            )));
        }
        let mut cols: [Vec<f64>; 5] = Default::default();
        for (ln, line) in lines.enumerate() {
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != 5 {
                return Err(Error::parse(format!("warp table line {}: need 5 fields", ln + 2)));
            }
            for (c, fstr) in cols.iter_mut().zip(&fields) {
                let v: f64 = fstr.trim().parse().map_err(|_| {
                    Error::parse(format!("warp table line {}: bad number `{fstr}`", ln + 2))
                })?;
                c.push(v);
            }
        }
        let [r, phi, dphi, d2phi, d3phi] = cols;
        let w = SampledWarp { r, phi, dphi, d2phi, d3phi };
        w.validate()?;
        Ok(w)
    }
}

#[derive(Debug, Clone)]
enum Warp {
    Euclidean,
    Hyperbolic,
    DsSchwarzschild { m: f64, s0: f64, table: UniformTable },
    Custom { label: String, table: SampledWarp },
}

/// φ sampled on the uniform grid r_k = k·h together with the
/// closed-form first and second derivatives at the nodes.
#[derive(Debug, Clone)]
struct UniformTable {
    h: f64,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    d2phi: Vec<f64>,
}

/// Rotationally symmetric ambient space. Immutable once constructed;
/// evaluation is pure and safe to share across threads.
#[derive(Debug, Clone)]
pub struct WarpedSpace {
    n: u32,
    a: f64,
    kappa: f64,
    omega_n: f64,
    omega_nm1: f64,
    r_max: f64,
    warp: Warp,
}

impl WarpedSpace {
    pub fn euclidean(n: u32) -> Result<Self> {
        Self::check_dim(n)?;
        Ok(WarpedSpace {
            n,
            a: 0.0,
            kappa: 0.0,
            omega_n: unit_sphere_area(n),
            omega_nm1: unit_sphere_area(n - 1),
            r_max: 1e6,
            warp: Warp::Euclidean,
        })
    }

    pub fn hyperbolic(n: u32) -> Result<Self> {
        Self::check_dim(n)?;
        Ok(WarpedSpace {
            n,
            a: 0.0,
            kappa: 1.0,
            omega_n: unit_sphere_area(n),
            omega_nm1: unit_sphere_area(n - 1),
            // sinh(r)^n must stay below f64 overflow
            r_max: 320.0 / n as f64,
            warp: Warp::Hyperbolic,
        })
    }

    /// deSitter-Schwarzschild: κ = 0 is Schwarzschild, κ = 1 is
    /// AdS-Schwarzschild.
    pub fn ds_schwarzschild(n: u32, m: f64, kappa: f64) -> Result<Self> {
        Self::check_dim(n)?;
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::construction(format!("mass must be positive, got {m}")));
        }
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::construction(format!("kappa must be >= 0, got {kappa}")));
        }
        let s0 = ds_horizon_warp(n, m, kappa)?;
        let r_max = 100.0 * s0.max(1.0);
        let table = build_ds_table(n, m, kappa, s0, r_max)?;
        Ok(WarpedSpace {
            n,
            a: 0.0,
            kappa,
            omega_n: unit_sphere_area(n),
            omega_nm1: unit_sphere_area(n - 1),
            r_max,
            warp: Warp::DsSchwarzschild { m, s0, table },
        })
    }

    pub fn custom(n: u32, kappa: f64, table: SampledWarp, label: impl Into<String>) -> Result<Self> {
        Self::check_dim(n)?;
        if !(kappa >= 0.0) {
            return Err(Error::construction("kappa must be >= 0"));
        }
        table.validate()?;
        Ok(WarpedSpace {
            n,
            a: table.r[0],
            kappa,
            omega_n: unit_sphere_area(n),
            omega_nm1: unit_sphere_area(n - 1),
            r_max: *table.r.last().unwrap(),
            warp: Warp::Custom { label: label.into(), table },
        })
    }

    fn check_dim(n: u32) -> Result<()> {
        if n < 2 {
            return Err(Error::construction(format!("sphere dimension must be >= 2, got {n}")));
        }
        Ok(())
    }

    /// Parse a space spec string:
    /// `euclidean:n=2`, `hyperbolic:n=2`, `dss:n=2,m=2,kappa=0`,
    /// `custom:file=<path>[,n=2][,kappa=0]`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let params = parse_kv(rest)?;
        let get = |key: &str| -> Result<f64> {
            params
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| {
                    v.parse::<f64>()
                        .map_err(|_| Error::parse(format!("bad number for `{key}` in `{spec}`")))
                })
                .transpose()?
                .ok_or_else(|| Error::parse(format!("space spec `{spec}` is missing `{key}`")))
        };
        let get_or = |key: &str, default: f64| -> Result<f64> {
            match params.iter().find(|(k, _)| k == key) {
                Some((_, v)) => v
                    .parse::<f64>()
                    .map_err(|_| Error::parse(format!("bad number for `{key}` in `{spec}`"))),
                None => Ok(default),
            }
        };
        let dim = |v: f64| -> Result<u32> {
            if v.fract() != 0.0 || v < 2.0 || v > 64.0 {
                return Err(Error::parse(format!("n must be an integer >= 2, got {v}")));
            }
            Ok(v as u32)
        };
        match kind {
            "euclidean" => Self::euclidean(dim(get("n")?)?),
            "hyperbolic" => Self::hyperbolic(dim(get("n")?)?),
            "dss" | "ds_schwarzschild" => {
                Self::ds_schwarzschild(dim(get("n")?)?, get("m")?, get("kappa")?)
            }
            "custom" => {
                let path = params
                    .iter()
                    .find(|(k, _)| k == "file")
                    .map(|(_, v)| v.clone())
                    .ok_or_else(|| Error::parse("custom space needs file=<path>"))?;
                let text = std::fs::read_to_string(&path)?;
                let table = SampledWarp::from_csv(&text)?;
                Self::custom(dim(get_or("n", 2.0)?)?, get_or("kappa", 0.0)?, table, path)
            }
            other => Err(Error::parse(format!("unknown space kind `{other}`"))),
        }
    }

    /// Canonical spec string, suitable for round-tripping through
    /// run metadata.
    pub fn spec_string(&self) -> String {
        match &self.warp {
            Warp::Euclidean => format!("euclidean:n={}", self.n),
            Warp::Hyperbolic => format!("hyperbolic:n={}", self.n),
            Warp::DsSchwarzschild { m, .. } => {
                format!("dss:n={},m={},kappa={}", self.n, m, self.kappa)
            }
            Warp::Custom { label, .. } => {
                format!("custom:file={label},n={},kappa={}", self.n, self.kappa)
            }
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    /// Area of the unit n-sphere.
    pub fn omega_n(&self) -> f64 {
        self.omega_n
    }
    /// Area of the unit (n−1)-sphere, the rotational fibre of the
    /// axisymmetric reduction.
    pub fn omega_nm1(&self) -> f64 {
        self.omega_nm1
    }
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    pub fn is_space_form(&self) -> bool {
        matches!(self.warp, Warp::Euclidean | Warp::Hyperbolic)
    }
    /// Warp value at the horizon slice r = a (0 for space forms).
    pub fn horizon_warp(&self) -> f64 {
        match &self.warp {
            Warp::Euclidean | Warp::Hyperbolic => 0.0,
            Warp::DsSchwarzschild { s0, .. } => *s0,
            Warp::Custom { table, .. } => table.phi[0],
        }
    }
    /// Area of the horizon slice, ω_n φ(a)ⁿ.
    pub fn horizon_area(&self) -> f64 {
        self.omega_n * self.horizon_warp().powi(self.n as i32)
    }

    /// φ and its first three derivatives at radius r.
    pub fn eval(&self, r: f64) -> Result<WarpPoint> {
        if !(r >= self.a - 1e-12 * (1.0 + self.a)) || r > self.r_max * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "radius {r} outside [{}, {}] for space `{}`",
                self.a,
                self.r_max,
                self.spec_string()
            )));
        }
        let r = r.clamp(self.a, self.r_max);
        Ok(match &self.warp {
            Warp::Euclidean => WarpPoint { phi: r, dphi: 1.0, d2phi: 0.0, d3phi: 0.0 },
            Warp::Hyperbolic => {
                let (s, c) = (r.sinh(), r.cosh());
                WarpPoint { phi: s, dphi: c, d2phi: s, d3phi: c }
            }
            Warp::DsSchwarzschild { m, table, .. } => {
                let phi = table.eval_phi(r);
                let f = ds_f(self.n, *m, self.kappa, phi).max(0.0);
                let dphi = f.sqrt();
                WarpPoint {
                    phi,
                    dphi,
                    d2phi: 0.5 * ds_df(self.n, *m, self.kappa, phi),
                    d3phi: 0.5 * ds_d2f(self.n, *m, self.kappa, phi) * dphi,
                }
            }
            Warp::Custom { table, .. } => eval_sampled(table, r),
        })
    }

    /// Inverse of the warp: radius with φ(r) = value.
    pub fn radius_of_warp(&self, value: f64) -> Result<f64> {
        match &self.warp {
            Warp::Euclidean => {
                if !(0.0..=self.r_max).contains(&value) {
                    return Err(Error::domain(format!("warp value {value} out of range")));
                }
                Ok(value)
            }
            Warp::Hyperbolic => {
                if value < 0.0 {
                    return Err(Error::domain(format!("warp value {value} out of range")));
                }
                let r = value.asinh();
                if r > self.r_max {
                    return Err(Error::domain(format!("warp value {value} out of range")));
                }
                Ok(r)
            }
            Warp::DsSchwarzschild { table, .. } => {
                let phi = &table.phi;
                if value < phi[0] || value > *phi.last().unwrap() {
                    return Err(Error::domain(format!("warp value {value} out of range")));
                }
                let j = phi.partition_point(|&p| p <= value).saturating_sub(1);
                let j = j.min(phi.len() - 2);
                let frac = (value - phi[j]) / (phi[j + 1] - phi[j]);
                let guess = table.h * (j as f64 + frac);
                let r = roots::newton_polish(
                    |r| self.eval(r).map(|w| w.phi - value).unwrap_or(f64::NAN),
                    |r| self.eval(r).map(|w| w.dphi).unwrap_or(f64::NAN),
                    guess,
                    12,
                );
                Ok(r.clamp(self.a, self.r_max))
            }
            Warp::Custom { table, .. } => {
                let phi = &table.phi;
                if value < phi[0] || value > *phi.last().unwrap() {
                    return Err(Error::domain(format!("warp value {value} out of range")));
                }
                let j = phi.partition_point(|&p| p <= value).saturating_sub(1);
                let j = j.min(phi.len() - 2);
                let frac = (value - phi[j]) / (phi[j + 1] - phi[j]);
                let guess = table.r[j] + frac * (table.r[j + 1] - table.r[j]);
                Ok(roots::newton_polish(
                    |r| self.eval(r).map(|w| w.phi - value).unwrap_or(f64::NAN),
                    |r| self.eval(r).map(|w| w.dphi).unwrap_or(f64::NAN),
                    guess,
                    12,
                )
                .clamp(self.a, self.r_max))
            }
        }
    }

    /// Ambient Ricci curvature at radius r (strictly outside the horizon).
    pub fn ricci(&self, r: f64) -> Result<RicciPair> {
        let w = self.eval(r)?;
        if w.phi <= 0.0 {
            return Err(Error::domain(format!("ricci undefined at degenerate radius {r}")));
        }
        let n = self.n as f64;
        Ok(RicciPair {
            radial: -n * w.d2phi / w.phi,
            tangential: -((n - 1.0) * (w.dphi * w.dphi - 1.0) + w.phi * w.d2phi),
        })
    }

    /// Ric(∂_r, ∂_r) − Ric(ν, ν) for a hypersurface with support
    /// function u at a point of radius r:
    /// (n−1)((φ′)² − φφ″ − 1)/φ² · (1 − u²/φ²). Nonpositive on spaces
    /// passing the admissibility conditions.
    pub fn ricci_gap(&self, r: f64, u: f64) -> Result<f64> {
        let w = self.eval(r)?;
        if w.phi <= 0.0 {
            return Err(Error::domain(format!("ricci gap undefined at degenerate radius {r}")));
        }
        if !(u > 0.0) || u > w.phi * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "support function u = {u} must lie in (0, φ = {}]",
                w.phi
            )));
        }
        let n = self.n as f64;
        let coeff = (n - 1.0) * (w.dphi * w.dphi - w.phi * w.d2phi - 1.0) / (w.phi * w.phi);
        Ok(coeff * (1.0 - (u * u) / (w.phi * w.phi)))
    }

    /// Check the admissibility conditions on a uniform grid over
    /// (a, r_max]; also reports monotonicity diagnostics for the
    /// derived quantities Q₁, Q₂, Q₃.
    pub fn validate_assumptions(&self, r_max: f64, samples: usize) -> Result<AssumptionReport> {
        if samples < 2 {
            return Err(Error::domain("need at least 2 samples"));
        }
        if !(r_max > self.a) || r_max > self.r_max * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "r_max {r_max} outside ({}, {}]",
                self.a, self.r_max
            )));
        }
        let step = (r_max - self.a) / samples as f64;
        let mut margin_i = f64::INFINITY;
        let mut margin_ii = f64::INFINITY;
        let mut margin_iii = f64::INFINITY;
        let mut q1 = Vec::with_capacity(samples);
        let mut q2 = Vec::with_capacity(samples);
        let mut q3 = Vec::with_capacity(samples);
        // Local magnitude of the terms entering Q₂/Q₃; differences below
        // rounding at this scale carry no sign information.
        let mut qscale = Vec::with_capacity(samples);
        for i in 0..samples {
            let r = self.a + step * (i + 1) as f64;
            let w = self.eval(r.min(r_max))?;
            let phi2 = w.phi * w.phi;
            margin_i = margin_i.min((w.d2phi - self.kappa * w.phi) / (1.0 + self.kappa * w.phi));
            margin_ii = margin_ii
                .min(w.dphi)
                .min((1.0 + self.kappa * phi2 - w.dphi * w.dphi) / (1.0 + self.kappa * phi2));
            // −∂_r(φ″/φ) = −(φ‴φ − φ″φ′)/φ²
            margin_iii = margin_iii.min(-(w.d3phi * w.phi - w.d2phi * w.dphi) / phi2);
            q1.push(w.dphi * w.dphi / (1.0 + self.kappa * phi2));
            q2.push(1.0 + self.kappa * phi2 - w.dphi * w.dphi);
            q3.push(1.0 - w.dphi * w.dphi + w.phi * w.d2phi);
            qscale.push(1.0 + self.kappa * phi2 + w.dphi * w.dphi + (w.phi * w.d2phi).abs());
        }
        let count_violations = |vals: &[f64], nondecreasing: bool| {
            vals.windows(2)
                .enumerate()
                .filter(|(i, w)| {
                    let tol = 1e-12 * (1.0 + w[0].abs()) + 64.0 * f64::EPSILON * qscale[*i];
                    if nondecreasing {
                        w[1] < w[0] - tol
                    } else {
                        w[1] > w[0] + tol
                    }
                })
                .count()
        };
        let pass_i = margin_i >= ASSUMPTION_MARGIN_FLOOR;
        let pass_ii = margin_ii >= ASSUMPTION_MARGIN_FLOOR;
        let pass_iii = margin_iii >= ASSUMPTION_MARGIN_FLOOR;
        Ok(AssumptionReport {
            a: self.a,
            r_max,
            samples,
            margin_convexity: margin_i,
            margin_gradient: margin_ii,
            margin_ricci_monotone: margin_iii,
            pass_convexity: pass_i,
            pass_gradient: pass_ii,
            pass_ricci_monotone: pass_iii,
            pass: pass_i && pass_ii && pass_iii,
            q1_monotone_violations: count_violations(&q1, true),
            q2_monotone_violations: count_violations(&q2, false),
            q3_monotone_violations: count_violations(&q3, false),
            q1,
            q2,
            q3,
        })
    }
}

fn parse_kv(rest: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::parse(format!("expected key=value, got `{part}`")))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

// Closed forms for the deSitter-Schwarzschild family:
// F(s) = (φ′)² as a function of φ = s, and its s-derivatives.
fn ds_f(n: u32, m: f64, kappa: f64, s: f64) -> f64 {
    1.0 - m * s.powi(1 - n as i32) + kappa * s * s
}
fn ds_df(n: u32, m: f64, kappa: f64, s: f64) -> f64 {
    m * (n as f64 - 1.0) * s.powi(-(n as i32)) + 2.0 * kappa * s
}
fn ds_d2f(n: u32, m: f64, kappa: f64, s: f64) -> f64 {
    -m * (n as f64) * (n as f64 - 1.0) * s.powi(-(n as i32) - 1) + 2.0 * kappa
}

/// Positive root s₀ of 1 − m s^{1−n} + κ s² = 0.
fn ds_horizon_warp(n: u32, m: f64, kappa: f64) -> Result<f64> {
    let s_star = m.powf(1.0 / (n as f64 - 1.0));
    if kappa == 0.0 {
        return Ok(s_star);
    }
    // F(s_star) = κ s_star² > 0 and F → −∞ as s → 0⁺.
    let mut lo = s_star;
    let mut flo = ds_f(n, m, kappa, lo);
    let mut tries = 0;
    while flo > 0.0 {
        lo *= 0.5;
        flo = ds_f(n, m, kappa, lo);
        tries += 1;
        if tries > 2000 {
            return Err(Error::construction("no horizon root found"));
        }
    }
    let s0 = roots::bisect(|s| ds_f(n, m, kappa, s), lo, s_star, 1e-13)
        .ok_or_else(|| Error::construction("no horizon root found"))?;
    let s0 = roots::newton_polish(
        |s| ds_f(n, m, kappa, s),
        |s| ds_df(n, m, kappa, s),
        s0,
        6,
    );
    if !(s0 > 0.0) || ds_f(n, m, kappa, s0).abs() > 1e-12 * (1.0 + kappa * s0 * s0) {
        return Err(Error::construction("horizon root refinement failed"));
    }
    Ok(s0)
}

impl UniformTable {
    /// Quintic Hermite in the cell containing r, using nodal values and
    /// the two closed-form derivatives.
    fn eval_phi(&self, r: f64) -> f64 {
        let n = self.phi.len();
        let mut k = (r / self.h) as usize;
        if k >= n - 1 {
            k = n - 2;
        }
        let t = (r - k as f64 * self.h) / self.h;
        interp::hermite5(
            t,
            self.h,
            self.phi[k],
            self.phi[k + 1],
            self.dphi[k],
            self.dphi[k + 1],
            self.d2phi[k],
            self.d2phi[k + 1],
        )
    }
}

/// Build the dense uniform-in-r tabulation of φ for deSitter-Schwarzschild.
///
/// Marches the substituted integrand g(ζ) = 2 s₀ ζ / √F(s₀(1+ζ²)) in
/// panels sized for roughly constant Δr, accumulating r(ζ) by adaptive
/// Gauss–Kronrod quadrature; then solves r(ζ_k) = k·h per node by
/// Newton iterations on locally re-quadratured increments.
fn build_ds_table(n: u32, m: f64, kappa: f64, s0: f64, r_max: f64) -> Result<UniformTable> {
    // F(s₀(1+ζ²)) written without the F(s₀) = 0 cancellation:
    // −m s₀^{1−n}((1+ζ²)^{1−n} − 1) + κ s₀² ζ²(2 + ζ²), accurate down to
    // ζ at rounding level.
    let f_sub = |z: f64| {
        let z2 = z * z;
        let pow_term = ((1.0 - n as f64) * z2.ln_1p()).exp_m1();
        -m * s0.powi(1 - n as i32) * pow_term + kappa * s0 * s0 * z2 * (2.0 + z2)
    };
    let g = |z: f64| 2.0 * s0 * z / f_sub(z).max(f64::MIN_POSITIVE).sqrt();
    // g(0⁺) limit from F(s₀ + s₀ζ²) ≈ F′(s₀) s₀ ζ².
    let g0 = 2.0 * (s0 / ds_df(n, m, kappa, s0)).sqrt();

    let target_dr = 0.2 * s0.max(1.0);
    let mut zeta_nodes = vec![0.0f64];
    let mut r_nodes = vec![0.0f64];
    let mut z = 0.0f64;
    let mut gz = g0;
    while *r_nodes.last().unwrap() < r_max + target_dr {
        let dz = (target_dr / gz).min(if z == 0.0 { f64::INFINITY } else { z });
        let z1 = z + dz;
        let inc = quad::adaptive(g, z, z1, 1e-14, 1e-16 * target_dr)
            .map_err(|e| Error::numerical(format!("warp tabulation: {e}")))?;
        z = z1;
        gz = g(z);
        zeta_nodes.push(z);
        r_nodes.push(r_nodes.last().unwrap() + inc);
        if zeta_nodes.len() > 2_000_000 {
            return Err(Error::numerical("warp tabulation did not reach r_max"));
        }
    }

    let h = 0.01 * s0.max(1.0);
    let count = (r_max / h).ceil() as usize + 1;
    let mut phi = Vec::with_capacity(count);
    let mut dphi = Vec::with_capacity(count);
    let mut d2phi = Vec::with_capacity(count);
    for k in 0..count {
        let rk = k as f64 * h;
        let zk = if k == 0 {
            0.0
        } else {
            let j = r_nodes.partition_point(|&r| r <= rk).saturating_sub(1);
            let j = j.min(r_nodes.len() - 2);
            let mut zq = zeta_nodes[j]
                + (rk - r_nodes[j]) / (r_nodes[j + 1] - r_nodes[j])
                    * (zeta_nodes[j + 1] - zeta_nodes[j]);
            for _ in 0..20 {
                let (inc, _) = quad::gauss_kronrod_15(&mut { g }, zeta_nodes[j], zq);
                let resid = r_nodes[j] + inc - rk;
                let gq = if zq == 0.0 { g0 } else { g(zq) };
                let step = resid / gq;
                zq -= step;
                if step.abs() <= 1e-15 * (1.0 + zq.abs()) {
                    break;
                }
            }
            zq
        };
        let s = s0 * (1.0 + zk * zk);
        phi.push(s);
        dphi.push(ds_f(n, m, kappa, s).max(0.0).sqrt());
        d2phi.push(0.5 * ds_df(n, m, kappa, s));
    }
    if let Some(k) = phi.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::numerical(format!(
            "warp tabulation is not monotone at node {k}: phi {} -> {}",
            phi[k],
            phi[k + 1]
        )));
    }
    Ok(UniformTable { h, phi, dphi, d2phi })
}

fn eval_sampled(t: &SampledWarp, r: f64) -> WarpPoint {
    let j = t.r.partition_point(|&x| x <= r).saturating_sub(1);
    let j = j.min(t.r.len() - 2);
    let (x0, x1) = (t.r[j], t.r[j + 1]);
    let phi = interp::hermite3(r, x0, x1, t.phi[j], t.phi[j + 1], t.dphi[j], t.dphi[j + 1]);
    let dphi = interp::hermite3(r, x0, x1, t.dphi[j], t.dphi[j + 1], t.d2phi[j], t.d2phi[j + 1]);
    let d2phi = interp::hermite3(r, x0, x1, t.d2phi[j], t.d2phi[j + 1], t.d3phi[j], t.d3phi[j + 1]);
    let w = (r - x0) / (x1 - x0);
    let d3phi = t.d3phi[j] * (1.0 - w) + t.d3phi[j + 1] * w;
    WarpPoint { phi, dphi, d2phi, d3phi }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    /// r(φ) closed form for Schwarzschild n=2 m=2 via ζ = √(φ/2 − 1):
    /// r = 2(ζ√(1+ζ²) + asinh ζ).
    fn schw_m2_radius(phi: f64) -> f64 {
        let z = (phi / 2.0 - 1.0).sqrt();
        2.0 * (z * (1.0 + z * z).sqrt() + z.asinh())
    }

    #[test]
    fn horizon_roots() {
        let s = WarpedSpace::ds_schwarzschild(2, 2.0, 0.0).unwrap();
        assert!(close(s.horizon_warp(), 2.0, 1e-14));
        let s = WarpedSpace::ds_schwarzschild(2, 2.0, 1.0).unwrap();
        assert!(close(s.horizon_warp(), 1.0, 1e-14));
        assert!(WarpedSpace::ds_schwarzschild(2, -1.0, 0.0).is_err());
    }

    #[test]
    fn space_form_evals() {
        let e = WarpedSpace::euclidean(2).unwrap();
        let w = e.eval(3.0).unwrap();
        assert_eq!((w.phi, w.dphi, w.d2phi, w.d3phi), (3.0, 1.0, 0.0, 0.0));
        let h = WarpedSpace::hyperbolic(2).unwrap();
        let w = h.eval(1.0).unwrap();
        assert!(close(w.phi, 1.0f64.sinh(), 1e-15));
        assert!(close(w.dphi, 1.0f64.cosh(), 1e-15));
        assert!(close(w.d2phi, 1.0f64.sinh(), 1e-15));
        assert!(close(w.d3phi, 1.0f64.cosh(), 1e-15));
        assert!(e.eval(-0.5).is_err());
        assert!(h.eval(1e9).is_err());
    }

    #[test]
    fn ds_closed_form_identity_random_radii() {
        for (m, kappa) in [(2.0, 0.0), (2.0, 1.0), (1.0, 1.0)] {
            let s = WarpedSpace::ds_schwarzschild(2, m, kappa).unwrap();
            let mut state = 0x9e3779b97f4a7c15u64;
            for _ in 0..1000 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let u = (state >> 11) as f64 / (1u64 << 53) as f64;
                let r = u * s.r_max();
                let w = s.eval(r).unwrap();
                let rhs = 1.0 - m * w.phi.powi(-1) + kappa * w.phi * w.phi;
                assert!(
                    (w.dphi * w.dphi - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()),
                    "identity failed at r={r}: {} vs {rhs}",
                    w.dphi * w.dphi
                );
            }
        }
    }

    #[test]
    fn ds_tabulation_against_closed_form_radius() {
        let s = WarpedSpace::ds_schwarzschild(2, 2.0, 0.0).unwrap();
        for phi in [2.5, 3.0, 4.0, 10.0, 50.0, 150.0] {
            let r = schw_m2_radius(phi);
            let w = s.eval(r).unwrap();
            assert!(
                (w.phi - phi).abs() < 1e-11 * phi,
                "phi({r}) = {} want {phi}",
                w.phi
            );
        }
        // derivatives at φ = 4 from the closed forms
        let r4 = schw_m2_radius(4.0);
        let w = s.eval(r4).unwrap();
        assert!(close(w.dphi, 0.5f64.sqrt(), 1e-11));
        assert!(close(w.d2phi, 0.0625, 1e-11));
    }

    #[test]
    fn ds_warp_is_strictly_increasing() {
        let s = WarpedSpace::ds_schwarzschild(3, 1.0, 1.0).unwrap();
        let mut last = 0.0;
        for i in 0..5000 {
            let r = s.r_max() * i as f64 / 4999.0;
            let w = s.eval(r).unwrap();
            assert!(i == 0 || w.phi > last);
            last = w.phi;
        }
    }

    #[test]
    fn radius_of_warp_round_trip() {
        let s = WarpedSpace::ds_schwarzschild(2, 2.0, 1.0).unwrap();
        for phi in [1.01, 1.5, 3.0, 17.0, 1e6] {
            let r = s.radius_of_warp(phi).unwrap();
            assert!(close(s.eval(r).unwrap().phi, phi, 1e-12));
        }
        let h = WarpedSpace::hyperbolic(2).unwrap();
        assert!(close(h.radius_of_warp(1.0f64.sinh()).unwrap(), 1.0, 1e-14));
        assert!(h.radius_of_warp(-1.0).is_err());
    }

    #[test]
    fn ricci_values() {
        let e = WarpedSpace::euclidean(2).unwrap();
        let p = e.ricci(2.7).unwrap();
        assert_eq!((p.radial, p.tangential), (0.0, 0.0));

        let h = WarpedSpace::hyperbolic(2).unwrap();
        let p = h.ricci(1.0).unwrap();
        assert!(close(p.radial, -2.0, 1e-12));
        assert!(close(p.tangential, -2.0 * 1.0f64.sinh().powi(2), 1e-12));

        let s = WarpedSpace::ds_schwarzschild(2, 2.0, 0.0).unwrap();
        let r4 = s.radius_of_warp(4.0).unwrap();
        let p = s.ricci(r4).unwrap();
        assert!(close(p.radial, -0.03125, 1e-10));
        assert!(close(p.tangential, 0.25, 1e-10));
    }

    /// Independent curvature oracle: finite differences of the metric
    /// component X(r) = g_θθ = φ² only.
    fn ricci_fd_oracle(space: &WarpedSpace, r: f64) -> (f64, f64) {
        let n = space.n() as f64;
        let h = 1e-2 * (1.0 + r.abs()).min(r * 0.25);
        let x = |rr: f64| space.eval(rr).unwrap().phi.powi(2);
        let xm2 = x(r - 2.0 * h);
        let xm1 = x(r - h);
        let x0 = x(r);
        let xp1 = x(r + h);
        let xp2 = x(r + 2.0 * h);
        let x1 = (xm2 - 8.0 * xm1 + 8.0 * xp1 - xp2) / (12.0 * h);
        let x2 = (-xm2 + 16.0 * xm1 - 30.0 * x0 + 16.0 * xp1 - xp2) / (12.0 * h * h);
        let radial = -n * (x2 / (2.0 * x0) - (x1 / (2.0 * x0)).powi(2));
        let phiphi2 = x2 / 2.0 - x1 * x1 / (4.0 * x0);
        let dphisq = x1 * x1 / (4.0 * x0);
        let tangential = (n - 1.0) - phiphi2 - (n - 1.0) * dphisq;
        (radial, tangential)
    }

    #[test]
    fn ricci_matches_finite_difference_oracle() {
        for space in [
            WarpedSpace::euclidean(2).unwrap(),
            WarpedSpace::hyperbolic(2).unwrap(),
            WarpedSpace::ds_schwarzschild(2, 2.0, 0.0).unwrap(),
            WarpedSpace::ds_schwarzschild(3, 1.0, 1.0).unwrap(),
        ] {
            for r in [1.0, 2.0, 3.7, 8.0] {
                let got = space.ricci(r).unwrap();
                let (rad, tan) = ricci_fd_oracle(&space, r);
                let scale = 1.0 + rad.abs().max(tan.abs());
                assert!(
                    (got.radial - rad).abs() < 1e-6 * scale,
                    "{} radial at r={r}: {} vs {rad}",
                    space.spec_string(),
                    got.radial
                );
                assert!(
                    (got.tangential - tan).abs() < 1e-6 * scale,
                    "{} tangential at r={r}: {} vs {tan}",
                    space.spec_string(),
                    got.tangential
                );
            }
        }
    }

    #[test]
    fn ricci_gap_cases() {
        let s = WarpedSpace::ds_schwarzschild(2, 2.0, 0.0).unwrap();
        let r4 = s.radius_of_warp(4.0).unwrap();
        // radial sphere normal: exactly zero
        let phi = s.eval(r4).unwrap().phi;
        assert_eq!(s.ricci_gap(r4, phi).unwrap(), 0.0);
        assert!(close(s.ricci_gap(r4, 2.0).unwrap(), -0.03515625, 1e-9));
        assert!(s.ricci_gap(r4, 4.5).is_err());

        let h = WarpedSpace::hyperbolic(3).unwrap();
        for u in [0.2, 0.7, 1.0] {
            let g = h.ricci_gap(1.0, u * 1.0f64.sinh()).unwrap();
            assert!(g.abs() < 1e-13, "space form gap must vanish, got {g}");
        }
    }

    #[test]
    fn ricci_gap_nonpositive_on_admissible_spaces() {
        for space in [
            WarpedSpace::ds_schwarzschild(2, 2.0, 0.0).unwrap(),
            WarpedSpace::ds_schwarzschild(2, 2.0, 1.0).unwrap(),
            WarpedSpace::ds_schwarzschild(3, 1.0, 1.0).unwrap(),
        ] {
            for i in 1..40 {
                let r = space.r_max() * i as f64 / 40.0;
                let phi = space.eval(r).unwrap().phi;
                for frac in [0.1, 0.5, 0.9, 1.0] {
                    let gap = space.ricci_gap(r, frac * phi).unwrap();
                    assert!(gap <= 1e-12, "gap {gap} > 0 at r={r}");
                }
            }
        }
    }

    #[test]
    fn assumptions_pass_on_ds_family() {
        for (n, m, kappa) in [(2, 2.0, 0.0), (2, 2.0, 1.0), (3, 1.0, 0.0), (3, 1.0, 1.0)] {
            let s = WarpedSpace::ds_schwarzschild(n, m, kappa).unwrap();
            let rep = s.validate_assumptions(50.0_f64.min(s.r_max()), 10_000).unwrap();
            assert!(rep.pass, "dss n={n} m={m} kappa={kappa}: {rep:?}");
            assert_eq!(rep.q1_monotone_violations, 0);
            assert!(rep.q1.iter().all(|&q| q <= 1.0 + 1e-12));
            assert_eq!(rep.q2_monotone_violations, 0);
            assert_eq!(rep.q3_monotone_violations, 0);
        }
    }

    #[test]
    fn assumptions_pass_on_space_forms() {
        let e = WarpedSpace::euclidean(2).unwrap();
        assert!(e.validate_assumptions(50.0, 500).unwrap().pass);
        let h = WarpedSpace::hyperbolic(2).unwrap();
        assert!(h.validate_assumptions(20.0, 500).unwrap().pass);
    }

    fn r_plus_sin_space() -> WarpedSpace {
        let rows = 4001;
        let mut t = SampledWarp {
            r: Vec::new(),
            phi: Vec::new(),
            dphi: Vec::new(),
            d2phi: Vec::new(),
            d3phi: Vec::new(),
        };
        for i in 0..rows {
            let r = 1e-6 + (10.0 - 1e-6) * i as f64 / (rows - 1) as f64;
            t.r.push(r);
            t.phi.push(r + r.sin());
            t.dphi.push(1.0 + r.cos());
            t.d2phi.push(-r.sin());
            t.d3phi.push(-r.cos());
        }
        WarpedSpace::custom(2, 0.0, t, "r_plus_sin").unwrap()
    }

    #[test]
    fn assumptions_fail_on_oscillating_warp() {
        let s = r_plus_sin_space();
        let rep = s.validate_assumptions(10.0 - 1e-5, 4000).unwrap();
        assert!(!rep.pass);
        assert!(!rep.pass_convexity, "condition (i) must fail: {rep:?}");
        assert!(rep.margin_convexity < -0.9);
    }

    #[test]
    fn spec_strings_round_trip() {
        for spec in ["euclidean:n=2", "hyperbolic:n=3", "dss:n=2,m=2,kappa=0", "dss:n=3,m=1,kappa=1"] {
            let s = WarpedSpace::from_spec(spec).unwrap();
            assert_eq!(s.spec_string(), spec);
        }
        assert!(WarpedSpace::from_spec("dss:n=2,m=2").is_err());
        assert!(WarpedSpace::from_spec("torus:n=2").is_err());
        assert!(WarpedSpace::from_spec("euclidean:n=1").is_err());
    }

    #[test]
    fn custom_csv_parse() {
        let text = "r,phi,dphi,d2phi,d3phi\n0,0,1,0,0\n1,1,1,0,0\n2,2,1,0,0\n3,3,1,0,0\n";
        let t = SampledWarp::from_csv(text).unwrap();
        assert_eq!(t.r.len(), 4);
        assert!(SampledWarp::from_csv("x,y\n1,2\n").is_err());
    }
}
