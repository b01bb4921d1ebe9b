//! Axisymmetric star-shaped hypersurfaces as radial graphs r(θ) over
//! the polar angle θ ∈ [0, π].
//!
//! Geometry is computed in the potential variable λ with λ′(r) = 1/φ:
//! writing p = r_θ/φ and υ = √(1 + p²), the principal curvatures split
//! into the profile direction
//!   κ_prof = (φ′υ² − p_θ) / (φ υ³),   p_θ = r_θθ/φ − φ′p²,
//! and the rotational direction of multiplicity n − 1
//!   κ_rot = (φ′ − p cot θ) / (φ υ),
//! which agree at the poles. The support function is u = φ/υ.
//!
//! Mean curvature correctness is anchored to closed forms on radial
//! spheres and to the first-variation oracle, which differentiates the
//! area functional directly.

use crate::error::Error;
use crate::numerics::quad;
use crate::space::{WarpPoint, WarpedSpace};
use crate::Result;
use std::sync::Arc;

/// Pointwise first/second fundamental data at a node.
#[derive(Debug, Clone, Copy)]
pub struct PointGeometry {
    /// Graph gradient factor υ = √(1 + r_θ²/φ²).
    pub v: f64,
    /// Support function u = φ/υ.
    pub u: f64,
    /// Mean curvature H = κ_prof + (n−1) κ_rot.
    pub h: f64,
    pub kappa_prof: f64,
    pub kappa_rot: f64,
    /// max_i |κ_i − φ′/φ|, the umbilicity deviation.
    pub umb_dev: f64,
}

/// Weight functions η(r) for enclosed-volume integrals ∫_Ω η dv.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeWeight {
    /// η = 1 (plain volume).
    One,
    /// η = −n φ″/φ, the radial Ricci coefficient.
    RicciRadial,
    /// η = φ″/φ, the weighted isoperimetric density.
    WeightedIso,
    /// η = φ′.
    PhiPrime,
}

impl VolumeWeight {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "one" => VolumeWeight::One,
            "ricci_radial" => VolumeWeight::RicciRadial,
            "weighted_iso" => VolumeWeight::WeightedIso,
            "phi_prime" => VolumeWeight::PhiPrime,
            other => return Err(Error::parse(format!("unknown volume weight `{other}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            VolumeWeight::One => "one",
            VolumeWeight::RicciRadial => "ricci_radial",
            VolumeWeight::WeightedIso => "weighted_iso",
            VolumeWeight::PhiPrime => "phi_prime",
        }
    }

    #[inline]
    pub(crate) fn eval(&self, n: f64, w: &WarpPoint) -> f64 {
        match self {
            VolumeWeight::One => 1.0,
            VolumeWeight::RicciRadial => {
                if w.phi == 0.0 {
                    0.0
                } else {
                    -n * w.d2phi / w.phi
                }
            }
            VolumeWeight::WeightedIso => {
                if w.phi == 0.0 {
                    0.0
                } else {
                    w.d2phi / w.phi
                }
            }
            VolumeWeight::PhiPrime => w.dphi,
        }
    }
}

/// Normal-speed profile ψ(θ) for the first-variation oracle: either a
/// compactly supported smooth bump or the constant 1.
#[derive(Debug, Clone, Copy)]
pub enum NormalBump {
    Uniform,
    /// exp(1 − 1/(1 − z²)) with z = (θ − center)/width, zero outside |z| < 1.
    Bump { center: f64, width: f64 },
}

impl NormalBump {
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            NormalBump::Uniform => 1.0,
            NormalBump::Bump { center, width } => {
                let z = (theta - center) / width;
                if z.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - z * z)).exp()
                }
            }
        }
    }
}

/// Radial graph over the polar angle. Immutable after construction;
/// derivative stencils are cached at the nodes.
#[derive(Debug, Clone)]
pub struct GraphSurface {
    space: Arc<WarpedSpace>,
    theta: Vec<f64>,
    radii: Vec<f64>,
    r_t: Vec<f64>,
    r_tt: Vec<f64>,
}

/// Non-uniform 3-point stencils with even-reflection ghost nodes across
/// the poles, enforcing r_θ = 0 there.
#[inline]
pub(crate) fn stencil(theta: &[f64], radii: &[f64], i: usize) -> (f64, f64) {
    let k = theta.len() - 1;
    let (tm, rm, tp, rp) = if i == 0 {
        (-theta[1], radii[1], theta[1], radii[1])
    } else if i == k {
        (theta[k - 1], radii[k - 1], 2.0 * theta[k] - theta[k - 1], radii[k - 1])
    } else {
        (theta[i - 1], radii[i - 1], theta[i + 1], radii[i + 1])
    };
    let hm = theta[i] - tm;
    let hp = tp - theta[i];
    let denom = hm * hp * (hm + hp);
    let r_t = (hm * hm * rp - hp * hp * rm + (hp * hp - hm * hm) * radii[i]) / denom;
    let r_tt = 2.0 * (hm * rp + hp * rm - (hm + hp) * radii[i]) / denom;
    (r_t, r_tt)
}

/// Pointwise geometry from warp data and cached derivatives.
/// `cot_theta` is ignored at the poles, where the rotational curvature
/// equals the profile curvature by the smoothness limit.
#[inline]
pub(crate) fn node_geometry(
    n: f64,
    w: &WarpPoint,
    cot_theta: f64,
    r_t: f64,
    r_tt: f64,
    at_pole: bool,
) -> PointGeometry {
    let p = r_t / w.phi;
    let v2 = 1.0 + p * p;
    let v = v2.sqrt();
    let p_t = r_tt / w.phi - w.dphi * p * p;
    let kappa_prof = (w.dphi * v2 - p_t) / (w.phi * v2 * v);
    let kappa_rot = if at_pole {
        kappa_prof
    } else {
        (w.dphi - p * cot_theta) / (w.phi * v)
    };
    let h = kappa_prof + (n - 1.0) * kappa_rot;
    let radial_rate = w.dphi / w.phi;
    let umb_dev = (kappa_prof - radial_rate)
        .abs()
        .max((kappa_rot - radial_rate).abs());
    PointGeometry { v, u: w.phi / v, h, kappa_prof, kappa_rot, umb_dev }
}

impl GraphSurface {
    /// Radial coordinate sphere {r} × Sⁿ sampled on a uniform grid.
    pub fn radial_sphere(space: Arc<WarpedSpace>, r: f64, nodes: usize) -> Result<Self> {
        if !(r > space.a()) {
            return Err(Error::domain(format!(
                "sphere radius {r} must exceed the horizon coordinate {}",
                space.a()
            )));
        }
        let theta = uniform_theta(nodes)?;
        let radii = vec![r; nodes];
        Self::from_profile(space, theta, radii)
    }

    /// Build from nodal data; validates ranges, pole smoothness and
    /// star-shapedness, then caches difference stencils.
    pub fn from_profile(space: Arc<WarpedSpace>, theta: Vec<f64>, radii: Vec<f64>) -> Result<Self> {
        let k = theta.len();
        if k < 5 {
            return Err(Error::MalformedProfile("need at least 5 nodes".into()));
        }
        if radii.len() != k {
            return Err(Error::MalformedProfile("theta/radii length mismatch".into()));
        }
        let mut theta = theta;
        if theta[0].abs() <= 1e-9 {
            theta[0] = 0.0;
        }
        if (theta[k - 1] - std::f64::consts::PI).abs() <= 1e-9 {
            theta[k - 1] = std::f64::consts::PI;
        }
        if theta[0] != 0.0 || theta[k - 1] != std::f64::consts::PI {
            return Err(Error::MalformedProfile(format!(
                "polar angle must run from 0 to pi, got [{}, {}]",
                theta[0],
                theta[k - 1]
            )));
        }
        if !theta.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::MalformedProfile("polar angles must strictly increase".into()));
        }
        for (i, &r) in radii.iter().enumerate() {
            if !(r > space.a()) {
                return Err(Error::MalformedProfile(format!(
                    "radius {r} at node {i} does not stay outside the horizon (a = {})",
                    space.a()
                )));
            }
            if r > space.r_max() {
                return Err(Error::domain(format!(
                    "radius {r} at node {i} beyond tabulated range {}",
                    space.r_max()
                )));
            }
        }
        check_pole_smoothness(&theta, &radii)?;
        let mut r_t = Vec::with_capacity(k);
        let mut r_tt = Vec::with_capacity(k);
        for i in 0..k {
            let (d1, d2) = stencil(&theta, &radii, i);
            r_t.push(d1);
            r_tt.push(d2);
        }
        Ok(GraphSurface { space, theta, radii, r_t, r_tt })
    }

    /// Parse a surface spec: `sphere:r=..` or `sphere:phi0=..`,
    /// `cos_bump:r0=..,eps=..,k=..` (r(θ) = r₀(1 + ε cos kθ),
    /// `phi0=` may replace `r0=`), or `file=<path>` (CSV `theta,r`).
    pub fn from_spec(space: Arc<WarpedSpace>, spec: &str, nodes: usize) -> Result<Self> {
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let params: Vec<(String, String)> = rest
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                p.split_once('=')
                    .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                    .ok_or_else(|| Error::parse(format!("expected key=value, got `{p}`")))
            })
            .collect::<Result<_>>()?;
        let get = |key: &str| -> Option<f64> {
            params.iter().find(|(k, _)| k == key).and_then(|(_, v)| v.parse().ok())
        };
        let base_radius = |space: &WarpedSpace| -> Result<f64> {
            if let Some(r0) = get("r0").or_else(|| get("r")) {
                Ok(r0)
            } else if let Some(phi0) = get("phi0") {
                space.radius_of_warp(phi0)
            } else {
                Err(Error::parse(format!("surface spec `{spec}` needs r=/r0= or phi0=")))
            }
        };
        match kind {
            "sphere" => {
                let r = base_radius(&space)?;
                Self::radial_sphere(space, r, nodes)
            }
            "cos_bump" => {
                let r0 = base_radius(&space)?;
                let eps = get("eps")
                    .ok_or_else(|| Error::parse(format!("cos_bump spec `{spec}` needs eps=")))?;
                let kf = get("k").unwrap_or(1.0);
                if kf.fract() != 0.0 || kf < 1.0 {
                    return Err(Error::parse("cos_bump k must be a positive integer"));
                }
                let theta = uniform_theta(nodes)?;
                let radii = theta.iter().map(|&t| r0 * (1.0 + eps * (kf * t).cos())).collect();
                Self::from_profile(space, theta, radii)
            }
            "file" => Err(Error::parse("use `from_profile_csv` for file surfaces")),
            other => Err(Error::parse(format!("unknown surface kind `{other}`"))),
        }
    }

    /// Load a profile CSV with header `theta,r`.
    pub fn from_profile_csv(space: Arc<WarpedSpace>, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::parse("empty profile file"))?;
        if header.trim() != "theta,r" {
            return Err(Error::parse(format!(
                "profile header must be `theta,r`, got `{}`",
                header.trim()
            )));
        }
        let mut theta = Vec::new();
        let mut radii = Vec::new();
        for (ln, line) in lines.enumerate() {
            let (a, b) = line
                .trim()
                .split_once(',')
                .ok_or_else(|| Error::parse(format!("profile line {}: need 2 fields", ln + 2)))?;
            theta.push(a.trim().parse::<f64>().map_err(|_| {
                Error::parse(format!("profile line {}: bad theta `{a}`", ln + 2))
            })?);
            radii.push(b.trim().parse::<f64>().map_err(|_| {
                Error::parse(format!("profile line {}: bad r `{b}`", ln + 2))
            })?);
        }
        Self::from_profile(space, theta, radii)
    }

    pub fn space(&self) -> &Arc<WarpedSpace> {
        &self.space
    }
    pub fn node_count(&self) -> usize {
        self.theta.len()
    }
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
    pub fn min_radius(&self) -> f64 {
        self.radii.iter().cloned().fold(f64::INFINITY, f64::min)
    }
    pub fn max_radius(&self) -> f64 {
        self.radii.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Geometry at one node.
    pub fn geometry_at(&self, i: usize) -> PointGeometry {
        let w = self.space.eval(self.radii[i]).expect("radii validated at construction");
        let at_pole = i == 0 || i == self.theta.len() - 1;
        let cot = if at_pole { 0.0 } else { self.theta[i].cos() / self.theta[i].sin() };
        node_geometry(self.space.n() as f64, &w, cot, self.r_t[i], self.r_tt[i], at_pole)
    }

    /// Integral over the surface of f(node): Simpson quadrature of
    /// f · φⁿ υ sin^{n−1}θ times the fibre sphere area.
    pub fn surface_integral<F: FnMut(usize, &PointGeometry, &WarpPoint) -> f64>(
        &self,
        mut f: F,
    ) -> f64 {
        let n = self.space.n();
        let mut vals = Vec::with_capacity(self.theta.len());
        for i in 0..self.theta.len() {
            let w = self.space.eval(self.radii[i]).expect("validated");
            let at_pole = i == 0 || i == self.theta.len() - 1;
            let cot = if at_pole { 0.0 } else { self.theta[i].cos() / self.theta[i].sin() };
            let g = node_geometry(n as f64, &w, cot, self.r_t[i], self.r_tt[i], at_pole);
            let weight = w.phi.powi(n as i32) * g.v * self.theta[i].sin().powi(n as i32 - 1);
            vals.push(f(i, &g, &w) * weight);
        }
        self.space.omega_nm1() * quad::simpson_irregular(&self.theta, &vals)
    }

    /// Surface area |Σ| = ω_{n−1} ∫ φⁿ υ sin^{n−1}θ dθ.
    pub fn area(&self) -> f64 {
        self.surface_integral(|_, _, _| 1.0)
    }

    /// ∫_Σ H dμ.
    pub fn total_mean_curvature(&self) -> f64 {
        self.surface_integral(|_, g, _| g.h)
    }

    /// Largest umbilicity deviation over the nodes.
    pub fn max_umbilicity_deviation(&self) -> f64 {
        (0..self.node_count())
            .map(|i| self.geometry_at(i).umb_dev)
            .fold(0.0, f64::max)
    }

    /// Weighted enclosed volume ∫_Ω η dv between the horizon and the
    /// surface: ω_{n−1} ∫ sin^{n−1}θ ∫_a^{r(θ)} η(s) φ(s)ⁿ ds dθ.
    /// The radial integrals are accumulated over the sorted node radii
    /// by adaptive Gauss panels.
    pub fn weighted_enclosed_volume(&self, weight: VolumeWeight) -> Result<f64> {
        let n = self.space.n();
        let nf = n as f64;
        let space = &self.space;
        let integrand = |s: f64| {
            let w = space.eval(s).expect("within validated range");
            weight.eval(nf, &w) * w.phi.powi(n as i32)
        };
        let mut order: Vec<usize> = (0..self.radii.len()).collect();
        order.sort_by(|&i, &j| self.radii[i].total_cmp(&self.radii[j]));
        let mut cumulative = vec![0.0; self.radii.len()];
        let mut last_r = self.space.a();
        let mut acc = 0.0;
        for &idx in &order {
            let r = self.radii[idx];
            if r > last_r {
                acc += quad::adaptive(integrand, last_r, r, 1e-12, 1e-14)
                    .map_err(|e| Error::numerical(format!("radial volume integral: {e}")))?;
                last_r = r;
            }
            cumulative[idx] = acc;
        }
        let vals: Vec<f64> = (0..self.theta.len())
            .map(|i| cumulative[i] * self.theta[i].sin().powi(n as i32 - 1))
            .collect();
        Ok(self.space.omega_nm1() * quad::simpson_irregular(&self.theta, &vals))
    }

    /// Quermassintegral ∫_Σ H dμ + ∫_Ω Ric(∂_r, ∂_r) dv.
    pub fn quermassintegral(&self) -> Result<f64> {
        Ok(self.total_mean_curvature() + self.weighted_enclosed_volume(VolumeWeight::RicciRadial)?)
    }

    /// Displace the surface by normal speed ψ: r ± ε υ ψ.
    fn displaced(&self, bump: &NormalBump, eps: f64) -> Result<GraphSurface> {
        let radii: Vec<f64> = (0..self.node_count())
            .map(|i| {
                let g = self.geometry_at(i);
                self.radii[i] + eps * g.v * bump.eval(self.theta[i])
            })
            .collect();
        if radii.iter().any(|&r| r <= self.space.a()) {
            return Err(Error::domain("displaced surface crosses the horizon"));
        }
        GraphSurface::from_profile(self.space.clone(), self.theta.clone(), radii)
    }

    /// Formula-independent mean-curvature oracle: the centered
    /// difference of the area functional under a normal-speed bump ψ,
    /// which converges to ∫ H ψ dμ. Richardson-extrapolated in ε.
    pub fn first_variation_oracle(&self, bump: &NormalBump) -> Result<f64> {
        let eps = 1e-5 * (self.min_radius() - self.space.a()).max(1e-6);
        let diff = |e: f64| -> Result<f64> {
            let ap = self.displaced(bump, e)?.area();
            let am = self.displaced(bump, -e)?.area();
            Ok((ap - am) / (2.0 * e))
        };
        let d1 = diff(eps)?;
        let d2 = diff(0.5 * eps)?;
        Ok((4.0 * d2 - d1) / 3.0)
    }

    /// Quadrature of ∫ H ψ dμ from the curvature formulas, for
    /// comparison against the first-variation oracle.
    pub fn mean_curvature_pairing(&self, bump: &NormalBump) -> f64 {
        self.surface_integral(|i, g, _| g.h * bump.eval(self.theta[i]))
    }
}

fn uniform_theta(nodes: usize) -> Result<Vec<f64>> {
    if nodes < 5 {
        return Err(Error::MalformedProfile("need at least 5 nodes".into()));
    }
    let k = nodes - 1;
    Ok((0..nodes)
        .map(|i| std::f64::consts::PI * i as f64 / k as f64)
        .collect())
}

/// One-sided pole slopes must vanish to discretization order: compare
/// |r₁ − r₀| against the curvature scale of the profile.
fn check_pole_smoothness(theta: &[f64], radii: &[f64]) -> Result<()> {
    let k = theta.len() - 1;
    let mut curv_scale = 0.0f64;
    for i in 1..k {
        let (_, d2) = stencil(theta, radii, i);
        curv_scale = curv_scale.max(d2.abs());
    }
    let scale = radii.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
    for (i0, i1, label) in [(0usize, 1usize, "theta=0"), (k, k - 1, "theta=pi")] {
        let dt = (theta[i1] - theta[i0]).abs();
        let bound = 2.0 * dt * dt * curv_scale + 1e-9 * scale;
        if (radii[i1] - radii[i0]).abs() > bound {
            return Err(Error::MalformedProfile(format!(
                "profile slope at {label} does not vanish: |dr| = {:e} exceeds {:e}",
                (radii[i1] - radii[i0]).abs(),
                bound
            )));
        }
    }
    Ok(())
}
