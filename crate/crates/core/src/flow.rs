//! Time-stepping of the inverse mean curvature flow graph equation
//! ∂r/∂t = υ/H and of the mean-curvature-type flow with normal speed
//! nφ′ − uH, with an exact radial ODE path and diagnostic traces.
//!
//! The nodal system is advanced by classical four-stage explicit steps.
//! A tentative step is rejected and halved when any stage violates the
//! guard rails (H above its floor for IMCF, radii outside the horizon,
//! υ bounded, finite values); smooth mean-convex data never trips the
//! guards at stable step sizes, so repeated rejection indicates
//! discretization failure rather than geometry.

use crate::error::Error;
use crate::fmt::{fmt17, JsonValue};
use crate::numerics::ode::{self, RhsOutcome};
use crate::profiles::{self, ProfileColumn, ProfileTable};
use crate::space::WarpedSpace;
use crate::surface::{node_geometry, stencil, GraphSurface};
use crate::Result;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowMode {
    Imcf,
    Gmcf,
}

impl FlowMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "imcf" => Ok(FlowMode::Imcf),
            "gmcf" => Ok(FlowMode::Gmcf),
            other => Err(Error::parse(format!("unknown flow mode `{other}`"))),
        }
    }
    pub fn name(&self) -> &'static str {
        match self {
            FlowMode::Imcf => "imcf",
            FlowMode::Gmcf => "gmcf",
        }
    }
}

/// Guard rails for explicit stepping.
#[derive(Debug, Clone, Copy)]
pub struct Guards {
    pub h_floor: f64,
    pub v_max: f64,
    pub max_halvings: u32,
}

impl Default for Guards {
    fn default() -> Self {
        Guards { h_floor: 1e-8, v_max: 1e6, max_halvings: 40 }
    }
}

/// One flow state: time, surface, last accepted step.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub surface: GraphSurface,
    pub dt_last: f64,
}

impl FlowState {
    pub fn new(surface: GraphSurface) -> Self {
        FlowState { t: 0.0, surface, dt_last: 0.0 }
    }
}

fn cot_table(theta: &[f64]) -> Vec<f64> {
    let k = theta.len() - 1;
    theta
        .iter()
        .enumerate()
        .map(|(i, &t)| if i == 0 || i == k { 0.0 } else { t.cos() / t.sin() })
        .collect()
}

/// Per-node speed field ∂r/∂t = υ/H of the inverse mean curvature flow.
pub fn imcf_rhs(surface: &GraphSurface) -> Result<Vec<f64>> {
    let guards = Guards::default();
    let mut out = vec![0.0; surface.node_count()];
    let cot = cot_table(surface.theta());
    rhs_into(
        surface.space(),
        FlowMode::Imcf,
        &guards,
        surface.theta(),
        &cot,
        surface.radii(),
        &mut out,
    )
    .map_err(reject_to_error)?;
    Ok(out)
}

/// Per-node speed field ∂r/∂t = υ(nφ′ − uH) of the mean-curvature-type
/// flow; radial coordinate spheres are stationary.
pub fn gmcf_rhs(surface: &GraphSurface) -> Result<Vec<f64>> {
    let guards = Guards::default();
    let mut out = vec![0.0; surface.node_count()];
    let cot = cot_table(surface.theta());
    rhs_into(
        surface.space(),
        FlowMode::Gmcf,
        &guards,
        surface.theta(),
        &cot,
        surface.radii(),
        &mut out,
    )
    .map_err(reject_to_error)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
struct RhsStats {
    h_min: f64,
    h_max: f64,
    u_min: f64,
    umb_max: f64,
    /// min over nodes of φ²H/υ² (the configured initial-step scale).
    cfl_speed: f64,
    /// min over nodes of the mode-specific diffusion stability scale.
    cfl_stab: f64,
}

#[derive(Debug, Clone, Copy)]
enum Reject {
    Speed { node: usize, h: f64 },
    BelowHorizon { node: usize },
    VelocityBound { node: usize },
    NonFinite { node: usize },
}

fn reject_to_error(r: Reject) -> Error {
    match r {
        Reject::Speed { node, h } => Error::SpeedUndefined { node, h },
        Reject::BelowHorizon { node } => {
            Error::Domain(format!("node {node} crossed the horizon"))
        }
        Reject::VelocityBound { node } => {
            Error::Numerical(format!("graph gradient bound exceeded at node {node}"))
        }
        Reject::NonFinite { node } => Error::Numerical(format!("non-finite value at node {node}")),
    }
}

/// Speed field and stability diagnostics for one nodal configuration.
fn rhs_into(
    space: &WarpedSpace,
    mode: FlowMode,
    guards: &Guards,
    theta: &[f64],
    cot: &[f64],
    radii: &[f64],
    out: &mut [f64],
) -> std::result::Result<RhsStats, Reject> {
    let n = space.n() as f64;
    let k = theta.len() - 1;
    let mut stats = RhsStats {
        h_min: f64::INFINITY,
        h_max: f64::NEG_INFINITY,
        u_min: f64::INFINITY,
        umb_max: 0.0,
        cfl_speed: f64::INFINITY,
        cfl_stab: f64::INFINITY,
    };
    for i in 0..=k {
        let r = radii[i];
        if !r.is_finite() {
            return Err(Reject::NonFinite { node: i });
        }
        if r <= space.a() || r > space.r_max() {
            return Err(Reject::BelowHorizon { node: i });
        }
        let w = space.eval(r).map_err(|_| Reject::BelowHorizon { node: i })?;
        let (r_t, r_tt) = stencil(theta, radii, i);
        let g = node_geometry(n, &w, cot[i], r_t, r_tt, i == 0 || i == k);
        if !g.h.is_finite() || !g.v.is_finite() {
            return Err(Reject::NonFinite { node: i });
        }
        if g.v > guards.v_max {
            return Err(Reject::VelocityBound { node: i });
        }
        let speed = match mode {
            FlowMode::Imcf => {
                if g.h <= guards.h_floor {
                    return Err(Reject::Speed { node: i, h: g.h });
                }
                g.v / g.h
            }
            FlowMode::Gmcf => g.v * (n * w.dphi - g.u * g.h),
        };
        if !speed.is_finite() {
            return Err(Reject::NonFinite { node: i });
        }
        out[i] = speed;
        stats.h_min = stats.h_min.min(g.h);
        stats.h_max = stats.h_max.max(g.h);
        stats.u_min = stats.u_min.min(g.u);
        stats.umb_max = stats.umb_max.max(g.umb_dev);
        stats.cfl_speed = stats.cfl_speed.min(w.phi * w.phi * g.h / (g.v * g.v));
        let stab = match mode {
            // linearized diffusivity of υ/H is 1/(Hφυ)²
            FlowMode::Imcf => (g.h * w.phi * g.v).powi(2),
            // linearized diffusivity of υ(nφ′ − uH) is u/(φυ)² scaled
            FlowMode::Gmcf => (w.phi * g.v).powi(2) / g.u.max(1e-12),
        };
        stats.cfl_stab = stats.cfl_stab.min(stab);
    }
    Ok(stats)
}

/// Scratch buffers reused across steps.
struct StepBuffers {
    tmp: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    next: Vec<f64>,
    k_next: Vec<f64>,
}

impl StepBuffers {
    fn new(n: usize) -> Self {
        StepBuffers {
            tmp: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            next: vec![0.0; n],
            k_next: vec![0.0; n],
        }
    }
}

/// One classical 4-stage step from `radii` with speed cache `k1`.
/// On success `buf.next` holds the new radii and `buf.k_next` their
/// validated speed field (reusable as the next step's first stage).
#[allow(clippy::too_many_arguments)]
fn rk4_step(
    space: &WarpedSpace,
    mode: FlowMode,
    guards: &Guards,
    theta: &[f64],
    cot: &[f64],
    radii: &[f64],
    k1: &[f64],
    dt: f64,
    buf: &mut StepBuffers,
) -> std::result::Result<RhsStats, Reject> {
    let n = radii.len();
    for i in 0..n {
        buf.tmp[i] = radii[i] + 0.5 * dt * k1[i];
    }
    rhs_into(space, mode, guards, theta, cot, &buf.tmp, &mut buf.k2)?;
    for i in 0..n {
        buf.tmp[i] = radii[i] + 0.5 * dt * buf.k2[i];
    }
    rhs_into(space, mode, guards, theta, cot, &buf.tmp, &mut buf.k3)?;
    for i in 0..n {
        buf.tmp[i] = radii[i] + dt * buf.k3[i];
    }
    rhs_into(space, mode, guards, theta, cot, &buf.tmp, &mut buf.k4)?;
    for i in 0..n {
        buf.next[i] =
            radii[i] + dt / 6.0 * (k1[i] + 2.0 * buf.k2[i] + 2.0 * buf.k3[i] + buf.k4[i]);
    }
    rhs_into(space, mode, guards, theta, cot, &buf.next, &mut buf.k_next)
}

/// One accepted explicit step of size at most `dt_target`, halving on
/// guard violations, at most `guards.max_halvings` times.
pub fn advance(
    state: &FlowState,
    mode: FlowMode,
    dt_target: f64,
    guards: &Guards,
) -> Result<FlowState> {
    if !(dt_target > 0.0) {
        return Err(Error::domain("dt_target must be positive"));
    }
    let surface = &state.surface;
    let theta = surface.theta();
    let cot = cot_table(theta);
    let mut k1 = vec![0.0; surface.node_count()];
    rhs_into(surface.space(), mode, guards, theta, &cot, surface.radii(), &mut k1)
        .map_err(reject_to_error)?;
    let mut buf = StepBuffers::new(surface.node_count());
    let mut dt = dt_target;
    let mut last_reject = None;
    for _ in 0..=guards.max_halvings {
        match rk4_step(
            surface.space(),
            mode,
            guards,
            theta,
            &cot,
            surface.radii(),
            &k1,
            dt,
            &mut buf,
        ) {
            Ok(_) => {
                let new_surface = GraphSurface::from_profile(
                    surface.space().clone(),
                    theta.to_vec(),
                    buf.next.clone(),
                )?;
                return Ok(FlowState { t: state.t + dt, surface: new_surface, dt_last: dt });
            }
            Err(rej) => {
                last_reject = Some(rej);
                dt *= 0.5;
            }
        }
    }
    Err(Error::StepCollapse {
        t: state.t,
        halvings: guards.max_halvings,
        reason: last_reject.map(|r| format!("{:?}", reject_to_error(r))).unwrap_or_default(),
    })
}

/// Exact radial flow: solves dr/dt = φ/(nφ′) with adaptive high-order
/// time integration; the area law ω_n φⁿ(r(t)) = eᵗ ω_n φⁿ(r₀) then
/// holds to integrator tolerance.
pub fn radial_flow_exact(space: &WarpedSpace, r0: f64, t: f64) -> Result<f64> {
    if !(r0 > space.a()) {
        return Err(Error::domain(format!("r0 = {r0} must exceed the horizon coordinate")));
    }
    if !(t >= 0.0) {
        return Err(Error::domain("flow time must be nonnegative"));
    }
    let n = space.n() as f64;
    ode::dopri5(
        |_, r| match space.eval(r) {
            Ok(w) if w.dphi > 0.0 => RhsOutcome::Value(w.phi / (n * w.dphi)),
            _ => RhsOutcome::OutOfDomain,
        },
        0.0,
        t,
        r0,
        1e-13,
        1e-13,
    )
    .map_err(|e| match e {
        ode::OdeFailure::DomainExit { t } => {
            Error::domain(format!("radial flow left the tabulated range near t = {t}"))
        }
        ode::OdeFailure::TooManySteps => Error::numerical("radial flow step budget exhausted"),
    })
}

/// One diagnostic sample along a flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub area: f64,
    /// Quermassintegral ∫H dμ + ∫ Ric(∂_r,∂_r) dv.
    pub w: f64,
    /// Scale-normalized Minkowski gap |Σ|^{−(n−1)/n}(𝒲 − ξ(|Σ|)).
    pub g: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub umb_dev_max: f64,
    pub u_min: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub q_bhw: Option<f64>,
}

/// Run metadata carried with every trace.
#[derive(Debug, Clone)]
pub struct RunMeta {
    pub space_spec: String,
    pub mode: FlowMode,
    pub grid: usize,
    pub c_cfl: f64,
    pub h_floor: f64,
    pub v_max: f64,
    pub dt_max: f64,
    pub cadence: f64,
    pub t_end: f64,
    pub termination: String,
    pub steps: u64,
    pub rejected_steps: u64,
}

/// Time series of diagnostics along one flow run.
#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub samples: Vec<TraceSample>,
    pub meta: RunMeta,
}

impl FlowTrace {
    pub fn has_bhw(&self) -> bool {
        self.samples.iter().any(|s| s.q_bhw.is_some())
    }

    /// CSV with pinned header
    /// `t,area,W,G,H_min,H_max,umb_dev_max,u_min,r_min,r_max[,Q_bhw]`.
    pub fn to_csv(&self) -> String {
        let bhw = self.has_bhw();
        let mut out = String::from("t,area,W,G,H_min,H_max,umb_dev_max,u_min,r_min,r_max");
        if bhw {
            out.push_str(",Q_bhw");
        }
        out.push('\n');
        for s in &self.samples {
            let cols = [
                s.t, s.area, s.w, s.g, s.h_min, s.h_max, s.umb_dev_max, s.u_min, s.r_min, s.r_max,
            ];
            let mut first = true;
            for c in cols {
                if !first {
                    out.push(',');
                }
                first = false;
                out.push_str(&fmt17(c));
            }
            if bhw {
                out.push(',');
                out.push_str(&fmt17(s.q_bhw.unwrap_or(f64::NAN)));
            }
            out.push('\n');
        }
        out
    }

    /// Parse samples back from `to_csv` output.
    pub fn samples_from_csv(text: &str) -> Result<Vec<TraceSample>> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::parse("empty trace csv"))?;
        let bhw = match header.trim() {
            "t,area,W,G,H_min,H_max,umb_dev_max,u_min,r_min,r_max" => false,
            "t,area,W,G,H_min,H_max,umb_dev_max,u_min,r_min,r_max,Q_bhw" => true,
            other => return Err(Error::parse(format!("unexpected trace header `{other}`"))),
        };
        let mut samples = Vec::new();
        for (ln, line) in lines.enumerate() {
            let vals: Vec<f64> = line
                .trim()
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::parse(format!("trace line {}: bad value `{f}`", ln + 2)))
                })
                .collect::<Result<_>>()?;
            let want = if bhw { 11 } else { 10 };
            if vals.len() != want {
                return Err(Error::parse(format!("trace line {}: need {want} fields", ln + 2)));
            }
            samples.push(TraceSample {
                t: vals[0],
                area: vals[1],
                w: vals[2],
                g: vals[3],
                h_min: vals[4],
                h_max: vals[5],
                umb_dev_max: vals[6],
                u_min: vals[7],
                r_min: vals[8],
                r_max: vals[9],
                q_bhw: if bhw { Some(vals[10]) } else { None },
            });
        }
        Ok(samples)
    }

    /// Deterministic metadata JSON (sorted keys, 17-digit floats).
    pub fn meta_json(&self) -> String {
        JsonValue::obj(vec![
            ("c_cfl", JsonValue::Float(self.meta.c_cfl)),
            ("cadence", JsonValue::Float(self.meta.cadence)),
            ("dt_max", JsonValue::Float(self.meta.dt_max)),
            ("grid", JsonValue::Int(self.meta.grid as i64)),
            ("h_floor", JsonValue::Float(self.meta.h_floor)),
            ("mode", JsonValue::Str(self.meta.mode.name().into())),
            ("rejected_steps", JsonValue::Int(self.meta.rejected_steps as i64)),
            ("space", JsonValue::Str(self.meta.space_spec.clone())),
            ("steps", JsonValue::Int(self.meta.steps as i64)),
            ("t_end", JsonValue::Float(self.meta.t_end)),
            ("termination", JsonValue::Str(self.meta.termination.clone())),
            ("v_max", JsonValue::Float(self.meta.v_max)),
        ])
        .to_json()
    }
}

/// Configuration for [`run_flow`].
#[derive(Debug, Clone)]
pub struct FlowRunConfig {
    pub mode: FlowMode,
    pub t_end: f64,
    pub cadence: f64,
    pub c_cfl: f64,
    pub dt_max: f64,
    pub guards: Guards,
    pub record_bhw: bool,
    pub profile_rows: usize,
}

impl FlowRunConfig {
    pub fn new(mode: FlowMode, t_end: f64, cadence: f64) -> Self {
        FlowRunConfig {
            mode,
            t_end,
            cadence,
            c_cfl: 0.2,
            dt_max: 0.02,
            guards: Guards::default(),
            record_bhw: false,
            profile_rows: 1025,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0) {
            return Err(Error::domain("t_end must be positive"));
        }
        if !(self.cadence > 0.0) || self.cadence > self.t_end {
            return Err(Error::domain("cadence must lie in (0, t_end]"));
        }
        if !(self.c_cfl > 0.0) || !(self.dt_max > 0.0) {
            return Err(Error::domain("c_cfl and dt_max must be positive"));
        }
        Ok(())
    }
}

/// ξ lookup support for a running flow, extending its own range when
/// the flow outruns it.
struct XiTable {
    space: Arc<WarpedSpace>,
    rows: usize,
    r_lo: f64,
    r_hi: f64,
    table: ProfileTable,
}

impl XiTable {
    fn build(space: Arc<WarpedSpace>, r_lo: f64, r_hi: f64, rows: usize) -> Result<Self> {
        let table = profiles::build_profile(space.clone(), r_lo, r_hi, rows, None)?;
        Ok(XiTable { space, rows, r_lo, r_hi, table })
    }

    fn xi(&mut self, area: f64) -> Result<f64> {
        for _ in 0..8 {
            match self.table.lookup(ProfileColumn::Xi, area) {
                Ok(v) => return Ok(v),
                Err(_) => {
                    let (lo, hi) = self.table.area_range();
                    if area > hi {
                        let cap = self.space.r_max() * (1.0 - 1e-12);
                        if self.r_hi >= cap {
                            return Err(Error::numerical(
                                "flow outran the tabulated warp range",
                            ));
                        }
                        self.r_hi = (self.r_hi * 2.0).min(cap);
                    } else if area < lo {
                        self.r_lo = (self.r_lo * 0.5).max(self.space.a());
                        if self.space.horizon_warp() == 0.0 {
                            self.r_lo = self.r_lo.max(1e-8);
                        }
                    } else {
                        return Err(Error::numerical("xi lookup failed inside table range"));
                    }
                    self.rows = (self.rows * 2).min(16_385);
                    self.table = profiles::build_profile(
                        self.space.clone(),
                        self.r_lo,
                        self.r_hi,
                        self.rows,
                        None,
                    )?;
                }
            }
        }
        Err(Error::numerical("xi table extension did not converge"))
    }
}

/// Integrate a flow with adaptive explicit steps, recording diagnostics
/// at the sample cadence. IMCF runs require strictly mean convex data.
pub fn run_flow(initial: &GraphSurface, cfg: &FlowRunConfig) -> Result<FlowTrace> {
    cfg.validate()?;
    let space = initial.space().clone();
    let theta: Vec<f64> = initial.theta().to_vec();
    let nodes = theta.len();
    let dtheta_sq = {
        let mut min_dt = f64::INFINITY;
        for w in theta.windows(2) {
            min_dt = min_dt.min(w[1] - w[0]);
        }
        min_dt * min_dt
    };

    let cot = cot_table(&theta);
    let mut radii = initial.radii().to_vec();
    let mut k1 = vec![0.0; nodes];
    let mut stats = rhs_into(&space, cfg.mode, &cfg.guards, &theta, &cot, &radii, &mut k1)
        .map_err(reject_to_error)?;
    if cfg.mode == FlowMode::Imcf && !(stats.h_min > 0.0) {
        return Err(Error::domain(format!(
            "IMCF requires strictly mean convex data, min H = {}",
            stats.h_min
        )));
    }

    // ξ table sized from the expected area growth.
    let mut xi_table = {
        let area0 = initial.area();
        let n = space.n() as f64;
        let r_lo = match cfg.mode {
            FlowMode::Imcf => space.a() + 0.5 * (initial.min_radius() - space.a()),
            FlowMode::Gmcf => space.a() + 0.25 * (initial.min_radius() - space.a()),
        };
        let r_lo = if space.horizon_warp() == 0.0 { r_lo.max(1e-8) } else { r_lo };
        let phi_cap = space.eval(space.r_max()).map(|w| w.phi)?;
        let phi_goal = match cfg.mode {
            FlowMode::Imcf => {
                ((area0 * (cfg.t_end.min(40.0)).exp() / space.omega_n()).powf(1.0 / n) * 1.2)
                    .min(phi_cap * (1.0 - 1e-12))
            }
            FlowMode::Gmcf => {
                (space.eval(initial.max_radius())?.phi * 1.5).min(phi_cap * (1.0 - 1e-12))
            }
        };
        let r_hi = space.radius_of_warp(phi_goal)?.max(r_lo * 1.5 + 1e-6);
        XiTable::build(space.clone(), r_lo, r_hi.min(space.r_max()), cfg.profile_rows)?
    };

    let mut samples: Vec<TraceSample> = Vec::new();
    let mut steps = 0u64;
    let mut rejected = 0u64;
    let mut t = 0.0f64;
    let mut dt_last = 0.0f64;

    let record = |samples: &mut Vec<TraceSample>,
                  xi_table: &mut XiTable,
                  t: f64,
                  radii: &[f64]|
     -> Result<()> {
        let surface = GraphSurface::from_profile(space.clone(), theta.clone(), radii.to_vec())?;
        let n = space.n() as f64;
        let area = surface.area();
        let w = surface.quermassintegral()?;
        let xi = xi_table.xi(area)?;
        let g = area.powf(-(n - 1.0) / n) * (w - xi);
        let mut h_min = f64::INFINITY;
        let mut h_max = f64::NEG_INFINITY;
        let mut u_min = f64::INFINITY;
        let mut umb = 0.0f64;
        for i in 0..surface.node_count() {
            let pg = surface.geometry_at(i);
            h_min = h_min.min(pg.h);
            h_max = h_max.max(pg.h);
            u_min = u_min.min(pg.u);
            umb = umb.max(pg.umb_dev);
        }
        let q_bhw = if cfg.record_bhw {
            Some(profiles::bhw_quantity(&surface)?)
        } else {
            None
        };
        let sample = TraceSample {
            t,
            area,
            w,
            g,
            h_min,
            h_max,
            umb_dev_max: umb,
            u_min,
            r_min: surface.min_radius(),
            r_max: surface.max_radius(),
            q_bhw,
        };
        if let Some(prev) = samples.last() {
            if !(t > prev.t) {
                return Err(Error::numerical("trace times must strictly increase"));
            }
            if cfg.mode == FlowMode::Imcf && !(area > prev.area) {
                return Err(Error::numerical(format!(
                    "IMCF area did not increase between t = {} and t = {t}",
                    prev.t
                )));
            }
        }
        samples.push(sample);
        Ok(())
    };

    record(&mut samples, &mut xi_table, 0.0, &radii)?;
    let mut next_sample = cfg.cadence.min(cfg.t_end);
    let mut buf = StepBuffers::new(nodes);

    let termination = loop {
        if t >= cfg.t_end - 1e-12 * cfg.t_end {
            break "t_end reached".to_string();
        }
        let dt_stab = 0.45 * dtheta_sq * stats.cfl_stab;
        let dt_speed = cfg.c_cfl * dtheta_sq * stats.cfl_speed;
        let mut dt = dt_stab.min(dt_speed).min(cfg.dt_max).min(next_sample - t);
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::numerical(format!("degenerate step size {dt} at t = {t}")));
        }
        let mut halvings = 0u32;
        stats = loop {
            match rk4_step(&space, cfg.mode, &cfg.guards, &theta, &cot, &radii, &k1, dt, &mut buf) {
                Ok(s) => break s,
                Err(rej) => {
                    rejected += 1;
                    halvings += 1;
                    if halvings > cfg.guards.max_halvings {
                        return Err(Error::StepCollapse {
                            t,
                            halvings,
                            reason: format!("{:?}", reject_to_error(rej)),
                        });
                    }
                    dt *= 0.5;
                }
            }
        };
        std::mem::swap(&mut radii, &mut buf.next);
        std::mem::swap(&mut k1, &mut buf.k_next);
        t += dt;
        dt_last = dt;
        steps += 1;
        if (t - next_sample).abs() <= 1e-12 * cfg.t_end.max(1.0) {
            t = next_sample;
            record(&mut samples, &mut xi_table, t, &radii)?;
            next_sample = (next_sample + cfg.cadence).min(cfg.t_end);
        }
    };
    if samples.last().map(|s| s.t < t).unwrap_or(true) {
        record(&mut samples, &mut xi_table, t, &radii)?;
    }

    let _ = dt_last;
    Ok(FlowTrace {
        samples,
        meta: RunMeta {
            space_spec: space.spec_string(),
            mode: cfg.mode,
            grid: nodes,
            c_cfl: cfg.c_cfl,
            h_floor: cfg.guards.h_floor,
            v_max: cfg.guards.v_max,
            dt_max: cfg.dt_max,
            cadence: cfg.cadence,
            t_end: cfg.t_end,
            termination,
            steps,
            rejected_steps: rejected,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    fn euclid() -> Arc<WarpedSpace> {
        Arc::new(WarpedSpace::euclidean(2).unwrap())
    }
    fn hyper() -> Arc<WarpedSpace> {
        Arc::new(WarpedSpace::hyperbolic(2).unwrap())
    }
    fn schw() -> Arc<WarpedSpace> {
        Arc::new(WarpedSpace::ds_schwarzschild(2, 2.0, 0.0).unwrap())
    }

    #[test]
    fn imcf_speed_on_radial_spheres() {
        let s = GraphSurface::radial_sphere(euclid(), 1.0, 65).unwrap();
        let rhs = imcf_rhs(&s).unwrap();
        for v in rhs {
            assert!(close(v, 0.5, 1e-14));
        }
        let sp = hyper();
        let s = GraphSurface::radial_sphere(sp.clone(), 1.0, 65).unwrap();
        let rhs = imcf_rhs(&s).unwrap();
        let expect = 1.0f64.sinh() / (2.0 * 1.0f64.cosh());
        for v in rhs {
            assert!(close(v, expect, 1e-14));
        }
    }

    #[test]
    fn imcf_rhs_matches_pointwise_geometry() {
        let s = GraphSurface::from_spec(euclid(), "cos_bump:r0=2,eps=0.1,k=2", 129).unwrap();
        let rhs = imcf_rhs(&s).unwrap();
        for i in 0..s.node_count() {
            let g = s.geometry_at(i);
            assert_eq!(rhs[i], g.v / g.h);
        }
    }

    #[test]
    fn imcf_rejects_mean_concave_node() {
        // deep neck: H < 0 somewhere
        let sp = euclid();
        let theta: Vec<f64> = (0..257).map(|i| PI * i as f64 / 256.0).collect();
        let radii: Vec<f64> = theta.iter().map(|&t| 1.0 + 0.45 * (3.0 * t).cos()).collect();
        let s = GraphSurface::from_profile(sp, theta, radii).unwrap();
        match imcf_rhs(&s) {
            Err(Error::SpeedUndefined { .. }) => {}
            other => panic!("expected speed-undefined, got {other:?}"),
        }
    }

    #[test]
    fn gmcf_stationary_on_radial_spheres() {
        for sp in [euclid(), hyper(), schw()] {
            let r0 = if sp.is_space_form() { 2.0 } else { 3.0 };
            let s = GraphSurface::radial_sphere(sp, r0, 65).unwrap();
            let rhs = gmcf_rhs(&s).unwrap();
            for v in rhs {
                assert!(v.abs() < 1e-12, "gmcf speed on sphere = {v:e}");
            }
        }
    }

    #[test]
    fn gmcf_step_leaves_radial_sphere_fixed() {
        let s = GraphSurface::radial_sphere(euclid(), 2.0, 129).unwrap();
        let state = FlowState::new(s);
        let next = advance(&state, FlowMode::Gmcf, 1e-3, &Guards::default()).unwrap();
        for (a, b) in state.surface.radii().iter().zip(next.surface.radii()) {
            assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn imcf_step_matches_radial_ode() {
        let sp = schw();
        let r0 = sp.radius_of_warp(3.0).unwrap();
        let s = GraphSurface::radial_sphere(sp.clone(), r0, 65).unwrap();
        let dt = 1e-3;
        let next = advance(&FlowState::new(s), FlowMode::Imcf, dt, &Guards::default()).unwrap();
        let exact = radial_flow_exact(&sp, r0, dt).unwrap();
        for &r in next.surface.radii() {
            assert!(
                (r - exact).abs() < 1e-14 * (1.0 + exact) + dt.powi(5),
                "r = {r} vs exact {exact}"
            );
        }
        assert_eq!(next.dt_last, dt);
    }

    #[test]
    fn radial_flow_exact_laws() {
        // separable closed forms in space forms
        let e = euclid();
        let r = radial_flow_exact(&e, 1.0, 2.0).unwrap();
        assert!(close(r, 1.0f64.exp(), 1e-10), "euclid r(2) = {r}");
        let h = hyper();
        let r = radial_flow_exact(&h, 1.0, 2.0).unwrap();
        assert!(close(r, (1.0f64.exp() * 1.0f64.sinh()).asinh(), 1e-10), "hyp r(2) = {r}");
        assert!(close(r, 1.8782301658116513, 1e-10));
        // t = 0 is the identity
        let sp = schw();
        assert_eq!(radial_flow_exact(&sp, 2.5, 0.0).unwrap(), 2.5);
    }

    #[test]
    fn radial_flow_area_law_tight() {
        for sp in [euclid(), hyper(), schw(), Arc::new(WarpedSpace::ds_schwarzschild(2, 2.0, 1.0).unwrap())] {
            let r0 = if sp.is_space_form() { 1.0 } else { sp.radius_of_warp(3.0).unwrap() };
            let phi0 = sp.eval(r0).unwrap().phi;
            for t in [0.5, 1.5, 3.0] {
                let r = radial_flow_exact(&sp, r0, t).unwrap();
                let phi = sp.eval(r).unwrap().phi;
                let lhs = (phi / phi0).powi(2);
                let rhs = t.exp();
                assert!(
                    (lhs / rhs - 1.0).abs() < 1e-10,
                    "{}: area law off by {:e}",
                    sp.spec_string(),
                    lhs / rhs - 1.0
                );
            }
        }
    }

    #[test]
    fn run_flow_radial_keeps_g_zero() {
        let sp = schw();
        let r0 = sp.radius_of_warp(3.0).unwrap();
        let s = GraphSurface::radial_sphere(sp, r0, 65).unwrap();
        let trace = run_flow(&s, &FlowRunConfig::new(FlowMode::Imcf, 1.0, 0.25)).unwrap();
        assert!(trace.samples.len() >= 5);
        for smp in &trace.samples {
            assert!(smp.g.abs() < 1e-6, "G({}) = {:e}", smp.t, smp.g);
            assert!(smp.umb_dev_max < 1e-10);
        }
        // IMCF area law along the trace
        let a0 = trace.samples[0].area;
        for smp in &trace.samples {
            assert!(((smp.area / a0).ln() - smp.t).abs() < 1e-6);
        }
    }

    #[test]
    fn run_flow_rejects_weakly_mean_convex_start() {
        let sp = euclid();
        let theta: Vec<f64> = (0..257).map(|i| PI * i as f64 / 256.0).collect();
        let radii: Vec<f64> = theta.iter().map(|&t| 1.0 + 0.45 * (3.0 * t).cos()).collect();
        let s = GraphSurface::from_profile(sp, theta, radii).unwrap();
        assert!(run_flow(&s, &FlowRunConfig::new(FlowMode::Imcf, 0.5, 0.1)).is_err());
    }

    #[test]
    fn trace_csv_round_trip() {
        let sp = euclid();
        let s = GraphSurface::radial_sphere(sp, 1.0, 65).unwrap();
        let mut cfg = FlowRunConfig::new(FlowMode::Imcf, 0.2, 0.1);
        cfg.record_bhw = true;
        let trace = run_flow(&s, &cfg).unwrap();
        let csv = trace.to_csv();
        let parsed = FlowTrace::samples_from_csv(&csv).unwrap();
        assert_eq!(parsed.len(), trace.samples.len());
        for (a, b) in parsed.iter().zip(&trace.samples) {
            assert_eq!(a.t.to_bits(), b.t.to_bits());
            assert_eq!(a.g.to_bits(), b.g.to_bits());
            assert_eq!(a.q_bhw.unwrap().to_bits(), b.q_bhw.unwrap().to_bits());
        }
    }

    #[test]
    fn advance_validates_dt() {
        let s = GraphSurface::radial_sphere(euclid(), 1.0, 65).unwrap();
        assert!(advance(&FlowState::new(s), FlowMode::Imcf, 0.0, &Guards::default()).is_err());
    }
}
