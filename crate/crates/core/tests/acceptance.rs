//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line with the measured quantity next to its pinned tolerance.
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! lines.

use std::sync::{Arc, OnceLock};
use std::time::Instant;

use warpflow::flow::{self, FlowMode, FlowRunConfig, FlowState, FlowTrace};
use warpflow::profiles::{self, ProfileColumn};
use warpflow::space::{SampledWarp, WarpedSpace};
use warpflow::surface::{GraphSurface, NormalBump};
use warpflow::verify::{self, FamilySpec, VerdictStatus};

fn report(name: &str, ok: bool, detail: &str) -> bool {
    println!("criterion {name}: {} — {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn euclid() -> Arc<WarpedSpace> {
    static S: OnceLock<Arc<WarpedSpace>> = OnceLock::new();
    S.get_or_init(|| Arc::new(WarpedSpace::euclidean(2).unwrap())).clone()
}
fn hyper() -> Arc<WarpedSpace> {
    static S: OnceLock<Arc<WarpedSpace>> = OnceLock::new();
    S.get_or_init(|| Arc::new(WarpedSpace::hyperbolic(2).unwrap())).clone()
}
fn schw() -> Arc<WarpedSpace> {
    static S: OnceLock<Arc<WarpedSpace>> = OnceLock::new();
    S.get_or_init(|| Arc::new(WarpedSpace::ds_schwarzschild(2, 2.0, 0.0).unwrap())).clone()
}
fn ads() -> Arc<WarpedSpace> {
    static S: OnceLock<Arc<WarpedSpace>> = OnceLock::new();
    S.get_or_init(|| Arc::new(WarpedSpace::ds_schwarzschild(2, 2.0, 1.0).unwrap())).clone()
}

/// cos-bump ε = 0.15, k = 2 started at the radius with φ = 3,
/// 513 nodes, IMCF to t = 6 (the run shared by criteria 5, 6 and 10).
fn bump_trace(space: Arc<WarpedSpace>, record_bhw: bool) -> FlowTrace {
    let r0 = space.radius_of_warp(3.0).unwrap();
    let spec = format!("cos_bump:r0={r0},eps=0.15,k=2");
    let surface = GraphSurface::from_spec(space, &spec, 513).unwrap();
    let mut cfg = FlowRunConfig::new(FlowMode::Imcf, 6.0, 0.05);
    cfg.record_bhw = record_bhw;
    flow::run_flow(&surface, &cfg).unwrap()
}

fn schw_bump_trace() -> &'static FlowTrace {
    static T: OnceLock<FlowTrace> = OnceLock::new();
    T.get_or_init(|| bump_trace(schw(), false))
}
fn ads_bump_trace() -> &'static FlowTrace {
    static T: OnceLock<FlowTrace> = OnceLock::new();
    T.get_or_init(|| bump_trace(ads(), true))
}

#[test]
fn criterion_01_xi_closed_forms() {
    let started = Instant::now();
    let te = profiles::build_profile(euclid(), 0.25, 4.0, 512, None).unwrap();
    let mut worst_e = 0.0f64;
    for i in 0..te.rows() {
        let expect = 2.0 * (4.0 * std::f64::consts::PI).sqrt() * te.areas()[i].sqrt();
        worst_e = worst_e.max(((te.xi_column()[i] - expect) / expect).abs());
    }
    let th = profiles::build_profile(hyper(), 0.25, 3.0, 512, None).unwrap();
    let mut worst_h = 0.0f64;
    for i in 0..th.rows() {
        let r = th.radii()[i];
        let expect = 4.0 * std::f64::consts::PI * (r.sinh() * r.cosh() + r);
        worst_h = worst_h.max(((th.xi_column()[i] - expect) / expect).abs());
    }
    let elapsed = started.elapsed().as_secs_f64();
    let ok = worst_e <= 1e-8 && worst_h <= 1e-8 && elapsed < 1.0;
    assert!(report(
        "1 (closed-form xi)",
        ok,
        &format!(
            "euclidean rel err {worst_e:.2e} ≤ 1e-8, hyperbolic rel err {worst_h:.2e} ≤ 1e-8, {elapsed:.3}s < 1s"
        )
    ));
}

#[test]
fn criterion_02_ode_residual() {
    let spaces = [euclid(), hyper(), schw(), ads()];
    let started = Instant::now();
    let mut detail = String::new();
    let mut ok = true;
    for sp in spaces {
        let coarse = profiles::build_profile(sp.clone(), 0.5, 4.0, 256, None)
            .unwrap()
            .ode_residual()
            .unwrap();
        let fine = profiles::build_profile(sp.clone(), 0.5, 4.0, 512, None)
            .unwrap()
            .ode_residual()
            .unwrap();
        let halves = fine <= coarse / 2.0 || fine <= 1e-9;
        ok &= coarse <= 1e-6 && halves;
        detail.push_str(&format!("{}: {coarse:.2e}->{fine:.2e} ", sp.spec_string()));
    }
    let elapsed = started.elapsed().as_secs_f64();
    ok &= elapsed < 1.0;
    detail.push_str(&format!("(all ≤ 1e-6, halving; {elapsed:.3}s < 1s)"));
    assert!(report("2 (xi ODE residual)", ok, &detail));
}

#[test]
fn criterion_03_radial_area_law() {
    let started = Instant::now();
    let sp = schw();
    let r0 = sp.radius_of_warp(3.0).unwrap();
    let phi0 = 3.0f64;
    // exact ODE path at 1e-10
    let mut worst_exact = 0.0f64;
    for t in [0.5, 1.0, 2.0, 3.0] {
        let r = flow::radial_flow_exact(&sp, r0, t).unwrap();
        let phi = sp.eval(r).unwrap().phi;
        worst_exact = worst_exact.max(((phi / phi0).powi(2) / t.exp() - 1.0).abs());
    }
    // PDE path on 257 nodes at 1e-4
    let sphere = GraphSurface::radial_sphere(sp, r0, 257).unwrap();
    let trace = flow::run_flow(&sphere, &FlowRunConfig::new(FlowMode::Imcf, 3.0, 0.25)).unwrap();
    let a0 = trace.samples[0].area;
    let mut worst_pde = 0.0f64;
    for s in &trace.samples {
        worst_pde = worst_pde.max(((s.area / a0).ln() - s.t).abs());
    }
    let elapsed = started.elapsed().as_secs_f64();
    let ok = worst_exact <= 1e-10 && worst_pde <= 1e-4 && elapsed < 10.0;
    assert!(report(
        "3 (radial IMCF area law)",
        ok,
        &format!("exact path {worst_exact:.2e} ≤ 1e-10, PDE path {worst_pde:.2e} ≤ 1e-4, {elapsed:.2}s < 10s")
    ));
}

#[test]
fn criterion_04_radial_g_and_gmcf_fixed() {
    let started = Instant::now();
    let mut worst_g = 0.0f64;
    let mut worst_step = 0.0f64;
    for sp in [euclid(), hyper(), schw(), ads()] {
        let r0 = if sp.is_space_form() { 1.0 } else { sp.radius_of_warp(3.0).unwrap() };
        let sphere = GraphSurface::radial_sphere(sp.clone(), r0, 129).unwrap();
        let trace = flow::run_flow(&sphere, &FlowRunConfig::new(FlowMode::Imcf, 3.0, 0.5)).unwrap();
        for s in &trace.samples {
            worst_g = worst_g.max(s.g.abs());
        }
        let state = FlowState::new(GraphSurface::radial_sphere(sp, r0, 129).unwrap());
        let next = flow::advance(&state, FlowMode::Gmcf, 1e-3, &Default::default()).unwrap();
        for (a, b) in state.surface.radii().iter().zip(next.surface.radii()) {
            worst_step = worst_step.max((a - b).abs());
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let ok = worst_g <= 1e-6 && worst_step <= 1e-14 && elapsed < 10.0;
    assert!(report(
        "4 (radial G ≡ 0, GMCF stationary)",
        ok,
        &format!("max |G| {worst_g:.2e} ≤ 1e-6, max GMCF step drift {worst_step:.2e} ≤ 1e-14, {elapsed:.2}s < 10s")
    ));
}

#[test]
fn criterion_05_monotone_g_and_initial_inequality() {
    for (label, trace) in [("schwarzschild", schw_bump_trace()), ("ads-schwarzschild", ads_bump_trace())] {
        let v = verify::check_monotone_g(trace).unwrap();
        let g0 = trace.samples[0].g;
        let ok = v.pass && g0 >= -1e-6;
        assert!(report(
            &format!("5 (monotone G, {label})"),
            ok,
            &format!(
                "worst increment {:.2e} ≤ 1e-5 per unit time, G(0) = {g0:.3e} ≥ -1e-6, steps={}",
                -v.residual, trace.meta.steps
            )
        ));
    }
}

#[test]
fn criterion_06_asymptotics() {
    let ads_trace = ads_bump_trace();
    let last = ads_trace.samples.last().unwrap();
    let h_gap = (last.h_max - 2.0).abs().max((last.h_min - 2.0).abs());
    let fit_ads = verify::fit_asymptotics(ads_trace).unwrap();
    let fit_schw = verify::fit_asymptotics(schw_bump_trace()).unwrap();
    let slope_ads = fit_ads.umb_slope.unwrap_or(0.0);
    let slope_schw = fit_schw.umb_slope.unwrap_or(0.0);
    let ok = h_gap <= 1e-2 && slope_ads < 0.0 && slope_schw < 0.0;
    assert!(report(
        "6 (asymptotics)",
        ok,
        &format!(
            "max|H-2|(t=6) = {h_gap:.2e} ≤ 1e-2; umb log-slopes ads {slope_ads:.2} / schw {slope_schw:.2} < 0 (predicted exponent {:.2})",
            fit_ads.predicted_umb_exponent
        )
    ));
}

#[test]
fn criterion_07_mean_curvature_oracle() {
    let started = Instant::now();
    let bump = NormalBump::Bump {
        center: std::f64::consts::PI / 3.0,
        width: std::f64::consts::PI / 4.0,
    };
    let mut worst_rel = 0.0f64;
    let mut worst_order = f64::INFINITY;
    for sp in [euclid(), hyper(), schw(), ads()] {
        let r0 = if sp.is_space_form() { 2.0 } else { sp.radius_of_warp(3.0).unwrap() };
        for (eps, k) in [(0.12, 1), (0.15, 2), (0.08, 3)] {
            let spec = format!("cos_bump:r0={r0},eps={eps},k={k}");
            let mut errs = Vec::new();
            for nodes in [257usize, 513, 1025] {
                let s = GraphSurface::from_spec(sp.clone(), &spec, nodes).unwrap();
                let oracle = s.first_variation_oracle(&bump).unwrap();
                let formula = s.mean_curvature_pairing(&bump);
                errs.push(((formula - oracle) / oracle).abs());
            }
            worst_rel = worst_rel.max(errs[1]);
            // observed order over two doublings
            worst_order = worst_order.min(0.5 * (errs[0] / errs[2]).log2());
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let ok = worst_rel <= 1e-4 && worst_order >= 1.9 && elapsed < 30.0;
    assert!(report(
        "7 (mean-curvature oracle)",
        ok,
        &format!("worst rel err at 513 nodes {worst_rel:.2e} ≤ 1e-4, min observed order {worst_order:.2} ≥ 2, {elapsed:.1}s < 30s")
    ));
}

#[test]
fn criterion_08_isoperimetric_sweep() {
    let started = Instant::now();
    let sp = schw();
    let family = FamilySpec {
        r0: sp.radius_of_warp(3.0).unwrap(),
        eps_max: 0.2,
        k_max: 3,
        grid: 257,
    };
    let verdicts = verify::isoperimetric_sweep(sp, &family, 50).unwrap();
    let all_pass = verdicts.iter().all(|v| v.pass);
    let radial_eq = verdicts[0].residual.abs() <= 1e-7;
    let strict = verdicts[1..].iter().all(|v| v.residual >= 1e-10);
    let min_margin = verdicts[1..].iter().map(|v| v.residual).fold(f64::INFINITY, f64::min);
    let elapsed = started.elapsed().as_secs_f64();
    let ok = all_pass && radial_eq && strict && elapsed < 60.0;
    assert!(report(
        "8 (weighted isoperimetric sweep)",
        ok,
        &format!(
            "50/50 pass, radial residual {:.1e}, min non-radial margin {min_margin:.2e} ≥ 1e-10, {elapsed:.1}s < 60s",
            verdicts[0].residual
        )
    ));
}

#[test]
fn criterion_09_assumption_validator() {
    let spaces = [
        WarpedSpace::ds_schwarzschild(2, 2.0, 0.0).unwrap(),
        WarpedSpace::ds_schwarzschild(2, 2.0, 1.0).unwrap(),
        WarpedSpace::ds_schwarzschild(3, 1.0, 0.0).unwrap(),
        WarpedSpace::ds_schwarzschild(3, 1.0, 1.0).unwrap(),
    ];
    let counterexample = {
        let rows = 4001;
        let mut t = SampledWarp {
            r: Vec::new(),
            phi: Vec::new(),
            dphi: Vec::new(),
            d2phi: Vec::new(),
            d3phi: Vec::new(),
        };
        for i in 0..rows {
            let r = 1e-6 + (10.0 - 2e-6) * i as f64 / (rows - 1) as f64;
            t.r.push(r);
            t.phi.push(r + r.sin());
            t.dphi.push(1.0 + r.cos());
            t.d2phi.push(-r.sin());
            t.d3phi.push(-r.cos());
        }
        WarpedSpace::custom(2, 0.0, t, "r_plus_sin").unwrap()
    };
    let started = Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    for sp in &spaces {
        let rep = sp.validate_assumptions(50.0, 10_000).unwrap();
        ok &= rep.pass;
        detail.push_str(&format!("{} pass={} ", sp.spec_string(), rep.pass));
    }
    let rep = counterexample.validate_assumptions(10.0 - 1e-5, 10_000).unwrap();
    ok &= !rep.pass && !rep.pass_convexity;
    let elapsed = started.elapsed().as_secs_f64();
    ok &= elapsed < 1.0;
    detail.push_str(&format!(
        "counterexample fails condition (i) with margin {:.2}; {elapsed:.3}s < 1s",
        rep.margin_convexity
    ));
    assert!(report("9 (assumption validator)", ok, &detail));
}

#[test]
fn criterion_10_bhw_monotone() {
    let trace = ads_bump_trace();
    let v = verify::check_monotone_bhw(trace).unwrap();
    let q0 = trace.samples[0].q_bhw.unwrap();
    let q_end = trace.samples.last().unwrap().q_bhw.unwrap();
    let floor = 2.0 * (4.0 * std::f64::consts::PI).sqrt();
    let ok = v.pass && v.status == VerdictStatus::Pass;
    assert!(report(
        "10 (BHW functional monotone)",
        ok,
        &format!(
            "worst increment {:.2e} ≤ 1e-5 per unit time; Q: {q0:.6} → {q_end:.6} (radial-sphere constant {floor:.6})",
            -v.residual
        )
    ));
}
