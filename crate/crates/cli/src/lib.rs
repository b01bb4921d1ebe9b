//! Command-line front end: parses run configurations, orchestrates
//! profile builds, flows and checks, and emits CSV traces plus JSON
//! reports.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage/config
//! error, 3 numerical failure or I/O error, 4 inconclusive-only.

pub mod config;
pub mod report;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use report::{Report, RunStats};
use warpflow::flow::{self, FlowMode, FlowRunConfig};
use warpflow::fmt::JsonValue;
use warpflow::profiles;
use warpflow::space::WarpedSpace;
use warpflow::surface::{GraphSurface, VolumeWeight};
use warpflow::verify::{self, FamilySpec, Verdict};
use warpflow::Error;

#[derive(Parser, Debug)]
#[command(
    name = "warpflow",
    version,
    about = "Inverse mean curvature flow and Minkowski-type inequality checks in warped cylinders"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Ambient space utilities
    Space {
        #[command(subcommand)]
        cmd: SpaceCmd,
    },
    /// Emit the radial-sphere profile table as CSV
    Profile(ProfileArgs),
    /// Integrate a flow described by a config file
    Flow(FlowArgs),
    /// Run a single inequality check
    Check {
        #[command(subcommand)]
        cmd: CheckCmd,
    },
    /// Brute-force competitor sweeps
    Sweep {
        #[command(subcommand)]
        cmd: SweepCmd,
    },
    /// Report post-processing
    Report {
        #[command(subcommand)]
        cmd: ReportCmd,
    },
}

#[derive(Subcommand, Debug)]
enum SpaceCmd {
    /// Check the admissibility conditions on a sample grid
    Validate {
        /// Space spec, e.g. dss:n=2,m=2,kappa=0
        #[arg(long)]
        space: String,
        /// Upper end of the validation grid
        #[arg(long)]
        rmax: f64,
        /// Grid sample count
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value = "./out")]
        out_dir: PathBuf,
    },
}

#[derive(Args, Debug)]
struct ProfileArgs {
    #[arg(long)]
    space: String,
    #[arg(long)]
    rlo: f64,
    #[arg(long)]
    rhi: f64,
    #[arg(long, default_value_t = 512)]
    rows: usize,
    /// Optional weight column: one | weighted_iso
    #[arg(long)]
    weight: Option<String>,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's out_dir
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum CheckCmd {
    /// Quermassintegral vs the calibration function at equal area
    Minkowski {
        #[arg(long)]
        space: String,
        /// Surface spec (sphere:…, cos_bump:…) or file=<csv>
        #[arg(long)]
        surface: String,
        #[arg(long, default_value_t = 513)]
        grid: usize,
        #[arg(long, default_value = "./out")]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum SweepCmd {
    /// Weighted isoperimetric comparison over a cos-bump family
    Isoperimetric {
        #[arg(long)]
        space: String,
        /// Base radius of the family (alternatively --phi0)
        #[arg(long)]
        r0: Option<f64>,
        /// Base warp value; converted through the inverse warp
        #[arg(long)]
        phi0: Option<f64>,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[arg(long, default_value_t = 3)]
        kmax: u32,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 257)]
        grid: usize,
        /// Parallelize independent samples over this many threads
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value = "./out")]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum ReportCmd {
    /// Merge several report JSON files into one
    Merge {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Entry point used by the binary and by integration tests. `args`
/// excludes the program name.
pub fn run_command(args: &[String]) -> i32 {
    let mut argv = vec!["warpflow".to_string()];
    argv.extend_from_slice(args);
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message (also used for --help/--version)
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(CmdError { error, during_setup }) => {
            let kind = match (&error, during_setup) {
                (Error::Io(_), _) => "io",
                (_, true) => "config",
                (_, false) => "numerical",
            };
            eprintln!("error kind={kind} msg={:?}", error.to_string());
            if during_setup && !matches!(error, Error::Io(_)) {
                2
            } else {
                3
            }
        }
    }
}

struct CmdError {
    error: Error,
    during_setup: bool,
}

trait StageExt<T> {
    fn setup_stage(self) -> Result<T, CmdError>;
    fn run_stage(self) -> Result<T, CmdError>;
}

impl<T> StageExt<T> for Result<T, Error> {
    fn setup_stage(self) -> Result<T, CmdError> {
        self.map_err(|error| CmdError { error, during_setup: true })
    }
    fn run_stage(self) -> Result<T, CmdError> {
        self.map_err(|error| CmdError { error, during_setup: false })
    }
}

fn dispatch(cli: Cli) -> Result<i32, CmdError> {
    match cli.cmd {
        Cmd::Space { cmd } => match cmd {
            SpaceCmd::Validate { space, rmax, samples, out_dir } => {
                cmd_space_validate(&space, rmax, samples, &out_dir)
            }
        },
        Cmd::Profile(a) => cmd_profile(a),
        Cmd::Flow(a) => cmd_flow(a),
        Cmd::Check { cmd } => match cmd {
            CheckCmd::Minkowski { space, surface, grid, out_dir } => {
                cmd_check_minkowski(&space, &surface, grid, &out_dir)
            }
        },
        Cmd::Sweep { cmd } => match cmd {
            SweepCmd::Isoperimetric {
                space,
                r0,
                phi0,
                eps,
                kmax,
                count,
                grid,
                jobs,
                out_dir,
            } => cmd_sweep(&space, r0, phi0, eps, kmax, count, grid, jobs, &out_dir),
        },
        Cmd::Report { cmd } => match cmd {
            ReportCmd::Merge { inputs, out } => cmd_report_merge(&inputs, &out),
        },
    }
}

fn ensure_out_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn build_space(spec: &str) -> Result<Arc<WarpedSpace>, Error> {
    Ok(Arc::new(WarpedSpace::from_spec(spec)?))
}

fn build_surface(space: Arc<WarpedSpace>, spec: &str, grid: usize) -> Result<GraphSurface, Error> {
    if let Some(path) = spec.strip_prefix("file=") {
        let text = std::fs::read_to_string(path)?;
        GraphSurface::from_profile_csv(space, &text)
    } else {
        GraphSurface::from_spec(space, spec, grid)
    }
}

fn cmd_space_validate(
    spec: &str,
    rmax: f64,
    samples: usize,
    out_dir: &Path,
) -> Result<i32, CmdError> {
    let space = build_space(spec).setup_stage()?;
    ensure_out_dir(out_dir).run_stage()?;
    let rep = space.validate_assumptions(rmax, samples).run_stage()?;
    let decimate = |vals: &[f64]| -> JsonValue {
        let stride = (vals.len() / 100).max(1);
        JsonValue::Array(vals.iter().step_by(stride).map(|&v| JsonValue::Float(v)).collect())
    };
    let detail = JsonValue::obj(vec![
        ("a", JsonValue::Float(rep.a)),
        ("margin_convexity", JsonValue::Float(rep.margin_convexity)),
        ("margin_gradient", JsonValue::Float(rep.margin_gradient)),
        ("margin_ricci_monotone", JsonValue::Float(rep.margin_ricci_monotone)),
        ("pass", JsonValue::Bool(rep.pass)),
        ("pass_convexity", JsonValue::Bool(rep.pass_convexity)),
        ("pass_gradient", JsonValue::Bool(rep.pass_gradient)),
        ("pass_ricci_monotone", JsonValue::Bool(rep.pass_ricci_monotone)),
        ("q1", decimate(&rep.q1)),
        ("q1_monotone_violations", JsonValue::Int(rep.q1_monotone_violations as i64)),
        ("q2", decimate(&rep.q2)),
        ("q2_monotone_violations", JsonValue::Int(rep.q2_monotone_violations as i64)),
        ("q3", decimate(&rep.q3)),
        ("q3_monotone_violations", JsonValue::Int(rep.q3_monotone_violations as i64)),
        ("r_max", JsonValue::Float(rep.r_max)),
        ("samples", JsonValue::Int(rep.samples as i64)),
        ("space", JsonValue::Str(space.spec_string())),
    ]);
    std::fs::write(out_dir.join("assumption_report.json"), detail.to_json() + "\n")
        .map_err(Error::from)
        .run_stage()?;

    let mut config = BTreeMap::new();
    config.insert("space".into(), spec.to_string());
    config.insert("rmax".into(), format!("{rmax}"));
    config.insert("samples".into(), format!("{samples}"));
    let mut rpt = Report::new(config);
    let worst = rep
        .margin_convexity
        .min(rep.margin_gradient)
        .min(rep.margin_ricci_monotone);
    rpt.push_verdict(Verdict::conclusive(
        "assumptions",
        worst,
        1e-10,
        format!(
            "margins: convexity {:.3e}, gradient {:.3e}, ricci-monotone {:.3e} on ({}, {}] x {}",
            rep.margin_convexity, rep.margin_gradient, rep.margin_ricci_monotone, rep.a, rep.r_max, rep.samples
        ),
    ))
    .run_stage()?;
    rpt.emit(&out_dir.join("space_validate_report.json")).run_stage()?;
    for v in &rpt.verdicts {
        println!("{}: {} ({})", v.name, v.status.as_str(), v.context);
    }
    Ok(rpt.exit_code())
}

fn cmd_profile(a: ProfileArgs) -> Result<i32, CmdError> {
    let space = build_space(&a.space).setup_stage()?;
    let weight = a
        .weight
        .as_deref()
        .map(VolumeWeight::parse)
        .transpose()
        .setup_stage()?;
    let table = profiles::build_profile(space, a.rlo, a.rhi, a.rows, weight).run_stage()?;
    let csv = table.to_csv();
    match &a.out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent).map_err(Error::from).run_stage()?;
                }
            }
            std::fs::write(path, csv).map_err(Error::from).run_stage()?;
        }
        None => print!("{csv}"),
    }
    Ok(0)
}

fn cmd_flow(a: FlowArgs) -> Result<i32, CmdError> {
    let text = std::fs::read_to_string(&a.config).map_err(Error::from).setup_stage()?;
    let cfg = config::parse_run_config(&text).setup_stage()?;
    let out_dir = a
        .out_dir
        .clone()
        .or_else(|| cfg.out_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("./out"));
    let space = build_space(&cfg.space).setup_stage()?;
    let initial = build_surface(space.clone(), &cfg.initial, cfg.grid).setup_stage()?;
    ensure_out_dir(&out_dir).run_stage()?;

    let mut run_cfg = FlowRunConfig::new(cfg.mode, cfg.t_end, cfg.cadence);
    run_cfg.c_cfl = cfg.c_cfl;
    run_cfg.dt_max = cfg.dt_max;
    run_cfg.guards.h_floor = cfg.h_floor;
    run_cfg.guards.v_max = cfg.v_max;
    run_cfg.record_bhw = cfg.record_bhw;
    run_cfg.profile_rows = cfg.profile_rows;

    let started = std::time::Instant::now();
    let trace = flow::run_flow(&initial, &run_cfg).run_stage()?;
    let wall = started.elapsed().as_secs_f64();

    std::fs::write(out_dir.join("trace.csv"), trace.to_csv())
        .map_err(Error::from)
        .run_stage()?;
    std::fs::write(out_dir.join("run_meta.json"), trace.meta_json() + "\n")
        .map_err(Error::from)
        .run_stage()?;

    let mut rpt = Report::new(cfg.echo.clone());
    rpt.trace_files.push("trace.csv".into());
    rpt.stats = RunStats {
        steps: trace.meta.steps,
        rejected_steps: trace.meta.rejected_steps,
        samples: trace.samples.len(),
    };
    let override_tol = |v: Verdict, tol: Option<f64>| -> Verdict {
        match tol {
            None => v,
            Some(t) => Verdict::conclusive(v.name, v.residual, t, v.context),
        }
    };
    match cfg.mode {
        FlowMode::Imcf => {
            rpt.push_verdict(override_tol(
                verify::check_area_law(&trace).run_stage()?,
                cfg.tol_area_law,
            ))
            .run_stage()?;
            rpt.push_verdict(override_tol(
                verify::check_monotone_g(&trace).run_stage()?,
                cfg.tol_monotone_g,
            ))
            .run_stage()?;
            let limit = verify::check_limit_g(&trace).run_stage()?;
            let limit = match cfg.tol_limit_g {
                Some(t) if limit.status != warpflow::VerdictStatus::Inconclusive => {
                    Verdict::conclusive(limit.name, limit.residual, t, limit.context)
                }
                _ => limit,
            };
            rpt.push_verdict(limit).run_stage()?;
            rpt.push_verdict(verify::check_minkowski_auto(&initial).run_stage()?)
                .run_stage()?;
            if trace.has_bhw() {
                rpt.push_verdict(verify::check_monotone_bhw(&trace).run_stage()?)
                    .run_stage()?;
            }
        }
        FlowMode::Gmcf => {
            rpt.push_verdict(verify::check_gmcf_area_monotone(&trace).run_stage()?)
                .run_stage()?;
        }
    }
    rpt.emit(&out_dir.join("report.json")).run_stage()?;
    eprintln!(
        "flow: {} steps ({} rejected), {} samples, wall {wall:.2}s -> {}",
        trace.meta.steps,
        trace.meta.rejected_steps,
        trace.samples.len(),
        out_dir.display()
    );
    for v in &rpt.verdicts {
        println!("{}: {} (residual {:.6e}, tol {:.1e})", v.name, v.status.as_str(), v.residual, v.tolerance);
    }
    Ok(rpt.exit_code())
}

fn cmd_check_minkowski(
    space_spec: &str,
    surface_spec: &str,
    grid: usize,
    out_dir: &Path,
) -> Result<i32, CmdError> {
    if grid < 65 || grid % 2 == 0 {
        return Err(Error::parse(format!("grid must be an odd integer >= 65, got {grid}")))
            .setup_stage();
    }
    let space = build_space(space_spec).setup_stage()?;
    let surface = build_surface(space, surface_spec, grid).setup_stage()?;
    ensure_out_dir(out_dir).run_stage()?;
    let verdict = verify::check_minkowski_auto(&surface).run_stage()?;
    let mut config = BTreeMap::new();
    config.insert("space".into(), space_spec.to_string());
    config.insert("surface".into(), surface_spec.to_string());
    config.insert("grid".into(), format!("{grid}"));
    let mut rpt = Report::new(config);
    println!(
        "minkowski: {} (residual {:.6e}, tol {:.3e}) {}",
        verdict.status.as_str(),
        verdict.residual,
        verdict.tolerance,
        verdict.context
    );
    rpt.push_verdict(verdict).run_stage()?;
    rpt.emit(&out_dir.join("check_minkowski_report.json")).run_stage()?;
    Ok(rpt.exit_code())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    space_spec: &str,
    r0: Option<f64>,
    phi0: Option<f64>,
    eps: f64,
    kmax: u32,
    count: usize,
    grid: usize,
    jobs: usize,
    out_dir: &Path,
) -> Result<i32, CmdError> {
    if grid < 65 || grid % 2 == 0 {
        return Err(Error::parse(format!("grid must be an odd integer >= 65, got {grid}")))
            .setup_stage();
    }
    let space = build_space(space_spec).setup_stage()?;
    let r0 = match (r0, phi0) {
        (Some(r), None) => r,
        (None, Some(p)) => space.radius_of_warp(p).setup_stage()?,
        _ => {
            return Err(Error::parse("give exactly one of --r0 or --phi0")).setup_stage();
        }
    };
    let family = FamilySpec { r0, eps_max: eps, k_max: kmax, grid };
    ensure_out_dir(out_dir).run_stage()?;

    let verdicts: Vec<Verdict> = if jobs <= 1 {
        verify::isoperimetric_sweep(space, &family, count).run_stage()?
    } else {
        let a = space.a();
        let r_in = family.r0 * (1.0 - family.eps_max);
        if !(r_in > a) {
            return Err(Error::domain("family dips below the horizon")).setup_stage();
        }
        let mut r_lo = a + 0.5 * (r_in - a);
        if space.horizon_warp() == 0.0 {
            r_lo = r_lo.max(1e-8);
        }
        let r_hi = (family.r0 * (1.0 + family.eps_max) * 1.4).min(space.r_max());
        let table =
            profiles::build_profile(space.clone(), r_lo, r_hi, 1025, None).run_stage()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::numerical(format!("thread pool: {e}")))
            .run_stage()?;
        pool.install(|| {
            (0..count)
                .into_par_iter()
                .map(|j| verify::sweep_member_verdict(&space, &family, &table, j, count))
                .collect::<Result<Vec<_>, _>>()
        })
        .run_stage()?
    };

    let mut config = BTreeMap::new();
    config.insert("space".into(), space_spec.to_string());
    config.insert("r0".into(), format!("{r0}"));
    config.insert("eps".into(), format!("{eps}"));
    config.insert("kmax".into(), format!("{kmax}"));
    config.insert("count".into(), format!("{count}"));
    config.insert("grid".into(), format!("{grid}"));
    let mut rpt = Report::new(config);
    let mut worst = f64::INFINITY;
    for v in verdicts {
        worst = worst.min(v.residual);
        rpt.push_verdict(v).run_stage()?;
    }
    rpt.emit(&out_dir.join("sweep_report.json")).run_stage()?;
    println!(
        "isoperimetric sweep: {}/{} pass, worst margin {worst:.3e}",
        rpt.verdicts.iter().filter(|v| v.pass).count(),
        rpt.verdicts.len()
    );
    Ok(rpt.exit_code())
}

fn cmd_report_merge(inputs: &[PathBuf], out: &Path) -> Result<i32, CmdError> {
    let merged = report::merge_reports(inputs).setup_stage()?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(Error::from).run_stage()?;
        }
    }
    merged.emit(out).run_stage()?;
    println!(
        "merged {} reports: {} checks, pass={}",
        inputs.len(),
        merged.verdicts.len(),
        merged.all_pass()
    );
    Ok(merged.exit_code())
}
