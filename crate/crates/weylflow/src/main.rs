//! Command-line front end: one JSON config file drives every subcommand,
//! outputs are deterministic and carry the config hash.

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use weylflow::config::RunConfig;
use weylflow::curvature::{eta_bounds, sphere_h, theta0};
use weylflow::emit;
use weylflow::flow::{
    full_orbit_curve, run_flow, run_window, stable_dt, ConvergenceStatus, FlowConfig, FlowState,
    RadialProfile, Trajectory,
};
use weylflow::rootsys::{dir, Epsilon, WeightedRootSystem};
use weylflow::verify::{
    check_annulus, check_convexity, check_eta_sandwich, check_h_monotone,
    check_hs_evolution_residual, check_max_principle, check_ray_invariance, check_volume, Check,
    CheckStatus, VerifyReport,
};

const EXIT_CONFIG: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "weylflow",
    version,
    about = "Volume-preserving curvature flow for Weyl-invariant curves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config file describing the system and run parameters.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory; overrides out_dir from the config. Defaults to ".".
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Suppress progress output on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print the root system: roots, Weyl order, critical radius, chamber.
    Roots,
    /// Tabulate the sphere curvature over chamber directions.
    Sphere,
    /// Integrate the flow; emit trajectory tables, the orbit curve, and an SVG.
    Flow,
    /// Integrate the flow and run the verification battery.
    Verify,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let path = cli
        .config
        .as_ref()
        .context("--config <FILE> is required")?;
    let bytes =
        std::fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
    let hash = emit::config_hash(&bytes);
    let cfg = RunConfig::from_json_bytes(&bytes)?;
    let system = Arc::new(cfg.system.build()?);
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    match cli.command {
        Command::Roots => cmd_roots(&system, &hash, &out_dir, cli.quiet),
        Command::Sphere => cmd_sphere(&system, &cfg, &hash, &out_dir, cli.quiet),
        Command::Flow => cmd_flow(&system, &cfg, &hash, &out_dir, cli.quiet),
        Command::Verify => cmd_verify(&system, &cfg, &hash, &out_dir, cli.quiet),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn epsilon_int(system: &WeightedRootSystem) -> i8 {
    match system.epsilon() {
        Epsilon::Plus => 1,
        Epsilon::Minus => -1,
    }
}

fn system_json(system: &WeightedRootSystem) -> Value {
    json!({
        "family": system.family().label(),
        "rank": system.rank(),
        "epsilon": epsilon_int(system),
        "mults": system.mults(),
        "positive_roots": system
            .positive_roots()
            .iter()
            .map(|r| r.coeffs().to_vec())
            .collect::<Vec<_>>(),
    })
}

fn cmd_roots(
    system: &Arc<WeightedRootSystem>,
    hash: &str,
    out_dir: &Path,
    quiet: bool,
) -> Result<u8> {
    let weyl = system.weyl_group()?;
    let diagnostics = system.validate();
    let chamber = match system.chamber_arc() {
        Ok(arc) => json!({
            "theta_lo": arc.theta_lo,
            "theta_hi": arc.theta_hi,
            "width": arc.width(),
        }),
        Err(_) => Value::Null,
    };
    // Non-finite r_S (the noncompact case) serializes as null.
    let doc = json!({
        "config_sha256": hash,
        "system": system_json(system),
        "root_norms": system
            .positive_roots()
            .iter()
            .map(|r| r.norm())
            .collect::<Vec<_>>(),
        "orbits": system.orbits(),
        "highest_root": system.highest_root().coeffs().to_vec(),
        "r_s": system.r_s(),
        "weyl_order": weyl.order(),
        "chamber": chamber,
        "total_multiplicity": system.total_multiplicity(),
        "axioms": diagnostics,
        "all_axioms_pass": diagnostics.all_pass(),
    });
    let path = write_file(out_dir, "roots.json", &serde_json::to_string_pretty(&doc)?)?;
    if !quiet {
        println!(
            "{} ({} positive roots), |W| = {}, r_S = {}, wrote {}",
            system.family().tag(system.rank()),
            system.positive_roots().len(),
            weyl.order(),
            system.r_s(),
            path.display()
        );
    }
    Ok(0)
}

fn cmd_sphere(
    system: &Arc<WeightedRootSystem>,
    cfg: &RunConfig,
    hash: &str,
    out_dir: &Path,
    quiet: bool,
) -> Result<u8> {
    let r = cfg.sphere_radius(system)?;
    let arc = system.chamber_arc()?;
    let grid = cfg.sphere.grid();
    anyhow::ensure!(grid >= 2, "sphere.grid must be at least 2, got {grid}");
    let flat = (system.rank() as f64 - 1.0) / r;
    let mut rows = Vec::with_capacity(grid);
    for k in 0..grid {
        let theta = arc.theta_lo + arc.width() * k as f64 / (grid - 1) as f64;
        let sample = sphere_h(system, r, &dir(theta))?;
        rows.push(vec![
            emit::fmt_f64(theta),
            emit::fmt_f64(sample.h),
            emit::fmt_f64(sample.h - flat),
            sample.boundary_roots.len().to_string(),
        ]);
    }
    let csv = emit::csv_document(hash, &["theta", "h", "rho", "boundary_roots"], &rows);
    let csv_path = write_file(out_dir, "sphere.csv", &csv)?;

    let eta = eta_bounds(system, r, cfg.sphere.eta_samples())?;
    let eta_doc = json!({
        "config_sha256": hash,
        "samples": cfg.sphere.eta_samples(),
        "bounds": eta,
    });
    let eta_path = write_file(out_dir, "eta.json", &serde_json::to_string_pretty(&eta_doc)?)?;
    if !quiet {
        println!(
            "sphere table at r = {r}: eta in [{}, {}], wrote {} and {}",
            eta.eta_min,
            eta.eta_max,
            csv_path.display(),
            eta_path.display()
        );
    }
    Ok(0)
}

/// Radii of the two reference circles drawn with the orbit curve: the
/// initial sphere radius shrunk and stretched by the computed angular
/// spread of the curvature correction.
fn bounding_circles(system: &WeightedRootSystem, r0: f64) -> Result<(f64, f64)> {
    let t0 = theta0(system, r0, THETA0_GRID)?;
    Ok((r0 * t0.angle.cos(), r0 / t0.angle.cos()))
}

/// Odd node count: an even number of intervals puts a node exactly on the
/// arc midpoint, so extrema sitting on walls and bisector are not rounded
/// half a spacing outward.
const THETA0_GRID: usize = 1025;

fn trajectory_csv(hash: &str, trajectory: &Trajectory) -> String {
    let mut rows = Vec::new();
    for (si, state) in trajectory.states.iter().enumerate() {
        let profile = &state.profile;
        for i in 0..=profile.n() {
            rows.push(vec![
                si.to_string(),
                emit::fmt_f64(state.time),
                emit::fmt_f64(profile.thetas()[i]),
                emit::fmt_f64(profile.radii()[i]),
                emit::fmt_f64(state.kappa[i]),
                emit::fmt_f64(state.h_mod[i] - state.kappa[i]),
                emit::fmt_f64(state.h_mod[i]),
            ]);
        }
    }
    emit::csv_document(
        hash,
        &["sample", "time", "theta", "r", "kappa", "rho", "h_mod"],
        &rows,
    )
}

fn status_name(status: ConvergenceStatus) -> &'static str {
    match status {
        ConvergenceStatus::Converged => "converged",
        ConvergenceStatus::MaxSteps => "max_steps",
        ConvergenceStatus::BlowUp => "blow_up",
        ConvergenceStatus::LeftDomain => "left_domain",
    }
}

fn cmd_flow(
    system: &Arc<WeightedRootSystem>,
    cfg: &RunConfig,
    hash: &str,
    out_dir: &Path,
    quiet: bool,
) -> Result<u8> {
    let fc = cfg.flow.flow_config(system)?;
    let trajectory = run_flow(Arc::clone(system), &fc)?;

    write_file(out_dir, "trajectory.csv", &trajectory_csv(hash, &trajectory))?;
    let run_doc = emit::run_json(hash, system_json(system), &trajectory);
    write_file(out_dir, "run.json", &serde_json::to_string_pretty(&run_doc)?)?;

    let final_profile = &trajectory.last().profile;
    let orbit = full_orbit_curve(final_profile)?;
    let orbit_rows: Vec<Vec<String>> = orbit
        .iter()
        .map(|p| vec![emit::fmt_f64(p[0]), emit::fmt_f64(p[1])])
        .collect();
    write_file(
        out_dir,
        "orbit.csv",
        &emit::csv_document(hash, &["x", "y"], &orbit_rows),
    )?;

    let (r_in, r_out) = bounding_circles(system, fc.r0)?;
    write_file(out_dir, "curve.svg", &emit::svg_document(hash, &orbit, r_in, r_out))?;

    if !quiet {
        println!(
            "flow {} after {} steps: H_bar = {}, area drift = {:e}; wrote trajectory.csv, run.json, orbit.csv, curve.svg in {}",
            status_name(trajectory.status),
            trajectory.steps,
            trajectory.last().h_bar,
            (trajectory.last().area - trajectory.initial().area).abs()
                / trajectory.initial().area,
            out_dir.display()
        );
    }
    Ok(if trajectory.status == ConvergenceStatus::Converged {
        0
    } else {
        EXIT_NOT_CONVERGED
    })
}

/// The wall-even perturbed start used by the residual windows.
fn window_start(
    system: &Arc<WeightedRootSystem>,
    fc: &FlowConfig,
    n: usize,
    amplitude: f64,
) -> Result<FlowState> {
    let arc = system.chamber_arc()?;
    let r0 = fc.r0;
    let profile = RadialProfile::from_radii(
        Arc::clone(system),
        |t| {
            let x = (t - arc.theta_lo) / arc.width();
            r0 * (1.0 + amplitude * (2.0 * std::f64::consts::PI * x).cos())
        },
        n,
    )?
    .with_wall_tol(fc.wall_tolerance);
    Ok(FlowState::evaluate(profile, 0.0)?)
}

/// The names of the battery checks, used to emit placeholder rows when the
/// main run never converged.
const BATTERY: &[(&str, &str)] = &[
    (
        "annulus_theta0",
        "converged profile lies between the circles r cos(theta0) and r / cos(theta0)",
    ),
    (
        "annulus_chamber",
        "converged profile lies in the annulus drawn from the full chamber width",
    ),
    (
        "eta_sandwich",
        "limit curvature lies between the sphere-curvature extremes at the initial radius",
    ),
    ("convexity", "curvature stays strictly positive along the run"),
    ("volume", "enclosed area is conserved along the run"),
    (
        "max_principle",
        "modified curvature stays within its initial range along the run",
    ),
    (
        "ray_invariance",
        "extrema of the modified curvature stay on fixed rays",
    ),
    (
        "hs_evolution_residual",
        "discrete residual of the curvature evolution identity vanishes under refinement at first order or better",
    ),
    (
        "h_monotone",
        "stationary mean curvature strictly decreases in the initial radius",
    ),
];

fn cmd_verify(
    system: &Arc<WeightedRootSystem>,
    cfg: &RunConfig,
    hash: &str,
    out_dir: &Path,
    quiet: bool,
) -> Result<u8> {
    let fc = cfg.flow.flow_config(system)?;
    let trajectory = run_flow(Arc::clone(system), &fc)?;

    let mut report = VerifyReport::new();
    if trajectory.status == ConvergenceStatus::Converged {
        let last = trajectory.last();

        let t0 = theta0(system, fc.r0, THETA0_GRID)?;
        report.add(
            check_annulus(&last.profile, fc.r0, t0.angle)
                .with_name("annulus_theta0")
                .measure("theta0", t0.angle),
        );
        let width = system.chamber_arc()?.width();
        report.add(check_annulus(&last.profile, fc.r0, width).with_name("annulus_chamber"));

        report.add(check_eta_sandwich(
            system,
            fc.r0,
            last.h_bar,
            cfg.verify.eta_samples(),
        )?);
        report.add(check_convexity(&trajectory));
        report.add(check_volume(&trajectory));
        report.add(check_max_principle(&trajectory));
        report.add(check_ray_invariance(&trajectory)?);

        let steps = cfg.verify.window_steps() as usize;
        let amp = cfg.verify.window_amplitude();
        let coarse_start = window_start(system, &fc, fc.n, amp)?;
        let fine_start = window_start(system, &fc, 2 * fc.n, amp)?;
        let dt = stable_dt(&coarse_start.profile, fc.cfl);
        // The windows integrate at the configured cfl; if that step size is
        // unstable the residual cannot be measured, only left undecided.
        let windows = run_window(&coarse_start, dt, steps)
            .and_then(|coarse| Ok((coarse, run_window(&fine_start, dt / 4.0, steps)?)));
        match windows {
            Ok((coarse, fine)) => {
                report.add(check_hs_evolution_residual(system, &coarse, &fine)?)
            }
            Err(err) => {
                eprintln!("warning: residual window aborted: {err}");
                report.add(
                    Check::new(
                        "hs_evolution_residual",
                        "discrete residual of the curvature evolution identity vanishes under refinement at first order or better",
                        2.0,
                    )
                    .bound("min_ratio", 2.0)
                    .with_status(CheckStatus::Inconclusive),
                );
            }
        }

        let radii: Vec<f64> = cfg
            .verify
            .monotone_factors()
            .iter()
            .map(|f| f * fc.r0)
            .collect();
        report.add(check_h_monotone(Arc::clone(system), &radii, &fc)?);
    } else {
        // Every claim in the battery is about a converged flow; without one
        // there is nothing to measure.
        for (name, claim) in BATTERY {
            report.add(Check::new(name, claim, 0.0).with_status(CheckStatus::Inconclusive));
        }
    }
    report
        .validate()
        .map_err(|m| anyhow::anyhow!("malformed report: {m}"))?;

    let doc = json!({
        "config_sha256": hash,
        "status": trajectory.status,
        "steps": trajectory.steps,
        "checks": report,
    });
    let path = write_file(out_dir, "report.json", &serde_json::to_string_pretty(&doc)?)?;

    if !quiet {
        println!("flow {} after {} steps", status_name(trajectory.status), trajectory.steps);
        for (name, check) in report.iter() {
            let s = match check.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Inconclusive => "inconclusive",
                CheckStatus::Skipped => "skipped",
            };
            println!("  {name}: {s}");
        }
        println!("wrote {}", path.display());
    }

    if trajectory.status != ConvergenceStatus::Converged {
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(if report.any_failed() {
        EXIT_CHECK_FAILED
    } else {
        0
    })
}
