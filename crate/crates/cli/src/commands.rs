use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use scm_core::analysis::{
    decay_experiment, fundamental_diagram, parse_grid, ring_equilibrium_velocity, verify_theorems,
    TheoremReport,
};
use scm_core::analytic::{solve_passing, ScanOptions};
use scm_core::io::{
    load_scenario, render_diagram_svg, render_minmax_svg, render_timespace_svg, write_diagram,
    write_events, write_trace, Output, ScenarioConfig,
};
use scm_core::numeric::{build_two_region_ring, simulate as integrate, IntegratorConfig, SimTrace};
use scm_core::{ModelParams, Scenario};

use crate::{Failure, FigureFlags, RunFlags, Solver};

const DEFAULT_HORIZON: f64 = 100.0;

pub(crate) fn load(
    run: &RunFlags,
) -> Result<(ScenarioConfig, Scenario, IntegratorConfig), Failure> {
    let cfg = load_scenario(&run.config, !run.permissive)?;
    let scenario = cfg.build_scenario()?;
    let base = IntegratorConfig {
        horizon: DEFAULT_HORIZON,
        permissive: run.permissive,
        ..Default::default()
    };
    let mut ic = cfg.integrator_config(base);
    if let Some(h) = run.horizon {
        ic.horizon = h;
    }
    if let Some(dt) = run.dt {
        ic.dt = dt;
    }
    if let Some(k) = run.sample_every {
        ic.sample_every = k;
    }
    ic.validate()?;
    Ok((cfg, scenario, ic))
}

pub(crate) fn create(path: &Path) -> Result<std::io::BufWriter<File>, Failure> {
    File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Failure::validation(format!("cannot create {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| Failure::validation(format!("cannot write {}: {e}", path.display())))
}

/// `trace.csv` -> `trace.<suffix>`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    out.with_extension(suffix)
}

fn emit_trace(trace: &SimTrace, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => write_trace(trace, &mut create(path)?)?,
        None => write_trace(trace, &mut std::io::stdout().lock())?,
    }
    Ok(())
}

fn emit_figures(
    trace: &SimTrace,
    cfg: &ScenarioConfig,
    figures: &FigureFlags,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let timespace = figures.svg || cfg.outputs.contains(&Output::TimeSpaceSvg);
    let minmax = figures.svg || cfg.outputs.contains(&Output::MinMaxSvg);
    if !(timespace || minmax) {
        return Ok(());
    }
    let Some(out) = out else {
        return Err(Failure::validation(
            "SVG figures are written next to --out; give --out",
        ));
    };
    if timespace {
        write_text(
            &sibling(out, "timespace.svg"),
            &render_timespace_svg(trace, figures.every_kth)?,
        )?;
    }
    if minmax {
        write_text(&sibling(out, "minmax.svg"), &render_minmax_svg(trace)?)?;
    }
    Ok(())
}

pub fn simulate(
    run: &RunFlags,
    figures: &FigureFlags,
    out: Option<&Path>,
    events: Option<&Path>,
) -> Result<(), Failure> {
    let (cfg, scenario, ic) = load(run)?;
    let trace = integrate(&scenario, &ic)?;
    log::info!(
        "{} vehicles, {} samples, {} passing events",
        scenario.len(),
        trace.samples.len(),
        trace.events.len()
    );
    emit_trace(&trace, out)?;
    if let Some(path) = events {
        write_events(&trace.events, &mut create(path)?)?;
    }
    emit_figures(&trace, &cfg, figures, out)
}

fn analytic_trace(scenario: &Scenario, ic: &IntegratorConfig) -> Result<SimTrace, Failure> {
    let traj = solve_passing(scenario, ic.horizon, &ScanOptions::default())?;
    Ok(traj.to_trace(ic.dt * ic.sample_every as f64)?)
}

pub fn solve(
    run: &RunFlags,
    figures: &FigureFlags,
    out: Option<&Path>,
    events: Option<&Path>,
) -> Result<(), Failure> {
    let (cfg, scenario, ic) = load(run)?;
    scenario.check_initial_load(run.permissive)?;
    let trace = analytic_trace(&scenario, &ic)?;
    emit_trace(&trace, out)?;
    if let Some(path) = events {
        write_events(&trace.events, &mut create(path)?)?;
    }
    emit_figures(&trace, &cfg, figures, out)
}

pub fn diagram(
    kappa: f64,
    omega: f64,
    vmax: f64,
    length: f64,
    rho: &str,
    out: Option<&Path>,
    svg: bool,
) -> Result<(), Failure> {
    let params = ModelParams::new(kappa, omega)?;
    let grid = parse_grid(rho)?;
    let series = fundamental_diagram(&params, vmax, length, &grid)?;
    match out {
        Some(path) => write_diagram(&series, &mut create(path)?)?,
        None => write_diagram(&series, &mut std::io::stdout().lock())?,
    }
    if svg {
        let Some(out) = out else {
            return Err(Failure::validation(
                "--svg writes next to --out; give --out",
            ));
        };
        write_text(&sibling(out, "svg"), &render_diagram_svg(&series)?)?;
    }
    let peak = series.peak();
    log::info!("grid peak: rho = {} veh/m, q = {} veh/s", peak.rho, peak.q);
    Ok(())
}

pub fn stability(
    speeds: &[f64],
    kappa: f64,
    omega: f64,
    amplitude: f64,
    horizon: f64,
    dt: f64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let params = ModelParams::new(kappa, omega)?;
    let ic = IntegratorConfig {
        horizon,
        dt,
        ..Default::default()
    };
    ic.validate()?;
    let report = decay_experiment(speeds, &params, amplitude, &ic)?;
    let mut text = String::from("vehicle,lambda,fitted,relative_error\n");
    for (k, ((l, f), e)) in report
        .eigenvalues
        .iter()
        .zip(&report.fitted)
        .zip(&report.relative_error)
        .enumerate()
    {
        text.push_str(&format!("{},{l:.16e},{f:.16e},{e:.16e}\n", k + 1));
    }
    match out {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn verdict_shape(report: &TheoremReport) -> Vec<u8> {
    report
        .checks
        .iter()
        .map(|(_, v)| match v {
            scm_core::analysis::Verdict::Pass => 0,
            scm_core::analysis::Verdict::Fail(_) => 1,
            scm_core::analysis::Verdict::NotApplicable => 2,
        })
        .collect()
}

pub fn verify(run: &RunFlags, solver: Solver) -> Result<(), Failure> {
    let (_, scenario, ic) = load(run)?;
    let mut reports = Vec::new();
    if matches!(solver, Solver::Numeric | Solver::Both) {
        reports.push((
            "numeric",
            verify_theorems(&integrate(&scenario, &ic)?, &scenario),
        ));
    }
    if matches!(solver, Solver::Analytic | Solver::Both) {
        scenario.check_initial_load(run.permissive)?;
        reports.push((
            "analytic",
            verify_theorems(&analytic_trace(&scenario, &ic)?, &scenario),
        ));
    }
    let mut failed = false;
    for (name, report) in &reports {
        println!("[{name}]");
        print!("{report}");
        failed |= !report.all_pass();
    }
    if let [(_, a), (_, b)] = &reports[..] {
        if verdict_shape(a) != verdict_shape(b) {
            println!("numeric and analytic verdicts differ");
            failed = true;
        }
    }
    if failed {
        return Err(Failure {
            code: 3,
            message: format!("property verification failed for {}", run.config.display()),
        });
    }
    Ok(())
}

#[derive(Args, Debug, Clone)]
pub struct JamwaveArgs {
    #[arg(long, default_value_t = 10.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 10.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 6.0)]
    pub vmax: f64,
    /// Ring length (m).
    #[arg(long = "L", value_name = "L", default_value_t = 1000.0)]
    pub length: f64,
    /// Global density (veh/m).
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    /// Share of the ring covered by the jam.
    #[arg(long, default_value_t = 0.3)]
    pub fraction: f64,
    /// Density inside the jam (veh/m).
    #[arg(long, default_value_t = 1.03)]
    pub rho_jam: f64,
    #[arg(long, default_value_t = 500.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 100)]
    pub sample_every: usize,
    #[arg(long, default_value_t = 50)]
    pub every_kth: usize,
    /// Output directory for trace.csv and the figures.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: bool,
    #[arg(long)]
    pub permissive: bool,
}

/// Velocity spread `max v - min v` at the last sample.
pub fn final_spread(trace: &SimTrace) -> (f64, f64) {
    let v = trace.samples.velocities(trace.samples.len() - 1);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

pub fn jamwave(args: &JamwaveArgs) -> Result<(), Failure> {
    let params = ModelParams::new(args.kappa, args.omega)?;
    let scenario = build_two_region_ring(
        args.length,
        args.rho,
        args.fraction,
        args.rho_jam,
        args.vmax,
        params,
    )?;
    let ic = IntegratorConfig {
        dt: args.dt,
        horizon: args.horizon,
        sample_every: args.sample_every,
        permissive: args.permissive,
        ..Default::default()
    };
    let trace = integrate(&scenario, &ic)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::validation(format!("cannot create {}: {e}", args.out.display())))?;
    write_trace(&trace, &mut create(&args.out.join("trace.csv"))?)?;
    if args.svg {
        write_text(
            &args.out.join("timespace.svg"),
            &render_timespace_svg(&trace, args.every_kth)?,
        )?;
        write_text(&args.out.join("minmax.svg"), &render_minmax_svg(&trace)?)?;
    }
    let (lo, hi) = final_spread(&trace);
    let eq = ring_equilibrium_velocity(
        scenario.len() as f64 / args.length,
        &params,
        args.length,
        args.vmax,
    )?;
    let mut stdout = std::io::stdout().lock();
    let t_end = trace.samples.times[trace.samples.len() - 1];
    let _ = writeln!(stdout, "vehicles: {}", scenario.len());
    let _ = writeln!(
        stdout,
        "t = {t_end} s: min v = {lo:.9} m/s, max v = {hi:.9} m/s, spread = {:.3e} m/s",
        hi - lo
    );
    let _ = writeln!(
        stdout,
        "uniform-ring equilibrium velocity: {:.9} m/s",
        eq.v_eq
    );
    Ok(())
}
