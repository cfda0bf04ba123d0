use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::Args;
use serde::Serialize;
use sha2::{Digest, Sha256};

use scm_core::io::{
    load_scenario, write_events, write_trace, FleetSize, ScenarioConfig, VehicleSource,
};
use scm_core::numeric::{simulate, IntegratorConfig};
use scm_core::ModelParams;

use crate::Failure;

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// Template scenario; each grid cell overrides some of its values.
    #[arg(long)]
    pub config: PathBuf,
    /// Capacity values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub kappa: Vec<f64>,
    /// Horizon lengths (m), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub omega: Vec<f64>,
    /// Generator densities (veh/m), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub rho: Vec<f64>,
    /// Output directory; one subdirectory per cell plus manifest.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub sample_every: Option<usize>,
    #[arg(long)]
    pub permissive: bool,
}

#[derive(Serialize, Debug)]
struct FileEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize, Debug)]
struct RunEntry {
    cell: String,
    params: BTreeMap<&'static str, f64>,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    events: Option<usize>,
    files: Vec<FileEntry>,
}

#[derive(Serialize, Debug)]
struct Manifest {
    /// The only field that differs between identical sweeps.
    generated_at_unix: u64,
    template: String,
    runs: Vec<RunEntry>,
}

type Cell = Vec<(&'static str, f64)>;

fn grid(args: &SweepArgs) -> Vec<Cell> {
    let mut cells: Vec<Cell> = vec![Vec::new()];
    for (name, values) in [
        ("kappa", &args.kappa),
        ("omega", &args.omega),
        ("rho", &args.rho),
    ] {
        if values.is_empty() {
            continue;
        }
        cells = cells
            .into_iter()
            .flat_map(|cell| {
                values.iter().map(move |&v| {
                    let mut c = cell.clone();
                    c.push((name, v));
                    c
                })
            })
            .collect();
    }
    cells
}

fn cell_name(cell: &Cell) -> String {
    if cell.is_empty() {
        return "base".to_string();
    }
    cell.iter()
        .map(|(k, v)| format!("{k}={v:?}"))
        .collect::<Vec<_>>()
        .join("_")
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn run_cell(
    template: &ScenarioConfig,
    cell: &Cell,
    ic: &IntegratorConfig,
    out: &Path,
) -> Result<(usize, Vec<FileEntry>), String> {
    let mut cfg = template.clone();
    for &(name, value) in cell {
        match name {
            "kappa" => cfg.params.kappa = value,
            "omega" => cfg.params.omega = value,
            "rho" => match &mut cfg.vehicles {
                VehicleSource::Generator(g) => g.size = FleetSize::Density(value),
                VehicleSource::Explicit(_) => {
                    return Err("rho needs a [generator] in the template".to_string())
                }
            },
            _ => unreachable!("grid axes are fixed"),
        }
    }
    ModelParams::new(cfg.params.kappa, cfg.params.omega).map_err(|e| e.to_string())?;
    let scenario = cfg.build_scenario().map_err(|e| e.to_string())?;
    let trace = simulate(&scenario, ic).map_err(|e| e.to_string())?;

    let dir_name = cell_name(cell);
    let dir = out.join(&dir_name);
    std::fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let mut files = Vec::new();
    let mut products: Vec<(&str, Vec<u8>)> = Vec::new();
    let mut buf = Vec::new();
    write_trace(&trace, &mut buf).map_err(|e| e.to_string())?;
    products.push(("trace.csv", buf));
    let mut buf = Vec::new();
    write_events(&trace.events, &mut buf).map_err(|e| e.to_string())?;
    products.push(("events.csv", buf));
    for (name, bytes) in products {
        let path = dir.join(name);
        std::fs::write(&path, &bytes)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        files.push(FileEntry {
            path: format!("{dir_name}/{name}"),
            sha256: sha256_hex(&bytes),
        });
    }
    Ok((trace.events.len(), files))
}

pub fn run(args: &SweepArgs) -> Result<(), Failure> {
    if args.parallel == 0 {
        return Err(Failure::validation("--parallel must be >= 1"));
    }
    let template = load_scenario(&args.config, !args.permissive)?;
    let base = IntegratorConfig {
        horizon: 100.0,
        permissive: args.permissive,
        ..Default::default()
    };
    let mut ic = template.integrator_config(base);
    if let Some(h) = args.horizon {
        ic.horizon = h;
    }
    if let Some(dt) = args.dt {
        ic.dt = dt;
    }
    if let Some(k) = args.sample_every {
        ic.sample_every = k;
    }
    ic.validate()?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::validation(format!("cannot create {}: {e}", args.out.display())))?;

    let cells = grid(args);
    let next = AtomicUsize::new(0);
    let workers = args.parallel.min(cells.len()).max(1);
    let mut results: Vec<(usize, RunEntry)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let k = next.fetch_add(1, Ordering::Relaxed);
                        let Some(cell) = cells.get(k) else { break };
                        let params = cell.iter().copied().collect();
                        let entry = match run_cell(&template, cell, &ic, &args.out) {
                            Ok((events, files)) => RunEntry {
                                cell: cell_name(cell),
                                params,
                                status: "ok",
                                error: None,
                                events: Some(events),
                                files,
                            },
                            Err(error) => {
                                log::warn!("cell {} failed: {error}", cell_name(cell));
                                RunEntry {
                                    cell: cell_name(cell),
                                    params,
                                    status: "failed",
                                    error: Some(error),
                                    events: None,
                                    files: Vec::new(),
                                }
                            }
                        };
                        done.push((k, entry));
                    }
                    done
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    results.sort_by_key(|(k, _)| *k);
    let failed = results.iter().filter(|(_, e)| e.status == "failed").count();
    let manifest = Manifest {
        generated_at_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        template: args.config.display().to_string(),
        runs: results.into_iter().map(|(_, e)| e).collect(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    let path = args.out.join("manifest.json");
    std::fs::write(&path, text + "\n")
        .map_err(|e| Failure::validation(format!("cannot write {}: {e}", path.display())))?;
    eprintln!(
        "{} cells, {failed} failed; manifest at {}",
        manifest.runs.len(),
        path.display()
    );
    Ok(())
}
