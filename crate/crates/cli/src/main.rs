//! `dpre` — reproducible experiment harness for the directed-polymer
//! numerical laboratory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 resource refusal,
//! 4 statistical/battery failure.

mod config;
mod manifest;
mod runner;

use clap::{Parser, Subcommand};
use config::{config_hash, CellConfig, SweepConfig};
use dpre_core::analysis::{fit_alpha, fm_bound_from_results, run_ensemble, AlphaPoint, FractionalMomentConfig};
use dpre_core::env::{run_battery, GammaEnvSpec, TiltedEnvSpec};
use dpre_core::pinning::{estimate_a, rho_criterion, PinningParams, RenewalKernel};
use dpre_core::polymer::brute_force_z;
use dpre_core::{Error, Result};
use manifest::{write_atomic, CellStatus, RunManifest};
use runner::{ensemble_config, run_cell, AGGREGATE_HEADER};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dpre", version, about = "Directed polymers in heavy-tailed random environments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the environment self-check battery.
    EnvCheck {
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 2)]
        seed: u64,
        /// Write the JSON report here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one cell and emit replica records as JSON lines.
    Simulate {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        prune: Option<f64>,
        /// Also check every replica against the brute-force path sum.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep from a TOML config, resumable via the manifest.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the worker count from the config.
        #[arg(long)]
        workers: Option<usize>,
        /// Discard a manifest whose config hash differs.
        #[arg(long)]
        force: bool,
        /// Stop after completing this many pending cells (for testing
        /// interruption; resume by running again).
        #[arg(long)]
        max_cells: Option<usize>,
    },
    /// Export the collision/renewal kernel and evaluate the contraction
    /// constant rho.
    Pinning {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        beta: f64,
        /// Fractional-moment order; omit to export the kernel only.
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, default_value_t = 10)]
        cutoff: usize,
        #[arg(long, default_value_t = 200)]
        n_max: usize,
        #[arg(long, default_value_t = 400)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit a fractional-moment certificate for one cell.
    Certify {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        replicas: usize,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        /// Allow theta > 1/2 (no finite-variance guarantee).
        #[arg(long)]
        exploratory: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        prune: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the scaling exponent from an aggregate CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        gamma: f64,
    },
    /// Summarize a sweep output directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::Precondition(_) | Error::Divergent(_) => 2,
        Error::ResourceRefusal(_) => 3,
        Error::Numerical(_) | Error::InsufficientData(_) => 4,
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(format!("serialization: {e}")))
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::EnvCheck { gamma, samples, seed, out } => {
            let spec = GammaEnvSpec::new(gamma)?;
            let report = run_battery(&spec, samples, seed)?;
            let body = to_json(&report)?;
            println!("{body}");
            if let Some(path) = out {
                write_atomic(&path, &body)?;
            }
            if report.pass {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("environment battery failed");
                Ok(ExitCode::from(4))
            }
        }
        Command::Simulate { d, gamma, beta, n, replicas, seed, kappa, prune, oracle, out } => {
            let cell = CellConfig {
                d,
                gamma,
                beta,
                n,
                replicas,
                theta: None,
                kappa,
                prune_threshold: prune,
            };
            cell.validate()?;
            let (mut jsonl, summary) = run_cell(&cell, seed, 0)?;
            if oracle {
                let config = ensemble_config(&cell, seed, 0);
                for i in 0..replicas {
                    let params = config.params_for(i)?;
                    let z = brute_force_z(&params)?;
                    let dp = dpre_core::polymer::log_partition(&params)?;
                    let rel = (dp - z.ln()).abs();
                    jsonl.push_str(&format!(
                        "{{\"seed\":{},\"oracle_log_z\":{},\"dp_log_z\":{},\"abs_log_err\":{}}}\n",
                        params.field.seed(),
                        z.ln(),
                        dp,
                        rel
                    ));
                    if rel > 1e-10 {
                        return Err(Error::Numerical(format!(
                            "replica {i} disagrees with the enumeration oracle by {rel}"
                        )));
                    }
                }
            }
            match out {
                Some(path) => write_atomic(&path, &jsonl)?,
                None => print!("{jsonl}"),
            }
            eprintln!(
                "p_hat = {} +- {} ({})",
                summary.p_hat, summary.se, summary.diagnosis
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { config, out, workers, force, max_cells } => {
            cmd_sweep(&config, &out, workers, force, max_cells)
        }
        Command::Pinning { d, gamma, beta, q, cutoff, n_max, replicas, seed, out } => {
            fs::create_dir_all(&out)
                .map_err(|e| Error::Domain(format!("cannot create {out:?}: {e}")))?;
            let kernel = RenewalKernel::build(d, n_max)?;
            write_atomic(&out.join("kernel.csv"), &kernel.to_csv())?;
            eprintln!("kernel written: d={d}, n_max={n_max}");
            if let Some(q) = q {
                let spec = GammaEnvSpec::new(gamma)?;
                let tilted = TiltedEnvSpec::new(spec, beta)?;
                let params = PinningParams::new(q, beta, cutoff, tilted, d)?;
                let series = estimate_a(&params, &kernel, cutoff - 1, replicas, seed)?;
                let rho = rho_criterion(&params, &kernel, &series)?;
                let body = to_json(&rho)?;
                println!("{body}");
                write_atomic(&out.join("rho.json"), &body)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Certify { d, gamma, beta, n, replicas, theta, exploratory, seed, prune, out } => {
            let cell = CellConfig {
                d,
                gamma,
                beta,
                n,
                replicas,
                theta: Some(theta),
                kappa: None,
                prune_threshold: prune,
            };
            cell.validate()?;
            let config = ensemble_config(&cell, seed, 0);
            let results = run_ensemble(&config)?;
            let fm = FractionalMomentConfig {
                theta,
                certified: !exploratory,
                ..FractionalMomentConfig::default()
            };
            let bound = fm_bound_from_results(&config, &fm, &results)?;
            let body = to_json(&bound)?;
            println!("{body}");
            if let Some(path) = out {
                write_atomic(&path, &body)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit { input, d, gamma } => {
            let text = fs::read_to_string(&input)
                .map_err(|e| Error::Domain(format!("cannot read {input:?}: {e}")))?;
            let mut points = Vec::new();
            for (lineno, line) in text.lines().enumerate().skip(1) {
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() < 7 {
                    return Err(Error::Domain(format!(
                        "{input:?}:{}: expected aggregate CSV row",
                        lineno + 1
                    )));
                }
                let parse = |s: &str| -> Result<f64> {
                    s.parse()
                        .map_err(|e| Error::Domain(format!("{input:?}:{}: {e}", lineno + 1)))
                };
                let row_gamma = parse(fields[1])?;
                let row_d: usize = fields[2]
                    .parse()
                    .map_err(|e| Error::Domain(format!("{input:?}:{}: {e}", lineno + 1)))?;
                if row_d != d || (row_gamma - gamma).abs() > 1e-12 {
                    continue;
                }
                points.push(AlphaPoint {
                    beta: parse(fields[0])?,
                    p_hat: parse(fields[4])?,
                    se: parse(fields[5])?,
                });
            }
            let fit = fit_alpha(&points, d, gamma)?;
            println!("{}", to_json(&fit)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { dir } => {
            let manifest = RunManifest::load(&dir)?
                .ok_or_else(|| Error::Domain(format!("no manifest in {dir:?}")))?;
            println!("config hash: {}", manifest.config_hash);
            println!("tool version: {}", manifest.tool_version);
            let done = manifest
                .cells
                .iter()
                .filter(|c| c.status == CellStatus::Done)
                .count();
            println!("cells: {done}/{} done", manifest.cells.len());
            let agg = dir.join("aggregate.csv");
            if agg.exists() {
                let text = fs::read_to_string(&agg)
                    .map_err(|e| Error::Domain(format!("cannot read {agg:?}: {e}")))?;
                println!("aggregate rows:");
                for line in text.lines() {
                    println!("  {line}");
                }
            } else {
                println!("aggregate: not yet written");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_sweep(
    config_path: &PathBuf,
    out: &PathBuf,
    workers: Option<usize>,
    force: bool,
    max_cells: Option<usize>,
) -> Result<ExitCode> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| Error::Domain(format!("cannot read {config_path:?}: {e}")))?;
    let sweep = SweepConfig::parse(&text)?;
    let hash = config_hash(&text);
    fs::create_dir_all(out).map_err(|e| Error::Domain(format!("cannot create {out:?}: {e}")))?;
    let mut manifest = match RunManifest::load(out)? {
        Some(m) if m.config_hash == hash && m.cells.len() == sweep.cells.len() => m,
        Some(_) if force => RunManifest::new(&hash, sweep.cells.len()),
        Some(m) => {
            return Err(Error::Precondition(format!(
                "output directory holds a run with config hash {}..., which differs from {}... (pass --force to discard it)",
                &m.config_hash[..12],
                &hash[..12]
            )));
        }
        None => RunManifest::new(&hash, sweep.cells.len()),
    };
    manifest.save(out)?;
    let workers = workers.unwrap_or(sweep.workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::ResourceRefusal(format!("cannot build worker pool: {e}")))?;
    let mut processed = 0usize;
    for idx in 0..sweep.cells.len() {
        if manifest.cells[idx].status == CellStatus::Done {
            continue;
        }
        if let Some(m) = max_cells {
            if processed >= m {
                break;
            }
        }
        manifest.cells[idx].status = CellStatus::Running;
        manifest.save(out)?;
        let cell = &sweep.cells[idx];
        let (jsonl, summary) = pool.install(|| run_cell(cell, sweep.base_seed, idx))?;
        let jsonl_name = format!("cell_{idx:03}.jsonl");
        write_atomic(&out.join(&jsonl_name), &jsonl)?;
        write_atomic(
            &out.join(format!("cell_{idx:03}.summary.json")),
            &to_json(&summary)?,
        )?;
        manifest.cells[idx].status = CellStatus::Done;
        manifest.cells[idx].artifact = Some(jsonl_name);
        manifest.save(out)?;
        processed += 1;
        eprintln!(
            "cell {idx}: p_hat = {} +- {} ({})",
            summary.p_hat, summary.se, summary.diagnosis
        );
    }
    if manifest.all_done() {
        // Aggregate strictly in cell order from the persisted summaries,
        // so the bytes are independent of worker count and of how many
        // interruptions happened along the way.
        let mut agg = String::from(AGGREGATE_HEADER);
        for idx in 0..sweep.cells.len() {
            let path = out.join(format!("cell_{idx:03}.summary.json"));
            let body = fs::read_to_string(&path)
                .map_err(|e| Error::Domain(format!("missing summary {path:?}: {e}")))?;
            let summary: runner::CellSummary = serde_json::from_str(&body)
                .map_err(|e| Error::Domain(format!("corrupt summary {path:?}: {e}")))?;
            agg.push_str(&summary.to_csv_row(&hash));
        }
        write_atomic(&out.join("aggregate.csv"), &agg)?;
        eprintln!("sweep complete: {} cells", sweep.cells.len());
    } else {
        eprintln!(
            "sweep paused: {} of {} cells done (run again to resume)",
            manifest
                .cells
                .iter()
                .filter(|c| c.status == CellStatus::Done)
                .count(),
            sweep.cells.len()
        );
    }
    Ok(ExitCode::SUCCESS)
}
