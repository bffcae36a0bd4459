use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hjd::cli::run::{build_grid, load_density};
use hjd::cli::{read_field, wasserstein_prox, write_field, FieldFormat, FieldMeta, Quantity, RunConfig};
use hjd::{HjdError, Result};

#[derive(Parser)]
#[command(name = "hjd", version, about = "Hamilton-Jacobi equations in density space via the Hopf formula")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a configured scenario and write snapshots and a report.
    Solve { config: PathBuf },
    /// Quadratic Wasserstein proximal map of `rho1` relative to `rho`.
    Prox {
        config: PathBuf,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        rho1: PathBuf,
        #[arg(long)]
        rho: PathBuf,
    },
    /// Render a CSV field as a PGM image.
    FieldConvert { csv: PathBuf, pgm: PathBuf },
}

fn solve(config: PathBuf) -> Result<()> {
    let cfg = RunConfig::load(&config)?;
    let report = hjd::cli::run_scenario(&cfg)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    println!("objective        {}", report.final_objective);
    println!("optimality gap   {}", report.optimality_gap);
    println!("mass in ball     {}", report.mass_in_ball_at_zero);
    println!("wall time        {:.2?}", report.wall_time);
    println!("output           {}", cfg.output_dir.display());
    Ok(())
}

fn prox(config: PathBuf, beta: f64, rho1: PathBuf, rho: PathBuf) -> Result<()> {
    let cfg = RunConfig::load(&config)?;
    let grid = build_grid(&cfg)?;
    let rho1 = load_density(&rho1, grid)?;
    let rho = load_density(&rho, grid)?;
    let out = wasserstein_prox(&rho1, &rho, beta, &cfg)?;
    for w in &out.warnings {
        log::warn!("{w}");
    }
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| HjdError::Io {
        path: cfg.output_dir.clone(),
        source: e,
    })?;
    let meta = FieldMeta {
        quantity: Quantity::Rho,
        time: 0.0,
    };
    let path = cfg.output_dir.join("prox.csv");
    write_field(&out.rho, &path, FieldFormat::Csv, meta)?;
    write_field(&out.rho, &path.with_extension("pgm"), FieldFormat::Pgm, meta)?;
    println!("objective        {}", out.value);
    println!("output           {}", path.display());
    Ok(())
}

fn convert(csv: PathBuf, pgm: PathBuf) -> Result<()> {
    let (field, meta) = read_field(&csv)?;
    write_field(&field, &pgm, FieldFormat::Pgm, meta)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = std::env::var("HJD_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        hjd::par::init_threads(n.max(1));
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { config } => solve(config),
        Command::Prox { config, beta, rho1, rho } => prox(config, beta, rho1, rho),
        Command::FieldConvert { csv, pgm } => convert(csv, pgm),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                HjdError::Config { .. } => ExitCode::from(2),
                HjdError::Diverged { .. } => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
