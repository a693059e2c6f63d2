use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gradflow::diagnostics::SweepQuantity;
use gradflow::io::{self, RunConfig};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Parser)]
#[command(
    version,
    about = "Coupled surface and density gradient flows on periodic height graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (overrides run.output_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (overrides GRADFLOW_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run { config: PathBuf },
    /// Run the full and the normal-only model side by side.
    Compare { config: PathBuf },
    /// Repeat a run over a ladder of time steps and report observed orders.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        dt_ladder: Vec<f64>,
        #[arg(long, value_enum, default_value = "mass-error")]
        quantity: Quantity,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    MassError,
    TrajectoryError,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    let threads = match cli.threads {
        Some(n) => Some(n),
        None => std::env::var("GRADFLOW_THREADS")
            .ok()
            .map(|s| {
                s.parse()
                    .map_err(|_| format!("GRADFLOW_THREADS: not a thread count: {s}"))
            })
            .transpose()?,
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let path = match &cli.command {
        Command::Run { config } | Command::Compare { config } | Command::Sweep { config, .. } => config,
    };
    let config = RunConfig::load(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let out = cli.out.clone().unwrap_or_else(|| config.output_dir.clone());

    match cli.command {
        Command::Run { .. } => {
            let report = io::run(&config, &out)?;
            let r = &report.final_record;
            println!(
                "t = {:.6} after {} steps: energy {:.10e}, mass error {:.3e}, clamps {}, {:.1} s",
                r.t, report.steps, r.energy, r.mass_error, report.clamp_count, report.wall_time
            );
        }
        Command::Compare { .. } => {
            let cmp = io::compare(&config, &out)?;
            println!("full_energy_lower = {}", cmp.full_energy_lower);
            println!("full_spread_smaller = {}", cmp.full_spread_smaller);
        }
        Command::Sweep {
            dt_ladder, quantity, ..
        } => {
            let quantity = match quantity {
                Quantity::MassError => SweepQuantity::MassError,
                Quantity::TrajectoryError => SweepQuantity::TrajectoryError,
            };
            for row in io::sweep(&config, &dt_ladder, quantity, &out)? {
                let order = row.order.map_or_else(|| "-".to_string(), |p| format!("{p:.3}"));
                println!("dt = {:.3e}  error = {:.6e}  order = {order}", row.dt, row.error);
            }
        }
    }
    println!("output written to {}", out.display());
    Ok(())
}
