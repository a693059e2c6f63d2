//! Time-step refinement study: the mass error of the IMEX scheme and the
//! trajectory error both converge at first order.
//!
//! Usage: `cargo run --release --example conservation_convergence [n] [t_end]`
//! (defaults: 64, 0.05)

use gradflow::diagnostics::{convergence_sweep, SweepCase, SweepQuantity};
use gradflow::io::RunConfig;
use gradflow::StepperConfig;

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(64);
    let t_end: f64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(0.05);

    let mut config = RunConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/paper_sec4.cfg"))?;
    config.nx = n;
    config.ny = n;
    let (model, initial) = (config.model()?, config.initial_state()?);
    let ladder = [1.6e-4, 8e-5, 4e-5, 2e-5];
    let cases: Vec<SweepCase> = ladder
        .iter()
        .map(|&dt| SweepCase {
            model,
            stepper: StepperConfig { dt, ..config.stepper },
            initial: initial.clone(),
            t_end,
        })
        .collect();

    for (label, quantity) in [
        ("mass error", SweepQuantity::MassError),
        ("trajectory error", SweepQuantity::TrajectoryError),
    ] {
        println!("{label}:");
        for row in convergence_sweep(&cases, quantity)? {
            let order = row.order.map_or_else(|| "-".into(), |p| format!("{p:.3}"));
            println!("  dt = {:.1e}  error = {:.4e}  order = {order}", row.dt, row.error);
        }
    }
    Ok(())
}
