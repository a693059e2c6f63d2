//! Runs the fully coupled model and the normal-only restriction from the
//! same data. Tangential motion lets the density redistribute along the
//! surface, so the full model reaches lower energy and a more uniform
//! density.
//!
//! Usage: `cargo run --release --example full_vs_normal [n] [t_end]`
//! (defaults: 64, 0.4)

use gradflow::diagnostics::{compare_variants, CompareSetup};
use gradflow::io::{RunConfig, COMPARE_TRANSIENT};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(64);
    let t_end: f64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(0.4);

    let mut config = RunConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/paper_sec4.cfg"))?;
    config.nx = n;
    config.ny = n;
    config.stepper.dt = 1e-5 * (128.0 / n as f64).powi(2);
    let setup = CompareSetup {
        model: config.model()?,
        stepper: config.stepper,
        initial: config.initial_state()?,
        t_end,
        record_every: ((t_end / config.stepper.dt) as u64 / 10).max(1),
        transient: COMPARE_TRANSIENT,
    };
    let cmp = compare_variants(&setup)?;

    println!(
        "{:>8} {:>14} {:>14} {:>13} {:>13}",
        "t", "U full", "U normal", "spread full", "spread normal"
    );
    for (f, m) in cmp.full.iter().zip(&cmp.normal) {
        println!(
            "{:>8.4} {:>14.9} {:>14.9} {:>13.4e} {:>13.4e}",
            f.t,
            f.energy,
            m.energy,
            f.psi_max - f.psi_min,
            m.psi_max - m.psi_min
        );
    }
    println!(
        "full energy lower after t = {COMPARE_TRANSIENT}: {}",
        cmp.full_energy_lower
    );
    println!("full density spread smaller at the end: {}", cmp.full_spread_smaller);
    Ok(())
}
