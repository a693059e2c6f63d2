//! The quadratic-energy flow derived under the material gauge is not a
//! gradient flow: starting from wavy data with a mobile surface its energy
//! can increase, while the Truesdell-gauge flow from the same data decays.
//!
//! Usage: `cargo run --release --example gauge_counterexample`

use gradflow::diagnostics::run_recorded;
use gradflow::{EnergyModel, FlowModel, FlowState, Grid, Mobilities, ModelVariant, ScalarField, Scheme, StepperConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid::square(32)?;
    let h = ScalarField::from_fn(&grid, |x, y| 0.2 * x.sin() * y.sin() + 0.1 * (2.0 * x - y).cos());
    let psi = ScalarField::from_fn(&grid, |x, y| 0.5 + 0.3 * x.cos() + 0.1 * (x + 2.0 * y).sin());
    let initial = FlowState::new(h, psi)?;
    let energy = EnergyModel::quadratic(1.0)?;
    let mobilities = Mobilities::new(0.01, 1.0)?;
    let stepper = StepperConfig::new(1e-6, Scheme::ExplicitEuler)?;

    for variant in [ModelVariant::MaterialGaugeQuadratic, ModelVariant::FullCoupled] {
        let model = FlowModel::new(variant, energy, mobilities)?;
        let sim = run_recorded(model, stepper, initial.clone(), 2e-4, 1)?;
        let rates: Vec<f64> = sim
            .records
            .windows(2)
            .map(|w| (w[1].energy - w[0].energy) / (w[1].t - w[0].t))
            .collect();
        let max_rate = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let rising = rates.iter().filter(|&&r| r > 0.0).count();
        println!(
            "{:>24}: U {:.9} -> {:.9}, max dU/dt {max_rate:+.4e}, {rising} of {} intervals rising",
            variant.name(),
            sim.records[0].energy,
            sim.records.last().unwrap().energy,
            rates.len()
        );
    }
    Ok(())
}
