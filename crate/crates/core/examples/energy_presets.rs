//! Energy density presets, their derivatives and surface tension
//! `sigma = f - psi f'`, tabulated over the coverage.
//!
//! Usage: `cargo run --release --example energy_presets`

use gradflow::EnergyModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let presets = [
        EnergyModel::constant(1.0)?,
        EnergyModel::linear(0.5)?,
        EnergyModel::quadratic(1.0)?,
        EnergyModel::flory_huggins(1.0, 0.75, 0.0)?,
        EnergyModel::flory_huggins(1.0, 0.5, 2.5)?,
    ];
    for energy in presets {
        println!("{energy}");
        println!(
            "  {:>6} {:>12} {:>12} {:>12} {:>12} {:>12}",
            "psi", "f", "f'", "f''", "sigma", "sigma'"
        );
        for psi in [0.05, 0.25, 0.5, 0.75, 0.95] {
            println!(
                "  {psi:>6.2} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
                energy.density(psi, 0),
                energy.density(psi, 1),
                energy.density(psi, 2),
                energy.tension(psi, 0),
                energy.tension(psi, 1)
            );
        }
    }
    // Flory-Huggins densities are only defined on (0, 1); samples outside are moved inside
    let fh = EnergyModel::flory_huggins(1.0, 0.75, 0.0)?;
    for psi in [-0.1, 1.2] {
        let (admitted, moved) = fh.admit(psi);
        println!("flory_huggins admits {psi} as {admitted} (moved: {moved})");
    }
    Ok(())
}
