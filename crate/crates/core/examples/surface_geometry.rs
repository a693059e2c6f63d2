//! Metric, normal, mean curvature and Laplace-Beltrami of a graph surface,
//! with a few identities that hold for any closed periodic graph.
//!
//! Usage: `cargo run --release --example surface_geometry [amplitude]`

use gradflow::geometry::{build_cache, laplace_beltrami, surface_integral};
use gradflow::{Grid, ScalarField};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let amplitude: f64 = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(0.8);
    let grid = Grid::square(64)?;
    let h = ScalarField::from_fn(&grid, |x, y| amplitude * (2.0 * x).sin() * (2.0 * y).sin());
    let cache = build_cache(&h)?;

    println!("surface h = {amplitude} sin(2x) sin(2y) on the 2 pi torus, 64x64");
    println!("area             {:.10} (flat {:.10})", cache.area(), grid.area());
    println!(
        "sqrt|g| range    [{:.6}, {:.6}]",
        cache.sqrt_g.min(),
        cache.sqrt_g.max()
    );
    println!(
        "mean curvature   [{:.6}, {:.6}]",
        cache.mean_curv.min(),
        cache.mean_curv.max()
    );
    let nz = &cache.normal[2];
    println!("normal z range   [{:.6}, {:.6}]", nz.min(), nz.max());

    // a Laplace-Beltrami image integrates to zero over a closed surface
    let f = ScalarField::from_fn(&grid, |x, y| (x + y).cos() + 0.3 * (3.0 * x).sin());
    let lb = laplace_beltrami(&f, &cache);
    println!(
        "int_S LB(f) dS   {:.3e} (scale {:.3e})",
        surface_integral(&lb, &cache),
        surface_integral(&lb.map(f64::abs), &cache)
    );
    // the mean curvature density integrates to zero in the flat measure
    println!("int hfrak dx     {:.3e}", cache.hfrak.integrate());
    Ok(())
}
