//! Spectral differentiation, dealiasing, quadrature and Helmholtz solves on
//! a periodic grid, checked against closed forms.
//!
//! Usage: `cargo run --release --example spectral_derivatives`

use gradflow::grid::solve_helmholtz;
use gradflow::{Axis, Grid, ScalarField};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (lx, ly) = (4.0, 6.0);
    let (wx, wy) = (2.0 * std::f64::consts::PI / lx, 2.0 * std::f64::consts::PI / ly);
    let f = |x: f64, y: f64| (wx * x).sin() * (2.0 * wy * y).cos() + 0.5;

    println!(
        "{:>8} {:>12} {:>12} {:>12} {:>12}",
        "grid", "d/dx", "laplacian", "integral", "helmholtz"
    );
    for n in [8, 16, 32, 64] {
        let grid = Grid::new(n, n, lx, ly, true)?;
        let u = ScalarField::from_fn(&grid, f);
        let dx_exact = ScalarField::from_fn(&grid, |x, y| wx * (wx * x).cos() * (2.0 * wy * y).cos());
        let lap_exact = u.map(|v| -(wx * wx + 4.0 * wy * wy) * (v - 0.5));
        let integral_err = (u.integrate() - 0.5 * lx * ly).abs();
        // (I - a lap) u = rhs recovers u
        let a = 0.3;
        let rhs = u.zip_map(&u.laplacian(), |v, l| v - a * l);
        let solved = solve_helmholtz(&rhs, a)?;
        println!(
            "{:>8} {:>12.2e} {:>12.2e} {:>12.2e} {:>12.2e}",
            format!("{n}x{n}"),
            u.partial(Axis::X).max_abs_diff(&dx_exact),
            u.laplacian().max_abs_diff(&lap_exact),
            integral_err,
            solved.max_abs_diff(&u)
        );
    }

    // two-thirds truncation removes modes beyond n/3 and keeps the rest
    let grid = Grid::square(24)?;
    let low = ScalarField::from_fn(&grid, |x, y| (3.0 * x).cos() * (2.0 * y).sin());
    let high = ScalarField::from_fn(&grid, |x, _| (10.0 * x).sin());
    println!(
        "dealias keeps k=3 mode: change {:.1e}",
        low.dealias().max_abs_diff(&low)
    );
    println!("dealias removes k=10 mode: remaining {:.1e}", high.dealias().max_abs());
    Ok(())
}
