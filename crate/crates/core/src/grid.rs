//! Uniform periodic grids, sampled fields and Fourier pseudospectral calculus.
//!
//! Fields are stored in physical space, row-major with the x index outermost:
//! the sample at `(x_i, y_j)` lives at `values[i * ny + j]`. Spectral
//! coefficients use a transposed layout internally (`[j * nx + i]`) which is
//! never visible outside this module.
//!
//! Transforms follow the usual convention: forward unnormalized, inverse
//! divided by `nx * ny`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid sizes must be even and at least 8, got {nx} x {ny}")]
    BadSize { nx: usize, ny: usize },
    #[error("domain lengths must be finite and positive, got {lx} x {ly}")]
    BadLength { lx: f64, ly: f64 },
    #[error("expected {expected} samples, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("{what} is not finite at sample {index} (value {value})")]
    NonFinite { what: String, index: usize, value: f64 },
    #[error("Helmholtz coefficient must be finite and non-negative, got {0}")]
    NegativeCoefficient(f64),
}

/// Coordinate direction on the parameter domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone)]
struct Plans {
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

/// A uniform periodic sample grid on `[0, lx) x [0, ly)`.
pub struct Grid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    dealias: bool,
    kx: Vec<f64>,
    ky: Vec<f64>,
    keep_x: Vec<bool>,
    keep_y: Vec<bool>,
    plans: Plans,
}

/// Signed integer wavenumber of FFT bin `m` for an `n`-point transform.
fn mode_index(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

fn wavenumbers(n: usize, l: f64) -> Vec<f64> {
    let scale = 2.0 * PI / l;
    (0..n).map(|m| mode_index(m, n) as f64 * scale).collect()
}

/// Two-thirds rule: keep modes with `|m| <= (2/3) * (n/2)`.
fn two_thirds_keep(n: usize, enabled: bool) -> Vec<bool> {
    (0..n)
        .map(|m| !enabled || 3 * mode_index(m, n).unsigned_abs() as usize <= n)
        .collect()
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64, dealias: bool) -> Result<Arc<Self>, GridError> {
        if nx < 8 || ny < 8 || !nx.is_multiple_of(2) || !ny.is_multiple_of(2) {
            return Err(GridError::BadSize { nx, ny });
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(GridError::BadLength { lx, ly });
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
        };
        Ok(Arc::new(Grid {
            nx,
            ny,
            lx,
            ly,
            dealias,
            kx: wavenumbers(nx, lx),
            ky: wavenumbers(ny, ly),
            keep_x: two_thirds_keep(nx, dealias),
            keep_y: two_thirds_keep(ny, dealias),
            plans,
        }))
    }

    /// `n x n` samples on the `(2pi)^2` torus with dealiasing on.
    pub fn square(n: usize) -> Result<Arc<Self>, GridError> {
        Grid::new(n, n, 2.0 * PI, 2.0 * PI, true)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn dealias_enabled(&self) -> bool {
        self.dealias
    }
    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }
    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }
    /// Area of the parameter domain.
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    /// Angular wavenumbers along x in FFT bin order; `kx()[0] == 0`.
    pub fn kx(&self) -> &[f64] {
        &self.kx
    }
    pub fn ky(&self) -> &[f64] {
        &self.ky
    }

    /// Whether the spectral mode `(i, j)` survives dealiasing.
    pub fn keeps_mode(&self, i: usize, j: usize) -> bool {
        self.keep_x[i] && self.keep_y[j]
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }
    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.dy()
    }

    /// Same samples and lengths with a different dealiasing policy.
    pub fn with_dealias(&self, dealias: bool) -> Arc<Grid> {
        Grid::new(self.nx, self.ny, self.lx, self.ly, dealias).expect("grid parameters already validated")
    }

    fn same_as(&self, other: &Grid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.lx == other.lx
            && self.ly == other.ly
            && self.dealias == other.dealias
    }

    // Wavenumber used for odd-order derivatives; the Nyquist bin has no
    // real-valued odd derivative and is dropped.
    fn k_odd(k: &[f64], m: usize) -> f64 {
        if m == k.len() / 2 {
            0.0
        } else {
            k[m]
        }
    }

    fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let (nx, ny) = (self.nx, self.ny);
        let mut rows: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.plans.fwd_y.process(&mut rows);
        let mut cols = transpose(&rows, nx, ny);
        self.plans.fwd_x.process(&mut cols);
        cols
    }

    fn inverse(&self, mut cols: Vec<Complex64>) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        self.plans.inv_x.process(&mut cols);
        let mut rows = transpose(&cols, ny, nx);
        self.plans.inv_y.process(&mut rows);
        let norm = 1.0 / (nx * ny) as f64;
        rows.into_iter().map(|c| c.re * norm).collect()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("lx", &self.lx)
            .field("ly", &self.ly)
            .field("dealias", &self.dealias)
            .finish()
    }
}

/// Transpose of a row-major `rows x cols` array, in cache-sized tiles.
fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    const TILE: usize = 16;
    let mut out = vec![Complex64::new(0.0, 0.0); rows * cols];
    for r0 in (0..rows).step_by(TILE) {
        for c0 in (0..cols).step_by(TILE) {
            for r in r0..(r0 + TILE).min(rows) {
                for c in c0..(c0 + TILE).min(cols) {
                    out[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
    out
}

fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
    Arc::ptr_eq(a, b) || a.same_as(b)
}

/// A real field sampled on a [`Grid`].
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        same_grid(&self.grid, &other.grid) && self.values == other.values
    }
}

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Arc<Grid>, value: f64) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f(x, y)` at every grid node.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            let x = grid.x(i);
            for j in 0..grid.ny {
                values.push(f(x, grid.y(j)));
            }
        }
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(ScalarField {
            grid: grid.clone(),
            values,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.ny + j]
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    ///
    /// Panics if the grids differ.
    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert!(same_grid(&self.grid, &other.grid), "fields live on different grids");
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum pointwise distance to `other`.
    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn ensure_finite(&self, what: &str) -> Result<(), GridError> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(index) => Err(GridError::NonFinite {
                what: what.to_string(),
                index,
                value: self.values[index],
            }),
        }
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum {
            grid: self.grid.clone(),
            coeffs: self.grid.forward(&self.values),
        }
    }

    /// Spectral first derivative along `axis`.
    pub fn partial(&self, axis: Axis) -> ScalarField {
        self.spectrum().partial(axis).to_field()
    }

    /// Spectral second derivatives `(d_xx, d_xy, d_yy)`.
    pub fn partial2(&self) -> [ScalarField; 3] {
        let s = self.spectrum();
        let [xx, xy, yy] = s.partial2();
        [xx.to_field(), xy.to_field(), yy.to_field()]
    }

    /// Flat Laplacian `d_xx + d_yy`.
    pub fn laplacian(&self) -> ScalarField {
        self.spectrum().laplacian().to_field()
    }

    /// Two-thirds truncation; the identity when the grid has dealiasing off.
    pub fn dealias(&self) -> ScalarField {
        if !self.grid.dealias {
            return self.clone();
        }
        self.spectrum().dealiased().to_field()
    }

    /// Periodic trapezoid rule, `(lx ly / (nx ny)) * sum(values)`.
    pub fn integrate(&self) -> f64 {
        let sum: f64 = self.values.iter().sum();
        sum * self.grid.area() / self.grid.len() as f64
    }
}

/// Solves `(I - a (d_xx + d_yy)) u = rhs` mode by mode.
pub fn solve_helmholtz(rhs: &ScalarField, a: f64) -> Result<ScalarField, GridError> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(GridError::NegativeCoefficient(a));
    }
    if a == 0.0 {
        return Ok(rhs.clone());
    }
    Ok(rhs.spectrum().helmholtz_solve(a).to_field())
}

/// Fourier coefficients of a real field.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn to_field(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.grid.inverse(self.coeffs.clone()),
        }
    }

    pub fn into_field(self) -> ScalarField {
        let values = self.grid.inverse(self.coeffs);
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    pub fn map_modes(&self, f: impl Fn(usize, usize, Complex64) -> Complex64) -> Spectrum {
        let nx = self.grid.nx;
        let coeffs = self
            .coeffs
            .chunks_exact(nx)
            .enumerate()
            .flat_map(|(j, row)| row.iter().enumerate().map(move |(i, &c)| (i, j, c)))
            .map(|(i, j, c)| f(i, j, c))
            .collect();
        Spectrum {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// Mode-wise combination with another spectrum on the same grid; the
    /// closure receives the bin indices `(i, j)`.
    pub fn zip_modes(&self, other: &Spectrum, f: impl Fn(usize, usize, Complex64, Complex64) -> Complex64) -> Spectrum {
        assert!(same_grid(&self.grid, &other.grid), "spectra live on different grids");
        let nx = self.grid.nx;
        let coeffs = self
            .coeffs
            .chunks_exact(nx)
            .zip(other.coeffs.chunks_exact(nx))
            .enumerate()
            .flat_map(|(j, (ra, rb))| ra.iter().zip(rb).enumerate().map(move |(i, (&a, &b))| (i, j, a, b)))
            .map(|(i, j, a, b)| f(i, j, a, b))
            .collect();
        Spectrum {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    pub fn derivative(&self, op: Derivative) -> Spectrum {
        let g = &self.grid;
        self.map_modes(|i, j, c| c * op.symbol(g, i, j))
    }

    pub fn partial(&self, axis: Axis) -> Spectrum {
        self.derivative(match axis {
            Axis::X => Derivative::X,
            Axis::Y => Derivative::Y,
        })
    }

    pub fn partial2(&self) -> [Spectrum; 3] {
        [Derivative::XX, Derivative::XY, Derivative::YY].map(|op| self.derivative(op))
    }

    pub fn laplacian(&self) -> Spectrum {
        let g = &self.grid;
        self.map_modes(|i, j, c| c * -(g.kx[i] * g.kx[i] + g.ky[j] * g.ky[j]))
    }

    pub fn dealiased(&self) -> Spectrum {
        let g = &self.grid;
        self.map_modes(|i, j, c| {
            if g.keeps_mode(i, j) {
                c
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Mode-wise inverse of `I - a * laplacian`; the caller guarantees `a >= 0`.
    pub fn helmholtz_solve(&self, a: f64) -> Spectrum {
        let g = &self.grid;
        self.map_modes(|i, j, c| c / (1.0 + a * (g.kx[i] * g.kx[i] + g.ky[j] * g.ky[j])))
    }
}

/// Spatial derivative selected by its multi-index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivative {
    X,
    Y,
    XX,
    XY,
    YY,
}

impl Derivative {
    fn symbol(self, g: &Grid, i: usize, j: usize) -> Complex64 {
        match self {
            Derivative::X => Complex64::new(0.0, Grid::k_odd(&g.kx, i)),
            Derivative::Y => Complex64::new(0.0, Grid::k_odd(&g.ky, j)),
            Derivative::XX => Complex64::new(-(g.kx[i] * g.kx[i]), 0.0),
            Derivative::XY => Complex64::new(-(Grid::k_odd(&g.kx, i) * Grid::k_odd(&g.ky, j)), 0.0),
            Derivative::YY => Complex64::new(-(g.ky[j] * g.ky[j]), 0.0),
        }
    }
}

/// Transform of `a + i b` for two real fields on one grid.
///
/// Derivative symbols map real fields to real fields, so applying one to
/// the packed transform differentiates both fields with a single inverse.
#[derive(Clone, Debug)]
pub struct PackedPair {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl PackedPair {
    pub fn new(a: &ScalarField, b: &ScalarField) -> Self {
        assert!(same_grid(&a.grid, &b.grid), "fields live on different grids");
        let grid = &a.grid;
        let mut rows: Vec<Complex64> = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        grid.plans.fwd_y.process(&mut rows);
        let mut coeffs = transpose(&rows, grid.nx, grid.ny);
        grid.plans.fwd_x.process(&mut coeffs);
        PackedPair {
            grid: grid.clone(),
            coeffs,
        }
    }

    /// The derivative `op` of both fields.
    pub fn derivative(&self, op: Derivative) -> (ScalarField, ScalarField) {
        let g = &self.grid;
        let coeffs = self
            .coeffs
            .chunks_exact(g.nx)
            .enumerate()
            .flat_map(|(j, row)| row.iter().enumerate().map(move |(i, &c)| c * op.symbol(g, i, j)))
            .collect();
        inverse_packed(g, coeffs)
    }

    /// Separate spectra of the two fields.
    pub fn split(&self) -> (Spectrum, Spectrum) {
        let grid = &self.grid;
        let (nx, ny) = (grid.nx, grid.ny);
        let z = &self.coeffs;
        let mut sa = Vec::with_capacity(nx * ny);
        let mut sb = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let jm = if j == 0 { 0 } else { ny - j };
            for i in 0..nx {
                let im = if i == 0 { 0 } else { nx - i };
                let zk = z[j * nx + i];
                let zc = z[jm * nx + im].conj();
                sa.push((zk + zc) * 0.5);
                sb.push((zk - zc) * Complex64::new(0.0, -0.5));
            }
        }
        (
            Spectrum {
                grid: grid.clone(),
                coeffs: sa,
            },
            Spectrum {
                grid: grid.clone(),
                coeffs: sb,
            },
        )
    }
}

/// Inverts a packed transform into its real and imaginary parts.
fn inverse_packed(grid: &Arc<Grid>, mut cols: Vec<Complex64>) -> (ScalarField, ScalarField) {
    grid.plans.inv_x.process(&mut cols);
    let mut rows = transpose(&cols, grid.ny, grid.nx);
    drop(cols);
    grid.plans.inv_y.process(&mut rows);
    let norm = 1.0 / (grid.nx * grid.ny) as f64;
    let va = rows.iter().map(|c| c.re * norm).collect();
    let vb = rows.iter().map(|c| c.im * norm).collect();
    (
        ScalarField {
            grid: grid.clone(),
            values: va,
        },
        ScalarField {
            grid: grid.clone(),
            values: vb,
        },
    )
}

/// Spectra of two real fields on one grid from a single complex transform.
pub fn spectrum_pair(a: &ScalarField, b: &ScalarField) -> (Spectrum, Spectrum) {
    PackedPair::new(a, b).split()
}

/// Inverts two Hermitian spectra with a single complex transform.
pub fn fields_pair(a: &Spectrum, b: &Spectrum) -> (ScalarField, ScalarField) {
    assert!(same_grid(&a.grid, &b.grid), "spectra live on different grids");
    let cols = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(&p, &q)| p + Complex64::new(-q.im, q.re))
        .collect();
    inverse_packed(&a.grid, cols)
}

/// A pair of scalar fields on one grid, e.g. a covariant proxy `[w_x, w_y]`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField2 {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField2 {
    pub fn new(x: ScalarField, y: ScalarField) -> Result<Self, GridError> {
        if !same_grid(&x.grid, &y.grid) {
            return Err(GridError::GridMismatch);
        }
        Ok(VectorField2 { x, y })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        VectorField2 {
            x: ScalarField::zeros(grid),
            y: ScalarField::zeros(grid),
        }
    }

    /// Spectral gradient `[d_x f, d_y f]`.
    pub fn gradient(f: &ScalarField) -> Self {
        let s = f.spectrum();
        VectorField2 {
            x: s.partial(Axis::X).into_field(),
            y: s.partial(Axis::Y).into_field(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.x.grid()
    }

    /// Pointwise Euclidean dot product of the proxies.
    pub fn dot(&self, other: &VectorField2) -> ScalarField {
        let mut out = self.x.zip_map(&other.x, |a, b| a * b);
        for (o, (a, b)) in out.values.iter_mut().zip(self.y.values.iter().zip(&other.y.values)) {
            *o += a * b;
        }
        out
    }

    pub fn ensure_finite(&self, what: &str) -> Result<(), GridError> {
        self.x.ensure_finite(what)?;
        self.y.ensure_finite(what)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid16() -> Arc<Grid> {
        Grid::square(16).unwrap()
    }

    #[test]
    fn rejects_odd_and_small_grids() {
        assert!(matches!(
            Grid::new(15, 16, 1.0, 1.0, true),
            Err(GridError::BadSize { .. })
        ));
        assert!(matches!(
            Grid::new(6, 6, 1.0, 1.0, true),
            Err(GridError::BadSize { .. })
        ));
        assert!(matches!(
            Grid::new(8, 8, -1.0, 1.0, true),
            Err(GridError::BadLength { .. })
        ));
    }

    #[test]
    fn wavenumbers_are_standard() {
        let g = Grid::new(8, 8, 4.0 * PI, 2.0 * PI, true).unwrap();
        assert_eq!(g.kx()[0], 0.0);
        assert_eq!(g.ky()[0], 0.0);
        let expect_x = [0.0, 0.5, 1.0, 1.5, -2.0, -1.5, -1.0, -0.5];
        for (k, e) in g.kx().iter().zip(expect_x) {
            assert!((k - e).abs() < 1e-15);
        }
        assert_eq!(g.ky()[3], 3.0);
    }

    #[test]
    fn derivative_of_sine() {
        let g = grid16();
        let f = ScalarField::from_fn(&g, |x, _| x.sin());
        let df = f.partial(Axis::X);
        let exact = ScalarField::from_fn(&g, |x, _| x.cos());
        assert!(df.max_abs_diff(&exact) < 1e-13);
        assert!(f.partial(Axis::Y).max_abs() < 1e-13);
    }

    #[test]
    fn constant_has_zero_derivatives() {
        let g = grid16();
        let f = ScalarField::constant(&g, 3.5);
        assert!(f.partial(Axis::X).max_abs() < 1e-14);
        for d in f.partial2() {
            assert!(d.max_abs() < 1e-14);
        }
    }

    #[test]
    fn mixed_mode_derivatives() {
        let g = grid16();
        let f = ScalarField::from_fn(&g, |x, y| (2.0 * x).sin() * (2.0 * y).sin());
        // (pi/4, pi/4) is the node i = j = 2 on a 16-point 2pi grid.
        let dx = f.partial(Axis::X);
        assert!(dx.get(2, 2).abs() < 1e-13);
        let [xx, xy, yy] = f.partial2();
        let exact_xy = ScalarField::from_fn(&g, |x, y| 4.0 * (2.0 * x).cos() * (2.0 * y).cos());
        assert!(xy.max_abs_diff(&exact_xy) < 1e-12);
        assert!(xx.max_abs_diff(&f.scaled(-4.0)) < 1e-12);
        assert!(yy.max_abs_diff(&f.scaled(-4.0)) < 1e-12);
        let sx = ScalarField::from_fn(&g, |x, _| x.sin());
        let [sxx, sxy, _] = sx.partial2();
        assert!(sxx.max_abs_diff(&sx.scaled(-1.0)) < 1e-13);
        assert!(sxy.max_abs() < 1e-13);
    }

    #[test]
    fn dealias_two_thirds() {
        let g = grid16();
        let low = ScalarField::from_fn(&g, |x, _| x.sin());
        assert!(low.dealias().max_abs_diff(&low) < 1e-14);
        // mode 7 on 16 points: 3 * 7 > 16, truncated
        let high = ScalarField::from_fn(&g, |x, _| (7.0 * x).sin());
        assert!(high.dealias().max_abs() < 1e-13);
        // mode 5 survives: 15 <= 16
        let edge = ScalarField::from_fn(&g, |_, y| (5.0 * y).cos());
        assert!(edge.dealias().max_abs_diff(&edge) < 1e-13);
        let off = g.with_dealias(false);
        let high_off = ScalarField::from_fn(&off, |x, _| (7.0 * x).sin());
        assert_eq!(high_off.dealias(), high_off);
    }

    #[test]
    fn quadrature() {
        let g = grid16();
        let one = ScalarField::constant(&g, 1.0);
        assert!((one.integrate() - 4.0 * PI * PI).abs() < 1e-12);
        assert!(ScalarField::from_fn(&g, |x, _| x.sin()).integrate().abs() < 1e-13);
        let s = ScalarField::from_fn(&g, |x, y| ((2.0 * x).sin() * (2.0 * y).sin()).powi(2));
        assert!((s.integrate() - PI * PI).abs() < 1e-12);
    }

    #[test]
    fn helmholtz_examples() {
        let g = grid16();
        let s = ScalarField::from_fn(&g, |x, _| x.sin());
        assert_eq!(solve_helmholtz(&s, 0.0).unwrap(), s);
        assert!(solve_helmholtz(&s, 1.0).unwrap().max_abs_diff(&s.scaled(0.5)) < 1e-14);
        let m = ScalarField::from_fn(&g, |x, y| (2.0 * x).sin() * (2.0 * y).sin());
        assert!(solve_helmholtz(&m, 0.5).unwrap().max_abs_diff(&m.scaled(0.2)) < 1e-14);
        assert!(matches!(
            solve_helmholtz(&m, -1.0),
            Err(GridError::NegativeCoefficient(_))
        ));
        let c = ScalarField::constant(&g, 2.0);
        assert!(solve_helmholtz(&c, 3.0).unwrap().max_abs_diff(&c) < 1e-14);
    }

    #[test]
    fn paired_transforms_match_single() {
        let g = Grid::square(16).unwrap();
        let a = ScalarField::from_fn(&g, |x, y| (x + 2.0 * y).sin() + 0.3 * (3.0 * x).cos());
        let b = ScalarField::from_fn(&g, |x, y| (2.0 * x).cos() * y.sin() + 0.1);
        let (sa, sb) = spectrum_pair(&a, &b);
        let (da, db) = fields_pair(&sa.partial(Axis::X), &sb.partial2()[1]);
        assert!(da.max_abs_diff(&a.partial(Axis::X)) < 1e-13);
        assert!(db.max_abs_diff(&b.partial2()[1]) < 1e-13);
        let (ra, rb) = fields_pair(&sa, &sb);
        assert!(ra.max_abs_diff(&a) < 1e-14 && rb.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn non_finite_is_reported() {
        let g = grid16();
        let mut f = ScalarField::zeros(&g);
        f.values_mut()[5] = f64::NAN;
        assert!(matches!(
            f.ensure_finite("h"),
            Err(GridError::NonFinite { index: 5, .. })
        ));
    }

    #[test]
    fn vector_fields_need_one_grid() {
        let a = ScalarField::zeros(&grid16());
        let b = ScalarField::zeros(&Grid::square(8).unwrap());
        assert_eq!(VectorField2::new(a, b), Err(GridError::GridMismatch));
    }
}
