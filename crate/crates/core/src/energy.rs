//! Energy densities `f(psi)` and the surface tension they induce.
//!
//! The surface energy is `U = int_S f(psi) dS`. Its surface tension is
//! `sigma = f - psi f'`, with `sigma' = -psi f''` and
//! `sigma'' = -(f'' + psi f''')`.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::geometry::GeometryCache;
use crate::grid::{ScalarField, VectorField2};

/// Half-width of the excluded boundary layer of the Flory-Huggins domain.
pub const FLORY_HUGGINS_EPS: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("{name} must be positive and finite, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("{name} must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },
    #[error("derivative order {order} exceeds the supported maximum {max}")]
    Order { order: u8, max: u8 },
}

/// Energy density presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyModel {
    /// `f = c`, pure surface tension.
    Constant { c: f64 },
    /// `f = c psi`, zero surface tension.
    Linear { c: f64 },
    /// `f = (c/2) psi^2`.
    Quadratic { c: f64 },
    /// Logarithmic mixing entropy with a regular-solution interaction,
    /// `f = sigma0 + beta (psi ln psi + (1-psi) ln(1-psi)) + chi psi (1-psi)`,
    /// defined for coverages `0 < psi < 1`.
    FloryHuggins { sigma0: f64, beta: f64, chi: f64 },
}

impl fmt::Display for EnergyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyModel::Constant { c } => write!(f, "constant(c={c})"),
            EnergyModel::Linear { c } => write!(f, "linear(c={c})"),
            EnergyModel::Quadratic { c } => write!(f, "quadratic(c={c})"),
            EnergyModel::FloryHuggins { sigma0, beta, chi } => {
                write!(f, "flory_huggins(sigma0={sigma0}, beta={beta}, chi={chi})")
            }
        }
    }
}

/// Counts coverage samples pushed back into the Flory-Huggins domain.
#[derive(Debug, Default)]
pub struct ClampCounter(AtomicU64);

impl ClampCounter {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
    fn add(&self, n: u64) {
        if n > 0 {
            self.0.fetch_add(n, Ordering::Relaxed);
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), EnergyError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(EnergyError::NotPositive { name, value })
    }
}

fn finite(name: &'static str, value: f64) -> Result<(), EnergyError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(EnergyError::NotFinite { name, value })
    }
}

/// `dpsi U`, and the tangential and normal parts of `dX U`.
#[derive(Clone, Debug)]
pub struct FunctionalDerivatives {
    /// `f'(psi)`
    pub d_psi: ScalarField,
    /// Covariant proxy `psi f''(psi) dpsi`.
    pub d_x_tangential: VectorField2,
    /// `(psi f' - f) H = -sigma H`.
    pub d_x_normal: ScalarField,
}

impl EnergyModel {
    pub fn validated(self) -> Result<Self, EnergyError> {
        match self {
            EnergyModel::Constant { c } | EnergyModel::Quadratic { c } => positive("c", c)?,
            EnergyModel::Linear { c } => finite("c", c)?,
            EnergyModel::FloryHuggins { sigma0, beta, chi } => {
                positive("sigma0", sigma0)?;
                positive("beta", beta)?;
                finite("chi", chi)?;
            }
        }
        Ok(self)
    }

    pub fn constant(c: f64) -> Result<Self, EnergyError> {
        EnergyModel::Constant { c }.validated()
    }
    pub fn linear(c: f64) -> Result<Self, EnergyError> {
        EnergyModel::Linear { c }.validated()
    }
    pub fn quadratic(c: f64) -> Result<Self, EnergyError> {
        EnergyModel::Quadratic { c }.validated()
    }
    pub fn flory_huggins(sigma0: f64, beta: f64, chi: f64) -> Result<Self, EnergyError> {
        EnergyModel::FloryHuggins { sigma0, beta, chi }.validated()
    }

    /// Moves `psi` into the admissible domain; the flag reports whether it
    /// had to be moved.
    #[inline]
    pub fn admit(&self, psi: f64) -> (f64, bool) {
        match self {
            EnergyModel::FloryHuggins { .. } => {
                let lo = FLORY_HUGGINS_EPS;
                let hi = 1.0 - FLORY_HUGGINS_EPS;
                if psi < lo {
                    (lo, true)
                } else if psi > hi {
                    (hi, true)
                } else if psi.is_nan() {
                    (psi, true)
                } else {
                    (psi, false)
                }
            }
            _ => (psi, false),
        }
    }

    /// `f^{(order)}(psi)` for an admissible `psi`.
    #[inline]
    pub fn density(&self, psi: f64, order: u8) -> f64 {
        match *self {
            EnergyModel::Constant { c } => match order {
                0 => c,
                _ => 0.0,
            },
            EnergyModel::Linear { c } => match order {
                0 => c * psi,
                1 => c,
                _ => 0.0,
            },
            EnergyModel::Quadratic { c } => match order {
                0 => 0.5 * c * psi * psi,
                1 => c * psi,
                2 => c,
                _ => 0.0,
            },
            EnergyModel::FloryHuggins { sigma0, beta, chi } => {
                let q = 1.0 - psi;
                match order {
                    0 => sigma0 + beta * (psi * psi.ln() + q * q.ln()) + chi * psi * q,
                    1 => beta * (psi.ln() - q.ln()) + chi * (1.0 - 2.0 * psi),
                    2 => beta / (psi * q) - 2.0 * chi,
                    _ => beta * (2.0 * psi - 1.0) / (psi * psi * q * q),
                }
            }
        }
    }

    /// `sigma^{(order)}(psi)` for an admissible `psi`, `order <= 2`.
    #[inline]
    pub fn tension(&self, psi: f64, order: u8) -> f64 {
        match *self {
            EnergyModel::Constant { c } => match order {
                0 => c,
                _ => 0.0,
            },
            EnergyModel::Linear { .. } => 0.0,
            EnergyModel::Quadratic { c } => match order {
                0 => -0.5 * c * psi * psi,
                1 => -c * psi,
                _ => -c,
            },
            EnergyModel::FloryHuggins { sigma0, beta, chi } => {
                let q = 1.0 - psi;
                match order {
                    0 => sigma0 + beta * q.ln() + chi * psi * psi,
                    1 => -beta / q + 2.0 * chi * psi,
                    _ => -beta / (q * q) + 2.0 * chi,
                }
            }
        }
    }

    fn eval_pointwise(&self, psi: &ScalarField, clamps: &ClampCounter, f: impl Fn(&Self, f64) -> f64) -> ScalarField {
        let mut hits = 0;
        let out = psi.map(|p| {
            let (p, moved) = self.admit(p);
            hits += moved as u64;
            f(self, p)
        });
        clamps.add(hits);
        out
    }

    /// Copy of `psi` moved into the admissible domain; every moved sample is
    /// added to `clamps`.
    pub fn admit_field(&self, psi: &ScalarField, clamps: &ClampCounter) -> ScalarField {
        self.eval_pointwise(psi, clamps, |_, p| p)
    }

    /// Pointwise `f`, `f'`, `f''` or `f'''` of a coverage field.
    pub fn eval_f(&self, psi: &ScalarField, order: u8, clamps: &ClampCounter) -> Result<ScalarField, EnergyError> {
        if order > 3 {
            return Err(EnergyError::Order { order, max: 3 });
        }
        Ok(self.eval_pointwise(psi, clamps, |m, p| m.density(p, order)))
    }

    /// Pointwise `sigma`, `sigma'` or `sigma''`.
    pub fn eval_sigma(&self, psi: &ScalarField, order: u8, clamps: &ClampCounter) -> Result<ScalarField, EnergyError> {
        if order > 2 {
            return Err(EnergyError::Order { order, max: 2 });
        }
        Ok(self.eval_pointwise(psi, clamps, |m, p| m.tension(p, order)))
    }

    /// `U = int_S f(psi) dS`.
    pub fn total_energy(&self, psi: &ScalarField, cache: &GeometryCache, clamps: &ClampCounter) -> f64 {
        let f = self.eval_pointwise(psi, clamps, |m, p| m.density(p, 0));
        crate::geometry::surface_integral(&f, cache)
    }

    pub fn functional_derivatives(
        &self,
        psi: &ScalarField,
        cache: &GeometryCache,
        clamps: &ClampCounter,
    ) -> FunctionalDerivatives {
        let d_psi = self.eval_pointwise(psi, clamps, |m, p| m.density(p, 1));
        let psi_f2 = self.eval_pointwise(psi, clamps, |m, p| p * m.density(p, 2));
        let dpsi = VectorField2::gradient(psi);
        let d_x_tangential = VectorField2 {
            x: psi_f2.zip_map(&dpsi.x, |a, b| a * b),
            y: psi_f2.zip_map(&dpsi.y, |a, b| a * b),
        };
        let sigma = self.eval_pointwise(psi, clamps, |m, p| m.tension(p, 0));
        let d_x_normal = sigma.zip_map(&cache.mean_curv, |s, h| -s * h);
        FunctionalDerivatives {
            d_psi,
            d_x_tangential,
            d_x_normal,
        }
    }
}
