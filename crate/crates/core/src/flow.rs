//! Right-hand sides of the coupled surface/density flows and time stepping.
//!
//! All variants share the normal law `M_X h_t = |g| sigma(psi) hfrak` (up to
//! the sign flip of the material gauge) and differ in how the tangential
//! velocity enters the density equation:
//!
//! * [`ModelVariant::FullCoupled`] computes `h_t`, then the covariant
//!   tangential velocity `M_X v = -psi f''(psi) dpsi`, then isolates `psi_t`
//!   from the Truesdell-rate balance `M_psi psi_ring = div(f'' grad psi)`.
//! * [`ModelVariant::VelocitySubstituted`] uses the closed form obtained by
//!   substituting the tangential velocity into the density equation.
//! * [`ModelVariant::NormalOnly`] constrains the tangential velocity to zero.
//! * [`ModelVariant::MaterialGaugeQuadratic`] is the quadratic-energy flow
//!   derived under the material gauge; it conserves mass but is not a
//!   dissipative flow in general.
//!
//! Everything is assembled from `f` and its derivatives; `sigma'/psi` is never
//! formed.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::energy::{ClampCounter, EnergyError, EnergyModel};
use crate::geometry::{Derivatives, GeometryCache, Jacobian};
use crate::grid::{fields_pair, spectrum_pair, Grid, GridError, ScalarField, Spectrum, VectorField2};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("mobility {name} must be positive and finite, got {value}")]
    Mobility { name: &'static str, value: f64 },
    #[error("time step must be positive and finite, got {0}")]
    TimeStep(f64),
    #[error("stabilization {name} must be finite and non-negative, got {value}")]
    Stabilization { name: &'static str, value: f64 },
    #[error("the material-gauge variant is only defined for the quadratic energy, got {0}")]
    GaugeNeedsQuadratic(EnergyModel),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("solution became non-finite in step {step} (t = {t}): {source}")]
    NonFinite {
        step: u64,
        t: f64,
        source: GridError,
        last_valid: Box<FlowState>,
    },
}

/// Time, height and density of one simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub h: ScalarField,
    pub psi: ScalarField,
    pub step_index: u64,
}

impl FlowState {
    pub fn new(h: ScalarField, psi: ScalarField) -> Result<Self, GridError> {
        if h.grid() != psi.grid() {
            return Err(GridError::GridMismatch);
        }
        h.ensure_finite("height")?;
        psi.ensure_finite("density")?;
        Ok(FlowState {
            t: 0.0,
            h,
            psi,
            step_index: 0,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.h.grid()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelVariant {
    FullCoupled,
    VelocitySubstituted,
    NormalOnly,
    MaterialGaugeQuadratic,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 4] = [
        ModelVariant::FullCoupled,
        ModelVariant::VelocitySubstituted,
        ModelVariant::NormalOnly,
        ModelVariant::MaterialGaugeQuadratic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::FullCoupled => "full_coupled",
            ModelVariant::VelocitySubstituted => "velocity_substituted",
            ModelVariant::NormalOnly => "normal_only",
            ModelVariant::MaterialGaugeQuadratic => "material_gauge_quadratic",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Immobility coefficients of the surface (`m_x`) and the density (`m_psi`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobilities {
    pub m_x: f64,
    pub m_psi: f64,
}

impl Mobilities {
    pub fn new(m_x: f64, m_psi: f64) -> Result<Self, FlowError> {
        for (name, value) in [("m_x", m_x), ("m_psi", m_psi)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(FlowError::Mobility { name, value });
            }
        }
        Ok(Mobilities { m_x, m_psi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ExplicitEuler,
    /// First-order stabilized IMEX: the flat Laplacian scaled by a constant
    /// coefficient is treated implicitly and subtracted explicitly.
    Imex1,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::ExplicitEuler => "explicit_euler",
            Scheme::Imex1 => "imex1",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "explicit_euler" => Some(Scheme::ExplicitEuler),
            "imex1" => Some(Scheme::Imex1),
            _ => None,
        }
    }
}

/// Coefficient of the implicit Laplacian in [`Scheme::Imex1`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stabilization {
    /// Recomputed every step from the grid maximum of the linearized
    /// diffusion coefficient.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub stab_h: Stabilization,
    pub stab_psi: Stabilization,
}

impl StepperConfig {
    pub fn new(dt: f64, scheme: Scheme) -> Result<Self, FlowError> {
        StepperConfig {
            dt,
            scheme,
            stab_h: Stabilization::Auto,
            stab_psi: Stabilization::Auto,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self, FlowError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(FlowError::TimeStep(self.dt));
        }
        for (name, s) in [("stab_h", self.stab_h), ("stab_psi", self.stab_psi)] {
            if let Stabilization::Fixed(value) = s {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(FlowError::Stabilization { name, value });
                }
            }
        }
        Ok(self)
    }
}

/// Everything evaluated at one instant: geometry, velocities and rates.
#[derive(Clone, Debug)]
pub struct Rates {
    /// Density after domain admission (clamping for Flory-Huggins).
    pub psi: ScalarField,
    pub dpsi: Derivatives,
    pub cache: GeometryCache,
    pub dth: ScalarField,
    /// Covariant proxy of the tangential material velocity.
    pub vflat: VectorField2,
    pub dtpsi: ScalarField,
}

/// A model variant together with its energy and mobilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowModel {
    pub variant: ModelVariant,
    pub energy: EnergyModel,
    pub mobilities: Mobilities,
}

impl FlowModel {
    pub fn new(variant: ModelVariant, energy: EnergyModel, mobilities: Mobilities) -> Result<Self, FlowError> {
        let energy = energy.validated()?;
        if variant == ModelVariant::MaterialGaugeQuadratic && !matches!(energy, EnergyModel::Quadratic { .. }) {
            return Err(FlowError::GaugeNeedsQuadratic(energy));
        }
        Ok(FlowModel {
            variant,
            energy,
            mobilities: Mobilities::new(mobilities.m_x, mobilities.m_psi)?,
        })
    }

    fn quadratic_c(&self) -> f64 {
        match self.energy {
            EnergyModel::Quadratic { c } => c,
            _ => unreachable!("checked in FlowModel::new"),
        }
    }

    /// Covariant tangential velocity proxy `v`.
    pub fn tangential_velocity(&self, psi: &ScalarField, dpsi: &VectorField2) -> VectorField2 {
        let m_x = self.mobilities.m_x;
        let coef = match self.variant {
            ModelVariant::NormalOnly => return VectorField2::zeros(psi.grid()),
            ModelVariant::MaterialGaugeQuadratic => {
                let c = self.quadratic_c();
                psi.map(|p| c * p / m_x)
            }
            ModelVariant::FullCoupled | ModelVariant::VelocitySubstituted => {
                let e = self.energy;
                psi.map(|p| -p * e.density(p, 2) / m_x)
            }
        };
        VectorField2 {
            x: coef.zip_map(&dpsi.x, |a, b| a * b),
            y: coef.zip_map(&dpsi.y, |a, b| a * b),
        }
    }

    /// `h_t` from the normal law.
    pub fn height_rhs(&self, psi: &ScalarField, cache: &GeometryCache) -> ScalarField {
        let m_x = self.mobilities.m_x;
        let tension = match self.variant {
            ModelVariant::MaterialGaugeQuadratic => {
                let c = self.quadratic_c();
                psi.map(|p| 0.5 * c * p * p)
            }
            _ => {
                let e = self.energy;
                psi.map(|p| e.tension(p, 0))
            }
        };
        let g = cache.g_det.values();
        let hf = cache.hfrak.values();
        let out = tension
            .values()
            .iter()
            .enumerate()
            .map(|(k, s)| g[k] * s * hf[k] / m_x)
            .collect();
        ScalarField::from_values(psi.grid(), out).expect("sized from grid")
    }

    /// `psi_t` of the selected variant. `vjac` is the Jacobian of `vflat`;
    /// it is only read by the variants that carry a tangential velocity
    /// explicitly and is computed on demand when absent.
    pub fn psi_rhs(
        &self,
        psi: &ScalarField,
        dpsi: &Derivatives,
        cache: &GeometryCache,
        dth: &ScalarField,
        vflat: &VectorField2,
        vjac: Option<&Jacobian>,
    ) -> ScalarField {
        let n = psi.grid().len();
        let (m_x, m_psi) = (self.mobilities.m_x, self.mobilities.m_psi);
        let e = self.energy;
        let p = psi.values();
        let (px, py) = (dpsi.d.x.values(), dpsi.d.y.values());
        let [pxx, pxy, pyy] = [dpsi.d2[0].values(), dpsi.d2[1].values(), dpsi.d2[2].values()];
        let (hx, hy) = (cache.dh.x.values(), cache.dh.y.values());
        let g = cache.g_det.values();
        let hf = cache.hfrak.values();
        let ht = dth.values();

        let mut out = vec![0.0; n];
        match self.variant {
            ModelVariant::VelocitySubstituted => {
                let r = m_psi / m_x;
                for k in 0..n {
                    let (f0, f1, f2, f3) = (
                        e.density(p[k], 0),
                        e.density(p[k], 1),
                        e.density(p[k], 2),
                        e.density(p[k], 3),
                    );
                    let ph = px[k] * hx[k] + py[k] * hy[k];
                    let lap_t = pxx[k] + pyy[k]
                        - (hx[k] * hx[k] * pxx[k] + 2.0 * hx[k] * hy[k] * pxy[k] + hy[k] * hy[k] * pyy[k]) / g[k];
                    let grad_sq = px[k] * px[k] + py[k] * py[k] - ph * ph / g[k];
                    let w = 1.0 + p[k] * p[k] * r;
                    let sigma = f0 - p[k] * f1;
                    let rhs = w * f2 * lap_t
                        + (w * f3 + 2.0 * p[k] * r * f2) * grad_sq
                        + (r * (sigma - p[k] * p[k] * f2) - f2) * ph * hf[k]
                        + g[k] * p[k] * r * sigma * hf[k] * hf[k];
                    out[k] = rhs / m_psi;
                }
            }
            variant => {
                let owned;
                let jac = match (variant, vjac) {
                    (ModelVariant::NormalOnly, _) => None,
                    (_, Some(j)) => Some(j),
                    (_, None) => {
                        owned = Jacobian::of(vflat);
                        Some(&owned)
                    }
                };
                let (vx, vy) = (vflat.x.values(), vflat.y.values());
                for k in 0..n {
                    let (f2, f3) = (e.density(p[k], 2), e.density(p[k], 3));
                    let ph = px[k] * hx[k] + py[k] * hy[k];
                    // f'' Delta psi + f''' |grad psi|^2
                    let lb = pxx[k] + pyy[k]
                        - ph * hf[k]
                        - (hx[k] * hx[k] * pxx[k] + 2.0 * hx[k] * hy[k] * pxy[k] + hy[k] * hy[k] * pyy[k]) / g[k];
                    let grad_sq = px[k] * px[k] + py[k] * py[k] - ph * ph / g[k];
                    let diffusion = (f2 * lb + f3 * grad_sq) / m_psi;
                    let transport = p[k] * hf[k] + ph / g[k];
                    let mut rate = diffusion + transport * ht[k];
                    if let Some(j) = jac {
                        let (jxx, jxy, jyx, jyy) =
                            (j.xx.values()[k], j.xy.values()[k], j.yx.values()[k], j.yy.values()[k]);
                        let contr = hx[k] * hx[k] * jxx + hx[k] * hy[k] * (jxy + jyx) + hy[k] * hy[k] * jyy;
                        let stretch = jxx + jyy - contr / g[k];
                        let advect = vx[k] * (px[k] - transport * hx[k]) + vy[k] * (py[k] - transport * hy[k]);
                        rate -= p[k] * stretch + advect;
                    }
                    out[k] = rate;
                }
            }
        }
        ScalarField::from_values(psi.grid(), out).expect("sized from grid")
    }

    /// Covariant proxy of the density flux, `q = -f''(psi) dpsi / M_psi`.
    pub fn flux_vector(&self, psi: &ScalarField, dpsi: &VectorField2) -> VectorField2 {
        let (e, m_psi) = (self.energy, self.mobilities.m_psi);
        let coef = psi.map(|p| -e.density(p, 2) / m_psi);
        VectorField2 {
            x: coef.zip_map(&dpsi.x, |a, b| a * b),
            y: coef.zip_map(&dpsi.y, |a, b| a * b),
        }
    }

    /// Geometry, velocities and time derivatives at `state`.
    pub fn rates(&self, state: &FlowState, clamps: &ClampCounter) -> Result<Rates, GridError> {
        state.h.ensure_finite("height")?;
        state.psi.ensure_finite("density")?;
        let (dh, dpsi) = Derivatives::of_pair(&state.h, &state.psi);
        let cache = GeometryCache::from_derivatives(&dh);
        let psi = self.energy.admit_field(&state.psi, clamps);
        let dth = self.height_rhs(&psi, &cache);
        let vflat = self.tangential_velocity(&psi, &dpsi.d);
        let vjac = match self.variant {
            ModelVariant::FullCoupled | ModelVariant::MaterialGaugeQuadratic => Some(Jacobian::of(&vflat)),
            _ => None,
        };
        let dtpsi = self.psi_rhs(&psi, &dpsi, &cache, &dth, &vflat, vjac.as_ref());
        Ok(Rates {
            psi,
            dpsi,
            cache,
            dth,
            vflat,
            dtpsi,
        })
    }

    /// Stabilization coefficients `(a_h, a_psi)` used by an IMEX step at
    /// the given density.
    pub fn stabilization(&self, psi: &ScalarField, stepper: &StepperConfig) -> (f64, f64) {
        if stepper.scheme == Scheme::ExplicitEuler {
            return (0.0, 0.0);
        }
        let Mobilities { m_x, m_psi } = self.mobilities;
        let e = self.energy;
        let a_h = match stepper.stab_h {
            Stabilization::Fixed(a) => a,
            Stabilization::Auto => psi.values().iter().fold(0.0f64, |m, &p| m.max(e.tension(p, 0).abs())) / m_x,
        };
        let a_psi = match stepper.stab_psi {
            Stabilization::Fixed(a) => a,
            Stabilization::Auto => {
                let r = m_psi / m_x;
                psi.values()
                    .iter()
                    .fold(0.0f64, |m, &p| m.max((1.0 + p * p * r) * e.density(p, 2)))
                    / m_psi
            }
        };
        (a_h, a_psi)
    }

    /// Advances `state` by one time step.
    ///
    /// Right-hand sides are dealiased once after assembly. With a
    /// stabilization coefficient `a`, the update solves
    /// `(I - dt a lap) u' = u + dt (rhs - a lap u)`; with `a = 0` it is the
    /// explicit Euler update.
    pub fn step(
        &self,
        state: &FlowState,
        stepper: &StepperConfig,
        clamps: &ClampCounter,
    ) -> Result<FlowState, FlowError> {
        let fail = |source: GridError| FlowError::NonFinite {
            step: state.step_index,
            t: state.t,
            source,
            last_valid: Box::new(state.clone()),
        };
        let rates = self.rates(state, clamps).map_err(fail)?;
        let (a_h, a_psi) = self.stabilization(&rates.psi, stepper);
        let dt = stepper.dt;
        let grid = state.grid().clone();

        let (rh_hat, rpsi_hat) = spectrum_pair(&rates.dth, &rates.dtpsi);
        let inc_h = increment(&grid, &rh_hat, dt, a_h);
        let inc_psi = increment(&grid, &rpsi_hat, dt, a_psi);
        let (dh, dpsi) = fields_pair(&inc_h, &inc_psi);
        let h = state.h.zip_map(&dh, |u, d| u + d);
        let psi = state.psi.zip_map(&dpsi, |u, d| u + d);
        let next_step = state.step_index + 1;
        let t = state.t + dt;
        let next_fail = |source: GridError| FlowError::NonFinite {
            step: next_step,
            t,
            source,
            last_valid: Box::new(state.clone()),
        };
        h.ensure_finite("height").map_err(next_fail)?;
        psi.ensure_finite("density").map_err(next_fail)?;
        Ok(FlowState {
            t,
            h,
            psi,
            step_index: next_step,
        })
    }
}

/// Spectrum of `u' - u` for the stabilized update; the dealiasing mask is
/// applied to the right-hand side only.
fn increment(grid: &Grid, rhs_hat: &Spectrum, dt: f64, a: f64) -> Spectrum {
    let (kx, ky) = (grid.kx(), grid.ky());
    rhs_hat.dealiased().map_modes(|i, j, r| {
        if a == 0.0 {
            r * dt
        } else {
            r * (dt / (1.0 + dt * a * (kx[i] * kx[i] + ky[j] * ky[j])))
        }
    })
}
