//! Pseudospectral simulation of coupled surface gradient flows.
//!
//! A graph surface `(x, y, h(t, x, y))` over a periodic rectangle carries a
//! conserved scalar density `psi` (e.g. surfactant coverage). The energy
//! `U = int_S f(psi) dS` is dissipated by moving the surface in normal and
//! tangential directions and by a mass-conserving flux of `psi`, where `psi`
//! responds to surface stretching through its Truesdell rate.
//!
//! Modules, bottom-up:
//!
//! * [`grid`]: periodic grids, sampled fields, spectral derivatives,
//!   dealiasing, quadrature and Helmholtz solves.
//! * [`geometry`]: metric, normal, mean curvature, Laplace-Beltrami,
//!   velocity reconstruction and Truesdell rates of a graph surface.
//! * [`energy`]: energy density presets and their surface tension.
//! * [`flow`]: right-hand sides of the model variants and time stepping.
//! * [`diagnostics`]: energy, mass and dissipation observables, convergence
//!   sweeps and the full-versus-normal comparison.
//! * [`io`]: run configuration, orchestration, CSV series and snapshots.

pub mod diagnostics;
pub mod energy;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod io;

pub use energy::{ClampCounter, EnergyModel};
pub use flow::{FlowModel, FlowState, Mobilities, ModelVariant, Scheme, Stabilization, StepperConfig};
pub use geometry::GeometryCache;
pub use grid::{Axis, Grid, ScalarField, VectorField2};
