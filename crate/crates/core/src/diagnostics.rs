//! Scalar observables of a run and the verification harnesses built on them.

use rayon::prelude::*;
use thiserror::Error;

use crate::energy::ClampCounter;
use crate::flow::{FlowError, FlowModel, FlowState, ModelVariant, Rates, StepperConfig};
use crate::geometry::{covariant_norm_sq, surface_integral};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("a convergence ladder needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("trajectory errors need every ladder point on the same grid")]
    GridLadder,
    #[error("final time must be positive and finite, got {0}")]
    FinalTime(f64),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Per-record observables.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `int_S f(psi) dS`
    pub energy: f64,
    /// `int_S psi dS`
    pub mass: f64,
    /// `mass(t) - mass(0)`
    pub mass_error: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub psi_min: f64,
    pub psi_max: f64,
    /// Backward difference of the energy against the previous record.
    pub dissipation_lhs: Option<f64>,
    /// `-(M_X |V|^2 + M_psi |q|^2)` integrated over the surface.
    pub dissipation_rhs: f64,
    pub clamp_count: u64,
}

/// Observables of `state`, with `rates` already evaluated at `state`.
pub fn record_from_rates(
    state: &FlowState,
    rates: &Rates,
    model: &FlowModel,
    clamps: &ClampCounter,
    prev: Option<&DiagnosticsRecord>,
) -> DiagnosticsRecord {
    let cache = &rates.cache;
    let energy = model.energy.total_energy(&rates.psi, cache, clamps);
    let mass = surface_integral(&state.psi, cache);
    let mass_error = match prev {
        None => 0.0,
        Some(p) => p.mass_error + (mass - p.mass),
    };
    let dissipation_lhs = prev.map(|p| (energy - p.energy) / (state.t - p.t));

    let v_sq = covariant_norm_sq(&rates.vflat, cache);
    let q = model.flux_vector(&rates.psi, &rates.dpsi.d);
    let q_sq = covariant_norm_sq(&q, cache);
    let (m_x, m_psi) = (model.mobilities.m_x, model.mobilities.m_psi);
    let density = v_sq
        .values()
        .iter()
        .zip(rates.dth.values())
        .zip(cache.g_det.values())
        .zip(q_sq.values())
        .map(|(((v2, ht), g), q2)| m_x * (v2 + ht * ht / g) + m_psi * q2)
        .collect();
    let density = crate::grid::ScalarField::from_values(state.grid(), density).expect("sized from grid");
    let dissipation_rhs = -surface_integral(&density, cache);

    DiagnosticsRecord {
        t: state.t,
        energy,
        mass,
        mass_error,
        h_min: state.h.min(),
        h_max: state.h.max(),
        psi_min: state.psi.min(),
        psi_max: state.psi.max(),
        dissipation_lhs,
        dissipation_rhs,
        clamp_count: clamps.get(),
    }
}

/// Observables of `state`; `dissipation_lhs` is absent without `prev`.
pub fn record(
    state: &FlowState,
    model: &FlowModel,
    clamps: &ClampCounter,
    prev: Option<&DiagnosticsRecord>,
) -> Result<DiagnosticsRecord, FlowError> {
    let rates = model.rates(state, clamps)?;
    Ok(record_from_rates(state, &rates, model, clamps, prev))
}

/// A simulation owning its state, clamp counter and recorded series.
pub struct Simulation {
    pub model: FlowModel,
    pub stepper: StepperConfig,
    pub state: FlowState,
    pub clamps: ClampCounter,
    pub records: Vec<DiagnosticsRecord>,
}

impl Simulation {
    pub fn new(model: FlowModel, stepper: StepperConfig, initial: FlowState) -> Result<Self, FlowError> {
        Ok(Simulation {
            model,
            stepper: stepper.validated()?,
            state: initial,
            clamps: ClampCounter::new(),
            records: Vec::new(),
        })
    }

    /// Appends a record of the current state.
    pub fn record(&mut self) -> Result<&DiagnosticsRecord, FlowError> {
        let rec = record(&self.state, &self.model, &self.clamps, self.records.last())?;
        self.records.push(rec);
        Ok(self.records.last().expect("just pushed"))
    }

    /// One step of size `dt` (the configured one unless overridden).
    pub fn advance(&mut self, dt: Option<f64>) -> Result<(), FlowError> {
        let mut stepper = self.stepper;
        if let Some(dt) = dt {
            stepper.dt = dt;
        }
        self.state = self.model.step(&self.state, &stepper, &self.clamps)?;
        Ok(())
    }

    /// Number of steps needed to reach `t_end` from the current time; the
    /// last one is shortened when `t_end` is not a multiple of `dt`.
    pub fn steps_to(&self, t_end: f64) -> u64 {
        let remaining = (t_end - self.state.t) / self.stepper.dt;
        if remaining <= 0.0 {
            0
        } else {
            (remaining - 1e-9).ceil().max(1.0) as u64
        }
    }

    /// Advances to `t_end`, recording at the start, every `record_every`
    /// steps and at the end. `observer` sees every state after a step.
    pub fn run_to<E>(
        &mut self,
        t_end: f64,
        record_every: u64,
        mut observer: impl FnMut(&FlowState) -> Result<(), E>,
    ) -> Result<(), E>
    where
        E: From<FlowError>,
    {
        let record_every = record_every.max(1);
        if self.records.is_empty() {
            self.record()?;
        }
        let n = self.steps_to(t_end);
        for k in 1..=n {
            if k < n {
                self.advance(None)?;
            } else {
                let last = t_end - self.state.t;
                let dt = (last - self.stepper.dt).abs() > 1e-9 * self.stepper.dt;
                self.advance(dt.then_some(last))?;
                // drop accumulated rounding in t
                self.state.t = t_end;
            }
            observer(&self.state)?;
            if k % record_every == 0 || k == n {
                self.record()?;
            }
        }
        Ok(())
    }
}

/// Runs one simulation to `t_end` and returns it with its records.
pub fn run_recorded(
    model: FlowModel,
    stepper: StepperConfig,
    initial: FlowState,
    t_end: f64,
    record_every: u64,
) -> Result<Simulation, FlowError> {
    let mut sim = Simulation::new(model, stepper, initial)?;
    sim.run_to(t_end, record_every, |_| Ok::<(), FlowError>(()))?;
    Ok(sim)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepQuantity {
    /// `|mass(t_end) - mass(0)|`
    MassError,
    /// Max-norm distance of `h` at `t_end` to the Richardson extrapolation
    /// `2 u(dt_min / 2) - u(dt_min)`, which is second-order accurate.
    TrajectoryError,
}

/// One rung of a convergence ladder.
#[derive(Debug, Clone)]
pub struct SweepCase {
    pub model: FlowModel,
    pub stepper: StepperConfig,
    pub initial: FlowState,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub dt: f64,
    pub n: usize,
    pub error: f64,
    /// Observed order against the previous row.
    pub order: Option<f64>,
}

fn final_state(case: &SweepCase) -> Result<FlowState, FlowError> {
    let mut sim = Simulation::new(case.model, case.stepper, case.initial.clone())?;
    sim.run_to(case.t_end, u64::MAX, |_| Ok::<(), FlowError>(()))?;
    Ok(sim.state)
}

/// Runs every case to its final time and reports errors and successive
/// observed orders `log(e_i / e_{i+1}) / log(dt_i / dt_{i+1})`.
pub fn convergence_sweep(cases: &[SweepCase], quantity: SweepQuantity) -> Result<Vec<SweepRow>, DiagnosticsError> {
    if cases.len() < 3 {
        return Err(DiagnosticsError::TooFewPoints(cases.len()));
    }
    for c in cases {
        if !(c.t_end.is_finite() && c.t_end > 0.0) {
            return Err(DiagnosticsError::FinalTime(c.t_end));
        }
    }
    let errors: Vec<f64> = match quantity {
        SweepQuantity::MassError => cases
            .par_iter()
            .map(|c| {
                let mut sim = Simulation::new(c.model, c.stepper, c.initial.clone())?;
                sim.run_to(c.t_end, u64::MAX, |_| Ok::<(), FlowError>(()))?;
                Ok(sim.records.last().expect("final record").mass_error.abs())
            })
            .collect::<Result<_, FlowError>>()?,
        SweepQuantity::TrajectoryError => {
            let grid = cases[0].initial.grid();
            if cases.iter().any(|c| c.initial.grid() != grid) {
                return Err(DiagnosticsError::GridLadder);
            }
            let finest = cases
                .iter()
                .min_by(|a, b| a.stepper.dt.total_cmp(&b.stepper.dt))
                .expect("non-empty ladder");
            let mut half = finest.clone();
            half.stepper.dt /= 2.0;
            let all: Vec<&SweepCase> = cases.iter().chain([finest, &half]).collect();
            let finals = all
                .par_iter()
                .map(|c| final_state(c))
                .collect::<Result<Vec<_>, FlowError>>()?;
            let (runs, extra) = finals.split_at(cases.len());
            let reference = extra[1].h.zip_map(&extra[0].h, |a, b| 2.0 * a - b);
            runs.iter().map(|s| s.h.max_abs_diff(&reference)).collect()
        }
    };
    let mut rows: Vec<SweepRow> = Vec::with_capacity(cases.len());
    for (c, &error) in cases.iter().zip(&errors) {
        let order = rows
            .last()
            .map(|p: &SweepRow| (p.error / error).ln() / (p.dt / c.stepper.dt).ln());
        rows.push(SweepRow {
            dt: c.stepper.dt,
            n: c.initial.grid().nx(),
            error,
            order,
        });
    }
    Ok(rows)
}

/// Shared setup of a full-versus-normal comparison.
#[derive(Debug, Clone)]
pub struct CompareSetup {
    pub model: FlowModel,
    pub stepper: StepperConfig,
    pub initial: FlowState,
    pub t_end: f64,
    pub record_every: u64,
    /// Records before this time are excluded from the energy ordering.
    pub transient: f64,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub full: Vec<DiagnosticsRecord>,
    pub normal: Vec<DiagnosticsRecord>,
    /// `U_full(t) <= U_normal(t)` at every paired record with `t >= transient`.
    pub full_energy_lower: bool,
    /// Final `psi_max - psi_min` is no larger for the full model.
    pub full_spread_smaller: bool,
}

/// Runs the full and the normal-only model from identical data.
pub fn compare_variants(setup: &CompareSetup) -> Result<Comparison, FlowError> {
    let run = |variant| {
        let model = FlowModel { variant, ..setup.model };
        run_recorded(
            model,
            setup.stepper,
            setup.initial.clone(),
            setup.t_end,
            setup.record_every,
        )
    };
    let (full, normal) = rayon::join(|| run(ModelVariant::FullCoupled), || run(ModelVariant::NormalOnly));
    let (full, normal) = (full?.records, normal?.records);
    let full_energy_lower = full
        .iter()
        .zip(&normal)
        .filter(|(f, _)| f.t >= setup.transient)
        .all(|(f, n)| f.energy <= n.energy);
    let spread = |r: &DiagnosticsRecord| r.psi_max - r.psi_min;
    let full_spread_smaller = match (full.last(), normal.last()) {
        (Some(f), Some(n)) => spread(f) <= spread(n),
        _ => false,
    };
    Ok(Comparison {
        full,
        normal,
        full_energy_lower,
        full_spread_smaller,
    })
}

/// Largest relative mismatch over recorded intervals between the backward
/// difference energy rate and the interval average of the dissipation
/// integral. `None` when fewer than two records are present.
pub fn dissipation_mismatch(records: &[DiagnosticsRecord]) -> Option<f64> {
    records
        .windows(2)
        .filter_map(|w| {
            let lhs = w[1].dissipation_lhs?;
            let rhs = 0.5 * (w[0].dissipation_rhs + w[1].dissipation_rhs);
            Some((lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE))
        })
        .reduce(f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::EnergyModel;
    use crate::flow::{Mobilities, Scheme};
    use crate::grid::{Grid, ScalarField};

    fn state(n: usize) -> FlowState {
        let g = Grid::square(n).unwrap();
        let h = ScalarField::from_fn(&g, |x, y| 0.3 * (2.0 * x).sin() * y.cos());
        let psi = ScalarField::from_fn(&g, |x, y| 0.4 + 0.05 * (x + y).cos());
        FlowState::new(h, psi).unwrap()
    }

    fn model(variant: ModelVariant, energy: EnergyModel) -> FlowModel {
        FlowModel::new(variant, energy, Mobilities::new(2.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn run_to_records_start_cadence_and_end() {
        let m = model(ModelVariant::FullCoupled, EnergyModel::quadratic(1.0).unwrap());
        let stepper = StepperConfig::new(1e-3, Scheme::Imex1).unwrap();
        let mut sim = Simulation::new(m, stepper, state(16)).unwrap();
        assert_eq!(sim.steps_to(0.0105), 11);
        assert_eq!(sim.steps_to(0.01), 10);
        let mut seen = 0;
        sim.run_to(0.0105, 4, |_| {
            seen += 1;
            Ok::<(), FlowError>(())
        })
        .unwrap();
        assert_eq!(seen, 11);
        let times: Vec<f64> = sim.records.iter().map(|r| r.t).collect();
        assert_eq!(times.len(), 4);
        assert_eq!(times[0], 0.0);
        assert!((times[1] - 0.004).abs() < 1e-15 && (times[2] - 0.008).abs() < 1e-15);
        assert_eq!(times[3], 0.0105);
        assert_eq!(sim.state.step_index, 11);
        assert!(sim.records[0].dissipation_lhs.is_none());
        assert!(sim.records[1..].iter().all(|r| r.dissipation_lhs.is_some()));
    }

    #[test]
    fn linear_energy_records_are_constant() {
        let m = model(ModelVariant::FullCoupled, EnergyModel::linear(1.5).unwrap());
        let stepper = StepperConfig::new(1e-3, Scheme::Imex1).unwrap();
        let sim = run_recorded(m, stepper, state(16), 0.02, 5).unwrap();
        let e0 = sim.records[0].energy;
        for r in &sim.records {
            assert_eq!(r.energy, e0);
            assert_eq!(r.mass_error, 0.0);
            assert_eq!(r.dissipation_rhs, 0.0);
            assert_eq!(r.clamp_count, 0);
        }
    }

    #[test]
    fn record_fields() {
        let s = state(16);
        let m = model(ModelVariant::FullCoupled, EnergyModel::constant(2.0).unwrap());
        let r = record(&s, &m, &ClampCounter::new(), None).unwrap();
        let cache = crate::geometry::build_cache(&s.h).unwrap();
        assert!((r.energy - 2.0 * cache.area()).abs() < 1e-12);
        assert_eq!((r.h_min, r.h_max), (s.h.min(), s.h.max()));
        assert_eq!(r.mass_error, 0.0);
        assert!(r.dissipation_rhs < 0.0);
    }

    #[test]
    fn mismatch_metric() {
        let rec = |t: f64, energy: f64, lhs: Option<f64>, rhs: f64| DiagnosticsRecord {
            t,
            energy,
            mass: 1.0,
            mass_error: 0.0,
            h_min: 0.0,
            h_max: 0.0,
            psi_min: 0.0,
            psi_max: 0.0,
            dissipation_lhs: lhs,
            dissipation_rhs: rhs,
            clamp_count: 0,
        };
        let records = [
            rec(0.0, 1.0, None, -2.0),
            rec(0.1, 0.8, Some(-2.1), -2.0),
            rec(0.2, 0.6, Some(-2.0), -1.0),
        ];
        let m = dissipation_mismatch(&records).unwrap();
        assert!((m - 0.5 / 1.5).abs() < 1e-15);
        assert!(dissipation_mismatch(&records[..1]).is_none());
    }

    #[test]
    fn sweep_validates_ladder() {
        let m = model(ModelVariant::FullCoupled, EnergyModel::quadratic(1.0).unwrap());
        let case = |dt| SweepCase {
            model: m,
            stepper: StepperConfig::new(dt, Scheme::ExplicitEuler).unwrap(),
            initial: state(16),
            t_end: 0.004,
        };
        assert!(matches!(
            convergence_sweep(&[case(1e-3), case(5e-4)], SweepQuantity::MassError),
            Err(DiagnosticsError::TooFewPoints(2))
        ));
        let mut mixed = vec![case(1e-3), case(5e-4), case(2.5e-4)];
        mixed[1].initial = state(32);
        assert!(matches!(
            convergence_sweep(&mixed, SweepQuantity::TrajectoryError),
            Err(DiagnosticsError::GridLadder)
        ));
        let rows = convergence_sweep(&[case(1e-3), case(5e-4), case(2.5e-4)], SweepQuantity::TrajectoryError).unwrap();
        assert!(rows[0].order.is_none());
        for r in &rows[1..] {
            let p = r.order.unwrap();
            assert!((0.8..1.2).contains(&p), "observed order {p}");
        }
    }

    #[test]
    fn compare_constant_energy_is_degenerate() {
        let setup = CompareSetup {
            model: model(ModelVariant::FullCoupled, EnergyModel::constant(1.0).unwrap()),
            stepper: StepperConfig::new(1e-3, Scheme::Imex1).unwrap(),
            initial: state(16),
            t_end: 0.01,
            record_every: 2,
            transient: 0.0,
        };
        let cmp = compare_variants(&setup).unwrap();
        assert_eq!(cmp.full, cmp.normal);
        assert!(cmp.full_energy_lower && cmp.full_spread_smaller);
    }
}
