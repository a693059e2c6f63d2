//! Run configuration, file formats and run orchestration.
//!
//! Configuration files are flat `section.key = value` documents with `#`
//! comments; see the README for the full key list. Time series are written
//! as CSV and states as little-endian binary snapshots.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::diagnostics::{
    self, CompareSetup, DiagnosticsError, DiagnosticsRecord, Simulation, SweepCase, SweepQuantity, SweepRow,
};
use crate::energy::EnergyModel;
use crate::flow::{FlowError, FlowModel, FlowState, Mobilities, ModelVariant, Scheme, Stabilization, StepperConfig};
use crate::grid::{Grid, GridError, ScalarField};

/// Header of every time-series CSV file.
pub const CSV_HEADER: &str =
    "t,energy,mass,mass_error,h_min,h_max,psi_min,psi_max,dissipation_lhs,dissipation_rhs,clamp_count";

/// Records before this time are ignored by the energy ordering of a comparison.
pub const COMPARE_TRANSIENT: f64 = 0.05;

const SNAPSHOT_MAGIC: &[u8; 4] = b"SGF1";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `section.key = value`")]
    Syntax { line: usize },
    #[error("line {line}: `{key}` is set twice")]
    Duplicate { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("`{key}`: cannot parse `{value}` as {expected}")]
    Type {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("`{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: not a snapshot file (bad magic)")]
    BadMagic { path: PathBuf },
    #[error("{path}: truncated snapshot, expected {expected} bytes, found {found}")]
    Truncated { path: PathBuf, expected: u64, found: u64 },
    #[error("{path}: snapshot is {found_nx}x{found_ny}, expected {nx}x{ny}")]
    Shape {
        path: PathBuf,
        nx: usize,
        ny: usize,
        found_nx: usize,
        found_ny: usize,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialHeight {
    /// `amplitude * sin(2x) sin(2y)`
    Sin2xSin2y {
        amplitude: f64,
    },
    /// `amplitude * sin(2x)`
    Sin2x {
        amplitude: f64,
    },
    Zero,
    /// Height field of a snapshot file.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialDensity {
    Constant(f64),
    /// Density field of a snapshot file.
    File(PathBuf),
}

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub dealias: bool,
    pub energy: EnergyModel,
    pub mobilities: Mobilities,
    pub variant: ModelVariant,
    pub stepper: StepperConfig,
    pub t_end: f64,
    pub record_every: u64,
    pub snapshot_times: Vec<f64>,
    pub initial_h: InitialHeight,
    pub initial_psi: InitialDensity,
    pub output_dir: PathBuf,
    /// Reserved; no part of the solver is random.
    pub seed: u64,
}

const KEYS: &[&str] = &[
    "grid.nx",
    "grid.ny",
    "grid.lx",
    "grid.ly",
    "grid.dealias",
    "energy.kind",
    "energy.c",
    "energy.sigma0",
    "energy.beta",
    "energy.chi",
    "mobility.m_x",
    "mobility.m_psi",
    "model.variant",
    "stepper.dt",
    "stepper.scheme",
    "stepper.stab_h",
    "stepper.stab_psi",
    "run.t_end",
    "run.record_every",
    "run.snapshot_times",
    "run.output_dir",
    "run.seed",
    "initial.h",
    "initial.h_amplitude",
    "initial.psi",
];

struct Entries(BTreeMap<String, (usize, String)>);

impl Entries {
    fn take(&mut self, key: &'static str) -> Option<String> {
        self.0.remove(key).map(|(_, v)| v)
    }

    fn required(&mut self, key: &'static str) -> Result<String, ConfigError> {
        self.take(key).ok_or(ConfigError::Missing(key))
    }

    fn parsed<T>(
        &mut self,
        key: &'static str,
        expected: &'static str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Result<Option<T>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(value) => parse(&value).map(Some).ok_or_else(|| ConfigError::Type {
                key: key.to_string(),
                value,
                expected,
            }),
        }
    }

    fn real(&mut self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        self.parsed(key, "a real number", parse_real)
    }

    fn integer(&mut self, key: &'static str) -> Result<Option<u64>, ConfigError> {
        self.parsed(key, "a non-negative integer", |s| s.parse().ok())
    }

    /// Rejects a key that does not apply to the chosen option.
    fn unused(&mut self, key: &'static str, because: &str) -> Result<(), ConfigError> {
        match self.take(key) {
            None => Ok(()),
            Some(_) => Err(invalid(key, format!("does not apply to {because}"))),
        }
    }
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Reals, optionally written as multiples of pi (`pi`, `2pi`, `0.5pi`).
fn parse_real(s: &str) -> Option<f64> {
    let v = match s.strip_suffix("pi") {
        Some("") => PI,
        Some(m) => m.trim().parse::<f64>().ok()? * PI,
        None => s.parse().ok()?,
    };
    v.is_finite().then_some(v)
}

fn parse_stab(s: &str) -> Option<Stabilization> {
    match s {
        "auto" => Some(Stabilization::Auto),
        "off" => Some(Stabilization::Fixed(0.0)),
        _ => match parse_real(s)? {
            0.0 => Some(Stabilization::Auto),
            a => Some(Stabilization::Fixed(a)),
        },
    }
}

fn fmt_stab(s: Stabilization) -> String {
    match s {
        Stabilization::Auto => "auto".to_string(),
        Stabilization::Fixed(0.0) => "off".to_string(),
        Stabilization::Fixed(a) => format!("{a:?}"),
    }
}

fn file_path(s: &str) -> Option<PathBuf> {
    s.strip_prefix("file:").map(|p| PathBuf::from(p.trim()))
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let (key, value) = (key.trim(), value.trim());
        if !key.contains('.') || value.is_empty() {
            return Err(ConfigError::Syntax { line });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        if map.insert(key.to_string(), (line, value.to_string())).is_some() {
            return Err(ConfigError::Duplicate {
                line,
                key: key.to_string(),
            });
        }
    }
    let mut e = Entries(map);

    let nx = e.integer("grid.nx")?.ok_or(ConfigError::Missing("grid.nx"))? as usize;
    let ny = e.integer("grid.ny")?.map_or(nx, |n| n as usize);
    for (key, n) in [("grid.nx", nx), ("grid.ny", ny)] {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(invalid(key, format!("must be an even number of at least 8, got {n}")));
        }
    }
    let lx = e.real("grid.lx")?.unwrap_or(2.0 * PI);
    let ly = e.real("grid.ly")?.unwrap_or(2.0 * PI);
    for (key, l) in [("grid.lx", lx), ("grid.ly", ly)] {
        if l <= 0.0 {
            return Err(invalid(key, format!("must be positive, got {l}")));
        }
    }
    let dealias = e
        .parsed("grid.dealias", "true or false", |s| s.parse().ok())?
        .unwrap_or(true);

    let kind = e.required("energy.kind")?;
    let energy = match kind.as_str() {
        "constant" | "linear" | "quadratic" => {
            let c = e.real("energy.c")?.unwrap_or(1.0);
            for key in ["energy.sigma0", "energy.beta", "energy.chi"] {
                e.unused(key, &kind)?;
            }
            match kind.as_str() {
                "constant" => EnergyModel::constant(c),
                "linear" => EnergyModel::linear(c),
                _ => EnergyModel::quadratic(c),
            }
            .map_err(|err| invalid("energy.c", err.to_string()))?
        }
        "flory_huggins" => {
            e.unused("energy.c", &kind)?;
            let sigma0 = e.real("energy.sigma0")?.unwrap_or(1.0);
            let beta = e.real("energy.beta")?.ok_or(ConfigError::Missing("energy.beta"))?;
            let chi = e.real("energy.chi")?.unwrap_or(0.0);
            EnergyModel::flory_huggins(sigma0, beta, chi).map_err(|err| invalid("energy.beta", err.to_string()))?
        }
        other => {
            return Err(ConfigError::Type {
                key: "energy.kind".into(),
                value: other.into(),
                expected: "constant, linear, quadratic or flory_huggins",
            })
        }
    };

    let m_x = e.real("mobility.m_x")?.ok_or(ConfigError::Missing("mobility.m_x"))?;
    let m_psi = e
        .real("mobility.m_psi")?
        .ok_or(ConfigError::Missing("mobility.m_psi"))?;
    let mobilities = Mobilities::new(m_x, m_psi).map_err(|err| match err {
        FlowError::Mobility { name, .. } => invalid(&format!("mobility.{name}"), err.to_string()),
        other => invalid("mobility.m_x", other.to_string()),
    })?;

    let variant = e
        .parsed(
            "model.variant",
            "full_coupled, velocity_substituted, normal_only or material_gauge_quadratic",
            ModelVariant::from_name,
        )?
        .unwrap_or(ModelVariant::FullCoupled);
    FlowModel::new(variant, energy, mobilities).map_err(|err| invalid("model.variant", err.to_string()))?;

    let dt = e.real("stepper.dt")?.ok_or(ConfigError::Missing("stepper.dt"))?;
    if dt <= 0.0 {
        return Err(invalid("stepper.dt", format!("must be positive, got {dt}")));
    }
    let scheme = e
        .parsed("stepper.scheme", "explicit_euler or imex1", Scheme::from_name)?
        .unwrap_or(Scheme::Imex1);
    let stab_h = e
        .parsed("stepper.stab_h", "auto, off or a non-negative real", parse_stab)?
        .unwrap_or(Stabilization::Auto);
    let stab_psi = e
        .parsed("stepper.stab_psi", "auto, off or a non-negative real", parse_stab)?
        .unwrap_or(Stabilization::Auto);
    for (key, s) in [("stepper.stab_h", stab_h), ("stepper.stab_psi", stab_psi)] {
        if let Stabilization::Fixed(a) = s {
            if a < 0.0 {
                return Err(invalid(key, format!("must be non-negative, got {a}")));
            }
        }
    }
    let stepper = StepperConfig {
        dt,
        scheme,
        stab_h,
        stab_psi,
    };

    let t_end = e.real("run.t_end")?.ok_or(ConfigError::Missing("run.t_end"))?;
    if t_end <= 0.0 {
        return Err(invalid("run.t_end", format!("must be positive, got {t_end}")));
    }
    if dt > t_end {
        return Err(invalid(
            "stepper.dt",
            format!("must not exceed run.t_end = {t_end}, got {dt}"),
        ));
    }
    let record_every = e.integer("run.record_every")?.unwrap_or(100);
    if record_every == 0 {
        return Err(invalid("run.record_every", "must be at least 1"));
    }
    let snapshot_times = e
        .parsed("run.snapshot_times", "a comma-separated list of reals", |s| {
            s.split(',').map(|t| parse_real(t.trim())).collect::<Option<Vec<_>>>()
        })?
        .unwrap_or_default();
    if let Some(t) = snapshot_times.iter().find(|&&t| !(0.0..=t_end).contains(&t)) {
        return Err(invalid("run.snapshot_times", format!("{t} lies outside [0, {t_end}]")));
    }
    let output_dir = e
        .take("run.output_dir")
        .map_or_else(|| PathBuf::from("out"), PathBuf::from);
    let seed = e.integer("run.seed")?.unwrap_or(0);

    let h = e.required("initial.h")?;
    let initial_h = match h.as_str() {
        "sin2x_sin2y" | "sin2x" => {
            let amplitude = e.real("initial.h_amplitude")?.unwrap_or(1.0);
            if h == "sin2x" {
                InitialHeight::Sin2x { amplitude }
            } else {
                InitialHeight::Sin2xSin2y { amplitude }
            }
        }
        _ => {
            e.unused("initial.h_amplitude", &h)?;
            match (h.as_str(), file_path(&h)) {
                ("zero", _) => InitialHeight::Zero,
                (_, Some(p)) => InitialHeight::File(p),
                _ => {
                    return Err(ConfigError::Type {
                        key: "initial.h".into(),
                        value: h,
                        expected: "sin2x_sin2y, sin2x, zero or file:<path>",
                    })
                }
            }
        }
    };
    let psi = e.required("initial.psi")?;
    let initial_psi = match (file_path(&psi), parse_real(&psi)) {
        (Some(p), _) => InitialDensity::File(p),
        (None, Some(v)) => InitialDensity::Constant(v),
        (None, None) => {
            return Err(ConfigError::Type {
                key: "initial.psi".into(),
                value: psi,
                expected: "a real number or file:<path>",
            })
        }
    };

    debug_assert!(e.0.is_empty(), "every known key is consumed");
    Ok(RunConfig {
        nx,
        ny,
        lx,
        ly,
        dealias,
        energy,
        mobilities,
        variant,
        stepper,
        t_end,
        record_every,
        snapshot_times,
        initial_h,
        initial_psi,
        output_dir,
        seed,
    })
}

/// Prints the configuration in the format accepted by [`parse_config`].
impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "grid.nx = {}", self.nx)?;
        writeln!(f, "grid.ny = {}", self.ny)?;
        writeln!(f, "grid.lx = {:?}", self.lx)?;
        writeln!(f, "grid.ly = {:?}", self.ly)?;
        writeln!(f, "grid.dealias = {}", self.dealias)?;
        match self.energy {
            EnergyModel::Constant { c } => writeln!(f, "energy.kind = constant\nenergy.c = {c:?}")?,
            EnergyModel::Linear { c } => writeln!(f, "energy.kind = linear\nenergy.c = {c:?}")?,
            EnergyModel::Quadratic { c } => writeln!(f, "energy.kind = quadratic\nenergy.c = {c:?}")?,
            EnergyModel::FloryHuggins { sigma0, beta, chi } => writeln!(
                f,
                "energy.kind = flory_huggins\nenergy.sigma0 = {sigma0:?}\nenergy.beta = {beta:?}\nenergy.chi = {chi:?}"
            )?,
        }
        writeln!(f, "mobility.m_x = {:?}", self.mobilities.m_x)?;
        writeln!(f, "mobility.m_psi = {:?}", self.mobilities.m_psi)?;
        writeln!(f, "model.variant = {}", self.variant.name())?;
        writeln!(f, "stepper.dt = {:?}", self.stepper.dt)?;
        writeln!(f, "stepper.scheme = {}", self.stepper.scheme.name())?;
        writeln!(f, "stepper.stab_h = {}", fmt_stab(self.stepper.stab_h))?;
        writeln!(f, "stepper.stab_psi = {}", fmt_stab(self.stepper.stab_psi))?;
        writeln!(f, "run.t_end = {:?}", self.t_end)?;
        writeln!(f, "run.record_every = {}", self.record_every)?;
        if !self.snapshot_times.is_empty() {
            let times: Vec<String> = self.snapshot_times.iter().map(|t| format!("{t:?}")).collect();
            writeln!(f, "run.snapshot_times = {}", times.join(", "))?;
        }
        writeln!(f, "run.output_dir = {}", self.output_dir.display())?;
        writeln!(f, "run.seed = {}", self.seed)?;
        match &self.initial_h {
            InitialHeight::Sin2xSin2y { amplitude } => {
                writeln!(f, "initial.h = sin2x_sin2y\ninitial.h_amplitude = {amplitude:?}")?
            }
            InitialHeight::Sin2x { amplitude } => {
                writeln!(f, "initial.h = sin2x\ninitial.h_amplitude = {amplitude:?}")?
            }
            InitialHeight::Zero => writeln!(f, "initial.h = zero")?,
            InitialHeight::File(p) => writeln!(f, "initial.h = file:{}", p.display())?,
        }
        match &self.initial_psi {
            InitialDensity::Constant(v) => writeln!(f, "initial.psi = {v:?}"),
            InitialDensity::File(p) => writeln!(f, "initial.psi = file:{}", p.display()),
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, IoError> {
        Ok(parse_config(&fs::read_to_string(path)?)?)
    }

    pub fn grid(&self) -> Result<std::sync::Arc<Grid>, GridError> {
        Grid::new(self.nx, self.ny, self.lx, self.ly, self.dealias)
    }

    pub fn model(&self) -> Result<FlowModel, FlowError> {
        FlowModel::new(self.variant, self.energy, self.mobilities)
    }

    /// Initial state on the configured grid, reading snapshot files as needed.
    pub fn initial_state(&self) -> Result<FlowState, IoError> {
        let grid = self.grid()?;
        let load = |path: &Path| -> Result<FlowState, IoError> {
            let s = read_snapshot(path)?;
            let g = s.grid();
            if (g.nx(), g.ny()) != (self.nx, self.ny) {
                return Err(IoError::Shape {
                    path: path.to_path_buf(),
                    nx: self.nx,
                    ny: self.ny,
                    found_nx: g.nx(),
                    found_ny: g.ny(),
                });
            }
            Ok(s)
        };
        let h = match &self.initial_h {
            InitialHeight::Sin2xSin2y { amplitude } => {
                ScalarField::from_fn(&grid, |x, y| amplitude * (2.0 * x).sin() * (2.0 * y).sin())
            }
            InitialHeight::Sin2x { amplitude } => ScalarField::from_fn(&grid, |x, _| amplitude * (2.0 * x).sin()),
            InitialHeight::Zero => ScalarField::zeros(&grid),
            InitialHeight::File(p) => ScalarField::from_values(&grid, load(p)?.h.into_values())?,
        };
        let psi = match &self.initial_psi {
            InitialDensity::Constant(v) => ScalarField::constant(&grid, *v),
            InitialDensity::File(p) => ScalarField::from_values(&grid, load(p)?.psi.into_values())?,
        };
        Ok(FlowState::new(h, psi)?)
    }
}

/// Writes `state` in the binary snapshot format.
pub fn write_snapshot(state: &FlowState, path: impl AsRef<Path>) -> io::Result<()> {
    let grid = state.grid();
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(SNAPSHOT_MAGIC)?;
    out.write_all(&(grid.nx() as u32).to_le_bytes())?;
    out.write_all(&(grid.ny() as u32).to_le_bytes())?;
    for v in [grid.lx(), grid.ly(), state.t] {
        out.write_all(&v.to_le_bytes())?;
    }
    for v in state.h.values().iter().chain(state.psi.values()) {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()
}

/// Reads a snapshot; the grid is rebuilt with dealiasing enabled.
pub fn read_snapshot(path: impl AsRef<Path>) -> Result<FlowState, IoError> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let truncated = |expected: usize| IoError::Truncated {
        path: path.to_path_buf(),
        expected: expected as u64,
        found: bytes.len() as u64,
    };
    const HEADER: usize = 4 + 4 + 4 + 3 * 8;
    if bytes.len() < 4 || &bytes[..4] != SNAPSHOT_MAGIC {
        return Err(IoError::BadMagic {
            path: path.to_path_buf(),
        });
    }
    if bytes.len() < HEADER {
        return Err(truncated(HEADER));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let (nx, ny) = (u32_at(4), u32_at(8));
    let (lx, ly, t) = (f64_at(12), f64_at(20), f64_at(28));
    let n = nx * ny;
    let expected = HEADER + 16 * n;
    if bytes.len() != expected {
        return Err(truncated(expected));
    }
    let field = |start: usize| (0..n).map(|k| f64_at(start + 8 * k)).collect::<Vec<_>>();
    let grid = Grid::new(nx, ny, lx, ly, true)?;
    let h = ScalarField::from_values(&grid, field(HEADER))?;
    let psi = ScalarField::from_values(&grid, field(HEADER + 8 * n))?;
    let mut state = FlowState::new(h, psi)?;
    state.t = t;
    Ok(state)
}

fn csv_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes records as CSV; the first row has an empty `dissipation_lhs`.
pub fn write_series(records: &[DiagnosticsRecord], out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        let lhs = r.dissipation_lhs.map(csv_real).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            csv_real(r.t),
            csv_real(r.energy),
            csv_real(r.mass),
            csv_real(r.mass_error),
            csv_real(r.h_min),
            csv_real(r.h_max),
            csv_real(r.psi_min),
            csv_real(r.psi_max),
            lhs,
            csv_real(r.dissipation_rhs),
            r.clamp_count
        )?;
    }
    Ok(())
}

fn write_series_file(records: &[DiagnosticsRecord], path: &Path) -> io::Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    write_series(records, &mut out)?;
    out.flush()
}

/// Outcome of [`run`].
#[derive(Debug, Clone)]
pub struct RunReport {
    pub steps: u64,
    pub final_record: DiagnosticsRecord,
    pub clamp_count: u64,
    pub wall_time: f64,
    pub snapshots: Vec<PathBuf>,
}

fn write_report(path: &Path, config: &RunConfig, report: &RunReport, status: &str) -> io::Result<()> {
    let r = &report.final_record;
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "status = {status}")?;
    writeln!(out, "variant = {}", config.variant)?;
    writeln!(out, "energy = {}", config.energy)?;
    writeln!(out, "grid = {}x{}", config.nx, config.ny)?;
    writeln!(out, "dt = {:?}", config.stepper.dt)?;
    writeln!(out, "steps = {}", report.steps)?;
    writeln!(out, "t = {}", csv_real(r.t))?;
    writeln!(out, "energy_final = {}", csv_real(r.energy))?;
    writeln!(out, "mass_final = {}", csv_real(r.mass))?;
    writeln!(out, "mass_error = {}", csv_real(r.mass_error))?;
    writeln!(out, "h_range = {}", csv_real(r.h_max - r.h_min))?;
    writeln!(out, "psi_range = {}", csv_real(r.psi_max - r.psi_min))?;
    writeln!(out, "clamp_count = {}", report.clamp_count)?;
    if report.clamp_count > 0 {
        writeln!(
            out,
            "warning = density left (0, 1) and was clamped {} times",
            report.clamp_count
        )?;
    }
    writeln!(out, "wall_time_s = {:.3}", report.wall_time)?;
    out.flush()
}

/// Runs `config`, writing `series.csv`, snapshots and `report.txt` to `out_dir`.
///
/// If the solution blows up, the records so far, a `last_valid.sgf`
/// snapshot and a report with `status = failed` are still written before
/// the error is returned.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunReport, IoError> {
    fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let mut sim = Simulation::new(config.model()?, config.stepper, config.initial_state()?)?;
    let half_dt = 0.5 * config.stepper.dt;
    let mut pending: Vec<f64> = config.snapshot_times.clone();
    pending.sort_by(f64::total_cmp);
    let mut snapshots = Vec::new();
    let mut take_snapshots = |state: &FlowState, pending: &mut Vec<f64>| -> io::Result<()> {
        while pending.first().is_some_and(|&t| t <= state.t + half_dt) {
            pending.remove(0);
            let path = out_dir.join(format!("snapshot_{:03}.sgf", snapshots.len()));
            write_snapshot(state, &path)?;
            snapshots.push(path);
        }
        Ok(())
    };
    take_snapshots(&sim.state, &mut pending)?;
    let outcome = sim.run_to(config.t_end, config.record_every, |state| {
        take_snapshots(state, &mut pending).map_err(IoError::from)
    });

    write_series_file(&sim.records, &out_dir.join("series.csv"))?;
    let report = RunReport {
        steps: sim.state.step_index,
        final_record: sim.records.last().expect("initial record").clone(),
        clamp_count: sim.clamps.get(),
        wall_time: start.elapsed().as_secs_f64(),
        snapshots,
    };
    match outcome {
        Ok(()) => {
            write_snapshot(&sim.state, out_dir.join("final.sgf"))?;
            write_report(&out_dir.join("report.txt"), config, &report, "ok")?;
            Ok(report)
        }
        Err(err) => {
            if let IoError::Flow(FlowError::NonFinite { last_valid, .. }) = &err {
                write_snapshot(last_valid, out_dir.join("last_valid.sgf"))?;
            }
            write_report(&out_dir.join("report.txt"), config, &report, &format!("failed: {err}"))?;
            Err(err)
        }
    }
}

/// Runs the full and the normal-only variants of `config` and writes
/// `series_full.csv`, `series_normal.csv` and `compare.txt`.
pub fn compare(config: &RunConfig, out_dir: &Path) -> Result<diagnostics::Comparison, IoError> {
    fs::create_dir_all(out_dir)?;
    let setup = CompareSetup {
        model: config.model()?,
        stepper: config.stepper,
        initial: config.initial_state()?,
        t_end: config.t_end,
        record_every: config.record_every,
        transient: COMPARE_TRANSIENT,
    };
    let cmp = diagnostics::compare_variants(&setup)?;
    write_series_file(&cmp.full, &out_dir.join("series_full.csv"))?;
    write_series_file(&cmp.normal, &out_dir.join("series_normal.csv"))?;
    let mut out = BufWriter::new(fs::File::create(out_dir.join("compare.txt"))?);
    writeln!(out, "full_energy_lower = {}", cmp.full_energy_lower)?;
    writeln!(out, "full_spread_smaller = {}", cmp.full_spread_smaller)?;
    writeln!(out, "transient = {COMPARE_TRANSIENT:?}")?;
    out.flush()?;
    Ok(cmp)
}

/// Repeats `config` over a ladder of time steps and writes `sweep.csv`.
pub fn sweep(
    config: &RunConfig,
    ladder: &[f64],
    quantity: SweepQuantity,
    out_dir: &Path,
) -> Result<Vec<SweepRow>, IoError> {
    fs::create_dir_all(out_dir)?;
    let model = config.model()?;
    let initial = config.initial_state()?;
    let cases = ladder
        .iter()
        .map(|&dt| {
            let stepper = StepperConfig { dt, ..config.stepper }.validated()?;
            Ok(SweepCase {
                model,
                stepper,
                initial: initial.clone(),
                t_end: config.t_end,
            })
        })
        .collect::<Result<Vec<_>, FlowError>>()?;
    let rows = diagnostics::convergence_sweep(&cases, quantity)?;
    let mut out = BufWriter::new(fs::File::create(out_dir.join("sweep.csv"))?);
    writeln!(out, "dt,n,error,order")?;
    for r in &rows {
        let order = r.order.map(csv_real).unwrap_or_default();
        writeln!(out, "{},{},{},{}", csv_real(r.dt), r.n, csv_real(r.error), order)?;
    }
    out.flush()?;
    Ok(rows)
}
