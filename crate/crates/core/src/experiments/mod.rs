//! Parameter sweeps over process time, buffer size, anharmonicity,
//! temperature and particle number, the minimal-buffer search and the
//! temperature-compensation report. All outputs are CSV.

mod config;
mod pool;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

pub use config::{parse_config, parse_list};

use crate::error::{Error, Result};
use crate::fidelity::Method;
use crate::grid::Grid;
use crate::potentials::{Shape, Task, TaskKind};
use crate::scenario::{Evolution, Numerics, Scenario};
use crate::spectral;
use crate::thermal::{self, ThermalEnsemble, DEFAULT_TAIL_BOUND};

pub const DEFAULT_THRESHOLD: f64 = 0.95;

/// The swept quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    ProcessTime,
    BufferCount,
    Anharmonicity,
    Temperature,
    /// Fermi gap `E_{N+1} - E_N` of the initial trap versus `N`.
    ParticleNumberGap,
}

impl Axis {
    /// Column name used in configs and CSV output.
    pub fn key(self) -> &'static str {
        match self {
            Axis::ProcessTime => "T",
            Axis::BufferCount => "N_b",
            Axis::Anharmonicity => "lambda",
            Axis::Temperature => "tau",
            Axis::ParticleNumberGap => "N",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, Axis::BufferCount | Axis::ParticleNumberGap)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "T" | "time" | "process_time" => Ok(Axis::ProcessTime),
            "N_b" | "buffer" | "buffers" => Ok(Axis::BufferCount),
            "lambda" | "anharmonicity" => Ok(Axis::Anharmonicity),
            "tau" | "temperature" => Ok(Axis::Temperature),
            "N" | "gap" => Ok(Axis::ParticleNumberGap),
            other => Err(Error::Config(format!("unknown axis `{other}`"))),
        }
    }
}

/// How the propagation step is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    /// The task's default step.
    Default,
    Fixed(f64),
    /// Start from the default and halve until overlaps change by less than
    /// the propagation tolerance.
    Auto,
}

/// One sweep: a task template, the swept axis and the fixed parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub task: Task,
    pub shape: Shape,
    /// Process time; ignored when sweeping `T`.
    pub total_time: f64,
    pub axis: Axis,
    pub axis_values: Vec<f64>,
    pub n_p: usize,
    /// Buffer counts evaluated at every grid point (ignored when sweeping `N_b`).
    pub n_b: Vec<usize>,
    pub tau: f64,
    pub threshold: f64,
    pub tail_bound: f64,
    /// Overrides the lattice size, keeping the default domain.
    pub n_points: Option<usize>,
    pub dt: TimeStep,
    pub verify_oracle: bool,
    /// Worker threads; `0` uses the available parallelism.
    pub workers: usize,
}

impl SweepSpec {
    pub fn new(
        task: Task,
        shape: Shape,
        total_time: f64,
        axis: Axis,
        axis_values: Vec<f64>,
    ) -> Self {
        Self {
            task,
            shape,
            total_time,
            axis,
            axis_values,
            n_p: 2,
            n_b: vec![0],
            tau: 0.0,
            threshold: DEFAULT_THRESHOLD,
            tail_bound: DEFAULT_TAIL_BOUND,
            n_points: None,
            dt: TimeStep::Default,
            verify_oracle: false,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let values = &self.axis_values;
        if values.is_empty() {
            return Err(Error::Config("empty axis grid".into()));
        }
        if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!(
                "axis grid for {} must be finite and strictly ascending",
                self.axis
            )));
        }
        if self.axis.is_integer() && values.iter().any(|v| *v < 0.0 || v.fract() != 0.0) {
            return Err(Error::Config(format!(
                "{} values must be non-negative integers",
                self.axis
            )));
        }
        match self.axis {
            Axis::ProcessTime if values[0] <= 0.0 => {
                return Err(Error::Config("process times must be positive".into()))
            }
            Axis::Anharmonicity if values[0] < 0.0 => {
                return Err(Error::Config("anharmonicities must be >= 0".into()))
            }
            Axis::Anharmonicity if self.task.kind() == TaskKind::Splitting => {
                return Err(Error::Config(
                    "the splitting potential has no anharmonicity".into(),
                ))
            }
            Axis::Temperature if values[0] < 0.0 => {
                return Err(Error::Config("temperatures must be >= 0".into()))
            }
            Axis::ParticleNumberGap if values[0] < 1.0 => {
                return Err(Error::Config("particle numbers start at 1".into()))
            }
            Axis::ParticleNumberGap if self.task.kind() != TaskKind::Expansion => {
                return Err(Error::Config(
                    "the Fermi-gap profile uses the expansion trap".into(),
                ))
            }
            _ => {}
        }
        let needs_time = !matches!(self.axis, Axis::ProcessTime | Axis::ParticleNumberGap);
        if needs_time && !(self.total_time > 0.0 && self.total_time.is_finite()) {
            return Err(Error::Config(format!(
                "T = {} must be positive",
                self.total_time
            )));
        }
        if self.n_p == 0 {
            return Err(Error::Config("N_p must be at least 1".into()));
        }
        if self.n_b.is_empty() || self.n_b.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "N_b must be a nonempty ascending list".into(),
            ));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!(
                "threshold {} must lie in (0, 1)",
                self.threshold
            )));
        }
        if !(self.tail_bound > 0.0 && self.tail_bound < 1.0) {
            return Err(Error::Config(format!(
                "tail_bound {} must lie in (0, 1)",
                self.tail_bound
            )));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau = {} must be >= 0", self.tau)));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!("dt = {dt} must be positive")));
            }
        }
        if let Some(n) = self.n_points {
            if n < 4 || !n.is_power_of_two() {
                return Err(Error::Config(format!(
                    "n_points = {n} must be a power of two >= 4"
                )));
            }
        }
        Ok(())
    }

    /// Lattice and step for `task` under this spec's overrides.
    pub fn numerics(&self, task: &Task) -> Result<Numerics> {
        let mut numerics = Numerics::default_for(task);
        if let Some(n) = self.n_points {
            let g = numerics.grid;
            numerics.grid = Grid::new(g.x_min(), g.x_max(), n)?;
        }
        if let TimeStep::Fixed(dt) = self.dt {
            numerics.settings.dt = dt;
        }
        numerics.verify_oracle = self.verify_oracle;
        Ok(numerics)
    }

    fn workers(&self) -> usize {
        match self.workers {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            w => w,
        }
    }

    fn annotate(&self, index: usize, source: Error) -> Error {
        Error::AtGridPoint {
            index,
            axis: self.axis.key().to_string(),
            value: self.axis_values.get(index).copied().unwrap_or(f64::NAN),
            source: Box::new(source),
        }
    }
}

/// One fidelity row of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub task: TaskKind,
    pub shape: Shape,
    pub total_time: f64,
    pub lambda: f64,
    pub n_p: usize,
    pub n_b: usize,
    pub tau: f64,
    pub fidelity: f64,
    pub method: Method,
    /// Occupation configurations averaged over (1 at zero temperature).
    pub configs: usize,
    pub dt: f64,
    /// Overlap change under step halving, when the step was checked.
    pub dt_change: Option<f64>,
    pub n_points: usize,
    /// Number of evolved levels.
    pub levels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow {
    pub n: usize,
    pub lambda: f64,
    pub delta_e: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepRows {
    Fidelity(Vec<SweepRow>),
    Gap(Vec<GapRow>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: Axis,
    pub rows: SweepRows,
}

impl SweepResult {
    pub fn len(&self) -> usize {
        match &self.rows {
            SweepRows::Fidelity(r) => r.len(),
            SweepRows::Gap(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fidelity rows (empty for a gap profile).
    pub fn fidelity_rows(&self) -> &[SweepRow] {
        match &self.rows {
            SweepRows::Fidelity(r) => r,
            SweepRows::Gap(_) => &[],
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        match &self.rows {
            SweepRows::Fidelity(rows) => {
                w.write_record([
                    "axis",
                    "axis_value",
                    "task",
                    "shape",
                    "T",
                    "lambda",
                    "N_p",
                    "N_b",
                    "tau",
                    "F",
                    "method",
                    "configs",
                    "dt",
                    "dt_change",
                    "n_points",
                    "levels",
                ])
                .map_err(csv_error)?;
                for r in rows {
                    w.write_record([
                        self.axis.key().to_string(),
                        r.axis_value.to_string(),
                        r.task.to_string(),
                        r.shape.to_string(),
                        r.total_time.to_string(),
                        r.lambda.to_string(),
                        r.n_p.to_string(),
                        r.n_b.to_string(),
                        r.tau.to_string(),
                        r.fidelity.to_string(),
                        r.method.to_string(),
                        r.configs.to_string(),
                        r.dt.to_string(),
                        r.dt_change.map_or(String::new(), |c| c.to_string()),
                        r.n_points.to_string(),
                        r.levels.to_string(),
                    ])
                    .map_err(csv_error)?;
                }
            }
            SweepRows::Gap(rows) => {
                w.write_record(["N", "lambda", "delta_E"])
                    .map_err(csv_error)?;
                for r in rows {
                    w.write_record([r.n.to_string(), r.lambda.to_string(), r.delta_e.to_string()])
                        .map_err(csv_error)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
    }
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Fidelity of one `(tau, N_b)` pair at one process time.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PointValue {
    fidelity: f64,
    method: Method,
    configs: usize,
}

struct PointOutcome {
    /// Indexed `[tau][buffer]`.
    values: Vec<Vec<PointValue>>,
    dt: f64,
    dt_change: Option<f64>,
    n_points: usize,
    levels: usize,
}

/// Evolves once with enough levels for every requested `(tau, N_b)` and reads
/// all fidelities from the shared overlap matrix.
fn evaluate_point(
    spec: &SweepSpec,
    scenario: &mut Scenario,
    total_time: f64,
    buffers: &[usize],
    taus: &[f64],
) -> Result<PointOutcome> {
    let n_p = spec.n_p;
    let mut levels = n_p + buffers.iter().copied().max().unwrap_or(0);
    let requests: Vec<(usize, f64)> = taus
        .iter()
        .filter(|&&t| t > 0.0)
        .flat_map(|&t| buffers.iter().map(move |&b| (n_p + b, t)))
        .collect();
    let mut ensembles: Vec<ThermalEnsemble> = if requests.is_empty() {
        Vec::new()
    } else {
        thermal::ensembles_for(scenario, &requests, spec.tail_bound)?
    };
    levels = ensembles
        .iter()
        .map(ThermalEnsemble::levels_needed)
        .fold(levels, usize::max);

    let (evolution, dt_change) = match spec.dt {
        TimeStep::Auto => {
            let (e, report) = scenario.converge_time_step(total_time, levels, n_p)?;
            (e, Some(report.change))
        }
        _ => (scenario.evolve(total_time, levels, n_p)?, None),
    };

    let mut thermal_iter = ensembles.drain(..);
    let mut values = Vec::with_capacity(taus.len());
    for &tau in taus {
        let mut row = Vec::with_capacity(buffers.len());
        for &n_b in buffers {
            row.push(if tau > 0.0 {
                let ensemble = thermal_iter
                    .next()
                    .expect("one ensemble per thermal request");
                thermal_value(&evolution, &ensemble, n_p)?
            } else {
                let f = evolution.fidelity(n_p, n_b)?;
                PointValue {
                    fidelity: f.value,
                    method: f.method,
                    configs: 1,
                }
            });
        }
        values.push(row);
    }
    Ok(PointOutcome {
        values,
        dt: evolution.dt(),
        dt_change,
        n_points: evolution.grid().n_points(),
        levels: evolution.levels(),
    })
}

fn thermal_value(
    evolution: &Evolution,
    ensemble: &ThermalEnsemble,
    n_p: usize,
) -> Result<PointValue> {
    let t = thermal::average_fidelity(evolution, ensemble, n_p)?;
    Ok(PointValue {
        fidelity: t.result.value,
        method: t.result.method,
        configs: t.configs,
    })
}

/// A fresh scenario for `task`, or the cached one when it is still on the
/// default lattice (a doubled lattice would make results order dependent).
fn scenario_for<'a>(
    slot: &'a mut Option<Scenario>,
    spec: &SweepSpec,
    task: Task,
) -> Result<&'a mut Scenario> {
    let numerics = spec.numerics(&task)?;
    let reusable = matches!(slot, Some(s) if *s.task() == task && *s.numerics() == numerics);
    if !reusable {
        *slot = Some(Scenario::new(task, spec.shape, numerics));
    }
    Ok(slot.as_mut().expect("scenario just stored"))
}

fn rows_for(
    spec: &SweepSpec,
    task: &Task,
    axis_value: f64,
    total_time: f64,
    buffers: &[usize],
    taus: &[f64],
    outcome: &PointOutcome,
) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for (ti, &tau) in taus.iter().enumerate() {
        for (bi, &n_b) in buffers.iter().enumerate() {
            let v = outcome.values[ti][bi];
            rows.push(SweepRow {
                axis_value: match spec.axis {
                    Axis::BufferCount => n_b as f64,
                    Axis::Temperature => tau,
                    _ => axis_value,
                },
                task: task.kind(),
                shape: spec.shape,
                total_time,
                lambda: task.anharmonicity(),
                n_p: spec.n_p,
                n_b,
                tau,
                fidelity: v.fidelity,
                method: v.method,
                configs: v.configs,
                dt: outcome.dt,
                dt_change: outcome.dt_change,
                n_points: outcome.n_points,
                levels: outcome.levels,
            });
        }
    }
    rows
}

/// Runs every grid point of `spec`. Rows are ordered by grid index (then by
/// buffer count) independently of the worker count.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let rows = match spec.axis {
        Axis::ParticleNumberGap => SweepRows::Gap(gap_rows(spec)?),
        Axis::ProcessTime | Axis::Anharmonicity => SweepRows::Fidelity(independent_points(spec)?),
        Axis::BufferCount | Axis::Temperature => SweepRows::Fidelity(shared_point(spec)?),
    };
    Ok(SweepResult {
        axis: spec.axis,
        rows,
    })
}

fn gap_rows(spec: &SweepSpec) -> Result<Vec<GapRow>> {
    let lambda = spec.task.anharmonicity();
    let n_max = *spec.axis_values.last().expect("validated nonempty") as usize;
    let profile = spectral::fermi_gap_profile(lambda, n_max).map_err(|e| spec.annotate(0, e))?;
    Ok(spec
        .axis_values
        .iter()
        .map(|&n| {
            let (n, delta_e) = profile[n as usize - 1];
            GapRow { n, lambda, delta_e }
        })
        .collect())
}

/// One evolution per grid point (process time or anharmonicity).
fn independent_points(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let taus = [spec.tau];
    let results = pool::map_indexed(
        &spec.axis_values,
        spec.workers(),
        || None,
        |slot, index, &value| {
            let (task, total_time) = match spec.axis {
                Axis::ProcessTime => (spec.task, value),
                _ => (spec.task.with_anharmonicity(value)?, spec.total_time),
            };
            let scenario = scenario_for(slot, spec, task)?;
            let outcome = evaluate_point(spec, scenario, total_time, &spec.n_b, &taus)
                .map_err(|e| spec.annotate(index, e))?;
            Ok(rows_for(
                spec, &task, value, total_time, &spec.n_b, &taus, &outcome,
            ))
        },
    );
    let mut rows = Vec::new();
    for (index, r) in results.into_iter().enumerate() {
        rows.extend(r.map_err(|e| match e {
            e @ Error::AtGridPoint { .. } => e,
            e => spec.annotate(index, e),
        })?);
    }
    Ok(rows)
}

/// A single evolution serving every grid point (buffer count or temperature).
fn shared_point(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let (buffers, taus): (Vec<usize>, Vec<f64>) = match spec.axis {
        Axis::BufferCount => (
            spec.axis_values.iter().map(|&v| v as usize).collect(),
            vec![spec.tau],
        ),
        _ => (spec.n_b.clone(), spec.axis_values.clone()),
    };
    let mut scenario = Scenario::new(spec.task, spec.shape, spec.numerics(&spec.task)?);
    let outcome = evaluate_point(spec, &mut scenario, spec.total_time, &buffers, &taus)
        .map_err(|e| spec.annotate(0, e))?;
    Ok(rows_for(
        spec,
        &spec.task,
        f64::NAN,
        spec.total_time,
        &buffers,
        &taus,
        &outcome,
    ))
}

/// Smallest buffer reaching the threshold at one grid time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinBufferRow {
    pub total_time: f64,
    /// `None` when no `N_b <= N_b_max` qualifies (saturation).
    pub n_b_min: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinBufferReport {
    pub threshold: f64,
    pub n_b_max: usize,
    pub rows: Vec<MinBufferRow>,
    /// `F[t][n_b]` on the time grid for `n_b = 0..=n_b_max`.
    pub fidelities: Vec<Vec<f64>>,
}

impl MinBufferReport {
    /// Columns `T, N_b_min, saturated, N_b_max, t_grid_points, threshold`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record([
            "T",
            "N_b_min",
            "saturated",
            "N_b_max",
            "t_grid_points",
            "threshold",
        ])
        .map_err(csv_error)?;
        for r in &self.rows {
            w.write_record([
                r.total_time.to_string(),
                r.n_b_min.map_or(String::new(), |n| n.to_string()),
                r.n_b_min.is_none().to_string(),
                self.n_b_max.to_string(),
                self.rows.len().to_string(),
                self.threshold.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
    }
}

/// For each `T` on the grid, the smallest `N_b <= n_b_max` with
/// `F(T', N_b) >= threshold` at every grid time `T' >= T`. Only the supplied
/// grid points are checked.
pub fn min_buffer_search(
    spec: &SweepSpec,
    t_grid: &[f64],
    n_b_max: usize,
) -> Result<MinBufferReport> {
    let mut sweep = spec.clone();
    sweep.axis = Axis::ProcessTime;
    sweep.axis_values = t_grid.to_vec();
    sweep.n_b = (0..=n_b_max).collect();
    let rows = run_sweep(&sweep)?;
    let per_t = n_b_max + 1;
    let fidelities: Vec<Vec<f64>> = rows
        .fidelity_rows()
        .chunks(per_t)
        .map(|c| c.iter().map(|r| r.fidelity).collect())
        .collect();
    Ok(MinBufferReport {
        threshold: spec.threshold,
        n_b_max,
        rows: min_buffers(t_grid, &fidelities, spec.threshold),
        fidelities,
    })
}

/// The search itself, on a precomputed `F[t][n_b]` table.
pub fn min_buffers(t_grid: &[f64], fidelities: &[Vec<f64>], threshold: f64) -> Vec<MinBufferRow> {
    t_grid
        .iter()
        .enumerate()
        .map(|(i, &total_time)| {
            let width = fidelities[i].len();
            let n_b_min = (0..width).find(|&b| fidelities[i..].iter().all(|f| f[b] >= threshold));
            MinBufferRow {
                total_time,
                n_b_min,
            }
        })
        .collect()
}

/// Where `F(tau)` falls below the threshold for one buffer count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossing {
    /// Linearly interpolated crossing temperature.
    At(f64),
    /// Still above the threshold at the highest grid temperature.
    AboveRange,
    /// Already below at the lowest grid temperature.
    BelowRange,
}

impl fmt::Display for Crossing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Crossing::At(_) => f.write_str("crossed"),
            Crossing::AboveRange => f.write_str("above_range"),
            Crossing::BelowRange => f.write_str("below_range"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompensationReport {
    pub threshold: f64,
    pub tau_grid: Vec<f64>,
    /// `(N_b, crossing)` in ascending `N_b`.
    pub crossings: Vec<(usize, Crossing)>,
    /// `F[n_b][tau]`.
    pub fidelities: Vec<Vec<f64>>,
}

impl CompensationReport {
    /// Differences between successive interpolated crossings; `None` where
    /// either neighbour is an open interval.
    pub fn spacings(&self) -> Vec<Option<f64>> {
        self.crossings
            .windows(2)
            .map(|w| match (w[0].1, w[1].1) {
                (Crossing::At(a), Crossing::At(b)) => Some(b - a),
                _ => None,
            })
            .collect()
    }

    /// Columns `N_b, tau_cross, status, spacing`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["N_b", "tau_cross", "status", "spacing"])
            .map_err(csv_error)?;
        let spacings = self.spacings();
        for (i, &(n_b, crossing)) in self.crossings.iter().enumerate() {
            let tau = match crossing {
                Crossing::At(t) => t.to_string(),
                _ => String::new(),
            };
            let spacing = match i {
                0 => String::new(),
                _ => spacings[i - 1].map_or(String::new(), |s| s.to_string()),
            };
            w.write_record([n_b.to_string(), tau, crossing.to_string(), spacing])
                .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
    }
}

/// First downward threshold crossing of `F` along the temperature grid.
pub fn threshold_crossing(tau_grid: &[f64], fidelity: &[f64], threshold: f64) -> Crossing {
    match fidelity.iter().position(|&f| f < threshold) {
        None => Crossing::AboveRange,
        Some(0) => Crossing::BelowRange,
        Some(i) => {
            let (t0, t1) = (tau_grid[i - 1], tau_grid[i]);
            let (f0, f1) = (fidelity[i - 1], fidelity[i]);
            Crossing::At(t0 + (t1 - t0) * (f0 - threshold) / (f0 - f1))
        }
    }
}

/// Temperatures at which `F` drops below the threshold for each buffer count,
/// at the spec's process time.
pub fn temperature_compensation_report(
    spec: &SweepSpec,
    tau_grid: &[f64],
    buffers: &[usize],
) -> Result<CompensationReport> {
    let mut sweep = spec.clone();
    sweep.axis = Axis::Temperature;
    sweep.axis_values = tau_grid.to_vec();
    sweep.n_b = buffers.to_vec();
    let result = run_sweep(&sweep)?;
    let rows = result.fidelity_rows();
    let fidelities: Vec<Vec<f64>> = (0..buffers.len())
        .map(|b| {
            (0..tau_grid.len())
                .map(|t| rows[t * buffers.len() + b].fidelity)
                .collect()
        })
        .collect();
    let crossings = buffers
        .iter()
        .zip(&fidelities)
        .map(|(&n_b, f)| (n_b, threshold_crossing(tau_grid, f, spec.threshold)))
        .collect();
    Ok(CompensationReport {
        threshold: spec.threshold,
        tau_grid: tau_grid.to_vec(),
        crossings,
        fidelities,
    })
}
