//! One control task on one lattice: eigenbases of the initial and final traps,
//! evolution of the lowest levels, and the master overlap matrix that every
//! zero- and finite-temperature fidelity is read from.

use crate::error::{Error, Result};
use crate::fidelity::{
    fidelity_fast, fidelity_oracle, FidelityResult, OverlapMatrix, ORACLE_MAX_N, ORACLE_MAX_NP,
};
use crate::grid::Grid;
use crate::potentials::{PotentialSchedule, Shape, Task, TaskKind};
use crate::propagator::{propagate_basis, PropagationSettings};
use crate::spectral::{self, EigenBasis};

/// Largest number of time-step halvings tried before giving up.
pub const MAX_HALVINGS: usize = 4;

/// Lattice and time-stepping choices for a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerics {
    pub grid: Grid,
    pub settings: PropagationSettings,
    /// How often the domain may be doubled when a state reaches the boundary.
    pub max_doublings: usize,
    /// Evaluate the enumeration oracle instead of the Gram determinant when
    /// the sizes allow it.
    pub verify_oracle: bool,
}

impl Numerics {
    /// Default lattice and step for a task: symmetric boxes for expansion and
    /// splitting, a box covering the whole path for transport. Transport
    /// needs the finest step to hold overlaps to `1e-4`.
    pub fn default_for(task: &Task) -> Self {
        let dt = match task {
            Task::Expansion { .. } => 2e-3,
            Task::Splitting { .. } => 1e-3,
            Task::Transport { .. } => 5e-4,
        };
        let grid = match *task {
            Task::Expansion { .. } => Grid::symmetric(40.0, 2048),
            Task::Splitting { omega, .. } => Grid::symmetric(12.0 / omega.sqrt(), 1024),
            Task::Transport {
                x0_i, x0_f, omega, ..
            } => {
                let d = 1.0 / omega.sqrt();
                let (lo, hi) = (x0_i.min(x0_f), x0_i.max(x0_f));
                let span = hi - lo + 30.0 * d;
                let n = ((span / (0.03 * d)).ceil() as usize).next_power_of_two();
                Grid::new(lo - 15.0 * d, hi + 15.0 * d, n.max(1024))
            }
        }
        .expect("default lattice parameters are valid");
        Self {
            grid,
            settings: PropagationSettings::with_dt(dt),
            max_doublings: 2,
            verify_oracle: false,
        }
    }
}

/// Evolved levels of a schedule and their overlaps with the final trap's
/// lowest eigenstates.
#[derive(Debug, Clone)]
pub struct Evolution {
    schedule: PotentialSchedule,
    grid: Grid,
    dt: f64,
    initial_energies: Vec<f64>,
    target_energies: Vec<f64>,
    overlaps: OverlapMatrix,
    verify_oracle: bool,
}

impl Evolution {
    pub fn schedule(&self) -> &PotentialSchedule {
        &self.schedule
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Time step actually used.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn levels(&self) -> usize {
        self.overlaps.n()
    }

    pub fn initial_energies(&self) -> &[f64] {
        &self.initial_energies
    }

    pub fn target_energies(&self) -> &[f64] {
        &self.target_energies
    }

    /// `A[j][i] = <psi_j(T)|phi_i>` for every evolved level `j` and target `i`.
    pub fn overlaps(&self) -> &OverlapMatrix {
        &self.overlaps
    }

    /// Zero-temperature fidelity with the lowest `n_p + n_b` levels occupied.
    pub fn fidelity(&self, n_p: usize, n_b: usize) -> Result<FidelityResult> {
        let n = n_p + n_b;
        if n == 0 {
            return Err(Error::InvalidInput("need at least one particle".into()));
        }
        if n > self.levels() || n_p > self.overlaps.n_p() {
            return Err(Error::InvalidInput(format!(
                "N = {n}, N_p = {n_p} exceed the {} evolved levels / {} targets",
                self.levels(),
                self.overlaps.n_p()
            )));
        }
        let a = self.overlaps.leading(n, n_p)?;
        if self.verify_oracle && n <= ORACLE_MAX_N && n_p <= ORACLE_MAX_NP {
            fidelity_oracle(&a)
        } else {
            fidelity_fast(&a)
        }
    }
}

/// A task and ramp shape on a lattice, with eigenbases cached across process
/// times (they depend only on the endpoint traps). A cached basis is reused
/// only for exactly the same lattice and level count, so results never depend
/// on the order of earlier calls.
pub struct Scenario {
    task: Task,
    shape: Shape,
    numerics: Numerics,
    initial: Option<EigenBasis>,
    targets: Option<EigenBasis>,
}

fn cached<'a>(
    slot: &'a mut Option<EigenBasis>,
    grid: &Grid,
    count: usize,
    potential: impl FnOnce() -> Vec<f64>,
) -> Result<&'a EigenBasis> {
    let fresh = matches!(slot, Some(b) if b.grid() == grid && b.len() == count);
    if !fresh {
        *slot = Some(spectral::solve(&potential(), grid, count)?);
    }
    Ok(slot.as_ref().expect("basis just stored"))
}

impl Scenario {
    pub fn new(task: Task, shape: Shape, numerics: Numerics) -> Self {
        Self {
            task,
            shape,
            numerics,
            initial: None,
            targets: None,
        }
    }

    pub fn with_defaults(task: Task, shape: Shape) -> Self {
        Self::new(task, shape, Numerics::default_for(&task))
    }

    pub fn task(&self) -> &Task {
        &self.task
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn numerics(&self) -> &Numerics {
        &self.numerics
    }

    pub fn set_dt(&mut self, dt: f64) {
        self.numerics.settings.dt = dt;
    }

    fn endpoints(&self) -> Result<PotentialSchedule> {
        // the process time is irrelevant for the endpoint traps
        PotentialSchedule::new(self.task, self.shape, 1.0)
    }

    /// Lowest `count` eigenstates of the initial trap.
    pub fn initial_basis(&mut self, count: usize) -> Result<EigenBasis> {
        let probe = self.endpoints()?;
        let grid = self.numerics.grid;
        Ok(cached(&mut self.initial, &grid, count, || {
            probe.initial_potential(&grid)
        })?
        .clone())
    }

    /// Lowest `count` energies of the initial trap.
    pub fn initial_energies(&mut self, count: usize) -> Result<Vec<f64>> {
        let probe = self.endpoints()?;
        let grid = self.numerics.grid;
        Ok(cached(&mut self.initial, &grid, count, || {
            probe.initial_potential(&grid)
        })?
        .energies()
        .to_vec())
    }

    /// Lowest `count` eigenstates of the final trap.
    pub fn final_basis(&mut self, count: usize) -> Result<EigenBasis> {
        let probe = self.endpoints()?;
        let grid = self.numerics.grid;
        Ok(cached(&mut self.targets, &grid, count, || {
            probe.final_potential(&grid)
        })?
        .clone())
    }

    /// Evolves the lowest `levels` initial eigenstates over a process of
    /// length `total_time`, doubling the domain if a state leaks.
    pub fn evolve(&mut self, total_time: f64, levels: usize, targets: usize) -> Result<Evolution> {
        if targets > levels {
            return Err(Error::InvalidInput(format!(
                "{targets} targets exceed {levels} evolved levels"
            )));
        }
        let schedule = PotentialSchedule::new(self.task, self.shape, total_time)?;
        let probe = schedule;
        let mut doublings = 0;
        loop {
            let settings = self.numerics.settings;
            let grid = self.numerics.grid;
            let initial = cached(&mut self.initial, &grid, levels, || {
                probe.initial_potential(&grid)
            })?;
            let evolved = match propagate_basis(initial, levels, &schedule, &settings) {
                Ok(states) => states,
                Err(Error::GridTooSmall { .. }) if doublings < self.numerics.max_doublings => {
                    doublings += 1;
                    self.numerics.grid = grid.doubled()?;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let initial_energies = initial.energies().to_vec();
            let finals = cached(&mut self.targets, &grid, targets, || {
                probe.final_potential(&grid)
            })?;
            let overlaps = OverlapMatrix::from_states(&evolved, finals.states())?;
            let (_, dt) = settings.steps_for(total_time)?;
            return Ok(Evolution {
                schedule,
                grid,
                dt,
                initial_energies,
                target_energies: finals.energies().to_vec(),
                overlaps,
                verify_oracle: self.numerics.verify_oracle,
            });
        }
    }

    /// Halves the time step until halving changes no final overlap by more
    /// than the tolerance. Returns the finer of the last two evolutions; the
    /// step setting is restored afterwards.
    pub fn converge_time_step(
        &mut self,
        total_time: f64,
        levels: usize,
        targets: usize,
    ) -> Result<(Evolution, TimeStepReport)> {
        let tolerance = self.numerics.settings.tolerance;
        let start = self.numerics.settings.dt;
        let outcome = self.halve_until_stable(total_time, levels, targets, tolerance);
        self.set_dt(start);
        outcome
    }

    fn halve_until_stable(
        &mut self,
        total_time: f64,
        levels: usize,
        targets: usize,
        tolerance: f64,
    ) -> Result<(Evolution, TimeStepReport)> {
        let mut coarse = self.evolve(total_time, levels, targets)?;
        let mut change = f64::INFINITY;
        for halvings in 1..=MAX_HALVINGS {
            self.set_dt(0.5 * self.numerics.settings.dt);
            let fine = self.evolve(total_time, levels, targets)?;
            change = max_overlap_change(coarse.overlaps(), fine.overlaps());
            if change < tolerance {
                let report = TimeStepReport {
                    dt: fine.dt(),
                    change,
                    halvings,
                };
                return Ok((fine, report));
            }
            coarse = fine;
        }
        Err(Error::TimeStepNotConverged {
            change,
            halvings: MAX_HALVINGS,
        })
    }
}

/// Outcome of the automatic time-step check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeStepReport {
    /// Step of the returned evolution.
    pub dt: f64,
    /// Largest overlap change between `2 dt` and `dt`.
    pub change: f64,
    pub halvings: usize,
}

fn max_overlap_change(a: &OverlapMatrix, b: &OverlapMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..a.n().min(b.n()) {
        for (x, y) in a.row(r).iter().zip(b.row(r)) {
            worst = worst.max((x - y).norm());
        }
    }
    worst
}

/// Zero-temperature fidelity of a single scenario with default numerics and
/// the given propagation settings.
pub fn scenario_fidelity(
    schedule: &PotentialSchedule,
    n_p: usize,
    n_b: usize,
    settings: &PropagationSettings,
) -> Result<FidelityResult> {
    let n = n_p + n_b;
    if n == 0 {
        return Err(Error::InvalidInput("N_p + N_b must be at least 1".into()));
    }
    let mut numerics = Numerics::default_for(schedule.task());
    numerics.settings = *settings;
    let mut scenario = Scenario::new(*schedule.task(), schedule.shape(), numerics);
    scenario
        .evolve(schedule.total_time(), n, n_p.max(1).min(n))?
        .fidelity(n_p, n_b)
}

impl TaskKind {
    pub fn default_task(self) -> Task {
        match self {
            TaskKind::Expansion => Task::expansion(),
            TaskKind::Transport => Task::transport(),
            TaskKind::Splitting => Task::splitting(),
        }
    }
}
