//! Second-order split-operator propagation of single-particle states through a
//! [`PotentialSchedule`].
//!
//! Each step is `exp(-i V dt/2) exp(-i K dt) exp(-i V dt/2)` with `V` taken at
//! the step midpoint. Adjacent potential half-steps are fused, so one step
//! costs one forward/inverse transform pair per state. States propagated
//! together share the potential phases but are otherwise independent: the
//! result for each state is identical to propagating it alone.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{FourierPlan, Grid, Wavefunction, CONTAINMENT_RATIO};
use crate::potentials::PotentialSchedule;
use crate::spectral::EigenBasis;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
/// Steps between containment / finiteness checks.
const CHECK_INTERVAL: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationSettings {
    /// Requested time step; the actual step divides `T` exactly.
    pub dt: f64,
    /// Record `<x>` and the norm after every step.
    pub store_trajectory: bool,
    /// Largest allowed change of any final overlap when `dt` is halved.
    pub tolerance: f64,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            store_trajectory: false,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl PropagationSettings {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }

    /// Number of steps and the adjusted step for a process of length `total_time`.
    pub fn steps_for(&self, total_time: f64) -> Result<(usize, f64)> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "dt = {} must be positive",
                self.dt
            )));
        }
        if self.dt > total_time {
            return Err(Error::InvalidInput(format!(
                "dt = {} exceeds the process time {total_time}",
                self.dt
            )));
        }
        let steps = ((total_time / self.dt).round() as usize).max(1);
        Ok((steps, total_time / steps as f64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub mean_position: f64,
    pub norm_squared: f64,
}

/// Evolves `initial` from `t = 0` to `t = T`.
pub fn propagate(
    initial: &Wavefunction,
    schedule: &PotentialSchedule,
    settings: &PropagationSettings,
) -> Result<Wavefunction> {
    let mut out = propagate_many(std::slice::from_ref(initial), schedule, settings)?;
    Ok(out.pop().expect("one state in, one state out"))
}

/// Like [`propagate`], also returning `<x>(t)` and the norm at every step
/// (empty unless `settings.store_trajectory`).
pub fn propagate_traced(
    initial: &Wavefunction,
    schedule: &PotentialSchedule,
    settings: &PropagationSettings,
) -> Result<(Wavefunction, Vec<TrajectoryPoint>)> {
    let mut trajectory = Vec::new();
    let record = settings.store_trajectory;
    let mut out = run(
        std::slice::from_ref(initial),
        schedule,
        settings,
        |time, states| {
            if record {
                let s = &states[0];
                trajectory.push(TrajectoryPoint {
                    time,
                    mean_position: s.mean_position(),
                    norm_squared: s.norm_squared(),
                });
            }
        },
    )?;
    Ok((out.pop().expect("one state in, one state out"), trajectory))
}

/// Evolves several states through the same schedule.
pub fn propagate_many(
    initial: &[Wavefunction],
    schedule: &PotentialSchedule,
    settings: &PropagationSettings,
) -> Result<Vec<Wavefunction>> {
    run(initial, schedule, settings, |_, _| {})
}

/// Evolves the `count` lowest states of `basis`.
pub fn propagate_basis(
    basis: &EigenBasis,
    count: usize,
    schedule: &PotentialSchedule,
    settings: &PropagationSettings,
) -> Result<Vec<Wavefunction>> {
    if count > basis.len() {
        return Err(Error::InvalidInput(format!(
            "asked to propagate {count} states of a {}-state basis",
            basis.len()
        )));
    }
    propagate_many(&basis.states()[..count], schedule, settings)
}

fn fill_half_phase(out: &mut [Complex64], potential: &[f64], half_dt: f64) {
    out.iter_mut()
        .zip(potential)
        .for_each(|(p, v)| *p = Complex64::cis(-v * half_dt));
}

fn fill_fused_phase(out: &mut [Complex64], a: &[f64], b: &[f64], half_dt: f64) {
    out.iter_mut()
        .zip(a.iter().zip(b))
        .for_each(|(p, (va, vb))| *p = Complex64::cis(-(va + vb) * half_dt));
}

fn check(states: &[Vec<Complex64>], step: usize) -> Result<()> {
    for s in states {
        let mut peak = 0.0_f64;
        for a in s {
            let m = a.norm();
            if !m.is_finite() {
                return Err(Error::Instability { step });
            }
            peak = peak.max(m);
        }
        let edge = s[0].norm().max(s[s.len() - 1].norm());
        if peak > 0.0 && edge / peak >= CONTAINMENT_RATIO {
            return Err(Error::GridTooSmall {
                step,
                ratio: edge / peak,
            });
        }
    }
    Ok(())
}

fn run(
    initial: &[Wavefunction],
    schedule: &PotentialSchedule,
    settings: &PropagationSettings,
    mut observe: impl FnMut(f64, &[Wavefunction]),
) -> Result<Vec<Wavefunction>> {
    let Some(first) = initial.first() else {
        return Ok(Vec::new());
    };
    let grid: Grid = *first.grid();
    if initial.iter().any(|w| *w.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    let total_time = schedule.total_time();
    let (steps, dt) = settings.steps_for(total_time)?;
    let n = grid.n_points();
    let half_dt = 0.5 * dt;

    let plan = FourierPlan::new(n);
    let mut scratch = plan.scratch();
    let inv_n = 1.0 / n as f64;
    let kinetic: Vec<Complex64> = grid
        .fft_wavenumbers()
        .iter()
        .map(|k| Complex64::from_polar(inv_n, -0.5 * k * k * dt))
        .collect();

    let midpoint = |s: usize| (s as f64 + 0.5) * dt;
    let mut v_now =
        schedule.evaluate_with_control(&grid, schedule.control_value_unchecked(midpoint(0)));
    let mut v_next = vec![0.0; n];
    let mut phase = vec![Complex64::new(0.0, 0.0); n];

    let mut states: Vec<Vec<Complex64>> = initial.iter().map(|w| w.amplitudes().to_vec()).collect();
    fill_half_phase(&mut phase, &v_now, half_dt);
    for s in &mut states {
        s.iter_mut().zip(&phase).for_each(|(a, p)| *a *= p);
    }

    let mut snapshot: Vec<Wavefunction> = Vec::new();
    for step in 0..steps {
        if step + 1 < steps {
            let c = schedule.control_value_unchecked(midpoint(step + 1));
            fill_potential(schedule, &grid, c, &mut v_next);
            fill_fused_phase(&mut phase, &v_now, &v_next, half_dt);
        } else {
            fill_half_phase(&mut phase, &v_now, half_dt);
        }
        for s in &mut states {
            plan.forward(s, &mut scratch);
            s.iter_mut().zip(&kinetic).for_each(|(a, k)| *a *= k);
            plan.inverse(s, &mut scratch);
            s.iter_mut().zip(&phase).for_each(|(a, p)| *a *= p);
        }
        std::mem::swap(&mut v_now, &mut v_next);

        if settings.store_trajectory {
            snapshot.clear();
            snapshot.extend(
                states
                    .iter()
                    .map(|s| Wavefunction::from_raw(grid, s.clone())),
            );
            observe((step + 1) as f64 * dt, &snapshot);
        }
        if (step + 1) % CHECK_INTERVAL == 0 || step + 1 == steps {
            check(&states, step + 1)?;
        }
    }
    Ok(states
        .into_iter()
        .map(|s| Wavefunction::from_raw(grid, s))
        .collect())
}

fn fill_potential(schedule: &PotentialSchedule, grid: &Grid, control: f64, out: &mut [f64]) {
    let task = schedule.task();
    let dx = grid.dx();
    let x_min = grid.x_min();
    out.iter_mut()
        .enumerate()
        .for_each(|(j, v)| *v = task.potential(x_min + j as f64 * dx, control));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::inner_product;
    use crate::potentials::{Shape, Task};
    use crate::spectral;

    fn static_harmonic(total_time: f64) -> PotentialSchedule {
        let task = Task::Expansion {
            omega_i: 1.0,
            omega_f: 1.0,
            anharmonicity: 0.0,
        };
        PotentialSchedule::new(task, Shape::Sinusoidal, total_time).unwrap()
    }

    #[test]
    fn step_count_divides_process_time() {
        let s = PropagationSettings::with_dt(0.3);
        let (steps, dt) = s.steps_for(1.0).unwrap();
        assert_eq!(steps, 3);
        assert!((dt * 3.0 - 1.0).abs() < 1e-15);
        assert!(PropagationSettings::with_dt(2.0).steps_for(1.0).is_err());
        assert!(PropagationSettings::with_dt(0.0).steps_for(1.0).is_err());
    }

    #[test]
    fn stationary_state_only_picks_up_phase() {
        let grid = Grid::symmetric(10.0, 256).unwrap();
        let schedule = static_harmonic(3.0);
        let v = schedule.initial_potential(&grid);
        let basis = spectral::solve(&v, &grid, 2).unwrap();
        let out = propagate(
            &basis.states()[0],
            &schedule,
            &PropagationSettings::with_dt(0.01),
        )
        .unwrap();
        let overlap = inner_product(&out, &basis.states()[0]).unwrap();
        assert!((overlap.norm() - 1.0).abs() < 1e-8);
        assert!((out.norm_squared() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn batched_matches_individual_bitwise() {
        let grid = Grid::symmetric(12.0, 256).unwrap();
        let schedule = PotentialSchedule::new(Task::splitting(), Shape::Sinusoidal, 0.5).unwrap();
        let basis = spectral::solve(&schedule.initial_potential(&grid), &grid, 3).unwrap();
        let settings = PropagationSettings::with_dt(0.01);
        let batch = propagate_basis(&basis, 3, &schedule, &settings).unwrap();
        for (i, state) in basis.states().iter().enumerate() {
            let alone = propagate(state, &schedule, &settings).unwrap();
            assert_eq!(alone.amplitudes(), batch[i].amplitudes());
        }
    }

    #[test]
    fn leaking_state_is_reported() {
        let grid = Grid::symmetric(3.0, 128).unwrap();
        let task = Task::Expansion {
            omega_i: 1.0,
            omega_f: 0.05,
            anharmonicity: 0.0,
        };
        let schedule = PotentialSchedule::new(task, Shape::Linear, 5.0).unwrap();
        let ground =
            Wavefunction::from_fn(grid, |x| Complex64::new((-0.5 * x * x).exp(), 0.0)).unwrap();
        let err = propagate(&ground, &schedule, &PropagationSettings::with_dt(0.01)).unwrap_err();
        assert!(matches!(err, Error::GridTooSmall { .. }), "{err}");
    }

    #[test]
    fn trajectory_recorded_on_request() {
        let grid = Grid::symmetric(10.0, 128).unwrap();
        let schedule = static_harmonic(1.0);
        let ground =
            Wavefunction::from_fn(grid, |x| Complex64::new((-0.5 * x * x).exp(), 0.0)).unwrap();
        let mut settings = PropagationSettings::with_dt(0.1);
        let (_, empty) = propagate_traced(&ground, &schedule, &settings).unwrap();
        assert!(empty.is_empty());
        settings.store_trajectory = true;
        let (_, points) = propagate_traced(&ground, &schedule, &settings).unwrap();
        assert_eq!(points.len(), 10);
        assert!((points[9].time - 1.0).abs() < 1e-12);
    }
}
