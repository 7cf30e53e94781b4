//! Time-dependent trap potentials for the three control tasks, in units
//! `hbar = m = 1` with the reference trap frequency set to one.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Time dependence of the control parameter between its endpoint values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Linear,
    Sinusoidal,
}

impl Shape {
    /// Ramp fraction in `[0, 1]` at `t / T = fraction`.
    pub fn ramp(self, fraction: f64) -> f64 {
        match self {
            Shape::Linear => fraction,
            Shape::Sinusoidal => {
                let s = (FRAC_PI_2 * fraction).sin();
                s * s
            }
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Linear => "linear",
            Shape::Sinusoidal => "sinusoidal",
        })
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" | "lin" => Ok(Shape::Linear),
            "sinusoidal" | "sin" | "sine" => Ok(Shape::Sinusoidal),
            other => Err(Error::Config(format!("unknown schedule shape `{other}`"))),
        }
    }
}

/// Which control task, together with its endpoint parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Task {
    /// `V = omega(t)^2 (x^2 + lambda x^4) / 2`, ramping `omega_i -> omega_f`.
    Expansion {
        omega_i: f64,
        omega_f: f64,
        anharmonicity: f64,
    },
    /// `V = omega^2 (u^2 + lambda u^4) / 2` with `u = x - x0(t)`.
    Transport {
        x0_i: f64,
        x0_f: f64,
        omega: f64,
        anharmonicity: f64,
    },
    /// `V = omega^2 x^2 / 2 + h(t) exp(-x^2 / d^2)`, `d = 1/sqrt(omega)`.
    Splitting { h_i: f64, h_f: f64, omega: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Expansion,
    Transport,
    Splitting,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Expansion => "expansion",
            TaskKind::Transport => "transport",
            TaskKind::Splitting => "splitting",
        })
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "expansion" | "expand" => Ok(TaskKind::Expansion),
            "transport" => Ok(TaskKind::Transport),
            "splitting" | "split" => Ok(TaskKind::Splitting),
            other => Err(Error::Config(format!("unknown task `{other}`"))),
        }
    }
}

impl Task {
    pub fn expansion() -> Self {
        Task::Expansion {
            omega_i: 1.0,
            omega_f: 0.01,
            anharmonicity: 1.0,
        }
    }

    pub fn transport() -> Self {
        Task::Transport {
            x0_i: 0.0,
            x0_f: 90.0,
            omega: 1.0,
            anharmonicity: 1.0,
        }
    }

    pub fn splitting() -> Self {
        Task::Splitting {
            h_i: 0.0,
            h_f: 20.0,
            omega: 1.0,
        }
    }

    pub fn kind(&self) -> TaskKind {
        match self {
            Task::Expansion { .. } => TaskKind::Expansion,
            Task::Transport { .. } => TaskKind::Transport,
            Task::Splitting { .. } => TaskKind::Splitting,
        }
    }

    /// Endpoint values `(c_i, c_f)` of the ramped control parameter.
    pub fn control_endpoints(&self) -> (f64, f64) {
        match *self {
            Task::Expansion {
                omega_i, omega_f, ..
            } => (omega_i, omega_f),
            Task::Transport { x0_i, x0_f, .. } => (x0_i, x0_f),
            Task::Splitting { h_i, h_f, .. } => (h_i, h_f),
        }
    }

    pub fn anharmonicity(&self) -> f64 {
        match *self {
            Task::Expansion { anharmonicity, .. } | Task::Transport { anharmonicity, .. } => {
                anharmonicity
            }
            Task::Splitting { .. } => 0.0,
        }
    }

    /// The same task with a different quartic coefficient. Splitting has none.
    pub fn with_anharmonicity(self, lambda: f64) -> Result<Self> {
        let task = match self {
            Task::Expansion {
                omega_i, omega_f, ..
            } => Task::Expansion {
                omega_i,
                omega_f,
                anharmonicity: lambda,
            },
            Task::Transport {
                x0_i, x0_f, omega, ..
            } => Task::Transport {
                x0_i,
                x0_f,
                omega,
                anharmonicity: lambda,
            },
            Task::Splitting { .. } => {
                return Err(Error::Config(
                    "the splitting potential has no anharmonicity".into(),
                ))
            }
        };
        task.validate()?;
        Ok(task)
    }

    /// Potential at `x` for control value `c`.
    pub fn potential(&self, x: f64, c: f64) -> f64 {
        match *self {
            Task::Expansion { anharmonicity, .. } => {
                let x2 = x * x;
                0.5 * c * c * (x2 + anharmonicity * x2 * x2)
            }
            Task::Transport {
                omega,
                anharmonicity,
                ..
            } => {
                let u = x - c;
                let u2 = u * u;
                0.5 * omega * omega * (u2 + anharmonicity * u2 * u2)
            }
            Task::Splitting { omega, .. } => {
                // barrier width d = sqrt(hbar / m omega)
                0.5 * omega * omega * x * x + c * (-omega * x * x).exp()
            }
        }
    }

    /// Whether `V(-x) = V(x)` at all times.
    pub fn is_even(&self) -> bool {
        match *self {
            Task::Transport { x0_i, x0_f, .. } => x0_i == 0.0 && x0_f == 0.0,
            _ => true,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!(
                    "{name} = {v} must be positive"
                )))
            }
        };
        let nonnegative = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} = {v} must be >= 0")))
            }
        };
        match *self {
            Task::Expansion {
                omega_i,
                omega_f,
                anharmonicity,
            } => {
                positive("omega_i", omega_i)?;
                positive("omega_f", omega_f)?;
                nonnegative("lambda", anharmonicity)
            }
            Task::Transport {
                x0_i,
                x0_f,
                omega,
                anharmonicity,
            } => {
                if !(x0_i.is_finite() && x0_f.is_finite()) {
                    return Err(Error::InvalidInput("trap centers must be finite".into()));
                }
                positive("omega", omega)?;
                nonnegative("lambda", anharmonicity)
            }
            Task::Splitting { h_i, h_f, omega } => {
                if !(h_i.is_finite() && h_f.is_finite()) {
                    return Err(Error::InvalidInput("barrier heights must be finite".into()));
                }
                positive("omega", omega)
            }
        }
    }
}

/// A control task driven over `[0, T]` with a given ramp shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSchedule {
    task: Task,
    shape: Shape,
    total_time: f64,
}

impl PotentialSchedule {
    pub fn new(task: Task, shape: Shape, total_time: f64) -> Result<Self> {
        task.validate()?;
        if !(total_time > 0.0 && total_time.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "process time T = {total_time} must be positive"
            )));
        }
        Ok(Self {
            task,
            shape,
            total_time,
        })
    }

    pub fn task(&self) -> &Task {
        &self.task
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn with_total_time(&self, total_time: f64) -> Result<Self> {
        Self::new(self.task, self.shape, total_time)
    }

    pub fn with_task(&self, task: Task) -> Result<Self> {
        Self::new(task, self.shape, self.total_time)
    }

    /// Ramped control parameter (`omega`, `x0` or `h`) at time `t`.
    pub fn control_value(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.total_time).contains(&t) {
            return Err(Error::InvalidInput(format!(
                "t = {t} outside [0, {}]",
                self.total_time
            )));
        }
        Ok(self.control_value_unchecked(t))
    }

    pub(crate) fn control_value_unchecked(&self, t: f64) -> f64 {
        let (c_i, c_f) = self.task.control_endpoints();
        if t >= self.total_time {
            return c_f;
        }
        c_i + (c_f - c_i) * self.shape.ramp(t / self.total_time)
    }

    /// `V(x_j, t)` on every lattice point.
    pub fn evaluate(&self, grid: &Grid, t: f64) -> Result<Vec<f64>> {
        let c = self.control_value(t)?;
        Ok(self.evaluate_with_control(grid, c))
    }

    pub(crate) fn evaluate_with_control(&self, grid: &Grid, c: f64) -> Vec<f64> {
        let dx = grid.dx();
        let x_min = grid.x_min();
        (0..grid.n_points())
            .map(|j| self.task.potential(x_min + j as f64 * dx, c))
            .collect()
    }

    pub fn initial_potential(&self, grid: &Grid) -> Vec<f64> {
        let (c_i, _) = self.task.control_endpoints();
        self.evaluate_with_control(grid, c_i)
    }

    pub fn final_potential(&self, grid: &Grid) -> Vec<f64> {
        let (_, c_f) = self.task.control_endpoints();
        self.evaluate_with_control(grid, c_f)
    }

    /// Whether the endpoints coincide, making the process the identity.
    pub fn is_static(&self) -> bool {
        let (c_i, c_f) = self.task.control_endpoints();
        c_i == c_f
    }
}
