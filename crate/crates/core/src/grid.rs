//! Uniform periodic position lattice, single-particle wavefunctions on it, and
//! the unitary position/momentum change of basis.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Boundary amplitude, relative to the peak, above which a state counts as leaking.
pub const CONTAINMENT_RATIO: f64 = 1e-6;

/// Uniform lattice `x_j = x_min + j dx`, `j = 0..n`, with periodic wrap-around
/// (`x_max` is the image of `x_min`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::InvalidInput(format!(
                "grid extent [{x_min}, {x_max}] is empty"
            )));
        }
        if n_points < 4 || !n_points.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "n_points = {n_points} must be a power of two >= 4"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
        })
    }

    /// Grid on `[-half_width, half_width)`.
    pub fn symmetric(half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_points)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    pub fn dk(&self) -> f64 {
        2.0 * PI / (self.n_points as f64 * self.dx())
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Momentum lattice in ascending order, spanning `[-pi/dx, pi/dx)`.
    pub fn k_values(&self) -> Vec<f64> {
        let half = (self.n_points / 2) as i64;
        let dk = self.dk();
        (-half..half).map(|m| m as f64 * dk).collect()
    }

    /// Momentum lattice in transform order (`0, dk, .., -dk`).
    pub fn fft_wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points as i64;
        let dk = self.dk();
        (0..n)
            .map(|m| if m < n / 2 { m } else { m - n } as f64 * dk)
            .collect()
    }

    /// Whether reflection `x -> -x` maps lattice points onto lattice points.
    pub fn is_symmetric(&self) -> bool {
        (self.x_min + self.x_max).abs() <= 1e-12 * (self.x_max - self.x_min)
    }

    /// Index of the mirror image of point `j` under `x -> -x` on a symmetric grid.
    pub fn mirror_index(&self, j: usize) -> usize {
        (self.n_points - j) % self.n_points
    }

    /// Same lattice spacing on a domain twice as wide about the same center.
    pub fn doubled(&self) -> Result<Self> {
        let center = 0.5 * (self.x_min + self.x_max);
        let half = self.x_max - self.x_min;
        Self::new(center - half, center + half, 2 * self.n_points)
    }
}

/// Forward/inverse transform plans for one lattice size.
#[derive(Clone)]
pub struct FourierPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    n: usize,
}

impl std::fmt::Debug for FourierPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierPlan").field("n", &self.n).finish()
    }
}

impl FourierPlan {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            n,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn scratch(&self) -> Vec<Complex64> {
        let len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        vec![Complex64::new(0.0, 0.0); len]
    }

    /// Unnormalized `sum_j a_j exp(-2 pi i j m / n)`.
    pub fn forward(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(data, scratch);
    }

    /// Unnormalized inverse; callers divide by `n`.
    pub fn inverse(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(data, scratch);
    }
}

/// Complex amplitudes of a single-particle state on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    grid: Grid,
    amplitudes: Vec<Complex64>,
}

impl Wavefunction {
    pub fn new(grid: Grid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.n_points() {
            return Err(Error::InvalidInput(format!(
                "{} amplitudes for a grid of {} points",
                amplitudes.len(),
                grid.n_points()
            )));
        }
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::InvalidInput("non-finite amplitude".into()));
        }
        Ok(Self { grid, amplitudes })
    }

    /// Samples `f` on the lattice and normalizes.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let amplitudes = grid.positions().into_iter().map(f).collect();
        let mut w = Self::new(grid, amplitudes)?;
        w.normalize()?;
        Ok(w)
    }

    pub(crate) fn from_raw(grid: Grid, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), grid.n_points());
        Self { grid, amplitudes }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm_squared().sqrt();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::InvalidInput("cannot normalize a zero state".into()));
        }
        let scale = 1.0 / norm;
        self.amplitudes.iter_mut().for_each(|a| *a *= scale);
        Ok(())
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        self.amplitudes.iter_mut().for_each(|a| *a *= factor);
        self
    }

    /// Largest of the two boundary amplitudes relative to the peak amplitude.
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self
            .amplitudes
            .iter()
            .map(|a| a.norm())
            .fold(0.0_f64, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let first = self.amplitudes[0].norm();
        let last = self.amplitudes[self.amplitudes.len() - 1].norm();
        first.max(last) / peak
    }

    pub fn is_contained(&self) -> bool {
        self.boundary_ratio() < CONTAINMENT_RATIO
    }

    /// `<x>` for a normalized state.
    pub fn mean_position(&self) -> f64 {
        let dx = self.grid.dx();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| a.norm_sqr() * self.grid.x(j))
            .sum::<f64>()
            * dx
    }

    /// `<self | P | self>` for the reflection `x -> -x` on a symmetric grid.
    pub fn parity_expectation(&self) -> Result<f64> {
        if !self.grid.is_symmetric() {
            return Err(Error::InvalidInput(
                "parity needs a grid symmetric about x = 0".into(),
            ));
        }
        let dx = self.grid.dx();
        let value: Complex64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| a.conj() * self.amplitudes[self.grid.mirror_index(j)])
            .sum();
        Ok(value.re * dx)
    }
}

/// `<a|b> = sum conj(a) b dx`.
pub fn inner_product(a: &Wavefunction, b: &Wavefunction) -> Result<Complex64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    Ok(raw_inner_product(&a.amplitudes, &b.amplitudes) * a.grid.dx())
}

pub(crate) fn raw_inner_product(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Momentum-space amplitudes `phi(k)` on the ascending lattice of
/// [`Grid::k_values`], normalized so that `sum |phi|^2 dk = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumWavefunction {
    grid: Grid,
    amplitudes: Vec<Complex64>,
}

impl MomentumWavefunction {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dk()
    }
}

/// `phi(k) = dx / sqrt(2 pi) sum_j psi_j exp(-i k x_j)`.
pub fn to_momentum(w: &Wavefunction) -> MomentumWavefunction {
    let grid = w.grid;
    let n = grid.n_points();
    let plan = FourierPlan::new(n);
    let mut data = w.amplitudes.clone();
    let mut scratch = plan.scratch();
    plan.forward(&mut data, &mut scratch);

    let prefactor = grid.dx() / (2.0 * PI).sqrt();
    let ks = grid.fft_wavenumbers();
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); n];
    for (m, (value, k)) in data.into_iter().zip(ks).enumerate() {
        let shifted = (m + n / 2) % n;
        amplitudes[shifted] = value * Complex64::from_polar(prefactor, -k * grid.x_min());
    }
    MomentumWavefunction { grid, amplitudes }
}

/// Inverse of [`to_momentum`].
pub fn to_position(p: &MomentumWavefunction) -> Wavefunction {
    let grid = p.grid;
    let n = grid.n_points();
    let plan = FourierPlan::new(n);
    let ks = grid.fft_wavenumbers();
    let prefactor = (2.0 * PI).sqrt() / (grid.dx() * n as f64);
    let mut data: Vec<Complex64> = (0..n)
        .map(|m| {
            let shifted = (m + n / 2) % n;
            p.amplitudes[shifted] * Complex64::from_polar(prefactor, ks[m] * grid.x_min())
        })
        .collect();
    let mut scratch = plan.scratch();
    plan.inverse(&mut data, &mut scratch);
    Wavefunction::from_raw(grid, data)
}
