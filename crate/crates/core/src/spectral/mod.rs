//! Lowest eigenpairs of static trap Hamiltonians `-1/2 d^2/dx^2 + V(x)`.
//!
//! The primary path is the Fourier-grid Hamiltonian: the kinetic operator is
//! exact on the momentum lattice of the [`Grid`], so eigenstates are exact
//! stationary states of the split-operator propagator's spatial
//! discretization. The dense matrix is restricted to the window of lattice
//! points where the requested states live; the window grows until the states
//! decay to round-off at its edges.

pub mod finite_difference;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{raw_inner_product, FourierPlan, Grid, Wavefunction};

/// Amplitude at the window edge, relative to the peak, below which a state
/// is treated as fully contained in the window.
const WINDOW_TAIL: f64 = 1e-12;
const ORTHONORMALITY_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-6;
/// Relative energy gap below which neighbours are rotated into parity states.
const PARITY_CLUSTER_GAP: f64 = 1e-4;

/// Ascending eigenenergies with unit-norm eigenstates on a common grid.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    grid: Grid,
    energies: Vec<f64>,
    states: Vec<Wavefunction>,
}

impl EigenBasis {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn states(&self) -> &[Wavefunction] {
        &self.states
    }

    pub fn into_states(self) -> Vec<Wavefunction> {
        self.states
    }
}

/// `H psi` evaluated spectrally on the full periodic lattice.
pub struct GridHamiltonian<'a> {
    grid: Grid,
    potential: &'a [f64],
    kinetic: Vec<f64>,
    plan: FourierPlan,
}

impl<'a> GridHamiltonian<'a> {
    pub fn new(grid: Grid, potential: &'a [f64]) -> Result<Self> {
        if potential.len() != grid.n_points() {
            return Err(Error::InvalidInput(format!(
                "potential has {} values for {} grid points",
                potential.len(),
                grid.n_points()
            )));
        }
        let kinetic = grid.fft_wavenumbers().iter().map(|k| 0.5 * k * k).collect();
        Ok(Self {
            grid,
            potential,
            kinetic,
            plan: FourierPlan::new(grid.n_points()),
        })
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.n_points();
        let mut data = psi.to_vec();
        let mut scratch = self.plan.scratch();
        self.plan.forward(&mut data, &mut scratch);
        let inv_n = 1.0 / n as f64;
        data.iter_mut()
            .zip(&self.kinetic)
            .for_each(|(a, t)| *a *= t * inv_n);
        self.plan.inverse(&mut data, &mut scratch);
        data.iter_mut()
            .zip(psi.iter().zip(self.potential))
            .for_each(|(a, (p, v))| *a += p * v);
        data
    }

    /// `||H psi - E psi||` in the grid norm.
    pub fn residual(&self, psi: &Wavefunction, energy: f64) -> f64 {
        let h = self.apply(psi.amplitudes());
        let sq: f64 = h
            .iter()
            .zip(psi.amplitudes())
            .map(|(a, p)| (a - p * energy).norm_sqr())
            .sum();
        (sq * self.grid.dx()).sqrt()
    }
}

/// First row of the circulant kinetic matrix, `T_ij = t[(i - j) mod n]`.
fn kinetic_row(grid: &Grid) -> Vec<f64> {
    let n = grid.n_points();
    let plan = FourierPlan::new(n);
    let mut data: Vec<Complex64> = grid
        .fft_wavenumbers()
        .iter()
        .map(|k| Complex64::new(0.5 * k * k / n as f64, 0.0))
        .collect();
    let mut scratch = plan.scratch();
    plan.inverse(&mut data, &mut scratch);
    data.into_iter().map(|c| c.re).collect()
}

fn potential_is_even(grid: &Grid, potential: &[f64]) -> bool {
    grid.is_symmetric()
        && (1..grid.n_points()).all(|j| {
            let (a, b) = (potential[j], potential[grid.mirror_index(j)]);
            (a - b).abs() <= 1e-12 * (a.abs() + b.abs()).max(1.0)
        })
}

/// Contiguous index window `[lo, hi]` around every point with `V <= cut`.
fn window_for_cut(potential: &[f64], cut: f64, even: bool) -> (usize, usize) {
    let n = potential.len();
    let lo = potential.iter().position(|&v| v <= cut).unwrap_or(0);
    let hi = potential.iter().rposition(|&v| v <= cut).unwrap_or(n - 1);
    if even {
        // keep the window closed under j -> n - j
        let lo = lo.max(1).min(n - hi.max(1));
        (lo, n - lo)
    } else {
        (lo, hi)
    }
}

fn grow_window(potential: &[f64], lo: usize, hi: usize, even: bool) -> (usize, usize) {
    let n = potential.len();
    let width = hi - lo + 1;
    let pad = (width / 4).max(16);
    let lo = lo.saturating_sub(pad);
    let hi = (hi + pad).min(n - 1);
    if even {
        let lo = lo.max(1).min(n - hi);
        (lo, n - lo)
    } else {
        (lo, hi)
    }
}

/// Energy scale up to which the window must hold the states: the `count`-th
/// finite-difference level plus headroom.
fn window_cut(grid: &Grid, potential: &[f64], count: usize) -> Result<f64> {
    let tri = finite_difference::SymmetricTridiagonal::schrodinger(potential, grid.dx())?;
    let v_min = potential.iter().cloned().fold(f64::INFINITY, f64::min);
    let top = tri.eigenvalue(count.saturating_sub(1));
    Ok(top + 0.5 * (top - v_min).abs() + 10.0)
}

struct WindowSolution {
    energies: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    matrix: DMatrix<f64>,
}

fn solve_window(
    kinetic: &[f64],
    potential: &[f64],
    lo: usize,
    hi: usize,
    count: usize,
) -> Result<WindowSolution> {
    let n = potential.len();
    let size = hi - lo + 1;
    let matrix = DMatrix::<f64>::from_fn(size, size, |a, b| {
        let offset = (a + n - b) % n;
        let diagonal = if a == b { potential[lo + a] } else { 0.0 };
        kinetic[offset] + diagonal
    });
    let evd = matrix
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigensolver {
            reason: "dense eigendecomposition did not converge".into(),
            worst_index: 0,
            residual: f64::NAN,
        })?;
    let values = &evd.eigenvalues;
    let vectors = &evd.eigenvectors;
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let take = count.min(size);
    Ok(WindowSolution {
        energies: order[..take].iter().map(|&i| values[i]).collect(),
        vectors: order[..take]
            .iter()
            .map(|&i| (0..size).map(|r| vectors[(r, i)]).collect())
            .collect(),
        matrix,
    })
}

fn tails_contained(vectors: &[Vec<f64>]) -> bool {
    vectors.iter().all(|v| {
        let peak = v.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
        let edge = v[0].abs().max(v[v.len() - 1].abs());
        edge <= WINDOW_TAIL * peak
    })
}

fn rayleigh(matrix: &DMatrix<f64>, v: &[f64]) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for a in 0..n {
        let mut row = 0.0;
        for b in 0..n {
            row += matrix[(a, b)] * v[b];
        }
        acc += v[a] * row;
    }
    acc / v.iter().map(|x| x * x).sum::<f64>()
}

/// Within clusters of nearly degenerate levels of an even potential, rotate
/// the eigenvectors onto definite parity.
fn resolve_parity(solution: &mut WindowSolution, mirror: impl Fn(usize) -> usize) -> Vec<f64> {
    let count = solution.energies.len();
    let mut parities = vec![0.0; count];
    let mut start = 0;
    while start < count {
        let mut end = start + 1;
        while end < count {
            let gap = solution.energies[end] - solution.energies[end - 1];
            if gap > PARITY_CLUSTER_GAP * solution.energies[end].abs().max(1.0) {
                break;
            }
            end += 1;
        }
        let members: Vec<usize> = (start..end).collect();
        let size = members.len();
        let reflect = |v: &[f64]| -> Vec<f64> { (0..v.len()).map(|r| v[mirror(r)]).collect() };
        if size > 1 {
            let p = DMatrix::<f64>::from_fn(size, size, |a, b| {
                let va = &solution.vectors[members[a]];
                let pb = reflect(&solution.vectors[members[b]]);
                va.iter().zip(&pb).map(|(x, y)| x * y).sum()
            });
            let p = DMatrix::<f64>::from_fn(size, size, |a, b| 0.5 * (p[(a, b)] + p[(b, a)]));
            if let Some(evd) = p.try_symmetric_eigen(f64::EPSILON, 0) {
                let rot = &evd.eigenvectors;
                let old: Vec<Vec<f64>> = members
                    .iter()
                    .map(|&m| solution.vectors[m].clone())
                    .collect();
                for c in 0..size {
                    let mut v = vec![0.0; old[0].len()];
                    for (a, o) in old.iter().enumerate() {
                        let w = rot[(a, c)];
                        v.iter_mut().zip(o).for_each(|(x, y)| *x += w * y);
                    }
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.iter_mut().for_each(|x| *x /= norm);
                    solution.energies[members[c]] = rayleigh(&solution.matrix, &v);
                    solution.vectors[members[c]] = v;
                }
            }
        }
        for &m in &members {
            let v = &solution.vectors[m];
            parities[m] = v.iter().zip(reflect(v)).map(|(x, y)| x * y).sum::<f64>();
        }
        // ascending energy; exact ties put the even state first
        let mut idx = members.clone();
        idx.sort_by(|&a, &b| {
            solution.energies[a]
                .total_cmp(&solution.energies[b])
                .then(parities[b].total_cmp(&parities[a]))
        });
        let energies: Vec<f64> = idx.iter().map(|&i| solution.energies[i]).collect();
        let vectors: Vec<Vec<f64>> = idx.iter().map(|&i| solution.vectors[i].clone()).collect();
        let pars: Vec<f64> = idx.iter().map(|&i| parities[i]).collect();
        for (k, &m) in members.iter().enumerate() {
            solution.energies[m] = energies[k];
            solution.vectors[m] = vectors[k].clone();
            parities[m] = pars[k];
        }
        start = end;
    }
    parities
}

/// Sign so that the largest-magnitude amplitude is positive (first such index
/// on ties).
fn fix_phase(v: &mut [f64]) {
    let peak = v.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    if let Some(first) = v.iter().find(|a| a.abs() >= (1.0 - 1e-9) * peak) {
        if *first < 0.0 {
            v.iter_mut().for_each(|a| *a = -*a);
        }
    }
}

/// Lowest `count` eigenpairs of `-1/2 d^2/dx^2 + V` on `grid`.
pub fn solve(potential: &[f64], grid: &Grid, count: usize) -> Result<EigenBasis> {
    let n = grid.n_points();
    if potential.len() != n {
        return Err(Error::InvalidInput(format!(
            "potential has {} values for {} grid points",
            potential.len(),
            n
        )));
    }
    if count == 0 || count >= n / 4 {
        return Err(Error::InvalidInput(format!(
            "requested {count} states; need 0 < K < n_points/4 = {}",
            n / 4
        )));
    }
    if potential.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite potential value".into()));
    }

    let even = potential_is_even(grid, potential);
    let kinetic = kinetic_row(grid);
    let cut = window_cut(grid, potential, count)?;
    let (mut lo, mut hi) = window_for_cut(potential, cut, even);
    if hi + 1 - lo < 4 * count {
        let center = (lo + hi) / 2;
        lo = center.saturating_sub(2 * count);
        hi = (center + 2 * count).min(n - 1);
    }

    let mut solution = loop {
        let solution = solve_window(&kinetic, potential, lo, hi, count)?;
        let full = lo == 0 && hi == n - 1 || (even && lo <= 1);
        if tails_contained(&solution.vectors) || full {
            break solution;
        }
        (lo, hi) = grow_window(potential, lo, hi, even);
    };

    let offset = lo;
    if even {
        let mirror = |r: usize| {
            let j = (n - (r + offset)) % n;
            j.wrapping_sub(offset)
        };
        let window_len = hi - lo + 1;
        let symmetric_window = (0..window_len).all(|r| mirror(r) < window_len);
        if symmetric_window {
            resolve_parity(&mut solution, mirror);
        }
    }

    let dx = grid.dx();
    let scale = 1.0 / dx.sqrt();
    let mut states = Vec::with_capacity(solution.vectors.len());
    for v in &mut solution.vectors {
        fix_phase(v);
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n];
        for (r, a) in v.iter().enumerate() {
            amplitudes[lo + r] = Complex64::new(a * scale, 0.0);
        }
        states.push(Wavefunction::from_raw(*grid, amplitudes));
    }

    let basis = EigenBasis {
        grid: *grid,
        energies: solution.energies,
        states,
    };
    verify(&basis, potential)?;
    Ok(basis)
}

/// Checks ordering, orthonormality and residuals of an eigenbasis.
pub fn verify(basis: &EigenBasis, potential: &[f64]) -> Result<()> {
    let h = GridHamiltonian::new(basis.grid, potential)?;
    let dx = basis.grid.dx();
    let mut worst = (0, 0.0_f64);
    for (i, (state, &energy)) in basis.states.iter().zip(&basis.energies).enumerate() {
        let r = h.residual(state, energy) / energy.abs().max(1.0);
        if r > worst.1 {
            worst = (i, r);
        }
    }
    if worst.1 > RESIDUAL_TOL {
        return Err(Error::Eigensolver {
            reason: "eigenpair residual above tolerance".into(),
            worst_index: worst.0,
            residual: worst.1,
        });
    }
    for pair in basis.energies.windows(2).enumerate() {
        if pair.1[1] < pair.1[0] {
            return Err(Error::Eigensolver {
                reason: "energies out of order".into(),
                worst_index: pair.0 + 1,
                residual: pair.1[0] - pair.1[1],
            });
        }
    }
    for i in 0..basis.len() {
        for j in 0..=i {
            let s =
                raw_inner_product(basis.states[i].amplitudes(), basis.states[j].amplitudes()) * dx;
            let target = if i == j { 1.0 } else { 0.0 };
            let err = (s - Complex64::new(target, 0.0)).norm();
            if err > ORTHONORMALITY_TOL {
                return Err(Error::Eigensolver {
                    reason: format!("states {j} and {i} not orthonormal"),
                    worst_index: i,
                    residual: err,
                });
            }
        }
    }
    Ok(())
}

/// Grid sized for the lowest `count` levels of an even confining potential:
/// wide enough for the classically forbidden tails and fine enough for the
/// highest momenta involved.
pub fn auto_grid(potential: impl Fn(f64) -> f64, count: usize) -> Result<Grid> {
    let provisional_half = 40.0;
    let provisional = Grid::symmetric(provisional_half, 8192)?;
    let v: Vec<f64> = provisional
        .positions()
        .iter()
        .map(|&x| potential(x))
        .collect();
    let tri = finite_difference::SymmetricTridiagonal::schrodinger(&v, provisional.dx())?;
    let top = tri.eigenvalue(count);
    let v_min = v.iter().cloned().fold(f64::INFINITY, f64::min);

    // walk outward from the turning point until the WKB decay exponent is large
    let step = 1e-3;
    let mut x = 0.0;
    while potential(x) < top && x < provisional_half {
        x += step;
    }
    let mut exponent = 0.0;
    while exponent < 40.0 && x < provisional_half {
        exponent += (2.0 * (potential(x) - top)).max(0.0).sqrt() * step;
        x += step;
    }
    let half_width = x + 1.0;
    let k_needed = 2.0 * (2.0 * (top - v_min)).sqrt() + 12.0;
    let dx = std::f64::consts::PI / k_needed;
    let n = ((2.0 * half_width / dx).ceil() as usize)
        .next_power_of_two()
        .max(4 * (count + 1) + 4);
    Grid::symmetric(half_width, n)
}

/// Fermi gap `E_{N+1} - E_N`, `N = 1..=n_max`, of `V = (x^2 + lambda x^4)/2`.
pub fn fermi_gap_profile(anharmonicity: f64, n_max: usize) -> Result<Vec<(usize, f64)>> {
    if !(anharmonicity >= 0.0 && anharmonicity.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "lambda = {anharmonicity} must be >= 0"
        )));
    }
    if n_max == 0 {
        return Err(Error::InvalidInput("N_max must be at least 1".into()));
    }
    let potential = |x: f64| {
        let x2 = x * x;
        0.5 * (x2 + anharmonicity * x2 * x2)
    };
    let grid = auto_grid(potential, n_max + 1)?;
    let v: Vec<f64> = grid.positions().into_iter().map(potential).collect();
    let basis = solve(&v, &grid, n_max + 1)?;
    let e = basis.energies();
    Ok((1..=n_max).map(|n| (n, e[n] - e[n - 1])).collect())
}
