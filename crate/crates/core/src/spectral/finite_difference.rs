//! Three-point finite-difference Hamiltonian with hard walls, solved as a
//! symmetric tridiagonal eigenproblem by Sturm-sequence bisection and inverse
//! iteration. Independent of the Fourier-grid path; used to cross-check it and
//! to size eigensolver windows.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix with diagonal `diag` and off-diagonal `off`
/// (`off[i]` couples `i` and `i + 1`).
#[derive(Debug, Clone)]
pub struct SymmetricTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymmetricTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::InvalidInput(format!(
                "tridiagonal shape mismatch: {} diagonal, {} off-diagonal",
                diag.len(),
                off.len()
            )));
        }
        Ok(Self { diag, off })
    }

    /// `-1/2 d^2/dx^2 + V` on interior points `x_min + (j + 1) dx`, `j = 0..n`,
    /// with `psi = 0` at `x_min` and `x_min + (n + 1) dx`.
    pub fn schrodinger(potential: &[f64], dx: f64) -> Result<Self> {
        let inv = 1.0 / (dx * dx);
        let diag = potential.iter().map(|v| inv + v).collect();
        let off = vec![-0.5 * inv; potential.len().saturating_sub(1)];
        Self::new(diag, off)
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = self.diag[0] - x;
        if d < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            let denom = if d == 0.0 {
                f64::EPSILON * self.scale()
            } else {
                d
            };
            d = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / denom;
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn scale(&self) -> f64 {
        self.gershgorin().1.abs().max(1.0)
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// The `count` smallest eigenvalues, ascending.
    pub fn lowest_eigenvalues(&self, count: usize) -> Vec<f64> {
        (0..count.min(self.len()))
            .map(|k| self.eigenvalue(k))
            .collect()
    }

    /// Eigenvector for `eigenvalue` by inverse iteration, orthogonalized
    /// against `previous` (vectors of nearby eigenvalues). Unit Euclidean norm.
    pub fn eigenvector(&self, eigenvalue: f64, previous: &[Vec<f64>]) -> Vec<f64> {
        let n = self.len();
        let shift = eigenvalue + 1e3 * f64::EPSILON * self.scale();
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.1 * ((i as f64) * 0.618_034).sin())
            .collect();
        normalize(&mut v);
        for _ in 0..6 {
            v = self.solve_shifted(shift, &v);
            for p in previous {
                let proj: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(p).for_each(|(a, b)| *a -= proj * b);
            }
            normalize(&mut v);
        }
        v
    }

    /// Solves `(T - shift) x = b` by Gaussian elimination with partial pivoting.
    fn solve_shifted(&self, shift: f64, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        let tiny = f64::EPSILON * self.scale();
        // rows hold up to three nonzeros after pivoting: (main, upper1, upper2)
        let mut main: Vec<f64> = self.diag.iter().map(|d| d - shift).collect();
        let mut upper1: Vec<f64> = self.off.clone();
        upper1.push(0.0);
        let mut upper2 = vec![0.0; n];
        let mut lower: Vec<f64> = self.off.clone();
        let mut rhs = b.to_vec();

        for i in 0..n.saturating_sub(1) {
            if lower[i].abs() > main[i].abs() {
                // swap rows i and i + 1
                let (m, u1, u2, r) = (main[i], upper1[i], upper2[i], rhs[i]);
                main[i] = lower[i];
                upper1[i] = main[i + 1];
                upper2[i] = upper1[i + 1];
                rhs[i] = rhs[i + 1];
                lower[i] = m;
                main[i + 1] = u1;
                upper1[i + 1] = u2;
                rhs[i + 1] = r;
            }
            if main[i] == 0.0 {
                main[i] = tiny;
            }
            let factor = lower[i] / main[i];
            main[i + 1] -= factor * upper1[i];
            if i + 1 < n - 1 {
                upper1[i + 1] -= factor * upper2[i];
            }
            rhs[i + 1] -= factor * rhs[i];
        }
        if main[n - 1] == 0.0 {
            main[n - 1] = tiny;
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            if i + 1 < n {
                acc -= upper1[i] * x[i + 1];
            }
            if i + 2 < n {
                acc -= upper2[i] * x[i + 2];
            }
            x[i] = acc / main[i];
        }
        x
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
}

/// Lowest `count` finite-difference energies of `-1/2 d^2/dx^2 + V(x)` on
/// `n_interior` points strictly inside `(x_min, x_max)`.
pub fn energies(
    potential: impl Fn(f64) -> f64,
    x_min: f64,
    x_max: f64,
    n_interior: usize,
    count: usize,
) -> Result<Vec<f64>> {
    let dx = (x_max - x_min) / (n_interior + 1) as f64;
    let v: Vec<f64> = (1..=n_interior)
        .map(|j| potential(x_min + j as f64 * dx))
        .collect();
    Ok(SymmetricTridiagonal::schrodinger(&v, dx)?.lowest_eigenvalues(count))
}

/// Finite-difference energies extrapolated to `dx -> 0` by repeated
/// Richardson elimination of the even powers of `dx`, halving the spacing
/// `levels - 1` times from `n_interior + 1` cells.
pub fn extrapolated_energies(
    potential: impl Fn(f64) -> f64,
    x_min: f64,
    x_max: f64,
    n_interior: usize,
    count: usize,
    levels: usize,
) -> Result<Vec<f64>> {
    if levels == 0 {
        return Err(Error::InvalidInput(
            "need at least one refinement level".into(),
        ));
    }
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(levels);
    let mut cells = n_interior + 1;
    for _ in 0..levels {
        table.push(energies(&potential, x_min, x_max, cells - 1, count)?);
        cells *= 2;
    }
    // Neville-style tableau in h^2
    for order in 1..levels {
        let factor = 4f64.powi(order as i32);
        for row in (order..levels).rev() {
            let (coarse, fine) = (table[row - 1].clone(), &mut table[row]);
            for (f, c) in fine.iter_mut().zip(coarse) {
                *f = (factor * *f - c) / (factor - 1.0);
            }
        }
    }
    Ok(table.pop().unwrap_or_default())
}
