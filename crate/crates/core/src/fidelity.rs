//! Protected-subspace fidelity of an evolved Fermi sea.
//!
//! With `A[j][i] = <psi_j(T)|phi_i>` for the `N` evolved orbitals and the
//! `N_p` protected target orbitals, the fidelity is the sum over all
//! `N_p`-row subsets of `|det A_U|^2`. [`fidelity_oracle`] enumerates that
//! sum literally; [`fidelity_fast`] evaluates the same quantity as
//! `det(A^dagger A)` (Cauchy-Binet) from a Cholesky factorization of the
//! `N_p x N_p` Gram matrix.

use itertools::Itertools;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{raw_inner_product, Wavefunction};

/// Tolerance for fidelities leaving `[0, 1]` through round-off.
pub const RANGE_SLACK: f64 = 1e-10;
const COLUMN_NORM_SLACK: f64 = 1e-8;
/// Largest `N` and `N_p` the enumeration will attempt.
pub const ORACLE_MAX_N: usize = 12;
pub const ORACLE_MAX_NP: usize = 6;

/// `N x N_p` overlaps between evolved states (rows) and protected targets
/// (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl OverlapMatrix {
    /// Row-major entries. Rejects shapes with `N_p > N`, non-finite entries and
    /// columns longer than one (targets are unit vectors).
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "{} entries for a {rows}x{cols} overlap matrix",
                entries.len()
            )));
        }
        if cols > rows {
            return Err(Error::InvalidInput(format!(
                "N_p = {cols} protected targets exceed N = {rows} particles"
            )));
        }
        if entries
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::InvalidInput("non-finite overlap".into()));
        }
        let m = Self {
            rows,
            cols,
            entries,
        };
        for c in 0..cols {
            let norm: f64 = (0..rows)
                .map(|r| m.get(r, c).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if norm > 1.0 + COLUMN_NORM_SLACK {
                return Err(Error::InvalidInput(format!(
                    "column {c} has norm {norm}, above one"
                )));
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidInput("ragged overlap rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// `A[j][i] = <evolved_j | target_i>`.
    pub fn from_states(evolved: &[Wavefunction], targets: &[Wavefunction]) -> Result<Self> {
        let mut entries = Vec::with_capacity(evolved.len() * targets.len());
        for psi in evolved {
            for phi in targets {
                if psi.grid() != phi.grid() {
                    return Err(Error::GridMismatch);
                }
                entries
                    .push(raw_inner_product(psi.amplitudes(), phi.amplitudes()) * psi.grid().dx());
            }
        }
        Self::new(evolved.len(), targets.len(), entries)
    }

    /// Total particle number `N`.
    pub fn n(&self) -> usize {
        self.rows
    }

    /// Protected particle number `N_p`.
    pub fn n_p(&self) -> usize {
        self.cols
    }

    /// Buffer particle number `N_b = N - N_p`.
    pub fn n_b(&self) -> usize {
        self.rows - self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    /// Matrix built from the given rows and the first `cols` columns.
    pub fn select(&self, rows: &[usize], cols: usize) -> Result<Self> {
        if cols > self.cols {
            return Err(Error::InvalidInput(format!(
                "asked for {cols} of {} columns",
                self.cols
            )));
        }
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for &r in rows {
            if r >= self.rows {
                return Err(Error::InvalidInput(format!("row {r} of {}", self.rows)));
            }
            entries.extend_from_slice(&self.row(r)[..cols]);
        }
        Self::new(rows.len(), cols, entries)
    }

    /// Leading `rows x cols` block.
    pub fn leading(&self, rows: usize, cols: usize) -> Result<Self> {
        self.select(&(0..rows).collect::<Vec<_>>(), cols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Oracle,
    GramDeterminant,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Oracle => "oracle",
            Method::GramDeterminant => "gram",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityResult {
    pub value: f64,
    pub method: Method,
    pub n: usize,
    pub n_p: usize,
    pub n_b: usize,
}

impl FidelityResult {
    fn new(value: f64, method: Method, a: &OverlapMatrix) -> Self {
        Self {
            value,
            method,
            n: a.n(),
            n_p: a.n_p(),
            n_b: a.n_b(),
        }
    }
}

fn permutation_sign(p: &[usize]) -> f64 {
    let mut inversions = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Direct sum over row subsets `U` and permutations `sigma` of
/// `|sum_sigma sgn(sigma) prod_i A[U(sigma(i))][i]|^2`.
pub fn fidelity_oracle(a: &OverlapMatrix) -> Result<FidelityResult> {
    let (n, n_p) = (a.n(), a.n_p());
    if n > ORACLE_MAX_N || n_p > ORACLE_MAX_NP {
        return Err(Error::OracleTooLarge { n, n_p });
    }
    let permutations: Vec<(Vec<usize>, f64)> = (0..n_p)
        .permutations(n_p)
        .map(|p| {
            let s = permutation_sign(&p);
            (p, s)
        })
        .collect();
    let mut total = 0.0;
    for subset in (0..n).combinations(n_p) {
        let mut amplitude = Complex64::new(0.0, 0.0);
        for (sigma, sign) in &permutations {
            let product: Complex64 = (0..n_p).map(|i| a.get(subset[sigma[i]], i)).product();
            amplitude += product * sign;
        }
        total += amplitude.norm_sqr();
    }
    Ok(FidelityResult::new(total, Method::Oracle, a))
}

/// `det(A^dagger A)` via Cholesky; zero when the Gram matrix is singular.
pub(crate) fn gram_determinant<'a>(rows: impl Iterator<Item = &'a [Complex64]>, n_p: usize) -> f64 {
    if n_p == 0 {
        return 1.0;
    }
    let mut gram = vec![Complex64::new(0.0, 0.0); n_p * n_p];
    for row in rows {
        for a in 0..n_p {
            let ca = row[a].conj();
            for b in a..n_p {
                gram[a * n_p + b] += ca * row[b];
            }
        }
    }
    for a in 0..n_p {
        for b in 0..a {
            gram[a * n_p + b] = gram[b * n_p + a].conj();
        }
    }
    cholesky_determinant(&mut gram, n_p)
}

/// Determinant of a Hermitian positive-semidefinite matrix, overwritten by
/// its Cholesky factor.
fn cholesky_determinant(g: &mut [Complex64], n: usize) -> f64 {
    let mut det = 1.0;
    for k in 0..n {
        let mut d = g[k * n + k].re;
        for m in 0..k {
            d -= g[k * n + m].norm_sqr();
        }
        if d <= 0.0 {
            return 0.0;
        }
        det *= d;
        let root = d.sqrt();
        for i in k + 1..n {
            let mut s = g[i * n + k];
            for m in 0..k {
                s -= g[i * n + m] * g[k * n + m].conj();
            }
            g[i * n + k] = s / root;
        }
        g[k * n + k] = Complex64::new(root, 0.0);
    }
    det
}

fn checked_range(value: f64) -> Result<f64> {
    if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&value) {
        return Err(Error::NumericalConsistency { value });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Fidelity as the Gram determinant `det(A^dagger A)`.
pub fn fidelity_fast(a: &OverlapMatrix) -> Result<FidelityResult> {
    let value = gram_determinant((0..a.n()).map(|r| a.row(r)), a.n_p());
    Ok(FidelityResult::new(
        checked_range(value)?,
        Method::GramDeterminant,
        a,
    ))
}

/// Fidelity of the configuration occupying `rows` of a master overlap matrix.
pub(crate) fn fidelity_of_rows(master: &OverlapMatrix, rows: &[usize], n_p: usize) -> Result<f64> {
    let value = gram_determinant(rows.iter().map(|&r| &master.row(r)[..n_p]), n_p);
    checked_range(value)
}
