#![allow(dead_code)]

use num_complex::Complex64;
use pauli_shield::fidelity::OverlapMatrix;
use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

/// Haar-distributed `m x m` unitary (Gram-Schmidt on complex Gaussian columns),
/// column-major.
pub fn haar_unitary(m: usize, rng: &mut StdRng) -> Vec<Vec<Complex64>> {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    while cols.len() < m {
        let mut v: Vec<Complex64> = (0..m)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re, im)
            })
            .collect();
        for _ in 0..2 {
            for c in &cols {
                let proj: Complex64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                v.iter_mut().zip(c).for_each(|(x, a)| *x -= proj * a);
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            cols.push(v);
        }
    }
    cols
}

/// Leading `n x n_p` block of a Haar unitary of size `m >= n`: the overlaps of
/// `n` evolved orbitals with `n_p` targets when the dynamics leaks into
/// `m - n` further levels.
pub fn sub_unitary(n: usize, n_p: usize, m: usize, rng: &mut StdRng) -> OverlapMatrix {
    let u = haar_unitary(m, rng);
    let rows: Vec<Vec<Complex64>> = (0..n)
        .map(|r| (0..n_p).map(|c| u[c][r]).collect())
        .collect();
    OverlapMatrix::from_rows(&rows).expect("unitary block is a valid overlap matrix")
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
