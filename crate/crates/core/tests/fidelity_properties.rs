mod common;

use num_complex::Complex64;
use pauli_shield::fidelity::{fidelity_fast, fidelity_oracle, OverlapMatrix, RANGE_SLACK};
use proptest::prelude::*;

use common::{rng, sub_unitary};

fn sizes() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (1usize..=8)
        .prop_flat_map(|n| (Just(n), 0usize..=n.min(4), 0usize..=4, any::<u64>()))
        .prop_map(|(n, n_p, extra, seed)| (n, n_p, n + extra, seed))
}

fn with_rows(a: &OverlapMatrix, rows: usize) -> OverlapMatrix {
    a.leading(rows, a.n_p()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gram_determinant_matches_enumeration((n, n_p, m, seed) in sizes()) {
        let a = sub_unitary(n, n_p, m, &mut rng(seed));
        let fast = fidelity_fast(&a).unwrap().value;
        let oracle = fidelity_oracle(&a).unwrap().value;
        prop_assert!((fast - oracle).abs() < 1e-10, "fast {fast} oracle {oracle}");
    }

    #[test]
    fn fidelity_is_a_probability((n, n_p, m, seed) in sizes()) {
        let a = sub_unitary(n, n_p, m, &mut rng(seed));
        let f = fidelity_fast(&a).unwrap().value;
        prop_assert!((0.0..=1.0 + RANGE_SLACK).contains(&f));
    }

    #[test]
    fn appending_a_buffer_row_never_lowers_fidelity((n, n_p, m, seed) in sizes()) {
        prop_assume!(n >= 2 && n_p < n);
        let full = sub_unitary(n, n_p, m, &mut rng(seed));
        let mut last = fidelity_fast(&with_rows(&full, n_p)).unwrap().value;
        for rows in n_p + 1..=n {
            let f = fidelity_fast(&with_rows(&full, rows)).unwrap().value;
            prop_assert!(f >= last - 1e-12, "{rows} rows: {f} < {last}");
            last = f;
        }
    }

    #[test]
    fn orbital_phases_do_not_matter((n, n_p, m, seed) in sizes(), phases in prop::collection::vec(0.0..std::f64::consts::TAU, 12)) {
        let a = sub_unitary(n, n_p, m, &mut rng(seed));
        let rows: Vec<Vec<Complex64>> = (0..n)
            .map(|r| {
                (0..n_p)
                    .map(|c| a.get(r, c) * Complex64::cis(phases[r]) * Complex64::cis(phases[8 + c % 4]))
                    .collect()
            })
            .collect();
        let b = OverlapMatrix::from_rows(&rows).unwrap();
        let (fa, fb) = (fidelity_fast(&a).unwrap().value, fidelity_fast(&b).unwrap().value);
        prop_assert!((fa - fb).abs() < 1e-12);
    }

    #[test]
    fn full_unitary_is_perfect((n, seed) in (1usize..=6, any::<u64>())) {
        // every target lies inside the span of the evolved orbitals
        let a = sub_unitary(n, n, n, &mut rng(seed));
        prop_assert!((fidelity_fast(&a).unwrap().value - 1.0).abs() < 1e-10);
        prop_assert!((fidelity_oracle(&a).unwrap().value - 1.0).abs() < 1e-10);
    }
}

/// Largest singular value of `A` by power iteration on `A^dagger A`.
fn largest_singular_value(a: &OverlapMatrix) -> f64 {
    let mut v = vec![Complex64::new(1.0, 0.0); a.n_p()];
    let mut sigma2 = 0.0;
    for _ in 0..500 {
        let av: Vec<Complex64> = (0..a.n())
            .map(|r| (0..a.n_p()).map(|c| a.get(r, c) * v[c]).sum())
            .collect();
        let w: Vec<Complex64> = (0..a.n_p())
            .map(|c| (0..a.n()).map(|r| a.get(r, c).conj() * av[r]).sum())
            .collect();
        let norm = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        sigma2 = norm;
        v = w.into_iter().map(|x| x / norm).collect();
    }
    sigma2.sqrt()
}

#[test]
fn singular_values_of_overlaps_stay_below_one() {
    let mut r = rng(7);
    for n in 1..=8 {
        for n_p in 1..=n.min(4) {
            let a = sub_unitary(n, n_p, n + 3, &mut r);
            assert!(largest_singular_value(&a) <= 1.0 + 1e-10);
        }
    }
}

#[test]
fn overlap_rejects_columns_longer_than_one() {
    let rows = vec![
        vec![Complex64::new(0.9, 0.0)],
        vec![Complex64::new(0.9, 0.0)],
    ];
    assert!(OverlapMatrix::from_rows(&rows).is_err());
}
