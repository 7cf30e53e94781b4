use num_complex::Complex64;
use pauli_shield::grid::{inner_product, to_momentum, to_position, Grid, Wavefunction};
use proptest::prelude::*;

fn state(grid: Grid, coeffs: &[(f64, f64, f64, f64)]) -> Wavefunction {
    // superposition of displaced, boosted Gaussians
    Wavefunction::from_fn(grid, |x| {
        coeffs
            .iter()
            .map(|&(a, x0, p0, w)| {
                Complex64::from_polar(a, p0 * x) * (-(x - x0).powi(2) / (2.0 * w * w)).exp()
            })
            .sum()
    })
    .unwrap()
}

fn gaussians() -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
    prop::collection::vec((0.1..1.0f64, -4.0..4.0f64, -3.0..3.0f64, 0.5..2.0f64), 1..4)
}

proptest! {
    #[test]
    fn momentum_transform_preserves_norm(g in gaussians()) {
        let grid = Grid::symmetric(20.0, 512).unwrap();
        let psi = state(grid, &g);
        let phi = to_momentum(&psi);
        prop_assert!((phi.norm_squared() - psi.norm_squared()).abs() < 1e-12);
        let back = to_position(&phi);
        let err = back.amplitudes().iter().zip(psi.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn inner_product_is_sesquilinear(g1 in gaussians(), g2 in gaussians(), re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let grid = Grid::symmetric(20.0, 256).unwrap();
        let (a, b) = (state(grid, &g1), state(grid, &g2));
        let c = Complex64::new(re, im);
        let scaled = b.clone().scaled(c);
        let lhs = inner_product(&a, &scaled).unwrap();
        let rhs = c * inner_product(&a, &b).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
        let ab = inner_product(&a, &b).unwrap();
        let ba = inner_product(&b, &a).unwrap();
        prop_assert!((ab - ba.conj()).norm() < 1e-14);
        prop_assert!(inner_product(&a, &a).unwrap().norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn mirror_is_an_involution(j in 0usize..1024) {
        let grid = Grid::symmetric(10.0, 1024).unwrap();
        prop_assert_eq!(grid.mirror_index(grid.mirror_index(j)), j);
        if j > 0 {
            prop_assert!((grid.x(grid.mirror_index(j)) + grid.x(j)).abs() < 1e-12);
        }
    }
}
