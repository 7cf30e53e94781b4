use pauli_shield::grid::Grid;
use pauli_shield::spectral::finite_difference::extrapolated_energies;
use pauli_shield::spectral::{fermi_gap_profile, solve, verify};

fn harmonic(x: f64) -> f64 {
    0.5 * x * x
}

fn quartic(x: f64) -> f64 {
    0.5 * (x * x + x.powi(4))
}

fn split(x: f64) -> f64 {
    0.5 * x * x + 20.0 * (-x * x).exp()
}

type Potential = fn(f64) -> f64;

fn sample(grid: &Grid, v: impl Fn(f64) -> f64) -> Vec<f64> {
    grid.positions().into_iter().map(v).collect()
}

#[test]
fn fourier_grid_agrees_with_extrapolated_finite_differences() {
    let grid = Grid::symmetric(12.0, 1024).unwrap();
    let potentials: [(&str, Potential); 3] = [
        ("harmonic", harmonic),
        ("quartic", quartic),
        ("split", split),
    ];
    for (name, v) in potentials {
        let basis = solve(&sample(&grid, v), &grid, 20).unwrap();
        verify(&basis, &sample(&grid, v)).unwrap();
        let oracle = extrapolated_energies(v, -12.0, 12.0, 1023, 20, 4).unwrap();
        for (n, (e, o)) in basis.energies().iter().zip(&oracle).enumerate() {
            assert!((e - o).abs() < 1e-7, "{name} level {n}: {e} vs {o}");
        }
    }
}

#[test]
fn energies_are_stable_under_domain_doubling() {
    let grid = Grid::symmetric(10.0, 512).unwrap();
    let wide = grid.doubled().unwrap();
    let a = solve(&sample(&grid, quartic), &grid, 16).unwrap();
    let b = solve(&sample(&wide, quartic), &wide, 16).unwrap();
    for (x, y) in a.energies().iter().zip(b.energies()) {
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn split_trap_has_nine_tunnel_pairs_below_the_barrier() {
    let grid = Grid::symmetric(12.0, 1024).unwrap();
    let e = solve(&sample(&grid, split), &grid, 24)
        .unwrap()
        .energies()
        .to_vec();
    let barrier = split(0.0);
    assert_eq!(e.iter().filter(|&&x| x < barrier).count(), 18);
    for k in 0..9 {
        let splitting = e[2 * k + 1] - e[2 * k];
        let to_next = e[2 * k + 2] - e[2 * k + 1];
        assert!(splitting < to_next, "pair {k}: {splitting} vs {to_next}");
    }
    // deepest pair is degenerate to well below the level spacing
    assert!(e[1] - e[0] < 1e-4);
}

#[test]
fn anharmonic_gap_opens_with_particle_number() {
    let gaps = fermi_gap_profile(1.0, 20).unwrap();
    assert_eq!(gaps.len(), 20);
    assert!(gaps.windows(2).all(|w| w[1].1 > w[0].1));
    let oracle = extrapolated_energies(quartic, -10.0, 10.0, 1023, 2, 4).unwrap();
    assert!((gaps[0].1 - (oracle[1] - oracle[0])).abs() < 1e-8);
    assert!((gaps[0].1 - 1.628_230_531_3).abs() < 1e-9);
}

#[test]
fn harmonic_gap_is_one_quantum() {
    for (n, gap) in fermi_gap_profile(0.0, 20).unwrap() {
        assert!((gap - 1.0).abs() < 1e-6, "N = {n}: {gap}");
    }
}
