//! Property tests for the structural invariants of each module.

use proptest::prelude::*;
use semiclassical_lab::grid_core::{convolve, make_grid, ConvolutionMode, GridFunction};
use semiclassical_lab::operators::{build_hamiltonian, momentum_operator, KineticScheme, Potential};
use semiclassical_lab::phasespace::{husimi, weyl_quantize, wigner_matrix};
use semiclassical_lab::schatten::{quantum_gradients, schatten_norm, translated_difference_norm, ShiftMode, ShiftVector};
use semiclassical_lab::spectral::{diagonalize_schrodinger, spectral_projector, DensityOperator, DensityTag};
use semiclassical_lab::{linalg, Complex64, Matrix};

fn hermitian(n: usize, entries: &[(f64, f64)]) -> Matrix {
    let a = Matrix::from_fn(n, n, |i, j| {
        let (re, im) = entries[i * n + j];
        Complex64::new(re, im)
    });
    linalg::hermitian_part(&a)
}

fn entries(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0, -1.0..1.0), n * n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn convolution_is_symmetric_and_multiplies_integrals(
        f in prop::collection::vec(-1.0..1.0_f64, 32),
        g in prop::collection::vec(-1.0..1.0_f64, 32),
    ) {
        let grid = make_grid(1, 32, 3.0).unwrap();
        let f = GridFunction::new(grid, f).unwrap();
        let g = GridFunction::new(grid, g).unwrap();
        for mode in [ConvolutionMode::Periodic, ConvolutionMode::ZeroPadded] {
            let fg = convolve(&f, &g, mode).unwrap();
            let gf = convolve(&g, &f, mode).unwrap();
            // Pointwise bound on |f * g|.
            let scale = f.lp_norm(1.0) * g.max_abs();
            let diff = fg.values().iter().zip(gf.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(diff <= 1e-12 * scale.max(f64::MIN_POSITIVE), "{diff}");
        }
        // Zero padding keeps every product, so the integral factorizes once f * g fits in
        // the box: restrict both factors to the central half.
        let central = |h: &GridFunction<f64>| {
            let values = h.values().iter().enumerate().map(|(i, &v)| if (8..24).contains(&i) { v } else { 0.0 }).collect();
            GridFunction::new(grid, values).unwrap()
        };
        let (f, g) = (central(&f), central(&g));
        let total = convolve(&f, &g, ConvolutionMode::ZeroPadded).unwrap().integrate();
        let expected = f.integrate() * g.integrate();
        let scale = f.lp_norm(1.0) * g.lp_norm(1.0);
        prop_assert!((total - expected).abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE), "{total} vs {expected}");
    }

    #[test]
    fn schatten_norms_interpolate(e in entries(8), p in 2.0..12.0_f64, hbar in 0.05..1.0_f64) {
        let a = hermitian(8, &e);
        let lp = schatten_norm(&a, p, hbar, 1).unwrap();
        let l2 = schatten_norm(&a, 2.0, hbar, 1).unwrap();
        let linf = schatten_norm(&a, f64::INFINITY, hbar, 1).unwrap();
        let bound = l2.powf(2.0 / p) * linf.powf(1.0 - 2.0 / p);
        prop_assert!(lp <= bound * (1.0 + 1e-9), "{lp} > {bound}");
    }

    #[test]
    fn hamiltonian_is_bounded_below_by_the_potential(
        sep in 0.5..2.0_f64,
        barrier in 0.1..2.0_f64,
        offset in 0.0..1.0_f64,
        hbar in 0.1..0.5_f64,
        psi in prop::collection::vec((-1.0..1.0_f64, -1.0..1.0_f64), 48),
    ) {
        let grid = make_grid(1, 48, 6.0).unwrap();
        let potential = Potential::double_well(sep, barrier, offset);
        let h = build_hamiltonian(&grid, &potential, hbar, KineticScheme::Spectral).unwrap();
        let v_min = potential.sample(&grid).unwrap().values().iter().cloned().fold(f64::INFINITY, f64::min);
        let psi = nalgebra::DVector::from_iterator(48, psi.into_iter().map(|(r, i)| Complex64::new(r, i)));
        let energy = (psi.adjoint() * h.matrix() * &psi)[(0, 0)].re;
        let mass = psi.norm_squared();
        prop_assert!(energy >= v_min * mass - 1e-10 * h.matrix().norm() * mass, "{energy} < {}", v_min * mass);
    }

    #[test]
    fn eigenvectors_resolve_the_identity(mu in 0.2..2.0_f64, hbar in 0.05..0.5_f64) {
        let grid = make_grid(1, 64, 6.0).unwrap();
        let dec = diagonalize_schrodinger(&grid, &Potential::shifted_harmonic(mu), hbar, KineticScheme::Spectral).unwrap();
        let v = dec.eigenvectors();
        let defect = linalg::max_abs(&(v * v.adjoint() - linalg::identity(64)));
        prop_assert!(defect < 1e-9, "{defect}");
    }

    #[test]
    fn momentum_is_hermitian(n in (4usize..40).prop_map(|k| 2 * k), hbar in 0.01..1.0_f64) {
        let grid = make_grid(1, n, 6.0).unwrap();
        let p = momentum_operator(&grid, hbar, 0).unwrap();
        prop_assert!(linalg::max_abs(&(&p - p.adjoint())) <= 1e-12 * linalg::max_abs(&p));
    }

    #[test]
    fn wigner_is_unitary_and_inverted_by_weyl(e in entries(16), hbar in 0.05..0.5_f64) {
        let grid = make_grid(1, 16, 3.0).unwrap();
        let op = hermitian(16, &e);
        let f = wigner_matrix(&grid, hbar, &op).unwrap();
        let hs = schatten_norm(&op, 2.0, hbar, 1).unwrap();
        prop_assert!((f.lp_norm(2.0) - hs).abs() <= 1e-9 * hs);
        let back = weyl_quantize(&f).unwrap();
        prop_assert!(linalg::max_abs(&(back - &op)) <= 1e-10 * linalg::max_abs(&op).max(1.0));
    }

    #[test]
    fn husimi_of_a_density_matrix_is_a_probability(
        weights in prop::collection::vec(0.0..1.0_f64, 16),
        e in entries(16),
        hbar in 0.05..0.5_f64,
    ) {
        let grid = make_grid(1, 16, 3.0).unwrap();
        let (_, u) = linalg::hermitian_eigen(&hermitian(16, &e));
        let gamma = linalg::matmul3(&u, &linalg::diagonal(&weights), &u.adjoint());
        let gamma = DensityOperator::new(grid, hbar, linalg::hermitian_part(&gamma), DensityTag::General).unwrap();
        let m = husimi(&gamma).unwrap();
        prop_assert!(m.values().iter().all(|&v| (-1e-9..=1.0 + 1e-9).contains(&v)));
    }

    #[test]
    fn translations_obey_the_gradient_bound(hbar in 0.05..0.3_f64, steps in -8i64..8, xi0 in -0.5..0.5_f64) {
        let grid = make_grid(1, 96, 6.0).unwrap();
        let dec = diagonalize_schrodinger(&grid, &Potential::shifted_harmonic(1.0), hbar, KineticScheme::Spectral).unwrap();
        let gamma = spectral_projector(&dec, f64::NEG_INFINITY, 0.0, hbar).unwrap();
        let grads = quantum_gradients(&gamma).unwrap();
        let d = grads.dx_norm(1.0, hbar, 1).unwrap() + grads.dxi_norm(1.0, hbar, 1).unwrap();
        let z = ShiftVector::new(vec![steps as f64 * grid.spacing()], vec![xi0]).unwrap();
        let lhs = translated_difference_norm(&gamma, &z, 1.0, ShiftMode::GridAligned).unwrap();
        prop_assert!(lhs <= d * z.norm() * (1.0 + 1e-9) + 1e-12, "{lhs} > {}", d * z.norm());
    }
}
