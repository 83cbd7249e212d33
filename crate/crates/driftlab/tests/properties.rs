use driftlab::controls::band_limited;
use driftlab::fd_model::{a1k, FiniteModel};
use driftlab::obstruction::{alpha_coeffs, series_a, CouplingTable};
use driftlab::pde_sim::{solve_schrodinger, GalerkinModel, WaveFunction};
use driftlab::quadform::{eval_qn, vandermonde_recover, KernelH, PiecewisePoly};
use driftlab::spectral::{eigenvalue, Bump, DipoleMoment};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bump_pair() -> impl Strategy<Value = DipoleMoment<f64>> {
    (0.2f64..0.3, 0.05f64..0.15, -1.0f64..1.0, 0.65f64..0.8, 0.05f64..0.15, -1.0f64..1.0).prop_map(
        |(c1, w1, a1, c2, w2, a2)| DipoleMoment::bumps(vec![Bump::new(c1, w1, a1), Bump::new(c2, w2, a2)]).unwrap(),
    )
}

fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0f64..2.0, n * n).prop_map(move |v| {
        let a = DMatrix::from_vec(n, n, v);
        (&a + a.transpose()) * 0.5
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn alpha_rows_sum_to_one(p in 0usize..=12) {
        prop_assert_eq!(alpha_coeffs(p).alternating_sum(), 1);
    }

    #[test]
    fn split_step_conserves_norm(seed in any::<u64>(), amp in 1.0f64..300.0, j in 5usize..30) {
        let model = GalerkinModel::new(&DipoleMoment::centered_linear(), j).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = band_limited(0.02, 200, 5, &mut rng).unwrap().scaled(amp);
        let tr = solve_schrodinger(&model, &u, &WaveFunction::ground(j), 1).unwrap();
        prop_assert!(tr.norm_drift < 1e-10, "drift {}", tr.norm_drift);
    }

    #[test]
    fn coupling_matrix_is_symmetric(mu in bump_pair()) {
        let m = GalerkinModel::new(&mu, 24).unwrap();
        let c = m.coupling();
        prop_assert!((c - c.transpose()).amax() == 0.0);
    }

    #[test]
    fn coefficients_are_quadratic_in_the_dipole(mu in bump_pair(), s in 0.1f64..3.0) {
        let t1 = CouplingTable::build(&mu, 2, 1500, 1).unwrap();
        let t2 = CouplingTable::build(&mu.scaled(s), 2, 1500, 1).unwrap();
        let (a1, a2) = (series_a(&t1, 1).unwrap(), series_a(&t2, 1).unwrap());
        prop_assert!((a2 - s * s * a1).abs() <= 1e-10 * a2.abs().max(1e-12));
    }

    #[test]
    fn quadratic_form_is_homogeneous(seed in any::<u64>(), c in -4.0f64..4.0) {
        let table = CouplingTable::build(&DipoleMoment::centered_linear(), 1, 400, 1).unwrap();
        let h = KernelH::new(table, 0.003).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = band_limited(0.003, 64, 4, &mut rng).unwrap();
        let q1 = eval_qn(&h, 1, &s).unwrap();
        let qc = eval_qn(&h, 1, &s.scaled(c)).unwrap();
        prop_assert!((qc - c * c * q1).abs() <= 1e-12 * q1.abs().max(1e-300) * c.abs().max(1.0).powi(2));
    }

    #[test]
    fn exact_products_commute_and_primitives_integrate(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = PiecewisePoly::linear(&band_limited(1.0, 30, 4, &mut rng).unwrap());
        let g = PiecewisePoly::linear(&band_limited(1.0, 30, 4, &mut rng).unwrap()).primitive();
        let (fg, gf) = (f.product(&g).integral(), g.product(&f).integral());
        prop_assert!((fg - gf).abs() <= 1e-14 * fg.abs().max(1.0));
        prop_assert!((f.primitive().end_value() - f.integral()).abs() < 1e-13);
    }

    #[test]
    fn vandermonde_recovers_planted_values(vals in prop::collection::vec(-3.0f64..3.0, 3)) {
        let modes = [2usize, 3, 5];
        let z: Vec<Complex64> = modes
            .iter()
            .map(|&j| {
                let w = eigenvalue(j) - eigenvalue(1);
                vals.iter().enumerate().map(|(p, &v)| Complex64::new(0.0, -w).powu(p as u32) * v).sum()
            })
            .collect();
        let r = vandermonde_recover(&modes, &z).unwrap();
        for (got, want) in r.values.iter().zip(&vals) {
            prop_assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn a1k_is_invariant_under_rotation(h1 in symmetric(4), angle in 0.0f64..6.0) {
        // distinct spectrum for H0; conjugating both matrices by the same
        // rotation moves the eigenbasis but not the coefficient
        let h0 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 1.0, 2.5, 4.0]));
        let base = FiniteModel::new(h0.clone(), h1.clone()).unwrap();
        let (c, s) = (angle.cos(), angle.sin());
        let mut r = DMatrix::<f64>::identity(4, 4);
        r[(0, 0)] = c;
        r[(0, 2)] = -s;
        r[(2, 0)] = s;
        r[(2, 2)] = c;
        let rotated = FiniteModel::new(&r * &h0 * r.transpose(), &r * &h1 * r.transpose()).unwrap();
        for k in 2..=4 {
            let (a, b) = (a1k(&base, k).unwrap(), a1k(&rotated, k).unwrap());
            // eigenvectors carry a sign ambiguity, so compare up to sign
            prop_assert!((a.abs() - b.abs()).abs() < 1e-10 * a.abs().max(1.0), "k {}: {} vs {}", k, a, b);
        }
    }
}
