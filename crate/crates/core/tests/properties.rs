//! Property-based invariants over randomly sampled problems.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use ramsey_lq::{
    linalg,
    model::{
        build_problem, check_shock_stability, controllability_matrix, scale_by_sqrt_beta,
        ModelFile, Partition, ProblemData,
    },
    riccati::{build_pencil, pencil_mirror_check, solve_full_riccati, DEFAULT_TOL},
    sample, welfare,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Rebuilding the controllability matrix column-block by column-block
    /// from the scaled system reproduces `controllability_matrix` bitwise.
    #[test]
    fn controllability_matrix_rebuilds_bitwise(seed in any::<u64>()) {
        let p = sample::random_problem(seed);
        let part = p.partition();
        let (n_y, n_u) = (part.n_y(), part.n_u);
        let scaled = scale_by_sqrt_beta(&p);
        let a_s = scaled.a_tilde.view((0, 0), (n_y, n_y)).into_owned();
        let b_s = scaled.b_tilde.view((0, 0), (n_y, n_u)).into_owned();
        let mut rebuilt = DMatrix::zeros(n_y, n_y * n_u);
        let mut block = b_s;
        for j in 0..n_y {
            rebuilt.view_mut((0, j * n_u), (n_y, n_u)).copy_from(&block);
            if j + 1 < n_y {
                block = &a_s * block;
            }
        }
        prop_assert_eq!(rebuilt, controllability_matrix(&p));
    }

    /// The scaled system keeps the block structure exactly: the instrument
    /// never reaches `z` and the shock block never feeds back into `y`.
    #[test]
    fn scaling_preserves_structural_zeros(seed in any::<u64>()) {
        let p = sample::random_problem(seed);
        let part = p.partition();
        let scaled = scale_by_sqrt_beta(&p);
        let s = p.beta().sqrt();
        for i in 0..part.n_y() {
            for j in 0..part.n_y() {
                prop_assert_eq!(scaled.a_tilde[(i, j)], p.a_yy()[(i, j)] * s);
            }
        }
        for i in part.n_y()..part.n() {
            for j in 0..part.n_y() {
                prop_assert_eq!(scaled.a_tilde[(i, j)], 0.0);
            }
            for j in 0..part.n_u {
                prop_assert_eq!(scaled.b_tilde[(i, j)], 0.0);
            }
        }
    }

    /// Shock stability holds exactly when the autoregressive root is below
    /// the discount-adjusted threshold `1/sqrt(beta)`.
    #[test]
    fn shock_stability_matches_the_threshold(
        rho in 0.01f64..1.4,
        beta in 0.5f64..0.999,
    ) {
        // Keep clear of the knife edge where float rounding decides.
        prop_assume!((rho * beta.sqrt() - 1.0).abs() > 1e-9);
        let data = ProblemData {
            partition: Partition::new(0, 1, 1, 1).unwrap(),
            beta,
            a_yy: DMatrix::from_element(1, 1, 1.0),
            a_yz: DMatrix::from_element(1, 1, 0.5),
            a_zz: DMatrix::from_element(1, 1, rho),
            b_yu: DMatrix::from_element(1, 1, 1.0),
            q_yy: DMatrix::from_element(1, 1, 1.0),
            q_yz: DMatrix::from_element(1, 1, 0.0),
            q_zz: DMatrix::from_element(1, 1, 0.0),
            r_uu: DMatrix::from_element(1, 1, 1.0),
        };
        let p = build_problem(data).unwrap();
        let check = check_shock_stability(&p).unwrap();
        prop_assert_eq!(check.stable, rho < 1.0 / beta.sqrt());
        prop_assert!((check.eigenvalue_moduli[0] - rho).abs() <= 1e-12);
    }

    /// A validated problem survives the JSON model-file round trip bitwise.
    #[test]
    fn model_file_round_trips_bitwise(seed in any::<u64>()) {
        let p = sample::random_problem(seed);
        let text = serde_json::to_string(&ModelFile::from_problem(&p)).unwrap();
        let back: ModelFile = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.to_problem().unwrap(), p);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every pencil root pairs with its discounted mirror; the bookkeeping
    /// accounts for all `2n` eigenvalues.
    #[test]
    fn pencil_roots_pair_into_mirrors(seed in any::<u64>()) {
        let p = sample::random_problem(seed);
        let report = pencil_mirror_check(&build_pencil(&p), p.beta(), 1e-8).unwrap();
        prop_assert!(report.pass);
        prop_assert!(report.unpaired.is_empty());
        let mut accounted = report.zero_roots.len();
        for pair in &report.pairs {
            prop_assert!(pair.defect <= 1e-8);
            // In original units the pair satisfies beta * root * mirror = 1.
            let product = pair.root * pair.mirror * p.beta();
            prop_assert!((product - 1.0).norm() <= 1e-8);
            accounted += if pair.root == pair.mirror { 1 } else { 2 };
        }
        prop_assert_eq!(accounted, report.eigenvalues.len());
    }

    /// The projected welfare matrix is symmetric PSD, so welfare is never
    /// positive, whatever the initial condition.
    #[test]
    fn welfare_is_nonpositive_for_any_start(
        seed in any::<u64>(),
        raw in prop::collection::vec(-3.0f64..3.0, 8),
    ) {
        let p = sample::random_problem(seed);
        let part = p.partition();
        // A rare draw close to losing controllability can push the linear
        // convergence rate arbitrarily near one; such instances are a
        // documented diagnostic outcome, not part of this property.
        let sol = solve_full_riccati(&p, DEFAULT_TOL, 20_000).unwrap();
        prop_assume!(sol.converged);
        let k0 = DVector::from_column_slice(&raw[..part.n_k]);
        let z0 = DVector::from_column_slice(&raw[part.n_k..part.n_k + part.n_z]);
        let rep = welfare::report(&sol, &k0, &z0).unwrap();
        prop_assert!(linalg::asymmetry(&rep.s) == 0.0);
        prop_assert!(linalg::min_symmetric_eigenvalue(&rep.s) >= -1e-8);
        prop_assert!(rep.welfare <= 1e-12);
    }
}
