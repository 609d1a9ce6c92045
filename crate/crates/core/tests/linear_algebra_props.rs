use listdec::matlin::{
    fro_norm, lifted_top_eig, materialized_lifted_covariance, op_norm, psd_pseudo_factor, second_moment, SymMatrix,
    DEFAULT_RANK_TOL_REL,
};
use listdec::Points;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// `G Gᵀ` for a `d x r` factor, so the rank is at most `r`.
fn psd_strategy() -> impl Strategy<Value = SymMatrix> {
    (1usize..7, 0usize..7).prop_flat_map(|(d, r)| {
        let r = r.min(d);
        prop::collection::vec(-3.0..3.0f64, d * r.max(1)).prop_map(move |g| {
            if r == 0 {
                return SymMatrix::zeros(d);
            }
            let g = DMatrix::from_row_slice(d, r, &g);
            SymMatrix::from_dmatrix(&(&g * g.transpose())).unwrap()
        })
    })
}

fn close(a: &SymMatrix, b: &SymMatrix, tol: f64) -> bool {
    a.max_abs_diff(b) <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pseudo_factor_identities(m in psd_strategy()) {
        let f = psd_pseudo_factor(&m, DEFAULT_RANK_TOL_REL).unwrap();
        let scale = op_norm(&m).unwrap().max(1.0);
        let pinv_scale = op_norm(&f.pinv).unwrap().max(1.0);
        // M^{†/2} M M^{†/2} = Π and Π² = Π
        prop_assert!(close(&f.sqrt_pinv.sandwich(&m), &f.proj, 1e-7 * pinv_scale * scale));
        prop_assert!(close(&f.proj.sandwich(&SymMatrix::identity(m.dim())), &f.proj, 1e-9));
        // (M^{1/2})² = M on the retained range
        let s = f.sqrt();
        prop_assert!(close(&s.sandwich(&SymMatrix::identity(m.dim())), &f.proj.sandwich(&m), 1e-8 * scale));
        prop_assert!((f.proj.trace() - f.rank as f64).abs() < 1e-9);
        // Π M Π = M up to the dropped spectrum
        prop_assert!(close(&f.proj.sandwich(&m), &m, 1e-7 * scale));
    }

    #[test]
    fn norm_relations(m in psd_strategy()) {
        let fro = fro_norm(&m).unwrap();
        let op = op_norm(&m).unwrap();
        prop_assert!(op <= fro * (1.0 + 1e-12) + 1e-12);
        prop_assert!(fro <= op * (m.dim() as f64).sqrt() * (1.0 + 1e-12) + 1e-12);
        prop_assert!((m.trace() - m.eigen().values.iter().sum::<f64>()).abs() <= 1e-9 * fro.max(1.0));
    }

    #[test]
    fn lifted_solver_against_materialized(
        d in 1usize..5,
        rows in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 4), 3..40),
        seed in any::<u64>(),
    ) {
        let pts: Vec<Vec<f64>> = rows.iter().map(|r| r[..d].to_vec()).collect();
        let points = Points::from_rows(&pts).unwrap();
        let big = materialized_lifted_covariance(&points);
        let lam_max = big.clone().symmetric_eigen().eigenvalues.max().max(0.0);
        let r = lifted_top_eig(&points, seed, 20_000, 1e-13).unwrap();
        let a = DMatrix::from_row_slice(d * d, 1, r.matrix_a.as_slice());
        let rq = (a.transpose() * &big * &a)[(0, 0)];
        prop_assert!((fro_norm(&r.matrix_a).unwrap() - 1.0).abs() < 1e-9 || lam_max == 0.0);
        prop_assert!(rq >= 0.99 * lam_max - 1e-9 * lam_max.max(1.0), "{} vs {}", rq, lam_max);
        prop_assert!((r.eigenvalue - rq).abs() <= 1e-8 * lam_max.max(1.0));
    }
}

#[test]
fn second_moment_of_signed_pairs() {
    let pts = Points::from_rows(&[[1.0, 2.0], [-1.0, -2.0]]).unwrap();
    let h = second_moment(&pts).unwrap();
    assert_eq!(h.as_slice(), &[1.0, 2.0, 2.0, 4.0]);
    let f = psd_pseudo_factor(&h, DEFAULT_RANK_TOL_REL).unwrap();
    assert_eq!(f.rank, 1);
    // range is spanned by (1, 2)/√5
    assert!(close(&f.proj, &SymMatrix::new(2, vec![0.2, 0.4, 0.4, 0.8]).unwrap(), 1e-12));
}

#[test]
fn non_psd_input_is_rejected() {
    let m = SymMatrix::from_diag(&[1.0, -0.5]);
    assert!(psd_pseudo_factor(&m, DEFAULT_RANK_TOL_REL).is_err());
}
