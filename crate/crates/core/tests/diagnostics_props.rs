use listdec::datagen::{sample_gaussian, GaussianParams};
use listdec::diagnostics::{
    check_certificate_inequality, check_sigma_guarantee, check_stability, relative_frobenius_error,
    STABILITY_REPORT_SCHEMA_VERSION,
};
use listdec::matlin::SymMatrix;
use listdec::{Error, Points};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn gram(d: usize, r: usize, g: &[f64]) -> SymMatrix {
    let g = DMatrix::from_row_slice(d, r, &g[..d * r]);
    SymMatrix::from_dmatrix(&(&g * g.transpose())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    /// `B` is built inside the range of `A` so the kernel premise holds.
    #[test]
    fn sigma_guarantee_holds(
        d in 1usize..6,
        ra in 1usize..6,
        rb in 1usize..6,
        ga in prop::collection::vec(-2.0..2.0f64, 36),
        mix in prop::collection::vec(-2.0..2.0f64, 36),
    ) {
        let ra = ra.min(d);
        let rb = rb.min(ra);
        let a = gram(d, ra, &ga);
        let gdm = DMatrix::from_row_slice(d, ra, &ga[..d * ra]);
        let c = DMatrix::from_row_slice(ra, rb, &mix[..ra * rb]);
        let gb = &gdm * c;
        let b = SymMatrix::from_dmatrix(&(&gb * gb.transpose())).unwrap();
        match check_sigma_guarantee(&a, &b) {
            Ok(r) => prop_assert!(r.holds, "{:?}", r),
            // near-singular draws can fall under the rank cutoff differently for A and B
            Err(Error::KernelNotNested) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn certificate_holds_on_random_subsets(
        d in 1usize..5,
        rows in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 4), 10..80),
        keep in prop::collection::vec(any::<bool>(), 80),
    ) {
        let pts: Vec<Vec<f64>> = rows.iter().map(|r| r[..d].to_vec()).collect();
        let points = Points::from_rows(&pts).unwrap();
        let mut subset: Vec<usize> = (0..points.len()).filter(|&i| keep[i]).collect();
        let need = (0.25 * points.len() as f64).ceil() as usize;
        for i in 0..points.len() {
            if subset.len() >= need { break; }
            if !subset.contains(&i) { subset.push(i); }
        }
        subset.sort_unstable();
        let r = check_certificate_inequality(&points, &subset, 0.5).unwrap();
        prop_assert!(r.holds, "{:?}", r);
    }

    #[test]
    fn relative_error_is_zero_on_the_truth(d in 1usize..6, g in prop::collection::vec(-2.0..2.0f64, 36)) {
        let s = gram(d, d, &g);
        let e = relative_frobenius_error(&s, &s).unwrap();
        prop_assert!(e < 1e-5, "{}", e);
    }
}

#[test]
fn sigma_guarantee_rejects_larger_kernel() {
    let a = SymMatrix::from_diag(&[1.0, 0.0]);
    let b = SymMatrix::from_diag(&[0.0, 1.0]);
    assert!(matches!(check_sigma_guarantee(&a, &b), Err(Error::KernelNotNested)));
}

#[test]
fn stability_report_serializes_with_version() {
    let points = sample_gaussian(&GaussianParams::standard(2), 2000, 4).unwrap();
    let rep = check_stability(&points, &[0.0, 0.0], &SymMatrix::identity(2), 0.05, 0.05, 3, 1).unwrap();
    let v: serde_json::Value = serde_json::to_value(&rep).unwrap();
    assert_eq!(v["schema_version"], STABILITY_REPORT_SCHEMA_VERSION);
    let names: Vec<&str> = rep.conditions.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["L1", "L2", "L3", "L4", "L5"]);
    assert_eq!(rep.subsets_tested, 1 + 3 + 5);
    assert!(rep.ratio("L5").unwrap() < 1e-6);
}
