use listdec::datagen::{generate_list_dataset, sample_gaussian, AdversarySpec, CorruptionSpec, GaussianParams};
use listdec::estimator::{
    covariance_list_decoding, divider_edges, find_divider, quantile_rank, score_stats, EstimatorConfig, Termination,
};
use listdec::sweeps::structural_audit;
use listdec::{Error, Points};
use proptest::prelude::*;

/// Straight scan of the `k` pieces; no binary search, no shared counting code.
fn brute_divider(values: &[f64], n_prime: usize, m1: usize) -> Option<f64> {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    let (lo, hi) = (s[m1 - 1], s[m - m1]);
    if !(hi > lo) {
        return None;
    }
    let k = (2 * m).div_ceil(n_prime);
    let e = divider_edges(lo, hi, k);
    for j in 0..k {
        let inside = |v: f64| v >= e[j] && (v < e[j + 1] || (j == k - 1 && v <= e[j + 1]));
        let c = s.iter().filter(|&&v| v >= lo && v <= hi && inside(v)).count();
        if 2 * c <= n_prime {
            let tau = 0.5 * (e[j] + e[j + 1]);
            return (tau > lo && tau < hi).then_some(tau);
        }
    }
    None
}

fn values_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        prop::collection::vec(-1e3..1e3f64, 4..300),
        // heavy ties
        prop::collection::vec((0..6i32).prop_map(f64::from), 4..300),
        // two far clumps
        prop::collection::vec(prop_oneof![-1.0..1.0f64, 1e4..1e4 + 1.0], 4..300),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn divider_matches_scan(values in values_strategy(), a in 1usize..40, b in 1usize..200) {
        let m1 = 1 + a % (values.len() / 2);
        let n_prime = b;
        let got = find_divider(&values, n_prime, m1);
        match brute_divider(&values, n_prime, m1) {
            Some(tau) => {
                let got = got.unwrap();
                prop_assert_eq!(got.to_bits(), tau.to_bits());
                let left = values.iter().filter(|&&v| v <= got).count();
                prop_assert!(left >= m1 && values.len() - left >= m1);
            }
            None => prop_assert!(got.is_err()),
        }
    }

    #[test]
    fn stats_match_sorting(values in values_strategy(), a in 1usize..40) {
        let m1 = 1 + a % (values.len() / 2);
        let st = score_stats(&values, m1).unwrap();
        let mut s = values.clone();
        s.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let n = s.len();
        prop_assert_eq!(st.q_left, s[m1 - 1]);
        prop_assert_eq!(st.q_right, s[n - m1]);
        let med = s[n.div_ceil(2) - 1];
        prop_assert_eq!(st.median, med);
        let f: f64 = values.iter().map(|v| (v - med).powi(2)).sum::<f64>() / n as f64;
        prop_assert!((st.mean_f - f).abs() <= 1e-12 * f.max(1.0));
        prop_assert!(st.q_left <= st.median && st.median <= st.q_right);
    }
}

fn mixed_points(d: usize, m: usize, wide: f64, seed: u64) -> Points {
    let half = m / 2;
    let mut p = sample_gaussian(&GaussianParams::standard(d), half, seed).unwrap();
    let q = sample_gaussian(&GaussianParams::isotropic(vec![0.0; d], wide), m - half, seed ^ 1).unwrap();
    for x in q.rows() {
        p.push(x);
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn runs_are_structurally_sound(
        d in 1usize..5,
        m in 40usize..400,
        wide in prop_oneof![Just(1.0), 10.0..1e6f64],
        quarter in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let alpha = if quarter { 0.25 } else { 0.5 };
        let points = mixed_points(d, m, wide, seed);
        let config = EstimatorConfig::new(alpha).with_seed(seed);
        let est = covariance_list_decoding(&points, &config).unwrap();
        if let Err(e) = structural_audit(m, &config, &est) {
            prop_assert!(false, "{}", e);
        }
        let again = covariance_list_decoding(&points, &config).unwrap();
        prop_assert_eq!(serde_json::to_string(&est).unwrap(), serde_json::to_string(&again).unwrap());
        for w in est.hypotheses.windows(2) {
            prop_assert!(w[0].indices.iter().all(|i| w[1].indices.binary_search(i).is_err()));
        }
    }
}

#[test]
fn all_zero_points_give_one_hypothesis() {
    let points = Points::new(3, vec![0.0; 600]).unwrap();
    let est = covariance_list_decoding(&points, &EstimatorConfig::new(0.5)).unwrap();
    assert_eq!(est.hypotheses.len(), 1);
    assert_eq!(est.hypotheses[0].size(), 200);
    assert!(est.hypotheses[0].h_matrix.as_slice().iter().all(|&v| v == 0.0));
    assert_eq!(est.trace.removals().count(), 0);
}

#[test]
fn two_clusters_split_once() {
    let spec = CorruptionSpec::list(
        0.5,
        0.0,
        5000,
        2500,
        AdversarySpec::new("second-gaussian").with_vector("mean", vec![0.0; 3]).with_scalar("scale", 1e4),
    );
    let ds = generate_list_dataset(&GaussianParams::standard(3), &spec, 3).unwrap();
    let est = covariance_list_decoding(ds.points(), &EstimatorConfig::new(0.5).with_seed(3)).unwrap();
    assert_eq!(est.hypotheses.len(), 2);
    assert!(matches!(est.trace.nodes[0].termination, Termination::Split { .. }));
    assert_eq!(est.trace.split_count(), 1);
}

#[test]
fn too_few_points_is_rejected() {
    let points = Points::new(2, vec![1.0; 38]).unwrap();
    let err = covariance_list_decoding(&points, &EstimatorConfig::new(0.5)).unwrap_err();
    assert!(matches!(err, Error::TooFewPoints { got: 19, need: 20 }), "{err:?}");
}

#[test]
fn quantile_rank_floor() {
    assert_eq!(quantile_rank(0.5, 5000), 277);
    assert_eq!(quantile_rank(0.5, 18), 1);
    assert_eq!(quantile_rank(0.25, 10), 1);
}

#[test]
fn seed_changes_nothing_structural_on_clean_data() {
    let points = sample_gaussian(&GaussianParams::standard(4), 3000, 9).unwrap();
    for seed in 0..3 {
        let est = covariance_list_decoding(&points, &EstimatorConfig::new(0.5).with_seed(seed)).unwrap();
        assert_eq!(est.hypotheses.len(), 1);
        assert!(est.hypotheses[0].size() as f64 >= 0.99 * 3000.0);
    }
}
