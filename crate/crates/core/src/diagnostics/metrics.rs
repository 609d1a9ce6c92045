use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::datagen::{mixture_moments, Dataset, Label};
use crate::error::{Error, Result};
use crate::estimator::Hypothesis;
use crate::matlin::{fro_norm, psd_pseudo_factor, SymMatrix, DEFAULT_RANK_TOL_REL};

pub const METRIC_REPORT_SCHEMA_VERSION: u32 = 1;

/// `‖H^{†/2} Σ H^{†/2} − Π_H‖_F`.
pub fn relative_frobenius_error(h: &SymMatrix, sigma: &SymMatrix) -> Result<f64> {
    if h.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: sigma.dim() });
    }
    let fac = psd_pseudo_factor(h, DEFAULT_RANK_TOL_REL)?;
    psd_pseudo_factor(sigma, DEFAULT_RANK_TOL_REL)?;
    fro_norm(&fac.sqrt_pinv.sandwich(sigma).sub(&fac.proj))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub count: usize,
    /// `count` over the number of surviving inliers of the component.
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentMatch {
    /// Hypothesis with the largest overlap; `None` when the list is empty.
    pub best_hypothesis: Option<usize>,
    pub overlap: Overlap,
    /// Surviving inliers `n_p − ℓ_p`.
    pub surviving: usize,
    /// Error of the best-overlap hypothesis against `Σ_p`.
    pub rel_frob_error: Option<f64>,
    /// Smallest error over the whole list.
    pub min_rel_frob_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub schema_version: u32,
    pub list_size: usize,
    /// Component 0: the target in the list model.
    pub rel_frob_error: Option<f64>,
    pub inlier_overlap: Overlap,
    pub per_component: BTreeMap<usize, ComponentMatch>,
    /// `‖Σ^{−1/2}(Σ_p − Σ_q)Σ^{−1/2}‖_F` with `Σ` the mixture covariance.
    pub separation_table: Vec<Vec<f64>>,
    /// Sizes of the returned sets.
    pub hypothesis_sizes: Vec<usize>,
}

impl MetricReport {
    /// Smallest per-component overlap fraction.
    pub fn worst_overlap_fraction(&self) -> f64 {
        self.per_component.values().map(|c| c.overlap.fraction).fold(1.0, f64::min)
    }
}

/// Matches every truth component to the hypothesis that holds most of its
/// surviving inliers. Works for both corruption models.
pub fn gmm_cluster_metrics(dataset: &Dataset, hypotheses: &[Hypothesis]) -> Result<MetricReport> {
    let m = dataset.len();
    if dataset.labels.len() != m {
        return Err(Error::MissingLabels);
    }
    for h in hypotheses {
        if let Some(&bad) = h.indices.iter().find(|&&i| i >= m) {
            return Err(Error::IndexOutOfRange { index: bad, len: m });
        }
    }
    let k = dataset.truth.len();
    let mut per_component = BTreeMap::new();
    for p in 0..k {
        let surviving = dataset.counts[p].surviving();
        let target = Label::Inlier(p as u32);
        let overlaps: Vec<usize> =
            hypotheses.iter().map(|h| h.indices.iter().filter(|&&i| dataset.labels[i] == target).count()).collect();
        let best = (0..hypotheses.len()).max_by(|&a, &b| overlaps[a].cmp(&overlaps[b]).then(b.cmp(&a)));
        let sigma = &dataset.truth[p].params.covariance;
        let errors = hypotheses.iter().map(|h| relative_frobenius_error(&h.h_matrix, sigma)).collect::<Result<Vec<_>>>()?;
        let count = best.map_or(0, |b| overlaps[b]);
        per_component.insert(
            p,
            ComponentMatch {
                best_hypothesis: best,
                overlap: Overlap { count, fraction: if surviving == 0 { 1.0 } else { count as f64 / surviving as f64 } },
                surviving,
                rel_frob_error: best.map(|b| errors[b]),
                min_rel_frob_error: errors.iter().copied().reduce(f64::min),
            },
        );
    }
    let mix = mixture_moments(&dataset.truth.iter().map(|c| (c.weight, c.params.clone())).collect::<Vec<_>>());
    let whiten = psd_pseudo_factor(&mix.covariance, DEFAULT_RANK_TOL_REL)?.sqrt_pinv;
    let mut separation_table = vec![vec![0.0; k]; k];
    for p in 0..k {
        for q in p + 1..k {
            let diff = dataset.truth[p].params.covariance.sub(&dataset.truth[q].params.covariance);
            let s = fro_norm(&whiten.sandwich(&diff))?;
            separation_table[p][q] = s;
            separation_table[q][p] = s;
        }
    }
    let first = per_component.get(&0).cloned();
    Ok(MetricReport {
        schema_version: METRIC_REPORT_SCHEMA_VERSION,
        list_size: hypotheses.len(),
        rel_frob_error: first.as_ref().and_then(|c| c.rel_frob_error),
        inlier_overlap: first.map_or(Overlap { count: 0, fraction: 0.0 }, |c| c.overlap),
        per_component,
        separation_table,
        hypothesis_sizes: hypotheses.iter().map(|h| h.size()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rel_frob_examples() {
        let i3 = SymMatrix::identity(3);
        assert_abs_diff_eq!(relative_frobenius_error(&i3, &i3).unwrap(), 0.0, epsilon = 1e-14);
        let e = relative_frobenius_error(&SymMatrix::scaled_identity(2, 4.0), &SymMatrix::identity(2)).unwrap();
        assert_abs_diff_eq!(e, 0.75 * 2f64.sqrt(), epsilon = 1e-14);
        let d = SymMatrix::from_diag(&[1.0, 0.0]);
        assert_abs_diff_eq!(relative_frobenius_error(&d, &d).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn rel_frob_rejects_indefinite() {
        let bad = SymMatrix::from_diag(&[1.0, -1.0]);
        assert!(matches!(relative_frobenius_error(&bad, &SymMatrix::identity(2)), Err(Error::NotPsd { .. })));
    }
}
