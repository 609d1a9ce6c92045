//! Executable checks of the estimator's supporting inequalities, stability
//! spot checks, and evaluation metrics.

mod lemmas;
mod metrics;
mod stability;

pub use lemmas::{
    check_certificate_inequality, check_closeness_norm, check_filter_ratio, check_gaussian_quadratic_variance,
    check_sigma_guarantee, diff_frob_witness, CheckResult, DiffFrobWitness, FilterRatioReport, QuadVarianceCheck,
    EXACT_SLACK, MC_SAFETY, MIN_MC_SAMPLES,
};
pub use metrics::{
    gmm_cluster_metrics, relative_frobenius_error, ComponentMatch, MetricReport, Overlap, METRIC_REPORT_SCHEMA_VERSION,
};
pub use stability::{
    check_stability, ConditionReport, SearchStrategy, StabilityReport, GREEDY_BATCHES, QUADRATIC_FAMILY_SIZE,
    STABILITY_REPORT_SCHEMA_VERSION,
};
