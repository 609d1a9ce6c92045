//! Synthetic data under the two corruption models:
//!
//! * list decoding: `n ≥ α m` inliers are drawn from one Gaussian, `ℓ = ⌊ε n⌋`
//!   of them are replaced, and `m − n` more outliers are added;
//! * GMM contamination: `m` mixture samples are drawn and `⌊ε α m⌋` of them are
//!   replaced, with `α` the minimum component weight.
//!
//! The adversary sees everything. The result is shuffled so that point order
//! carries no information.

pub mod adversary;
pub mod io;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use adversary::{adversary_registry, Adversary, AdversaryContext, AdversarySpec, ParamValue};

use crate::error::{Error, Result};
use crate::matlin::{psd_pseudo_factor, SymMatrix, DEFAULT_RANK_TOL_REL};
use crate::points::Points;
use crate::rng::{derive_seed, rng_from_seed, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianParams {
    pub mean: Vec<f64>,
    pub covariance: SymMatrix,
}

impl GaussianParams {
    pub fn new(mean: Vec<f64>, covariance: SymMatrix) -> Result<Self> {
        let g = Self { mean, covariance };
        g.validate()?;
        Ok(g)
    }

    pub fn standard(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], covariance: SymMatrix::identity(dim) }
    }

    pub fn isotropic(mean: Vec<f64>, variance: f64) -> Self {
        let d = mean.len();
        Self { mean, covariance: SymMatrix::scaled_identity(d, variance) }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.len() != self.covariance.dim() {
            return Err(Error::DimensionMismatch { expected: self.covariance.dim(), got: self.mean.len() });
        }
        if self.mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gaussian mean"));
        }
        psd_pseudo_factor(&self.covariance, DEFAULT_RANK_TOL_REL).map(|_| ())
    }
}

/// Mean and covariance of the mixture `Σ_p w_p N(μ_p, Σ_p)`.
pub fn mixture_moments(components: &[(f64, GaussianParams)]) -> GaussianParams {
    let d = components[0].1.dim();
    let mut mean = vec![0.0; d];
    for (w, g) in components {
        for (m, v) in mean.iter_mut().zip(&g.mean) {
            *m += w * v;
        }
    }
    let mut cov = SymMatrix::zeros(d);
    for (w, g) in components {
        cov = cov.add(&g.covariance.add(&SymMatrix::outer(&g.mean)).scale(*w));
    }
    GaussianParams { covariance: cov.sub(&SymMatrix::outer(&mean)), mean }
}

/// `n` draws of `μ + Σ^{1/2} z`; `Σ` may be rank deficient.
pub fn sample_gaussian(params: &GaussianParams, n: usize, seed: u64) -> Result<Points> {
    sample_gaussian_with(params, n, &mut rng_from_seed(seed))
}

pub(crate) fn sample_gaussian_with(params: &GaussianParams, n: usize, rng: &mut Rng) -> Result<Points> {
    params.validate()?;
    let d = params.dim();
    let root = psd_pseudo_factor(&params.covariance, DEFAULT_RANK_TOL_REL)?.sqrt();
    let mut out = Points::with_capacity(d, n);
    let mut z = vec![0.0; d];
    for _ in 0..n {
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let x: Vec<f64> = root.mul_vec(&z).iter().zip(&params.mean).map(|(a, m)| a + m).collect();
        out.push(&x);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionModel {
    ListDecoding,
    GmmContamination,
}

/// Parameters of one corrupted-data draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptionSpec {
    pub model: CorruptionModel,
    /// Inlier fraction (list model) or minimum component weight (GMM model).
    pub alpha: f64,
    /// Fraction of inliers the adversary may replace.
    pub epsilon: f64,
    pub adversary: AdversarySpec,
    /// Total number of points handed to the estimator.
    pub m: usize,
    /// Inliers drawn (list model only); defaults to `⌈α m⌉`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

impl CorruptionSpec {
    pub fn list(alpha: f64, epsilon: f64, m: usize, n: usize, adversary: AdversarySpec) -> Self {
        Self { model: CorruptionModel::ListDecoding, alpha, epsilon, adversary, m, n: Some(n) }
    }

    pub fn gmm(alpha: f64, epsilon: f64, m: usize, adversary: AdversarySpec) -> Self {
        Self { model: CorruptionModel::GmmContamination, alpha, epsilon, adversary, m, n: None }
    }

    pub fn inlier_count(&self) -> usize {
        self.n.unwrap_or_else(|| (self.alpha * self.m as f64).ceil() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let alpha_max = match self.model {
            CorruptionModel::ListDecoding => 0.5,
            CorruptionModel::GmmContamination => 1.0,
        };
        if !(self.alpha > 0.0 && self.alpha <= alpha_max) {
            return Err(Error::InvalidConfig(format!("alpha = {} outside (0, {alpha_max}]", self.alpha)));
        }
        if !(0.0..0.5).contains(&self.epsilon) {
            return Err(Error::InvalidConfig(format!("epsilon = {} outside [0, 0.5)", self.epsilon)));
        }
        if self.m == 0 {
            return Err(Error::BadCounts("m must be positive".into()));
        }
        if self.model == CorruptionModel::GmmContamination && self.n.is_some() {
            return Err(Error::InvalidConfig("n is only meaningful for the list model".into()));
        }
        if !adversary_registry().contains(&self.adversary.id.as_str()) {
            return Err(Error::UnknownAdversary(self.adversary.id.clone()));
        }
        Ok(())
    }
}

/// Ground-truth tag of a point. Never shown to the estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Inlier(u32),
    /// Outlier together with the adversary's group id.
    Outlier(u32),
}

impl Label {
    pub fn is_inlier(&self) -> bool {
        matches!(self, Label::Inlier(_))
    }

    pub fn component(&self) -> Option<usize> {
        match self {
            Label::Inlier(p) => Some(*p as usize),
            Label::Outlier(_) => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Inlier(p) => write!(f, "inlier:{p}"),
            Label::Outlier(g) => write!(f, "outlier:{g}"),
        }
    }
}

impl FromStr for Label {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (kind, id) = s.split_once(':').ok_or_else(|| format!("malformed label `{s}`"))?;
        let id: u32 = id.parse().map_err(|_| format!("malformed label id in `{s}`"))?;
        match kind {
            "inlier" => Ok(Label::Inlier(id)),
            "outlier" => Ok(Label::Outlier(id)),
            _ => Err(format!("unknown label kind `{kind}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub weight: f64,
    pub params: GaussianParams,
}

/// Per-component draw and replacement counts (`n_p`, `ℓ_p`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentCounts {
    pub drawn: usize,
    pub replaced: usize,
}

impl ComponentCounts {
    pub fn surviving(&self) -> usize {
        self.drawn - self.replaced
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    points: Points,
    pub labels: Vec<Label>,
    pub truth: Vec<Component>,
    pub counts: Vec<ComponentCounts>,
    pub spec: CorruptionSpec,
    pub seed: u64,
}

impl Dataset {
    /// Assembles a dataset and checks the counting invariants of its model.
    pub fn new(
        points: Points,
        labels: Vec<Label>,
        truth: Vec<Component>,
        counts: Vec<ComponentCounts>,
        spec: CorruptionSpec,
        seed: u64,
    ) -> Result<Self> {
        let ds = Self { points, labels, truth, counts, spec, seed };
        ds.audit()?;
        Ok(ds)
    }

    /// The unlabeled view handed to the estimator.
    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn inlier_indices(&self, component: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == Label::Inlier(component as u32)).collect()
    }

    pub fn outlier_count(&self) -> usize {
        self.labels.iter().filter(|l| !l.is_inlier()).count()
    }

    /// Checks label bookkeeping against the model's counting rules.
    pub fn audit(&self) -> Result<()> {
        let m = self.points.len();
        if self.labels.len() != m || self.spec.m != m {
            return Err(Error::BadCounts(format!(
                "{} points, {} labels, spec m = {}",
                m,
                self.labels.len(),
                self.spec.m
            )));
        }
        if self.truth.len() != self.counts.len() {
            return Err(Error::BadCounts("truth and counts differ in length".into()));
        }
        for (p, c) in self.counts.iter().enumerate() {
            let seen = self.labels.iter().filter(|l| **l == Label::Inlier(p as u32)).count();
            if c.replaced > c.drawn || seen != c.surviving() {
                return Err(Error::BadCounts(format!(
                    "component {p}: {seen} inlier labels but n = {}, l = {}",
                    c.drawn, c.replaced
                )));
            }
        }
        if self.labels.iter().any(|l| matches!(l, Label::Inlier(p) if *p as usize >= self.counts.len())) {
            return Err(Error::BadCounts("inlier label names an unknown component".into()));
        }
        let total_replaced: usize = self.counts.iter().map(|c| c.replaced).sum();
        let alpha = self.spec.alpha;
        let eps = self.spec.epsilon;
        match self.spec.model {
            CorruptionModel::ListDecoding => {
                let c = self.counts.first().ok_or_else(|| Error::BadCounts("no component".into()))?;
                if self.counts.len() != 1 {
                    return Err(Error::BadCounts("list model has exactly one inlier component".into()));
                }
                if (c.drawn as f64) < alpha * m as f64 || c.drawn > m {
                    return Err(Error::BadCounts(format!("n = {} violates alpha m <= n <= m", c.drawn)));
                }
                if c.replaced as f64 > eps * c.drawn as f64 {
                    return Err(Error::BadCounts(format!("l = {} exceeds eps n", c.replaced)));
                }
            }
            CorruptionModel::GmmContamination => {
                let drawn: usize = self.counts.iter().map(|c| c.drawn).sum();
                if drawn != m {
                    return Err(Error::BadCounts(format!("components drew {drawn} of {m} points")));
                }
                if total_replaced as f64 > eps * alpha * m as f64 {
                    return Err(Error::BadCounts(format!("{total_replaced} replacements exceed eps alpha m")));
                }
            }
        }
        Ok(())
    }
}

fn assemble(
    clean: &Points,
    component_of: &[usize],
    replaced: &[usize],
    outliers: Vec<adversary::OutlierPoint>,
    shuffle_seed: u64,
) -> (Points, Vec<Label>) {
    let d = clean.dim();
    let mut is_replaced = vec![false; clean.len()];
    for &i in replaced {
        is_replaced[i] = true;
    }
    let mut rows: Vec<(Vec<f64>, Label)> = Vec::with_capacity(clean.len() - replaced.len() + outliers.len());
    for (i, x) in clean.rows().enumerate() {
        if !is_replaced[i] {
            rows.push((x.to_vec(), Label::Inlier(component_of[i] as u32)));
        }
    }
    rows.extend(outliers.into_iter().map(|(x, g)| (x, Label::Outlier(g))));
    rows.shuffle(&mut rng_from_seed(shuffle_seed));
    let mut points = Points::with_capacity(d, rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (x, l) in rows {
        points.push(&x);
        labels.push(l);
    }
    (points, labels)
}

fn check_outliers(outliers: &[adversary::OutlierPoint], dim: usize, count: usize) -> Result<()> {
    if outliers.len() != count {
        return Err(Error::BadCounts(format!("adversary produced {} of {count} outliers", outliers.len())));
    }
    for (x, _) in outliers {
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("adversary output"));
        }
    }
    Ok(())
}

/// Applies the list-decoding corruption to a clean inlier sample drawn from `truth`.
///
/// Replaces `ℓ = ⌊ε n⌋` inliers and adds `m − n` further outliers.
pub fn corrupt_list_model(inliers: &Points, truth: &GaussianParams, spec: &CorruptionSpec, seed: u64) -> Result<Dataset> {
    if spec.model != CorruptionModel::ListDecoding {
        return Err(Error::InvalidConfig("corrupt_list_model needs the list_decoding model".into()));
    }
    spec.validate()?;
    truth.validate()?;
    let n = inliers.len();
    let m = spec.m;
    if inliers.dim() != truth.dim() {
        return Err(Error::DimensionMismatch { expected: truth.dim(), got: inliers.dim() });
    }
    if (n as f64) < spec.alpha * m as f64 || n > m {
        return Err(Error::BadCounts(format!("n = {n} must satisfy alpha m <= n <= m (alpha = {}, m = {m})", spec.alpha)));
    }
    if spec.n.is_some_and(|sn| sn != n) {
        return Err(Error::BadCounts(format!("spec n = {:?} but {n} inliers given", spec.n)));
    }
    let adversary = spec.adversary.build(truth.dim())?;
    let replaced_count = (spec.epsilon * n as f64).floor() as usize;
    let component_of = vec![0usize; n];
    let truth_list = [truth.clone()];
    let ctx = AdversaryContext { clean: inliers, component_of: &component_of, truth: &truth_list, reference: truth };
    let mut rng = rng_from_seed(derive_seed(seed, 1));
    let replaced = adversary.choose_replaced(&ctx, replaced_count, &mut rng);
    let outlier_count = replaced_count + (m - n);
    let outliers = adversary.generate(&ctx, outlier_count, &mut rng)?;
    check_outliers(&outliers, truth.dim(), outlier_count)?;
    let (points, labels) = assemble(inliers, &component_of, &replaced, outliers, derive_seed(seed, 2));
    let mut spec = spec.clone();
    spec.n = Some(n);
    Dataset::new(
        points,
        labels,
        vec![Component { weight: 1.0, params: truth.clone() }],
        vec![ComponentCounts { drawn: n, replaced: replaced.len() }],
        spec,
        seed,
    )
}

/// Draws inliers from `truth` and corrupts them; the usual entry point for the list model.
pub fn generate_list_dataset(truth: &GaussianParams, spec: &CorruptionSpec, seed: u64) -> Result<Dataset> {
    let n = spec.inlier_count();
    let inliers = sample_gaussian(truth, n, derive_seed(seed, 0))?;
    corrupt_list_model(&inliers, truth, spec, seed)
}

/// Draws `m` mixture samples and lets the adversary replace `⌊ε α m⌋` of them.
pub fn corrupt_gmm_model(components: &[(f64, GaussianParams)], spec: &CorruptionSpec, seed: u64) -> Result<Dataset> {
    if spec.model != CorruptionModel::GmmContamination {
        return Err(Error::InvalidConfig("corrupt_gmm_model needs the gmm_contamination model".into()));
    }
    spec.validate()?;
    if components.is_empty() {
        return Err(Error::BadWeights("no components".into()));
    }
    let d = components[0].1.dim();
    for (w, g) in components {
        g.validate()?;
        if g.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: g.dim() });
        }
        if !(w.is_finite() && *w >= spec.alpha) {
            return Err(Error::BadWeights(format!("weight {w} below alpha = {}", spec.alpha)));
        }
    }
    let total: f64 = components.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::BadWeights(format!("weights sum to {total}")));
    }
    let adversary = spec.adversary.build(d)?;
    let m = spec.m;

    let mut assign_rng = rng_from_seed(derive_seed(seed, 0));
    let component_of: Vec<usize> = (0..m)
        .map(|_| {
            let u: f64 = assign_rng.random();
            let mut acc = 0.0;
            for (p, (w, _)) in components.iter().enumerate() {
                acc += w;
                if u < acc {
                    return p;
                }
            }
            components.len() - 1
        })
        .collect();
    let mut drawn = vec![0usize; components.len()];
    for &p in &component_of {
        drawn[p] += 1;
    }
    let samples = components
        .iter()
        .enumerate()
        .map(|(p, (_, g))| sample_gaussian(g, drawn[p], derive_seed(derive_seed(seed, 3), p as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut cursor = vec![0usize; components.len()];
    let mut clean = Points::with_capacity(d, m);
    for &p in &component_of {
        clean.push(samples[p].row(cursor[p]));
        cursor[p] += 1;
    }

    let truth: Vec<GaussianParams> = components.iter().map(|(_, g)| g.clone()).collect();
    let reference = mixture_moments(components);
    let ctx = AdversaryContext { clean: &clean, component_of: &component_of, truth: &truth, reference: &reference };
    let budget = (spec.epsilon * spec.alpha * m as f64).floor() as usize;
    let mut rng = rng_from_seed(derive_seed(seed, 1));
    let replaced = adversary.choose_replaced(&ctx, budget, &mut rng);
    let outliers = adversary.generate(&ctx, replaced.len(), &mut rng)?;
    check_outliers(&outliers, d, replaced.len())?;
    let mut counts: Vec<ComponentCounts> = drawn.iter().map(|&n| ComponentCounts { drawn: n, replaced: 0 }).collect();
    for &i in &replaced {
        counts[component_of[i]].replaced += 1;
    }
    let (points, labels) = assemble(&clean, &component_of, &replaced, outliers, derive_seed(seed, 2));
    Dataset::new(
        points,
        labels,
        components.iter().map(|(w, g)| Component { weight: *w, params: g.clone() }).collect(),
        counts,
        spec.clone(),
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matlin::{op_norm, second_moment};

    fn std2() -> GaussianParams {
        GaussianParams::standard(2)
    }

    #[test]
    fn zero_covariance_gives_copies_of_mean() {
        let g = GaussianParams::new(vec![3.0, 3.0], SymMatrix::zeros(2)).unwrap();
        let p = sample_gaussian(&g, 5, 1).unwrap();
        assert_eq!(p.len(), 5);
        assert!(p.rows().all(|r| r == [3.0, 3.0]));
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_gaussian(&std2(), 50, 9).unwrap();
        let b = sample_gaussian(&std2(), 50, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_gaussian(&std2(), 50, 10).unwrap());
    }

    #[test]
    fn sample_covariance_concentrates() {
        let p = sample_gaussian(&std2(), 100_000, 123).unwrap();
        // Mean is ~0 so the second moment is the covariance up to O(1/n);
        // entry sd is at most sqrt(2/n) ≈ 0.0045, 5σ ≈ 0.022.
        let h = second_moment(&p).unwrap();
        assert!(h.max_abs_diff(&SymMatrix::identity(2)) < 0.05);
    }

    #[test]
    fn not_psd_covariance_is_rejected() {
        let g = GaussianParams { mean: vec![0.0, 0.0], covariance: SymMatrix::from_diag(&[1.0, -1.0]) };
        assert!(matches!(sample_gaussian(&g, 3, 0), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn list_model_without_corruption_is_identity() {
        let inliers = sample_gaussian(&std2(), 40, 1).unwrap();
        let spec = CorruptionSpec::list(0.5, 0.0, 40, 40, AdversarySpec::new("point-mass"));
        let ds = corrupt_list_model(&inliers, &std2(), &spec, 7).unwrap();
        assert!(ds.labels.iter().all(|l| *l == Label::Inlier(0)));
        assert_eq!(ds.counts[0], ComponentCounts { drawn: 40, replaced: 0 });
        let mut a: Vec<Vec<f64>> = ds.points().rows().map(|r| r.to_vec()).collect();
        let mut b: Vec<Vec<f64>> = inliers.rows().map(|r| r.to_vec()).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn list_model_counting() {
        let inliers = sample_gaussian(&std2(), 100, 1).unwrap();
        let spec = CorruptionSpec::list(0.5, 0.05, 200, 100, AdversarySpec::new("second-gaussian"));
        let ds = corrupt_list_model(&inliers, &std2(), &spec, 7).unwrap();
        let inl = ds.labels.iter().filter(|l| l.is_inlier()).count();
        assert_eq!(inl, 95);
        assert_eq!(ds.outlier_count(), 105);
        assert_eq!(ds.counts[0].replaced, 5);
    }

    #[test]
    fn list_model_rejects_too_few_inliers() {
        let inliers = sample_gaussian(&std2(), 10, 1).unwrap();
        let spec = CorruptionSpec::list(0.5, 0.0, 100, 10, AdversarySpec::new("point-mass"));
        assert!(matches!(corrupt_list_model(&inliers, &std2(), &spec, 0), Err(Error::BadCounts(_))));
    }

    #[test]
    fn unknown_adversary() {
        let spec = CorruptionSpec::list(0.5, 0.0, 10, 10, AdversarySpec::new("nope"));
        assert!(matches!(generate_list_dataset(&std2(), &spec, 0), Err(Error::UnknownAdversary(_))));
    }

    #[test]
    fn second_gaussian_outliers_are_large() {
        let g = GaussianParams::standard(3);
        let spec = CorruptionSpec::list(0.5, 0.0, 2000, 1000, AdversarySpec::new("second-gaussian").with_scalar("scale", 100.0));
        let ds = generate_list_dataset(&g, &spec, 3).unwrap();
        let pick = |inl: bool| {
            let idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i].is_inlier() == inl).collect();
            op_norm(&second_moment(&ds.points().select(&idx)).unwrap()).unwrap()
        };
        assert!(pick(false) > 50.0);
        assert!(pick(true) < 5.0);
    }

    #[test]
    fn registry_and_point_mass() {
        assert!(adversary_registry().contains(&"point-mass"));
        // m − n + ℓ = 37 with n = 40, ε = 0.1 (ℓ = 4), m = 73
        let spec = CorruptionSpec::list(0.5, 0.1, 73, 40, AdversarySpec::new("point-mass"));
        let ds = generate_list_dataset(&std2(), &spec, 5).unwrap();
        let outl: Vec<usize> = (0..ds.len()).filter(|&i| !ds.labels[i].is_inlier()).collect();
        assert_eq!(outl.len(), 37);
        assert!(outl.iter().all(|&i| ds.points().row(i) == [0.0, 0.0]));
    }

    #[test]
    fn mixture_of_k_groups_are_balanced() {
        let spec = CorruptionSpec::list(0.25, 0.0, 400, 100, AdversarySpec::new("mixture-of-k").with_scalar("k", 3.0));
        let ds = generate_list_dataset(&std2(), &spec, 5).unwrap();
        let mut groups = [0usize; 3];
        for l in &ds.labels {
            if let Label::Outlier(g) = l {
                groups[*g as usize] += 1;
            }
        }
        assert_eq!(groups.iter().sum::<usize>(), 300);
        let (lo, hi) = (groups.iter().min().unwrap(), groups.iter().max().unwrap());
        assert!(hi - lo <= 1);
    }

    #[test]
    fn replace_extreme_removes_farthest() {
        let inliers = sample_gaussian(&std2(), 200, 1).unwrap();
        let spec = CorruptionSpec::list(0.5, 0.05, 200, 200, AdversarySpec::new("replace-extreme"));
        let ds = corrupt_list_model(&inliers, &std2(), &spec, 2).unwrap();
        let max_norm = |pts: &Points| pts.rows().map(|r| r[0] * r[0] + r[1] * r[1]).fold(0.0, f64::max);
        let kept: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i].is_inlier()).collect();
        let mut norms: Vec<f64> = inliers.rows().map(|r| r[0] * r[0] + r[1] * r[1]).collect();
        norms.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(max_norm(&ds.points().select(&kept)), norms[10]);
    }

    #[test]
    fn thin_direction_is_flat_somewhere() {
        let g = GaussianParams::standard(3);
        let spec = CorruptionSpec::list(0.5, 0.0, 2000, 1000, AdversarySpec::new("thin-direction").with_scalar("thinness", 1e-6));
        let ds = generate_list_dataset(&g, &spec, 8).unwrap();
        let outl: Vec<usize> = (0..ds.len()).filter(|&i| !ds.labels[i].is_inlier()).collect();
        let ev = second_moment(&ds.points().select(&outl)).unwrap().eigen().values;
        assert!(ev[2] < 1e-4 && ev[0] > 0.5);
    }

    #[test]
    fn gmm_counts_without_corruption() {
        let comps = vec![(0.5, std2()), (0.5, GaussianParams::isotropic(vec![0.0, 0.0], 100.0))];
        let spec = CorruptionSpec::gmm(0.5, 0.0, 1000, AdversarySpec::new("point-mass"));
        let ds = corrupt_gmm_model(&comps, &spec, 1).unwrap();
        assert_eq!(ds.counts[0].drawn + ds.counts[1].drawn, 1000);
        assert!(ds.counts.iter().all(|c| c.replaced == 0));
    }

    #[test]
    fn gmm_replacement_budget() {
        let comps = vec![(0.5, std2()), (0.5, GaussianParams::isotropic(vec![5.0, 0.0], 1.0))];
        let spec = CorruptionSpec::gmm(0.5, 0.04, 1000, AdversarySpec::new("replace-extreme"));
        let ds = corrupt_gmm_model(&comps, &spec, 1).unwrap();
        assert_eq!(ds.outlier_count(), 20);
        for (p, c) in ds.counts.iter().enumerate() {
            assert_eq!(ds.inlier_indices(p).len(), c.drawn - c.replaced);
        }
    }

    #[test]
    fn gmm_single_component_is_plain_sampling() {
        let spec = CorruptionSpec::gmm(1.0, 0.0, 500, AdversarySpec::new("point-mass"));
        let ds = corrupt_gmm_model(&[(1.0, std2())], &spec, 4).unwrap();
        assert!(ds.labels.iter().all(|l| *l == Label::Inlier(0)));
        assert_eq!(ds.counts[0].drawn, 500);
    }

    #[test]
    fn gmm_rejects_bad_weights() {
        let spec = CorruptionSpec::gmm(0.3, 0.0, 100, AdversarySpec::new("point-mass"));
        let comps = vec![(0.8, std2()), (0.2, std2())];
        assert!(matches!(corrupt_gmm_model(&comps, &spec, 0), Err(Error::BadWeights(_))));
        let comps = vec![(0.5, std2()), (0.4, std2())];
        assert!(matches!(corrupt_gmm_model(&comps, &spec, 0), Err(Error::BadWeights(_))));
    }

    #[test]
    fn label_text_round_trip() {
        for l in [Label::Inlier(0), Label::Inlier(7), Label::Outlier(2)] {
            assert_eq!(l.to_string().parse::<Label>().unwrap(), l);
        }
        assert!("bogus".parse::<Label>().is_err());
    }
}
