//! Outlier strategies. Every adversary sees the clean sample and the ground
//! truth, picks which inliers to replace, and produces the outlier points.
//! Strategies are deterministic functions of their inputs and the RNG stream.

use std::collections::BTreeMap;

use rand::seq::index::sample as sample_indices;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{sample_gaussian_with, GaussianParams};
use crate::error::{Error, Result};
use crate::matlin::{dot, psd_pseudo_factor, SymMatrix, DEFAULT_RANK_TOL_REL};
use crate::points::Points;
use crate::rng::Rng;

pub const SECOND_GAUSSIAN: &str = "second-gaussian";
pub const POINT_MASS: &str = "point-mass";
pub const THIN_DIRECTION: &str = "thin-direction";
pub const MIXTURE_OF_K: &str = "mixture-of-k";
pub const REPLACE_EXTREME: &str = "replace-extreme";

pub fn adversary_registry() -> Vec<&'static str> {
    vec![SECOND_GAUSSIAN, POINT_MASS, THIN_DIRECTION, MIXTURE_OF_K, REPLACE_EXTREME]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

/// Adversary identity plus its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySpec {
    pub id: String,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
}

impl AdversarySpec {
    pub fn new(id: &str) -> Self {
        Self { id: id.to_string(), params: BTreeMap::new() }
    }

    pub fn with_scalar(mut self, name: &str, v: f64) -> Self {
        self.params.insert(name.to_string(), ParamValue::Scalar(v));
        self
    }

    pub fn with_vector(mut self, name: &str, v: Vec<f64>) -> Self {
        self.params.insert(name.to_string(), ParamValue::Vector(v));
        self
    }

    fn scalar(&self, name: &str, default: f64) -> Result<f64> {
        match self.params.get(name) {
            None => Ok(default),
            Some(ParamValue::Scalar(v)) if v.is_finite() => Ok(*v),
            Some(_) => Err(bad(name, "expected a finite scalar")),
        }
    }

    fn vector(&self, name: &str, len: usize) -> Result<Option<Vec<f64>>> {
        match self.params.get(name) {
            None => Ok(None),
            Some(ParamValue::Vector(v)) if v.len() == len && v.iter().all(|x| x.is_finite()) => Ok(Some(v.clone())),
            Some(_) => Err(bad(name, &format!("expected a finite vector of length {len}"))),
        }
    }

    fn check_known(&self, allowed: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(bad(k, "unknown parameter")),
            None => Ok(()),
        }
    }

    /// Instantiates the strategy, validating parameters against the dimension.
    pub fn build(&self, dim: usize) -> Result<Box<dyn Adversary>> {
        match self.id.as_str() {
            SECOND_GAUSSIAN => {
                self.check_known(&["mean", "scale"])?;
                let scale = self.scalar("scale", 100.0)?;
                if scale < 0.0 {
                    return Err(bad("scale", "must be nonnegative"));
                }
                Ok(Box::new(SecondGaussian { mean: self.vector("mean", dim)?, scale }))
            }
            POINT_MASS => {
                self.check_known(&["location"])?;
                let location = self.vector("location", dim)?.unwrap_or_else(|| vec![0.0; dim]);
                Ok(Box::new(PointMass { location }))
            }
            THIN_DIRECTION => {
                self.check_known(&["thinness", "shift"])?;
                let thinness = self.scalar("thinness", 1e-3)?;
                if !(0.0..=1.0).contains(&thinness) {
                    return Err(bad("thinness", "must lie in [0, 1]"));
                }
                Ok(Box::new(ThinDirection { thinness, shift: self.scalar("shift", 0.0)? }))
            }
            MIXTURE_OF_K => {
                self.check_known(&["k", "scales", "mean_offset"])?;
                let k = self.scalar("k", 3.0)?;
                if k < 1.0 || k.fract() != 0.0 {
                    return Err(bad("k", "must be a positive integer"));
                }
                let k = k as usize;
                let scales = match self.vector("scales", k)? {
                    Some(s) if s.iter().all(|v| *v >= 0.0) => s,
                    Some(_) => return Err(bad("scales", "must be nonnegative")),
                    None => (0..k).map(|j| 100f64.powi(j as i32 + 1)).collect(),
                };
                Ok(Box::new(MixtureOfK { scales, mean_offset: self.scalar("mean_offset", 0.0)? }))
            }
            REPLACE_EXTREME => {
                self.check_known(&["scale"])?;
                Ok(Box::new(ReplaceExtreme { scale: self.scalar("scale", 10.0)? }))
            }
            other => Err(Error::UnknownAdversary(other.to_string())),
        }
    }
}

fn bad(name: &str, reason: &str) -> Error {
    Error::BadAdversaryParam { name: name.to_string(), reason: reason.to_string() }
}

/// What an adversary gets to look at.
pub struct AdversaryContext<'a> {
    /// Clean sample before any replacement.
    pub clean: &'a Points,
    /// Component of origin for each clean point.
    pub component_of: &'a [usize],
    pub truth: &'a [GaussianParams],
    /// Gaussian the outliers are placed relative to: the target distribution in
    /// the list model, the moment-matched mixture in the GMM model.
    pub reference: &'a GaussianParams,
}

/// One generated outlier and the outlier group it belongs to.
pub type OutlierPoint = (Vec<f64>, u32);

pub trait Adversary {
    fn id(&self) -> &'static str;

    /// Indices (into `ctx.clean`) of `count` distinct inliers to replace.
    fn choose_replaced(&self, ctx: &AdversaryContext<'_>, count: usize, rng: &mut Rng) -> Vec<usize> {
        let mut idx = sample_indices(rng, ctx.clean.len(), count).into_vec();
        idx.sort_unstable();
        idx
    }

    fn generate(&self, ctx: &AdversaryContext<'_>, count: usize, rng: &mut Rng) -> Result<Vec<OutlierPoint>>;
}

struct SecondGaussian {
    mean: Option<Vec<f64>>,
    scale: f64,
}

impl Adversary for SecondGaussian {
    fn id(&self) -> &'static str {
        SECOND_GAUSSIAN
    }

    fn generate(&self, ctx: &AdversaryContext<'_>, count: usize, rng: &mut Rng) -> Result<Vec<OutlierPoint>> {
        let d = ctx.reference.dim();
        let params = GaussianParams {
            mean: self.mean.clone().unwrap_or_else(|| ctx.reference.mean.clone()),
            covariance: SymMatrix::scaled_identity(d, self.scale),
        };
        Ok(tag(sample_gaussian_with(&params, count, rng)?, 0))
    }
}

struct PointMass {
    location: Vec<f64>,
}

impl Adversary for PointMass {
    fn id(&self) -> &'static str {
        POINT_MASS
    }

    fn generate(&self, _ctx: &AdversaryContext<'_>, count: usize, _rng: &mut Rng) -> Result<Vec<OutlierPoint>> {
        Ok(vec![(self.location.clone(), 0); count])
    }
}

/// Same covariance as the reference except nearly flat along a random direction.
struct ThinDirection {
    thinness: f64,
    shift: f64,
}

impl Adversary for ThinDirection {
    fn id(&self) -> &'static str {
        THIN_DIRECTION
    }

    fn generate(&self, ctx: &AdversaryContext<'_>, count: usize, rng: &mut Rng) -> Result<Vec<OutlierPoint>> {
        let d = ctx.reference.dim();
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let root = psd_pseudo_factor(&ctx.reference.covariance, DEFAULT_RANK_TOL_REL)?.sqrt();
        // Σ^{1/2} (I − (1 − t) v vᵀ) Σ^{1/2}
        let crush = SymMatrix::identity(d).sub(&SymMatrix::outer(&v).scale(1.0 - self.thinness));
        let covariance = root.sandwich(&crush);
        let offset = root.mul_vec(&v);
        let mean = ctx.reference.mean.iter().zip(&offset).map(|(m, o)| m + self.shift * o).collect();
        let params = GaussianParams { mean, covariance };
        Ok(tag(sample_gaussian_with(&params, count, rng)?, 0))
    }
}

/// Outliers split into `k` near-equal isotropic Gaussian groups.
struct MixtureOfK {
    scales: Vec<f64>,
    mean_offset: f64,
}

impl Adversary for MixtureOfK {
    fn id(&self) -> &'static str {
        MIXTURE_OF_K
    }

    fn generate(&self, ctx: &AdversaryContext<'_>, count: usize, rng: &mut Rng) -> Result<Vec<OutlierPoint>> {
        let d = ctx.reference.dim();
        let k = self.scales.len();
        let mut out = Vec::with_capacity(count);
        for (j, &scale) in self.scales.iter().enumerate() {
            let size = count / k + usize::from(j < count % k);
            let mut mean = ctx.reference.mean.clone();
            mean[j % d] += self.mean_offset * (j + 1) as f64;
            let params = GaussianParams { mean, covariance: SymMatrix::scaled_identity(d, scale) };
            out.extend(tag(sample_gaussian_with(&params, size, rng)?, j as u32));
        }
        Ok(out)
    }
}

/// Replaces the inliers farthest from their own mean (whitened norm) and puts
/// outliers on radial extensions of the most extreme inliers.
struct ReplaceExtreme {
    scale: f64,
}

impl ReplaceExtreme {
    fn by_whitened_norm(ctx: &AdversaryContext<'_>) -> Result<Vec<usize>> {
        let whiteners = ctx
            .truth
            .iter()
            .map(|g| psd_pseudo_factor(&g.covariance, DEFAULT_RANK_TOL_REL).map(|f| f.pinv))
            .collect::<Result<Vec<_>>>()?;
        let norms: Vec<f64> = ctx
            .clean
            .rows()
            .zip(ctx.component_of)
            .map(|(x, &p)| {
                let c: Vec<f64> = x.iter().zip(&ctx.truth[p].mean).map(|(a, b)| a - b).collect();
                whiteners[p].quad_form(&c)
            })
            .collect();
        let mut order: Vec<usize> = (0..ctx.clean.len()).collect();
        order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
        Ok(order)
    }
}

impl Adversary for ReplaceExtreme {
    fn id(&self) -> &'static str {
        REPLACE_EXTREME
    }

    fn choose_replaced(&self, ctx: &AdversaryContext<'_>, count: usize, _rng: &mut Rng) -> Vec<usize> {
        let mut idx: Vec<usize> = Self::by_whitened_norm(ctx).expect("truth validated by caller").into_iter().take(count).collect();
        idx.sort_unstable();
        idx
    }

    fn generate(&self, ctx: &AdversaryContext<'_>, count: usize, _rng: &mut Rng) -> Result<Vec<OutlierPoint>> {
        let order = Self::by_whitened_norm(ctx)?;
        if order.is_empty() {
            return Err(Error::Empty("replace-extreme needs inliers"));
        }
        Ok((0..count)
            .map(|i| {
                let src = ctx.clean.row(order[i % order.len()]);
                let x = src
                    .iter()
                    .zip(&ctx.reference.mean)
                    .map(|(x, m)| m + self.scale * (x - m))
                    .collect();
                (x, 0)
            })
            .collect())
    }
}

fn tag(points: Points, group: u32) -> Vec<OutlierPoint> {
    points.rows().map(|r| (r.to_vec(), group)).collect()
}
