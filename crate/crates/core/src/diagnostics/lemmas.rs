use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::datagen::{sample_gaussian, GaussianParams};
use crate::error::{Error, Result};
use crate::estimator::{effective_constants, project, quantile_rank, score_stats, EstimatorConfig};
use crate::matlin::{fro_norm, lifted_top_eig, op_norm, psd_pseudo_factor, second_moment, SymMatrix, DEFAULT_RANK_TOL_REL};
use crate::points::Points;

/// Relative slack for exact inequalities.
pub const EXACT_SLACK: f64 = 1e-6;
/// Multiplier on `5/√n_mc` in the Monte Carlo slack.
pub const MC_SAFETY: f64 = 20.0;
/// Smallest Monte Carlo sample size accepted.
pub const MIN_MC_SAMPLES: usize = 10_000;

const CERT_EIG_ITERS: usize = 20_000;
const CERT_EIG_TOL: f64 = 1e-12;
const CERT_EIG_SEED: u64 = 0x5eed;
const KERNEL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl CheckResult {
    /// `lhs ≤ rhs·(1 + slack)`, with a tiny absolute floor of `scale·1e-12` for
    /// comparisons where both sides are rounding noise around zero.
    fn exact(lhs: f64, rhs: f64, scale: f64) -> Self {
        let holds = lhs <= rhs * (1.0 + EXACT_SLACK) + 1e-12 * scale.max(1.0);
        Self { lhs, rhs, holds }
    }
}

fn population_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

fn normalized(points: &Points, sqrt_pinv: &SymMatrix) -> Points {
    let mut out = Points::with_capacity(points.dim(), points.len());
    for x in points.rows() {
        out.push(&sqrt_pinv.mul_vec(x));
    }
    out
}

/// Certificate inequality for a subset `T′` of a set `T` holding at least an
/// `α/2` fraction: with `P = H^{†/2}`,
/// `‖Cov_{T′}[Px] − E_T[Pxxᵀ P]‖_F² ≤ (4/α)·Var_T[xᵀPAPx] + (8/α²)·‖E_T[PxxᵀP]‖_op²`.
pub fn check_certificate_inequality(points: &Points, subset: &[usize], alpha: f64) -> Result<CheckResult> {
    if points.is_empty() {
        return Err(Error::Empty("certificate check needs points"));
    }
    let need = (alpha / 2.0 * points.len() as f64).ceil() as usize;
    if subset.len() < need.max(1) {
        return Err(Error::SubsetTooSmall { got: subset.len(), need: need.max(1) });
    }
    if let Some(&bad) = subset.iter().find(|&&i| i >= points.len()) {
        return Err(Error::IndexOutOfRange { index: bad, len: points.len() });
    }
    let d = points.dim();
    let h = second_moment(points)?;
    let fac = psd_pseudo_factor(&h, DEFAULT_RANK_TOL_REL)?;
    let tilde = normalized(points, &fac.sqrt_pinv);
    let target = second_moment(&tilde)?;

    let sub = tilde.select(subset);
    let mut mean = vec![0.0; d];
    for x in sub.rows() {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= sub.len() as f64);
    let cov = second_moment(&sub)?.sub(&SymMatrix::outer(&mean));
    let lhs = fro_norm(&cov.sub(&target))?.powi(2);

    let var = if fac.rank == 0 {
        0.0
    } else {
        let eig = lifted_top_eig(&tilde, CERT_EIG_SEED, CERT_EIG_ITERS, CERT_EIG_TOL)?;
        population_variance(&tilde.rows().map(|x| eig.matrix_a.quad_form(x)).collect::<Vec<_>>())
    };
    let rhs = 4.0 / alpha * var + 8.0 / (alpha * alpha) * op_norm(&target)?.powi(2);
    Ok(CheckResult::exact(lhs, rhs, 0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadVarianceCheck {
    pub mc_variance: f64,
    /// `4‖Σ^{1/2}AΣ^{1/2}‖_F² + 8‖Σ^{1/2}Aμ‖²`.
    pub bound: f64,
    /// Gaussian closed form `2‖Σ^{1/2}AΣ^{1/2}‖_F² + 4‖Σ^{1/2}Aμ‖²`.
    pub exact_variance: f64,
    pub holds: bool,
}

/// Monte Carlo check of the variance bound for `XᵀAX`, `X ~ N(μ, Σ)`.
pub fn check_gaussian_quadratic_variance(
    params: &GaussianParams,
    a: &SymMatrix,
    n_mc: usize,
    seed: u64,
) -> Result<QuadVarianceCheck> {
    if n_mc < MIN_MC_SAMPLES {
        return Err(Error::PremiseViolated(format!("n_mc = {n_mc} < {MIN_MC_SAMPLES}")));
    }
    if a.dim() != params.dim() {
        return Err(Error::DimensionMismatch { expected: params.dim(), got: a.dim() });
    }
    let root = psd_pseudo_factor(&params.covariance, DEFAULT_RANK_TOL_REL)?.sqrt();
    let frob = fro_norm(&root.sandwich(a))?.powi(2);
    let lin: f64 = root.mul_vec(&a.mul_vec(&params.mean)).iter().map(|v| v * v).sum();
    let bound = 4.0 * frob + 8.0 * lin;
    let exact_variance = 2.0 * frob + 4.0 * lin;

    let xs = sample_gaussian(params, n_mc, seed)?;
    let q: Vec<f64> = xs.rows().map(|x| a.quad_form(x)).collect();
    let mean = q.iter().sum::<f64>() / n_mc as f64;
    let mc_variance = q.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n_mc - 1) as f64;
    // Rounding floor for the degenerate case where XᵀAX is constant.
    let floor = (1e-10 * (1.0 + mean.abs())).powi(2);
    let holds = mc_variance <= bound * (1.0 + 5.0 / (n_mc as f64).sqrt() * MC_SAFETY) + floor;
    Ok(QuadVarianceCheck { mc_variance, bound, exact_variance, holds })
}

/// `‖ABA − Π_B‖_F ≤ 2‖ABA − Π_A‖_F` for PSD `A`, `B` with `ker A ⊆ ker B`.
/// `lhs` and `rhs` are the two norms; `holds` compares `lhs` with `2·rhs`.
pub fn check_sigma_guarantee(a: &SymMatrix, b: &SymMatrix) -> Result<CheckResult> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let pa = psd_pseudo_factor(a, DEFAULT_RANK_TOL_REL)?.proj;
    let pb = psd_pseudo_factor(b, DEFAULT_RANK_TOL_REL)?.proj;
    // range(B) ⊆ range(A) ⇔ Π_A Π_B Π_A = Π_B.
    if fro_norm(&pa.sandwich(&pb).sub(&pb))? > KERNEL_TOL {
        return Err(Error::KernelNotNested);
    }
    let aba = a.sandwich(b);
    let lhs = fro_norm(&aba.sub(&pb))?;
    let rhs = fro_norm(&aba.sub(&pa))?;
    let scale = fro_norm(&aba)? + (a.dim() as f64).sqrt();
    let mut res = CheckResult::exact(lhs, 2.0 * rhs, scale);
    res.rhs = rhs;
    Ok(res)
}

fn require_pd(m: &SymMatrix) -> Result<crate::matlin::PsdFactorization> {
    let fac = psd_pseudo_factor(m, DEFAULT_RANK_TOL_REL).map_err(|e| match e {
        Error::NotPsd { min_eig, .. } => Error::NotPositiveDefinite { min_eig },
        other => other,
    })?;
    if fac.rank < m.dim() || m.dim() == 0 {
        return Err(Error::NotPositiveDefinite { min_eig: fac.eigvals.last().copied().unwrap_or(0.0) });
    }
    Ok(fac)
}

/// If `Σ₁`, `Σ₂` are both within `ρ` of `H` in relative Frobenius norm, then
/// `‖Σ^{−1/2}(Σ₁ − Σ₂)Σ^{−1/2}‖_F ≤ 5ρ·max_i ‖Σ^{−1/2}Σ_iΣ^{−1/2}‖_op`.
pub fn check_closeness_norm(
    sigma1: &SymMatrix,
    sigma2: &SymMatrix,
    h: &SymMatrix,
    sigma: &SymMatrix,
    rho: f64,
) -> Result<CheckResult> {
    let d = h.dim();
    for m in [sigma1, sigma2, sigma] {
        if m.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: m.dim() });
        }
    }
    for m in [sigma1, sigma2, h, sigma] {
        require_pd(m)?;
    }
    let h_isqrt = require_pd(h)?.sqrt_pinv;
    let id = SymMatrix::identity(d);
    for (i, s) in [sigma1, sigma2].into_iter().enumerate() {
        let dev = fro_norm(&id.sub(&h_isqrt.sandwich(s)))?;
        if dev > rho * (1.0 + EXACT_SLACK) {
            return Err(Error::PremiseViolated(format!("‖I − H^(-1/2) Σ{} H^(-1/2)‖_F = {dev} > rho = {rho}", i + 1)));
        }
    }
    let w = require_pd(sigma)?.sqrt_pinv;
    let lhs = fro_norm(&w.sandwich(&sigma1.sub(sigma2)))?;
    let rhs = 5.0 * rho * op_norm(&w.sandwich(sigma1))?.max(op_norm(&w.sandwich(sigma2))?);
    Ok(CheckResult::exact(lhs, rhs, 0.0))
}

/// Subspace `L` along which `G†` and `B` are close, with the three checked
/// properties of the construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffFrobWitness {
    pub l: SymMatrix,
    /// Nonzero singular directions of `G` left out of `L`.
    pub rank_defect: usize,
    /// `Δ` is a 0/1 diagonal supported on the nonzero singular values.
    pub binary_and_dominated: bool,
    /// `‖ΛΛ† − Δ‖_F` against `2ρ`.
    pub projection_gap: CheckResult,
    /// `‖L(RRᵀ − B)Lᵀ‖_F` against `2ρ‖B‖_op`, `R = G†`.
    pub restricted_gap: CheckResult,
}

impl DiffFrobWitness {
    pub fn holds(&self) -> bool {
        self.binary_and_dominated && self.projection_gap.holds && self.restricted_gap.holds
    }
}

fn sym(m: &DMatrix<f64>) -> Result<SymMatrix> {
    SymMatrix::from_dmatrix(&((m + m.transpose()) * 0.5))
}

/// Builds `L = VΔVᵀ` from the SVD `G = UΛVᵀ`, keeping index `i` when
/// `λ_i > 0` and `λ_i²·(VᵀBV)_ii ≥ 1/2`.
pub fn diff_frob_witness(g: &DMatrix<f64>, b: &SymMatrix, rho: f64) -> Result<DiffFrobWitness> {
    let d = b.dim();
    if g.nrows() != d || g.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: g.nrows().max(g.ncols()) });
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("diff_frob_witness G"));
    }
    if !(rho >= 1.0) {
        return Err(Error::PremiseViolated(format!("rho = {rho} < 1")));
    }
    let svd = g.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v = svd.v_t.expect("right singular vectors requested").transpose();
    let lam = &svd.singular_values;
    let tol = DEFAULT_RANK_TOL_REL * lam.max();
    let positive: Vec<bool> = lam.iter().map(|&l| l > tol && l > 0.0).collect();

    let mut pi_g = DMatrix::zeros(d, d);
    for i in (0..d).filter(|&i| positive[i]) {
        let c = u.column(i);
        pi_g += c * c.transpose();
    }
    let bm = b.to_dmatrix();
    let premise = fro_norm(&sym(&(&pi_g - g * &bm * g.transpose()))?)?;
    if premise > rho * (1.0 + EXACT_SLACK) {
        return Err(Error::PremiseViolated(format!("‖Π_G − G B Gᵀ‖_F = {premise} > rho = {rho}")));
    }

    let b_rot = v.transpose() * &bm * &v;
    let kept: Vec<bool> = (0..d).map(|i| positive[i] && lam[i] * lam[i] * b_rot[(i, i)] >= 0.5).collect();
    let rank_defect = (0..d).filter(|&i| positive[i] && !kept[i]).count();

    let mut l = DMatrix::zeros(d, d);
    let mut rrt = DMatrix::zeros(d, d);
    for i in 0..d {
        let c = v.column(i);
        if kept[i] {
            l += c * c.transpose();
        }
        if positive[i] {
            rrt += (c * c.transpose()) / (lam[i] * lam[i]);
        }
    }
    let binary_and_dominated = (0..d).all(|i| !kept[i] || positive[i]);
    let projection_gap = CheckResult::exact((rank_defect as f64).sqrt(), 2.0 * rho, 0.0);
    let gap = fro_norm(&sym(&(&l * (&rrt - &bm) * l.transpose()))?)?;
    let restricted_gap = CheckResult::exact(gap, 2.0 * rho * op_norm(b)?, 0.0);
    Ok(DiffFrobWitness { l: sym(&l)?, rank_defect, binary_and_dominated, projection_gap, restricted_gap })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterRatioReport {
    /// `Σ_T f / Σ_{S∩T} f`.
    pub ratio: f64,
    /// `(40/ε₀)/α³`.
    pub required: f64,
    pub spread: f64,
    pub mean_f: f64,
    pub r_eff: f64,
    pub threshold_eff: f64,
    /// Quantile gap within `R_eff` and mean score above the threshold.
    pub preconditions_met: bool,
    pub holds: bool,
}

/// Score mass of the whole set against that of its inliers, for one estimator
/// loop run on `points` with the constants of `config`.
pub fn check_filter_ratio(points: &Points, inlier: &[bool], config: &EstimatorConfig, seed: u64) -> Result<FilterRatioReport> {
    config.validate()?;
    if inlier.len() != points.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), got: inlier.len() });
    }
    let consts = effective_constants(config, points.len());
    let proj = project(points, config, seed)?;
    let stats = score_stats(&proj.values, quantile_rank(config.alpha, points.len()))?;
    let f: Vec<f64> = proj.values.iter().map(|v| (v - stats.median).powi(2)).collect();
    let total: f64 = f.iter().sum();
    let clean: f64 = f.iter().zip(inlier).filter(|(_, &k)| k).map(|(v, _)| v).sum();
    let ratio = if clean > 0.0 { total / clean } else { f64::INFINITY };
    let required = 40.0 / config.eps0 / config.alpha.powi(3);
    let preconditions_met = stats.spread() <= consts.r_eff && stats.mean_f > consts.threshold_eff;
    Ok(FilterRatioReport {
        ratio,
        required,
        spread: stats.spread(),
        mean_f: stats.mean_f,
        r_eff: consts.r_eff,
        threshold_eff: consts.threshold_eff,
        preconditions_met,
        holds: ratio > required,
    })
}
