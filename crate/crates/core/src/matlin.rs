//! Dense symmetric linear algebra: PSD pseudo-inverse square roots, range
//! projections, norms, and the matrix-free power iteration over the lifted
//! `d² x d²` covariance of `x xᵀ`.
//!
//! Dimensions are small (`d ≤ 100` at desk scale), so pseudo-inverses and
//! operator norms go through a full symmetric eigendecomposition. The lifted
//! problem is the exception: it is never materialized, each power step costs
//! `O(n d²)` on a `d x d` workspace.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::Points;
use crate::rng::rng_from_seed;

/// Relative rank tolerance used when callers have no better information.
pub const DEFAULT_RANK_TOL_REL: f64 = 1e-8;

/// Successive Rayleigh quotients closer than this (relative) stop the power iteration.
pub const DEFAULT_LIFTED_REL_TOL: f64 = 1e-6;

/// Dense symmetric `d x d` matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymMatrixRepr", into = "SymMatrixRepr")]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SymMatrixRepr {
    dim: usize,
    entries: Vec<f64>,
}

impl TryFrom<SymMatrixRepr> for SymMatrix {
    type Error = Error;
    fn try_from(r: SymMatrixRepr) -> Result<Self> {
        SymMatrix::new(r.dim, r.entries)
    }
}

impl From<SymMatrix> for SymMatrixRepr {
    fn from(m: SymMatrix) -> Self {
        SymMatrixRepr { dim: m.dim, entries: m.data }
    }
}

impl SymMatrix {
    /// Builds a symmetric matrix from row-major entries, replacing them by `(M + Mᵀ)/2`.
    pub fn new(dim: usize, mut data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty("matrix dimension"));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: data.len() });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                data[i * dim + j] = avg;
                data[j * dim + i] = avg;
            }
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = s;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = v;
        }
        m
    }

    /// `v vᵀ`.
    pub fn outer(v: &[f64]) -> Self {
        let d = v.len();
        let mut m = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m.data[i * d + j] = v[i] * v[j];
            }
        }
        m
    }

    /// Symmetrizes a general nalgebra matrix.
    pub fn from_dmatrix(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        let d = m.nrows();
        let mut data = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                data.push(m[(i, j)]);
            }
        }
        Self::new(d, data)
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self { dim: self.dim, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self { dim: self.dim, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    /// Frobenius inner product `⟨self, other⟩`.
    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d).map(|i| dot(&self.data[i * d..(i + 1) * d], x)).collect()
    }

    /// `xᵀ M x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        quad_form_raw(&self.data, self.dim, x)
    }

    /// `self · inner · self`, symmetric whenever both factors are.
    pub fn sandwich(&self, inner: &Self) -> Self {
        let a = self.to_dmatrix();
        let b = inner.to_dmatrix();
        Self::from_dmatrix(&(&a * &b * &a)).expect("product of finite matrices is finite")
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn eigen(&self) -> SymEigen {
        SymEigen::of(self)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn quad_form_raw(m: &[f64], d: usize, x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..d {
        let row = &m[i * d..(i + 1) * d];
        acc += x[i] * dot(row, x);
    }
    acc
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending; `vectors` holds them as columns.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    pub fn of(m: &SymMatrix) -> Self {
        let eig = SymmetricEigen::new(m.to_dmatrix());
        let d = m.dim();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = DMatrix::zeros(d, d);
        for (k, &i) in order.iter().enumerate() {
            vectors.set_column(k, &eig.eigenvectors.column(i));
        }
        Self { values, vectors }
    }

    /// `Σ_k g(λ_k) v_k v_kᵀ` over the eigenpairs where `g` returns `Some`.
    pub fn spectral_map(&self, g: impl Fn(f64) -> Option<f64>) -> SymMatrix {
        let d = self.values.len();
        let mut out = DMatrix::zeros(d, d);
        for (k, &lam) in self.values.iter().enumerate() {
            if let Some(w) = g(lam) {
                let v = self.vectors.column(k);
                out += w * v * v.transpose();
            }
        }
        SymMatrix::from_dmatrix(&out).expect("spectral map of finite eigenpairs")
    }
}

pub fn fro_norm(m: &SymMatrix) -> Result<f64> {
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fro_norm"));
    }
    Ok(m.data.iter().map(|v| v * v).sum::<f64>().sqrt())
}

pub fn op_norm(m: &SymMatrix) -> Result<f64> {
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("op_norm"));
    }
    Ok(m.eigen().values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
}

/// Uncentered second moment `(1/n) Σ x xᵀ`, accumulated in index order.
pub fn second_moment(points: &Points) -> Result<SymMatrix> {
    let n = points.len();
    if n == 0 {
        return Err(Error::Empty("second_moment"));
    }
    let d = points.dim();
    let mut acc = vec![0.0; d * d];
    for x in points.rows() {
        for i in 0..d {
            let xi = x[i];
            let row = &mut acc[i * d..(i + 1) * d];
            for j in i..d {
                row[j] += xi * x[j];
            }
        }
    }
    let inv = 1.0 / n as f64;
    for i in 0..d {
        for j in i..d {
            let v = acc[i * d + j] * inv;
            acc[i * d + j] = v;
            acc[j * d + i] = v;
        }
    }
    if acc.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("second_moment"));
    }
    Ok(SymMatrix { dim: d, data: acc })
}

/// Pseudo-inverse, pseudo-inverse square root and range projection of a PSD matrix.
#[derive(Clone, Debug)]
pub struct PsdFactorization {
    pub source: SymMatrix,
    pub rank: usize,
    /// `M^{†/2}`.
    pub sqrt_pinv: SymMatrix,
    /// `M^†`.
    pub pinv: SymMatrix,
    /// Orthogonal projection onto the range of `M`.
    pub proj: SymMatrix,
    /// Eigenvalues of `M`, descending, with clamped ones reported as zero.
    pub eigvals: Vec<f64>,
    /// Absolute cutoff: eigenvalues at or below it are treated as zero.
    pub rank_tol: f64,
    eig: SymEigen,
}

impl PsdFactorization {
    /// PSD square root `M^{1/2}` restricted to the retained eigenpairs.
    pub fn sqrt(&self) -> SymMatrix {
        let tol = self.rank_tol;
        self.eig.spectral_map(|l| (l > tol).then(|| l.sqrt()))
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eig.vectors
    }
}

/// Eigendecomposes `m`, zeroes eigenvalues `≤ rank_tol_rel · λ_max` and builds
/// `M^†`, `M^{†/2}` and the range projection from what remains.
pub fn psd_pseudo_factor(m: &SymMatrix, rank_tol_rel: f64) -> Result<PsdFactorization> {
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("psd_pseudo_factor"));
    }
    let eig = m.eigen();
    let max_eig = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let tol = rank_tol_rel * max_eig;
    let min_eig = eig.values.last().copied().unwrap_or(0.0);
    if min_eig < -tol {
        return Err(Error::NotPsd { min_eig, max_eig });
    }
    let keep = |l: f64| l > tol && l > 0.0;
    let rank = eig.values.iter().filter(|&&l| keep(l)).count();
    let sqrt_pinv = eig.spectral_map(|l| keep(l).then(|| 1.0 / l.sqrt()));
    let pinv = eig.spectral_map(|l| keep(l).then(|| 1.0 / l));
    let proj = eig.spectral_map(|l| keep(l).then_some(1.0));
    let eigvals = eig.values.iter().map(|&l| if keep(l) { l } else { 0.0 }).collect();
    Ok(PsdFactorization {
        source: m.clone(),
        rank,
        sqrt_pinv,
        pinv,
        proj,
        eigvals,
        rank_tol: tol,
        eig,
    })
}

/// Reshaped top eigenvector of the lifted covariance.
#[derive(Clone, Debug, Serialize)]
pub struct LiftedEigResult {
    /// Symmetric, unit Frobenius norm.
    pub matrix_a: SymMatrix,
    /// Rayleigh quotient of `matrix_a` under `Cov[x xᵀ]`.
    pub eigenvalue: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Implicit operator `V ↦ Cov_{x}[x xᵀ] V` over a fixed point set.
struct LiftedCovariance<'a> {
    points: &'a Points,
    mean_lift: Vec<f64>,
    /// `(1/n) Σ ‖x xᵀ − M‖_F²`, the trace of the lifted covariance.
    trace: f64,
    /// `(1/n) Σ ‖x‖⁴`, for scale-relative degeneracy checks.
    scale: f64,
    /// Upper triangles of `x xᵀ`, one packed row per point, when they fit in
    /// [`LIFT_CACHE_ENTRIES`].
    packed: Option<Vec<f64>>,
}

/// Largest `m · d(d+1)/2` for which the packed lifts are kept in memory.
const LIFT_CACHE_ENTRIES: usize = 1 << 24;

fn packed_len(d: usize) -> usize {
    d * (d + 1) / 2
}

impl<'a> LiftedCovariance<'a> {
    fn new(points: &'a Points) -> Result<Self> {
        let mean_lift = second_moment(points)?.data;
        let d = points.dim();
        let n = points.len() as f64;
        let mut trace = 0.0;
        let mut scale = 0.0;
        for x in points.rows() {
            let mut dev = 0.0;
            for i in 0..d {
                for j in 0..d {
                    let e = x[i] * x[j] - mean_lift[i * d + j];
                    dev += e * e;
                }
            }
            trace += dev;
            let sq = dot(x, x);
            scale += sq * sq;
        }
        trace /= n;
        scale /= n;
        if !trace.is_finite() || !scale.is_finite() {
            return Err(Error::NonFinite("lifted covariance"));
        }
        let np = packed_len(d);
        let packed = (points.len().saturating_mul(np) <= LIFT_CACHE_ENTRIES).then(|| {
            let mut z = Vec::with_capacity(points.len() * np);
            for x in points.rows() {
                for i in 0..d {
                    z.extend(x[i..].iter().map(|&xj| x[i] * xj));
                }
            }
            z
        });
        Ok(Self { points, mean_lift, trace, scale, packed })
    }

    fn dim(&self) -> usize {
        self.points.dim()
    }

    /// `W = (1/n) Σ (⟨x xᵀ, V⟩ − ⟨M, V⟩)(x xᵀ − M)` for symmetric `V`.
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let mv = dot(&self.mean_lift, v);
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut sum_s = 0.0;
        if let Some(z) = &self.packed {
            let np = packed_len(d);
            // off-diagonal entries appear once in the packed form, so weight them twice
            let mut vp = Vec::with_capacity(np);
            for i in 0..d {
                vp.push(v[i * d + i]);
                vp.extend(((i + 1)..d).map(|j| v[i * d + j] + v[j * d + i]));
            }
            let mut acc = vec![0.0; np];
            for zp in z.chunks_exact(np) {
                let s = dot(zp, &vp) - mv;
                sum_s += s;
                acc.iter_mut().zip(zp).for_each(|(a, &b)| *a += s * b);
            }
            let mut k = 0;
            for i in 0..d {
                for j in i..d {
                    out[i * d + j] = acc[k];
                    k += 1;
                }
            }
        } else {
            self.accumulate_rows(v, mv, out, &mut sum_s);
        }
        let n = self.points.len() as f64;
        let mean_s = sum_s / n;
        for i in 0..d {
            for j in i..d {
                let w = out[i * d + j] / n - mean_s * self.mean_lift[i * d + j];
                out[i * d + j] = w;
                out[j * d + i] = w;
            }
        }
    }

    fn accumulate_rows(&self, v: &[f64], mv: f64, out: &mut [f64], sum_s: &mut f64) {
        let d = self.dim();
        for x in self.points.rows() {
            let s = quad_form_raw(v, d, x) - mv;
            *sum_s += s;
            for i in 0..d {
                let sxi = s * x[i];
                let row = &mut out[i * d..(i + 1) * d];
                for j in i..d {
                    row[j] += sxi * x[j];
                }
            }
        }
    }

    fn rayleigh(&self, v: &[f64], scratch: &mut [f64]) -> f64 {
        self.apply(v, scratch);
        dot(v, scratch)
    }

    /// Lifted deviation of the point farthest from the mean lift.
    fn deterministic_start(&self) -> Vec<f64> {
        let d = self.dim();
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (k, x) in self.points.rows().enumerate() {
            let mut dev = 0.0;
            for i in 0..d {
                for j in 0..d {
                    let e = x[i] * x[j] - self.mean_lift[i * d + j];
                    dev += e * e;
                }
            }
            if dev > best.0 {
                best = (dev, k);
            }
        }
        let x = self.points.row(best.1);
        let mut v = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                v[i * d + j] = x[i] * x[j] - self.mean_lift[i * d + j];
            }
        }
        v
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn symmetrize(v: &mut [f64], d: usize) {
    for i in 0..d {
        for j in (i + 1)..d {
            let avg = 0.5 * (v[i * d + j] + v[j * d + i]);
            v[i * d + j] = avg;
            v[j * d + i] = avg;
        }
    }
}

/// Flips the sign so the largest-magnitude entry (first on ties) is positive.
fn canonical_sign(v: &mut [f64]) {
    let mut best = (0.0_f64, 0usize);
    for (k, x) in v.iter().enumerate() {
        if x.abs() > best.0 {
            best = (x.abs(), k);
        }
    }
    if v[best.1] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

struct PowerRun {
    v: Vec<f64>,
    lambda: f64,
    iterations: usize,
    converged: bool,
}

fn power_run(op: &LiftedCovariance<'_>, mut v: Vec<f64>, min_iters: usize, max_iters: usize, rel_tol: f64) -> PowerRun {
    let d = op.dim();
    let mut w = vec![0.0; d * d];
    symmetrize(&mut v, d);
    if normalize(&mut v) == 0.0 {
        return PowerRun { v, lambda: 0.0, iterations: 0, converged: false };
    }
    let mut prev: Option<f64> = None;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        op.apply(&v, &mut w);
        iterations += 1;
        let lam = dot(&v, &w);
        if normalize(&mut w) == 0.0 {
            // v lies in the null space of the operator
            return PowerRun { v, lambda: 0.0, iterations, converged: false };
        }
        std::mem::swap(&mut v, &mut w);
        if let Some(p) = prev {
            if iterations >= min_iters && (lam - p).abs() <= rel_tol * lam.abs() {
                converged = true;
                break;
            }
        }
        prev = Some(lam);
    }
    symmetrize(&mut v, d);
    normalize(&mut v);
    let lambda = op.rayleigh(&v, &mut w).max(0.0);
    PowerRun { v, lambda, iterations, converged }
}

/// Minimum power-iteration count for dimension `d`: `⌈10 · log₂(d² + 1)⌉`.
pub fn lifted_min_iters(d: usize) -> usize {
    (10.0 * ((d * d + 1) as f64).log2()).ceil() as usize
}

/// Top eigenvector of `Cov_{x ∈ points}[x ⊗ x]`, reshaped to a symmetric `d x d`
/// matrix, computed without materializing the `d² x d²` covariance.
///
/// Runs at least `⌈10 log₂(d²+1)⌉` steps (capped by `max_iters`) from a seeded
/// Gaussian start and stops once successive Rayleigh quotients agree to
/// `rel_tol`. If the quotient ends below the average eigenvalue of the lifted
/// covariance on the symmetric subspace, the run is repeated from the lifted
/// deviation of the most extreme point and the better of the two is kept.
pub fn lifted_top_eig(points: &Points, seed: u64, max_iters: usize, rel_tol: f64) -> Result<LiftedEigResult> {
    if points.is_empty() {
        return Err(Error::Empty("lifted_top_eig"));
    }
    let d = points.dim();
    let op = LiftedCovariance::new(points)?;
    if op.trace <= 1e-24 * op.scale || op.trace == 0.0 {
        let mut e = vec![0.0; d * d];
        e[0] = 1.0;
        return Ok(LiftedEigResult {
            matrix_a: SymMatrix { dim: d, data: e },
            eigenvalue: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    let max_iters = max_iters.max(1);
    let min_iters = lifted_min_iters(d).min(max_iters);
    let mut rng = rng_from_seed(seed);
    let start: Vec<f64> = (0..d * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut run = power_run(&op, start, min_iters, max_iters, rel_tol);

    let sym_dim = (d * (d + 1) / 2) as f64;
    if run.lambda < op.trace / sym_dim {
        let retry = power_run(&op, op.deterministic_start(), min_iters, max_iters, rel_tol);
        let total = run.iterations + retry.iterations;
        if retry.lambda > run.lambda {
            run = retry;
        }
        run.iterations = total;
    }

    let mut v = run.v;
    canonical_sign(&mut v);
    if v.iter().any(|x| !x.is_finite()) || !run.lambda.is_finite() {
        return Err(Error::NonFinite("lifted_top_eig"));
    }
    Ok(LiftedEigResult {
        matrix_a: SymMatrix { dim: d, data: v },
        eigenvalue: run.lambda,
        iterations: run.iterations,
        converged: run.converged,
    })
}

/// Exactly `steps` power-iteration steps from a seeded start, with no early
/// stop and no restart. Used by the per-loop benchmark so that every grid
/// point does the same number of operator applications.
pub fn lifted_top_eig_fixed_steps(points: &Points, seed: u64, steps: usize) -> Result<LiftedEigResult> {
    if points.is_empty() {
        return Err(Error::Empty("lifted_top_eig_fixed_steps"));
    }
    let d = points.dim();
    let op = LiftedCovariance::new(points)?;
    let mut rng = rng_from_seed(seed);
    let start: Vec<f64> = (0..d * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let run = power_run(&op, start, steps, steps, f64::NEG_INFINITY);
    Ok(LiftedEigResult {
        matrix_a: SymMatrix { dim: d, data: run.v },
        eigenvalue: run.lambda,
        iterations: run.iterations,
        converged: false,
    })
}

/// `Cov_{x}[x xᵀ]` as an explicit `d² x d²` matrix. Test oracle only; the
/// estimator never calls this.
pub fn materialized_lifted_covariance(points: &Points) -> DMatrix<f64> {
    let d = points.dim();
    let n = points.len() as f64;
    let dd = d * d;
    let lifts: Vec<Vec<f64>> = points
        .rows()
        .map(|x| {
            let mut v = Vec::with_capacity(dd);
            for i in 0..d {
                for j in 0..d {
                    v.push(x[i] * x[j]);
                }
            }
            v
        })
        .collect();
    let mut mean = vec![0.0; dd];
    for l in &lifts {
        for (m, v) in mean.iter_mut().zip(l) {
            *m += v / n;
        }
    }
    let mut cov = DMatrix::zeros(dd, dd);
    for l in &lifts {
        for a in 0..dd {
            let da = l[a] - mean[a];
            for b in 0..dd {
                cov[(a, b)] += da * (l[b] - mean[b]) / n;
            }
        }
    }
    cov
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng as _;

    fn random_psd(d: usize, rank: usize, seed: u64) -> SymMatrix {
        let mut rng = rng_from_seed(seed);
        let b = DMatrix::from_fn(d, rank, |_, _| rng.sample::<f64, _>(StandardNormal));
        SymMatrix::from_dmatrix(&(&b * b.transpose())).unwrap()
    }

    #[test]
    fn identity_factorization() {
        let f = psd_pseudo_factor(&SymMatrix::identity(3), 1e-8).unwrap();
        assert_eq!(f.rank, 3);
        assert!(f.sqrt_pinv.max_abs_diff(&SymMatrix::identity(3)) < 1e-12);
        assert!(f.proj.max_abs_diff(&SymMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn diagonal_rank_deficient_factorization() {
        let f = psd_pseudo_factor(&SymMatrix::from_diag(&[4.0, 0.0]), 1e-8).unwrap();
        assert_eq!(f.rank, 1);
        assert!(f.sqrt_pinv.max_abs_diff(&SymMatrix::from_diag(&[0.5, 0.0])) < 1e-12);
        assert!(f.proj.max_abs_diff(&SymMatrix::from_diag(&[1.0, 0.0])) < 1e-12);
        assert!(f.pinv.max_abs_diff(&SymMatrix::from_diag(&[0.25, 0.0])) < 1e-12);
    }

    #[test]
    fn rank_four_of_six_sandwich_is_projection() {
        let m = random_psd(6, 4, 11);
        let f = psd_pseudo_factor(&m, 1e-8).unwrap();
        assert_eq!(f.rank, 4);
        let sandwich = f.sqrt_pinv.sandwich(&m);
        assert!(sandwich.max_abs_diff(&f.proj) < 1e-7);
        let pp = f.proj.sandwich(&SymMatrix::identity(6));
        assert!(fro_norm(&pp.sub(&f.proj)).unwrap() <= 1e-8 * 6.0);
        let ev = f.proj.eigen().values;
        assert_eq!(ev.iter().filter(|l| (**l - 1.0).abs() <= 1e-6).count(), 4);
        assert_eq!(ev.iter().filter(|l| l.abs() < f.rank_tol.max(1e-12)).count(), 2);
    }

    #[test]
    fn negative_eigenvalue_is_rejected() {
        let err = psd_pseudo_factor(&SymMatrix::from_diag(&[1.0, -0.5]), 1e-8).unwrap_err();
        assert!(matches!(err, Error::NotPsd { .. }));
        // tiny negatives are clamped
        let f = psd_pseudo_factor(&SymMatrix::from_diag(&[1.0, -1e-12]), 1e-8).unwrap();
        assert_eq!(f.rank, 1);
    }

    #[test]
    fn norms_on_small_cases() {
        let i2 = SymMatrix::identity(2);
        assert_relative_eq!(fro_norm(&i2).unwrap(), 2f64.sqrt());
        assert_relative_eq!(op_norm(&i2).unwrap(), 1.0, epsilon = 1e-12);
        let m = SymMatrix::from_diag(&[3.0, -4.0]);
        assert_relative_eq!(fro_norm(&m).unwrap(), 5.0);
        assert_relative_eq!(op_norm(&m).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn fro_norm_squared_is_sum_of_squared_eigenvalues() {
        let mut rng = rng_from_seed(5);
        let data: Vec<f64> = (0..25).map(|_| rng.sample(StandardNormal)).collect();
        let m = SymMatrix::new(5, data).unwrap();
        let eig_sq: f64 = m.eigen().values.iter().map(|l| l * l).sum();
        assert_relative_eq!(fro_norm(&m).unwrap().powi(2), eig_sq, max_relative = 1e-9);
    }

    #[test]
    fn second_moment_small_cases() {
        let p = Points::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(second_moment(&p).unwrap(), SymMatrix::from_diag(&[0.5, 0.5]));
        let p = Points::from_rows(&[vec![2.0]]).unwrap();
        assert_eq!(second_moment(&p).unwrap().as_slice(), &[4.0]);
        let empty = Points::with_capacity(2, 0);
        assert!(matches!(second_moment(&empty), Err(Error::Empty(_))));
    }

    #[test]
    fn second_moment_concentrates() {
        let mut rng = rng_from_seed(2024);
        let n = 100_000;
        let mut p = Points::with_capacity(2, n);
        for _ in 0..n {
            let z0: f64 = rng.sample(StandardNormal);
            let z1: f64 = rng.sample(StandardNormal);
            p.push(&[z0, 2.0 * z1]);
        }
        let h = second_moment(&p).unwrap();
        // Entry (1,1) has variance 2·16/n, so sd ≈ 0.018 and 5σ ≈ 0.09.
        assert!(h.max_abs_diff(&SymMatrix::from_diag(&[1.0, 4.0])) < 0.1);
    }

    #[test]
    fn lifted_degenerate_constant_points() {
        let p = Points::from_rows(&vec![vec![1.0, 2.0]; 7]).unwrap();
        let r = lifted_top_eig(&p, 1, 100, 1e-6).unwrap();
        assert_eq!(r.eigenvalue, 0.0);
        assert_eq!(r.matrix_a, SymMatrix::outer(&[1.0, 0.0]));
        assert!(r.converged);
    }

    #[test]
    fn lifted_one_dimensional_variance_of_squares() {
        let p = Points::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let r = lifted_top_eig(&p, 3, 100, 1e-12).unwrap();
        assert_relative_eq!(r.eigenvalue, 98.0 / 9.0, max_relative = 1e-12);
        assert_eq!(r.matrix_a.as_slice(), &[1.0]);
    }

    #[test]
    fn lifted_matches_materialized_oracle_in_two_dims() {
        let mut rng = rng_from_seed(20);
        let rows: Vec<Vec<f64>> =
            (0..20).map(|_| (0..2).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let p = Points::from_rows(&rows).unwrap();
        let oracle = SymmetricEigen::new(materialized_lifted_covariance(&p)).eigenvalues.max();
        let r = lifted_top_eig(&p, 9, 100_000, 1e-14).unwrap();
        assert_relative_eq!(r.eigenvalue, oracle, max_relative = 1e-6);
        assert_relative_eq!(fro_norm(&r.matrix_a).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn lifted_is_seed_deterministic() {
        let mut rng = rng_from_seed(4);
        let rows: Vec<Vec<f64>> =
            (0..30).map(|_| (0..3).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let p = Points::from_rows(&rows).unwrap();
        let a = lifted_top_eig(&p, 77, 200, 1e-6).unwrap();
        let b = lifted_top_eig(&p, 77, 200, 1e-6).unwrap();
        assert_eq!(a.matrix_a, b.matrix_a);
        assert_eq!(a.eigenvalue.to_bits(), b.eigenvalue.to_bits());
    }

    #[test]
    fn symmetrization_on_construction() {
        let m = SymMatrix::new(2, vec![1.0, 2.0, 4.0, 1.0]).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
        assert!(SymMatrix::new(2, vec![1.0, f64::NAN, 0.0, 1.0]).is_err());
    }
}
