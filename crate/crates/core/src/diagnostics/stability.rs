use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matlin::{fro_norm, lifted_top_eig, psd_pseudo_factor, SymMatrix, DEFAULT_LIFTED_REL_TOL, DEFAULT_RANK_TOL_REL};
use crate::points::Points;
use crate::rng::{derive_seed, rng_from_seed};

pub const STABILITY_REPORT_SCHEMA_VERSION: u32 = 1;
/// Random unit-Frobenius quadratics tried for the tail and variance conditions.
pub const QUADRATIC_FAMILY_SIZE: usize = 200;
/// Greedy subsets are built in this many removal batches.
pub const GREEDY_BATCHES: usize = 10;

const CONDITIONS: [&str; 5] = ["L1", "L2", "L3", "L4", "L5"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub name: String,
    /// Largest observed value of quantity / bound; above 1 is a violation.
    pub worst_ratio: f64,
    /// Which subset produced it: `full`, `random:<k>` or `greedy:<condition>`.
    pub worst_subset: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchStrategy {
    pub random_subsets: usize,
    pub greedy_batches: usize,
    pub greedy_batch_size: usize,
    pub quadratic_family: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub schema_version: u32,
    pub eta: f64,
    pub eps: f64,
    pub set_size: usize,
    /// `⌈(1 − ε)|A|⌉`.
    pub subset_size: usize,
    pub subsets_tested: usize,
    pub conditions: Vec<ConditionReport>,
    /// Worst tail ratio with the threshold `10·√Var·ln(1/η)` instead of `ln(2/η)`.
    pub l3_ratio_ln_one_over_eta: f64,
    pub search_strategy: SearchStrategy,
}

impl StabilityReport {
    pub fn ratio(&self, name: &str) -> Option<f64> {
        self.conditions.iter().find(|c| c.name == name).map(|c| c.worst_ratio)
    }

    pub fn max_ratio(&self) -> f64 {
        self.conditions.iter().map(|c| c.worst_ratio).fold(0.0, f64::max)
    }
}

/// A quadratic `p(x) = xᵀBx` with its mean and variance under `N(μ, Σ)`.
struct Quadratic {
    mean: f64,
    sd: f64,
}

struct Setup<'a> {
    points: &'a Points,
    /// Whitened centred points `Σ^{†/2}(x − μ)`.
    white: Vec<Vec<f64>>,
    /// Norm of the part of `x − μ` outside `range(Σ)`.
    off_range: Vec<f64>,
    off_tol: f64,
    sigma_rank: usize,
    /// Orthonormal basis of `range(Σ)`, as columns.
    range_basis: DMatrix<f64>,
    quads: Vec<Quadratic>,
    /// `values[q][i] = p_q(x_i)`.
    values: Vec<Vec<f64>>,
    tail_two: f64,
    tail_one: f64,
    eta: f64,
}

#[derive(Clone, Copy, Default)]
struct Eval {
    ratios: [f64; 5],
    l3_alt: f64,
    /// Quadratic with the worst tail ratio and the one with the worst variance ratio.
    worst_tail_q: usize,
    worst_var_q: usize,
}

impl Setup<'_> {
    fn eval(&self, keep: &[bool]) -> Eval {
        let d = self.points.dim();
        let n = keep.iter().filter(|&&k| k).count() as f64;
        let mut out = Eval::default();

        let mut mean_w = vec![0.0; d];
        let mut cov_w = DMatrix::<f64>::zeros(d, d);
        let mut off = 0.0_f64;
        for (i, w) in self.white.iter().enumerate().filter(|(i, _)| keep[*i]) {
            for a in 0..d {
                mean_w[a] += w[a];
                for b in 0..d {
                    cov_w[(a, b)] += w[a] * w[b];
                }
            }
            off = off.max(self.off_range[i]);
        }
        mean_w.iter_mut().for_each(|v| *v /= n);
        cov_w /= n;
        // Any spread outside range(Σ) breaks both moment conditions outright.
        let escaped = off > self.off_tol;
        let mean_norm = mean_w.iter().map(|v| v * v).sum::<f64>().sqrt();
        out.ratios[0] = if escaped { f64::INFINITY } else { mean_norm / 0.1 };
        let mut delta = cov_w;
        for a in 0..self.sigma_rank {
            // In whitened coordinates Σ becomes the projection onto the first `rank` axes.
            delta[(a, a)] -= 1.0;
        }
        out.ratios[1] = if escaped { f64::INFINITY } else { delta.norm() / 0.1 };

        let (mut worst_tail, mut worst_alt, mut worst_var) = (0.0_f64, 0.0_f64, 0.0_f64);
        for (q, (quad, vals)) in self.quads.iter().zip(&self.values).enumerate() {
            let (mut s1, mut s2, mut c2, mut c1) = (0.0, 0.0, 0usize, 0usize);
            let thr2 = 10.0 * quad.sd * self.tail_two;
            let thr1 = 10.0 * quad.sd * self.tail_one;
            let floor = 1e-12 * (1.0 + quad.mean.abs());
            for (&v, _) in vals.iter().zip(keep).filter(|(_, &k)| k) {
                s1 += v;
                s2 += v * v;
                let dev = (v - quad.mean).abs();
                c2 += usize::from(dev > thr2 + floor);
                c1 += usize::from(dev > thr1 + floor);
            }
            let tail = c2 as f64 / n / self.eta;
            if tail > worst_tail || q == 0 {
                worst_tail = tail;
                out.worst_tail_q = q;
            }
            worst_alt = worst_alt.max(c1 as f64 / n / self.eta);
            let m = s1 / n;
            let var = (s2 / n - m * m).max(0.0);
            let bound = 4.0 * quad.sd * quad.sd;
            let r = if bound > 0.0 {
                var / bound
            } else if var > 1e-12 * (1.0 + m * m) {
                f64::INFINITY
            } else {
                0.0
            };
            if r > worst_var || q == 0 {
                worst_var = r;
                out.worst_var_q = q;
            }
        }
        out.ratios[2] = worst_tail;
        out.ratios[3] = worst_var;
        out.l3_alt = worst_alt;
        out.ratios[4] = self.rank_ratio(keep);
        out
    }

    /// Twice the sine of the largest angle between `range(Σ)` and the range of
    /// the subset's second moment: 0 when the kernels nest, 2 when a direction
    /// of `range(Σ)` is missed entirely.
    fn rank_ratio(&self, keep: &[bool]) -> f64 {
        if self.sigma_rank == 0 {
            return 0.0;
        }
        let m = self.second_moment(keep);
        let proj = match psd_pseudo_factor(&m, DEFAULT_RANK_TOL_REL) {
            Ok(f) => f.proj.to_dmatrix(),
            Err(_) => return f64::INFINITY,
        };
        let d = m.dim();
        let resid = (DMatrix::<f64>::identity(d, d) - proj) * &self.range_basis;
        2.0 * resid.singular_values().max()
    }

    fn second_moment(&self, keep: &[bool]) -> SymMatrix {
        let d = self.points.dim();
        let mut acc = vec![0.0; d * d];
        for x in self.points.rows().zip(keep).filter(|(_, &k)| k).map(|(x, _)| x) {
            for a in 0..d {
                for b in 0..d {
                    acc[a * d + b] += x[a] * x[b];
                }
            }
        }
        SymMatrix::new(d, acc).expect("finite second moment")
    }

    /// Per-point score whose smallest entries are dropped next by the greedy
    /// search against condition `c`.
    fn greedy_scores(&self, c: usize, keep: &[bool], ev: &Eval) -> Vec<f64> {
        let d = self.points.dim();
        let n = keep.iter().filter(|&&k| k).count() as f64;
        match c {
            0 => {
                let mut mean = vec![0.0; d];
                for w in self.white.iter().zip(keep).filter(|(_, &k)| k).map(|(w, _)| w) {
                    mean.iter_mut().zip(w).for_each(|(m, v)| *m += v / n);
                }
                let norm = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    mean = vec![0.0; d];
                    mean[0] = 1.0;
                }
                self.white.iter().map(|w| w.iter().zip(&mean).map(|(a, b)| a * b).sum()).collect()
            }
            1 => {
                let mut delta = DMatrix::<f64>::zeros(d, d);
                for w in self.white.iter().zip(keep).filter(|(_, &k)| k).map(|(w, _)| w) {
                    for a in 0..d {
                        for b in 0..d {
                            delta[(a, b)] += w[a] * w[b] / n;
                        }
                    }
                }
                for a in 0..self.sigma_rank {
                    delta[(a, a)] -= 1.0;
                }
                if delta.norm() == 0.0 {
                    delta = DMatrix::identity(d, d);
                }
                self.white
                    .iter()
                    .map(|w| {
                        let v = nalgebra::DVector::from_column_slice(w);
                        (v.transpose() * &delta * &v)[(0, 0)]
                    })
                    .collect()
            }
            2 => {
                let q = &self.quads[ev.worst_tail_q];
                self.values[ev.worst_tail_q].iter().map(|v| (v - q.mean).abs()).collect()
            }
            3 => {
                let vals = &self.values[ev.worst_var_q];
                let m = vals.iter().zip(keep).filter(|(_, &k)| k).map(|(v, _)| v).sum::<f64>() / n;
                vals.iter().map(|v| (v - m).abs()).collect()
            }
            _ => {
                // Direction of range(Σ) the subset covers least; drop the points that span it.
                if self.sigma_rank == 0 {
                    return vec![0.0; keep.len()];
                }
                let m = self.second_moment(keep).to_dmatrix();
                let c = self.range_basis.transpose() * m * &self.range_basis;
                let eig = nalgebra::SymmetricEigen::new(c);
                let k = eig.eigenvalues.imin();
                let u = &self.range_basis * eig.eigenvectors.column(k);
                self.points.rows().map(|x| -x.iter().zip(u.iter()).map(|(a, b)| a * b).sum::<f64>().abs()).collect()
            }
        }
    }
}

/// Spot check of the stability conditions for `points` against `N(μ, Σ)`:
/// the full set, `n_subset_trials` random subsets of size `⌈(1 − ε)|A|⌉`, and
/// one greedy subset per condition. The tail and variance conditions use the
/// Gaussian closed forms for `E_D[p]` and `Var_D[p]`.
pub fn check_stability(
    points: &Points,
    mu: &[f64],
    sigma: &SymMatrix,
    eta: f64,
    eps: f64,
    n_subset_trials: usize,
    seed: u64,
) -> Result<StabilityReport> {
    if points.is_empty() {
        return Err(Error::Empty("stability check needs points"));
    }
    let d = points.dim();
    if mu.len() != d || sigma.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: if mu.len() != d { mu.len() } else { sigma.dim() } });
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidConfig(format!("eta = {eta} must lie in (0, 1)")));
    }
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::InvalidConfig(format!("eps = {eps} must lie in [0, 1/2)")));
    }
    let n = points.len();
    let fac = psd_pseudo_factor(sigma, DEFAULT_RANK_TOL_REL)?;
    let rank = fac.rank;
    let range_basis = fac.eigenvectors().columns(0, rank).into_owned();
    let eig_root: Vec<f64> = fac.eigvals.iter().map(|l| l.sqrt()).collect();

    let mut white = Vec::with_capacity(n);
    let mut off_range = Vec::with_capacity(n);
    let mut scale = 0.0_f64;
    for x in points.rows() {
        let c: Vec<f64> = x.iter().zip(mu).map(|(a, b)| a - b).collect();
        scale = scale.max(c.iter().map(|v| v.abs()).fold(0.0, f64::max));
        let coords = fac.eigenvectors().transpose() * nalgebra::DVector::from_column_slice(&c);
        let mut w = vec![0.0; d];
        for k in 0..rank {
            w[k] = coords[k] / eig_root[k];
        }
        white.push(w);
        off_range.push(coords.rows(rank, d - rank).norm());
    }

    let mut rng = rng_from_seed(derive_seed(seed, 0));
    let mut family = Vec::with_capacity(QUADRATIC_FAMILY_SIZE + 1);
    for _ in 0..QUADRATIC_FAMILY_SIZE {
        let g = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
        let s = (&g + g.transpose()) * 0.5;
        let s = &s / s.norm();
        family.push(SymMatrix::from_dmatrix(&s)?);
    }
    family.push(lifted_top_eig(points, derive_seed(seed, 1), 500, DEFAULT_LIFTED_REL_TOL)?.matrix_a);

    let root = fac.sqrt();
    let mut quads = Vec::with_capacity(family.len());
    let mut values = Vec::with_capacity(family.len());
    for b in &family {
        let frob = fro_norm(&root.sandwich(b))?.powi(2);
        let lin: f64 = root.mul_vec(&b.mul_vec(mu)).iter().map(|v| v * v).sum();
        let mean = b.dot(sigma) + b.quad_form(mu);
        quads.push(Quadratic { mean, sd: (2.0 * frob + 4.0 * lin).sqrt() });
        values.push(points.rows().map(|x| b.quad_form(x)).collect::<Vec<f64>>());
    }

    let setup = Setup {
        points,
        white,
        off_range,
        off_tol: 1e-9 * (1.0 + scale),
        sigma_rank: rank,
        range_basis,
        quads,
        values,
        tail_two: (2.0 / eta).ln(),
        tail_one: (1.0 / eta).ln(),
        eta,
    };

    let subset_size = (((1.0 - eps) * n as f64) - 1e-9).ceil().max(1.0) as usize;
    let budget = n - subset_size;
    let batch = budget.div_ceil(GREEDY_BATCHES).max(1);
    let mut conditions: Vec<ConditionReport> =
        CONDITIONS.iter().map(|c| ConditionReport { name: c.to_string(), worst_ratio: 0.0, worst_subset: String::new() }).collect();
    let mut l3_alt = 0.0_f64;
    let mut tested = 0usize;
    let mut record = |ev: &Eval, label: &str, conditions: &mut Vec<ConditionReport>| {
        for (c, r) in conditions.iter_mut().zip(ev.ratios) {
            if r > c.worst_ratio || c.worst_subset.is_empty() {
                c.worst_ratio = r;
                c.worst_subset = label.to_string();
            }
        }
        l3_alt = l3_alt.max(ev.l3_alt);
        tested += 1;
    };

    let full = vec![true; n];
    record(&setup.eval(&full), "full", &mut conditions);
    if budget > 0 {
        let mut sub_rng = rng_from_seed(derive_seed(seed, 2));
        for t in 0..n_subset_trials {
            let mut keep = vec![true; n];
            for i in sample(&mut sub_rng, n, budget) {
                keep[i] = false;
            }
            record(&setup.eval(&keep), &format!("random:{t}"), &mut conditions);
        }
        for (c, name) in CONDITIONS.iter().enumerate() {
            let mut keep = vec![true; n];
            let mut removed = 0;
            let mut ev = setup.eval(&keep);
            while removed < budget {
                let scores = setup.greedy_scores(c, &keep, &ev);
                let mut order: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
                order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
                for &i in order.iter().take(batch.min(budget - removed)) {
                    keep[i] = false;
                    removed += 1;
                }
                ev = setup.eval(&keep);
            }
            record(&ev, &format!("greedy:{name}"), &mut conditions);
        }
    }

    Ok(StabilityReport {
        schema_version: STABILITY_REPORT_SCHEMA_VERSION,
        eta,
        eps,
        set_size: n,
        subset_size,
        subsets_tested: tested,
        conditions,
        l3_ratio_ln_one_over_eta: l3_alt,
        search_strategy: SearchStrategy {
            random_subsets: if budget > 0 { n_subset_trials } else { 0 },
            greedy_batches: if budget > 0 { budget.div_ceil(batch) } else { 0 },
            greedy_batch_size: batch,
            quadratic_family: family.len(),
            seed,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeated_point_with_zero_covariance() {
        let pts = Points::from_rows(&[[1.0, 2.0]; 50]).unwrap();
        let r = check_stability(&pts, &[1.0, 2.0], &SymMatrix::zeros(2), 0.01, 0.1, 3, 0).unwrap();
        assert_eq!(r.ratio("L5"), Some(0.0));
        assert_eq!(r.ratio("L1"), Some(0.0));
        assert_eq!(r.subsets_tested, 1 + 3 + 5);
    }

    #[test]
    fn missing_direction_breaks_rank_condition() {
        // All points on the first axis while Σ is the identity.
        let rows: Vec<[f64; 2]> = (0..40).map(|i| [f64::from(i) - 19.5, 0.0]).collect();
        let pts = Points::from_rows(&rows).unwrap();
        let r = check_stability(&pts, &[0.0, 0.0], &SymMatrix::identity(2), 0.01, 0.0, 0, 0).unwrap();
        assert!((r.ratio("L5").unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(r.subsets_tested, 1);
    }

    #[test]
    fn rejects_bad_parameters() {
        let pts = Points::from_rows(&[[0.0]]).unwrap();
        let s = SymMatrix::identity(1);
        assert!(check_stability(&pts, &[0.0], &s, 0.0, 0.1, 0, 0).is_err());
        assert!(check_stability(&pts, &[0.0], &s, 0.1, 0.5, 0, 0).is_err());
        assert!(check_stability(&pts, &[0.0, 0.0], &s, 0.1, 0.1, 0, 0).is_err());
    }
}
