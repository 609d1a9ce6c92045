//! List-decodable covariance estimation by a spectral multifilter.
//!
//! Each working set is normalized by its own second moment `H`, the points are
//! projected onto the top eigenvector `A` of the covariance of `x̃ x̃ᵀ`, and the
//! projected values `y = x̃ᵀ A x̃` decide what happens next: stop and emit `H`,
//! drop one point with probability proportional to `(y − median)²`, or split
//! the set at a threshold found by [`find_divider`].

mod config;
mod scores;
mod trace;

pub use config::{
    effective_constants, quantile_rank, ConstantMode, DividerBudget, EffectiveConstants, EstimatorConfig,
    QuantileIndexMode, CALIBRATED_R, CALIBRATED_THRESHOLD,
};
pub use scores::{divider_edges, filter_step, find_divider, score_stats, ScoreStats};
pub use trace::{LoopRecord, NodeId, RecursionTrace, Removal, Termination, TraceNode};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matlin::{lifted_top_eig, psd_pseudo_factor, second_moment, SymMatrix};
use crate::points::Points;
use crate::rng::rng_from_seed;
use rand::RngCore as _;

/// One candidate covariance with the subset that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    /// Second moment of the subset.
    pub h_matrix: SymMatrix,
    /// Root indices of the subset, ascending.
    pub indices: Vec<usize>,
    pub node: NodeId,
}

impl Hypothesis {
    pub fn size(&self) -> usize {
        self.indices.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub hypotheses: Vec<Hypothesis>,
    pub trace: RecursionTrace,
}

enum Step {
    Certificate,
    Filter,
    Split(f64),
}

/// One loop's normalization and projection of a working set.
#[derive(Clone, Debug)]
pub struct Projection {
    /// `y_i = x̃_iᵀ A x̃_i` with `x̃ = H^{†/2} x`.
    pub values: Vec<f64>,
    /// Second moment `H` of the set.
    pub h_matrix: SymMatrix,
    pub matrix_a: SymMatrix,
    pub eigenvalue: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Normalizes `sub` by its second moment and projects it on the lifted top
/// eigenvector, exactly as one loop of the estimator does.
pub fn project(sub: &Points, config: &EstimatorConfig, eig_seed: u64) -> Result<Projection> {
    let h = second_moment(sub)?;
    let fac = psd_pseudo_factor(&h, config.rank_tol_rel)?;
    let mut tilde = Points::with_capacity(sub.dim(), sub.len());
    for x in sub.rows() {
        tilde.push(&fac.sqrt_pinv.mul_vec(x));
    }
    let eig = lifted_top_eig(&tilde, eig_seed, config.lifted_max_iters, config.lifted_rel_tol)?;
    let values = tilde.rows().map(|x| eig.matrix_a.quad_form(x)).collect();
    Ok(Projection {
        values,
        h_matrix: h,
        matrix_a: eig.matrix_a,
        eigenvalue: eig.eigenvalue,
        iterations: eig.iterations,
        converged: eig.converged,
    })
}

/// Runs the multifilter on `points` and returns the hypothesis list with the
/// full recursion trace. Deterministic given `config.seed`.
pub fn covariance_list_decoding(points: &Points, config: &EstimatorConfig) -> Result<Estimate> {
    config.validate()?;
    let m = points.len();
    if points.dim() == 0 {
        return Err(Error::Empty("points have dimension 0"));
    }
    let need = ((10.0 / config.alpha) - 1e-9).ceil().max(2.0) as usize;
    if m < need {
        return Err(Error::TooFewPoints { got: m, need });
    }
    let consts = effective_constants(config, m);
    let min_output = config.min_output_frac * config.alpha * m as f64;
    let mut rng = rng_from_seed(config.seed);
    let mut hypotheses = Vec::new();
    let mut nodes: Vec<TraceNode> = Vec::new();
    let mut stack: Vec<(NodeId, Vec<usize>)> = vec![(NodeId::root(), (0..m).collect())];

    while let Some((id, mut idx)) = stack.pop() {
        if id.level > consts.max_depth {
            return Err(Error::DepthExceeded { depth: id.level, max_depth: consts.max_depth });
        }
        let input_size = idx.len();
        let mut loops = Vec::new();
        let mut removals = Vec::new();
        let termination = loop {
            let m1 = match config.quantile_index_mode {
                QuantileIndexMode::RootM => consts.m1,
                QuantileIndexMode::CurrentT => quantile_rank(config.alpha, idx.len()),
            };
            if idx.len() < 2 * m1 {
                break Termination::TooSmall { discarded: idx.clone() };
            }
            let sub = points.select(&idx);
            let proj = project(&sub, config, rng.next_u64())?;
            let (y, h, eigenvalue) = (proj.values, proj.h_matrix, proj.eigenvalue);
            let stats = score_stats(&y, m1)?;
            loops.push(LoopRecord {
                size: idx.len(),
                m1,
                stats,
                eigenvalue,
                eig_iterations: proj.iterations,
                eig_converged: proj.converged,
            });

            let mut step = if stats.mean_f <= consts.threshold_eff {
                Step::Certificate
            } else if stats.spread() <= consts.r_eff {
                Step::Filter
            } else {
                let n_prime = match config.quantile_index_mode {
                    QuantileIndexMode::CurrentT if config.divider_budget == DividerBudget::QuantileRank => m1,
                    _ => consts.n_prime,
                };
                Step::Split(find_divider(&y, n_prime, m1)?)
            };
            if let Step::Filter = step {
                let f: Vec<f64> = y.iter().map(|v| (v - stats.median) * (v - stats.median)).collect();
                match filter_step(&f, &mut rng) {
                    Ok(k) => {
                        removals.push(Removal { index: idx.remove(k), score: f[k] });
                        continue;
                    }
                    Err(Error::AllZeroScores) => step = Step::Certificate,
                    Err(e) => return Err(e),
                }
            }
            match step {
                Step::Certificate if (idx.len() as f64) >= min_output => {
                    hypotheses.push(Hypothesis { h_matrix: h, indices: idx.clone(), node: id.clone() });
                    break Termination::Certificate { hypothesis: hypotheses.len() - 1 };
                }
                Step::Certificate => break Termination::TooSmall { discarded: idx.clone() },
                Step::Split(tau) => {
                    let (mut left, mut right) = (Vec::new(), Vec::new());
                    for (&i, &v) in idx.iter().zip(&y) {
                        if v <= tau { left.push(i) } else { right.push(i) }
                    }
                    let term = Termination::Split { tau, eigenvalue, left_size: left.len(), right_size: right.len() };
                    // Left child is popped first.
                    stack.push((id.child(true), right));
                    stack.push((id.child(false), left));
                    break term;
                }
                Step::Filter => unreachable!("filter steps continue the loop"),
            }
        };
        nodes.push(TraceNode { id, input_size, final_size: idx.len(), loops, removals, termination });
    }
    let trace = RecursionTrace { root_size: m, constants: consts, nodes };
    Ok(Estimate { hypotheses, trace })
}
