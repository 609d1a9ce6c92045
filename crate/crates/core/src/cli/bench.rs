use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::datagen::{sample_gaussian, GaussianParams};
use crate::error::{Error, Result};
use crate::estimator::{quantile_rank, score_stats};
use crate::matlin::{lifted_top_eig_fixed_steps, psd_pseudo_factor, second_moment, DEFAULT_RANK_TOL_REL};
use crate::points::Points;
use crate::rng::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub d: usize,
    pub m: usize,
    /// Median wall time of one loop in milliseconds.
    pub loop_ms: f64,
    /// `loop_ms / (c·m·d²) − 1` for the least-squares (in log space) constant `c`.
    pub fit_residual: f64,
}

/// One estimator loop on `points` with a fixed number of power steps:
/// second moment, pseudo-inverse square root, normalization, lifted top
/// eigenvector and the quantile statistics.
fn one_loop(points: &Points, seed: u64, steps: usize) -> Result<f64> {
    let h = second_moment(points)?;
    let fac = psd_pseudo_factor(&h, DEFAULT_RANK_TOL_REL)?;
    let mut tilde = Points::with_capacity(points.dim(), points.len());
    for x in points.rows() {
        tilde.push(&fac.sqrt_pinv.mul_vec(x));
    }
    let eig = lifted_top_eig_fixed_steps(&tilde, seed, steps)?;
    let values: Vec<f64> = tilde.rows().map(|x| eig.matrix_a.quad_form(x)).collect();
    let stats = score_stats(&values, quantile_rank(0.5, values.len()))?;
    Ok(stats.mean_f)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Times one loop over the grid `d_list × m_list` on standard Gaussian data.
/// Rows come out in `d`-major order.
pub fn cmd_bench(d_list: &[usize], m_list: &[usize], seed: u64, reps: usize, steps: usize) -> Result<Vec<BenchRow>> {
    if d_list.is_empty() || m_list.is_empty() || reps == 0 || steps == 0 {
        return Err(Error::InvalidConfig("bench needs nonempty grids, reps ≥ 1 and steps ≥ 1".into()));
    }
    if let Some(&d) = d_list.iter().find(|&&d| d == 0) {
        return Err(Error::InvalidConfig(format!("bad dimension {d}")));
    }
    let mut rows = Vec::new();
    for (i, &d) in d_list.iter().enumerate() {
        for (j, &m) in m_list.iter().enumerate() {
            if m < 18 {
                return Err(Error::InvalidConfig(format!("m = {m} is too small to time a loop")));
            }
            let cell = derive_seed(seed, (i * m_list.len() + j) as u64);
            let points = sample_gaussian(&GaussianParams::standard(d), m, cell)?;
            std::hint::black_box(one_loop(&points, cell, steps)?);
            let mut times = Vec::with_capacity(reps);
            for _ in 0..reps {
                let t = Instant::now();
                std::hint::black_box(one_loop(&points, cell, steps)?);
                times.push(t.elapsed().as_secs_f64() * 1e3);
            }
            rows.push(BenchRow { d, m, loop_ms: median(times), fit_residual: 0.0 });
        }
    }
    let log_c = rows.iter().map(|r| (r.loop_ms / work(r)).ln()).sum::<f64>() / rows.len() as f64;
    for r in &mut rows {
        r.fit_residual = r.loop_ms / (log_c.exp() * work(r)) - 1.0;
    }
    Ok(rows)
}

fn work(r: &BenchRow) -> f64 {
    (r.m * r.d * r.d) as f64
}

pub fn to_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
