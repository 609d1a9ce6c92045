use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Order statistics of the projected values `y` at quantile rank `m₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreStats {
    /// `m₁`-th smallest value.
    pub q_left: f64,
    /// `m₁`-th largest value.
    pub q_right: f64,
    /// Lower median, rank `⌈n/2⌉`.
    pub median: f64,
    /// Mean of `(y − median)²`.
    pub mean_f: f64,
}

impl ScoreStats {
    pub fn spread(&self) -> f64 {
        self.q_right - self.q_left
    }
}

fn sorted_copy(values: &[f64]) -> Result<Vec<f64>> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("projected values"));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

fn check_rank(m1: usize, len: usize) -> Result<()> {
    if m1 == 0 || 2 * m1 > len {
        return Err(Error::BadRank { m1, len });
    }
    Ok(())
}

pub fn score_stats(values: &[f64], m1: usize) -> Result<ScoreStats> {
    check_rank(m1, values.len())?;
    let s = sorted_copy(values)?;
    let n = s.len();
    let median = s[n.div_ceil(2) - 1];
    let mean_f = values.iter().map(|v| (v - median) * (v - median)).sum::<f64>() / n as f64;
    Ok(ScoreStats { q_left: s[m1 - 1], q_right: s[n - m1], median, mean_f })
}

/// Draws one index with probability proportional to `scores` by inverting the
/// cumulative sum at a single uniform draw.
pub fn filter_step(scores: &[f64], rng: &mut Rng) -> Result<usize> {
    if scores.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::NonFinite("filter scores"));
    }
    let total: f64 = scores.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::AllZeroScores);
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &f) in scores.iter().enumerate() {
        if f > 0.0 {
            acc += f;
            last_positive = i;
            if acc > u {
                return Ok(i);
            }
        }
    }
    Ok(last_positive)
}

/// Boundaries `e₀ < … < e_k` of the `k` equal subintervals of `[lo, hi]`.
/// Subinterval `j` is `[e_j, e_{j+1})`, the last one is closed.
pub fn divider_edges(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    let w = (hi - lo) / k as f64;
    let mut e: Vec<f64> = (0..k).map(|j| lo + j as f64 * w).collect();
    e.push(hi);
    e
}

/// Picks a threshold `τ` strictly between the `m₁`-th smallest and `m₁`-th
/// largest value. The range is cut into `k = ⌈2m′/n′⌉` equal pieces and `τ` is
/// the midpoint of the leftmost piece holding at most `n′/2` values.
pub fn find_divider(values: &[f64], n_prime: usize, m1: usize) -> Result<f64> {
    check_rank(m1, values.len())?;
    if n_prime == 0 {
        return Err(Error::InvalidConfig("divider support size n' must be positive".into()));
    }
    let s = sorted_copy(values)?;
    let m = s.len();
    let (lo, hi) = (s[m1 - 1], s[m - m1]);
    if !(hi > lo) {
        return Err(Error::DegenerateRange(hi - lo));
    }
    let k = (2 * m).div_ceil(n_prime);
    let edges = divider_edges(lo, hi, k);
    let mut counts = vec![0usize; k];
    for &v in s.iter().filter(|v| **v >= lo && **v <= hi) {
        let j = edges[1..k].partition_point(|e| *e <= v);
        counts[j] += 1;
    }
    let j = counts
        .iter()
        .position(|&c| 2 * c <= n_prime)
        .ok_or(Error::NoSparseSubinterval { limit: n_prime as f64 / 2.0 })?;
    let tau = 0.5 * (edges[j] + edges[j + 1]);
    if !(tau > lo && tau < hi) {
        return Err(Error::DegenerateRange(hi - lo));
    }
    Ok(tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn divider_two_clumps() {
        let mut v = vec![0.0; 10];
        v.extend([100.0; 10]);
        assert_eq!(find_divider(&v, 10, 2).unwrap(), 37.5);
        assert_eq!(find_divider(&[0.0, 0.0, 10.0, 10.0], 2, 1).unwrap(), 3.75);
    }

    #[test]
    fn divider_degenerate_range() {
        assert!(matches!(find_divider(&[1.0; 6], 2, 1), Err(Error::DegenerateRange(_))));
        assert!(matches!(find_divider(&[1.0, 2.0], 2, 2), Err(Error::BadRank { .. })));
    }

    #[test]
    fn stats_small_example() {
        let s = score_stats(&[1.0, 1.0, 5.0], 1).unwrap();
        assert_eq!((s.q_left, s.q_right, s.median), (1.0, 5.0, 1.0));
        assert!((s.mean_f - 16.0 / 3.0).abs() < 1e-15);
        let s = score_stats(&[4.0, 1.0, 3.0, 2.0], 2).unwrap();
        assert_eq!((s.q_left, s.q_right, s.median), (2.0, 3.0, 2.0));
    }

    #[test]
    fn filter_frequencies_follow_scores() {
        let f = [0.0, 1.0, 3.0];
        let mut rng = rng_from_seed(7);
        let mut hits = [0usize; 3];
        let n = 40_000;
        for _ in 0..n {
            hits[filter_step(&f, &mut rng).unwrap()] += 1;
        }
        assert_eq!(hits[0], 0);
        let p2 = hits[2] as f64 / n as f64;
        assert!((p2 - 0.75).abs() < 0.01, "{p2}");
    }

    #[test]
    fn filter_rejects_zero_and_bad_scores() {
        let mut rng = rng_from_seed(1);
        assert!(matches!(filter_step(&[0.0, 0.0], &mut rng), Err(Error::AllZeroScores)));
        assert!(filter_step(&[1.0, f64::NAN], &mut rng).is_err());
        assert!(filter_step(&[1.0, -1.0], &mut rng).is_err());
    }
}
