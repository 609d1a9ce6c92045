use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matlin::{DEFAULT_LIFTED_REL_TOL, DEFAULT_RANK_TOL_REL};

/// Quantile spread `R_eff` fixed by the desk-scale calibration run.
pub const CALIBRATED_R: f64 = 5.0;
/// Termination threshold on the mean score fixed by the desk-scale calibration run.
pub const CALIBRATED_THRESHOLD: f64 = 6.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantMode {
    /// `C = 6000√C₁ + 1`, `C′ = 720/ε₀ + 1`, no rescaling.
    PaperFaithful,
    /// Paper formulas times `r_scale` and `thresh_scale`.
    #[default]
    Calibrated,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileIndexMode {
    /// `m₁ = ⌊α m / 9⌋` with `m` the size of the root input.
    #[default]
    RootM,
    /// `m₁ = ⌊α |T_t| / 9⌋` with `T_t` the current working set.
    CurrentT,
}

/// Support-size parameter `n′` handed to the divider.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DividerBudget {
    /// `n′ = m₁`, one argument shared by both roles.
    #[default]
    QuantileRank,
    /// `n′ = ⌈α m / 2⌉`, a lower bound on the surviving inlier count.
    HalfAlphaM,
}

fn default_delta() -> f64 {
    0.05
}
fn default_c1() -> f64 {
    8.0
}
fn default_eps0() -> f64 {
    0.01
}
fn default_rank_tol() -> f64 {
    DEFAULT_RANK_TOL_REL
}
fn default_min_output_frac() -> f64 {
    0.5
}
fn default_lifted_max_iters() -> usize {
    500
}
fn default_lifted_rel_tol() -> f64 {
    DEFAULT_LIFTED_REL_TOL
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Guaranteed inlier fraction, in `(0, 1/2]`.
    pub alpha: f64,
    /// Failure probability budget, in `(0, 1/2)`. Recorded, not used by the loop.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Fourth-moment constant of the inlier distribution.
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    #[serde(default)]
    pub constant_mode: ConstantMode,
    /// Multiplier on `R` in calibrated mode. `None` pins `R_eff` to [`CALIBRATED_R`].
    #[serde(default)]
    pub r_scale: Option<f64>,
    /// Multiplier on `C′R²/α³` in calibrated mode. `None` pins the threshold to [`CALIBRATED_THRESHOLD`].
    #[serde(default)]
    pub thresh_scale: Option<f64>,
    #[serde(default)]
    pub quantile_index_mode: QuantileIndexMode,
    #[serde(default)]
    pub divider_budget: DividerBudget,
    #[serde(default = "default_rank_tol")]
    pub rank_tol_rel: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub max_depth_override: Option<usize>,
    #[serde(default = "default_min_output_frac")]
    pub min_output_frac: f64,
    #[serde(default = "default_lifted_max_iters")]
    pub lifted_max_iters: usize,
    #[serde(default = "default_lifted_rel_tol")]
    pub lifted_rel_tol: f64,
}

impl EstimatorConfig {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            delta: default_delta(),
            c1: default_c1(),
            eps0: default_eps0(),
            constant_mode: ConstantMode::default(),
            r_scale: None,
            thresh_scale: None,
            quantile_index_mode: QuantileIndexMode::default(),
            divider_budget: DividerBudget::default(),
            rank_tol_rel: default_rank_tol(),
            seed: 0,
            max_depth_override: None,
            min_output_frac: default_min_output_frac(),
            lifted_max_iters: default_lifted_max_iters(),
            lifted_rel_tol: default_lifted_rel_tol(),
        }
    }

    pub fn paper_faithful(alpha: f64) -> Self {
        Self { constant_mode: ConstantMode::PaperFaithful, ..Self::new(alpha) }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.alpha > 0.0 && self.alpha <= 0.5) {
            return bad(format!("alpha = {} outside (0, 1/2]", self.alpha));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return bad(format!("delta = {} outside (0, 1/2)", self.delta));
        }
        if !(self.c1.is_finite() && self.c1 > 0.0) {
            return bad(format!("c1 = {} must be positive", self.c1));
        }
        if !(self.eps0 > 0.0 && self.eps0 * self.alpha < 1.0) {
            return bad(format!("eps0 = {} must be positive with eps0 alpha < 1", self.eps0));
        }
        if !(self.rank_tol_rel > 0.0 && self.rank_tol_rel < 1e-2) {
            return bad(format!("rank_tol_rel = {} outside (0, 1e-2)", self.rank_tol_rel));
        }
        if !(self.min_output_frac > 0.0 && self.min_output_frac <= 1.0) {
            return bad(format!("min_output_frac = {} outside (0, 1]", self.min_output_frac));
        }
        if self.lifted_max_iters == 0 || !(self.lifted_rel_tol > 0.0) {
            return bad("lifted eigensolver needs max_iters >= 1 and rel_tol > 0".into());
        }
        for (name, s) in [("r_scale", self.r_scale), ("thresh_scale", self.thresh_scale)] {
            match (self.constant_mode, s) {
                (_, Some(v)) if !(v.is_finite() && v > 0.0) => return bad(format!("{name} = {v} must be positive")),
                (ConstantMode::PaperFaithful, Some(v)) if v != 1.0 => {
                    return bad(format!("{name} must be 1 in paper_faithful mode"));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Loop constants for one run, derived from the config and the root size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveConstants {
    /// Quantile spread below which the loop filters instead of splitting.
    pub r_eff: f64,
    /// Mean-score level at or below which the loop terminates.
    pub threshold_eff: f64,
    /// Quantile rank `m₁` for the root set.
    pub m1: usize,
    /// Divider support size `n′`.
    pub n_prime: usize,
    pub max_depth: usize,
    /// Unscaled `R = C (1/α²) ln(1/(ε₀ α))`.
    pub r_paper: f64,
    /// Unscaled `C′ R² / α³`.
    pub threshold_paper: f64,
}

/// `⌊x⌋` tolerant of representation error just below an integer.
fn floor_tol(x: f64) -> usize {
    (x + 1e-9).floor().max(0.0) as usize
}

pub fn quantile_rank(alpha: f64, size: usize) -> usize {
    floor_tol(alpha * size as f64 / 9.0).max(1)
}

pub fn effective_constants(config: &EstimatorConfig, m: usize) -> EffectiveConstants {
    let alpha = config.alpha;
    let c = 6000.0 * config.c1.sqrt() + 1.0;
    let c_prime = 720.0 / config.eps0 + 1.0;
    let r_paper = c / (alpha * alpha) * (1.0 / (config.eps0 * alpha)).ln();
    let threshold_paper = c_prime * r_paper * r_paper / alpha.powi(3);
    let (r_eff, threshold_eff) = match config.constant_mode {
        ConstantMode::PaperFaithful => (r_paper, threshold_paper),
        ConstantMode::Calibrated => (
            config.r_scale.map_or(CALIBRATED_R, |s| s * r_paper),
            config.thresh_scale.map_or(CALIBRATED_THRESHOLD, |s| s * threshold_paper),
        ),
    };
    let m1 = quantile_rank(alpha, m);
    let n_prime = match config.divider_budget {
        DividerBudget::QuantileRank => m1,
        DividerBudget::HalfAlphaM => ((alpha * m as f64 / 2.0) - 1e-9).ceil().max(1.0) as usize,
    };
    let max_depth = config.max_depth_override.unwrap_or(((9.0 / alpha) - 1e-9).ceil() as usize + 1);
    EffectiveConstants { r_eff, threshold_eff, m1, n_prime, max_depth, r_paper, threshold_paper }
}
