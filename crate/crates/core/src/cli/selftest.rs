use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::parallel_map;
use crate::rng::derive_seed;
use crate::sweeps::{registry, sweep_known_bad, Suite, SweepOutcome, SweepSpec};

pub const SELFTEST_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub outcome: SweepOutcome,
    /// Set when the sweep could not run at all.
    pub error: Option<String>,
    pub passed: bool,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub schema_version: u32,
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<CheckLine>,
    pub seconds: f64,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }
}

fn format_line(c: &CheckLine) -> String {
    let o = &c.outcome;
    let mut s = format!(
        "{} {:<45} {}/{} passed (need {})",
        if c.passed { "PASS" } else { "FAIL" },
        o.name,
        o.passed,
        o.trials,
        o.required
    );
    if let Some(w) = o.worst {
        s.push_str(&format!(" worst={w:.3}"));
    }
    s.push_str(&format!(" [{:.1}s]", c.seconds));
    if let Some(e) = &c.error {
        s.push_str(&format!(" error: {e}"));
    } else if !c.passed && !o.note.is_empty() {
        s.push_str(&format!(" first failure: {}", o.note));
    }
    s
}

/// Runs every registered sweep at the suite's counts. Sweep `k` gets seed
/// `derive_seed(seed, k)`. `emit` receives one line per check, in registry
/// order, then a summary line.
pub fn cmd_selftest(
    suite: Suite,
    seed: u64,
    filter: Option<&str>,
    inject_failure: bool,
    mut emit: impl FnMut(&str),
) -> SelftestReport {
    let start = Instant::now();
    let mut specs: Vec<(u64, SweepSpec)> = registry()
        .into_iter()
        .enumerate()
        .map(|(k, s)| (derive_seed(seed, k as u64), s))
        .filter(|(_, s)| filter.is_none_or(|f| s.name.contains(f)))
        .collect();
    if inject_failure {
        specs.push((seed, SweepSpec { name: "harness.known_bad", fast: 1, full: 1, run: sweep_known_bad }));
    }
    let checks = parallel_map(&specs, |(s, spec)| {
        let t = Instant::now();
        let count = spec.count(suite);
        let (outcome, error) = match (spec.run)(count, *s) {
            Ok(o) => (o, None),
            Err(e) => (
                SweepOutcome { name: spec.name.into(), trials: count, passed: 0, required: count, worst: None, note: String::new() },
                Some(e.to_string()),
            ),
        };
        let passed = error.is_none() && outcome.ok();
        CheckLine { outcome, error, passed, seconds: t.elapsed().as_secs_f64() }
    });
    for c in &checks {
        emit(&format_line(c));
    }
    let report = SelftestReport { schema_version: SELFTEST_SCHEMA_VERSION, suite, seed, checks, seconds: start.elapsed().as_secs_f64() };
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    emit(&format!(
        "{} checks, {} failed, {:.1}s",
        report.checks.len(),
        failed,
        report.seconds
    ));
    report
}
