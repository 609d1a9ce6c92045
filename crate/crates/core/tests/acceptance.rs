//! Acceptance run: one PASS/FAIL line per criterion on stderr, then a single
//! assertion over all of them.

use std::io::Write;
use std::time::{Duration, Instant};

use listdec::cli::cmd_bench;
use listdec::datagen::{Dataset, GaussianParams};
use listdec::diagnostics::check_gaussian_quadratic_variance;
use listdec::estimator::{covariance_list_decoding, Estimate, EstimatorConfig};
use listdec::matlin::SymMatrix;
use listdec::scenarios::Scenario;
use listdec::sweeps::{
    structural_audit, sweep_certificate, sweep_closeness_norm, sweep_diff_frob_witness, sweep_divider_oracle,
    sweep_lifted_oracle, sweep_quadratic_variance, sweep_sigma_guarantee, SweepOutcome,
};

const SWEEP_SEED: u64 = 0;

struct Line {
    criterion: u8,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn emit(line: &Line) {
    // written straight to the handle so the harness does not swallow it
    let _ = writeln!(
        std::io::stderr(),
        "criterion {} {}: {} ({})",
        line.criterion,
        line.title,
        if line.pass { "PASS" } else { "FAIL" },
        line.detail
    );
}

fn summary(o: &SweepOutcome) -> String {
    let mut s = format!("{} {}/{}", o.name, o.passed, o.trials);
    if let Some(w) = o.worst {
        s.push_str(&format!(" worst {w:.3}"));
    }
    s
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

/// One seeded end-to-end run, kept for the structural audit.
struct Run {
    label: String,
    m: usize,
    config: EstimatorConfig,
    estimate: Estimate,
    rerun_identical: bool,
}

fn run_scenario(sc: Scenario, seed: u64) -> (Dataset, Run) {
    let ds = sc.dataset(seed).unwrap();
    let config = sc.estimator(seed);
    let estimate = covariance_list_decoding(ds.points(), &config).unwrap();
    let again = covariance_list_decoding(ds.points(), &config).unwrap();
    let rerun_identical = serde_json::to_string(&estimate).unwrap() == serde_json::to_string(&again).unwrap();
    let run = Run { label: format!("{} seed {seed}", sc.name()), m: ds.len(), config, estimate, rerun_identical };
    (ds, run)
}

fn exact_sweeps() -> Line {
    let (outs, took) = timed(|| {
        [
            sweep_certificate(500, SWEEP_SEED),
            sweep_sigma_guarantee(200, SWEEP_SEED),
            sweep_closeness_norm(200, SWEEP_SEED),
            sweep_diff_frob_witness(200, SWEEP_SEED),
        ]
        .map(Result::unwrap)
    });
    let all = outs.iter().all(|o| o.passed == o.trials);
    let fast = took < Duration::from_secs(30);
    let parts: Vec<String> = outs.iter().map(summary).collect();
    Line {
        criterion: 1,
        title: "exact inequality sweeps",
        pass: all && fast,
        detail: format!("{}; {:.1}s of 30s", parts.join(", "), took.as_secs_f64()),
    }
}

fn quadratic_variance() -> Line {
    let ((sweep, closed), took) = timed(|| {
        let sweep = sweep_quadratic_variance(50, SWEEP_SEED).unwrap();
        let d = 4;
        let a = SymMatrix::scaled_identity(d, 1.0 / (d as f64).sqrt());
        let closed = check_gaussian_quadratic_variance(&GaussianParams::standard(d), &a, 100_000, 1).unwrap();
        (sweep, closed)
    });
    let rel = (closed.mc_variance - 2.0).abs() / 2.0;
    let pass = sweep.ok() && sweep.passed * 100 >= 99 * sweep.trials && rel <= 0.03 && took < Duration::from_secs(20);
    Line {
        criterion: 2,
        title: "Gaussian quadratic-form variance",
        pass,
        detail: format!(
            "{}; isotropic case Var {:.4} (exact 2, off {:.2}%); {:.1}s of 20s",
            summary(&sweep),
            closed.mc_variance,
            100.0 * rel,
            took.as_secs_f64()
        ),
    }
}

fn divider_oracle() -> Line {
    let (o, took) = timed(|| sweep_divider_oracle(1000, SWEEP_SEED).unwrap());
    Line {
        criterion: 3,
        title: "divider oracle equivalence",
        pass: o.passed == o.trials && o.trials == 1000 && took < Duration::from_secs(5),
        detail: format!("{}; {:.2}s of 5s", summary(&o), took.as_secs_f64()),
    }
}

fn lifted_oracle() -> Line {
    let (o, took) = timed(|| sweep_lifted_oracle(100, SWEEP_SEED).unwrap());
    Line {
        criterion: 4,
        title: "lifted eigensolver oracle",
        pass: o.passed == o.trials && o.trials == 100 && took < Duration::from_secs(10),
        detail: format!("{}; {:.2}s of 10s", summary(&o), took.as_secs_f64()),
    }
}

fn end_to_end(runs: &mut Vec<Run>) -> Line {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for (sc, need) in [(Scenario::PureInliers, 19), (Scenario::TwoClusters, 19), (Scenario::MinorityInliers, 18)] {
        let mut ok = 0;
        let mut misses = Vec::new();
        for seed in 0..20 {
            let (ds, run) = run_scenario(sc, seed);
            let out = sc.check(&ds, &run.estimate.hypotheses).unwrap();
            if out.pass {
                ok += 1;
            } else {
                misses.push(format!("seed {seed}: {}", out.detail));
            }
            runs.push(run);
        }
        pass &= ok >= need;
        let mut p = format!("{} {ok}/20 (need {need})", sc.name());
        if !misses.is_empty() {
            p.push_str(&format!(" [{}]", misses.join("; ")));
        }
        parts.push(p);
    }
    let took = start.elapsed();
    pass &= took < Duration::from_secs(600);
    Line {
        criterion: 5,
        title: "calibrated end-to-end scenarios",
        pass,
        detail: format!("{}; {:.1}s of 600s", parts.join(", "), took.as_secs_f64()),
    }
}

fn removal_budget(runs: &mut Vec<Run>) -> Line {
    let sc = Scenario::TwoClusters;
    let mut within = 0;
    let mut worst = 0.0_f64;
    for seed in 0..50 {
        let (ds, run) = run_scenario(sc, seed);
        let removed = Scenario::inliers_removed(&ds, &run.estimate.trace) as f64;
        let budget = 0.01 * sc.alpha() * ds.counts[0].surviving() as f64;
        if removed <= budget {
            within += 1;
        }
        worst = worst.max(removed / budget);
        runs.push(run);
    }
    Line {
        criterion: 6,
        title: "inlier removal budget",
        pass: within >= 48,
        detail: format!("{within}/50 runs within budget (need 48), worst {:.2} of budget", worst),
    }
}

fn structural(runs: &[Run]) -> Line {
    let mut bad = Vec::new();
    for r in runs {
        if let Err(e) = structural_audit(r.m, &r.config, &r.estimate) {
            bad.push(format!("{}: {e}", r.label));
        }
        if !r.rerun_identical {
            bad.push(format!("{}: rerun differs", r.label));
        }
    }
    let deepest = runs.iter().map(|r| r.estimate.trace.depth()).max().unwrap_or(0);
    Line {
        criterion: 7,
        title: "structural invariants",
        pass: bad.is_empty() && !runs.is_empty(),
        detail: if bad.is_empty() {
            format!("{} runs audited and rerun bit-identically, deepest trace {deepest}", runs.len())
        } else {
            bad.join("; ")
        },
    }
}

fn loop_scaling() -> Line {
    let by_m = cmd_bench(&[4], &[1000, 4000], 0, 9, 100).unwrap();
    let by_d = cmd_bench(&[4, 16], &[2000], 0, 9, 100).unwrap();
    let rm = by_m[1].loop_ms / by_m[0].loop_ms;
    let rd = by_d[1].loop_ms / by_d[0].loop_ms;
    Line {
        criterion: 8,
        title: "per-loop cost scaling",
        pass: (2.5..=6.0).contains(&rm) && (8.0..=32.0).contains(&rd),
        detail: format!(
            "4x m: {:.3} -> {:.3} ms, ratio {rm:.2} in [2.5, 6]; 4x d: {:.3} -> {:.3} ms, ratio {rd:.2} in [8, 32]",
            by_m[0].loop_ms, by_m[1].loop_ms, by_d[0].loop_ms, by_d[1].loop_ms
        ),
    }
}

fn gmm_mode(runs: &mut Vec<Run>) -> Line {
    let sc = Scenario::GmmPair;
    let mut ok = 0;
    let mut misses = Vec::new();
    for seed in 0..20 {
        let (ds, run) = run_scenario(sc, seed);
        let out = sc.check(&ds, &run.estimate.hypotheses).unwrap();
        if out.pass {
            ok += 1;
        } else {
            misses.push(format!("seed {seed}: {}", out.detail));
        }
        runs.push(run);
    }
    let mut detail = format!("{ok}/20 seeds with every component matched and list size <= 2 (need 18)");
    if !misses.is_empty() {
        detail.push_str(&format!(" [{}]", misses.join("; ")));
    }
    Line { criterion: 9, title: "mixture clustering", pass: ok >= 18, detail }
}

#[test]
fn acceptance_criteria() {
    let mut runs = Vec::new();
    let mut lines = vec![exact_sweeps(), quadratic_variance(), divider_oracle(), lifted_oracle()];
    lines.push(end_to_end(&mut runs));
    lines.push(removal_budget(&mut runs));
    lines.push(loop_scaling());
    lines.push(gmm_mode(&mut runs));
    // the audit covers every run above, so it goes last and is reported in place
    lines.insert(6, structural(&runs));
    for l in &lines {
        emit(l);
    }
    let failed: Vec<u8> = lines.iter().filter(|l| !l.pass).map(|l| l.criterion).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
