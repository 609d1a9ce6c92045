//! Desk-scale calibration of the spread bound `R_eff` and the termination
//! threshold. Seeds start at 1000 so the acceptance seeds (0..50) stay unseen.
//!
//!   cargo run --release --example calibrate -- sweep [runs]
//!   cargo run --release --example calibrate -- detail R T [runs] [scenario...]
//!
//! `sweep` scores every (R, T) pair of the grid on every scenario and prints
//! pass counts, the worst inlier-removal count of the two-cluster runs and the
//! largest relative Frobenius error of the matched inlier hypothesis.

use std::sync::Mutex;
use std::time::Instant;

use listdec::diagnostics::gmm_cluster_metrics;
use listdec::estimator::{covariance_list_decoding, effective_constants, Termination};
use listdec::scenarios::{Scenario, ALL_SCENARIOS};

const SEED_BASE: u64 = 1000;
const R_GRID: [f64; 5] = [3.0, 4.0, 5.0, 6.0, 6.5];
const T_GRID: [f64; 5] = [4.0, 5.0, 6.0, 8.0, 10.0];

struct RunStats {
    pass: bool,
    inliers_removed: usize,
    rel_frob: f64,
    ms: u128,
}

fn run(sc: Scenario, seed: u64, r: f64, t: f64, verbose: bool) -> listdec::Result<RunStats> {
    let ds = sc.dataset(seed)?;
    let mut cfg = sc.estimator(seed);
    let base = effective_constants(&cfg, ds.len());
    cfg.r_scale = Some(r / base.r_paper);
    cfg.thresh_scale = Some(t / base.threshold_paper);
    let start = Instant::now();
    let est = covariance_list_decoding(ds.points(), &cfg)?;
    let ms = start.elapsed().as_millis();
    let outcome = sc.check(&ds, &est.hypotheses)?;
    let rep = gmm_cluster_metrics(&ds, &est.hypotheses)?;
    let stats = RunStats {
        pass: outcome.pass,
        inliers_removed: Scenario::inliers_removed(&ds, &est.trace),
        rel_frob: rep.rel_frob_error.unwrap_or(f64::INFINITY),
        ms,
    };
    if verbose {
        println!(
            "seed {seed}: {} {} | sizes {:?} splits {} removed {} (inliers {}) depth {} loops {} {} ms",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail,
            rep.hypothesis_sizes,
            est.trace.split_count(),
            est.trace.removed_indices().len(),
            stats.inliers_removed,
            est.trace.depth(),
            est.trace.loop_count(),
            ms
        );
        for n in &est.trace.nodes {
            let kind = match &n.termination {
                Termination::Certificate { .. } => "cert".to_string(),
                Termination::TooSmall { discarded } => format!("small({})", discarded.len()),
                Termination::Split { tau, left_size, right_size, .. } => format!("split tau={tau:.3} {left_size}/{right_size}"),
            };
            match (n.loops.first(), n.loops.last()) {
                (Some(f), Some(l)) => println!(
                    "    {:>6} in {:>5} out {:>5} loops {:>4} first meanf {:>9.3} spread {:>8.3} | last meanf {:>8.3} spread {:>8.3} lam {:>7.3} it {} -> {kind}",
                    n.id.to_string(),
                    n.input_size,
                    n.final_size,
                    n.loops.len(),
                    f.stats.mean_f,
                    f.stats.spread(),
                    l.stats.mean_f,
                    l.stats.spread(),
                    l.eigenvalue,
                    l.eig_iterations,
                ),
                _ => println!("    {:>6} in {:>5} -> {kind}", n.id.to_string(), n.input_size),
            }
        }
    }
    Ok(stats)
}

fn parallel_runs(sc: Scenario, runs: u64, r: f64, t: f64) -> Vec<RunStats> {
    let results = Mutex::new(Vec::new());
    let next = Mutex::new(0u64);
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let k = {
                    let mut n = next.lock().unwrap();
                    if *n >= runs {
                        break;
                    }
                    *n += 1;
                    *n - 1
                };
                let stats = run(sc, SEED_BASE + k, r, t, false).unwrap_or(RunStats {
                    pass: false,
                    inliers_removed: usize::MAX,
                    rel_frob: f64::INFINITY,
                    ms: 0,
                });
                results.lock().unwrap().push(stats);
            });
        }
    });
    results.into_inner().unwrap()
}

fn main() -> listdec::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.first().map(String::as_str) {
        Some("sweep") => {
            let runs: u64 = args.get(1).map_or(20, |s| s.parse().expect("runs"));
            println!("{:>5} {:>5} | {}", "R", "T", ALL_SCENARIOS.map(|s| format!("{:>16}", s.name())).join(" "));
            for r in R_GRID {
                for t in T_GRID {
                    let cells: Vec<String> = ALL_SCENARIOS
                        .iter()
                        .map(|&sc| {
                            let res = parallel_runs(sc, runs, r, t);
                            let pass = res.iter().filter(|s| s.pass).count();
                            let worst_rm = res.iter().map(|s| s.inliers_removed).max().unwrap_or(0);
                            let worst_err = res.iter().map(|s| s.rel_frob).fold(0.0, f64::max);
                            let ms = res.iter().map(|s| s.ms).max().unwrap_or(0);
                            format!("{pass:>2}/{runs} rm{worst_rm:<3} e{worst_err:.2} {ms}ms")
                        })
                        .collect();
                    println!("{r:>5} {t:>5} | {}", cells.join(" | "));
                }
            }
        }
        Some("detail") => {
            let r: f64 = args.get(1).expect("R").parse().expect("R");
            let t: f64 = args.get(2).expect("T").parse().expect("T");
            let runs: u64 = args.get(3).map_or(5, |s| s.parse().expect("runs"));
            let picked: Vec<Scenario> = if args.len() > 4 {
                ALL_SCENARIOS.into_iter().filter(|s| args[4..].iter().any(|a| a == s.name())).collect()
            } else {
                ALL_SCENARIOS.to_vec()
            };
            for sc in picked {
                println!("== {}", sc.name());
                for k in 0..runs {
                    run(sc, SEED_BASE + k, r, t, true)?;
                }
            }
        }
        _ => eprintln!("usage: calibrate sweep [runs] | detail R T [runs] [scenario...]"),
    }
    Ok(())
}
