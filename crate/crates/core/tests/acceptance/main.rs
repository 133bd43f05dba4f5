//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod lemmas;

use std::process::ExitCode;
use std::time::Instant;

use lifelong_mc::harness::experiment::{prepare, run_trial};
use lifelong_mc::linalg::incoherence;
use lifelong_mc::harness::{
    cmd_compare_mixture, cmd_run, cmd_sweep, Algorithm, GeneratorSpec, NoiseConfig, NoiseCount,
    RunConfig, SampleSpec,
};
use lifelong_mc::report::median;
use lifelong_mc::tracker::Decision;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

struct Verdict {
    passed: bool,
    detail: String,
}

fn within(limit_s: f64, start: Instant) -> (bool, f64) {
    let t = start.elapsed().as_secs_f64();
    (t <= limit_s, t)
}

fn gaussian_config(noise: NoiseConfig, trials: usize, out: &std::path::Path) -> RunConfig {
    RunConfig {
        algorithm: Algorithm::Exact,
        generator: GeneratorSpec::Gaussian { m: 50, n: 500, r: 5 },
        noise,
        d: SampleSpec::Auto,
        trials,
        seed: 1000,
        out: out.to_path_buf(),
        delta: 0.01,
        ..RunConfig::default()
    }
}

/// The sample count the incoherence formula asks for before clamping to `m`.
fn formula_d(cfg: &RunConfig) -> f64 {
    let prep = prepare(cfg, cfg.seed).expect("instance");
    let mu = incoherence(&prep.instance.basis).expect("non-empty basis");
    let r = prep.instance.rank as f64;
    (8.0 * mu * r * (r / cfg.delta).ln()).ceil()
}

fn noiseless_recovery(dir: &std::path::Path) -> Verdict {
    let start = Instant::now();
    let cfg = gaussian_config(NoiseConfig::None, 100, &dir.join("c1.csv"));
    let summary = cmd_run(&cfg).expect("run completes");
    let (fast, secs) = within(30.0, start);
    let d = summary.outcomes[0].d;
    Verdict {
        passed: summary.successes >= 95 && fast,
        detail: format!(
            "{}/100 exact recoveries at d = {d} (formula {} before clamping to m), {secs:.1} s",
            summary.successes,
            formula_d(&cfg)
        ),
    }
}

fn sparse_noise_recovery(dir: &std::path::Path) -> Verdict {
    let start = Instant::now();
    let cfg = gaussian_config(
        NoiseConfig::Sparse { s0: NoiseCount::Auto },
        100,
        &dir.join("c2.csv"),
    );
    let summary = cmd_run(&cfg).expect("run completes");
    let good = summary
        .outcomes
        .iter()
        .filter(|o| {
            o.error.is_none()
                && o.report.frob_rel_error.is_some_and(|e| e <= 1e-6)
                && o.report.recovered_rank == o.r
                && o.report.support_exact == Some(true)
        })
        .count();
    let (fast, secs) = within(60.0, start);
    let o = &summary.outcomes[0];
    Verdict {
        passed: good >= 90 && fast,
        detail: format!("{good}/100 with exact outliers (d = {}, s0 = {}), {secs:.1} s", o.d, o.s0),
    }
}

fn bounded_noise_bound() -> Verdict {
    let start = Instant::now();
    let (m, d, eps) = (100usize, 80usize, 0.6);
    let mut bound_ok = true;
    let mut worst_ratio: f64 = 0.0;
    let mut medians = Vec::new();
    let mut max_k = 0;
    let mut errors = 0;
    for c in [0.5, 1.0, 2.0] {
        let cfg = RunConfig {
            algorithm: Algorithm::Tracker,
            generator: GeneratorSpec::Cumulative { m },
            noise: NoiseConfig::Bounded { eps },
            d: SampleSpec::Fixed(d),
            eta_constant: c,
            ..RunConfig::default()
        };
        for t in 0..10 {
            let o = run_trial(&cfg, t, 2000 + t as u64);
            if o.error.is_some() {
                errors += 1;
                bound_ok = false;
                continue;
            }
            for row in o.columns.iter().filter(|r| r.decision == Decision::Represented) {
                let limit = 9.0 * (m as f64 / d as f64) * (row.k as f64 * eps).sqrt();
                let err = row.error.expect("truth is known");
                worst_ratio = worst_ratio.max(err / limit);
                if err > limit {
                    bound_ok = false;
                }
            }
            if c == 1.0 {
                medians.push(median(&o.report.per_column_error).unwrap());
                max_k = max_k.max(o.report.basis_size);
            }
        }
    }
    let worst_median = medians.iter().copied().fold(0.0, f64::max);
    let (fast, secs) = within(60.0, start);
    Verdict {
        passed: bound_ok && worst_median <= 1.0 && max_k <= 5 && fast,
        detail: format!(
            "max error/bound = {worst_ratio:.3}, worst median = {worst_median:.3}, max K = {max_k}, {errors} stream errors, {secs:.1} s"
        ),
    }
}

fn phase_transition(dir: &std::path::Path) -> Verdict {
    let start = Instant::now();
    let cfg = RunConfig {
        algorithm: Algorithm::Exact,
        generator: GeneratorSpec::Gaussian { m: 50, n: 500, r: 1 },
        noise: NoiseConfig::Sparse { s0: NoiseCount::Auto },
        trials: 10,
        seed: 3000,
        out: dir.join("c4.csv"),
        rank_ratios: (1..=10).map(|i| 0.04 * i as f64).collect(),
        sample_ratios: (1..=10).map(|j| 0.1 * j as f64).collect(),
        ..RunConfig::default()
    };
    let sweep = cmd_sweep(&cfg).expect("sweep completes");
    let mut violations = Vec::new();
    for row in sweep.cells.chunks(cfg.sample_ratios.len()) {
        let mut best: f64 = 0.0;
        for cell in row {
            if cell.fraction() < best - 0.1 - 1e-12 {
                violations.push(format!("r={} d={}", cell.r, cell.d));
            }
            best = best.max(cell.fraction());
        }
    }
    let boundary: Vec<String> = sweep
        .cells
        .chunks(cfg.sample_ratios.len())
        .map(|row| {
            row.iter()
                .find(|c| c.fraction() >= 0.5)
                .map(|c| format!("{}:{}", row[0].r, c.d))
                .unwrap_or_else(|| format!("{}:-", row[0].r))
        })
        .collect();
    let (fast, secs) = within(600.0, start);
    Verdict {
        passed: violations.is_empty() && fast,
        detail: format!(
            "{} monotonicity violations {violations:?}; r:first d with ≥0.5 success [{}], {secs:.1} s",
            violations.len(),
            boundary.join(" ")
        ),
    }
}

fn mixture_advantage(dir: &std::path::Path) -> Verdict {
    let start = Instant::now();
    let cfg = RunConfig {
        algorithm: Algorithm::Mixture,
        generator: GeneratorSpec::Mixture {
            m: 100,
            per_subspace: 20,
            h: 5,
            tau: 4,
        },
        trials: 50,
        seed: 4000,
        out: dir.join("c5.csv"),
        d_values: (1..=100).collect(),
        ..RunConfig::default()
    };
    let cmp = cmd_compare_mixture(&cfg).expect("comparison completes");
    let single = cmp.threshold(Algorithm::Exact, 0.9);
    let mixture = cmp.threshold(Algorithm::Mixture, 0.9);
    let ordered = match (mixture, single) {
        (Some(a), Some(b)) => a < b,
        (Some(_), None) => true,
        _ => false,
    };
    let (fast, secs) = within(900.0, start);
    Verdict {
        passed: ordered && fast,
        detail: format!("d at 0.9 success: sparse {mixture:?}, full span {single:?}, {secs:.1} s"),
    }
}

fn lemma_suites() -> Verdict {
    let start = Instant::now();
    let suites = [
        ("orth rank", lemmas::orth_rank(200)),
        ("subsampling rank", lemmas::subsampling_rank(500, 0.1)),
        ("angle propagation", lemmas::angle_propagation(100)),
        ("residual sandwich", lemmas::residual_sandwich(500, 0.1)),
        ("residual ratio", lemmas::residual_ratio(500, 0.1)),
        ("bernoulli size", lemmas::bernoulli_cardinality(500, 0.1)),
        ("gaussian full rank", lemmas::gaussian_full_rank(1000)),
    ];
    let passed = suites.iter().all(|(_, o)| o.passed);
    let detail = suites
        .iter()
        .map(|(name, o)| format!("{name} [{}] {}", if o.passed { "ok" } else { "FAIL" }, o.detail))
        .collect::<Vec<_>>()
        .join("; ");
    Verdict {
        passed,
        detail: format!("{detail}; {:.1} s", start.elapsed().as_secs_f64()),
    }
}

fn determinism(dir: &std::path::Path) -> Verdict {
    let read = |p: &std::path::Path| std::fs::read(p).expect("output exists");
    let mut same = true;
    let mut checked = Vec::new();

    for algorithm in [Algorithm::Exact, Algorithm::Tracker] {
        let mut cfg = match algorithm {
            Algorithm::Tracker => RunConfig {
                algorithm,
                generator: GeneratorSpec::Cumulative { m: 30 },
                noise: NoiseConfig::Bounded { eps: 0.1 },
                d: SampleSpec::Fixed(20),
                ..RunConfig::default()
            },
            _ => RunConfig {
                generator: GeneratorSpec::Gaussian { m: 30, n: 120, r: 3 },
                noise: NoiseConfig::Sparse { s0: NoiseCount::Auto },
                d: SampleSpec::Fixed(15),
                ..RunConfig::default()
            },
        };
        cfg.trials = 4;
        cfg.seed = 77;
        cfg.out = dir.join(format!("det_{}_a.csv", algorithm.name()));
        let a = cmd_run(&cfg).expect("run");
        cfg.out = dir.join(format!("det_{}_b.csv", algorithm.name()));
        let b = cmd_run(&cfg).expect("run");
        for (pa, pb) in a.written.iter().zip(&b.written) {
            same &= read(pa) == read(pb);
            checked.push(pa.file_name().unwrap().to_string_lossy().into_owned());
        }
    }

    let mut sweep = RunConfig {
        generator: GeneratorSpec::Gaussian { m: 20, n: 60, r: 1 },
        noise: NoiseConfig::Sparse { s0: NoiseCount::Auto },
        trials: 3,
        seed: 5,
        rank_ratios: vec![0.1, 0.2],
        sample_ratios: vec![0.3, 0.6, 1.0],
        out: dir.join("det_sweep_a.csv"),
        ..RunConfig::default()
    };
    cmd_sweep(&sweep).expect("sweep");
    sweep.out = dir.join("det_sweep_b.csv");
    cmd_sweep(&sweep).expect("sweep");
    same &= read(&dir.join("det_sweep_a.csv")) == read(&dir.join("det_sweep_b.csv"));
    checked.push("det_sweep_a.csv".into());

    Verdict {
        passed: same,
        detail: format!("byte-identical reruns of {}", checked.join(", ")),
    }
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let criteria: Vec<Criterion<'_>> = vec![
        ("1 noiseless exact recovery", Box::new(|| noiseless_recovery(dir.path()))),
        ("2 sparse-noise recovery with outlier identification", Box::new(|| sparse_noise_recovery(dir.path()))),
        ("3 bounded-noise error bound", Box::new(bounded_noise_bound)),
        ("4 phase-transition monotonicity", Box::new(|| phase_transition(dir.path()))),
        ("5 mixture sample-complexity advantage", Box::new(|| mixture_advantage(dir.path()))),
        ("6 lemma property suites", Box::new(lemma_suites)),
        ("7 deterministic output", Box::new(|| determinism(dir.path()))),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in &criteria {
        let id = name.split(' ').next().unwrap();
        if !only.is_empty() && !only.iter().any(|o| o == id) {
            continue;
        }
        let v = check();
        if !v.passed {
            failed += 1;
        }
        println!("{} criterion {name}: {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
