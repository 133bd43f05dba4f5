//! Trial execution, sweeps and CSV reporting.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::config::{Algorithm, GeneratorSpec, NoiseConfig, NoiseCount, RunConfig, SampleSpec};
use crate::datagen::{
    apply_noise, gen_cumulative, gen_gaussian_lowrank, gen_lower_bound, gen_mixture, Instance,
    InstanceMeta, NoisePositions, NoiseSpec,
};
use crate::error::{Error, Result};
use crate::exact::{run_exact, ExactConfig, ExactTruth};
use crate::linalg::{incoherence, orthonormalize};
use crate::matrix_io::{load_matrix, save_matrix};
use crate::report::{metric_success, RunReport};
use crate::sampling::derive_seed;
use crate::tracker::{error_scale, run_stream, Decision, TrackerConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "LIFELONG_MC_THREADS";

/// Per-column trace of a tracker run.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnRow {
    pub t: usize,
    pub decision: Decision,
    /// Basis size when the column arrived.
    pub k: usize,
    pub residual: f64,
    pub threshold: f64,
    pub error: Option<f64>,
    /// `(m/d)·√(k·ε)`.
    pub bound: f64,
}

#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub r: usize,
    pub d: usize,
    pub s0: usize,
    pub success: bool,
    pub report: RunReport,
    pub error: Option<String>,
    pub columns: Vec<ColumnRow>,
}

/// A generated (or loaded) instance with its resolved sample count.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub instance: Instance,
    pub d: usize,
    pub s0: usize,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn clean_instance(cfg: &RunConfig, seed: u64) -> Result<Instance> {
    match &cfg.generator {
        GeneratorSpec::Gaussian { m, n, r } => gen_gaussian_lowrank(*m, *n, *r, seed),
        GeneratorSpec::Cumulative { m } => gen_cumulative(*m, seed),
        GeneratorSpec::Mixture { m, per_subspace, h, tau } => gen_mixture(*m, *per_subspace, *h, *tau, seed),
        GeneratorSpec::LowerBound { m, mu0, r, b_values } => gen_lower_bound(*m, *mu0, *r, b_values, seed),
        GeneratorSpec::File { observed, clean, r } => {
            let observed_m = load_matrix(observed)?;
            let clean_m = match clean {
                Some(p) => load_matrix(p)?,
                None => observed_m.clone(),
            };
            if (clean_m.rows(), clean_m.cols()) != (observed_m.rows(), observed_m.cols()) {
                return Err(Error::DimensionMismatch("clean and observed files differ in shape".into()));
            }
            let noise_support = (0..observed_m.cols())
                .filter(|&t| observed_m.column(t) != clean_m.column(t))
                .collect();
            Ok(Instance {
                basis: orthonormalize(&clean_m),
                clean: clean_m,
                observed: observed_m,
                noise_support,
                rank: *r,
                membership: None,
                meta: InstanceMeta {
                    generator: "file".into(),
                    params: vec![("observed_file".into(), observed.display().to_string())],
                    seed,
                },
            })
        }
    }
}

/// `⌊ratio·m⌋`, guarded against representation error in the product.
pub fn ratio_count(ratio: f64, m: usize) -> usize {
    (ratio * m as f64 + 1e-9).floor() as usize
}

/// `⌈8·μ₀·r·ln(r/δ)⌉`, capped at `m`.
pub fn auto_sample_count(mu0: f64, r: usize, delta: f64, m: usize) -> usize {
    let d = (8.0 * mu0 * r as f64 * (r as f64 / delta).ln()).ceil();
    (d.max(1.0) as usize).min(m)
}

fn resolve_d(cfg: &RunConfig, inst: &Instance) -> Result<usize> {
    let m = inst.m();
    let d = match cfg.d {
        SampleSpec::Fixed(d) => d,
        SampleSpec::Ratio(x) => ratio_count(x, m),
        SampleSpec::Auto => {
            if inst.basis.cols() == 0 {
                m
            } else {
                auto_sample_count(incoherence(&inst.basis)?, inst.rank, cfg.delta, m)
            }
        }
    };
    if d == 0 || d > m {
        return Err(invalid(format!("sample count d = {d} must lie in [1, {m}]")));
    }
    Ok(d)
}

/// Builds the instance of one trial: generator stream `[0]`, noise `[1]`.
pub fn prepare(cfg: &RunConfig, seed: u64) -> Result<Prepared> {
    let inst = clean_instance(cfg, derive_seed(seed, &[0]))?;
    let d = resolve_d(cfg, &inst)?;
    let (spec, s0) = match cfg.noise {
        NoiseConfig::None => (NoiseSpec::None, 0),
        NoiseConfig::Bounded { eps } => (NoiseSpec::Bounded { eps }, 0),
        NoiseConfig::Sparse { s0 } => {
            let s = match s0 {
                NoiseCount::Fixed(s) => s,
                NoiseCount::Auto => d.saturating_sub(inst.rank + 1),
            };
            (
                NoiseSpec::SparseColumns {
                    s0: s,
                    positions: NoisePositions::Random,
                },
                s,
            )
        }
    };
    let instance = match (&cfg.generator, &spec) {
        (_, NoiseSpec::None) => inst,
        (GeneratorSpec::File { .. }, _) => {
            return Err(invalid("file instances carry their own noise; set noise = none"));
        }
        _ => apply_noise(&inst, &spec, derive_seed(seed, &[1]))?,
    };
    Ok(Prepared { instance, d, s0 })
}

/// Runs `algorithm` on a prepared instance with algorithm stream `[2]`.
pub fn execute(cfg: &RunConfig, algorithm: Algorithm, prep: &Prepared, trial: usize, seed: u64) -> TrialOutcome {
    let inst = &prep.instance;
    let algo_seed = derive_seed(seed, &[2]);
    let mut outcome = TrialOutcome {
        trial,
        seed,
        algorithm,
        r: inst.rank,
        d: prep.d,
        s0: prep.s0,
        success: false,
        report: RunReport::default(),
        error: None,
        columns: Vec::new(),
    };
    match algorithm {
        Algorithm::Tracker => {
            let eps = match cfg.noise {
                NoiseConfig::Bounded { eps } => eps,
                _ => 0.0,
            };
            let tc = TrackerConfig {
                eta_constant: cfg.eta_constant,
                with_replacement: cfg.with_replacement,
                zero_tol: cfg.zero_tol,
                normalization: cfg.normalization,
                ..TrackerConfig::new(prep.d, eps, algo_seed)
            };
            let run = match run_stream(&inst.observed, &tc, Some(&inst.clean)) {
                Ok(run) => run,
                Err(f) => {
                    outcome.error = Some(f.to_string());
                    *f.partial
                }
            };
            let m = inst.m();
            outcome.columns = run
                .log
                .iter()
                .enumerate()
                .map(|(t, rec)| ColumnRow {
                    t,
                    decision: rec.decision,
                    k: rec.basis_size,
                    residual: rec.residual,
                    threshold: rec.threshold,
                    error: run.report.per_column_error.get(t).copied(),
                    bound: error_scale(rec.basis_size, eps, m, prep.d),
                })
                .collect();
            outcome.report = run.report;
            // the tracker never labels outliers
            outcome.report.support_exact = Some(inst.noise_support.is_empty());
        }
        Algorithm::Exact | Algorithm::Mixture => {
            let tau = match algorithm {
                Algorithm::Mixture => cfg.effective_tau(),
                _ => None,
            };
            let ec = ExactConfig {
                d: prep.d,
                zero_tol: cfg.zero_tol,
                tau,
                seed: algo_seed,
                combination_cap: cfg.combination_cap,
            };
            let truth = ExactTruth {
                clean: &inst.clean,
                noise_support: &inst.noise_support,
            };
            outcome.report = match run_exact(&inst.observed, &ec, Some(truth)) {
                Ok(run) => run.report,
                Err(f) => {
                    outcome.error = Some(f.to_string());
                    f.partial.report
                }
            };
        }
    }
    outcome.success = outcome.error.is_none() && metric_success(&outcome.report, inst.rank);
    outcome
}

/// One complete trial; preparation errors become a failed outcome.
pub fn run_trial(cfg: &RunConfig, trial: usize, seed: u64) -> TrialOutcome {
    match prepare(cfg, seed) {
        Ok(prep) => execute(cfg, cfg.algorithm, &prep, trial, seed),
        Err(e) => failed(cfg.algorithm, trial, seed, e.to_string()),
    }
}

fn failed(algorithm: Algorithm, trial: usize, seed: u64, e: String) -> TrialOutcome {
    TrialOutcome {
        trial,
        seed,
        algorithm,
        r: 0,
        d: 0,
        s0: 0,
        success: false,
        report: RunReport::default(),
        error: Some(e),
        columns: Vec::new(),
    }
}

/// Thread pool honouring [`THREADS_ENV`].
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| invalid(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| invalid(e.to_string()))
}

fn fmt_f(x: f64) -> String {
    format!("{x:e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

/// CSV text: `#` comment lines with the command and configuration, then a
/// header row and data rows. Output paths are left out of the comments so
/// the same run writes the same bytes wherever it is written.
fn render_csv(command: &str, cfg: &RunConfig, header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(format!("# lifelong-mc {command}\n# schema_version = {SCHEMA_VERSION}\n").as_bytes());
    for (k, v) in cfg.entries() {
        if k != "out" {
            out.extend_from_slice(format!("# {k} = {v}\n").as_bytes());
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

/// `<out>` with `suffix` appended to the file name.
pub fn sibling_path(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Path of the per-column trace written next to a tracker run.
pub fn columns_path(out: &Path) -> PathBuf {
    out.with_extension("columns.csv")
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub outcomes: Vec<TrialOutcome>,
    pub successes: usize,
    pub wall_time: f64,
    pub written: Vec<PathBuf>,
}

const RUN_HEADER: &[&str] = &[
    "schema_version",
    "row",
    "trial",
    "seed",
    "algorithm",
    "m",
    "n",
    "r",
    "d",
    "s0",
    "trials",
    "successes",
    "frob_error",
    "frob_rel_error",
    "recovered_rank",
    "basis_size",
    "columns_processed",
    "support_exact",
    "entries_sampled",
    "median_column_error",
    "max_column_error",
    "error",
];

/// Generator dimensions `(m, n)` of a configuration, when known upfront.
fn dims(cfg: &RunConfig) -> (String, String) {
    match &cfg.generator {
        GeneratorSpec::Gaussian { m, n, .. } => (m.to_string(), n.to_string()),
        GeneratorSpec::Cumulative { m } => (m.to_string(), "2000".into()),
        GeneratorSpec::Mixture { m, per_subspace, h, .. } => (m.to_string(), (per_subspace * h).to_string()),
        GeneratorSpec::LowerBound { m, .. } => (m.to_string(), m.to_string()),
        GeneratorSpec::File { .. } => (String::new(), String::new()),
    }
}

/// Runs `trials` trials with seeds `seed, seed+1, …` and writes the CSV
/// (one row per trial plus an aggregate row) to `cfg.out`.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    // surface configuration errors before any work is scheduled
    prepare(cfg, cfg.seed)?;
    let start = Instant::now();
    let pool = thread_pool()?;
    let outcomes: Vec<TrialOutcome> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, t, cfg.seed.wrapping_add(t as u64)))
            .collect()
    });
    let successes = outcomes.iter().filter(|o| o.success).count();
    let (m, n) = dims(cfg);
    let mut rows: Vec<Vec<String>> = outcomes
        .iter()
        .map(|o| {
            let rep = &o.report;
            vec![
                SCHEMA_VERSION.to_string(),
                "trial".into(),
                o.trial.to_string(),
                o.seed.to_string(),
                o.algorithm.name().into(),
                m.clone(),
                n.clone(),
                o.r.to_string(),
                o.d.to_string(),
                o.s0.to_string(),
                "1".into(),
                u8::from(o.success).to_string(),
                fmt_opt(rep.frob_error),
                fmt_opt(rep.frob_rel_error),
                rep.recovered_rank.to_string(),
                rep.basis_size.to_string(),
                rep.columns_processed.to_string(),
                rep.support_exact.map(|b| b.to_string()).unwrap_or_default(),
                rep.entries_sampled.to_string(),
                fmt_opt(rep.median_column_error()),
                fmt_opt(rep.max_column_error()),
                o.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    let mut aggregate = vec![String::new(); RUN_HEADER.len()];
    aggregate[0] = SCHEMA_VERSION.to_string();
    aggregate[1] = "aggregate".into();
    aggregate[3] = cfg.seed.to_string();
    aggregate[4] = cfg.algorithm.name().into();
    aggregate[5] = m;
    aggregate[6] = n;
    aggregate[10] = cfg.trials.to_string();
    aggregate[11] = successes.to_string();
    rows.push(aggregate);

    let mut written = vec![cfg.out.clone()];
    write_file(&cfg.out, &render_csv("run", cfg, RUN_HEADER, &rows)?)?;
    if cfg.algorithm == Algorithm::Tracker {
        let header = ["schema_version", "trial", "t", "decision", "k", "residual", "threshold", "error", "bound", "bound9"];
        let col_rows: Vec<Vec<String>> = outcomes
            .iter()
            .flat_map(|o| {
                o.columns.iter().map(move |c| {
                    vec![
                        SCHEMA_VERSION.to_string(),
                        o.trial.to_string(),
                        c.t.to_string(),
                        match c.decision {
                            Decision::Absorbed => "absorbed".into(),
                            Decision::Represented => "represented".into(),
                        },
                        c.k.to_string(),
                        fmt_f(c.residual),
                        fmt_f(c.threshold),
                        fmt_opt(c.error),
                        fmt_f(c.bound),
                        fmt_f(9.0 * c.bound),
                    ]
                })
            })
            .collect();
        let path = columns_path(&cfg.out);
        write_file(&path, &render_csv("run", cfg, &header, &col_rows)?)?;
        written.push(path);
    }
    Ok(RunSummary {
        outcomes,
        successes,
        wall_time: start.elapsed().as_secs_f64(),
        written,
    })
}

/// The `(r/m, d/m)` grid of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub rank_ratios: Vec<f64>,
    pub sample_ratios: Vec<f64>,
    pub m: usize,
    pub n: usize,
    pub trials_per_cell: usize,
}

impl SweepGrid {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let GeneratorSpec::Gaussian { m, n, .. } = cfg.generator else {
            return Err(invalid("sweeps use the gaussian generator"));
        };
        let grid = SweepGrid {
            rank_ratios: cfg.rank_ratios.clone(),
            sample_ratios: cfg.sample_ratios.clone(),
            m,
            n,
            trials_per_cell: cfg.trials,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank_ratios.is_empty() || self.sample_ratios.is_empty() {
            return Err(invalid("sweep grid needs rank_ratios and sample_ratios"));
        }
        for &x in self.rank_ratios.iter().chain(&self.sample_ratios) {
            if ratio_count(x, self.m) < 1 || x > 1.0 {
                return Err(invalid(format!("ratio {x} gives no rows at m = {}", self.m)));
            }
        }
        for &x in &self.rank_ratios {
            if ratio_count(x, self.m) > self.n {
                return Err(invalid(format!("rank ratio {x} exceeds n = {}", self.n)));
            }
        }
        Ok(())
    }
}

/// Seed of trial `t` in grid cell `(i, j)`.
pub fn cell_seed(base: u64, i: usize, j: usize, t: usize) -> u64 {
    derive_seed(base, &[i as u64, j as u64, t as u64])
}

/// Configuration of a single grid cell: rank `r` and a fixed `d`.
pub fn cell_config(cfg: &RunConfig, r: usize, d: usize) -> RunConfig {
    let mut c = cfg.clone();
    if let GeneratorSpec::Gaussian { m, n, .. } = c.generator {
        c.generator = GeneratorSpec::Gaussian { m, n, r };
    }
    c.d = SampleSpec::Fixed(d);
    c
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub rank_ratio: f64,
    pub sample_ratio: f64,
    pub r: usize,
    pub d: usize,
    pub s0: usize,
    pub trials: usize,
    pub successes: usize,
}

impl SweepCell {
    pub fn fraction(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

#[derive(Clone, Debug)]
pub struct SweepSummary {
    pub cells: Vec<SweepCell>,
    pub wall_time: f64,
}

/// Success fraction on every `(rank_ratio, sample_ratio)` cell.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<SweepSummary> {
    cfg.validate()?;
    let grid = SweepGrid::from_config(cfg)?;
    let start = Instant::now();
    let (nr, ns, nt) = (grid.rank_ratios.len(), grid.sample_ratios.len(), grid.trials_per_cell);
    let pool = thread_pool()?;
    let outcomes: Vec<TrialOutcome> = pool.install(|| {
        (0..nr * ns * nt)
            .into_par_iter()
            .map(|idx| {
                let (i, j, t) = (idx / (ns * nt), idx / nt % ns, idx % nt);
                let r = ratio_count(grid.rank_ratios[i], grid.m);
                let d = ratio_count(grid.sample_ratios[j], grid.m);
                run_trial(&cell_config(cfg, r, d), t, cell_seed(cfg.seed, i, j, t))
            })
            .collect()
    });
    let mut cells = Vec::with_capacity(nr * ns);
    for (c, chunk) in outcomes.chunks(nt).enumerate() {
        let (i, j) = (c / ns, c % ns);
        let r = ratio_count(grid.rank_ratios[i], grid.m);
        let d = ratio_count(grid.sample_ratios[j], grid.m);
        let s0 = match cfg.noise {
            NoiseConfig::Sparse { s0: NoiseCount::Auto } => d.saturating_sub(r + 1),
            NoiseConfig::Sparse { s0: NoiseCount::Fixed(s) } => s,
            _ => 0,
        };
        cells.push(SweepCell {
            rank_ratio: grid.rank_ratios[i],
            sample_ratio: grid.sample_ratios[j],
            r,
            d,
            s0,
            trials: nt,
            successes: chunk.iter().filter(|o| o.success).count(),
        });
    }
    let header = ["schema_version", "rank_ratio", "sample_ratio", "r", "d", "s0", "trials", "successes", "fraction"];
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            vec![
                SCHEMA_VERSION.to_string(),
                c.rank_ratio.to_string(),
                c.sample_ratio.to_string(),
                c.r.to_string(),
                c.d.to_string(),
                c.s0.to_string(),
                c.trials.to_string(),
                c.successes.to_string(),
                c.fraction().to_string(),
            ]
        })
        .collect();
    write_file(&cfg.out, &render_csv("sweep", cfg, &header, &rows)?)?;
    Ok(SweepSummary {
        cells,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparePoint {
    pub d: usize,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub successes: usize,
}

impl ComparePoint {
    pub fn probability(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

#[derive(Clone, Debug)]
pub struct CompareSummary {
    pub points: Vec<ComparePoint>,
    pub wall_time: f64,
}

impl CompareSummary {
    /// Smallest `d` at which `algorithm` reaches success probability `level`.
    pub fn threshold(&self, algorithm: Algorithm, level: f64) -> Option<usize> {
        self.points
            .iter()
            .filter(|p| p.algorithm == algorithm && p.probability() >= level)
            .map(|p| p.d)
            .min()
    }
}

/// Full-span and sparse recovery on identical mixture instances and
/// seeds, for every `d` in `cfg.d_values` (default `1..=m`).
pub fn cmd_compare_mixture(cfg: &RunConfig) -> Result<CompareSummary> {
    cfg.validate()?;
    let GeneratorSpec::Mixture { m, .. } = cfg.generator else {
        return Err(invalid("compare-mixture needs the mixture generator"));
    };
    let d_values: Vec<usize> = if cfg.d_values.is_empty() {
        (1..=m).collect()
    } else {
        cfg.d_values.clone()
    };
    if let Some(&bad) = d_values.iter().find(|&&d| d == 0 || d > m) {
        return Err(invalid(format!("d = {bad} outside [1, {m}]")));
    }
    let tau = cfg.effective_tau().expect("mixture generator defines tau");
    let start = Instant::now();
    let nt = cfg.trials;
    let pool = thread_pool()?;
    let pairs: Vec<(TrialOutcome, TrialOutcome)> = pool.install(|| {
        (0..d_values.len() * nt)
            .into_par_iter()
            .map(|idx| {
                let (d, t) = (d_values[idx / nt], idx % nt);
                let seed = derive_seed(cfg.seed, &[d as u64, t as u64]);
                let mut c = cfg.clone();
                c.d = SampleSpec::Fixed(d);
                // the sparse search needs tau <= d; smaller d falls back to d
                c.tau = Some(tau.min(d));
                match prepare(&c, seed) {
                    Ok(prep) => (
                        execute(&c, Algorithm::Exact, &prep, t, seed),
                        execute(&c, Algorithm::Mixture, &prep, t, seed),
                    ),
                    Err(e) => (
                        failed(Algorithm::Exact, t, seed, e.to_string()),
                        failed(Algorithm::Mixture, t, seed, e.to_string()),
                    ),
                }
            })
            .collect()
    });
    let mut points = Vec::new();
    for (k, chunk) in pairs.chunks(nt).enumerate() {
        let d = d_values[k];
        for (algorithm, pick) in [(Algorithm::Exact, 0), (Algorithm::Mixture, 1)] {
            let successes = chunk
                .iter()
                .filter(|p| if pick == 0 { p.0.success } else { p.1.success })
                .count();
            points.push(ComparePoint {
                d,
                algorithm,
                trials: nt,
                successes,
            });
        }
    }
    let header = ["schema_version", "d", "algorithm", "trials", "successes", "probability"];
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                SCHEMA_VERSION.to_string(),
                p.d.to_string(),
                p.algorithm.name().into(),
                p.trials.to_string(),
                p.successes.to_string(),
                p.probability().to_string(),
            ]
        })
        .collect();
    write_file(&cfg.out, &render_csv("compare-mixture", cfg, &header, &rows)?)?;
    Ok(CompareSummary {
        points,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Writes `<out>.M.txt`, `<out>.L.txt` and `<out>.meta.txt` for the
/// instance generated from `cfg.seed`.
pub fn cmd_gen(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let prep = prepare(cfg, cfg.seed)?;
    let inst = &prep.instance;
    let paths = [
        sibling_path(&cfg.out, ".M.txt"),
        sibling_path(&cfg.out, ".L.txt"),
        sibling_path(&cfg.out, ".meta.txt"),
    ];
    if let Some(dir) = cfg.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    save_matrix(&paths[0], &inst.observed)?;
    save_matrix(&paths[1], &inst.clean)?;
    let mut meta = format!("generator = {}\nseed = {}\n", inst.meta.generator, inst.meta.seed);
    for (k, v) in &inst.meta.params {
        meta.push_str(&format!("{k} = {v}\n"));
    }
    let join = |v: &[usize]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
    meta.push_str(&format!("rank = {}\nd = {}\nnoise_support = {}\n", inst.rank, prep.d, join(&inst.noise_support)));
    if let Some(labels) = &inst.membership {
        meta.push_str(&format!("membership = {}\n", join(labels)));
    }
    write_file(&paths[2], meta.as_bytes())?;
    Ok(paths.to_vec())
}
