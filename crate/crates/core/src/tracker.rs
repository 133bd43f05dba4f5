//! Online completion under bounded deterministic noise.
//!
//! Each arriving column is sampled on a shared row set `Ω` of size `d`. If
//! the sampled residual against the current (orthonormal) basis exceeds
//! the threshold `η_k = C·√(d·k·ε/m)`, the column is measured in full and
//! absorbed into the basis and `Ω` is redrawn; otherwise the column is
//! completed from its samples by least squares on the basis rows.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{norm, DenseMatrix, OrthoBasis, QrFactor};
use crate::report::{column_errors, frobenius_error, RunReport};
use crate::sampling::{rng_from_seed, IndexSet, StreamRng};

/// Band around unit norm accepted for input columns (on top of `ε`).
pub const UNIT_NORM_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// Reject columns whose norm leaves the accepted band.
    Strict,
    /// Rescale such columns to unit norm.
    Lenient,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackerConfig {
    /// Samples per column.
    pub d: usize,
    /// The constant `C` in `η_k`.
    pub eta_constant: f64,
    /// Per-column ℓ₂ noise bound `ε`.
    pub eps_noise: f64,
    pub seed: u64,
    pub with_replacement: bool,
    /// Drop repeated indices from each draw of `Ω`.
    pub dedup: bool,
    /// Relative floor on the residual test; stands in for an exact
    /// comparison against zero when `η_k` vanishes.
    pub zero_tol: f64,
    pub normalization: Normalization,
}

impl TrackerConfig {
    pub fn new(d: usize, eps_noise: f64, seed: u64) -> Self {
        TrackerConfig {
            d,
            eta_constant: 1.0,
            eps_noise,
            seed,
            with_replacement: true,
            dedup: false,
            zero_tol: 1e-8,
            normalization: Normalization::Strict,
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.d == 0 || self.d > m {
            return Err(Error::InvalidConfig(format!(
                "sample count d = {} must lie in [1, {m}]",
                self.d
            )));
        }
        if !(self.eps_noise >= 0.0 && self.eps_noise.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise bound must be finite and non-negative, got {}",
                self.eps_noise
            )));
        }
        if !(self.eta_constant >= 0.0 && self.eta_constant.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "threshold constant must be finite and non-negative, got {}",
                self.eta_constant
            )));
        }
        if !(self.zero_tol > 0.0) {
            return Err(Error::InvalidConfig("zero_tol must be positive".into()));
        }
        Ok(())
    }
}

/// `η_k = C·√(d·k·ε/m)`.
pub fn threshold(k: usize, cfg: &TrackerConfig, m: usize) -> f64 {
    cfg.eta_constant * (cfg.d as f64 * k as f64 * cfg.eps_noise / m as f64).sqrt()
}

/// The estimated per-column error scale `(m/d)·√(k·ε)`.
pub fn error_scale(k: usize, eps_noise: f64, m: usize, d: usize) -> f64 {
    m as f64 / d as f64 * (k as f64 * eps_noise).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Absorbed,
    Represented,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColumnRecord {
    pub decision: Decision,
    pub residual: f64,
    /// The threshold the residual was compared against.
    pub threshold: f64,
    /// Basis size when the column arrived.
    pub basis_size: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Completion {
    pub estimate: Vec<f64>,
    pub decision: Decision,
    pub residual: f64,
    pub threshold: f64,
    pub basis_size: usize,
}

/// Basis rows on the current `Ω`, factored once per draw.
struct Restricted {
    orth: OrthoBasis,
    qr: Option<QrFactor>,
}

pub struct TrackerState {
    m: usize,
    cfg: TrackerConfig,
    basis: OrthoBasis,
    omega: IndexSet,
    rng: StreamRng,
    restricted: Option<Restricted>,
    log: Vec<ColumnRecord>,
    entries_requested: u64,
    omega_draws: usize,
}

impl TrackerState {
    pub fn new(m: usize, cfg: TrackerConfig) -> Result<Self> {
        cfg.validate(m)?;
        let mut rng = rng_from_seed(cfg.seed);
        let omega = draw_omega(&mut rng, m, &cfg);
        Ok(TrackerState {
            m,
            cfg,
            basis: OrthoBasis::new(m),
            omega,
            rng,
            restricted: None,
            log: Vec::new(),
            entries_requested: 0,
            omega_draws: 1,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    /// Current basis size `k`.
    pub fn k(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> DenseMatrix {
        self.basis.to_matrix()
    }

    pub fn omega(&self) -> &IndexSet {
        &self.omega
    }

    pub fn log(&self) -> &[ColumnRecord] {
        &self.log
    }

    pub fn entries_requested(&self) -> u64 {
        self.entries_requested
    }

    /// Number of times `Ω` has been drawn (initial draw included).
    pub fn omega_draws(&self) -> usize {
        self.omega_draws
    }

    fn restricted(&mut self) -> &Restricted {
        if self.restricted.is_none() {
            let idx = self.omega.indices();
            let rows: Vec<Vec<f64>> = self
                .basis
                .columns()
                .iter()
                .map(|c| idx.iter().map(|&i| c[i]).collect())
                .collect();
            self.restricted = Some(Restricted {
                orth: OrthoBasis::spanning(idx.len(), &rows),
                qr: QrFactor::new(&rows).ok(),
            });
        }
        self.restricted.as_ref().expect("just filled")
    }

    /// Processes the next column, reading entries through `oracle`.
    pub fn process_column(&mut self, oracle: &mut dyn FnMut(usize) -> f64) -> Result<Completion> {
        let t = self.log.len();
        let k = self.k();
        let sampled: Vec<f64> = self.omega.indices().iter().map(|&i| oracle(i)).collect();
        self.entries_requested += sampled.len() as u64;

        let residual = self.restricted().orth.residual_norm(&sampled);
        let eta = threshold(k, &self.cfg, self.m);
        let limit = eta.max(self.cfg.zero_tol * norm(&sampled));

        if residual > limit {
            let mut full = vec![0.0; self.m];
            let mut seen = vec![false; self.m];
            for (&i, &x) in self.omega.indices().iter().zip(&sampled) {
                full[i] = x;
                seen[i] = true;
            }
            for (i, slot) in full.iter_mut().enumerate() {
                if !seen[i] {
                    *slot = oracle(i);
                }
            }
            // a full column costs m entries in total
            self.entries_requested += (self.m - sampled.len()) as u64;
            self.basis.push(&full, norm(&full));
            self.omega = draw_omega(&mut self.rng, self.m, &self.cfg);
            self.omega_draws += 1;
            self.restricted = None;
            self.log.push(ColumnRecord {
                decision: Decision::Absorbed,
                residual,
                threshold: limit,
                basis_size: k,
            });
            return Ok(Completion {
                estimate: full,
                decision: Decision::Absorbed,
                residual,
                threshold: limit,
                basis_size: k,
            });
        }

        let coeffs = match &self.restricted().qr {
            Some(qr) => qr.solve(&sampled),
            None => {
                let rank = self.restricted().orth.len();
                return Err(Error::RankDeficient {
                    dim: k,
                    rank,
                    column: Some(t),
                });
            }
        };
        let mut estimate = vec![0.0; self.m];
        for (q, &c) in self.basis.columns().iter().zip(&coeffs) {
            for (e, &x) in estimate.iter_mut().zip(q) {
                *e += c * x;
            }
        }
        self.log.push(ColumnRecord {
            decision: Decision::Represented,
            residual,
            threshold: limit,
            basis_size: k,
        });
        Ok(Completion {
            estimate,
            decision: Decision::Represented,
            residual,
            threshold: limit,
            basis_size: k,
        })
    }
}

fn draw_omega(rng: &mut StreamRng, m: usize, cfg: &TrackerConfig) -> IndexSet {
    let omega = IndexSet::sample(rng, m, cfg.d, cfg.with_replacement);
    if cfg.dedup {
        omega.deduplicated()
    } else {
        omega
    }
}

/// Everything produced by one pass of the tracker.
#[derive(Clone, Debug)]
pub struct TrackerRun {
    pub report: RunReport,
    /// Completed matrix `M̂`.
    pub recovered: DenseMatrix,
    /// Final orthonormal basis `Û^K`.
    pub basis: DenseMatrix,
    pub log: Vec<ColumnRecord>,
}

/// A stream that stopped early, with everything computed up to the failure.
#[derive(Debug, thiserror::Error)]
#[error("stream stopped at column {column}: {source}")]
pub struct StreamFailure<R: std::fmt::Debug> {
    pub column: usize,
    #[source]
    pub source: Error,
    pub partial: Box<R>,
}

fn checked_columns(columns: &DenseMatrix, cfg: &TrackerConfig) -> Result<DenseMatrix> {
    let slack = cfg.eps_noise + UNIT_NORM_TOL;
    let mut out = columns.clone();
    for (j, nrm) in columns.column_norms().into_iter().enumerate() {
        if (nrm - 1.0).abs() <= slack {
            continue;
        }
        match cfg.normalization {
            Normalization::Strict => return Err(Error::NotUnitNorm { column: j, norm: nrm }),
            Normalization::Lenient => {
                if nrm == 0.0 {
                    return Err(Error::NotUnitNorm { column: j, norm: nrm });
                }
                let scaled: Vec<f64> = columns.column(j).iter().map(|x| x / nrm).collect();
                out.set_column(j, &scaled)?;
            }
        }
    }
    Ok(out)
}

/// Streams the columns of `columns` left to right through a fresh tracker.
///
/// Columns must have unit norm up to the noise bound (see
/// [`Normalization`]). When `truth` is given the report carries per-column
/// and Frobenius errors against it.
pub fn run_stream(
    columns: &DenseMatrix,
    cfg: &TrackerConfig,
    truth: Option<&DenseMatrix>,
) -> Result<TrackerRun, StreamFailure<TrackerRun>> {
    let start = Instant::now();
    let fail0 = |e: Error| StreamFailure {
        column: 0,
        source: e,
        partial: Box::new(TrackerRun {
            report: RunReport::default(),
            recovered: DenseMatrix::zeros(columns.rows(), 0),
            basis: DenseMatrix::zeros(columns.rows(), 0),
            log: Vec::new(),
        }),
    };
    if columns.cols() == 0 {
        return Err(fail0(Error::InvalidConfig("empty column stream".into())));
    }
    if let Some(l) = truth {
        if (l.rows(), l.cols()) != (columns.rows(), columns.cols()) {
            return Err(fail0(Error::DimensionMismatch("truth shape differs from input".into())));
        }
    }
    let input = checked_columns(columns, cfg).map_err(fail0)?;
    let m = input.rows();
    let mut state = TrackerState::new(m, cfg.clone()).map_err(fail0)?;

    let mut estimates: Vec<Vec<f64>> = Vec::with_capacity(input.cols());
    let mut failure = None;
    for t in 0..input.cols() {
        let mut oracle = |i: usize| input.get(i, t);
        match state.process_column(&mut oracle) {
            Ok(c) => estimates.push(c.estimate),
            Err(e) => {
                failure = Some((t, e.with_column(t)));
                break;
            }
        }
    }

    let processed = estimates.len();
    let mut recovered = DenseMatrix::zeros(m, processed);
    for (j, e) in estimates.iter().enumerate() {
        recovered.set_column(j, e).expect("estimates are finite and sized");
    }
    let mut report = RunReport {
        recovered_rank: state.k(),
        basis_size: state.k(),
        columns_processed: processed,
        entries_sampled: state.entries_requested(),
        ..Default::default()
    };
    if let Some(l) = truth {
        let cols: Vec<usize> = (0..processed).collect();
        let l_seen = l.select_columns(&cols);
        report.per_column_error = column_errors(&recovered, &l_seen);
        let (abs, rel) = frobenius_error(&recovered, &l_seen, &[]);
        report.frob_error = Some(abs);
        report.frob_rel_error = Some(rel);
    }
    report.wall_time = start.elapsed().as_secs_f64();
    let run = TrackerRun {
        report,
        recovered,
        basis: state.basis(),
        log: state.log().to_vec(),
    };
    match failure {
        None => Ok(run),
        Some((column, source)) => Err(StreamFailure {
            column,
            source,
            partial: Box::new(run),
        }),
    }
}
