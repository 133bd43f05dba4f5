//! Exact recovery under sparse column noise.
//!
//! Columns that are not (numerically) in the span of the sampled dictionary
//! rows are measured in full and appended to the dictionary; the rest are
//! completed from their samples. Every representation increments a usage
//! counter on the dictionary columns it touches, and at the end of the
//! stream dictionary columns that were never used are declared outliers.
//!
//! With `tau` set, membership is tested against `tau`-sparse combinations
//! of dictionary columns instead of their full span, which suits data drawn
//! from a union of low-dimensional subspaces.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{norm, numerical_rank, DenseMatrix, OrthoBasis, QrFactor, RANK_TOL};
use crate::report::{column_errors, frobenius_error, RunReport};
use crate::sampling::{rng_from_seed, IndexSet, StreamRng};
use crate::tracker::{Decision, StreamFailure};

pub const DEFAULT_ZERO_TOL: f64 = 1e-8;
pub const DEFAULT_COMBINATION_CAP: u128 = 2_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactConfig {
    pub d: usize,
    /// Relative tolerance standing in for exact zero tests.
    pub zero_tol: f64,
    /// Sparsity level; `Some` switches to sparse representations.
    pub tau: Option<usize>,
    pub seed: u64,
    /// Maximum number of supports the sparse search may enumerate.
    pub combination_cap: u128,
}

impl ExactConfig {
    pub fn new(d: usize, seed: u64) -> Self {
        ExactConfig {
            d,
            zero_tol: DEFAULT_ZERO_TOL,
            tau: None,
            seed,
            combination_cap: DEFAULT_COMBINATION_CAP,
        }
    }

    pub fn with_tau(mut self, tau: usize) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.d == 0 || self.d > m {
            return Err(Error::InvalidConfig(format!(
                "sample count d = {} must lie in [1, {m}]",
                self.d
            )));
        }
        if !(self.zero_tol > 0.0 && self.zero_tol.is_finite()) {
            return Err(Error::InvalidConfig("zero_tol must be positive".into()));
        }
        if let Some(tau) = self.tau {
            if tau == 0 || tau > self.d {
                return Err(Error::InvalidConfig(format!(
                    "tau = {tau} must lie in [1, d = {}]",
                    self.d
                )));
            }
        }
        Ok(())
    }
}

/// Fully measured columns with their usage counters.
#[derive(Clone, Debug)]
pub struct Dictionary {
    m: usize,
    raw: Vec<Vec<f64>>,
    counter: Vec<u64>,
    arrival: Vec<usize>,
    orth: OrthoBasis,
}

impl Dictionary {
    pub fn new(m: usize) -> Self {
        Dictionary {
            m,
            raw: Vec::new(),
            counter: Vec::new(),
            arrival: Vec::new(),
            orth: OrthoBasis::new(m),
        }
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn raw_columns(&self) -> &[Vec<f64>] {
        &self.raw
    }

    pub fn to_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_columns(self.m, &self.raw).expect("dictionary columns are finite")
    }

    pub fn counter(&self) -> &[u64] {
        &self.counter
    }

    /// Stream position at which each dictionary column arrived.
    pub fn arrival(&self) -> &[usize] {
        &self.arrival
    }

    /// Orthonormal basis spanning the raw columns.
    pub fn orth(&self) -> &OrthoBasis {
        &self.orth
    }

    pub fn push(&mut self, column: Vec<f64>, t: usize) -> Result<()> {
        if column.len() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "column of length {} for a dictionary in R^{}",
                column.len(),
                self.m
            )));
        }
        self.orth.push(&column, norm(&column));
        self.raw.push(column);
        self.counter.push(0);
        self.arrival.push(t);
        Ok(())
    }

    /// Dictionary columns restricted to the rows in `omega`.
    pub fn restrict(&self, omega: &IndexSet) -> Vec<Vec<f64>> {
        self.raw.iter().map(|c| omega.gather(c)).collect()
    }
}

/// True when `v_omega` lies in the span of the dictionary rows on `omega`,
/// up to `zero_tol·‖v_omega‖`.
pub fn exact_test(dict: &Dictionary, omega: &IndexSet, v_omega: &[f64], zero_tol: f64) -> bool {
    let rows = dict.restrict(omega);
    in_span(&OrthoBasis::spanning(omega.len(), &rows), v_omega, zero_tol)
}

fn in_span(restricted: &OrthoBasis, v: &[f64], zero_tol: f64) -> bool {
    restricted.residual_norm(v) <= zero_tol * norm(v)
}

/// Increments the counter of every entry of `support` whose coefficient
/// exceeds `zero_tol` times the largest coefficient magnitude.
pub fn record_support(dict: &mut Dictionary, support: &[usize], coeffs: &[f64], zero_tol: f64) {
    assert_eq!(support.len(), coeffs.len(), "support and coefficients differ in length");
    let cmax = coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    if cmax == 0.0 {
        return;
    }
    for (&j, &c) in support.iter().zip(coeffs) {
        if c.abs() > zero_tol * cmax {
            dict.counter[j] += 1;
        }
    }
}

/// A sparse fit: dictionary positions (ascending) and their coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseFit {
    pub support: Vec<usize>,
    pub coefficients: Vec<f64>,
}

/// Number of supports of size `1..=tau` drawn from `k` columns.
pub fn support_count(k: usize, tau: usize) -> u128 {
    let mut total = 0u128;
    let mut c = 1u128;
    for s in 1..=tau.min(k) {
        c = c * (k - s + 1) as u128 / s as u128;
        total = total.saturating_add(c);
    }
    total
}

/// Finds the first support `S` with `|S| ≤ tau`, ordered by size and then
/// lexicographically, whose least-squares residual on `rows` is at most
/// `zero_tol·‖v‖`. `rows[j]` is dictionary column `j` restricted to `Ω`.
pub fn sparse_represent(
    rows: &[Vec<f64>],
    v: &[f64],
    tau: usize,
    zero_tol: f64,
    cap: u128,
) -> Result<Option<SparseFit>> {
    let dim = v.len();
    if let Some(c) = rows.iter().find(|c| c.len() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "dictionary rows of length {} against a vector of length {dim}",
            c.len()
        )));
    }
    let qr = QrFactor::new(rows).ok();
    search_support(rows, &OrthoBasis::spanning(dim, rows), qr.as_ref(), v, tau, zero_tol, cap)
}

/// Sparse search with the span basis and QR factor of `rows` supplied.
fn search_support(
    rows: &[Vec<f64>],
    orth: &OrthoBasis,
    qr: Option<&QrFactor>,
    v: &[f64],
    tau: usize,
    zero_tol: f64,
    cap: u128,
) -> Result<Option<SparseFit>> {
    let limit = zero_tol * norm(v);
    if limit == 0.0 {
        return Ok(Some(SparseFit {
            support: Vec::new(),
            coefficients: Vec::new(),
        }));
    }
    if !in_span(orth, v, zero_tol) {
        return Ok(None);
    }

    // Full column rank: the representation is unique, so its support is
    // the only minimal candidate.
    if let Some(qr) = qr {
        let x = qr.solve(v);
        let xmax = x.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let support: Vec<usize> = (0..x.len()).filter(|&j| x[j].abs() > zero_tol * xmax).collect();
        if support.len() > tau {
            return Ok(None);
        }
        if let Some(fit) = verify(rows, &support, v, limit) {
            return Ok(Some(fit));
        }
    }

    let needed = support_count(rows.len(), tau);
    if needed > cap {
        return Err(Error::CombinatorialBudgetExceeded { needed, cap });
    }
    for size in 1..=tau.min(rows.len()) {
        let mut search = Search {
            rows,
            size,
            limit,
            chosen: Vec::with_capacity(size),
            basis: Vec::with_capacity(size),
            v,
        };
        if let Some(fit) = search.descend(0, v.to_vec()) {
            return Ok(Some(fit));
        }
    }
    Ok(None)
}

fn verify(rows: &[Vec<f64>], support: &[usize], v: &[f64], limit: f64) -> Option<SparseFit> {
    let cols: Vec<Vec<f64>> = support.iter().map(|&j| rows[j].clone()).collect();
    let qr = QrFactor::new(&cols).ok()?;
    if qr.residual_norm(v) > limit {
        return None;
    }
    Some(SparseFit {
        support: support.to_vec(),
        coefficients: qr.solve(v),
    })
}

/// Depth-first enumeration of supports of one size. The prefix is kept
/// as an orthonormal basis together with the residual of `v` against it.
struct Search<'a> {
    rows: &'a [Vec<f64>],
    size: usize,
    limit: f64,
    chosen: Vec<usize>,
    basis: Vec<Vec<f64>>,
    v: &'a [f64],
}

impl Search<'_> {
    fn descend(&mut self, start: usize, residual: Vec<f64>) -> Option<SparseFit> {
        let remaining = self.size - self.chosen.len();
        for j in start..=self.rows.len() - remaining {
            let a = &self.rows[j];
            let mut w = a.clone();
            for _ in 0..2 {
                for q in &self.basis {
                    let c: f64 = q.iter().zip(&w).map(|(x, y)| x * y).sum();
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let nw = norm(&w);
            // a dependent prefix spans what a smaller support already spans
            if nw <= RANK_TOL * norm(a) || nw == 0.0 {
                continue;
            }
            w.iter_mut().for_each(|x| *x /= nw);
            let c: f64 = w.iter().zip(&residual).map(|(x, y)| x * y).sum();
            let next: Vec<f64> = residual.iter().zip(&w).map(|(r, q)| r - c * q).collect();
            self.chosen.push(j);
            let found = if remaining == 1 {
                if norm(&next) <= self.limit {
                    verify(self.rows, &self.chosen, self.v, self.limit)
                } else {
                    None
                }
            } else {
                self.basis.push(w);
                let f = self.descend(j + 1, next);
                self.basis.pop();
                f
            };
            self.chosen.pop();
            if found.is_some() {
                return found;
            }
        }
        None
    }
}

/// `μ_τ`: the largest incoherence over the column spaces of all `tau`-column
/// subsets of `l`. Enumerates every subset, so only usable on small inputs.
pub fn max_tau_incoherence(l: &DenseMatrix, tau: usize, cap: u128) -> Result<f64> {
    let n = l.cols();
    if tau == 0 || tau > n {
        return Err(Error::InvalidConfig(format!("tau = {tau} must lie in [1, {n}]")));
    }
    let needed = support_count(n, tau) - support_count(n, tau - 1);
    if needed > cap {
        return Err(Error::CombinatorialBudgetExceeded { needed, cap });
    }
    let cols = l.columns();
    let mut subset: Vec<usize> = (0..tau).collect();
    let mut best = 0.0f64;
    loop {
        let chosen: Vec<Vec<f64>> = subset.iter().map(|&j| cols[j].clone()).collect();
        let basis = OrthoBasis::spanning(l.rows(), &chosen);
        if !basis.is_empty() {
            best = best.max(crate::linalg::incoherence(&basis.to_matrix())?);
        }
        // advance to the next combination in lexicographic order
        let Some(i) = (0..tau).rev().find(|&i| subset[i] < n - tau + i) else {
            return Ok(best);
        };
        subset[i] += 1;
        for k in i + 1..tau {
            subset[k] = subset[k - 1] + 1;
        }
    }
}

/// Result of processing one column.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactStep {
    pub decision: Decision,
    pub estimate: Vec<f64>,
    /// Dictionary positions used by the representation.
    pub support: Vec<usize>,
    pub coefficients: Vec<f64>,
}

struct Restricted {
    orth: OrthoBasis,
    rows: Vec<Vec<f64>>,
    qr: Option<QrFactor>,
}

/// Streaming state shared by the full-span and sparse variants.
pub struct ExactState {
    m: usize,
    cfg: ExactConfig,
    dict: Dictionary,
    omega: IndexSet,
    rng: StreamRng,
    restricted: Option<Restricted>,
    decisions: Vec<Decision>,
    entries_requested: u64,
}

impl ExactState {
    pub fn new(m: usize, cfg: ExactConfig) -> Result<Self> {
        cfg.validate(m)?;
        let mut rng = rng_from_seed(cfg.seed);
        let omega = IndexSet::sample(&mut rng, m, cfg.d, false);
        Ok(ExactState {
            m,
            cfg,
            dict: Dictionary::new(m),
            omega,
            rng,
            restricted: None,
            decisions: Vec::new(),
            entries_requested: 0,
        })
    }

    pub fn config(&self) -> &ExactConfig {
        &self.cfg
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    pub fn omega(&self) -> &IndexSet {
        &self.omega
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    pub fn entries_requested(&self) -> u64 {
        self.entries_requested
    }

    fn restricted(&mut self) -> &Restricted {
        if self.restricted.is_none() {
            let rows = self.dict.restrict(&self.omega);
            self.restricted = Some(Restricted {
                orth: OrthoBasis::spanning(self.omega.len(), &rows),
                qr: QrFactor::new(&rows).ok(),
                rows,
            });
        }
        self.restricted.as_ref().expect("just filled")
    }

    pub fn process_column(&mut self, oracle: &mut dyn FnMut(usize) -> f64) -> Result<ExactStep> {
        let t = self.decisions.len();
        let sampled: Vec<f64> = self.omega.indices().iter().map(|&i| oracle(i)).collect();
        self.entries_requested += sampled.len() as u64;
        let (zero_tol, tau, cap) = (self.cfg.zero_tol, self.cfg.tau, self.cfg.combination_cap);

        let fit = match tau {
            None => {
                let r = self.restricted();
                if in_span(&r.orth, &sampled, zero_tol) {
                    let qr = r.qr.as_ref().ok_or_else(|| Error::RankDeficient {
                        dim: r.rows.len(),
                        rank: r.orth.len(),
                        column: Some(t),
                    })?;
                    Some(SparseFit {
                        support: (0..r.rows.len()).collect(),
                        coefficients: qr.solve(&sampled),
                    })
                } else {
                    None
                }
            }
            Some(tau) => {
                let r = self.restricted();
                search_support(&r.rows, &r.orth, r.qr.as_ref(), &sampled, tau, zero_tol, cap)?
            }
        };

        match fit {
            Some(fit) => {
                record_support(&mut self.dict, &fit.support, &fit.coefficients, zero_tol);
                let mut estimate = vec![0.0; self.m];
                for (&j, &c) in fit.support.iter().zip(&fit.coefficients) {
                    estimate
                        .iter_mut()
                        .zip(&self.dict.raw[j])
                        .for_each(|(e, x)| *e += c * x);
                }
                self.decisions.push(Decision::Represented);
                Ok(ExactStep {
                    decision: Decision::Represented,
                    estimate,
                    support: fit.support,
                    coefficients: fit.coefficients,
                })
            }
            None => {
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
                self.entries_requested += (self.m - sampled.len()) as u64;
                self.dict.push(full.clone(), t)?;
                self.omega = IndexSet::sample(&mut self.rng, self.m, self.cfg.d, false);
                self.restricted = None;
                self.decisions.push(Decision::Absorbed);
                Ok(ExactStep {
                    decision: Decision::Absorbed,
                    estimate: full,
                    support: Vec::new(),
                    coefficients: Vec::new(),
                })
            }
        }
    }
}

/// Final output of a stream: completed matrix and the outlier split.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryResult {
    /// Completed matrix, with outlier columns set to zero.
    pub recovered: DenseMatrix,
    /// Absorbed columns kept as clean basis (stream indices).
    pub basis_indices: Vec<usize>,
    /// Absorbed columns never used by a representation (stream indices).
    pub outlier_indices: Vec<usize>,
    pub recovered_rank: usize,
}

#[derive(Clone, Debug)]
pub struct ExactRun {
    pub result: RecoveryResult,
    pub report: RunReport,
    /// Absorb/represent decision per processed column.
    pub decisions: Vec<Decision>,
    /// Final counter per dictionary column.
    pub counter: Vec<u64>,
}

/// Ground truth for scoring a run.
#[derive(Clone, Copy, Debug)]
pub struct ExactTruth<'a> {
    pub clean: &'a DenseMatrix,
    pub noise_support: &'a [usize],
}

fn finish(
    state: &ExactState,
    estimates: Vec<Vec<f64>>,
    truth: Option<ExactTruth<'_>>,
    start: Instant,
) -> ExactRun {
    let m = state.m;
    let dict = &state.dict;
    let (mut basis_indices, mut outlier_indices) = (Vec::new(), Vec::new());
    let mut kept = Vec::new();
    for (j, &t) in dict.arrival.iter().enumerate() {
        if dict.counter[j] == 0 {
            outlier_indices.push(t);
        } else {
            basis_indices.push(t);
            kept.push(dict.raw[j].clone());
        }
    }
    let processed = estimates.len();
    let mut recovered = DenseMatrix::zeros(m, processed);
    for (t, e) in estimates.iter().enumerate() {
        if outlier_indices.binary_search(&t).is_err() {
            recovered.set_column(t, e).expect("estimates are finite and sized");
        }
    }
    let recovered_rank = if kept.is_empty() {
        0
    } else {
        numerical_rank(&DenseMatrix::from_columns(m, &kept).expect("finite"), RANK_TOL)
    };
    let mut report = RunReport {
        recovered_rank,
        basis_size: dict.len(),
        columns_processed: processed,
        entries_sampled: state.entries_requested,
        ..Default::default()
    };
    if let Some(truth) = truth {
        let cols: Vec<usize> = (0..processed).collect();
        let clean = truth.clean.select_columns(&cols);
        let skip: Vec<usize> = truth.noise_support.iter().copied().filter(|&j| j < processed).collect();
        report.per_column_error = column_errors(&recovered, &clean);
        let (abs, rel) = frobenius_error(&recovered, &clean, &skip);
        report.frob_error = Some(abs);
        report.frob_rel_error = Some(rel);
        let mut expected = skip;
        expected.sort_unstable();
        report.support_exact = Some(expected == outlier_indices);
    }
    report.wall_time = start.elapsed().as_secs_f64();
    ExactRun {
        result: RecoveryResult {
            recovered,
            basis_indices,
            outlier_indices,
            recovered_rank,
        },
        report,
        decisions: state.decisions.clone(),
        counter: dict.counter.clone(),
    }
}

/// Streams the columns of `columns` left to right. When `truth` is given,
/// errors are measured over the columns outside its noise support and
/// `support_exact` compares it with the identified outliers.
pub fn run_exact(
    columns: &DenseMatrix,
    cfg: &ExactConfig,
    truth: Option<ExactTruth<'_>>,
) -> Result<ExactRun, StreamFailure<ExactRun>> {
    let start = Instant::now();
    let m = columns.rows();
    let fail0 = |e: Error| {
        let empty = ExactState {
            m,
            cfg: cfg.clone(),
            dict: Dictionary::new(m),
            omega: IndexSet::new(Vec::new(), m, false).expect("empty set is valid"),
            rng: rng_from_seed(cfg.seed),
            restricted: None,
            decisions: Vec::new(),
            entries_requested: 0,
        };
        StreamFailure {
            column: 0,
            source: e,
            partial: Box::new(finish(&empty, Vec::new(), None, start)),
        }
    };
    if columns.cols() == 0 {
        return Err(fail0(Error::InvalidConfig("empty column stream".into())));
    }
    if let Some(t) = truth {
        if (t.clean.rows(), t.clean.cols()) != (m, columns.cols()) {
            return Err(fail0(Error::DimensionMismatch("truth shape differs from input".into())));
        }
        if let Some(&bad) = t.noise_support.iter().find(|&&j| j >= columns.cols()) {
            return Err(fail0(Error::IndexOutOfBounds {
                index: bad,
                bound: columns.cols(),
            }));
        }
    }
    let mut state = ExactState::new(m, cfg.clone()).map_err(fail0)?;
    let mut estimates = Vec::with_capacity(columns.cols());
    let mut failure = None;
    for t in 0..columns.cols() {
        match state.process_column(&mut |i| columns.get(i, t)) {
            Ok(step) => estimates.push(step.estimate),
            Err(e) => {
                failure = Some((t, e.with_column(t)));
                break;
            }
        }
    }
    let run = finish(&state, estimates, truth, start);
    match failure {
        None => Ok(run),
        Some((column, source)) => Err(StreamFailure {
            column,
            source,
            partial: Box::new(run),
        }),
    }
}
