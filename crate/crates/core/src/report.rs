//! Per-run summaries and the recovery metrics computed from them.

use crate::linalg::DenseMatrix;

/// Absolute Frobenius error tolerated by the exact-recovery success test.
pub const SUCCESS_FROB_TOL: f64 = 1e-6;

/// Outcome of one streaming pass over a matrix.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    /// ℓ₂ error of every processed column against the clean truth (empty
    /// without truth).
    pub per_column_error: Vec<f64>,
    /// `‖L̂ − L‖_F` over the clean columns.
    pub frob_error: Option<f64>,
    /// `‖L̂ − L‖_F / ‖L‖_F` over the clean columns.
    pub frob_rel_error: Option<f64>,
    pub recovered_rank: usize,
    /// Final dictionary size `K` (fully measured columns).
    pub basis_size: usize,
    pub columns_processed: usize,
    /// Whether the identified outliers equal the injected noise support.
    pub support_exact: Option<bool>,
    pub entries_sampled: u64,
    pub wall_time: f64,
}

impl RunReport {
    pub fn median_column_error(&self) -> Option<f64> {
        median(&self.per_column_error)
    }

    pub fn max_column_error(&self) -> Option<f64> {
        self.per_column_error.iter().copied().reduce(f64::max)
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Frobenius error of `recovered` against `truth` restricted to the
/// columns not listed in `skip`. Returns `(absolute, relative)`.
pub fn frobenius_error(recovered: &DenseMatrix, truth: &DenseMatrix, skip: &[usize]) -> (f64, f64) {
    assert_eq!(
        (recovered.rows(), recovered.cols()),
        (truth.rows(), truth.cols()),
        "recovered and truth shapes differ"
    );
    let mut excluded = vec![false; truth.cols()];
    for &j in skip {
        excluded[j] = true;
    }
    let (mut diff, mut base) = (0.0, 0.0);
    for i in 0..truth.rows() {
        for (j, (&a, &b)) in recovered.row(i).iter().zip(truth.row(i)).enumerate() {
            if !excluded[j] {
                diff += (a - b) * (a - b);
                base += b * b;
            }
        }
    }
    let abs = diff.sqrt();
    let rel = if base > 0.0 { abs / base.sqrt() } else { abs };
    (abs, rel)
}

/// Per-column ℓ₂ distances.
pub fn column_errors(recovered: &DenseMatrix, truth: &DenseMatrix) -> Vec<f64> {
    let mut acc = vec![0.0; truth.cols()];
    for i in 0..truth.rows() {
        for ((a, &x), &y) in acc.iter_mut().zip(recovered.row(i)).zip(truth.row(i)) {
            *a += (x - y) * (x - y);
        }
    }
    acc.into_iter().map(f64::sqrt).collect()
}

/// Exact-recovery success: Frobenius error at most 1e-6, the recovered
/// rank equal to `r`, and the noise support identified exactly.
pub fn metric_success(report: &RunReport, r: usize) -> bool {
    let frob_ok = report.frob_error.is_some_and(|e| e <= SUCCESS_FROB_TOL);
    frob_ok && report.recovered_rank == r && report.support_exact == Some(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perfect() -> RunReport {
        RunReport {
            frob_error: Some(1e-12),
            frob_rel_error: Some(1e-13),
            recovered_rank: 5,
            support_exact: Some(true),
            ..Default::default()
        }
    }

    #[test]
    fn perfect_report_succeeds() {
        assert!(metric_success(&perfect(), 5));
    }

    #[test]
    fn large_error_fails() {
        let r = RunReport {
            frob_error: Some(1e-3),
            ..perfect()
        };
        assert!(!metric_success(&r, 5));
    }

    #[test]
    fn misidentified_outlier_fails() {
        let r = RunReport {
            support_exact: Some(false),
            ..perfect()
        };
        assert!(!metric_success(&r, 5));
        assert!(!metric_success(&perfect(), 4));
    }

    #[test]
    fn frobenius_skips_listed_columns() {
        let truth = DenseMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let rec = DenseMatrix::new(2, 2, vec![1.0, 5.0, 0.0, 1.0]).unwrap();
        assert_eq!(frobenius_error(&rec, &truth, &[1]), (0.0, 0.0));
        let (abs, rel) = frobenius_error(&rec, &truth, &[]);
        assert_eq!(abs, 5.0);
        assert!((rel - 5.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
