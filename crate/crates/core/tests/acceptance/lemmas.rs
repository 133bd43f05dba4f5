//! Randomized checks of the rank, angle and concentration facts the
//! algorithms rely on. Ranks and angles are computed here with nalgebra
//! directly so the library routines are not their own oracle.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use lifelong_mc::linalg::{incoherence, orthonormalize, principal_angle, project_residual};
use lifelong_mc::sampling::IndexSet;
use lifelong_mc::DenseMatrix;

pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn dense(a: &DMatrix<f64>) -> DenseMatrix {
    let data = (0..a.nrows()).flat_map(|i| (0..a.ncols()).map(move |j| a[(i, j)])).collect();
    DenseMatrix::new(a.nrows(), a.ncols(), data).unwrap()
}

fn nalg(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.data())
}

fn rank(a: &DMatrix<f64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let s = a.clone().svd(false, false).singular_values;
    let smax = s.max();
    s.iter().filter(|&&x| x > 1e-9 * smax).count()
}

fn rows_of(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), a.ncols(), |i, j| a[(idx[i], j)])
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row (column) subsets of `X` and of its orthonormal column (row) basis
/// have equal rank.
pub fn orth_rank(cases: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut failures = 0;
    for _ in 0..cases {
        let (m, n) = (rng.random_range(4..30), rng.random_range(4..30));
        let rho = rng.random_range(1..=m.min(n));
        let x = gaussian(&mut rng, m, rho) * gaussian(&mut rng, rho, n);
        let uc = nalg(&orthonormalize(&dense(&x)));
        let vr = nalg(&orthonormalize(&dense(&x.transpose()))).transpose();
        let rows: Vec<usize> = (0..m).filter(|_| rng.random_bool(0.5)).collect();
        let cols: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        let x_cols = DMatrix::from_fn(m, cols.len(), |i, j| x[(i, cols[j])]);
        let v_cols = DMatrix::from_fn(vr.nrows(), cols.len(), |i, j| vr[(i, cols[j])]);
        if rank(&rows_of(&x, &rows)) != rank(&rows_of(&uc, &rows)) || rank(&x_cols) != rank(&v_cols) {
            failures += 1;
        }
    }
    Outcome {
        passed: failures == 0,
        detail: format!("{failures}/{cases} rank mismatches"),
    }
}

/// Bernoulli row sampling at `d ≥ 8μr·ln(r/δ)` keeps the rank.
pub fn subsampling_rank(trials: usize, delta: f64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (m, n, r) = (2000, 10, 2);
    let mut kept = 0;
    let mut max_p: f64 = 0.0;
    for _ in 0..trials {
        let l = gaussian(&mut rng, m, r) * gaussian(&mut rng, r, n);
        let mu = incoherence(&orthonormalize(&dense(&l))).unwrap();
        let d = (8.0 * mu * r as f64 * (r as f64 / delta).ln()).ceil();
        let p = (d / m as f64).min(1.0);
        max_p = max_p.max(p);
        let omega = IndexSet::bernoulli(&mut rng, m, p);
        if rank(&rows_of(&l, omega.indices())) == r {
            kept += 1;
        }
    }
    let need = ((1.0 - delta) * trials as f64).ceil() as usize;
    Outcome {
        passed: kept >= need,
        detail: format!("{kept}/{trials} full-rank subsamples (need {need}, max d/m = {max_p:.2})"),
    }
}

/// Rotates unit `u` by exactly `angle` toward a random orthogonal direction.
fn perturb(rng: &mut ChaCha8Rng, u: &[f64], angle: f64) -> Vec<f64> {
    let g: Vec<f64> = (0..u.len()).map(|_| StandardNormal.sample(rng)).collect();
    let c = dot(&g, u);
    let w = unit(&g.iter().zip(u).map(|(x, y)| x - c * y).collect::<Vec<_>>());
    u.iter().zip(&w).map(|(a, b)| angle.cos() * a + angle.sin() * b).collect()
}

fn angle_to_span(v: &[f64], basis: &[Vec<f64>]) -> f64 {
    if basis.is_empty() {
        return std::f64::consts::FRAC_PI_2;
    }
    let b = orthonormalize(&DenseMatrix::from_columns(v.len(), basis).unwrap());
    let res = project_residual(v, &b).unwrap();
    (res / dot(v, v).sqrt()).clamp(0.0, 1.0).asin()
}

/// `θ(U^k, Ũ^k) ≤ γ_k/2` with `γ_k = √(20kε)` when every `ũ_i` is within
/// `ε` of `u_i` and at least `γ_i` away from `Ũ^{i−1}`.
pub fn angle_propagation(cases_per_level: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let m = 40;
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for eps in [1e-4, 1e-3, 1e-2] {
        for case in 0..cases_per_level {
            let k = case % 6 + 1;
            let (mut u, mut ut): (Vec<Vec<f64>>, Vec<Vec<f64>>) = (Vec::new(), Vec::new());
            while u.len() < k {
                let i = u.len() + 1;
                let g: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
                let ui = unit(&g);
                let angle = rng.random_range(0.0..=eps);
                let uti = perturb(&mut rng, &ui, angle);
                if i >= 2 && angle_to_span(&uti, &ut) < (20.0 * i as f64 * eps).sqrt() {
                    continue;
                }
                u.push(ui);
                ut.push(uti);
            }
            let a = orthonormalize(&DenseMatrix::from_columns(m, &u).unwrap());
            let b = orthonormalize(&DenseMatrix::from_columns(m, &ut).unwrap());
            let theta = principal_angle(&a, &b).unwrap();
            let half_gamma = (20.0 * k as f64 * eps).sqrt() / 2.0;
            worst = worst.max(theta / half_gamma);
            if theta > half_gamma {
                failures += 1;
            }
        }
    }
    Outcome {
        passed: failures == 0,
        detail: format!(
            "{failures}/{} violations, worst θ/(γ/2) = {worst:.3}",
            3 * cases_per_level
        ),
    }
}

fn coherence_of_vector(v: &[f64]) -> f64 {
    let n2 = dot(v, v);
    v.len() as f64 * v.iter().fold(0.0f64, |a, x| a.max(x * x)) / n2
}

/// Sampled residual against `Ũ_Ω` lies between the lower and upper
/// concentration bounds in terms of the full residual.
pub fn residual_sandwich(trials: usize, delta: f64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (m, k) = (300, 3);
    let log1 = (1.0 / delta).ln();
    let mut inside = 0;
    let mut informative = 0;
    for _ in 0..trials {
        let u = orthonormalize(&dense(&gaussian(&mut rng, m, k)));
        let mu_u = incoherence(&u).unwrap();
        let y: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
        let basis = u.columns();
        let mut perp = y.clone();
        for q in &basis {
            let c = dot(q, &perp);
            perp.iter_mut().zip(q).for_each(|(p, x)| *p -= c * x);
        }
        let full2 = dot(&perp, &perp);
        let mu_y = coherence_of_vector(&perp);
        let need = (8.0 / 3.0 * k as f64 * mu_u * (2.0 * k as f64 / delta).ln()).max(4.0 * mu_y * log1);
        // strictly above the requirement so that ζ < 1
        let d = (2.0 * need).ceil() as usize;
        let omega = IndexSet::sample(&mut rng, m, d, true);
        let u_rows = u.select_rows(omega.indices());
        let res = project_residual(&omega.gather(&y), &u_rows).unwrap();
        let alpha = (2.0 * mu_y / d as f64 * log1).sqrt() + 2.0 * mu_y / (3.0 * d as f64) * log1;
        let beta = (1.0 + 2.0 * log1).powi(2);
        let zeta = (8.0 * k as f64 * mu_u / (3.0 * d as f64) * (2.0 * k as f64 / delta).ln()).sqrt();
        let df = d as f64;
        let lower = (df * (1.0 - alpha) - k as f64 * mu_u * beta / (1.0 - zeta)) / m as f64 * full2;
        let upper = (1.0 + alpha) * df / m as f64 * full2;
        if lower > 0.0 {
            informative += 1;
        }
        if lower <= res * res && res * res <= upper {
            inside += 1;
        }
    }
    let need = ((1.0 - delta) * trials as f64).ceil() as usize;
    Outcome {
        passed: inside >= need,
        detail: format!("{inside}/{trials} inside the bounds (need {need}), lower bound positive in {informative}"),
    }
}

/// `‖y_Ω − P y_Ω‖² ∈ [(1 ∓ 1/2)·(d/m)]·‖y − P y‖²` once
/// `d ≥ 8kμ·ln(2k/δ)`.
pub fn residual_ratio(trials: usize, delta: f64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(454);
    let (m, k) = (2000, 2);
    let mut inside = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let u = orthonormalize(&dense(&gaussian(&mut rng, m, k)));
        let mu = incoherence(&u).unwrap();
        let d = (8.0 * k as f64 * mu * (2.0 * k as f64 / delta).ln()).ceil() as usize;
        let y: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
        let full = project_residual(&y, &u).unwrap();
        assert!(d < m, "sample requirement {d} exceeds m = {m}");
        let omega = IndexSet::sample(&mut rng, m, d, true);
        let res = project_residual(&omega.gather(&y), &u.select_rows(omega.indices())).unwrap();
        let ratio = res * res / (d as f64 / m as f64 * full * full);
        worst = worst.max((ratio - 1.0).abs());
        if (0.5..=1.5).contains(&ratio) {
            inside += 1;
        }
    }
    let need = ((1.0 - delta) * trials as f64).ceil() as usize;
    Outcome {
        passed: inside >= need,
        detail: format!("{inside}/{trials} within a factor 1 ± 1/2 (need {need}), worst deviation {worst:.3}"),
    }
}

/// `d/2 < |Ω| < 2d` for `Ω ~ Ber(d/n)` once `d ≥ 4·ln(1/δ)`.
pub fn bernoulli_cardinality(trials: usize, delta: f64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let n = 1000;
    let d_min = (4.0 * (1.0 / delta).ln()).ceil() as usize;
    let need = ((1.0 - delta) * trials as f64).ceil() as usize;
    let mut worst = trials;
    for d in [d_min, 20, 50, 200] {
        let ok = (0..trials)
            .filter(|_| {
                let s = IndexSet::bernoulli(&mut rng, n, d as f64 / n as f64).len();
                2 * s > d && s < 2 * d
            })
            .count();
        worst = worst.min(ok);
    }
    Outcome {
        passed: worst >= need,
        detail: format!("worst {worst}/{trials} within (d/2, 2d) over d in {{{d_min},20,50,200}} (need {need})"),
    }
}

/// An `m×s` standard Gaussian matrix has full column rank for every `s ≤ m`.
pub fn gaussian_full_rank(trials: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let m = 30;
    let mut failures = 0;
    let mut smallest = f64::INFINITY;
    for t in 0..trials {
        let s = t % m + 1;
        let a = gaussian(&mut rng, m, s);
        let sv = a.svd(false, false).singular_values;
        let ratio = sv.min() / sv.max();
        smallest = smallest.min(ratio);
        if ratio <= 1e-6 {
            failures += 1;
        }
    }
    Outcome {
        passed: failures == 0,
        detail: format!("{failures}/{trials} below 1e-6, smallest σ_min/σ_max = {smallest:.2e}"),
    }
}
