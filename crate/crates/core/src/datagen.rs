//! Seeded instance generators and noise injection.
//!
//! Every generator is a pure function of its parameters and seed.

use rand::seq::{index, SliceRandom};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{norm, numerical_rank, orthonormalize, DenseMatrix, OrthoBasis, RANK_TOL};
use crate::sampling::{rng_from_seed, StreamRng};

/// Widths of the five column blocks in the cumulative-basis instance.
pub const CUMULATIVE_BLOCKS: [usize; 5] = [200, 200, 200, 200, 1200];

#[derive(Clone, Debug, PartialEq)]
pub enum NoisePositions {
    Random,
    Explicit(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum NoiseSpec {
    None,
    /// Every column moves by exactly `eps` in ℓ₂, in a random direction.
    Bounded { eps: f64 },
    /// `s0` columns replaced by normalized standard Gaussian draws.
    SparseColumns { s0: usize, positions: NoisePositions },
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceMeta {
    pub generator: String,
    pub params: Vec<(String, String)>,
    pub seed: u64,
}

/// A generated problem: clean matrix, observation and ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    /// Clean matrix `L`.
    pub clean: DenseMatrix,
    /// Observed matrix `M`.
    pub observed: DenseMatrix,
    /// Columns of `M` that carry noise (sorted).
    pub noise_support: Vec<usize>,
    /// Orthonormal basis of the column space of `L`.
    pub basis: DenseMatrix,
    pub rank: usize,
    /// Subspace label of every column, for mixture instances.
    pub membership: Option<Vec<usize>>,
    pub meta: InstanceMeta,
}

impl Instance {
    fn noiseless(clean: DenseMatrix, basis: DenseMatrix, rank: usize, meta: InstanceMeta) -> Self {
        Instance {
            observed: clean.clone(),
            clean,
            noise_support: Vec::new(),
            basis,
            rank,
            membership: None,
            meta,
        }
    }

    pub fn m(&self) -> usize {
        self.clean.rows()
    }

    pub fn n(&self) -> usize {
        self.clean.cols()
    }
}

fn gaussian_vec(rng: &mut StreamRng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

fn gaussian_matrix(rng: &mut StreamRng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::new(rows, cols, gaussian_vec(rng, rows * cols)).expect("gaussian draws are finite")
}

/// Gaussian direction scaled to unit norm (redrawn on the null event).
fn unit_gaussian(rng: &mut StreamRng, len: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, len);
        let n = norm(&v);
        if n > 0.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Scales every column to unit norm; `None` if some column is zero.
fn normalize_columns(a: &DenseMatrix) -> Option<DenseMatrix> {
    let norms = a.column_norms();
    if norms.contains(&0.0) {
        return None;
    }
    let data = a
        .data()
        .chunks(a.cols())
        .flat_map(|row| row.iter().zip(&norms).map(|(x, n)| x / n))
        .collect();
    Some(DenseMatrix::new(a.rows(), a.cols(), data).expect("scaled entries are finite"))
}

fn meta(generator: &str, params: &[(&str, String)], seed: u64) -> InstanceMeta {
    InstanceMeta {
        generator: generator.to_string(),
        params: params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        seed,
    }
}

/// `L = normalize_columns(X·Y)` with standard normal `X ∈ R^{m×r}`, `Y ∈ R^{r×n}`.
pub fn gen_gaussian_lowrank(m: usize, n: usize, r: usize, seed: u64) -> Result<Instance> {
    if r == 0 || r > m.min(n) {
        return Err(Error::InvalidConfig(format!(
            "rank {r} must lie in [1, min({m}, {n})]"
        )));
    }
    let mut rng = rng_from_seed(seed);
    loop {
        let x = gaussian_matrix(&mut rng, m, r);
        let y = gaussian_matrix(&mut rng, r, n);
        let Some(l) = normalize_columns(&x.matmul(&y)?) else {
            continue;
        };
        if numerical_rank(&l, RANK_TOL) != r {
            continue;
        }
        let basis = orthonormalize(&x);
        let params = [("m", m.to_string()), ("n", n.to_string()), ("r", r.to_string())];
        return Ok(Instance::noiseless(l, basis, r, meta("gaussian", &params, seed)));
    }
}

/// Five Gaussian base vectors `u₁..u₅`; block `b` of the columns repeats
/// `u₁ + … + u_b`, with block widths [`CUMULATIVE_BLOCKS`], columns normalized.
pub fn gen_cumulative(m: usize, seed: u64) -> Result<Instance> {
    if m < CUMULATIVE_BLOCKS.len() {
        return Err(Error::InvalidConfig(format!("cumulative instance needs m >= 5, got {m}")));
    }
    let mut rng = rng_from_seed(seed);
    loop {
        let base: Vec<Vec<f64>> = (0..CUMULATIVE_BLOCKS.len())
            .map(|_| gaussian_vec(&mut rng, m))
            .collect();
        let mut running = vec![0.0; m];
        let mut cols = Vec::new();
        for (u, &width) in base.iter().zip(&CUMULATIVE_BLOCKS) {
            running.iter_mut().zip(u).for_each(|(a, b)| *a += b);
            let nrm = norm(&running);
            let col: Vec<f64> = running.iter().map(|x| x / nrm).collect();
            cols.extend(std::iter::repeat_n(col, width));
        }
        let basis = OrthoBasis::spanning(m, &base);
        if basis.len() != base.len() {
            continue;
        }
        let l = DenseMatrix::from_columns(m, &cols)?;
        return Ok(Instance::noiseless(
            l,
            basis.to_matrix(),
            base.len(),
            meta("cumulative", &[("m", m.to_string())], seed),
        ));
    }
}

/// `h` independent `tau`-dimensional subspaces cut from one orthonormalized
/// Gaussian frame, with `per_subspace` unit columns drawn from each. Column
/// order is shuffled; `membership` records the subspace of every column.
pub fn gen_mixture(m: usize, per_subspace: usize, h: usize, tau: usize, seed: u64) -> Result<Instance> {
    let r = h * tau;
    if r == 0 || r > m || per_subspace == 0 {
        return Err(Error::InvalidConfig(format!(
            "mixture needs 1 <= h*tau <= m and per_subspace >= 1 (m={m}, h={h}, tau={tau}, per={per_subspace})"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let frame = loop {
        let f = orthonormalize(&gaussian_matrix(&mut rng, m, r));
        if f.cols() == r {
            break f;
        }
    };
    let frame_cols = frame.columns();
    let mut labelled: Vec<(usize, Vec<f64>)> = Vec::with_capacity(h * per_subspace);
    for g in 0..h {
        let group = &frame_cols[g * tau..(g + 1) * tau];
        for _ in 0..per_subspace {
            let coeffs = unit_gaussian(&mut rng, tau);
            let mut col = vec![0.0; m];
            for (u, &c) in group.iter().zip(&coeffs) {
                col.iter_mut().zip(u).for_each(|(a, b)| *a += c * b);
            }
            let nrm = norm(&col);
            labelled.push((g, col.into_iter().map(|x| x / nrm).collect()));
        }
    }
    labelled.shuffle(&mut rng);
    let membership = labelled.iter().map(|(g, _)| *g).collect();
    let cols: Vec<Vec<f64>> = labelled.into_iter().map(|(_, c)| c).collect();
    let l = DenseMatrix::from_columns(m, &cols)?;
    let params = [
        ("m", m.to_string()),
        ("per", per_subspace.to_string()),
        ("h", h.to_string()),
        ("tau", tau.to_string()),
    ];
    let mut inst = Instance::noiseless(l, frame, r, meta("mixture", &params, seed));
    inst.membership = Some(membership);
    Ok(inst)
}

/// Block length `ℓ = ⌊m/(μ₀·r)⌋` of the lower-bound construction.
pub fn lower_bound_block(m: usize, mu0: f64, r: usize) -> usize {
    (m as f64 / (mu0 * r as f64)).floor() as usize
}

/// Block-diagonal `L = Σ_k b_k u_k u_kᵀ` with `u_k = ℓ^{-1/2} Σ_{i∈B_k} e_i`.
///
/// The columns of this instance are not normalized (entries are `b_k/ℓ`
/// inside block `k` and exactly zero elsewhere). The seed is recorded but
/// the construction is deterministic.
pub fn gen_lower_bound(m: usize, mu0: f64, r: usize, b_values: &[f64], seed: u64) -> Result<Instance> {
    if b_values.len() != r || r == 0 {
        return Err(Error::InvalidConfig(format!(
            "need exactly r = {r} block weights, got {}",
            b_values.len()
        )));
    }
    if !(mu0 > 0.0) {
        return Err(Error::InvalidConfig(format!("mu0 must be positive, got {mu0}")));
    }
    let ell = lower_bound_block(m, mu0, r);
    if ell == 0 {
        return Err(Error::InvalidConfig(format!(
            "block length floor(m/(mu0*r)) is 0 for m={m}, mu0={mu0}, r={r}"
        )));
    }
    let mut l = vec![0.0; m * m];
    let mut u = vec![0.0; m * r];
    let scale = 1.0 / ell as f64;
    for (k, &b) in b_values.iter().enumerate() {
        let block = k * ell..(k + 1) * ell;
        for i in block.clone() {
            u[i * r + k] = scale.sqrt();
            for j in block.clone() {
                l[i * m + j] = b * scale;
            }
        }
    }
    let params = [
        ("m", m.to_string()),
        ("mu0", mu0.to_string()),
        ("r", r.to_string()),
        ("ell", ell.to_string()),
    ];
    Ok(Instance::noiseless(
        DenseMatrix::new(m, m, l)?,
        DenseMatrix::new(m, r, u)?,
        r,
        meta("lower_bound", &params, seed),
    ))
}

/// Applies `spec` to the clean matrix of `inst`, replacing any earlier noise.
pub fn apply_noise(inst: &Instance, spec: &NoiseSpec, seed: u64) -> Result<Instance> {
    let mut rng = rng_from_seed(seed);
    let (m, n) = (inst.m(), inst.n());
    let mut out = inst.clone();
    out.observed = inst.clean.clone();
    out.noise_support.clear();
    match spec {
        NoiseSpec::None => {}
        NoiseSpec::Bounded { eps } => {
            if !(*eps >= 0.0 && eps.is_finite()) {
                return Err(Error::InvalidConfig(format!("noise bound must be >= 0, got {eps}")));
            }
            for t in 0..n {
                let dir = unit_gaussian(&mut rng, m);
                let col: Vec<f64> = inst
                    .clean
                    .column(t)
                    .iter()
                    .zip(&dir)
                    .map(|(l, e)| l + eps * e)
                    .collect();
                out.observed.set_column(t, &col)?;
            }
            if *eps > 0.0 {
                out.noise_support = (0..n).collect();
            }
        }
        NoiseSpec::SparseColumns { s0, positions } => {
            if *s0 > n {
                return Err(Error::InvalidConfig(format!(
                    "cannot corrupt {s0} of {n} columns"
                )));
            }
            let mut support = match positions {
                NoisePositions::Random => index::sample(&mut rng, n, *s0).into_vec(),
                NoisePositions::Explicit(p) => {
                    if p.len() != *s0 {
                        return Err(Error::InvalidConfig(format!(
                            "{} explicit noise positions for s0 = {s0}",
                            p.len()
                        )));
                    }
                    p.clone()
                }
            };
            support.sort_unstable();
            if support.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidConfig("repeated noise position".into()));
            }
            if let Some(&bad) = support.iter().find(|&&j| j >= n) {
                return Err(Error::IndexOutOfBounds { index: bad, bound: n });
            }
            for &t in &support {
                out.observed.set_column(t, &unit_gaussian(&mut rng, m))?;
            }
            out.noise_support = support;
        }
    }
    Ok(out)
}

/// Adds a user-supplied noise matrix: `M = L + E`. Columns of `E` that are
/// not identically zero form the noise support.
pub fn apply_noise_matrix(inst: &Instance, noise: &DenseMatrix) -> Result<Instance> {
    if (noise.rows(), noise.cols()) != (inst.m(), inst.n()) {
        return Err(Error::DimensionMismatch(format!(
            "noise is {}x{}, instance is {}x{}",
            noise.rows(),
            noise.cols(),
            inst.m(),
            inst.n()
        )));
    }
    let data = inst
        .clean
        .data()
        .iter()
        .zip(noise.data())
        .map(|(a, b)| a + b)
        .collect();
    let mut out = inst.clone();
    out.observed = DenseMatrix::new(inst.m(), inst.n(), data)?;
    out.noise_support = noise
        .column_norms()
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0.0)
        .map(|(j, _)| j)
        .collect();
    Ok(out)
}
