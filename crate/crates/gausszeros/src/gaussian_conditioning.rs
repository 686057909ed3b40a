//! Block covariance matrices of the divided-difference Gaussian vectors, the
//! conditional variance `Λ_I`, and the expected absolute product `Π_k`.
//!
//! For a partition `I` of the indices, each block `{i_1 < … < i_m}`
//! contributes the coordinates `[f]_1(x_{i_1}), …, [f]_m(x_{i_1}, …, x_{i_m})`
//! to `X_I(x)` and `[f]_{m+1}(x_{i_1}, …, x_{i_m}, x_{i_j})` for `j = 1..m` to
//! `Y_I(x)`. Then `Θ = Var X`, `Ξ = Cov(Y, X)`, `Ω = Var Y` and
//! `Λ = Ω − Ξ Θ^{-1} Ξ^T`. Everything is assembled in double-double.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation_models::CorrelationModel;
use crate::ddouble::DD;
use crate::divided_differences::{snap, CovarianceEngine, Functional};
use crate::error::{Error, Result};
use crate::partitions_combinatorics::IndexPartition;
use crate::rng;

/// `det Θ` below this fraction of `∏ Θ_ii` counts as degenerate.
pub const DEGENERACY_RATIO: f64 = 1e-12;

/// Sample budget and seeding for Monte Carlo evaluation of `Π_k`, `k >= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloSpec {
    pub samples: usize,
    pub seed: u64,
    /// Samples per independently seeded chunk. Results depend on this and
    /// on `seed`, never on the number of worker threads.
    pub chunk_size: usize,
}

impl Default for MonteCarloSpec {
    fn default() -> Self {
        MonteCarloSpec { samples: 1_000_000, seed: 0x6a75_7a65_726f_7321, chunk_size: 1 << 14 }
    }
}

impl MonteCarloSpec {
    pub fn with_samples(samples: usize, seed: u64) -> Self {
        MonteCarloSpec { samples, seed, ..Default::default() }
    }
}

/// The Gaussian data attached to a configuration and a partition.
#[derive(Debug, Clone)]
pub struct KacRiceContext {
    pub x: Vec<f64>,
    pub partition: IndexPartition,
    pub theta: DMatrix<f64>,
    pub xi: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    /// `Ω − Ξ Θ^{-1} Ξ^T`, present only when `Θ` is non-degenerate.
    pub lambda: Option<DMatrix<f64>>,
    /// `det Θ`.
    pub d_value: f64,
    /// `∏ Θ_ii`, the Hadamard bound on `det Θ`.
    pub d_scale: f64,
}

impl KacRiceContext {
    pub fn is_degenerate(&self) -> bool {
        self.lambda.is_none()
    }
}

fn block_functionals(x: &[f64], partition: &IndexPartition) -> (Vec<Functional<DD>>, Vec<Functional<DD>>) {
    let mut xs = Vec::with_capacity(x.len());
    let mut ys = Vec::with_capacity(x.len());
    for block in partition.blocks() {
        let pts: Vec<f64> = block.iter().map(|&i| x[i]).collect();
        for a in 1..=pts.len() {
            xs.push(Functional::divided_difference(&pts[..a]));
        }
        for &p in &pts {
            let mut ext = pts.clone();
            ext.push(p);
            ys.push(Functional::divided_difference(&ext));
        }
    }
    (xs, ys)
}

/// Cholesky factor of a symmetric positive definite matrix, or `None` if a
/// pivot is not positive.
fn cholesky_dd(a: &[Vec<DD>]) -> Option<Vec<Vec<DD>>> {
    let n = a.len();
    let mut l = vec![vec![DD::ZERO; n]; n];
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if d.hi <= 0.0 {
            return None;
        }
        let s = d.sqrt();
        l[j][j] = s;
        for i in j + 1..n {
            let mut v = a[i][j];
            for k in 0..j {
                v -= l[i][k] * l[j][k];
            }
            l[i][j] = v / s;
        }
    }
    Some(l)
}

fn to_matrix(m: &[Vec<DD>]) -> DMatrix<f64> {
    let (r, c) = (m.len(), m.first().map_or(0, Vec::len));
    DMatrix::from_fn(r, c, |i, j| m[i][j].to_f64())
}

/// Assembles `Θ_I`, `Ξ_I`, `Ω_I`, `det Θ_I` and, when `Θ_I` is
/// non-degenerate, `Λ_I`.
pub fn assemble_context(model: &CorrelationModel, x: &[f64], partition: &IndexPartition) -> Result<KacRiceContext> {
    let n = x.len();
    if n == 0 {
        return Err(Error::InvalidInput("configuration must be non-empty".into()));
    }
    if partition.ground_size() != n {
        return Err(Error::GroundSetMismatch(n, partition.ground_size()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("configuration must be finite".into()));
    }
    let x = snap(x);
    let largest = partition.blocks().iter().map(Vec::len).max().unwrap_or(1);
    let mut eng = CovarianceEngine::<DD>::new(model, 2 * largest)?;
    let (xs, ys) = block_functionals(&x, partition);

    let mut theta = vec![vec![DD::ZERO; n]; n];
    let mut omega = vec![vec![DD::ZERO; n]; n];
    let mut xi = vec![vec![DD::ZERO; n]; n];
    for i in 0..n {
        for j in 0..=i {
            theta[i][j] = eng.cov(&xs[i], &xs[j]);
            theta[j][i] = theta[i][j];
            omega[i][j] = eng.cov(&ys[i], &ys[j]);
            omega[j][i] = omega[i][j];
        }
        for j in 0..n {
            xi[i][j] = eng.cov(&ys[i], &xs[j]);
        }
    }

    let d_scale: f64 = (0..n).map(|i| theta[i][i].to_f64()).product();
    let chol = cholesky_dd(&theta);
    let d_value = match &chol {
        Some(l) => (0..n).fold(DD::ONE, |acc, i| acc * l[i][i] * l[i][i]).to_f64(),
        None => 0.0,
    };
    let lambda = match chol {
        Some(l) if d_value > DEGENERACY_RATIO * d_scale => {
            // W = L^{-1} Ξ^T, then Λ = Ω − W^T W.
            let mut w = vec![vec![DD::ZERO; n]; n];
            for col in 0..n {
                for r in 0..n {
                    let mut v = xi[col][r];
                    for k in 0..r {
                        v -= l[r][k] * w[k][col];
                    }
                    w[r][col] = v / l[r][r];
                }
            }
            let mut lam = vec![vec![DD::ZERO; n]; n];
            for i in 0..n {
                for j in 0..=i {
                    let mut v = omega[i][j];
                    for k in 0..n {
                        v -= w[k][i] * w[k][j];
                    }
                    lam[i][j] = v;
                    lam[j][i] = v;
                }
            }
            Some(to_matrix(&lam))
        }
        _ => None,
    };

    Ok(KacRiceContext {
        x,
        partition: partition.clone(),
        theta: to_matrix(&theta),
        xi: to_matrix(&xi),
        omega: to_matrix(&omega),
        lambda,
        d_value,
        d_scale,
    })
}

/// Fails with `NotPsd` when the smallest eigenvalue is below `−1e-10·trace`.
pub fn check_psd(u: &DMatrix<f64>) -> Result<()> {
    if !u.is_square() {
        return Err(Error::InvalidInput("variance matrix must be square".into()));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("variance matrix must be finite".into()));
    }
    if u.nrows() == 0 {
        return Ok(());
    }
    let sym = (u + u.transpose()) * 0.5;
    let trace = sym.trace().abs();
    let min = SymmetricEigen::new(sym).eigenvalues.min();
    if min < -1e-10 * trace.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(())
}

/// Lower Cholesky factor of a PSD matrix; pivots that are zero up to
/// roundoff produce zero columns.
pub fn psd_cholesky(u: &DMatrix<f64>) -> DMatrix<f64> {
    let n = u.nrows();
    let floor = 1e-14 * (0..n).map(|i| u[(i, i)].abs()).fold(0.0, f64::max);
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = u[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= floor {
            continue;
        }
        let s = d.sqrt();
        l[(j, j)] = s;
        for i in j + 1..n {
            let mut v = u[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / s;
        }
    }
    l
}

fn pi1(u: f64) -> f64 {
    (2.0 / std::f64::consts::PI).sqrt() * u.max(0.0).sqrt()
}

fn pi2(u11: f64, u22: f64, u12: f64) -> f64 {
    let s = (u11.max(0.0) * u22.max(0.0)).sqrt();
    if s == 0.0 {
        return 0.0;
    }
    let r = (u12 / s).clamp(-1.0, 1.0);
    2.0 / std::f64::consts::PI * s * ((1.0 - r * r).sqrt() + r * r.asin())
}

/// `Π_k(U) = E ∏ |X_i|` for `X ~ N(0, U)`, with its standard error.
///
/// Sizes 1 and 2 are closed forms (standard error 0). From size 3 on the
/// estimate is Monte Carlo with a control variate: the coordinates are
/// grouped into strongly correlated pairs, and the same normal draws are fed
/// through the Cholesky factor of the pairwise block-diagonal part of `U`,
/// whose expectation is a product of closed forms.
pub fn pi_k(variance: &DMatrix<f64>, mc: &MonteCarloSpec) -> Result<(f64, f64)> {
    check_psd(variance)?;
    let u = (variance + variance.transpose()) * 0.5;
    let k = u.nrows();
    match k {
        0 => return Ok((1.0, 0.0)),
        1 => return Ok((pi1(u[(0, 0)]), 0.0)),
        2 => return Ok((pi2(u[(0, 0)], u[(1, 1)], u[(0, 1)]), 0.0)),
        _ => {}
    }
    if mc.samples < 2 || mc.chunk_size == 0 {
        return Err(Error::InvalidInput("Monte Carlo needs at least 2 samples and a positive chunk size".into()));
    }

    // Greedy pairing by decreasing |correlation|.
    let corr = |i: usize, j: usize| {
        let s = (u[(i, i)] * u[(j, j)]).sqrt();
        if s > 0.0 {
            (u[(i, j)] / s).abs()
        } else {
            0.0
        }
    };
    let mut cand: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    cand.sort_by(|a, b| corr(b.0, b.1).total_cmp(&corr(a.0, a.1)).then(a.cmp(b)));
    let mut used = vec![false; k];
    let mut perm = Vec::with_capacity(k);
    for (i, j) in cand {
        if !used[i] && !used[j] {
            used[i] = true;
            used[j] = true;
            perm.push(i);
            perm.push(j);
        }
    }
    perm.extend((0..k).filter(|&i| !used[i]));

    let up = DMatrix::from_fn(k, k, |i, j| u[(perm[i], perm[j])]);
    let block = DMatrix::from_fn(k, k, |i, j| if i / 2 == j / 2 { up[(i, j)] } else { 0.0 });
    let mut exact = 1.0;
    for p in (0..k).step_by(2) {
        exact *= if p + 1 < k { pi2(up[(p, p)], up[(p + 1, p + 1)], up[(p, p + 1)]) } else { pi1(up[(p, p)]) };
    }
    let l = psd_cholesky(&up);
    let lc = psd_cholesky(&block);

    let chunks = mc.samples.div_ceil(mc.chunk_size);
    let stats: Vec<(f64, f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let m = mc.chunk_size.min(mc.samples - c * mc.chunk_size);
            let mut g = rng::stream(mc.seed, c as u64);
            let mut z = vec![0.0; k];
            let (mut count, mut mean, mut m2) = (0.0, 0.0, 0.0);
            for _ in 0..m {
                for v in z.iter_mut() {
                    *v = g.sample(StandardNormal);
                }
                let (mut prod, mut prod_c) = (1.0, 1.0);
                for i in 0..k {
                    let (mut a, mut b) = (0.0, 0.0);
                    for j in 0..=i {
                        a += l[(i, j)] * z[j];
                        b += lc[(i, j)] * z[j];
                    }
                    prod *= a.abs();
                    prod_c *= b.abs();
                }
                let d = prod - prod_c;
                count += 1.0;
                let delta = d - mean;
                mean += delta / count;
                m2 += delta * (d - mean);
            }
            (count, mean, m2)
        })
        .collect();
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for (nb, mb, m2b) in stats {
        let tot = n + nb;
        let delta = mb - mean;
        mean += delta * nb / tot;
        m2 += m2b + delta * delta * n * nb / tot;
        n = tot;
    }
    let stderr = (m2 / (n - 1.0) / n).sqrt();
    Ok((exact + mean, stderr))
}

/// `(2k − 1)!!`, the `2k`-th moment of a standard normal variable.
pub fn double_factorial_odd(k: usize) -> f64 {
    (1..2 * k).step_by(2).map(|v| v as f64).product()
}

/// Hölder constant `C_k = k (2k+1)^{(k+1)/2} μ_{2k}^{1/2}` of `Π_k` with
/// respect to the sup-norm.
pub fn holder_constant(k: usize) -> f64 {
    let kf = k as f64;
    kf * (2.0 * kf + 1.0).powf((kf + 1.0) / 2.0) * double_factorial_odd(k).sqrt()
}
