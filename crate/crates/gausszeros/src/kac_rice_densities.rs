//! The k-point functions of the zero set through the partition formula
//! `ρ_I = V_I N_I / ((2π)^{k/2} D_I^{1/2})`, the vanishing-order constant
//! `ℓ(y)` on the diagonal, and clustering diagnostics.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::correlation_models::{factorial, CorrelationModel};
use crate::ddouble::DD;
use crate::divided_differences::{snap, CovarianceEngine};
use crate::error::{Error, Result};
use crate::gaussian_conditioning::{assemble_context, check_psd, pi_k, psd_cholesky, MonteCarloSpec, DEGENERACY_RATIO};
use crate::partitions_combinatorics::{cluster_partition, IndexPartition};
use crate::rng;

/// Largest configuration accepted by [`rho_k`].
pub const MAX_POINTS: usize = 6;

#[derive(Debug, Clone, Serialize)]
pub struct DensityResult {
    pub rho: f64,
    /// `det Θ_I`.
    pub d_value: f64,
    /// `Π_k(Λ_I)`.
    pub n_value: f64,
    /// Monte Carlo standard error of `n_value` (0 for `k <= 2`).
    pub n_std_error: f64,
    pub partition_used: IndexPartition,
    /// `∏_I ∏_{i<j ∈ I} |x_i − x_j|`.
    pub vandermonde_factor: f64,
}

impl DensityResult {
    /// Standard error of `rho` inherited from `n_value`.
    pub fn rho_std_error(&self) -> f64 {
        if self.n_value > 0.0 {
            self.rho * self.n_std_error / self.n_value
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VanishingConstant {
    pub value: f64,
    pub std_error: f64,
    /// Groups of coinciding points.
    pub partition: IndexPartition,
}

/// `ρ_k(x)` with the default Monte Carlo budget.
pub fn rho_k(model: &CorrelationModel, x: &[f64]) -> Result<DensityResult> {
    rho_k_with(model, x, &MonteCarloSpec::default())
}

/// `ρ_k(x)` through the scale-1 cluster partition, falling back to the
/// single block if that partition is degenerate.
pub fn rho_k_with(model: &CorrelationModel, x: &[f64], mc: &MonteCarloSpec) -> Result<DensityResult> {
    if x.len() > MAX_POINTS {
        return Err(Error::SizeCap { n: x.len(), max: MAX_POINTS });
    }
    let part = cluster_partition(x, 1.0);
    match rho_with_partition_mc(model, x, &part, mc) {
        Err(Error::DegenerateConfiguration(_)) if part.num_blocks() > 1 => {
            rho_with_partition_mc(model, x, &IndexPartition::one_block(x.len()), mc)
        }
        r => r,
    }
}

pub fn rho_with_partition(model: &CorrelationModel, x: &[f64], partition: &IndexPartition) -> Result<DensityResult> {
    rho_with_partition_mc(model, x, partition, &MonteCarloSpec::default())
}

pub fn rho_with_partition_mc(
    model: &CorrelationModel,
    x: &[f64],
    partition: &IndexPartition,
    mc: &MonteCarloSpec,
) -> Result<DensityResult> {
    let ctx = assemble_context(model, x, partition)?;
    let lambda = ctx.lambda.as_ref().ok_or_else(|| {
        Error::DegenerateConfiguration(format!(
            "det Θ = {:e} for partition {} of {:?}",
            ctx.d_value, partition, x
        ))
    })?;
    let (n_value, n_std_error) = pi_k(lambda, mc)?;
    let vandermonde_factor = vandermonde(&ctx.x, partition);
    let k = x.len() as f64;
    let rho = (vandermonde_factor * n_value / ((2.0 * PI).powf(k / 2.0) * ctx.d_value.sqrt())).max(0.0);
    Ok(DensityResult { rho, d_value: ctx.d_value, n_value, n_std_error, partition_used: partition.clone(), vandermonde_factor })
}

fn vandermonde(x: &[f64], partition: &IndexPartition) -> f64 {
    let mut v = 1.0;
    for b in partition.blocks() {
        for (a, &i) in b.iter().enumerate() {
            for &j in &b[a + 1..] {
                v *= (x[i] - x[j]).abs();
            }
        }
    }
    v
}

/// `E ∏ |Z_i|^{m_i}` for `Z ~ N(0, U)`: closed forms for one coordinate and
/// for two coordinates with exponents up to 2, Monte Carlo otherwise.
pub fn abs_moment(u: &DMatrix<f64>, exponents: &[usize], mc: &MonteCarloSpec) -> Result<(f64, f64)> {
    check_psd(u)?;
    let k = exponents.len();
    let abs_normal = |m: usize| -> f64 {
        // E|N(0,1)|^m
        2f64.powf(m as f64 / 2.0) * statrs::function::gamma::gamma((m as f64 + 1.0) / 2.0) / PI.sqrt()
    };
    if k == 1 {
        let s = u[(0, 0)].max(0.0).sqrt();
        return Ok((s.powi(exponents[0] as i32) * abs_normal(exponents[0]), 0.0));
    }
    if k == 2 {
        let (s1, s2) = (u[(0, 0)].max(0.0).sqrt(), u[(1, 1)].max(0.0).sqrt());
        let r = if s1 * s2 > 0.0 { (u[(0, 1)] / (s1 * s2)).clamp(-1.0, 1.0) } else { 0.0 };
        let c = (2.0 / PI).sqrt();
        let closed = match (exponents[0], exponents[1]) {
            (1, 1) => return pi_k(u, mc),
            (2, 1) => Some(s1 * s1 * s2 * c * (1.0 + r * r)),
            (1, 2) => Some(s2 * s2 * s1 * c * (1.0 + r * r)),
            (2, 2) => Some(s1 * s1 * s2 * s2 * (1.0 + 2.0 * r * r)),
            _ => None,
        };
        if let Some(v) = closed {
            return Ok((v, 0.0));
        }
    }
    if mc.samples < 2 || mc.chunk_size == 0 {
        return Err(Error::InvalidInput("Monte Carlo needs at least 2 samples and a positive chunk size".into()));
    }
    let l = psd_cholesky(u);
    let chunks = mc.samples.div_ceil(mc.chunk_size);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let m = mc.chunk_size.min(mc.samples - c * mc.chunk_size);
            let mut g = rng::stream(mc.seed, c as u64);
            let mut z = vec![0.0; k];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..m {
                for v in z.iter_mut() {
                    *v = g.sample(StandardNormal);
                }
                let mut p = 1.0;
                for i in 0..k {
                    let xi: f64 = (0..=i).map(|j| l[(i, j)] * z[j]).sum();
                    p *= xi.abs().powi(exponents[i] as i32);
                }
                s += p;
                s2 += p * p;
            }
            (s, s2)
        })
        .collect();
    let n = mc.samples as f64;
    let (s, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let mean = s / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

/// `ℓ(y)`: the limit of `ρ_k(x) / ∏_I ∏_{i<j∈I} |x_i − x_j|` as `x → y`.
pub fn vanishing_constant(model: &CorrelationModel, y: &[f64]) -> Result<VanishingConstant> {
    vanishing_constant_with(model, y, &MonteCarloSpec::default())
}

pub fn vanishing_constant_with(model: &CorrelationModel, y: &[f64], mc: &MonteCarloSpec) -> Result<VanishingConstant> {
    if y.is_empty() {
        return Err(Error::InvalidInput("configuration must be non-empty".into()));
    }
    let y = snap(y);
    let partition = cluster_partition(&y, 0.0);
    let sizes: Vec<usize> = partition.blocks().iter().map(Vec::len).collect();
    let pos: Vec<f64> = partition.blocks().iter().map(|b| y[b[0]]).collect();
    let largest = *sizes.iter().max().unwrap();
    let mut eng = CovarianceEngine::<DD>::new(model, 2 * largest)?;

    // Conditioning coordinates f^{(i)}(y_I), i < |I|; targets f^{(|I|)}(y_I).
    let lower: Vec<(f64, usize)> =
        pos.iter().zip(&sizes).flat_map(|(&p, &m)| (0..m).map(move |i| (p, i))).collect();
    let upper: Vec<(f64, usize)> = pos.iter().zip(&sizes).map(|(&p, &m)| (p, m)).collect();
    let (n, k) = (lower.len(), upper.len());
    let mut cov = |a: (f64, usize), b: (f64, usize)| eng.elementary(a.0, a.1, b.0, b.1);
    let va: Vec<Vec<DD>> = lower.iter().map(|&a| lower.iter().map(|&b| cov(a, b)).collect()).collect();
    let vb: Vec<Vec<DD>> = upper.iter().map(|&a| lower.iter().map(|&b| cov(a, b)).collect()).collect();
    let vc: Vec<Vec<DD>> = upper.iter().map(|&a| upper.iter().map(|&b| cov(a, b)).collect()).collect();

    let scale: f64 = (0..n).map(|i| va[i][i].to_f64()).product();
    let mut l = vec![vec![DD::ZERO; n]; n];
    for j in 0..n {
        let mut d = va[j][j];
        for t in 0..j {
            d -= l[j][t] * l[j][t];
        }
        if d.hi <= 0.0 {
            return Err(Error::DegenerateConfiguration(format!("derivative vector at {y:?} is degenerate")));
        }
        l[j][j] = d.sqrt();
        for i in j + 1..n {
            let mut v = va[i][j];
            for t in 0..j {
                v -= l[i][t] * l[j][t];
            }
            l[i][j] = v / l[j][j];
        }
    }
    let det = (0..n).fold(DD::ONE, |acc, i| acc * l[i][i] * l[i][i]).to_f64();
    if det <= DEGENERACY_RATIO * scale {
        return Err(Error::DegenerateConfiguration(format!("derivative vector at {y:?} is degenerate (det {det:e})")));
    }
    // W = L^{-1} B^T; conditional variance C − W^T W.
    let mut w = vec![vec![DD::ZERO; k]; n];
    for c in 0..k {
        for r in 0..n {
            let mut v = vb[c][r];
            for t in 0..r {
                v -= l[r][t] * w[t][c];
            }
            w[r][c] = v / l[r][r];
        }
    }
    let cond = DMatrix::from_fn(k, k, |i, j| {
        let mut v = vc[i][j];
        for t in 0..n {
            v -= w[t][i] * w[t][j];
        }
        v.to_f64()
    });

    let pref: f64 =
        sizes.iter().map(|&m| (0..m).map(|i| factorial(i) / factorial(m)).product::<f64>()).product();
    let (moment, se) = abs_moment(&cond, &sizes, mc)?;
    let norm = (2.0 * PI).powf(n as f64 / 2.0) * det.sqrt();
    Ok(VanishingConstant { value: pref * moment / norm, std_error: pref * se / norm, partition })
}

/// `∏_I ρ_{|I|}(x_I) / ρ_k(x)` and the bound `‖κ‖_{k,η}^{1/2}`, where `η` is
/// the smallest distance between points of different blocks.
pub fn clustering_ratio(model: &CorrelationModel, x: &[f64], partition: &IndexPartition) -> Result<(f64, f64)> {
    clustering_ratio_with(model, x, partition, &MonteCarloSpec::default())
}

pub fn clustering_ratio_with(
    model: &CorrelationModel,
    x: &[f64],
    partition: &IndexPartition,
    mc: &MonteCarloSpec,
) -> Result<(f64, f64)> {
    if partition.ground_size() != x.len() {
        return Err(Error::GroundSetMismatch(x.len(), partition.ground_size()));
    }
    if partition.num_blocks() <= 1 {
        return Ok((1.0, 0.0));
    }
    let mut eta = f64::INFINITY;
    for (a, ba) in partition.blocks().iter().enumerate() {
        for bb in &partition.blocks()[a + 1..] {
            for &i in ba {
                for &j in bb {
                    eta = eta.min((x[i] - x[j]).abs());
                }
            }
        }
    }
    if eta < 1.0 {
        return Err(Error::SeparationTooSmall { eta });
    }
    let mut prod = 1.0;
    for b in partition.blocks() {
        let xb: Vec<f64> = b.iter().map(|&i| x[i]).collect();
        prod *= rho_k_with(model, &xb, mc)?.rho;
    }
    let full = rho_k_with(model, x, mc)?.rho;
    let bound = model.tail_norm(x.len(), eta)?.sqrt();
    Ok((prod / full, bound))
}
