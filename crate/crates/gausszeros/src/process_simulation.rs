//! Sampling stationary Gaussian paths with their derivative, extracting
//! zeros, and Monte Carlo estimates built on the zero sets.
//!
//! Paths are sampled jointly with `f'` by circulant embedding of the 2×2
//! matrix-valued covariance `(κ, κ'; −κ', −κ'')` on a periodic grid, so that
//! roots can be refined on the cubic Hermite interpolant. When the periodized
//! covariance is not positive, small grids fall back to a dense
//! factorization and large ones to spectral synthesis.

use std::f64::consts::PI;
use std::sync::Arc;

use log::{debug, warn};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::correlation_models::CorrelationModel;
use crate::error::{Error, Result};
use crate::pair_correlation_variance::{expected_linear_statistic, TestFunction};
use crate::rng::{derive_seed, from_seed, pairwise_sum};

/// Largest joint dimension `2n` for which the dense fallback is attempted.
pub const DENSE_FALLBACK_MAX: usize = 2000;
const CLIP_TOLERANCE: f64 = 1e-6;
const BOOTSTRAP_RESAMPLES: usize = 1000;
/// Largest covariance error accepted from spectral synthesis.
pub const SPECTRAL_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSpec {
    /// Left end of the observation window.
    pub origin: f64,
    /// Window length `L`; paths are observed on `[origin, origin + L]`.
    pub window_len: f64,
    /// Upper bound on the grid spacing.
    pub grid_step: f64,
    pub num_samples: usize,
    pub master_seed: u64,
    /// The periodic embedding has at least `padding_factor · n` nodes.
    pub padding_factor: f64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        SimulationSpec { origin: 0.0, window_len: 50.0, grid_step: 0.02, num_samples: 1000, master_seed: 0, padding_factor: 2.0 }
    }
}

impl SimulationSpec {
    pub fn window(origin: f64, window_len: f64, num_samples: usize, master_seed: u64) -> Self {
        SimulationSpec { origin, window_len, num_samples, master_seed, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.origin.is_finite()
            && self.window_len.is_finite()
            && self.window_len > 0.0
            && self.grid_step > 0.0
            && self.grid_step <= 0.05
            && self.num_samples >= 1
            && self.padding_factor >= 2.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "simulation needs window_len > 0, 0 < grid_step <= 0.05, num_samples >= 1 and padding_factor >= 2, got {self:?}"
            )))
        }
    }
}

/// Sorted zeros of one replicate inside its window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroSample {
    pub zeros: Vec<f64>,
    pub replicate_seed: u64,
    pub window: (f64, f64),
}

/// Grid values of `f` and `f'` for one replicate.
#[derive(Debug, Clone)]
pub struct SampledPath {
    pub origin: f64,
    pub step: f64,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
    pub replicate_seed: u64,
}

impl SampledPath {
    pub fn node(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }
}

enum Factor {
    /// Per-frequency 2×2 factors `A(k)` with `A A* = Ŝ(k)`, row-major.
    Circulant { m: usize, factors: Vec<[Complex64; 4]>, fft: Arc<dyn Fft<f64>> },
    /// `A` with `A A^T` the joint covariance of `(f(x_0..), f'(x_0..))`.
    Dense(DMatrix<f64>),
}

/// Reusable sampler for one model and grid.
pub struct PathSampler {
    spec: SimulationSpec,
    n: usize,
    step: f64,
    factor: Factor,
    spectral: bool,
}

impl PathSampler {
    pub fn new(model: &CorrelationModel, spec: &SimulationSpec) -> Result<Self> {
        spec.validate()?;
        model.kappa_derivs(0.0, 2)?;
        let intervals = (spec.window_len / spec.grid_step).ceil().max(1.0) as usize;
        let n = intervals + 1;
        let step = spec.window_len / intervals as f64;
        let mut last_err = String::new();
        for mult in [1.0, 2.0, 4.0] {
            match circulant_factor(model, n, step, spec.window_len, spec.padding_factor * mult) {
                Ok(factor) => return Ok(PathSampler { spec: *spec, n, step, factor, spectral: false }),
                Err(msg) => {
                    debug!("circulant embedding rejected: {msg}");
                    last_err = msg;
                }
            }
        }
        if 2 * n <= DENSE_FALLBACK_MAX {
            warn!("circulant embedding failed ({last_err}); using dense factorization with {} nodes", n);
            return Ok(PathSampler {
                spec: *spec,
                n,
                step,
                factor: Factor::Dense(dense_factor(model, n, step)?),
                spectral: false,
            });
        }
        match spectral_factor(model, spec) {
            Ok((factor, n, step)) => {
                warn!("circulant embedding failed ({last_err}); using spectral synthesis with step {step}");
                Ok(PathSampler { spec: *spec, n, step, factor, spectral: true })
            }
            Err(msg) => Err(Error::EmbeddingFailure(format!("{last_err}; {msg}"))),
        }
    }

    pub fn grid_len(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn uses_dense_fallback(&self) -> bool {
        matches!(self.factor, Factor::Dense(_))
    }

    pub fn uses_spectral_synthesis(&self) -> bool {
        self.spectral
    }

    /// Replicate `index` under the master seed.
    pub fn sample(&self, index: u64) -> SampledPath {
        let seed = derive_seed(self.spec.master_seed, index);
        let mut rng = from_seed(seed);
        let (f, df) = match &self.factor {
            Factor::Circulant { m, factors, fft } => sample_circulant(*m, factors, fft.as_ref(), self.n, &mut rng),
            Factor::Dense(a) => {
                let dim = a.nrows();
                let xi: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let v = a * nalgebra::DVector::from_vec(xi);
                (v.as_slice()[..self.n].to_vec(), v.as_slice()[self.n..].to_vec())
            }
        };
        SampledPath { origin: self.spec.origin, step: self.step, f, df, replicate_seed: seed }
    }

    pub fn zeros(&self, index: u64) -> ZeroSample {
        extract_zeros(&self.sample(index), &self.spec)
    }

    /// Zero sets of all replicates, computed in parallel, in replicate order.
    pub fn all_zeros(&self) -> Vec<ZeroSample> {
        (0..self.spec.num_samples as u64).into_par_iter().map(|i| self.zeros(i)).collect()
    }
}

fn sample_circulant(
    m: usize,
    factors: &[[Complex64; 4]],
    fft: &dyn Fft<f64>,
    n: usize,
    rng: &mut ChaCha12Rng,
) -> (Vec<f64>, Vec<f64>) {
    let mut yf = vec![Complex64::new(0.0, 0.0); m];
    let mut yd = vec![Complex64::new(0.0, 0.0); m];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..m {
        let mut g = || Complex64::new(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s);
        let (x1, x2) = (g(), g());
        let a = &factors[k];
        yf[k] = a[0] * x1 + a[1] * x2;
        yd[k] = a[2] * x1 + a[3] * x2;
    }
    fft.process(&mut yf);
    fft.process(&mut yd);
    let scale = (2.0 / m as f64).sqrt();
    (yf[..n].iter().map(|c| c.re * scale).collect(), yd[..n].iter().map(|c| c.re * scale).collect())
}

fn circulant_factor(
    model: &CorrelationModel,
    n: usize,
    step: f64,
    window_len: f64,
    padding: f64,
) -> std::result::Result<Factor, String> {
    let mut m = ((padding * n as f64).ceil() as usize).next_power_of_two();
    while (m / 2) as f64 * step < window_len + 10.0 {
        m *= 2;
    }
    let half = m / 2;
    let mut cff = vec![Complex64::new(0.0, 0.0); m];
    let mut cfd = vec![Complex64::new(0.0, 0.0); m];
    let mut cdd = vec![Complex64::new(0.0, 0.0); m];
    for j in 0..m {
        let lag = if j <= half { j as f64 } else { j as f64 - m as f64 } * step;
        let d = model.derivs_unchecked::<f64>(lag, 2);
        cff[j].re = d[0];
        cdd[j].re = -d[2];
        cfd[j].re = if j == half { 0.0 } else { d[1] };
    }
    let mut planner = FftPlanner::<f64>::new();
    let inverse = planner.plan_fft_inverse(m);
    // Ŝ(k) = Σ_j c(j) e^{+2πijk/M}.
    inverse.process(&mut cff);
    inverse.process(&mut cfd);
    inverse.process(&mut cdd);

    let mut factors = Vec::with_capacity(m);
    let (mut clipped, mut total, mut largest) = (0.0f64, 0.0f64, 0.0f64);
    let mut eig = Vec::with_capacity(m);
    for k in 0..m {
        // Hermitian [[a, c], [conj(c), d]] with a, d real.
        let (a, d) = (cff[k].re, cdd[k].re);
        let c = Complex64::new(0.0, cfd[k].im);
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + c.norm_sqr()).sqrt();
        let (l1, l2) = (mean + rad, mean - rad);
        largest = largest.max(l1.abs()).max(l2.abs());
        eig.push((a, d, c, l1, l2));
    }
    for (a, d, c, l1, l2) in eig {
        for l in [l1, l2] {
            total += l.abs();
            if l < 0.0 {
                clipped -= l;
            }
        }
        let (v1, v2) = if c.norm() <= 1e-300 {
            if a >= d {
                ([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
            } else {
                ([Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)], [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
            }
        } else {
            let unit = |l: f64| {
                let v = [c, Complex64::new(l - a, 0.0)];
                let nrm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
                [v[0] / nrm, v[1] / nrm]
            };
            (unit(l1), unit(l2))
        };
        let (s1, s2) = (l1.max(0.0).sqrt(), l2.max(0.0).sqrt());
        factors.push([v1[0] * s1, v2[0] * s2, v1[1] * s1, v2[1] * s2]);
    }
    let negligible = 1e-9 * largest * (2 * m) as f64;
    if clipped > CLIP_TOLERANCE * total && clipped > negligible {
        return Err(format!("negative spectral mass {clipped:e} of {total:e} with {m} nodes"));
    }
    if clipped > 0.0 {
        debug!("clipped negative spectral mass {clipped:e} of {total:e}");
    }
    Ok(Factor::Circulant { m, factors, fft: inverse })
}

/// Periodic spectral synthesis for grids too large for the dense fallback.
///
/// Frequency `kΔ`, `Δ = 2π/P`, carries the spectral mass of its cell
/// `[(k − ½)Δ, (k + ½)Δ]`; a band edge is placed on a cell boundary. The
/// grid step becomes `P/M` and the grid may overshoot the window. The period
/// is doubled until the synthesized covariances of `f` and `f'` are within
/// [`SPECTRAL_TOLERANCE`] of the model on all window lags.
fn spectral_factor(model: &CorrelationModel, spec: &SimulationSpec) -> std::result::Result<(Factor, usize, f64), String> {
    let (nodes, weights) = crate::quadrature::gl10();
    let cell = |lo: f64, hi: f64| -> f64 {
        let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        nodes.iter().zip(weights).map(|(x, w)| w * r * model.spectral_density(c + r * x)).sum()
    };
    let mut period = spec.padding_factor * (spec.window_len + 10.0);
    let mut worst = f64::INFINITY;
    for _ in 0..6 {
        let delta = match model.spectral_edge() {
            Some(b) => b / ((b * period / (2.0 * PI) - 0.5).ceil().max(0.0) + 0.5),
            None => 2.0 * PI / period,
        };
        let p = 2.0 * PI / delta;
        let m = ((p / spec.grid_step).ceil() as usize).next_power_of_two();
        let step = p / m as f64;
        let n = (spec.window_len / step).ceil() as usize + 1;
        let half = m / 2;
        let omega = |k: usize| if k <= half { k as f64 } else { k as f64 - m as f64 } * delta;
        let mut w = vec![0.0; m];
        for k in 0..=half {
            let v = if k == 0 { 2.0 * cell(0.0, 0.5 * delta) } else { cell((k as f64 - 0.5) * delta, (k as f64 + 0.5) * delta) };
            w[k] = v;
            if k > 0 && k < half {
                w[m - k] = v;
            }
        }
        let total = pairwise_sum(&w);
        if !(total > 0.0) {
            return Err("spectral density has no mass on the frequency grid".into());
        }
        w.iter_mut().for_each(|v| *v /= total);

        let mut planner = FftPlanner::<f64>::new();
        let inverse = planner.plan_fft_inverse(m);
        let mut cf: Vec<Complex64> = w.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut cd: Vec<Complex64> = (0..m).map(|k| Complex64::new(w[k] * omega(k).powi(2), 0.0)).collect();
        inverse.process(&mut cf);
        inverse.process(&mut cd);
        worst = (0..n)
            .map(|j| {
                let d = model.derivs_unchecked::<f64>(j as f64 * step, 2);
                (cf[j].re - d[0]).abs().max((cd[j].re + d[2]).abs())
            })
            .fold(0.0, f64::max);
        if worst <= SPECTRAL_TOLERANCE {
            let factors = (0..m)
                .map(|k| {
                    let a = (m as f64 * w[k]).sqrt();
                    let d = if k == half { 0.0 } else { omega(k) * a };
                    let zero = Complex64::new(0.0, 0.0);
                    [Complex64::new(a, 0.0), zero, Complex64::new(0.0, d), zero]
                })
                .collect();
            debug!("spectral synthesis with {m} nodes, covariance error {worst:e}");
            return Ok((Factor::Circulant { m, factors, fft: inverse }, n, step));
        }
        period *= 2.0;
    }
    Err(format!("spectral synthesis covariance error {worst:e} exceeds {SPECTRAL_TOLERANCE:e}"))
}

fn dense_factor(model: &CorrelationModel, n: usize, step: f64) -> Result<DMatrix<f64>> {
    let dim = 2 * n;
    let mut cov = DMatrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            let d = model.derivs_unchecked::<f64>((j as f64 - i as f64) * step, 2);
            cov[(i, j)] = d[0];
            cov[(i, n + j)] = d[1];
            cov[(n + i, j)] = -d[1];
            cov[(n + i, n + j)] = -d[2];
        }
    }
    let trace = cov.trace();
    let eig = SymmetricEigen::new(cov);
    let min = eig.eigenvalues.min();
    if min < -1e-10 * trace {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let sq = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&sq))
}

/// Replicate paths in order; the stream is lazy so only one path is alive at
/// a time.
pub fn sample_paths(model: &CorrelationModel, spec: &SimulationSpec) -> Result<impl Iterator<Item = SampledPath>> {
    let sampler = PathSampler::new(model, spec)?;
    Ok((0..spec.num_samples as u64).map(move |i| sampler.sample(i)))
}

fn hermite(f0: f64, f1: f64, d0: f64, d1: f64, h: f64, t: f64) -> (f64, f64) {
    let (t2, t3) = (t * t, t * t * t);
    let p = (2.0 * t3 - 3.0 * t2 + 1.0) * f0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * f1 + (t3 - t2) * h * d1;
    let dp = (6.0 * t2 - 6.0 * t) * f0 + (3.0 * t2 - 4.0 * t + 1.0) * h * d0 + (-6.0 * t2 + 6.0 * t) * f1 + (3.0 * t2 - 2.0 * t) * h * d1;
    (p, dp)
}

/// Root in `(0, 1)` of the Hermite cubic with values of opposite signs at
/// the ends, by Newton steps kept inside a shrinking bracket.
fn hermite_root(f0: f64, f1: f64, d0: f64, d1: f64, h: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut t = f0 / (f0 - f1);
    for _ in 0..100 {
        let (p, dp) = hermite(f0, f1, d0, d1, h, t);
        if p == 0.0 {
            return t;
        }
        if (p < 0.0) == (f0 < 0.0) {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - p / dp;
        let next = if dp != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - t).abs() <= 1e-15 || hi - lo <= 1e-15 {
            return next;
        }
        t = next;
    }
    warn!("root refinement did not settle; using bracket midpoint");
    0.5 * (lo + hi)
}

/// Zeros of the path within `[lo, hi]` from grid values of `f` and `f'`.
pub fn zeros_from_grid(origin: f64, step: f64, f: &[f64], df: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..f.len() {
        let x = origin + i as f64 * step;
        if f[i] == 0.0 {
            out.push(x);
            continue;
        }
        if i + 1 < f.len() && f[i + 1] != 0.0 && (f[i] < 0.0) != (f[i + 1] < 0.0) {
            let t = hermite_root(f[i], f[i + 1], df[i], df[i + 1], step);
            out.push(x + t * step);
        }
    }
    out.retain(|&z| z >= lo && z <= hi);
    out
}

pub fn extract_zeros(path: &SampledPath, spec: &SimulationSpec) -> ZeroSample {
    let (lo, hi) = (spec.origin, spec.origin + spec.window_len);
    ZeroSample {
        zeros: zeros_from_grid(path.origin, path.step, &path.f, &path.df, lo, hi),
        replicate_seed: path.replicate_seed,
        window: (lo, hi),
    }
}

/// `⟨ν_R, φ⟩ = Σ_z φ(z / R)`.
pub fn linear_statistic(sample: &ZeroSample, phi: &TestFunction, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("R must be positive, got {r}")));
    }
    let (a, b) = phi.support();
    let (lo, hi) = sample.window;
    let slack = 1e-9 * (1.0 + r * (a.abs() + b.abs()));
    if r * a < lo - slack || r * b > hi + slack {
        return Err(Error::WindowTooSmall(format!(
            "φ(·/R) is supported on [{}, {}] but the window is [{lo}, {hi}]",
            r * a,
            r * b
        )));
    }
    let vals: Vec<f64> = sample.zeros.iter().map(|&z| phi.eval(z / r)).collect();
    Ok(pairwise_sum(&vals))
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentEstimate {
    pub order: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub num_samples: usize,
}

/// Centered moments `mean((s − center)^p)` with percentile bootstrap 95%
/// intervals.
pub fn moments_of(values: &[f64], center: f64, orders: &[usize], seed: u64) -> Vec<MomentEstimate> {
    let n = values.len();
    let dev: Vec<f64> = values.iter().map(|v| v - center).collect();
    let mut rng = from_seed(derive_seed(seed, u64::MAX));
    let draws: Vec<Vec<usize>> =
        (0..BOOTSTRAP_RESAMPLES).map(|_| (0..n).map(|_| rng.random_range(0..n)).collect()).collect();
    orders
        .iter()
        .map(|&p| {
            let terms: Vec<f64> = dev.iter().map(|d| d.powi(p as i32)).collect();
            let est = pairwise_sum(&terms) / n as f64;
            let var = terms.iter().map(|t| (t - est).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
            let mut boot: Vec<f64> = draws
                .iter()
                .map(|idx| idx.iter().map(|&i| terms[i]).sum::<f64>() / n as f64)
                .collect();
            boot.sort_by(f64::total_cmp);
            let q = |p: f64| boot[((p * (boot.len() - 1) as f64).round() as usize).min(boot.len() - 1)];
            MomentEstimate {
                order: p,
                estimate: est,
                std_error: (var / n as f64).sqrt(),
                ci_lo: q(0.025),
                ci_hi: q(0.975),
                num_samples: n,
            }
        })
        .collect()
}

/// Linear statistics `⟨ν_R, φ⟩` of every replicate.
pub fn linear_statistics(model: &CorrelationModel, spec: &SimulationSpec, phi: &TestFunction, r: f64) -> Result<Vec<f64>> {
    let sampler = PathSampler::new(model, spec)?;
    (0..spec.num_samples as u64)
        .into_par_iter()
        .map(|i| linear_statistic(&sampler.zeros(i), phi, r))
        .collect()
}

/// Centered moments of `⟨ν_R, φ⟩`, centered at the exact mean `(R/π) ∫ φ`.
pub fn empirical_moments(
    model: &CorrelationModel,
    spec: &SimulationSpec,
    phi: &TestFunction,
    r: f64,
    orders: &[usize],
) -> Result<Vec<MomentEstimate>> {
    if let Some(&p) = orders.iter().find(|&&p| p == 0 || p > 6) {
        return Err(Error::InvalidInput(format!("moment orders must lie in 1..=6, got {p}")));
    }
    let stats = linear_statistics(model, spec, phi, r)?;
    Ok(moments_of(&stats, expected_linear_statistic(phi, r), orders, spec.master_seed))
}

/// `(2ε)^{-k} E ∏_i #(Z ∩ [x_i − ε, x_i + ε])` with its standard error.
pub fn empirical_k_point(model: &CorrelationModel, spec: &SimulationSpec, x: &[f64], epsilon: f64) -> Result<(f64, f64)> {
    if x.is_empty() || !(epsilon > 0.0) {
        return Err(Error::InvalidInput("need at least one point and epsilon > 0".into()));
    }
    let (lo, hi) = (spec.origin, spec.origin + spec.window_len);
    if x.iter().any(|&v| v - epsilon < lo || v + epsilon > hi) {
        return Err(Error::WindowTooSmall(format!("intervals around {x:?} leave the window [{lo}, {hi}]")));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[1] - w[0] <= 2.0 * epsilon) {
        return Err(Error::IntervalsOverlap(format!("intervals of radius {epsilon} around {x:?} intersect")));
    }
    let sampler = PathSampler::new(model, spec)?;
    let products: Vec<f64> = (0..spec.num_samples as u64)
        .into_par_iter()
        .map(|i| {
            let zs = sampler.zeros(i);
            x.iter()
                .map(|&c| {
                    let a = zs.zeros.partition_point(|&z| z < c - epsilon);
                    let b = zs.zeros.partition_point(|&z| z <= c + epsilon);
                    (b - a) as f64
                })
                .product::<f64>()
        })
        .collect();
    let n = products.len() as f64;
    let scale = (2.0 * epsilon).powi(x.len() as i32);
    let mean = pairwise_sum(&products) / n;
    let var = products.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok((mean / scale, (var / n).sqrt() / scale))
}

#[derive(Debug, Clone, Serialize)]
pub struct CltDiagnostic {
    /// Kolmogorov–Smirnov distance to `N(0, ‖φ‖²)`.
    pub ks_distance: f64,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub num_samples: usize,
}

/// Standardizes `(⟨ν_R, φ⟩ − (R/π)∫φ) / (R^{1/2} σ)` over replicates.
pub fn clt_diagnostic(
    model: &CorrelationModel,
    spec: &SimulationSpec,
    phi: &TestFunction,
    r: f64,
    sigma: f64,
) -> Result<CltDiagnostic> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    let stats = linear_statistics(model, spec, phi, r)?;
    clt_from_statistics(&stats, phi, r, sigma)
}

pub fn clt_from_statistics(stats: &[f64], phi: &TestFunction, r: f64, sigma: f64) -> Result<CltDiagnostic> {
    let mu = expected_linear_statistic(phi, r);
    let mut z: Vec<f64> = stats.iter().map(|s| (s - mu) / (r.sqrt() * sigma)).collect();
    let n = z.len() as f64;
    let mean = pairwise_sum(&z) / n;
    let c = |p: i32| z.iter().map(|v| (v - mean).powi(p)).sum::<f64>() / n;
    let (m2, m3, m4) = (c(2), c(3), c(4));
    let law = Normal::new(0.0, phi.l2_norm_sq().sqrt()).map_err(|e| Error::InvalidInput(e.to_string()))?;
    z.sort_by(f64::total_cmp);
    let mut ks = 0.0f64;
    for (i, &v) in z.iter().enumerate() {
        let cdf = law.cdf(v);
        ks = ks.max((cdf - i as f64 / n).abs()).max(((i + 1) as f64 / n - cdf).abs());
    }
    Ok(CltDiagnostic {
        ks_distance: ks,
        mean,
        variance: m2,
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
        num_samples: z.len(),
    })
}

/// Zero counts in the whole window, one per replicate.
pub fn zero_counts(model: &CorrelationModel, spec: &SimulationSpec) -> Result<Vec<usize>> {
    let sampler = PathSampler::new(model, spec)?;
    Ok((0..spec.num_samples as u64).into_par_iter().map(|i| sampler.zeros(i).zeros.len()).collect())
}

/// Expected zero count `L/π` of a window of length `L`.
pub fn expected_count(window_len: f64) -> f64 {
    window_len / PI
}
