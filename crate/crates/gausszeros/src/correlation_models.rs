//! Normalized stationary correlation functions, their derivatives, tail
//! norms, and models built from a spectral density.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ddouble::{Real, DD};
use crate::error::{Error, Result};
use crate::quadrature::gl10;

/// Highest derivative order provided by the closed-form presets.
pub const PRESET_MAX_ORDER: usize = 12;

/// Tail behaviour of a tabulated spectral density beyond its last node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSpec {
    /// `gaussian` (`a·exp(-b ξ²)`), `power` (`a·ξ^(-p)`) or `compact` (zero).
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

/// On-disk layout of a tabulated spectral density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralTable {
    pub xi: Vec<f64>,
    pub g: Vec<f64>,
    pub tail: TailSpec,
}

/// An even, non-negative spectral density `g`, integrated over `[0, cutoff]`.
#[derive(Clone)]
pub struct SpectralDensity {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    cutoff: f64,
    breaks: Vec<f64>,
    max_order: usize,
}

impl fmt::Debug for SpectralDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralDensity")
            .field("cutoff", &self.cutoff)
            .field("breaks", &self.breaks.len())
            .field("max_order", &self.max_order)
            .finish()
    }
}

impl SpectralDensity {
    /// Wraps an evaluator `g(ξ)` for `ξ >= 0`. The integrals are truncated at
    /// `cutoff`; `breaks` lists points where `g` is not smooth, and
    /// `max_order` is the highest derivative of `κ` the density supports.
    pub fn from_fn<G>(g: G, cutoff: f64, breaks: Vec<f64>, max_order: usize) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let mut breaks: Vec<f64> = breaks.into_iter().filter(|&b| b > 0.0 && b < cutoff).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        SpectralDensity { eval: Arc::new(g), cutoff, breaks, max_order }
    }

    /// Standard normal density, whose characteristic function is `exp(-x²/2)`.
    pub fn standard_gaussian() -> Self {
        let c = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        Self::from_fn(move |x| c * (-0.5 * x * x).exp(), 13.0, vec![], PRESET_MAX_ORDER)
    }

    /// Constant `height` on `[-half_width, half_width]`.
    pub fn uniform(half_width: f64, height: f64) -> Self {
        Self::from_fn(move |x| if x.abs() <= half_width { height } else { 0.0 }, half_width, vec![], PRESET_MAX_ORDER)
    }

    /// Piecewise-linear table on `ξ >= 0` continued by an analytic tail.
    pub fn from_table(table: &SpectralTable) -> Result<Self> {
        let SpectralTable { xi, g, tail } = table;
        if xi.len() != g.len() || xi.len() < 2 {
            return Err(Error::InvalidInput("spectral table needs matching xi/g arrays of length >= 2".into()));
        }
        if xi.iter().chain(g.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("spectral table contains non-finite values".into()));
        }
        if xi[0] < 0.0 || xi.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("xi must be non-negative and strictly increasing".into()));
        }
        if g.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput("spectral density must be non-negative".into()));
        }
        let last = *xi.last().unwrap();
        let p = |i: usize| tail.params.get(i).copied().unwrap_or(f64::NAN);
        let (max_order, cutoff, tail_fn): (usize, f64, Arc<dyn Fn(f64) -> f64 + Send + Sync>) =
            match tail.kind.as_str() {
                "compact" => (PRESET_MAX_ORDER, last, Arc::new(|_| 0.0)),
                "gaussian" => {
                    let (a, b) = (p(0), p(1));
                    if !(a >= 0.0 && b > 0.0) {
                        return Err(Error::InvalidInput("gaussian tail needs params [a >= 0, b > 0]".into()));
                    }
                    let mut t = last.max(1.0);
                    while a * t.powi(PRESET_MAX_ORDER as i32 + 1) * (-b * t * t).exp() > 1e-16 {
                        t += 0.5;
                    }
                    (PRESET_MAX_ORDER, t, Arc::new(move |x: f64| a * (-b * x * x).exp()))
                }
                "power" => {
                    let (a, pw) = (p(0), p(1));
                    if !(a >= 0.0 && pw > 1.0) {
                        return Err(Error::InvalidInput("power tail needs params [a >= 0, p > 1]".into()));
                    }
                    let j = ((pw - 1.0 - 1e-9).floor().max(0.0) as usize).min(PRESET_MAX_ORDER);
                    if j < 2 || (j as f64) >= pw - 1.0 {
                        return Err(Error::DegenerateDensity(format!(
                            "power tail exponent {pw} leaves no finite second moment"
                        )));
                    }
                    let e = pw - j as f64 - 1.0;
                    let t = (a / (1e-12 * e)).powf(1.0 / e);
                    let cap = (100.0 * last).max(1e4);
                    (j, t.clamp(last, cap), Arc::new(move |x: f64| a * x.powf(-pw)))
                }
                k => return Err(Error::InvalidInput(format!("unknown tail kind '{k}'"))),
            };
        let xs = xi.clone();
        let gs = g.clone();
        let eval = move |x: f64| {
            let x = x.abs();
            if x <= xs[0] {
                return gs[0];
            }
            if x > *xs.last().unwrap() {
                return tail_fn(x);
            }
            let i = xs.partition_point(|&v| v < x).max(1);
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            gs[i - 1] + t * (gs[i] - gs[i - 1])
        };
        Ok(Self::from_fn(eval, cutoff, xi.clone(), max_order))
    }

    /// Parses the JSON layout `{"xi": [...], "g": [...], "tail": {...}}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let table: SpectralTable =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("spectral table: {e}")))?;
        Self::from_table(&table)
    }

    pub fn eval(&self, xi: f64) -> f64 {
        (self.eval)(xi.abs())
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// `∫ (iξ)^j e^{ixξ} g(ξ) dξ` for `j = 0..=order`, by composite
    /// Gauss–Legendre with panels short against the oscillation period.
    pub fn transform(&self, x: f64, order: usize) -> Vec<f64> {
        let (nodes, weights) = gl10();
        let width = (1.0 / (1.0 + x.abs())).min(self.cutoff / 32.0);
        let mut edges = vec![0.0];
        edges.extend(self.breaks.iter().copied());
        edges.push(self.cutoff);
        let mut acc = vec![0.0; order + 1];
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let panels = ((b - a) / width).ceil().max(1.0) as usize;
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                let c = a + (p as f64 + 0.5) * h;
                for (t, wt) in nodes.iter().zip(weights) {
                    let xi = c + 0.5 * h * t;
                    let gv = (self.eval)(xi) * wt * 0.5 * h;
                    if gv == 0.0 {
                        continue;
                    }
                    let (s, co) = (x * xi).sin_cos();
                    let mut pw = gv;
                    for (j, slot) in acc.iter_mut().enumerate() {
                        let trig = match j % 4 {
                            0 => co,
                            1 => -s,
                            2 => -co,
                            _ => s,
                        };
                        *slot += pw * trig;
                        pw *= xi;
                    }
                }
            }
        }
        acc.iter().map(|v| 2.0 * v).collect()
    }

    /// `∫_R h(ξ) g(ξ)² dξ` for an even weight `h`.
    pub fn weighted_square_integral<H: Fn(f64) -> f64>(&self, h: H) -> f64 {
        let (nodes, weights) = gl10();
        let mut edges = vec![0.0];
        edges.extend(self.breaks.iter().copied());
        edges.push(self.cutoff);
        let mut sum = 0.0;
        for w in edges.windows(2) {
            let panels = (((w[1] - w[0]) / (self.cutoff / 256.0)).ceil() as usize).max(1);
            let hp = (w[1] - w[0]) / panels as f64;
            for p in 0..panels {
                let c = w[0] + (p as f64 + 0.5) * hp;
                for (t, wt) in nodes.iter().zip(weights) {
                    let xi = c + 0.5 * hp * t;
                    let g = (self.eval)(xi);
                    sum += wt * 0.5 * hp * h(xi) * g * g;
                }
            }
        }
        2.0 * sum
    }
}

#[derive(Clone, Debug)]
enum Kind {
    BargmannFock,
    SincSqrt3,
    Cauchy,
    Spectral { density: SpectralDensity, amp: f64, scale: f64 },
}

/// A normalized correlation function `κ` with `κ(0) = 1 = -κ''(0)`.
#[derive(Clone, Debug)]
pub struct CorrelationModel {
    kind: Kind,
    name: String,
}

/// Preset names accepted by [`CorrelationModel::from_name`].
pub const PRESET_NAMES: [&str; 3] = ["bargmann-fock", "sinc-sqrt3", "cauchy"];

impl CorrelationModel {
    /// `κ(x) = exp(-x²/2)`.
    pub fn bargmann_fock() -> Self {
        CorrelationModel { kind: Kind::BargmannFock, name: "bargmann-fock".into() }
    }

    /// `κ(x) = sinc(√3 x)`.
    pub fn sinc_sqrt3() -> Self {
        CorrelationModel { kind: Kind::SincSqrt3, name: "sinc-sqrt3".into() }
    }

    /// `κ(x) = 1 / (1 + x²/2)`.
    pub fn cauchy() -> Self {
        CorrelationModel { kind: Kind::Cauchy, name: "cauchy".into() }
    }

    pub fn presets() -> Vec<Self> {
        vec![Self::bargmann_fock(), Self::sinc_sqrt3(), Self::cauchy()]
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().replace('_', "-").as_str() {
            "bargmann-fock" | "bf" | "gaussian" => Ok(Self::bargmann_fock()),
            "sinc-sqrt3" | "sinc" => Ok(Self::sinc_sqrt3()),
            "cauchy" => Ok(Self::cauchy()),
            other => Err(Error::InvalidInput(format!(
                "unknown model '{other}' (expected one of {PRESET_NAMES:?} or a .json spectral table)"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_spectral(&self) -> bool {
        matches!(self.kind, Kind::Spectral { .. })
    }

    pub fn max_derivative_order(&self) -> usize {
        match &self.kind {
            Kind::Spectral { density, .. } => density.max_order,
            _ => PRESET_MAX_ORDER,
        }
    }

    fn check_order(&self, order: usize) -> Result<()> {
        let available = self.max_derivative_order();
        if order > available {
            Err(Error::OrderUnavailable { requested: order, available })
        } else {
            Ok(())
        }
    }

    /// `(κ(x), κ'(x), …, κ^(max_order)(x))`.
    pub fn kappa_derivs(&self, x: f64, max_order: usize) -> Result<Vec<f64>> {
        self.check_order(max_order)?;
        Ok(self.derivs_unchecked::<f64>(x, max_order))
    }

    /// Same as [`kappa_derivs`](Self::kappa_derivs) in double-double.
    pub fn kappa_derivs_dd(&self, x: DD, max_order: usize) -> Result<Vec<DD>> {
        self.check_order(max_order)?;
        Ok(self.derivs_unchecked::<DD>(x, max_order))
    }

    pub fn kappa(&self, x: f64) -> f64 {
        self.derivs_unchecked::<f64>(x, 0)[0]
    }

    pub(crate) fn derivs_unchecked<T: Real>(&self, x: T, n: usize) -> Vec<T> {
        match &self.kind {
            Kind::BargmannFock => bargmann_fock_derivs(x, n),
            Kind::Cauchy => cauchy_derivs(x, n),
            Kind::SincSqrt3 => sinc_sqrt3_derivs(x.promote(), n).into_iter().map(T::demote).collect(),
            Kind::Spectral { density, amp, scale } => {
                let raw = density.transform(scale * x.to_f64(), n);
                let mut f = *amp;
                raw.into_iter()
                    .map(|v| {
                        let r = T::from_f64(f * v);
                        f *= scale;
                        r
                    })
                    .collect()
            }
        }
    }

    /// Spectral density of the normalized model at `ξ`.
    pub fn spectral_density(&self, xi: f64) -> f64 {
        let xi = xi.abs();
        match &self.kind {
            Kind::BargmannFock => (-0.5 * xi * xi).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            Kind::SincSqrt3 => {
                if xi <= 3f64.sqrt() {
                    1.0 / (2.0 * 3f64.sqrt())
                } else {
                    0.0
                }
            }
            Kind::Cauchy => (-std::f64::consts::SQRT_2 * xi).exp() / std::f64::consts::SQRT_2,
            Kind::Spectral { density, amp, scale } => amp / scale * density.eval(xi / scale),
        }
    }

    /// Frequency beyond which the spectral density vanishes or is truncated.
    pub fn spectral_edge(&self) -> Option<f64> {
        match &self.kind {
            Kind::SincSqrt3 => Some(3f64.sqrt()),
            Kind::Spectral { density, scale, .. } => Some(scale * density.cutoff),
            _ => None,
        }
    }

    /// `∫_R (1 - ξ²)² g(ξ)² dξ`; by Plancherel this is `(1/2π) ∫_R (κ + κ'')²`.
    pub fn spectral_square_weight(&self) -> f64 {
        let h = |x: f64| (1.0 - x * x).powi(2);
        match &self.kind {
            Kind::Spectral { density, amp, scale } => {
                // g_new(ξ) = (amp/scale) g(ξ/scale); substitute ξ = scale·η.
                let c = amp / scale;
                c * c * scale * density.weighted_square_integral(|eta| h(scale * eta))
            }
            _ => {
                let cutoff = match self.kind {
                    Kind::BargmannFock => 13.0,
                    Kind::SincSqrt3 => 3f64.sqrt(),
                    _ => 40.0,
                };
                let r = crate::quadrature::integrate(
                    |x| {
                        let g = self.spectral_density(x);
                        h(x) * g * g
                    },
                    0.0,
                    cutoff,
                    &[1.0],
                    1e-15,
                    200_000,
                );
                2.0 * r.value
            }
        }
    }

    /// Monotone bound on `|κ^(l)(x)|`, valid for `|x| >= envelope_radius(l)`.
    pub fn envelope(&self, l: usize, x: f64) -> Option<f64> {
        let x = x.abs();
        match &self.kind {
            Kind::BargmannFock => Some(hermite_abs_coeff_sum(l) * x.powi(l as i32) * (-0.5 * x * x).exp()),
            Kind::SincSqrt3 => {
                let c = 3f64.powf(l as f64 / 2.0);
                Some(c * (1.0 / (l as f64 + 1.0)).min(2.0 / (3f64.sqrt() * x)))
            }
            Kind::Cauchy => {
                let u = x / std::f64::consts::SQRT_2;
                let n = (l + 1) as f64;
                let base = 2f64.powf(-(l as f64) / 2.0) * factorial(l) * (1.0 + u * u).powf(-n / 2.0);
                Some(base * if u > 0.0 { (n / u).min(1.0) } else { 1.0 })
            }
            Kind::Spectral { .. } => None,
        }
    }

    /// Radius beyond which [`envelope`](Self::envelope) bounds every order up to `k`.
    pub fn envelope_radius(&self, k: usize) -> Option<f64> {
        match &self.kind {
            Kind::BargmannFock => Some((k as f64).sqrt() + 1.0),
            Kind::SincSqrt3 | Kind::Cauchy => Some(0.0),
            Kind::Spectral { .. } => None,
        }
    }

    /// `sup { |κ^(l)(x)| : l <= k, |x| >= eta }`.
    pub fn tail_norm(&self, k: usize, eta: f64) -> Result<f64> {
        self.check_order(k)?;
        if !(eta >= 0.0) {
            return Err(Error::InvalidInput(format!("eta must be non-negative, got {eta}")));
        }
        let spectral = self.is_spectral();
        let mut h = (eta / 1000.0).clamp(1e-3, 1e-1);
        if spectral {
            h = h.max(1e-2);
        }
        let sup_at = |x: f64| self.derivs_unchecked::<f64>(x, k).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let env_at = |x: f64| (0..=k).filter_map(|l| self.envelope(l, x)).fold(0.0f64, f64::max);
        let start = eta;
        let mut end = match self.envelope_radius(k) {
            Some(r) => eta.max(r) + 10.0,
            None => eta + 50.0,
        };
        let cap = eta + 1e4;
        let mut gmax = 0.0f64;
        let mut x = start;
        loop {
            while x <= end {
                gmax = gmax.max(sup_at(x));
                x += h;
            }
            if spectral {
                return Ok(gmax);
            }
            let env = env_at(end);
            if env <= gmax {
                return Ok(gmax);
            }
            if end >= cap {
                return Ok(gmax.max(env));
            }
            end = (start + 2.0 * (end - start)).min(cap);
            h = h.max((end - start) / 2e5);
        }
    }
}

/// Spec-level wrapper around [`CorrelationModel::kappa_derivs`].
pub fn eval_kappa_derivs(model: &CorrelationModel, x: f64, max_order: usize) -> Result<Vec<f64>> {
    model.kappa_derivs(x, max_order)
}

/// Spec-level wrapper around [`CorrelationModel::tail_norm`].
pub fn tail_norm(model: &CorrelationModel, k: usize, eta: f64) -> Result<f64> {
    model.tail_norm(k, eta)
}

/// Rescales `raw` so that it has unit mass and unit second moment, and
/// returns the correlation model of the resulting density.
pub fn normalize_from_spectral_density(raw: SpectralDensity) -> Result<CorrelationModel> {
    if raw.max_order < 2 {
        return Err(Error::DegenerateDensity("density has no finite second moment".into()));
    }
    let m = raw.transform(0.0, 2);
    let (a, b) = (m[0], -m[2]);
    if !(a.is_finite() && b.is_finite()) || a <= 0.0 || b <= 0.0 {
        return Err(Error::DegenerateDensity(format!("mass {a:e}, second moment {b:e}")));
    }
    let scale = (a / b).sqrt();
    Ok(CorrelationModel { kind: Kind::Spectral { density: raw, amp: 1.0 / a, scale }, name: "spectral-table".into() })
}

/// Loads a spectral table from JSON text and normalizes it.
pub fn model_from_spectral_json(text: &str) -> Result<CorrelationModel> {
    normalize_from_spectral_density(SpectralDensity::from_json(text)?)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |p, k| p * k as f64)
}

fn hermite_abs_coeff_sum(l: usize) -> f64 {
    // He_{n+1} = x He_n - n He_{n-1}, tracked on coefficient vectors.
    let mut prev = vec![1.0];
    if l == 0 {
        return 1.0;
    }
    let mut cur = vec![0.0, 1.0];
    for n in 1..l {
        let mut next = vec![0.0; n + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= n as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur.iter().map(|c| c.abs()).sum()
}

fn bargmann_fock_derivs<T: Real>(x: T, n: usize) -> Vec<T> {
    let e = (-(x * x) * T::from_f64(0.5)).exp();
    let mut out = Vec::with_capacity(n + 1);
    let (mut h0, mut h1) = (T::one(), x);
    for l in 0..=n {
        let he = if l == 0 { h0 } else { h1 };
        let v = he * e;
        out.push(if l % 2 == 0 { v } else { -v });
        if l >= 1 {
            let next = x * h1 - T::from_f64(l as f64) * h0;
            h0 = h1;
            h1 = next;
        }
    }
    out
}

fn cauchy_derivs<T: Real>(x: T, n: usize) -> Vec<T> {
    let r2 = T::from_f64(2.0).sqrt();
    let u = x / r2;
    let den = T::one() + u * u;
    let inv_r2 = T::one() / r2;
    // (u + i)^(l+1) = re + i·im
    let (mut re, mut im) = (u, T::one());
    let mut dpow = den;
    let mut scale = T::one();
    let mut out = Vec::with_capacity(n + 1);
    for l in 0..=n {
        let v = scale * im / dpow;
        out.push(if l % 2 == 0 { v } else { -v });
        let nre = re * u - im;
        im = re + im * u;
        re = nre;
        dpow *= den;
        scale = scale * inv_r2 * T::from_f64((l + 1) as f64);
    }
    out
}

/// `κ^(l)(x) = 3^(l/2) s_l(√3 x)` with `s_l(t) = Re(i^l ∫_0^1 u^l e^{iut} du)`.
fn sinc_sqrt3_derivs(x: DD, n: usize) -> Vec<DD> {
    let r3 = DD::new(3.0).sqrt();
    let t = r3 * x;
    let s = sinc_moments(t, n);
    let mut c = DD::ONE;
    s.into_iter()
        .map(|v| {
            let r = c * v;
            c *= r3;
            r
        })
        .collect()
}

fn sinc_moments(t: DD, n: usize) -> Vec<DD> {
    let at = t.hi.abs();
    if at <= 30.0 {
        // Power series: s_l(t) = Σ_{m ≡ l (2)} (-1)^((l+m)/2) t^m / (m! (m+l+1)).
        let mut powers = Vec::new();
        let mut p = DD::ONE;
        let mut m = 0usize;
        loop {
            powers.push(p);
            m += 1;
            p = p * t / DD::new(m as f64);
            if (m as f64) > at && p.hi.abs() < 1e-40 {
                break;
            }
        }
        (0..=n)
            .map(|l| {
                let mut sum = DD::ZERO;
                for (m, pm) in powers.iter().enumerate() {
                    if (l + m) % 2 != 0 {
                        continue;
                    }
                    let term = *pm / DD::new((m + l + 1) as f64);
                    if ((l + m) / 2) % 2 == 0 {
                        sum += term;
                    } else {
                        sum -= term;
                    }
                }
                sum
            })
            .collect()
    } else {
        // Forward recurrence J_k = (e^{it} - k J_{k-1}) / (it), stable for k < |t|.
        let (s, c) = t.sin_cos();
        let mut jr = s / t;
        let mut ji = (DD::ONE - c) / t;
        let mut out = Vec::with_capacity(n + 1);
        for l in 0..=n {
            if l > 0 {
                let k = DD::new(l as f64);
                let nr = (s - k * ji) / t;
                let ni = -(c - k * jr) / t;
                jr = nr;
                ji = ni;
            }
            out.push(match l % 4 {
                0 => jr,
                1 => -ji,
                2 => -jr,
                _ => ji,
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_of_presets() {
        for m in CorrelationModel::presets() {
            let d = m.kappa_derivs(0.0, 4).unwrap();
            assert!((d[0] - 1.0).abs() < 1e-15, "{}", m.name());
            assert!((d[2] + 1.0).abs() < 1e-14, "{}", m.name());
            assert!(d[1].abs() < 1e-15 && d[3].abs() < 1e-14);
        }
    }

    #[test]
    fn sinc_branches_agree_at_switch() {
        let a = sinc_moments(DD::new(29.999_999), 12);
        let b = sinc_moments(DD::new(30.000_001), 12);
        for (x, y) in a.iter().zip(&b) {
            assert!((x.to_f64() - y.to_f64()).abs() < 1e-6);
        }
    }

    #[test]
    fn sinc_matches_closed_form() {
        let m = CorrelationModel::sinc_sqrt3();
        for &x in &[0.3, 2.0, 11.0, 40.0] {
            let t = 3f64.sqrt() * x;
            let d = m.kappa_derivs(x, 1).unwrap();
            assert!((d[0] - t.sin() / t).abs() < 1e-15);
            let d1 = 3f64.sqrt() * (t * t.cos() - t.sin()) / (t * t);
            assert!((d[1] - d1).abs() < 1e-14);
        }
    }

    #[test]
    fn cauchy_matches_closed_form() {
        let m = CorrelationModel::cauchy();
        for &x in &[0.0, 0.7, 3.0, 25.0] {
            let d = m.kappa_derivs(x, 2).unwrap();
            let q = 1.0 + x * x / 2.0;
            assert!((d[0] - 1.0 / q).abs() < 1e-15);
            assert!((d[1] + x / (q * q)).abs() < 1e-15);
            assert!((d[2] - (1.5 * x * x - 1.0) / q.powi(3)).abs() < 1e-15);
        }
    }

    #[test]
    fn hermite_coefficient_sums() {
        assert_eq!(hermite_abs_coeff_sum(2), 2.0);
        assert_eq!(hermite_abs_coeff_sum(4), 1.0 + 6.0 + 3.0);
    }

    #[test]
    fn plancherel_weights() {
        let bf = CorrelationModel::bargmann_fock().spectral_square_weight();
        assert!((bf - 3.0 / (8.0 * std::f64::consts::PI.sqrt())).abs() < 1e-13);
        let s = CorrelationModel::sinc_sqrt3().spectral_square_weight();
        assert!((s - 2.0 * 3f64.sqrt() / 15.0).abs() < 1e-13);
    }

    #[test]
    fn order_cap_is_enforced() {
        let m = CorrelationModel::bargmann_fock();
        assert!(matches!(m.kappa_derivs(0.0, 13), Err(Error::OrderUnavailable { .. })));
    }
}
