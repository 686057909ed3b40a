//! The two-point excess function `F(z) = ρ₂(0, z) − 1/π²`, the variance
//! constant `σ²`, its lower bound, and finite-R covariances of linear
//! statistics.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::correlation_models::CorrelationModel;
use crate::ddouble::DD;
use crate::error::{Error, Result};
use crate::quadrature::integrate;

/// Below this `|z|`, `F(z)` is replaced by its limit `−1/π²`.
pub const F_ORIGIN_CUTOFF: f64 = 1e-4;
const MAX_TRUNCATION: f64 = 20_480.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Initial truncation radius for integrals over `z`; `σ²` doubles it
    /// until the neglected tail is below tolerance.
    pub truncation_radius: f64,
    pub abs_tolerance: f64,
    /// Evaluation budget for a single adaptive integral.
    pub max_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { truncation_radius: 40.0, abs_tolerance: 1e-8, max_nodes: 4_000_000 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.truncation_radius > 0.0) || !(self.abs_tolerance > 0.0) || self.max_nodes < 30 {
            return Err(Error::InvalidInput(format!(
                "quadrature needs truncation_radius > 0, abs_tolerance > 0 and max_nodes >= 30, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Test functions for linear statistics.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    /// Indicator of `[a, b]`.
    Indicator { a: f64, b: f64 },
    /// `exp(−((x − center)/width)²)`.
    Gaussian { center: f64, width: f64 },
    /// Linear interpolation of `(xs, ys)`, zero outside `[xs[0], xs[n-1]]`.
    Table { xs: Vec<f64>, ys: Vec<f64> },
}

impl TestFunction {
    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInput(format!("indicator needs finite a < b, got [{a}, {b}]")));
        }
        Ok(TestFunction::Indicator { a, b })
    }

    pub fn gaussian(center: f64, width: f64) -> Result<Self> {
        if !(center.is_finite() && width.is_finite() && width > 0.0) {
            return Err(Error::InvalidInput(format!("gaussian needs a finite center and width > 0, got ({center}, {width})")));
        }
        Ok(TestFunction::Gaussian { center, width })
    }

    pub fn table(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(Error::InvalidInput("table needs at least two nodes and equal lengths".into()));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) || xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("table nodes must be finite and strictly increasing".into()));
        }
        Ok(TestFunction::Table { xs, ys })
    }

    /// Parses `indicator:a,b`, `gaussian:c,w`, `table:x0,x1,…|y0,y1,…`, or the
    /// same with parentheses, as in `indicator(a,b)`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let (kind, args) = if let Some((k, rest)) = t.split_once(':') {
            (k.trim(), rest.trim())
        } else if let (Some(open), true) = (t.find('('), t.ends_with(')')) {
            (t[..open].trim(), &t[open + 1..t.len() - 1])
        } else {
            return Err(bad_phi(text));
        };
        let nums = |s: &str| -> Result<Vec<f64>> {
            s.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| bad_phi(text))).collect()
        };
        match kind.to_ascii_lowercase().as_str() {
            "indicator" => match nums(args)?.as_slice() {
                [a, b] => Self::indicator(*a, *b),
                _ => Err(bad_phi(text)),
            },
            "gaussian" => match nums(args)?.as_slice() {
                [c, w] => Self::gaussian(*c, *w),
                _ => Err(bad_phi(text)),
            },
            "table" => {
                let (xs, ys) = args.split_once('|').or_else(|| args.split_once(';')).ok_or_else(|| bad_phi(text))?;
                Self::table(nums(xs)?, nums(ys)?)
            }
            _ => Err(bad_phi(text)),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::Indicator { a, b } => {
                if x >= *a && x <= *b {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::Gaussian { center, width } => {
                let u = (x - center) / width;
                (-u * u).exp()
            }
            TestFunction::Table { xs, ys } => {
                if x < xs[0] || x > xs[xs.len() - 1] {
                    return 0.0;
                }
                let i = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
                let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
                ys[i - 1] + t * (ys[i] - ys[i - 1])
            }
        }
    }

    /// Interval outside which the function vanishes (or is below `e^{-100}`).
    pub fn support(&self) -> (f64, f64) {
        match self {
            TestFunction::Indicator { a, b } => (*a, *b),
            TestFunction::Gaussian { center, width } => (center - 10.0 * width, center + 10.0 * width),
            TestFunction::Table { xs, .. } => (xs[0], xs[xs.len() - 1]),
        }
    }

    /// Points where the function is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            TestFunction::Indicator { a, b } => vec![*a, *b],
            TestFunction::Gaussian { center, .. } => vec![*center],
            TestFunction::Table { xs, .. } => xs.clone(),
        }
    }

    pub fn sup_bound(&self) -> f64 {
        match self {
            TestFunction::Indicator { .. } | TestFunction::Gaussian { .. } => 1.0,
            TestFunction::Table { ys, .. } => ys.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// `∫ φ`.
    pub fn integral(&self) -> f64 {
        match self {
            TestFunction::Indicator { a, b } => b - a,
            TestFunction::Gaussian { width, .. } => width * PI.sqrt(),
            TestFunction::Table { xs, ys } => {
                xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
            }
        }
    }

    /// `‖φ‖²_{L²}`.
    pub fn l2_norm_sq(&self) -> f64 {
        match self {
            TestFunction::Indicator { a, b } => b - a,
            TestFunction::Gaussian { width, .. } => width * (PI / 2.0).sqrt(),
            TestFunction::Table { xs, ys } => xs
                .windows(2)
                .zip(ys.windows(2))
                .map(|(x, y)| (x[1] - x[0]) / 3.0 * (y[0] * y[0] + y[0] * y[1] + y[1] * y[1]))
                .sum(),
        }
    }

    /// `∫ φ(u) ψ(u + s) du`.
    pub fn shifted_inner(&self, other: &TestFunction, s: f64, tol: f64) -> f64 {
        if let (TestFunction::Indicator { a: a1, b: b1 }, TestFunction::Indicator { a: a2, b: b2 }) = (self, other) {
            return (b1.min(b2 - s) - a1.max(a2 - s)).max(0.0);
        }
        let (l1, h1) = self.support();
        let (l2, h2) = other.support();
        let (lo, hi) = (l1.max(l2 - s), h1.min(h2 - s));
        if !(hi > lo) {
            return 0.0;
        }
        let mut breaks = self.kinks();
        breaks.extend(other.kinks().into_iter().map(|k| k - s));
        breaks.sort_by(f64::total_cmp);
        integrate(|u| self.eval(u) * other.eval(u + s), lo, hi, &breaks, tol, 200_000).value
    }
}

fn bad_phi(text: &str) -> Error {
    Error::InvalidInput(format!(
        "cannot parse test function '{text}' (expected indicator:a,b | gaussian:c,w | table:xs|ys)"
    ))
}

impl FromStr for TestFunction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TestFunction::parse(s)
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            TestFunction::Indicator { a, b } => write!(f, "indicator:{a},{b}"),
            TestFunction::Gaussian { center, width } => write!(f, "gaussian:{center},{width}"),
            TestFunction::Table { xs, ys } => write!(f, "table:{}|{}", join(xs), join(ys)),
        }
    }
}

impl Serialize for TestFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TestFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        TestFunction::parse(&s).map_err(serde::de::Error::custom)
    }
}

struct TwoPointParts {
    p: DD,
    a: f64,
}

fn two_point_parts(model: &CorrelationModel, z: f64) -> Result<TwoPointParts> {
    let d = model.kappa_derivs_dd(DD::new(z), 2)?;
    let (k, k1, k2) = (d[0], d[1], d[2]);
    let one_m = DD::ONE - k * k;
    if one_m.to_f64() < 1e-14 {
        return Err(Error::NearSingular { z });
    }
    let num = one_m - k1 * k1;
    let p = num / (one_m * one_m.sqrt());
    let a = ((k * k1 * k1 - k * k * k2 + k2) / num).to_f64();
    Ok(TwoPointParts { p, a })
}

/// The correlation coefficient `a(z)` of the conditional law of
/// `(f'(0), f'(z))` given `f(0) = f(z) = 0`, before clamping.
pub fn a_coefficient(model: &CorrelationModel, z: f64) -> Result<f64> {
    Ok(two_point_parts(model, z)?.a)
}

/// `F(z) = ρ₂(0, z) − 1/π²`.
#[allow(non_snake_case)]
pub fn two_point_F(model: &CorrelationModel, z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::InvalidInput(format!("z must be finite, got {z}")));
    }
    let z = z.abs();
    if z < F_ORIGIN_CUTOFF {
        return Ok(-1.0 / (PI * PI));
    }
    let TwoPointParts { p, a } = two_point_parts(model, z)?;
    let a = a.clamp(-1.0, 1.0);
    // √(1−a²) + a·asin(a) − 1, written without cancellation.
    let h = a * a.asin() - a * a / (1.0 + (1.0 - a * a).sqrt());
    let excess = (p - DD::ONE) + p * DD::new(h);
    Ok(excess.to_f64() / (PI * PI))
}

/// Details of a `σ²` evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaReport {
    pub sigma2: f64,
    /// Final truncation radius `T`.
    pub truncation: f64,
    /// `∫₀^T F`.
    pub bulk_integral: f64,
    /// Asymptotic estimate of `∫_T^∞ F`.
    pub tail_correction: f64,
    pub quadrature_error: f64,
    pub converged: bool,
}

/// Bound on `max_{l<=2} |κ^(l)|` beyond `t`.
fn tail_size(model: &CorrelationModel, t: f64) -> Result<f64> {
    if model.envelope(0, t).is_some() {
        Ok((0..=2).filter_map(|l| model.envelope(l, t)).fold(0.0, f64::max))
    } else {
        model.tail_norm(2, t)
    }
}

fn panel_breaks(t: f64) -> Vec<f64> {
    let mut b = vec![F_ORIGIN_CUTOFF, 1.0];
    let step = (t / 256.0).max(5.0);
    let mut x = step;
    while x < t {
        b.push(x);
        x += step;
    }
    b
}

/// `σ² = 1/π + 2 ∫₀^∞ F`.
pub fn sigma_squared(model: &CorrelationModel, quad: &QuadratureSpec) -> Result<f64> {
    let r = sigma_squared_report(model, quad)?;
    if !r.converged {
        return Err(Error::QuadratureNotConverged { estimate: r.sigma2, error: r.quadrature_error });
    }
    Ok(r.sigma2)
}

/// `σ²` with its diagnostics; `converged` is false when the tail or the
/// quadrature could not be brought below tolerance.
///
/// Beyond the truncation radius `T`, `π² F = κ²/2 − κ'² + κ''²/2` up to
/// terms of fourth order in `(κ, κ', κ'')`, whose integral over `[T, ∞)`
/// equals `½ ∫_T^∞ (κ + κ'')² + κ(T) κ'(T)`; the first part is obtained
/// from the spectral side by Plancherel.
pub fn sigma_squared_report(model: &CorrelationModel, quad: &QuadratureSpec) -> Result<SigmaReport> {
    quad.validate()?;
    let tol = quad.abs_tolerance;
    let mut t = quad.truncation_radius;
    let mut tail_ok = false;
    while t <= MAX_TRUNCATION {
        let s = tail_size(model, t)?;
        if 10.0 * s.powi(4) * t / (PI * PI) <= tol {
            tail_ok = true;
            break;
        }
        t *= 2.0;
    }
    t = t.min(MAX_TRUNCATION);
    let breaks = panel_breaks(t);
    let mut failure = None;
    let bulk = integrate(
        |z| match two_point_F(model, z) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        0.0,
        t,
        &breaks,
        tol / 4.0,
        quad.max_nodes,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let sq = |z: f64| {
        let d = model.derivs_unchecked::<f64>(z, 2);
        (d[0] + d[2]).powi(2)
    };
    let head_sq = integrate(sq, 0.0, t, &breaks, tol / 4.0, quad.max_nodes);
    let total_sq = PI * model.spectral_square_weight();
    let d = model.derivs_unchecked::<f64>(t, 1);
    let tail = (0.5 * (total_sq - head_sq.value) + d[0] * d[1]) / (PI * PI);
    let error = 2.0 * (bulk.error + head_sq.error / (2.0 * PI * PI));
    Ok(SigmaReport {
        sigma2: 1.0 / PI + 2.0 * (bulk.value + tail),
        truncation: t,
        bulk_integral: bulk.value,
        tail_correction: tail,
        quadrature_error: error,
        converged: tail_ok && bulk.converged && error <= tol,
    })
}

/// `(1/π²) ∫₀^∞ (κ + κ'')²`, a positive lower bound for `σ²`.
pub fn sigma_lower_bound(model: &CorrelationModel, quad: &QuadratureSpec) -> Result<f64> {
    quad.validate()?;
    let t = quad.truncation_radius;
    let s = tail_size(model, t)?;
    if 4.0 * s * s * t > quad.abs_tolerance {
        // Slowly decaying tail: evaluate on the spectral side instead.
        return Ok(model.spectral_square_weight() / PI);
    }
    let r = integrate(
        |z| {
            let d = model.derivs_unchecked::<f64>(z, 2);
            (d[0] + d[2]).powi(2)
        },
        0.0,
        t,
        &panel_breaks(t),
        quad.abs_tolerance * PI * PI / 2.0,
        quad.max_nodes,
    );
    if !r.converged {
        return Err(Error::QuadratureNotConverged { estimate: r.value / (PI * PI), error: r.error / (PI * PI) });
    }
    Ok(r.value / (PI * PI))
}

/// `m₂(ν_R)(φ₁, φ₂) = R ∫ F(z) G(z) dz + (R/π) ∫ φ₁φ₂` with
/// `G(z) = ∫ φ₁(u) φ₂(u + z/R) du`; `z` ranges over `|z| <= truncation_radius`.
pub fn predicted_covariance(
    model: &CorrelationModel,
    phi1: &TestFunction,
    phi2: &TestFunction,
    r: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    quad.validate()?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("R must be positive, got {r}")));
    }
    let t = quad.truncation_radius;
    let inner_tol = quad.abs_tolerance * 1e-2;
    let g = |z: f64| phi1.shifted_inner(phi2, z / r, inner_tol) + phi1.shifted_inner(phi2, -z / r, inner_tol);
    let mut breaks = panel_breaks(t);
    for k1 in phi1.kinks() {
        for k2 in phi2.kinks() {
            breaks.push((r * (k1 - k2)).abs());
        }
    }
    breaks.retain(|&b| b > 0.0 && b < t);
    breaks.sort_by(f64::total_cmp);
    let mut failure = None;
    let res = integrate(
        |z| match two_point_F(model, z) {
            Ok(v) => v * g(z),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        0.0,
        t,
        &breaks,
        quad.abs_tolerance / r.max(1.0),
        quad.max_nodes,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let diag = phi1.shifted_inner(phi2, 0.0, inner_tol);
    let value = r * res.value + r / PI * diag;
    if !res.converged {
        return Err(Error::QuadratureNotConverged { estimate: value, error: r * res.error });
    }
    Ok(value)
}

/// `E ⟨ν_R, φ⟩ = (R/π) ∫ φ`.
pub fn expected_linear_statistic(phi: &TestFunction, r: f64) -> f64 {
    r / PI * phi.integral()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_function_parsing() {
        assert_eq!(TestFunction::parse("indicator:0,1").unwrap(), TestFunction::Indicator { a: 0.0, b: 1.0 });
        assert_eq!(TestFunction::parse("gaussian(0, 2)").unwrap(), TestFunction::Gaussian { center: 0.0, width: 2.0 });
        let t = TestFunction::parse("table:0,1,2|0,1,0").unwrap();
        assert!((t.eval(0.5) - 0.5).abs() < 1e-15 && (t.integral() - 1.0).abs() < 1e-15);
        assert_eq!(TestFunction::parse(&t.to_string()).unwrap(), t);
        assert!(TestFunction::parse("indicator:1,0").is_err());
        assert!(TestFunction::parse("box:0,1").is_err());
    }

    #[test]
    fn f_limits() {
        let m = CorrelationModel::bargmann_fock();
        assert_eq!(two_point_F(&m, 0.0).unwrap(), -1.0 / (PI * PI));
        assert!((two_point_F(&m, 1e-3).unwrap() + 1.0 / (PI * PI)).abs() < 1e-4);
        assert!(two_point_F(&m, 10.0).unwrap().abs() < 1e-15);
        let (a, b) = (two_point_F(&m, 0.7).unwrap(), two_point_F(&m, -0.7).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn expected_statistics() {
        let phi = TestFunction::gaussian(0.0, 1.0).unwrap();
        assert!((expected_linear_statistic(&phi, 1.0) - PI.sqrt() / PI).abs() < 1e-15);
        let ind = TestFunction::indicator(0.0, 1.0).unwrap();
        assert!((expected_linear_statistic(&ind, 50.0) - 50.0 / PI).abs() < 1e-13);
    }
}
