//! Hermite divided differences, the Newton matrix `M(x)`, and double divided
//! differences of a correlation function.
//!
//! For a configuration `x = (x_1, …, x_k)` with repetitions, `c_i(x)` counts the
//! earlier entries equal to `x_i`, and `ev_x(f)_i = f^(c_i)(x_i) / c_i!`. The
//! Newton matrix satisfies `M(x) [ev]_x(f) = ev_x(f)`, where `[ev]_x(f)` lists
//! the divided differences `[f]_1(x_1), …, [f]_k(x_1, …, x_k)`.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::correlation_models::{factorial, CorrelationModel};
use crate::ddouble::{Real, DD};
use crate::error::{Error, Result};

/// Points closer than this are treated as equal.
pub const SNAP_TOLERANCE: f64 = 1e-10;

/// Replaces each point lying within [`SNAP_TOLERANCE`] of an earlier point by
/// that earlier point.
pub fn snap(points: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(points.len());
    for &p in points {
        let v = out.iter().copied().find(|&q| (q - p).abs() < SNAP_TOLERANCE).unwrap_or(p);
        out.push(v);
    }
    out
}

/// `c_i(x)`: number of earlier entries equal to `x_i` (after snapping).
pub fn multiplicities(points: &[f64]) -> Vec<usize> {
    let x = snap(points);
    (0..x.len()).map(|i| x[..i].iter().filter(|&&q| q == x[i]).count()).collect()
}

pub(crate) fn newton_matrix_real<T: Real>(x: &[f64]) -> Vec<Vec<T>> {
    let k = x.len();
    let c = multiplicities(x);
    let mut m = vec![vec![T::zero(); k]; k];
    for i in 0..k {
        // Taylor coefficients around x_i of P^j(X) = Π_{l<j} (X - x_l).
        let mut poly = vec![T::one()];
        for j in 0..k {
            m[i][j] = poly.get(c[i]).copied().unwrap_or_else(T::zero);
            let d = T::diff(x[i], x[j]);
            let mut next = vec![T::zero(); poly.len() + 1];
            for (n, &a) in poly.iter().enumerate() {
                next[n + 1] += a;
                next[n] += d * a;
            }
            poly = next;
        }
    }
    m
}

/// The lower-triangular Newton matrix `M(x)`.
pub fn newton_matrix(points: &[f64]) -> DMatrix<f64> {
    let x = snap(points);
    let m = newton_matrix_real::<DD>(&x);
    let k = x.len();
    DMatrix::from_fn(k, k, |i, j| m[i][j].to_f64())
}

fn forward_substitute<T: Real>(m: &[Vec<T>], rhs: &[T]) -> Vec<T> {
    let mut y: Vec<T> = Vec::with_capacity(rhs.len());
    for i in 0..rhs.len() {
        let mut s = rhs[i];
        for (j, yj) in y.iter().enumerate() {
            s -= m[i][j] * *yj;
        }
        y.push(s / m[i][i]);
    }
    y
}

/// `[ev]_x(f)` from `ev_x(f)`, by forward substitution against `M(x)`.
pub fn divided_diff_vector(points: &[f64], evals: &[f64]) -> Result<Vec<f64>> {
    if points.len() != evals.len() || points.is_empty() {
        return Err(Error::InvalidInput(format!(
            "need one evaluation per point ({} points, {} evaluations)",
            points.len(),
            evals.len()
        )));
    }
    let x = snap(points);
    let m = newton_matrix_real::<DD>(&x);
    let rhs: Vec<DD> = evals.iter().map(|&v| DD::new(v)).collect();
    Ok(forward_substitute(&m, &rhs).into_iter().map(|v| v.to_f64()).collect())
}

/// `[f]_p(x) = Σ_i f(x_i) / Π_{l≠i} (x_i - x_l)`, valid for distinct points.
pub fn explicit_divided_difference<F: Fn(f64) -> f64>(points: &[f64], f: F) -> f64 {
    points
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let den: f64 = points.iter().enumerate().filter(|&(l, _)| l != i).map(|(_, &xl)| xi - xl).product();
            f(xi) / den
        })
        .sum()
}

/// One term `weight · f^(order)(point)` of a linear functional of `f`.
#[derive(Debug, Clone, Copy)]
pub struct Term<T> {
    pub point: f64,
    pub order: usize,
    pub weight: T,
}

/// `[f]_k(x)` written as a combination of derivatives of `f` at the points.
#[derive(Debug, Clone)]
pub struct Functional<T> {
    pub terms: Vec<Term<T>>,
}

impl<T: Real> Functional<T> {
    /// The divided difference of maximal order on `points` (already snapped).
    pub fn divided_difference(points: &[f64]) -> Self {
        let k = points.len();
        let c = multiplicities(points);
        let m = newton_matrix_real::<T>(points);
        // Last row of M^{-1}: solve M^T w = e_k by back substitution.
        let mut w = vec![T::zero(); k];
        for i in (0..k).rev() {
            let mut s = if i == k - 1 { T::one() } else { T::zero() };
            for j in i + 1..k {
                s -= m[j][i] * w[j];
            }
            w[i] = s / m[i][i];
        }
        let terms = (0..k)
            .map(|i| Term { point: points[i], order: c[i], weight: w[i] / T::from_f64(factorial(c[i])) })
            .collect();
        Functional { terms }
    }

    pub fn max_order(&self) -> usize {
        self.terms.iter().map(|t| t.order).max().unwrap_or(0)
    }
}

/// Covariances `E[L1(f) L2(f)]` of linear functionals of the process, with
/// the derivative tables of `κ` cached per ordered pair of points.
pub(crate) struct CovarianceEngine<'a, T> {
    model: &'a CorrelationModel,
    order: usize,
    cache: HashMap<(u64, u64), Vec<T>>,
}

impl<'a, T: Real> CovarianceEngine<'a, T> {
    pub fn new(model: &'a CorrelationModel, order: usize) -> Result<Self> {
        let available = model.max_derivative_order();
        if order > available {
            return Err(Error::OrderUnavailable { requested: order, available });
        }
        Ok(CovarianceEngine { model, order, cache: HashMap::new() })
    }

    /// `(-1)^a κ^(a+b)(q - p) = E[f^(a)(p) f^(b)(q)]`.
    pub fn elementary(&mut self, p: f64, a: usize, q: f64, b: usize) -> T {
        let (model, order) = (self.model, self.order);
        let table = self
            .cache
            .entry((p.to_bits(), q.to_bits()))
            .or_insert_with(|| model.derivs_unchecked::<T>(T::diff(q, p), order));
        let v = table[a + b];
        if a % 2 == 0 {
            v
        } else {
            -v
        }
    }

    pub fn cov(&mut self, l1: &Functional<T>, l2: &Functional<T>) -> T {
        let mut s = T::zero();
        for t1 in &l1.terms {
            for t2 in &l2.terms {
                s += t1.weight * t2.weight * self.elementary(t1.point, t1.order, t2.point, t2.order);
            }
        }
        s
    }
}

/// `[κ]_(k,l)(x, y)`, the covariance of `[f]_k(x)` and `[f]_l(y)`.
pub fn double_divided_diff(model: &CorrelationModel, x: &[f64], y: &[f64]) -> Result<f64> {
    check_nonempty(x, y)?;
    let (x, y) = (snap(x), snap(y));
    let mut eng = CovarianceEngine::<DD>::new(model, x.len() + y.len() - 2)?;
    let fx = Functional::divided_difference(&x);
    let fy = Functional::divided_difference(&y);
    Ok(eng.cov(&fx, &fy).to_f64())
}

/// Which side of `M(x)^{-1} C M(y)^{-T}` is resolved first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DifferencingOrder {
    RowsFirst,
    ColumnsFirst,
}

/// All `[κ]_(a,b)(x_1..x_a, y_1..y_b)` for `a <= k`, `b <= l`.
pub fn double_divided_diff_matrix(model: &CorrelationModel, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    double_divided_diff_matrix_ordered(model, x, y, DifferencingOrder::RowsFirst)
}

pub fn double_divided_diff_matrix_ordered(
    model: &CorrelationModel,
    x: &[f64],
    y: &[f64],
    order: DifferencingOrder,
) -> Result<DMatrix<f64>> {
    check_nonempty(x, y)?;
    let (x, y) = (snap(x), snap(y));
    let (k, l) = (x.len(), y.len());
    let mut eng = CovarianceEngine::<DD>::new(model, k + l - 2)?;
    let (cx, cy) = (multiplicities(&x), multiplicities(&y));
    let mut c = vec![vec![DD::ZERO; l]; k];
    for i in 0..k {
        for j in 0..l {
            let s = DD::new(factorial(cx[i]) * factorial(cy[j]));
            c[i][j] = eng.elementary(x[i], cx[i], y[j], cy[j]) / s;
        }
    }
    let mx = newton_matrix_real::<DD>(&x);
    let my = newton_matrix_real::<DD>(&y);
    let solve_columns = |m: &[Vec<DD>], a: &[Vec<DD>]| -> Vec<Vec<DD>> {
        // M^{-1} A, column by column.
        let (r, cols) = (a.len(), a[0].len());
        let mut out = vec![vec![DD::ZERO; cols]; r];
        for j in 0..cols {
            let col: Vec<DD> = (0..r).map(|i| a[i][j]).collect();
            for (i, v) in forward_substitute(m, &col).into_iter().enumerate() {
                out[i][j] = v;
            }
        }
        out
    };
    let solve_rows = |m: &[Vec<DD>], a: &[Vec<DD>]| -> Vec<Vec<DD>> {
        // A M^{-T}, row by row.
        a.iter().map(|row| forward_substitute(m, row)).collect()
    };
    let r = match order {
        DifferencingOrder::RowsFirst => solve_rows(&my, &solve_columns(&mx, &c)),
        DifferencingOrder::ColumnsFirst => solve_columns(&mx, &solve_rows(&my, &c)),
    };
    Ok(DMatrix::from_fn(k, l, |i, j| r[i][j].to_f64()))
}

fn check_nonempty(x: &[f64], y: &[f64]) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        Err(Error::InvalidInput("configurations must be non-empty".into()))
    } else {
        Ok(())
    }
}
