//! Double-double arithmetic (about 32 significant digits).
//!
//! The Kac–Rice matrices for nearly coincident points are assembled from
//! divided differences whose rounding error grows like a negative power of
//! the spacing. Running that assembly in double-double keeps the final
//! `f64` results accurate down to spacings of about `1e-4`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

const LN2: DD = DD { hi: 6.931_471_805_599_453e-1, lo: 2.319_046_813_846_299_6e-17 };
const PI: DD = DD { hi: 3.141_592_653_589_793, lo: 1.224_646_799_147_353_2e-16 };
const HALF_PI: DD = DD { hi: 1.570_796_326_794_896_6, lo: 6.123_233_995_736_766e-17 };

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };

    #[inline]
    pub const fn new(x: f64) -> DD {
        DD { hi: x, lo: 0.0 }
    }

    /// Exact difference of two doubles.
    #[inline]
    pub fn diff(a: f64, b: f64) -> DD {
        let (s, e) = two_sum(a, -b);
        DD { hi: s, lo: e }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn pi() -> DD {
        PI
    }

    #[inline]
    pub fn abs(self) -> DD {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn sqr(self) -> DD {
        self * self
    }

    fn mul_f64(self, b: f64) -> DD {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }

    fn ldexp(self, k: i32) -> DD {
        let s = 2f64.powi(k);
        DD { hi: self.hi * s, lo: self.lo * s }
    }

    pub fn sqrt(self) -> DD {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 { DD::ZERO } else { DD::new(f64::NAN) };
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let r = (self - DD::new(ax).sqr()).hi * (x * 0.5);
        DD::new(ax) + DD::new(r)
    }

    pub fn exp(self) -> DD {
        if self.hi > 709.0 {
            return DD::new(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return DD::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2.mul_f64(k)).ldexp(-10);
        // Taylor series on |r| <= ln2 / 2048.
        let mut term = r;
        let mut sum = r;
        for n in 2..=14 {
            term = term * r / DD::new(n as f64);
            sum += term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        // (1 + s)^2 - 1 = s (2 + s), ten times.
        for _ in 0..10 {
            sum = sum * (sum + DD::new(2.0));
        }
        (sum + DD::ONE).ldexp(k as i32)
    }

    /// Sine and cosine with reduction modulo π/2; accurate for |x| up to ~1e6.
    pub fn sin_cos(self) -> (DD, DD) {
        let k = (self.hi / HALF_PI.hi).round();
        let r = self - HALF_PI.mul_f64(k);
        let r2 = r * r;
        // Taylor series on |r| <= π/4.
        let mut s_term = r;
        let mut s = r;
        let mut c_term = DD::ONE;
        let mut c = DD::ONE;
        let mut n = 1.0;
        loop {
            c_term = -(c_term * r2) / DD::new(n * (n + 1.0));
            s_term = -(s_term * r2) / DD::new((n + 1.0) * (n + 2.0));
            c += c_term;
            s += s_term;
            n += 2.0;
            if c_term.hi.abs() < 1e-36 && s_term.hi.abs() < 1e-36 {
                break;
            }
        }
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
}

impl From<f64> for DD {
    fn from(x: f64) -> DD {
        DD::new(x)
    }
}

impl fmt::Debug for DD {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DD({:e} + {:e})", self.hi, self.lo)
    }
}

impl PartialOrd for DD {
    fn partial_cmp(&self, other: &DD) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl Neg for DD {
    type Output = DD;
    #[inline]
    fn neg(self) -> DD {
        DD { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for DD {
    type Output = DD;
    #[inline]
    fn add(self, b: DD) -> DD {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DD { hi, lo }
    }
}

impl Sub for DD {
    type Output = DD;
    #[inline]
    fn sub(self, b: DD) -> DD {
        self + (-b)
    }
}

impl Mul for DD {
    type Output = DD;
    #[inline]
    fn mul(self, b: DD) -> DD {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }
}

impl Div for DD {
    type Output = DD;
    #[inline]
    fn div(self, b: DD) -> DD {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo } + DD::new(q3)
    }
}

macro_rules! assign_ops {
    ($($tr:ident $m:ident $op:tt),*) => {$(
        impl $tr for DD {
            #[inline]
            fn $m(&mut self, b: DD) { *self = *self $op b; }
        }
    )*};
}
assign_ops!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /);

/// Scalar arithmetic shared by the `f64` and double-double code paths.
pub trait Real:
    Copy
    + PartialOrd
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn promote(self) -> DD;
    fn demote(x: DD) -> Self;
    /// Exact (for `DD`) or rounded (for `f64`) difference `a - b`.
    fn diff(a: f64, b: f64) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn sin_cos(self) -> (Self, Self);
    fn abs(self) -> Self;
    fn pi() -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> f64 {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn promote(self) -> DD {
        DD::new(self)
    }
    fn demote(x: DD) -> f64 {
        x.to_f64()
    }
    fn diff(a: f64, b: f64) -> f64 {
        a - b
    }
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }
    fn exp(self) -> f64 {
        f64::exp(self)
    }
    fn sin_cos(self) -> (f64, f64) {
        f64::sin_cos(self)
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn pi() -> f64 {
        std::f64::consts::PI
    }
}

impl Real for DD {
    fn from_f64(x: f64) -> DD {
        DD::new(x)
    }
    fn to_f64(self) -> f64 {
        DD::to_f64(self)
    }
    fn promote(self) -> DD {
        self
    }
    fn demote(x: DD) -> DD {
        x
    }
    fn diff(a: f64, b: f64) -> DD {
        DD::diff(a, b)
    }
    fn sqrt(self) -> DD {
        DD::sqrt(self)
    }
    fn exp(self) -> DD {
        DD::exp(self)
    }
    fn sin_cos(self) -> (DD, DD) {
        DD::sin_cos(self)
    }
    fn abs(self) -> DD {
        DD::abs(self)
    }
    fn pi() -> DD {
        PI
    }
}
