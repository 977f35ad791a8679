//! Double-double arithmetic: an unevaluated sum `hi + lo` carrying about
//! 106 bits. Only what the reference quadrature needs is implemented.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

pub(crate) const LN2: Dd = Dd { hi: 6.931_471_805_599_453e-1, lo: 2.319_046_813_846_299_6e-17 };

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

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }

    /// Exact product of two doubles.
    #[inline]
    pub fn prod(a: f64, b: f64) -> Dd {
        let (hi, lo) = two_prod(a, b);
        Dd { hi, lo }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Dd { hi, lo }
    }

    #[inline]
    pub fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let r = self - Dd::prod(q1, b);
        let q2 = r.hi / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }
    }

    /// Multiplication by an exact power of two.
    #[inline]
    fn scale(self, s: f64) -> Dd {
        Dd { hi: self.hi * s, lo: self.lo * s }
    }

    /// `e^self`, accurate to a few units of 2^-104 relative.
    pub fn exp(self) -> Dd {
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        if self.hi > 709.0 {
            return Dd { hi: f64::INFINITY, lo: 0.0 };
        }
        let k = (self.hi / LN2.hi).round();
        // r = (self - k ln2) / 1024, |r| <= 3.4e-4.
        let r = (self - LN2.mul_f64(k)).scale(1.0 / 1024.0);
        // expm1(r) by Taylor; r^10/10! is far below 2^-104.
        let mut term = r;
        let mut s = r;
        for n in 2..=9 {
            term = (term * r).div_f64(n as f64);
            s = s + term;
        }
        // expm1(2r) = expm1(r) (expm1(r) + 2), applied ten times.
        for _ in 0..10 {
            s = s * (s + Dd::from_f64(2.0));
        }
        let e = s + Dd::ONE;
        // 2^k in two steps so large |k| does not overflow the scale factor.
        let k = k as i32;
        let half = k / 2;
        e.scale(2f64.powi(half)).scale(2f64.powi(k - half))
    }

    /// Natural log of a positive value, by one Newton step on `e^y = a`.
    pub fn ln(self) -> Dd {
        let y = Dd::from_f64(self.hi.ln());
        y + self * (-y).exp() - Dd::ONE
    }

    /// `ln(1 + self)` for `self >= 0`.
    pub fn ln_1p(self) -> Dd {
        if self.hi < 1e-20 {
            // Second-order term is below 2^-130.
            return self;
        }
        (Dd::ONE + self).ln()
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Dd, hi: f64, lo: f64, tol: f64) -> bool {
        let d = (a.hi - hi) + (a.lo - lo);
        d.abs() <= tol * hi.abs().max(1.0)
    }

    #[test]
    fn exp_of_one() {
        // e = 2.718281828459045 + 1.4456468917292502e-16
        assert!(close(Dd::ONE.exp(), 2.718_281_828_459_045, 1.445_646_891_729_250_2e-16, 1e-30));
    }

    #[test]
    fn exp_ln_roundtrip() {
        // One Newton step squares the binary64 log error, so accuracy holds
        // for the moderate magnitudes the quadrature produces.
        for v in [1e-20, 0.3, 1.0, 7.25, 1e10] {
            let a = Dd::from_f64(v);
            let back = a.ln().exp();
            let rel = ((back - a).to_f64() / v).abs();
            assert!(rel < 1e-29, "v={v} rel={rel:e}");
        }
    }

    #[test]
    fn ln_two() {
        let l = Dd::from_f64(2.0).ln();
        assert!(close(l, LN2.hi, LN2.lo, 1e-31));
    }

    #[test]
    fn exp_negative_large_and_limits() {
        let v = Dd::from_f64(-700.0).exp();
        assert!((v.hi / (-700f64).exp() - 1.0).abs() < 1e-15);
        assert_eq!(Dd::from_f64(-800.0).exp(), Dd::ZERO);
        assert!(Dd::from_f64(800.0).exp().hi.is_infinite());
    }

    #[test]
    fn ordering() {
        let a = Dd { hi: 1.0, lo: 1e-20 };
        let b = Dd { hi: 1.0, lo: -1e-20 };
        assert!(a > b);
        assert!(Dd::from_f64(2.0) > a);
    }
}
