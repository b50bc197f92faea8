//! Double-double arithmetic (an unevaluated sum `hi + lo` with ~32 significant
//! digits), just enough to sum alternating Mittag-Leffler series whose peak
//! term exceeds the result by up to fifteen orders of magnitude.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

const HALF_LN_2PI: Dd = Dd {
    hi: 0.918_938_533_204_672_8,
    lo: -3.878_294_158_067_241_4e-17,
};

/// Numerator / denominator of B_{2n}, n = 1..=13.
const BERNOULLI: [(f64, f64); 13] = [
    (1.0, 6.0),
    (-1.0, 30.0),
    (1.0, 42.0),
    (-1.0, 30.0),
    (5.0, 66.0),
    (-691.0, 2730.0),
    (7.0, 6.0),
    (-3617.0, 510.0),
    (43867.0, 798.0),
    (-174611.0, 330.0),
    (854513.0, 138.0),
    (-236364091.0, 2730.0),
    (8553103.0, 6.0),
];

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

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn from_pair((hi, lo): (f64, f64)) -> Self {
        Dd { hi, lo }
    }

    /// Exact product of two doubles.
    pub fn product(a: f64, b: f64) -> Self {
        Dd::from_pair(two_prod(a, b))
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn mul_pow2(self, scale: f64) -> Self {
        Dd {
            hi: self.hi * scale,
            lo: self.lo * scale,
        }
    }

    #[cfg(test)]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Dd::new(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        const SQUARINGS: i32 = 9;
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2 * k).mul_pow2(2f64.powi(-SQUARINGS));
        // expm1(r) by Taylor; |r| < 2^-10 so 14 terms reach 1e-34.
        let mut term = r;
        let mut sum = r;
        for n in 2..=14 {
            term = term * r / n as f64;
            sum = sum + term;
            if term.hi.abs() < 1e-34 {
                break;
            }
        }
        for _ in 0..SQUARINGS {
            sum = sum * 2.0 + sum * sum;
        }
        let result = sum + 1.0;
        let k = k as i32;
        // split the power of two so neither factor overflows
        let half = k / 2;
        result
            .mul_pow2(2f64.powi(half))
            .mul_pow2(2f64.powi(k - half))
    }

    /// Natural logarithm of a positive value.
    pub fn ln(self) -> Self {
        let x = Dd::new(self.hi.ln());
        // one Newton step on exp(x) = self doubles the 16 correct digits
        x + self * (-x).exp() - 1.0
    }

    /// ln Γ(s) for s > 0.
    pub fn ln_gamma(self) -> Self {
        let mut s = self;
        let mut shift = Dd::ONE;
        while s.hi < 25.0 {
            shift = shift * s;
            s = s + 1.0;
        }
        let inv = Dd::ONE / s;
        let inv2 = inv * inv;
        let mut series = Dd::ZERO;
        for (n, &(num, den)) in BERNOULLI.iter().enumerate().rev() {
            let m = 2.0 * (n as f64 + 1.0);
            let coef = Dd::new(num) / (Dd::new(den) * (m * (m - 1.0)));
            series = series * inv2 + coef;
        }
        series = series * inv;
        let stirling = (s - 0.5) * s.ln() - s + HALF_LN_2PI + series;
        if shift.hi == 1.0 && shift.lo == 0.0 {
            stirling
        } else {
            stirling - shift.ln()
        }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::from_pair(quick_two_sum(s, e + f))
    }
}

impl Add<f64> for Dd {
    type Output = Dd;
    fn add(self, b: f64) -> Dd {
        let (s, e) = two_sum(self.hi, b);
        Dd::from_pair(quick_two_sum(s, e + self.lo))
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Sub<f64> for Dd {
    type Output = Dd;
    fn sub(self, b: f64) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        Dd::from_pair(quick_two_sum(p, e))
    }
}

impl Mul<f64> for Dd {
    type Output = Dd;
    fn mul(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        Dd::from_pair(quick_two_sum(p, e + self.lo * b))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * q1;
        let q2 = r.hi / b.hi;
        let r = r - b * q2;
        let q3 = r.hi / b.hi;
        Dd::from_pair(quick_two_sum(q1, q2)) + q3
    }
}

impl Div<f64> for Dd {
    type Output = Dd;
    fn div(self, b: f64) -> Dd {
        self / Dd::new(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: Dd, b: Dd) -> f64 {
        ((a - b).to_f64() / b.to_f64()).abs()
    }

    #[test]
    fn exp_ln_round_trip() {
        for &x in &[1e-3, 0.7, 2.0, 13.25, 100.0, 1.0e6] {
            let v = Dd::new(x);
            assert!(rel(v.ln().exp(), v) < 1e-30, "x = {x}");
        }
    }

    #[test]
    fn exp_of_one() {
        // e = 2.718281828459045 + 1.4456468917292502e-16
        let e = Dd::ONE.exp();
        assert_eq!(e.hi, std::f64::consts::E);
        assert!((e.lo - 1.445_646_891_729_250_2e-16).abs() < 1e-31);
    }

    #[test]
    fn ln_gamma_integer_points() {
        // ln 5! and ln 30! against exact factorials
        let f5 = Dd::new(120.0).ln();
        assert!(rel(Dd::new(6.0).ln_gamma(), f5) < 1e-30);
        let mut fact = Dd::ONE;
        for k in 2..=30 {
            fact = fact * k as f64;
        }
        assert!(rel(Dd::new(31.0).ln_gamma(), fact.ln()) < 1e-30);
    }

    #[test]
    fn ln_gamma_half() {
        // ln Γ(1/2) = ln √π
        let v = Dd::new(0.5).ln_gamma();
        let expect = Dd {
            hi: 0.572_364_942_924_700_1,
            lo: 5.132_975_581_353_913e-18,
        };
        assert!((v - expect).abs().hi < 1e-28, "{v:?}");
    }
}
