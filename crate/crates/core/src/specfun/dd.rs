//! Double-double arithmetic (about 32 significant digits), real and complex.
//!
//! Only the operations the moment recurrences need are provided.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dd {
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

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn recip(self) -> Dd {
        Dd::ONE / self
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let s = self.hi.sqrt();
        let (p, e) = two_prod(s, s);
        let r = (self - Dd { hi: p, lo: e }).hi / (2.0 * s);
        let (h, l) = quick_two_sum(s, r);
        Dd { hi: h, lo: l }
    }

    fn scale(self, s: f64) -> Dd {
        self * Dd::new(s)
    }

    /// sin and cos for |x| <= 2 by halving, Taylor, then doubling.
    fn sin_cos(self) -> (Dd, Dd) {
        const HALVINGS: i32 = 6;
        let s = self.scale(1.0 / (1 << HALVINGS) as f64);
        let s2 = s * s;
        // sin s = s (1 - s^2/6 + ...), cos s = 1 - s^2/2 + ...
        let mut sin = Dd::ZERO;
        let mut cos = Dd::ZERO;
        let mut term = Dd::ONE;
        for k in 0..14 {
            let kf = k as f64;
            if k > 0 {
                term = -(term * s2) / Dd::new((2.0 * kf - 1.0) * (2.0 * kf));
            }
            cos = cos + term;
            sin = sin + term / Dd::new(2.0 * kf + 1.0);
        }
        sin = sin * s;
        for _ in 0..HALVINGS {
            let ns = (sin * cos).scale(2.0);
            let nc = (cos - sin) * (cos + sin);
            sin = ns;
            cos = nc;
        }
        (sin, cos)
    }

    /// arctan for x >= 0.
    pub fn atan(self) -> Dd {
        if self.hi < 0.0 {
            return -(-self).atan();
        }
        if self.hi > 1.0 {
            // atan x = pi/2 - atan(1/x) keeps the Newton angle small.
            let half_pi = Dd { hi: std::f64::consts::FRAC_PI_2, lo: 6.123_233_995_736_766e-17 };
            return half_pi - self.recip().atan();
        }
        let mut t = Dd::new(self.hi.atan());
        for _ in 0..2 {
            let (s, c) = t.sin_cos();
            let f = s - self * c;
            let fp = c + self * s;
            t = t - f / fp;
        }
        t
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Dd {
        Dd::new(x)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, y: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, y.hi);
        let (t, f) = two_sum(self.lo, y.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, y: Dd) -> Dd {
        self + (-y)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, y: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, y.hi);
        let e = e + (self.hi * y.lo + self.lo * y.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, y: Dd) -> Dd {
        let q1 = self.hi / y.hi;
        let r = self - y.scale(q1);
        let q2 = r.hi / y.hi;
        let r = r - y.scale(q2);
        let q3 = r.hi / y.hi;
        let (h, l) = quick_two_sum(q1, q2);
        Dd { hi: h, lo: l } + Dd::new(q3)
    }
}

/// Complex double-double.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CDd {
    pub re: Dd,
    pub im: Dd,
}

impl CDd {
    pub const ZERO: CDd = CDd { re: Dd::ZERO, im: Dd::ZERO };
    pub const ONE: CDd = CDd { re: Dd::ONE, im: Dd::ZERO };

    pub fn new(re: Dd, im: Dd) -> CDd {
        CDd { re, im }
    }

    pub fn real(x: Dd) -> CDd {
        CDd { re: x, im: Dd::ZERO }
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn scale(self, s: Dd) -> CDd {
        CDd { re: self.re * s, im: self.im * s }
    }
}

impl From<Complex64> for CDd {
    fn from(z: Complex64) -> CDd {
        CDd { re: Dd::new(z.re), im: Dd::new(z.im) }
    }
}

impl Add for CDd {
    type Output = CDd;
    fn add(self, y: CDd) -> CDd {
        CDd { re: self.re + y.re, im: self.im + y.im }
    }
}

impl Sub for CDd {
    type Output = CDd;
    fn sub(self, y: CDd) -> CDd {
        CDd { re: self.re - y.re, im: self.im - y.im }
    }
}

impl Neg for CDd {
    type Output = CDd;
    fn neg(self) -> CDd {
        CDd { re: -self.re, im: -self.im }
    }
}

impl Mul for CDd {
    type Output = CDd;
    fn mul(self, y: CDd) -> CDd {
        CDd {
            re: self.re * y.re - self.im * y.im,
            im: self.re * y.im + self.im * y.re,
        }
    }
}

impl Div for CDd {
    type Output = CDd;
    fn div(self, y: CDd) -> CDd {
        let den = y.re * y.re + y.im * y.im;
        let num = self * CDd { re: y.re, im: -y.im };
        CDd { re: num.re / den, im: num.im / den }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn third_times_three() {
        let t = Dd::ONE / Dd::new(3.0);
        let back = t * Dd::new(3.0) - Dd::ONE;
        assert!(back.to_f64().abs() < 1e-31);
    }

    #[test]
    fn sqrt_two_squared() {
        let s = Dd::new(2.0).sqrt();
        assert!((s * s - Dd::new(2.0)).to_f64().abs() < 1e-31);
    }

    #[test]
    fn atan_one_is_quarter_pi() {
        let a = Dd::ONE.atan();
        // pi/4 in double-double
        let q = Dd { hi: std::f64::consts::FRAC_PI_4, lo: 3.061_616_997_868_383e-17 };
        assert!((a - q).to_f64().abs() < 1e-30, "{:?}", a - q);
    }

    #[test]
    fn atan_matches_f64() {
        for &x in &[1e-6, 0.1, 0.5, 0.9, 1.5, 7.0, 300.0] {
            let a = Dd::new(x).atan().to_f64();
            assert!((a - x.atan()).abs() <= 2e-16 * x.atan(), "{x}");
        }
    }

    #[test]
    fn complex_division_roundtrip() {
        let a = CDd::from(Complex64::new(0.3, -1.7));
        let b = CDd::from(Complex64::new(-2.1, 0.4));
        let c = a / b * b - a;
        assert!(c.to_c64().norm() < 1e-30);
    }
}
