//! Complex numbers backed by MPFR floats at a fixed precision.
//!
//! MPC is not available in this environment, so the handful of complex
//! transcendentals we need (exp, sqrt, inversion) are assembled from real
//! MPFR operations. Precision is taken from the operands; mixed-precision
//! arithmetic follows the left operand.

use rug::float::Round;
use rug::ops::Pow;
use rug::Float;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// A complex number with MPFR real and imaginary parts.
#[derive(Clone, Debug, PartialEq)]
pub struct BigComplex {
    re: Float,
    im: Float,
}

impl BigComplex {
    pub fn new(re: Float, im: Float) -> Self {
        BigComplex { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        BigComplex {
            re: Float::new(prec),
            im: Float::new(prec),
        }
    }

    pub fn from_f64(re: f64, im: f64, prec: u32) -> Self {
        BigComplex {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
        }
    }

    pub fn i(prec: u32) -> Self {
        BigComplex::from_f64(0.0, 1.0, prec)
    }

    pub fn re(&self) -> &Float {
        &self.re
    }

    pub fn im(&self) -> &Float {
        &self.im
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        BigComplex {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// Multiply by the imaginary unit.
    pub fn mul_i(&self) -> Self {
        BigComplex {
            re: -self.im.clone(),
            im: self.re.clone(),
        }
    }

    pub fn mul_float(&self, f: &Float) -> Self {
        BigComplex {
            re: self.re.clone() * f,
            im: self.im.clone() * f,
        }
    }

    pub fn div_float(&self, f: &Float) -> Self {
        BigComplex {
            re: self.re.clone() / f,
            im: self.im.clone() / f,
        }
    }

    pub fn norm_sqr(&self) -> Float {
        self.re.clone().square() + self.im.clone().square()
    }

    pub fn abs(&self) -> Float {
        self.norm_sqr().sqrt()
    }

    pub fn abs_f64(&self) -> f64 {
        self.abs().to_f64()
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    pub fn sub_f64(&self, re: f64, im: f64) -> Self {
        BigComplex {
            re: self.re.clone() - Float::with_val(self.prec(), re),
            im: self.im.clone() - Float::with_val(self.prec(), im),
        }
    }

    pub fn recip(&self) -> Self {
        let n = self.norm_sqr();
        BigComplex {
            re: self.re.clone() / &n,
            im: -self.im.clone() / &n,
        }
    }

    /// Complex exponential via `e^{x}(cos y + i sin y)`.
    pub fn exp(&self) -> Self {
        let prec = self.prec();
        let ex = self.re.clone().exp();
        let (s, c) = self.im.clone().sin_cos(Float::new(prec));
        BigComplex {
            re: ex.clone() * c,
            im: ex * s,
        }
    }

    /// Principal-branch square root (branch cut along the negative real axis).
    pub fn sqrt(&self) -> Self {
        let prec = self.prec();
        if self.im.is_zero() {
            if self.re.is_sign_negative() && !self.re.is_zero() {
                let m = (-self.re.clone()).sqrt();
                return BigComplex {
                    re: Float::new(prec),
                    im: m,
                };
            }
            return BigComplex {
                re: self.re.clone().sqrt(),
                im: Float::new(prec),
            };
        }
        // sqrt(z) = sqrt((|z|+x)/2) + i sgn(y) sqrt((|z|-x)/2)
        let r = self.abs();
        let mut u = r.clone() + &self.re;
        u /= 2u32;
        let u = u.sqrt();
        let mut v = r - &self.re;
        v /= 2u32;
        let mut v = v.sqrt();
        if self.im.is_sign_negative() {
            v = -v;
        }
        BigComplex { re: u, im: v }
    }

    /// Integer power by binary exponentiation.
    pub fn powi(&self, n: i64) -> Self {
        if n < 0 {
            return self.recip().powi(-n);
        }
        let mut base = self.clone();
        let mut acc = BigComplex::from_f64(1.0, 0.0, self.prec());
        let mut e = n as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }

    /// Principal-branch complex power `z^w = exp(w log z)`.
    pub fn pow(&self, w: &BigComplex) -> Self {
        (w.clone() * self.ln()).exp()
    }

    /// Principal-branch logarithm.
    pub fn ln(&self) -> Self {
        let prec = self.prec();
        let r = self.norm_sqr().ln() / 2u32;
        let theta = self.arg();
        let _ = prec;
        BigComplex { re: r, im: theta }
    }

    /// Argument in `(-pi, pi]`.
    pub fn arg(&self) -> Float {
        self.im.clone().atan2(&self.re)
    }

    /// Round (or extend) to a different working precision.
    pub fn with_prec(&self, prec: u32) -> Self {
        BigComplex {
            re: Float::with_val(prec, &self.re),
            im: Float::with_val(prec, &self.im),
        }
    }

    /// Scale by an exact power of two (exact operation in MPFR).
    pub fn mul_2exp(&self, e: i32) -> Self {
        let two = Float::with_val(self.prec(), 2);
        let f = two.pow(e);
        self.mul_float(&f)
    }

    /// Format for reports: "re +/- im i" in decimal with the given digits.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        let fmt = |f: &Float| -> String {
            let mut s = f.to_string_radix_round(10, Some(digits), Round::Nearest);
            if !s.contains('e') && !s.contains('.') {
                s.push_str(".0");
            }
            s
        };
        if self.im.is_sign_negative() {
            format!("{} - {}i", fmt(&self.re), fmt(&(-self.im.clone())))
        } else {
            format!("{} + {}i", fmt(&self.re), fmt(&self.im))
        }
    }
}

impl Add for BigComplex {
    type Output = BigComplex;
    fn add(self, rhs: BigComplex) -> BigComplex {
        BigComplex {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl AddAssign for BigComplex {
    fn add_assign(&mut self, rhs: BigComplex) {
        self.re += rhs.re;
        self.im += rhs.im;
    }
}

impl Sub for BigComplex {
    type Output = BigComplex;
    fn sub(self, rhs: BigComplex) -> BigComplex {
        BigComplex {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl SubAssign for BigComplex {
    fn sub_assign(&mut self, rhs: BigComplex) {
        self.re -= rhs.re;
        self.im -= rhs.im;
    }
}

impl Mul for BigComplex {
    type Output = BigComplex;
    fn mul(self, rhs: BigComplex) -> BigComplex {
        let re = self.re.clone() * &rhs.re - self.im.clone() * &rhs.im;
        let im = self.re * rhs.im + self.im * rhs.re;
        BigComplex { re, im }
    }
}

impl MulAssign for BigComplex {
    fn mul_assign(&mut self, rhs: BigComplex) {
        *self = self.clone() * rhs;
    }
}

impl Div for BigComplex {
    type Output = BigComplex;
    fn div(self, rhs: BigComplex) -> BigComplex {
        self * rhs.recip()
    }
}

impl Neg for BigComplex {
    type Output = BigComplex;
    fn neg(self) -> BigComplex {
        BigComplex {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl std::fmt::Display for BigComplex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_decimal_string(20))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_and_sqrt_agree_with_f64() {
        let z = BigComplex::from_f64(0.3, -1.2, 128);
        let e = z.exp();
        let want = num_exp(0.3, -1.2);
        assert!((e.re().to_f64() - want.0).abs() < 1e-14);
        assert!((e.im().to_f64() - want.1).abs() < 1e-14);

        let s = z.sqrt();
        let sq = s.clone() * s;
        assert!((sq - z).abs_f64() < 1e-35);
    }

    fn num_exp(x: f64, y: f64) -> (f64, f64) {
        (x.exp() * y.cos(), x.exp() * y.sin())
    }

    #[test]
    fn sqrt_branch() {
        // Principal branch: sqrt(-1) = +i, sqrt just below the cut has negative imag part.
        let m1 = BigComplex::from_f64(-1.0, 0.0, 64);
        let s = m1.sqrt();
        assert!(s.im().to_f64() > 0.99);
        let below = BigComplex::from_f64(-1.0, -1e-30, 64);
        assert!(below.sqrt().im().to_f64() < 0.0);
    }

    #[test]
    fn powi_matches_repeated_mul() {
        let z = BigComplex::from_f64(0.7, 0.4, 96);
        let mut acc = BigComplex::from_f64(1.0, 0.0, 96);
        for _ in 0..9 {
            acc = acc * z.clone();
        }
        assert!((z.powi(9) - acc).abs_f64() < 1e-25);
        let inv = z.powi(-3) * z.powi(3);
        assert!(inv.sub_f64(1.0, 0.0).abs_f64() < 1e-25);
    }
}
