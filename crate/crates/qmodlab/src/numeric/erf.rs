//! Entire-function evaluation of the complex error function.
//!
//! Two branches, switching at `|z| = 8`:
//!
//! - Taylor series `erf(z) = (2/sqrt(pi)) sum (-1)^n z^{2n+1} / (n! (2n+1))`.
//!   The partial sums grow like `e^{|z|^2}` before cancelling down to the
//!   result, so the working precision is boosted by about `|z|^2 log2(e)`
//!   bits to absorb the cancellation.
//! - For `|z| > 8` with `|Re z| >= 1/2`, the continued fraction for
//!   `erfc` (evaluated by the modified Lentz scheme) on the right half
//!   plane, with the odd reflection `erf(-z) = -erf(z)` for the left one.
//!   Near the imaginary axis the continued fraction degrades, so the
//!   boosted Taylor series is used there for any `|z|`.

use super::complex::BigComplex;
use rug::Float;

/// `erf(z)` to roughly the precision of `z` (relative, up to a small guard loss).
pub fn erf_complex(z: &BigComplex) -> BigComplex {
    let prec = z.prec();
    if z.is_zero() {
        return BigComplex::zero(prec);
    }
    let az = z.abs_f64();
    if az <= 8.0 || z.re().clone().abs().to_f64() < 0.5 {
        erf_taylor(z)
    } else if z.re().is_sign_negative() {
        -erf_cf(&(-z.clone()))
    } else {
        erf_cf(z)
    }
}

fn sqrt_pi(prec: u32) -> Float {
    Float::with_val(prec, rug::float::Constant::Pi).sqrt()
}

fn erf_taylor(z: &BigComplex) -> BigComplex {
    let prec = z.prec();
    let az2 = z.norm_sqr().to_f64();
    // Cancellation loses about |z|^2 log2 e bits; add a fixed guard on top.
    let boost = (az2 * 1.4427).ceil() as u32 + 48;
    let work = prec + boost;
    let zw = z.with_prec(work);
    let z2 = zw.clone() * zw.clone();
    let mut term = zw.clone(); // z^{2n+1}/n!
    let mut acc = zw.clone().div_float(&Float::with_val(work, 1));
    let mut n: u32 = 0;
    let tiny = Float::with_val(work, 2f64).pow_i(-(work as i32 - 8));
    loop {
        n += 1;
        term = term * z2.clone();
        term = term.div_float(&Float::with_val(work, -(n as i64)));
        let contrib = term.div_float(&Float::with_val(work, 2 * n as i64 + 1));
        acc += contrib.clone();
        if n > 4 && contrib.abs() < tiny && term.abs() < tiny {
            break;
        }
        assert!(n < 100_000, "erf Taylor did not converge");
    }
    let two_over_sqrt_pi = Float::with_val(work, 2) / sqrt_pi(work);
    acc.mul_float(&two_over_sqrt_pi).with_prec(prec)
}

trait PowI {
    fn pow_i(self, e: i32) -> Float;
}
impl PowI for Float {
    fn pow_i(self, e: i32) -> Float {
        use rug::ops::Pow;
        self.pow(e)
    }
}

/// `erfc` continued fraction on `Re z > 0`:
/// `erfc(z) = e^{-z^2}/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))`.
fn erf_cf(z: &BigComplex) -> BigComplex {
    let prec = z.prec();
    let work = prec + 32;
    let zw = z.with_prec(work);
    let tiny = BigComplex::from_f64(1e-280, 0.0, work);
    let eps = Float::with_val(work, 2f64).pow_i(-(work as i32 - 4));

    // Modified Lentz for f = b_0 + K(a_n / b_n) with b_0 = b_n = z and
    // a_n = n/2, so that f = z + (1/2)/(z + 1/(z + (3/2)/(z + ...))) and
    // erfc(z) = e^{-z^2} / (sqrt(pi) f).
    let mut f = zw.clone();
    if f.is_zero() {
        f = tiny.clone();
    }
    let mut c = f.clone();
    let mut d = BigComplex::zero(work);
    let mut n: u32 = 0;
    loop {
        n += 1;
        let a = BigComplex::new(
            Float::with_val(work, n) / Float::with_val(work, 2),
            Float::new(work),
        );
        d = zw.clone() + a.clone() * d;
        if d.is_zero() {
            d = tiny.clone();
        }
        c = zw.clone() + a.clone() * c.recip();
        if c.is_zero() {
            c = tiny.clone();
        }
        d = d.recip();
        let delta = c.clone() * d.clone();
        f = f * delta.clone();
        if delta.sub_f64(1.0, 0.0).abs() < eps {
            break;
        }
        assert!(n < 100_000, "erfc continued fraction did not converge");
    }
    // erfc = exp(-z^2)/sqrt(pi) / f, and erf = 1 - erfc.
    let e = (-(zw.clone() * zw)).exp();
    let erfc = e.div_float(&sqrt_pi(work)) * f.recip();
    (BigComplex::from_f64(1.0, 0.0, work) - erfc).with_prec(prec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Ctx;

    /// Brute-force Taylor oracle at fixed term count, in high precision.
    fn erf_oracle(z: &BigComplex, terms: u32) -> BigComplex {
        let work = z.prec() + 256;
        let zw = z.with_prec(work);
        let z2 = zw.clone() * zw.clone();
        let mut term = zw.clone();
        let mut acc = zw.clone();
        for n in 1..=terms {
            term = term * z2.clone();
            term = term.div_float(&Float::with_val(work, -(n as i64)));
            acc += term.div_float(&Float::with_val(work, 2 * n as i64 + 1));
        }
        acc.mul_float(&(Float::with_val(work, 2) / sqrt_pi(work)))
            .with_prec(z.prec())
    }

    #[test]
    fn erf_of_one() {
        let ctx = Ctx::new(128);
        let z = ctx.complex(1.0, 0.0);
        let v = erf_complex(&z);
        // Frozen from the 60-term Taylor oracle.
        assert!((v.re().to_f64() - 0.8427007929497148).abs() < 1e-15);
        let oracle = erf_oracle(&z, 60);
        assert!((v - oracle).abs_f64() < 1e-37);
    }

    #[test]
    fn erf_zero_and_odd_symmetry() {
        let ctx = Ctx::new(128);
        assert!(erf_complex(&ctx.complex_zero()).abs_f64() == 0.0);
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let z = ctx.complex(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
            let a = erf_complex(&z);
            let b = erf_complex(&(-z.clone()));
            assert!((a.clone() + b).abs_f64() < 1e-30);
            // erf(conj z) = conj(erf z)
            let c = erf_complex(&z.conj());
            assert!((c - a.conj()).abs_f64() < 1e-30);
        }
    }

    #[test]
    fn branches_cross_validate() {
        let ctx = Ctx::new(160);
        // Points straddling the |z| = 8 switch on both sides of the plane.
        for (x, y) in [
            (8.5, 0.3),
            (9.0, -2.0),
            (-8.5, 1.5),
            (10.0, 4.0),
            (7.9, 0.1),
            (12.0, -1.0),
        ] {
            let z = ctx.complex(x, y);
            let fast = erf_complex(&z);
            let slow = erf_taylor(&z);
            let scale = fast.abs_f64().max(1e-300);
            assert!(
                (fast.clone() - slow).abs_f64() / scale < 1e-40,
                "mismatch at ({x}, {y})"
            );
        }
    }

    #[test]
    fn near_imaginary_axis_large_modulus() {
        // erf(iy) = i erfi(y) grows like e^{y^2}; the Taylor branch must hold up.
        let ctx = Ctx::new(128);
        let z = ctx.complex(0.1, 9.0);
        let v = erf_complex(&z);
        let oracle = erf_oracle(&z, 2000);
        let rel = (v.clone() - oracle).abs_f64() / v.abs_f64();
        assert!(rel < 1e-30, "rel = {rel}");
    }
}
