//! Exact rational and configurable-precision complex arithmetic, plus the
//! special functions consumed by every other module.
//!
//! Exact data lives in [`Rat`] (arbitrary-precision rationals, always
//! canonical) and [`RatModZ`] (rationals reduced to `[0, 1)`). Numerical
//! data lives in [`BigComplex`], a pair of MPFR floats at the precision
//! fixed by a [`Ctx`]. A `Ctx` also caches roots of unity so that repeated
//! `e(a/n)` lookups are bitwise identical within one computation context.

mod complex;
mod erf;

pub use complex::BigComplex;
pub use erf::erf_complex;

use rug::float::Round;
use rug::ops::DivAssignRound;
use rug::Float;
use std::collections::HashMap;
use std::sync::Mutex;

/// Arbitrary-precision integer.
pub type Int = rug::Integer;
/// Arbitrary-precision rational, kept in lowest terms with positive denominator.
pub type Rat = rug::Rational;

/// Shorthand for building a rational from two machine integers.
pub fn rat(num: i64, den: i64) -> Rat {
    assert!(den != 0, "rational with zero denominator");
    Rat::from((num, den))
}

/// Shorthand for an integer rational.
pub fn rat_int(n: i64) -> Rat {
    Rat::from(n)
}

/// `n!` as an exact integer.
pub fn factorial(n: u32) -> Int {
    Int::factorial(n).into()
}

/// Binomial coefficient `C(n, k)` for integer `n` (possibly negative), `k >= 0`.
///
/// Uses the falling-factorial definition, so `C(-1, 2) = 1`, `C(3, 5) = 0`.
pub fn binomial_int(n: i64, k: u32) -> Int {
    let mut num = Int::from(1);
    for j in 0..k as i64 {
        num *= Int::from(n - j);
    }
    let den = factorial(k);
    debug_assert!(num.is_divisible(&den));
    num / den
}

/// Binomial coefficient `C(x, k)` for rational `x`.
pub fn binomial_rat(x: &Rat, k: u32) -> Rat {
    let mut num = Rat::from(1);
    for j in 0..k as i64 {
        num *= x.clone() - Rat::from(j);
    }
    num / Rat::from(factorial(k))
}

/// A rational reduced to the half-open interval `[0, 1)`, i.e. an element of Q/Z.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RatModZ(Rat);

impl RatModZ {
    pub fn new(r: Rat) -> Self {
        let fl = r.clone().floor();
        RatModZ(r - fl)
    }

    pub fn zero() -> Self {
        RatModZ(Rat::new())
    }

    pub fn is_zero(&self) -> bool {
        self.0.cmp0() == std::cmp::Ordering::Equal
    }

    /// The representative in `[0, 1)`.
    pub fn value(&self) -> &Rat {
        &self.0
    }

    pub fn add(&self, other: &RatModZ) -> RatModZ {
        RatModZ::new(self.0.clone() + &other.0)
    }

    pub fn neg(&self) -> RatModZ {
        RatModZ::new(-self.0.clone())
    }

    /// `n * self` in Q/Z.
    pub fn scale_int(&self, n: i64) -> RatModZ {
        RatModZ::new(self.0.clone() * Rat::from(n))
    }
}

impl From<Rat> for RatModZ {
    fn from(r: Rat) -> Self {
        RatModZ::new(r)
    }
}

impl std::fmt::Display for RatModZ {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Computation context: working precision in bits plus per-context caches.
///
/// All tolerance defaults elsewhere are expressed relative to this precision.
/// Values produced through a `Ctx` are immutable and safe to share across
/// threads; the root-of-unity cache is internally synchronized and
/// insert-once, so repeated lookups are bitwise identical.
pub struct Ctx {
    prec: u32,
    root_cache: Mutex<HashMap<(Int, Int), BigComplex>>,
}

impl Ctx {
    /// Create a context with the given precision (clamped below at 53 bits).
    pub fn new(prec: u32) -> Self {
        Ctx {
            prec: prec.max(53),
            root_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// `2^(-prec + guard)`, the usual tolerance scale for this context.
    pub fn eps(&self, guard: u32) -> Float {
        Float::with_val(self.prec, Float::i_exp(1, guard as i32 - self.prec as i32))
    }

    pub fn float(&self, v: f64) -> Float {
        Float::with_val(self.prec, v)
    }

    pub fn float_from_rat(&self, r: &Rat) -> Float {
        Float::with_val(self.prec, r)
    }

    pub fn pi(&self) -> Float {
        Float::with_val(self.prec, rug::float::Constant::Pi)
    }

    pub fn complex(&self, re: f64, im: f64) -> BigComplex {
        BigComplex::new(self.float(re), self.float(im))
    }

    pub fn complex_zero(&self) -> BigComplex {
        BigComplex::zero(self.prec)
    }

    pub fn complex_one(&self) -> BigComplex {
        BigComplex::from_f64(1.0, 0.0, self.prec)
    }

    pub fn complex_from_rat(&self, r: &Rat) -> BigComplex {
        BigComplex::new(self.float_from_rat(r), Float::new(self.prec))
    }

    /// `e(num/den) = exp(2 pi i num / den)`, cached per `(num mod den, den)`.
    pub fn root_of_unity(&self, num: &Int, den: &Int) -> BigComplex {
        assert!(den.cmp0() == std::cmp::Ordering::Greater, "den must be >= 1");
        let num_red = num.clone().div_rem_euc(den.clone()).1;
        let key = (num_red.clone(), den.clone());
        {
            let cache = self.root_cache.lock().unwrap();
            if let Some(v) = cache.get(&key) {
                return v.clone();
            }
        }
        // 2 pi num/den computed with guard bits so sin/cos see an accurate angle.
        let work = self.prec + 16;
        let mut angle = Float::with_val(work, rug::float::Constant::Pi);
        angle *= 2u32;
        angle *= Float::with_val(work, &num_red);
        angle.div_assign_round(Float::with_val(work, den), Round::Nearest);
        let (s, c) = angle.sin_cos(Float::new(work));
        let val = BigComplex::new(
            Float::with_val(self.prec, c),
            Float::with_val(self.prec, s),
        );
        let mut cache = self.root_cache.lock().unwrap();
        cache.entry(key).or_insert(val).clone()
    }

    pub fn root_of_unity_i64(&self, num: i64, den: i64) -> BigComplex {
        self.root_of_unity(&Int::from(num), &Int::from(den))
    }

    /// `e(r) = exp(2 pi i r)` for rational `r`.
    pub fn e_rat(&self, r: &Rat) -> BigComplex {
        self.root_of_unity(r.numer(), r.denom())
    }

    pub fn e_modz(&self, r: &RatModZ) -> BigComplex {
        self.e_rat(r.value())
    }

    /// `e(z) = exp(2 pi i z)` for complex `z`.
    pub fn e_complex(&self, z: &BigComplex) -> BigComplex {
        let two_pi_i = BigComplex::new(Float::new(self.prec), {
            let mut p = self.pi();
            p *= 2u32;
            p
        });
        (two_pi_i * z.clone()).exp()
    }

    /// `q^x = e(tau x)` for complex exponent `x`.
    pub fn q_pow(&self, tau: &BigComplex, x: &BigComplex) -> BigComplex {
        self.e_complex(&(tau.clone() * x.clone()))
    }

    /// `q^r = e(tau r)` for rational exponent `r`.
    pub fn q_pow_rat(&self, tau: &BigComplex, r: &Rat) -> BigComplex {
        self.e_complex(&tau.clone().mul_float(&self.float_from_rat(r)))
    }
}

static BERNOULLI_CACHE: Mutex<Vec<Rat>> = Mutex::new(Vec::new());

/// The `m`-th Bernoulli number, from the convolution recursion
/// `sum_{j<=m} C(m+1, j) B_j = 0`, memoized.
pub fn bernoulli_number(m: u32) -> Rat {
    let mut cache = BERNOULLI_CACHE.lock().unwrap();
    while cache.len() <= m as usize {
        let n = cache.len() as u32;
        if n == 0 {
            cache.push(Rat::from(1));
            continue;
        }
        let mut acc = Rat::new();
        for j in 0..n {
            acc += Rat::from(binomial_int(n as i64 + 1, j)) * &cache[j as usize];
        }
        acc /= Rat::from(-(n as i64 + 1));
        cache.push(acc);
    }
    cache[m as usize].clone()
}

/// The `m`-th Bernoulli polynomial `B_m(alpha)`, per the generating function
/// `t e^{alpha t} / (e^t - 1)`: `B_m(alpha) = sum_j C(m, j) B_j alpha^{m-j}`.
pub fn bernoulli_polynomial(m: u32, alpha: &Rat) -> Rat {
    let mut acc = Rat::new();
    let mut pow = Rat::from(1); // alpha^{m-j} built downward
    let mut powers = vec![Rat::from(1)];
    for _ in 0..m {
        pow = pow.clone() * alpha;
        powers.push(pow.clone());
    }
    for j in 0..=m {
        acc += Rat::from(binomial_int(m as i64, j)) * bernoulli_number(j) * &powers[(m - j) as usize];
    }
    acc
}

/// Exact integer square root check: is `r` a perfect square of a rational?
pub fn rat_sqrt_exact(r: &Rat) -> Option<Rat> {
    if r.cmp0() == std::cmp::Ordering::Less {
        return None;
    }
    let num = r.numer().clone();
    let den = r.denom().clone();
    let ns = num.sqrt_ref();
    let ns = Int::from(ns);
    let ds = den.sqrt_ref();
    let ds = Int::from(ds);
    if ns.clone().square() == num && ds.clone().square() == den {
        Some(Rat::from((ns, ds)))
    } else {
        None
    }
}

/// Sign with the convention `sgn(0) = +1`.
pub fn sgn_rat(x: &Rat) -> i32 {
    if x.cmp0() == std::cmp::Ordering::Less {
        -1
    } else {
        1
    }
}

/// Sign with the convention `sgn(0) = +1`, for machine integers.
pub fn sgn_i64(x: i64) -> i32 {
    if x < 0 {
        -1
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_polynomial_examples() {
        // B_0 = 1 identically.
        assert_eq!(bernoulli_polynomial(0, &rat(1, 3)), rat_int(1));
        // B_2 = 1/6 at 0.
        assert_eq!(bernoulli_polynomial(2, &Rat::new()), rat(1, 6));
        // B_1(alpha) = alpha - 1/2, so B_1(2/5) = -1/10.
        assert_eq!(bernoulli_polynomial(1, &rat(2, 5)), rat(-1, 10));
    }

    #[test]
    fn bernoulli_symmetry() {
        // B_m(1 - u) = (-1)^m B_m(u) for 0 <= m <= 20 over assorted rationals.
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let num: i64 = rng.gen_range(-40..40);
            let den: i64 = rng.gen_range(1..30);
            let u = rat(num, den);
            let one_minus = rat_int(1) - u.clone();
            for m in 0..=20u32 {
                let lhs = bernoulli_polynomial(m, &one_minus);
                let mut rhs = bernoulli_polynomial(m, &u);
                if m % 2 == 1 {
                    rhs = -rhs;
                }
                assert_eq!(lhs, rhs, "m = {m}, u = {u}");
            }
        }
    }

    #[test]
    fn roots_of_unity_basic() {
        let ctx = Ctx::new(128);
        let one = ctx.root_of_unity_i64(0, 1);
        assert!(one.sub_f64(1.0, 0.0).abs_f64() < 1e-35);
        let minus_one = ctx.root_of_unity_i64(1, 2);
        assert!(minus_one.sub_f64(-1.0, 0.0).abs_f64() < 1e-35);
        // e(1/8) = (sqrt2/2)(1 + i), against the high-precision sin/cos oracle.
        let z = ctx.root_of_unity_i64(1, 8);
        let s = Float::with_val(160, 2).sqrt() / 2u32;
        let want = BigComplex::new(
            Float::with_val(128, &s),
            Float::with_val(128, &s),
        );
        assert!((z - want).abs_f64() < 1e-36);
    }

    #[test]
    fn roots_of_unity_power_closes() {
        let ctx = Ctx::new(128);
        for n in [1i64, 2, 3, 7, 64, 341, 999, 1000] {
            let z = ctx.root_of_unity_i64(1, n);
            let mut acc = ctx.complex_one();
            for _ in 0..n {
                acc = acc * z.clone();
            }
            assert!(acc.sub_f64(1.0, 0.0).abs_f64() < 1e-30, "n = {n}");
        }
    }

    #[test]
    fn root_of_unity_cache_is_bitwise_stable() {
        let ctx = Ctx::new(128);
        let a = ctx.root_of_unity_i64(5, 7);
        let b = ctx.root_of_unity_i64(12, 7); // same residue mod 7
        assert_eq!(a.re().to_string_radix(16, None), b.re().to_string_radix(16, None));
        assert_eq!(a.im().to_string_radix(16, None), b.im().to_string_radix(16, None));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_int(5, 2), Int::from(10));
        assert_eq!(binomial_int(3, 5), Int::from(0));
        assert_eq!(binomial_int(-1, 3), Int::from(-1));
        assert_eq!(binomial_rat(&rat(1, 2), 2), rat(-1, 8));
    }
}
