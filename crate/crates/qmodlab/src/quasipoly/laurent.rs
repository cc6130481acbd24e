//! Laurent expansion of `e^{sum alpha_i t_i} G(e^{t_1}, ..., e^{t_r})`
//! around `t = 0`, with exact rational coefficients.
//!
//! Each univariate factor expands through Bernoulli polynomials:
//! `z^a/(1-z^N)` at `z = e^t` equals `-sum_{j >= -1} B_{j+1}(a/N)/(j+1)! (Nt)^j`;
//! multiplicity-`m` denominators are products of `m` such series. The
//! per-variable series are multiplied exactly and tensored across variables,
//! truncated at a total order.

use crate::numeric::{bernoulli_polynomial, factorial, rat_int, Rat};
use crate::quasipoly::crf::{CrfFactor, CycRatFn};
use crate::quasipoly::QpError;
use std::collections::HashMap;

/// A truncated multivariate Laurent series with rational coefficients.
///
/// Coefficients are stored for exponent vectors `j` with
/// `j_i >= min_order[i]` and total degree `sum j_i <= order`.
#[derive(Clone, Debug)]
pub struct LaurentMulti {
    pub nvars: usize,
    pub coeffs: HashMap<Vec<i64>, Rat>,
    pub min_order: Vec<i64>,
    pub order: i64,
}

impl LaurentMulti {
    pub fn coeff(&self, j: &[i64]) -> Rat {
        self.coeffs.get(j).cloned().unwrap_or_default()
    }

    /// Coefficients of the diagonal restriction `phi(t, ..., t)` by total order.
    pub fn diagonal(&self) -> Vec<(i64, Rat)> {
        let mut acc: HashMap<i64, Rat> = HashMap::new();
        for (j, c) in &self.coeffs {
            let tot: i64 = j.iter().sum();
            *acc.entry(tot).or_default() += c.clone();
        }
        let mut out: Vec<(i64, Rat)> = acc
            .into_iter()
            .filter(|(_, c)| c.cmp0() != std::cmp::Ordering::Equal)
            .collect();
        out.sort_by_key(|(t, _)| *t);
        out
    }

    /// Numerical evaluation at a small rational point (for oracles).
    pub fn eval_rat(&self, t: &[Rat]) -> Rat {
        let mut acc = Rat::new();
        for (j, c) in &self.coeffs {
            let mut v = c.clone();
            for (i, &ji) in j.iter().enumerate() {
                v *= pow_rat(&t[i], ji);
            }
            acc += v;
        }
        acc
    }
}

/// Univariate truncated Laurent series: coefficients for orders
/// `start..=order`.
#[derive(Clone, Debug)]
struct Series1 {
    start: i64,
    coeffs: Vec<Rat>, // index k holds order start + k
    order: i64,
}

impl Series1 {
    fn mul(&self, other: &Series1, order: i64) -> Series1 {
        let start = self.start + other.start;
        let len = (order - start + 1).max(0) as usize;
        let mut coeffs = vec![Rat::new(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                let o = self.start + i as i64 + other.start + j as i64;
                if o > order {
                    break;
                }
                let idx = (o - start) as usize;
                coeffs[idx] += a.clone() * b;
            }
        }
        Series1 {
            start,
            coeffs,
            order,
        }
    }
}

/// `e^{c t}` through the given order.
fn exp_series(c: &Rat, order: i64) -> Series1 {
    let n = order.max(0) as usize;
    let mut coeffs = Vec::with_capacity(n + 1);
    let mut pow = rat_int(1);
    for k in 0..=n {
        if k > 0 {
            pow = pow * c;
        }
        coeffs.push(pow.clone() / Rat::from(factorial(k as u32)));
    }
    Series1 {
        start: 0,
        coeffs,
        order,
    }
}

/// `z^a/(1-z^N)` at `z = e^t`: `-sum_{j>=-1} B_{j+1}(a/N)/(j+1)! N^j t^j`.
fn cyclo_series(a: i64, n: u32, order: i64) -> Series1 {
    let alpha = Rat::from((a, n as i64));
    let len = (order + 1 + 1).max(0) as usize;
    let mut coeffs = Vec::with_capacity(len);
    let mut n_pow = Rat::from((1, n as i64)); // N^j starting at j = -1
    for j in -1..=order {
        let b = bernoulli_polynomial((j + 1) as u32, &alpha);
        let c = -b / Rat::from(factorial((j + 1) as u32)) * &n_pow;
        coeffs.push(c);
        n_pow *= Rat::from(n);
    }
    Series1 {
        start: -1,
        coeffs,
        order,
    }
}

impl CycRatFn {
    /// Exact Laurent coefficients of
    /// `phi(t) = e^{sum alpha_i t_i} G(e^{t_1}, ..., e^{t_r})`
    /// through total order `j_total <= order`. Phase-free only.
    pub fn laurent_at_exp(&self, alpha: &[Rat], order: i64) -> Result<LaurentMulti, QpError> {
        self.require_phase_free()?;
        assert_eq!(alpha.len(), self.nvars());
        let nvars = self.nvars();
        let mut coeffs: HashMap<Vec<i64>, Rat> = HashMap::new();
        let mut min_order = vec![i64::MAX; nvars];

        for t in self.terms() {
            // Build each variable's series, then tensor.
            let mut per_var: Vec<Series1> = Vec::with_capacity(nvars);
            for (i, f) in t.factors.iter().enumerate() {
                let s = match f {
                    CrfFactor::Monomial { a } => {
                        let c = Rat::from(*a) + &alpha[i];
                        exp_series(&c, order + pole_budget(t))
                    }
                    CrfFactor::Cyclo { a, n, mult, .. } => {
                        // pole order = mult; expand each simple factor far
                        // enough that the product is exact to `order`.
                        let sub_order = order + pole_budget(t);
                        let mut s = cyclo_series(*a, *n, sub_order);
                        for _ in 1..*mult {
                            s = s.mul(&cyclo_series(0, *n, sub_order), sub_order);
                        }
                        s.mul(&exp_series(&alpha[i], sub_order), sub_order)
                    }
                };
                per_var.push(s);
            }
            // Tensor with total-order cutoff.
            let starts: Vec<i64> = per_var.iter().map(|s| s.start).collect();
            for (i, s) in starts.iter().enumerate() {
                min_order[i] = min_order[i].min(*s);
            }
            let mut stack: Vec<(usize, Vec<i64>, Rat)> = vec![(0, Vec::new(), t.coef.clone())];
            while let Some((var, j, c)) = stack.pop() {
                if c.cmp0() == std::cmp::Ordering::Equal {
                    continue;
                }
                if var == nvars {
                    *coeffs.entry(j).or_default() += c;
                    continue;
                }
                let used: i64 = j.iter().sum();
                let rest_min: i64 = starts[var + 1..].iter().sum();
                let s = &per_var[var];
                for (k, ck) in s.coeffs.iter().enumerate() {
                    let o = s.start + k as i64;
                    if used + o + rest_min > order {
                        break;
                    }
                    if ck.cmp0() == std::cmp::Ordering::Equal {
                        continue;
                    }
                    let mut j2 = j.clone();
                    j2.push(o);
                    stack.push((var + 1, j2, c.clone() * ck));
                }
            }
        }
        coeffs.retain(|_, c| c.cmp0() != std::cmp::Ordering::Equal);
        for m in &mut min_order {
            if *m == i64::MAX {
                *m = 0;
            }
        }
        Ok(LaurentMulti {
            nvars,
            coeffs,
            min_order,
            order,
        })
    }

    /// Order of vanishing of `G(z, ..., z)` at `z = 1` (that is, the order in
    /// `t` of `G(e^t, ..., e^t)`); `None` when `G` is the zero function.
    pub fn ord_at_one(&self) -> Result<Option<i64>, QpError> {
        let alpha = vec![Rat::new(); self.nvars()];
        let mut bound = 4i64;
        loop {
            let lm = self.laurent_at_exp(&alpha, bound)?;
            if let Some((o, _)) = lm.diagonal().into_iter().next() {
                return Ok(Some(o));
            }
            bound *= 2;
            if bound > 256 {
                return Ok(None);
            }
        }
    }
}

/// Total pole order of one term: extra expansion depth needed so that a
/// truncated product is still exact to the requested order.
fn pole_budget(t: &crate::quasipoly::crf::CrfTerm) -> i64 {
    t.factors
        .iter()
        .map(|f| match f {
            CrfFactor::Monomial { .. } => 0i64,
            CrfFactor::Cyclo { mult, .. } => *mult as i64,
        })
        .sum()
}

fn pow_rat(z: &Rat, e: i64) -> Rat {
    use rug::ops::Pow;
    if e >= 0 {
        z.clone().pow(e as u32)
    } else {
        z.clone().pow(e as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    #[test]
    fn geometric_series_orders() {
        // G = z/(1-z): coefficients (-1, -1/2, -1/12) at orders (-1, 0, 1).
        let g = CycRatFn::cyclo_univariate(1, 0, 1, 1);
        let lm = g.laurent_at_exp(&[Rat::new()], 2).unwrap();
        assert_eq!(lm.coeff(&[-1]), rat(-1, 1));
        assert_eq!(lm.coeff(&[0]), rat(-1, 2));
        assert_eq!(lm.coeff(&[1]), rat(-1, 12));
    }

    #[test]
    fn exp_factor() {
        // G = 1 (monomial z^0): phi = e^{alpha t}, coefficients alpha^j/j!.
        let g = CycRatFn::one(1);
        let alpha = rat(2, 3);
        let lm = g.laurent_at_exp(&[alpha.clone()], 4).unwrap();
        let mut pow = rat_int(1);
        for j in 0..=4i64 {
            if j > 0 {
                pow = pow * &alpha;
            }
            assert_eq!(
                lm.coeff(&[j]),
                pow.clone() / Rat::from(factorial(j as u32))
            );
        }
    }

    #[test]
    fn involution_flips_parity() {
        // Coefficients of phi for iota_- G relate to those of G by j -> (-1)^j.
        let g = CycRatFn::cyclo_univariate(1, 0, 2, 3);
        let gi = g.involution(&[-1]);
        let a = g.laurent_at_exp(&[Rat::new()], 5).unwrap();
        let b = gi.laurent_at_exp(&[Rat::new()], 5).unwrap();
        for j in -1..=5i64 {
            let sign = if j.rem_euclid(2) == 0 { 1 } else { -1 };
            assert_eq!(b.coeff(&[j]), a.coeff(&[j]) * Rat::from(sign), "j = {j}");
        }
    }

    #[test]
    fn numeric_richardson_cross_check() {
        // phi(t) at small t against the truncated series: remainder
        // shrinks at the expected order. High-precision oracle so the
        // comparison is not limited by f64.
        use rug::Float;
        let g = CycRatFn::cyclo_univariate(1, 0, 1, 2);
        let order = 6i64;
        let lm = g.laurent_at_exp(&[rat(1, 2)], order).unwrap();
        let prec = 192;
        let eval_exact = |t: &Rat| -> Float {
            // e^{alpha t} z^a/(1-z^2) at z = e^t
            let tf = Float::with_val(prec, t);
            let z = tf.clone().exp();
            (tf / 2u32).exp() * &z / (Float::with_val(prec, 1) - z.clone() * &z)
        };
        let err_at = |k: u32| -> Float {
            let t = rat(1, 10i64.pow(k));
            let direct = eval_exact(&t);
            let series = Float::with_val(prec, &lm.eval_rat(&[t]));
            (direct - series).abs()
        };
        let e2 = err_at(2);
        let e3 = err_at(3);
        assert!(e3 < e2);
        // shrinking t by 10 should shrink the remainder by ~10^(order+1)
        let slope = (e2 / e3).log10().to_f64();
        assert!(slope > order as f64 + 0.5, "slope = {slope}");
    }
}
