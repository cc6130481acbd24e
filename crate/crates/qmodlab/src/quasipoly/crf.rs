//! Cyclotomic rational functions in the product basis
//! `z^a` and `z^a / (1 - e(rho) z^N)^m`.

use crate::numeric::{binomial_rat, rat_int, BigComplex, Ctx, Rat, RatModZ};
use crate::quasipoly::qp::{QpAtom, QpTerm, QuasiPoly, Weight};
use crate::quasipoly::QpError;

/// A univariate factor of a product term.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CrfFactor {
    /// `z^a`.
    Monomial { a: i64 },
    /// `z^a / (1 - e(phase) z^n)^mult`, `n >= 1`, `mult >= 1`.
    Cyclo {
        a: i64,
        n: u32,
        mult: u32,
        phase: RatModZ,
    },
}

impl CrfFactor {
    pub fn one() -> Self {
        CrfFactor::Monomial { a: 0 }
    }

    fn is_phased(&self) -> bool {
        matches!(self, CrfFactor::Cyclo { phase, .. } if !phase.is_zero())
    }

    /// Pole locations of this factor at `z = e(xi)`, as a family of rational
    /// cosets `(-phase + Z)/n`, with multiplicity `mult`. Monomials have none.
    pub fn pole_coset(&self) -> Option<(Rat, Rat, u32)> {
        match self {
            CrfFactor::Monomial { .. } => None,
            CrfFactor::Cyclo { n, mult, phase, .. } => {
                // e(phase + n xi) = 1  <=>  xi in (-phase + Z)/n
                let base = -phase.value().clone() / Rat::from(*n);
                let step = Rat::from((1, *n as i64));
                Some((base, step, *mult))
            }
        }
    }
}

/// A term: `coef * e(phase) * prod_i factor_i(z_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrfTerm {
    pub coef: Rat,
    pub phase: RatModZ,
    pub factors: Vec<CrfFactor>,
}

/// A cyclotomic rational function in `nvars` variables.
#[derive(Clone, Debug)]
pub struct CycRatFn {
    nvars: usize,
    terms: Vec<CrfTerm>,
}

impl CycRatFn {
    pub fn zero(nvars: usize) -> Self {
        CycRatFn {
            nvars,
            terms: Vec::new(),
        }
    }

    pub fn one(nvars: usize) -> Self {
        CycRatFn::monomial(&vec![0; nvars])
    }

    /// `z^a` as a function of `a.len()` variables.
    pub fn monomial(a: &[i64]) -> Self {
        CycRatFn {
            nvars: a.len(),
            terms: vec![CrfTerm {
                coef: rat_int(1),
                phase: RatModZ::zero(),
                factors: a.iter().map(|&ai| CrfFactor::Monomial { a: ai }).collect(),
            }],
        }
    }

    /// `z_var^a / (1 - z_var^n)` in an `nvars`-variate function.
    pub fn cyclo_univariate(nvars: usize, var: usize, a: i64, n: u32) -> Self {
        CycRatFn::cyclo_univariate_mult(nvars, var, a, n, 1)
    }

    pub fn cyclo_univariate_mult(nvars: usize, var: usize, a: i64, n: u32, mult: u32) -> Self {
        assert!(n >= 1 && mult >= 1 && var < nvars);
        let factors: Vec<CrfFactor> = (0..nvars)
            .map(|i| {
                if i == var {
                    CrfFactor::Cyclo {
                        a,
                        n,
                        mult,
                        phase: RatModZ::zero(),
                    }
                } else {
                    CrfFactor::one()
                }
            })
            .collect();
        CycRatFn {
            nvars,
            terms: vec![CrfTerm {
                coef: rat_int(1),
                phase: RatModZ::zero(),
                factors,
            }],
        }
    }

    pub fn from_terms(nvars: usize, terms: Vec<CrfTerm>) -> Self {
        for t in &terms {
            assert_eq!(t.factors.len(), nvars);
        }
        CycRatFn { nvars, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[CrfTerm] {
        &self.terms
    }

    pub fn is_phased(&self) -> bool {
        self.terms
            .iter()
            .any(|t| !t.phase.is_zero() || t.factors.iter().any(|f| f.is_phased()))
    }

    pub fn require_phase_free(&self) -> Result<(), QpError> {
        if self.is_phased() {
            Err(QpError::PhasedFactor)
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &CycRatFn) -> CycRatFn {
        assert_eq!(self.nvars, other.nvars);
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        CycRatFn {
            nvars: self.nvars,
            terms,
        }
    }

    pub fn scale(&self, s: &Rat) -> CycRatFn {
        CycRatFn {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|t| CrfTerm {
                    coef: t.coef.clone() * s,
                    phase: t.phase.clone(),
                    factors: t.factors.clone(),
                })
                .collect(),
        }
    }

    pub fn neg(&self) -> CycRatFn {
        self.scale(&rat_int(-1))
    }

    pub fn sub(&self, other: &CycRatFn) -> CycRatFn {
        self.add(&other.neg())
    }

    /// Product. In each variable, cyclotomic denominators are merged to a
    /// common period; different symbolic phases on the same variable cannot
    /// be merged and return `UnsupportedProduct`.
    pub fn mul(&self, other: &CycRatFn) -> Result<CycRatFn, QpError> {
        assert_eq!(self.nvars, other.nvars);
        let mut out: Vec<CrfTerm> = Vec::new();
        for t1 in &self.terms {
            for t2 in &other.terms {
                let mut partial = vec![CrfTerm {
                    coef: t1.coef.clone() * &t2.coef,
                    phase: t1.phase.add(&t2.phase),
                    factors: Vec::with_capacity(self.nvars),
                }];
                for i in 0..self.nvars {
                    let options = mul_factor(&t1.factors[i], &t2.factors[i])?;
                    let mut next = Vec::with_capacity(partial.len() * options.len());
                    for p in &partial {
                        for (c, ph, f) in &options {
                            let mut np = p.clone();
                            np.coef *= c;
                            np.phase = np.phase.add(ph);
                            np.factors.push(f.clone());
                            next.push(np);
                        }
                    }
                    partial = next;
                }
                out.extend(partial);
            }
        }
        Ok(CycRatFn {
            nvars: self.nvars,
            terms: out,
        })
    }

    /// The involution `iota_e : z_i -> z_i^{e_i}`.
    pub fn involution(&self, e: &[i32]) -> CycRatFn {
        assert_eq!(e.len(), self.nvars);
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut coef = t.coef.clone();
                let mut phase = t.phase.clone();
                let factors = t
                    .factors
                    .iter()
                    .enumerate()
                    .map(|(i, f)| {
                        if e[i] == 1 {
                            return f.clone();
                        }
                        match f {
                            CrfFactor::Monomial { a } => CrfFactor::Monomial { a: -a },
                            CrfFactor::Cyclo { a, n, mult, phase: rho } => {
                                // z^{-a}/(1 - e(rho) z^{-n})^m
                                //   = (-1)^m e(-m rho) z^{mn - a} / (1 - e(-rho) z^n)^m
                                if mult % 2 == 1 {
                                    coef = -coef.clone();
                                }
                                phase = phase.add(&rho.neg().scale_int(*mult as i64));
                                CrfFactor::Cyclo {
                                    a: *mult as i64 * *n as i64 - a,
                                    n: *n,
                                    mult: *mult,
                                    phase: rho.neg(),
                                }
                            }
                        }
                    })
                    .collect();
                CrfTerm {
                    coef,
                    phase,
                    factors,
                }
            })
            .collect();
        CycRatFn {
            nvars: self.nvars,
            terms,
        }
    }

    /// Substitute `z_var -> e(rho) * z_var^p` (used to group GPPV factors).
    pub fn compose_scale_power(&self, var: usize, rho: &RatModZ, p: u32) -> CycRatFn {
        assert!(p >= 1);
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut phase = t.phase.clone();
                let factors = t
                    .factors
                    .iter()
                    .enumerate()
                    .map(|(i, f)| {
                        if i != var {
                            return f.clone();
                        }
                        match f {
                            CrfFactor::Monomial { a } => {
                                phase = phase.add(&rho.scale_int(*a));
                                CrfFactor::Monomial { a: a * p as i64 }
                            }
                            CrfFactor::Cyclo {
                                a,
                                n,
                                mult,
                                phase: rho0,
                            } => {
                                // z^a e(a rho) / (1 - e(rho0 + n rho) z^{np})^m
                                phase = phase.add(&rho.scale_int(*a));
                                CrfFactor::Cyclo {
                                    a: a * p as i64,
                                    n: n * p,
                                    mult: *mult,
                                    phase: rho0.add(&rho.scale_int(*n as i64)),
                                }
                            }
                        }
                    })
                    .collect();
                CrfTerm {
                    coef: t.coef.clone(),
                    phase,
                    factors: factors,
                }
            })
            .collect();
        CycRatFn {
            nvars: self.nvars,
            terms,
        }
    }

    /// Evaluate at a complex point (away from poles).
    pub fn eval_cx(&self, z: &[BigComplex], ctx: &Ctx) -> BigComplex {
        assert_eq!(z.len(), self.nvars);
        let mut acc = ctx.complex_zero();
        for t in &self.terms {
            let mut v = ctx.complex_from_rat(&t.coef) * ctx.e_modz(&t.phase);
            for (i, f) in t.factors.iter().enumerate() {
                match f {
                    CrfFactor::Monomial { a } => v = v * z[i].powi(*a),
                    CrfFactor::Cyclo { a, n, mult, phase } => {
                        let zn = z[i].powi(*n as i64);
                        let den = ctx.complex_one() - ctx.e_modz(phase) * zn;
                        v = v * z[i].powi(*a) * den.powi(-(*mult as i64));
                    }
                }
            }
            acc += v;
        }
        acc
    }

    /// Exact evaluation at a rational point (phase-free only).
    pub fn eval_rat(&self, z: &[Rat]) -> Result<Rat, QpError> {
        self.require_phase_free()?;
        let mut acc = Rat::new();
        for t in &self.terms {
            let mut v = t.coef.clone();
            for (i, f) in t.factors.iter().enumerate() {
                match f {
                    CrfFactor::Monomial { a } => v *= pow_rat(&z[i], *a),
                    CrfFactor::Cyclo { a, n, mult, .. } => {
                        let zn = pow_rat(&z[i], *n as i64);
                        let den = rat_int(1) - zn;
                        assert!(den.cmp0() != std::cmp::Ordering::Equal, "pole");
                        v *= pow_rat(&z[i], *a);
                        for _ in 0..*mult {
                            v /= den.clone();
                        }
                    }
                }
            }
            acc += v;
        }
        Ok(acc)
    }

    // ----- coefficient maps -----

    /// Laurent coefficient of `z^m` in `|z_i| < 1` (the map `coe`), exact.
    pub fn coe_point(&self, m: &[i64]) -> Result<Rat, QpError> {
        self.require_phase_free()?;
        let mut acc = Rat::new();
        for t in &self.terms {
            acc += coe_term_point(t, m);
        }
        Ok(acc)
    }

    /// `coe` with phases realized as complex numbers.
    pub fn coe_point_cx(&self, m: &[i64], ctx: &Ctx) -> BigComplex {
        let mut acc = ctx.complex_zero();
        for t in &self.terms {
            acc += coe_term_point_cx(t, m, ctx);
        }
        acc
    }

    /// `coe_tilde` at a point, with phases realized numerically:
    /// `2^{-r} sum_e coe[iota_e G](e m)`.
    pub fn coe_tilde_point_cx(&self, m: &[i64], ctx: &Ctx) -> BigComplex {
        let r = self.nvars;
        let mut acc = ctx.complex_zero();
        for mask in 0..(1usize << r) {
            let e: Vec<i32> = (0..r)
                .map(|i| if mask & (1 << i) != 0 { -1 } else { 1 })
                .collect();
            let ge = self.involution(&e);
            let em: Vec<i64> = (0..r).map(|i| e[i] as i64 * m[i]).collect();
            acc += ge.coe_point_cx(&em, ctx);
        }
        acc.mul_2exp(-(r as i32))
    }

    /// The full coefficient quasi-polynomial of `coe` (partial kind).
    pub fn coe(&self) -> Result<QuasiPoly, QpError> {
        self.require_phase_free()?;
        let mut out = QuasiPoly::zero(self.nvars);
        for t in &self.terms {
            out = out.add(&coe_term(t, CoeKind::Partial));
        }
        Ok(out)
    }

    /// `coe_bar`: the full quasi-polynomial.
    pub fn coe_bar(&self) -> Result<QuasiPoly, QpError> {
        self.require_phase_free()?;
        let mut out = QuasiPoly::zero(self.nvars);
        for t in &self.terms {
            out = out.add(&coe_term(t, CoeKind::Full));
        }
        Ok(out)
    }

    /// `coe_tilde`: the false quasi-polynomial.
    pub fn coe_tilde(&self) -> Result<QuasiPoly, QpError> {
        self.require_phase_free()?;
        let mut out = QuasiPoly::zero(self.nvars);
        for t in &self.terms {
            out = out.add(&coe_term(t, CoeKind::False));
        }
        Ok(out)
    }

    /// Inverse of `coe` on partial quasi-polynomials.
    pub fn coe_inverse(g: &QuasiPoly) -> Result<CycRatFn, QpError> {
        invert(g, Weight::Half, 1)
    }

    /// Inverse of `coe_tilde` on false quasi-polynomials.
    pub fn coe_tilde_inverse(g: &QuasiPoly) -> Result<CycRatFn, QpError> {
        invert(g, Weight::Sgn, 2)
    }

    /// Structural canonicalization: merge terms with identical factor tuples.
    /// (Equality of phase-free functions is decided through `coe`.)
    pub fn merge_terms(&mut self) {
        self.terms
            .sort_by(|a, b| (&a.factors, &a.phase).cmp(&(&b.factors, &b.phase)));
        let mut merged: Vec<CrfTerm> = Vec::new();
        for t in self.terms.drain(..) {
            match merged.last_mut() {
                Some(last) if last.factors == t.factors && last.phase == t.phase => {
                    last.coef += t.coef
                }
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coef.cmp0() != std::cmp::Ordering::Equal);
        self.terms = merged;
    }

    /// Decidable equality for phase-free functions, via canonical coefficients.
    pub fn eq_as_function(&self, other: &CycRatFn) -> Result<bool, QpError> {
        Ok(self.coe()? == other.coe()?)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum CoeKind {
    Partial,
    Full,
    False,
}

/// Coefficient of one product term at a lattice point, exact.
fn coe_term_point(t: &CrfTerm, m: &[i64]) -> Rat {
    let mut acc = t.coef.clone();
    for (i, f) in t.factors.iter().enumerate() {
        if acc.cmp0() == std::cmp::Ordering::Equal {
            return acc;
        }
        match f {
            CrfFactor::Monomial { a } => {
                if m[i] != *a {
                    return Rat::new();
                }
            }
            CrfFactor::Cyclo { a, n, mult, .. } => {
                let d = m[i] - a;
                if d < 0 || d % (*n as i64) != 0 {
                    return Rat::new();
                }
                let k = d / (*n as i64);
                acc *= binomial_rat(&Rat::from(k + *mult as i64 - 1), mult - 1);
            }
        }
    }
    acc
}

fn coe_term_point_cx(t: &CrfTerm, m: &[i64], ctx: &Ctx) -> BigComplex {
    let mut rat_part = t.coef.clone();
    let mut phase = t.phase.clone();
    for (i, f) in t.factors.iter().enumerate() {
        match f {
            CrfFactor::Monomial { a } => {
                if m[i] != *a {
                    return ctx.complex_zero();
                }
            }
            CrfFactor::Cyclo { a, n, mult, phase: rho } => {
                let d = m[i] - a;
                if d < 0 || d % (*n as i64) != 0 {
                    return ctx.complex_zero();
                }
                let k = d / (*n as i64);
                rat_part *= binomial_rat(&Rat::from(k + *mult as i64 - 1), mult - 1);
                phase = phase.add(&rho.scale_int(k));
            }
        }
    }
    ctx.complex_from_rat(&rat_part) * ctx.e_modz(&phase)
}

/// The three coefficient maps on one product term, via the per-variable
/// closed forms. `coe` of `z^a/(1-z^N)^m` is `[x in a+NZ, x>=a] C(k+m-1, m-1)`
/// with `k = (x-a)/N`; the bar/tilde variants average with the involution,
/// which on this basis collapses to full-line (resp. signed) atoms because
/// the binomial factor vanishes on the gap `k in {-m+1, ..., -1}`.
fn coe_term(t: &CrfTerm, kind: CoeKind) -> QuasiPoly {
    let nvars = t.factors.len();
    // Per variable, a list of (coef, atoms...) alternatives to expand.
    let mut per_var: Vec<Vec<(Rat, QpAtom)>> = Vec::with_capacity(nvars);
    for f in &t.factors {
        match f {
            CrfFactor::Monomial { a } => {
                let opts = match kind {
                    // coe_bar of a Laurent monomial is 0.
                    CoeKind::Full => vec![],
                    // coe and coe_tilde both give the singleton.
                    CoeKind::Partial | CoeKind::False => {
                        vec![(rat_int(1), QpAtom::Singleton { v: *a })]
                    }
                };
                if opts.is_empty() {
                    return QuasiPoly::zero(nvars);
                }
                per_var.push(opts);
            }
            CrfFactor::Cyclo { a, n, mult, .. } => {
                per_var.push(cyclo_coe_atoms(*a, *n, *mult, kind));
            }
        }
    }
    let mut terms: Vec<QpTerm> = Vec::new();
    let mut idx = vec![0usize; nvars];
    loop {
        let mut coef = t.coef.clone();
        let mut atoms = Vec::with_capacity(nvars);
        for i in 0..nvars {
            let (c, a) = &per_var[i][idx[i]];
            coef *= c;
            atoms.push(a.clone());
        }
        terms.push(QpTerm { coef, atoms });
        let mut carry = true;
        for i in 0..nvars {
            if !carry {
                break;
            }
            idx[i] += 1;
            if idx[i] < per_var[i].len() {
                carry = false;
            } else {
                idx[i] = 0;
            }
        }
        if carry {
            break;
        }
    }
    QuasiPoly::from_terms(nvars, terms)
}

/// Atom expansion of the coefficient function of `z^a/(1-z^N)^m` in one
/// variable. The polynomial part is `C(k+m-1, m-1)`, `k = (x-a)/N`, expanded
/// in powers of `x`.
fn cyclo_coe_atoms(a: i64, n: u32, mult: u32, kind: CoeKind) -> Vec<(Rat, QpAtom)> {
    // C((x-a)/N + m - 1, m - 1) as a polynomial in x: coefficients poly[d].
    let m = mult;
    let poly = binom_poly_in_x(a, n, m);
    let c_res = a.rem_euclid(n as i64) as u32;
    let mut out: Vec<(Rat, QpAtom)> = Vec::new();
    let weight = match kind {
        CoeKind::Partial => Weight::Half,
        CoeKind::Full => Weight::Plain,
        CoeKind::False => Weight::Sgn,
    };
    let scale = match kind {
        CoeKind::Partial => rat_int(1),
        CoeKind::Full | CoeKind::False => crate::numeric::rat(1, 2),
    };
    for (d, cd) in poly.iter().enumerate() {
        if cd.cmp0() == std::cmp::Ordering::Equal {
            continue;
        }
        out.push((
            cd.clone() * &scale,
            QpAtom::Eventual {
                c: c_res,
                period: n,
                degree: d as u32,
                weight,
            },
        ));
    }
    // Base-point corrections. The atom's support starts at the smallest
    // nonnegative representative c_res (Half) or runs over the whole line
    // with sign flip at 0 (Sgn); the true function starts at `a` (Half:
    // support {a, a+N, ...}) or flips sign at `a` (Sgn: sgn(x - a) with the
    // gap `k in (-m, 0)` annihilated by the binomial polynomial).
    match kind {
        CoeKind::Partial => {
            // [x >= a, x = a mod N] p(x) vs [x >= 0, x = c mod N] p(x):
            // correct on the finite symmetric difference.
            let lo = a.min(c_res as i64);
            let hi = a.max(c_res as i64);
            let mut x = lo;
            while x < hi {
                if (x - a).rem_euclid(n as i64) == 0 {
                    let val = eval_poly(&poly, x);
                    if val.cmp0() != std::cmp::Ordering::Equal {
                        let sign = if a > c_res as i64 { -1 } else { 1 };
                        out.push((val * Rat::from(sign), QpAtom::Singleton { v: x }));
                    }
                }
                x += n as i64;
            }
        }
        CoeKind::Full => {}
        CoeKind::False => {
            // (1/2) sgn(x - a) p vs (1/2) sgn(x) p on the progression:
            // they differ at progression points between 0 and a where p does
            // not vanish. (The binomial polynomial vanishes on the gap
            // k in {-(m-1), ..., -1}, so the two-sided pieces really glue to
            // sgn(x - a) there.) Walk the progression itself.
            let top = a.max(0);
            let mut x = if a >= 0 { c_res as i64 } else { a };
            while x < top {
                let val = eval_poly(&poly, x);
                if val.cmp0() != std::cmp::Ordering::Equal {
                    // sgn-at-a semantics: +1 iff x >= a.
                    let want: i64 = if x >= a { 1 } else { -1 };
                    let have: i64 = if x >= 0 { 1 } else { -1 };
                    if want != have {
                        out.push((
                            val * crate::numeric::rat(want - have, 2),
                            QpAtom::Singleton { v: x },
                        ));
                    }
                }
                x += n as i64;
            }
        }
    }
    out
}

/// Coefficients (in powers of x) of `C((x-a)/N + m-1, m-1)`.
fn binom_poly_in_x(a: i64, n: u32, m: u32) -> Vec<Rat> {
    // product_{j=1}^{m-1} ((x - a)/N + j) / (m-1)!
    let mut poly = vec![rat_int(1)]; // constant 1
    for j in 1..m {
        // multiply by ((x - a)/N + j) = x/N + (j - a/N)
        let lin0 = Rat::from(j) - Rat::from((a, n as i64));
        let lin1 = Rat::from((1, n as i64));
        let mut next = vec![Rat::new(); poly.len() + 1];
        for (d, c) in poly.iter().enumerate() {
            next[d] += c.clone() * &lin0;
            next[d + 1] += c.clone() * &lin1;
        }
        poly = next;
    }
    let fact = Rat::from(crate::numeric::factorial(m - 1));
    for c in &mut poly {
        *c /= fact.clone();
    }
    poly
}

fn eval_poly(poly: &[Rat], x: i64) -> Rat {
    let mut acc = Rat::new();
    for c in poly.iter().rev() {
        acc = acc * Rat::from(x) + c;
    }
    acc
}

fn pow_rat(z: &Rat, e: i64) -> Rat {
    use rug::ops::Pow;
    if e >= 0 {
        z.clone().pow(e as u32)
    } else {
        assert!(z.cmp0() != std::cmp::Ordering::Equal);
        z.clone().pow(e as i32)
    }
}

/// Shared inverse for `coe` (Half atoms, factor 1) and `coe_tilde`
/// (Sgn atoms, factor 2): atoms map to `(z d/dz)^d [z^c/(1-z^L)]` expanded in
/// the pure basis, singletons map to monomials.
fn invert(g: &QuasiPoly, expect: Weight, factor: i64) -> Result<CycRatFn, QpError> {
    g.expect_weight(
        expect,
        match expect {
            Weight::Half => "partial",
            Weight::Sgn => "false",
            Weight::Plain => "full",
        },
    )?;
    let nvars = g.nvars();
    let mut out: Vec<CrfTerm> = Vec::new();
    for t in g.terms() {
        let per_var: Vec<Vec<(Rat, CrfFactor)>> = t
            .atoms
            .iter()
            .map(|a| match a {
                QpAtom::Singleton { v } => vec![(rat_int(1), CrfFactor::Monomial { a: *v })],
                QpAtom::Eventual {
                    c,
                    period,
                    degree,
                    weight: _,
                } => {
                    let mut opts = zd_pow_cyclo(*degree, *c as i64, *period);
                    for o in &mut opts {
                        o.0 *= Rat::from(factor);
                    }
                    opts
                }
            })
            .collect();
        let mut idx = vec![0usize; nvars];
        loop {
            let mut coef = t.coef.clone();
            let mut factors = Vec::with_capacity(nvars);
            for i in 0..nvars {
                let (cf, f) = &per_var[i][idx[i]];
                coef *= cf;
                factors.push(f.clone());
            }
            out.push(CrfTerm {
                coef,
                phase: RatModZ::zero(),
                factors,
            });
            let mut carry = true;
            for i in 0..nvars {
                if !carry {
                    break;
                }
                idx[i] += 1;
                if idx[i] < per_var[i].len() {
                    carry = false;
                } else {
                    idx[i] = 0;
                }
            }
            if carry {
                break;
            }
        }
    }
    let mut f = CycRatFn::from_terms(nvars, out);
    f.merge_terms();
    Ok(f)
}

/// `(z d/dz)^d [z^a/(1-z^N)]` expanded into pure factors, via
/// `(z d/dz) [z^a/(1-z^N)^m] = a z^a/(1-z^N)^m + m N z^{a+N}/(1-z^N)^{m+1}`.
fn zd_pow_cyclo(d: u32, a: i64, n: u32) -> Vec<(Rat, CrfFactor)> {
    let mut acc: Vec<(Rat, CrfFactor)> = vec![(
        rat_int(1),
        CrfFactor::Cyclo {
            a,
            n,
            mult: 1,
            phase: RatModZ::zero(),
        },
    )];
    for _ in 0..d {
        let mut next: Vec<(Rat, CrfFactor)> = Vec::new();
        for (c, f) in &acc {
            if let CrfFactor::Cyclo { a, n, mult, phase } = f {
                next.push((
                    c.clone() * Rat::from(*a),
                    CrfFactor::Cyclo {
                        a: *a,
                        n: *n,
                        mult: *mult,
                        phase: phase.clone(),
                    },
                ));
                next.push((
                    c.clone() * Rat::from(*mult as i64 * *n as i64),
                    CrfFactor::Cyclo {
                        a: a + *n as i64,
                        n: *n,
                        mult: mult + 1,
                        phase: phase.clone(),
                    },
                ));
            } else {
                unreachable!()
            }
        }
        // merge duplicates
        next.sort_by(|x, y| x.1.cmp(&y.1));
        let mut merged: Vec<(Rat, CrfFactor)> = Vec::new();
        for (c, f) in next {
            match merged.last_mut() {
                Some((lc, lf)) if *lf == f => *lc += c,
                _ => merged.push((c, f)),
            }
        }
        acc = merged;
    }
    acc
}

/// Product of two univariate factors; may expand into several phased terms.
fn mul_factor(
    f1: &CrfFactor,
    f2: &CrfFactor,
) -> Result<Vec<(Rat, RatModZ, CrfFactor)>, QpError> {
    use CrfFactor::*;
    Ok(match (f1, f2) {
        (Monomial { a: a1 }, Monomial { a: a2 }) => {
            vec![(rat_int(1), RatModZ::zero(), Monomial { a: a1 + a2 })]
        }
        (Monomial { a: am }, Cyclo { a, n, mult, phase })
        | (Cyclo { a, n, mult, phase }, Monomial { a: am }) => vec![(
            rat_int(1),
            RatModZ::zero(),
            Cyclo {
                a: a + am,
                n: *n,
                mult: *mult,
                phase: phase.clone(),
            },
        )],
        (
            Cyclo {
                a: a1,
                n: n1,
                mult: m1,
                phase: p1,
            },
            Cyclo {
                a: a2,
                n: n2,
                mult: m2,
                phase: p2,
            },
        ) => {
            let l = lcm_u32(*n1, *n2);
            // Lift each factor to modulus l:
            // 1/(1 - e(p) z^n)^m = (sum_{j<l/n} e(jp) z^{jn})^m / (1 - e(p l/n) z^l)^m
            let lifted1 = lift_cyclo(*a1, *n1, *m1, p1, l);
            let lifted2 = lift_cyclo(*a2, *n2, *m2, p2, l);
            let ph1 = p1.scale_int((l / n1) as i64);
            let ph2 = p2.scale_int((l / n2) as i64);
            if ph1 != ph2 {
                return Err(QpError::UnsupportedProduct);
            }
            let mut out = Vec::new();
            for (c1, q1, e1) in &lifted1 {
                for (c2, q2, e2) in &lifted2 {
                    out.push((
                        c1.clone() * c2,
                        q1.add(q2),
                        Cyclo {
                            a: e1 + e2,
                            n: l,
                            mult: m1 + m2,
                            phase: ph1.clone(),
                        },
                    ));
                }
            }
            out
        }
    })
}

/// Numerator expansion of `z^a / (1 - e(p) z^n)^m` lifted to modulus `l`:
/// returns `(coef, phase, exponent)` triples such that the factor equals
/// `sum coef e(phase) z^{exponent} / (1 - e(p l/n) z^l)^m`.
fn lift_cyclo(a: i64, n: u32, m: u32, p: &RatModZ, l: u32) -> Vec<(Rat, RatModZ, i64)> {
    let k = l / n;
    // (sum_{j=0}^{k-1} e(jp) z^{jn})^m expanded by iterated multiplication.
    let mut acc: Vec<(Rat, RatModZ, i64)> = vec![(rat_int(1), RatModZ::zero(), 0)];
    for _ in 0..m {
        let mut next: Vec<(Rat, RatModZ, i64)> = Vec::new();
        for (c, q, e) in &acc {
            for j in 0..k as i64 {
                next.push((c.clone(), q.add(&p.scale_int(j)), e + j * n as i64));
            }
        }
        // merge by (phase, exponent)
        next.sort_by(|x, y| (x.2, &x.1).cmp(&(y.2, &y.1)));
        let mut merged: Vec<(Rat, RatModZ, i64)> = Vec::new();
        for (c, q, e) in next {
            match merged.last_mut() {
                Some((lc, lq, le)) if *le == e && *lq == q => *lc += c,
                _ => merged.push((c, q, e)),
            }
        }
        acc = merged;
    }
    for t in &mut acc {
        t.2 += a;
    }
    acc
}

fn lcm_u32(a: u32, b: u32) -> u32 {
    fn gcd(mut a: u32, mut b: u32) -> u32 {
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        a
    }
    a / gcd(a, b) * b
}
