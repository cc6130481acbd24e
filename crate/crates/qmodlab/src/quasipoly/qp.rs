//! Quasi-polynomial values on the integer lattice.

use crate::numeric::{rat_int, Rat};
use crate::quasipoly::QpError;

/// Weight carried by an eventual atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Weight {
    /// Constant weight 1 (full quasi-polynomials).
    Plain,
    /// `[x >= 0]` (partial quasi-polynomials).
    Half,
    /// `sgn(x)` with `sgn(0) = +1` (false quasi-polynomials).
    Sgn,
}

/// A per-variable atom of a quasi-polynomial term.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QpAtom {
    /// `1_{v}(x)`.
    Singleton { v: i64 },
    /// `w(x) * x^degree * 1_{c + period Z}(x)` with `0 <= c < period`.
    Eventual {
        c: u32,
        period: u32,
        degree: u32,
        weight: Weight,
    },
}

impl QpAtom {
    pub fn eval(&self, x: i64) -> Rat {
        match self {
            QpAtom::Singleton { v } => {
                if x == *v {
                    rat_int(1)
                } else {
                    Rat::new()
                }
            }
            QpAtom::Eventual {
                c,
                period,
                degree,
                weight,
            } => {
                if x.rem_euclid(*period as i64) != *c as i64 {
                    return Rat::new();
                }
                let w: i64 = match weight {
                    Weight::Plain => 1,
                    Weight::Half => {
                        if x >= 0 {
                            1
                        } else {
                            0
                        }
                    }
                    Weight::Sgn => {
                        if x >= 0 {
                            1
                        } else {
                            -1
                        }
                    }
                };
                if w == 0 {
                    return Rat::new();
                }
                let mut p = Rat::from(w);
                for _ in 0..*degree {
                    p *= Rat::from(x);
                }
                p
            }
        }
    }

    /// Lift an eventual atom to a larger period (must be a multiple).
    fn lift(&self, new_period: u32) -> Vec<QpAtom> {
        match self {
            QpAtom::Singleton { .. } => vec![self.clone()],
            QpAtom::Eventual {
                c,
                period,
                degree,
                weight,
            } => {
                assert!(new_period % period == 0);
                let k = new_period / period;
                (0..k)
                    .map(|j| QpAtom::Eventual {
                        c: c + j * period,
                        period: new_period,
                        degree: *degree,
                        weight: *weight,
                    })
                    .collect()
            }
        }
    }
}

/// A term: rational coefficient times a product of per-variable atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QpTerm {
    pub coef: Rat,
    pub atoms: Vec<QpAtom>,
}

/// A quasi-polynomial on `Z^r`, stored as a sum of product terms.
#[derive(Clone, Debug)]
pub struct QuasiPoly {
    nvars: usize,
    terms: Vec<QpTerm>,
}

/// Functional equality: the difference canonicalizes (under the common
/// period refinement) to the empty term list.
impl PartialEq for QuasiPoly {
    fn eq(&self, other: &Self) -> bool {
        self.nvars == other.nvars && self.sub(other).is_zero()
    }
}

impl Eq for QuasiPoly {}

impl QuasiPoly {
    pub fn zero(nvars: usize) -> Self {
        QuasiPoly {
            nvars,
            terms: Vec::new(),
        }
    }

    pub fn from_terms(nvars: usize, terms: Vec<QpTerm>) -> Self {
        for t in &terms {
            assert_eq!(t.atoms.len(), nvars);
        }
        let mut q = QuasiPoly { nvars, terms };
        q.canonicalize();
        q
    }

    /// Singleton indicator of the lattice point `v`.
    pub fn singleton(v: &[i64]) -> Self {
        QuasiPoly::from_terms(
            v.len(),
            vec![QpTerm {
                coef: rat_int(1),
                atoms: v.iter().map(|&x| QpAtom::Singleton { v: x }).collect(),
            }],
        )
    }

    /// `w(x) x^deg 1_{c + LZ}(x)` in one variable of an `nvars`-variate poly.
    pub fn atom_univariate(
        nvars: usize,
        var: usize,
        c: i64,
        period: u32,
        degree: u32,
        weight: Weight,
    ) -> Self {
        assert!(period > 0);
        let c = c.rem_euclid(period as i64) as u32;
        let atoms: Vec<QpAtom> = (0..nvars)
            .map(|i| {
                if i == var {
                    QpAtom::Eventual {
                        c,
                        period,
                        degree,
                        weight,
                    }
                } else {
                    QpAtom::Eventual {
                        c: 0,
                        period: 1,
                        degree: 0,
                        weight: Weight::Plain,
                    }
                }
            })
            .collect();
        QuasiPoly::from_terms(nvars, vec![QpTerm { coef: rat_int(1), atoms }])
    }

    /// The constant function 1.
    pub fn one(nvars: usize) -> Self {
        QuasiPoly::from_terms(
            nvars,
            vec![QpTerm {
                coef: rat_int(1),
                atoms: (0..nvars)
                    .map(|_| QpAtom::Eventual {
                        c: 0,
                        period: 1,
                        degree: 0,
                        weight: Weight::Plain,
                    })
                    .collect(),
            }],
        )
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[QpTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[i64]) -> Rat {
        assert_eq!(x.len(), self.nvars);
        let mut acc = Rat::new();
        for t in &self.terms {
            let mut p = t.coef.clone();
            for (i, a) in t.atoms.iter().enumerate() {
                if p.cmp0() == std::cmp::Ordering::Equal {
                    break;
                }
                p *= a.eval(x[i]);
            }
            acc += p;
        }
        acc
    }

    pub fn add(&self, other: &QuasiPoly) -> QuasiPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        QuasiPoly::from_terms(self.nvars, terms)
    }

    pub fn neg(&self) -> QuasiPoly {
        self.scale(&rat_int(-1))
    }

    pub fn sub(&self, other: &QuasiPoly) -> QuasiPoly {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &Rat) -> QuasiPoly {
        let terms = self
            .terms
            .iter()
            .map(|t| QpTerm {
                coef: t.coef.clone() * s,
                atoms: t.atoms.clone(),
            })
            .collect();
        QuasiPoly::from_terms(self.nvars, terms)
    }

    /// Pointwise product. Closed on the atom basis: weights multiply
    /// (`sgn * sgn = 1`, `sgn * [x>=0] = [x>=0]`), congruences intersect,
    /// degrees add.
    pub fn mul(&self, other: &QuasiPoly) -> QuasiPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut terms = Vec::new();
        for t1 in &self.terms {
            for t2 in &other.terms {
                let mut atoms = Vec::with_capacity(self.nvars);
                let mut coef = t1.coef.clone() * &t2.coef;
                let mut dead = false;
                for i in 0..self.nvars {
                    match mul_atoms(&t1.atoms[i], &t2.atoms[i]) {
                        Some((scale, atom)) => {
                            if scale != 1 {
                                coef *= Rat::from(scale);
                            }
                            atoms.push(atom);
                        }
                        None => {
                            dead = true;
                            break;
                        }
                    }
                }
                if !dead {
                    terms.push(QpTerm { coef, atoms });
                }
            }
        }
        QuasiPoly::from_terms(self.nvars, terms)
    }

    /// Restrict to the residue class `x = c mod M` (componentwise), exactly.
    pub fn restrict_to_class(&self, c: &[i64], m: u32) -> QuasiPoly {
        assert_eq!(c.len(), self.nvars);
        let indicator_terms = vec![QpTerm {
            coef: rat_int(1),
            atoms: c
                .iter()
                .map(|&ci| QpAtom::Eventual {
                    c: ci.rem_euclid(m as i64) as u32,
                    period: m,
                    degree: 0,
                    weight: Weight::Plain,
                })
                .collect(),
        }];
        self.mul(&QuasiPoly::from_terms(self.nvars, indicator_terms))
    }

    /// Canonical form: lift per-variable periods to a common lcm, split,
    /// sort, merge, drop zeros.
    fn canonicalize(&mut self) {
        if self.terms.is_empty() {
            return;
        }
        // Per-variable common period.
        let mut lcm = vec![1u64; self.nvars];
        for t in &self.terms {
            for (i, a) in t.atoms.iter().enumerate() {
                if let QpAtom::Eventual { period, .. } = a {
                    lcm[i] = num_lcm(lcm[i], *period as u64);
                }
            }
        }
        let mut expanded: Vec<QpTerm> = Vec::new();
        for t in &self.terms {
            // Expand the product of lifted atom lists.
            let lifted: Vec<Vec<QpAtom>> = t
                .atoms
                .iter()
                .enumerate()
                .map(|(i, a)| a.lift_checked(lcm[i] as u32))
                .collect();
            let mut idx = vec![0usize; self.nvars];
            loop {
                let atoms: Vec<QpAtom> = (0..self.nvars)
                    .map(|i| lifted[i][idx[i]].clone())
                    .collect();
                expanded.push(QpTerm {
                    coef: t.coef.clone(),
                    atoms,
                });
                // advance multi-index
                let mut carry = true;
                for i in 0..self.nvars {
                    if !carry {
                        break;
                    }
                    idx[i] += 1;
                    if idx[i] < lifted[i].len() {
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
        expanded.sort_by(|a, b| a.atoms.cmp(&b.atoms));
        let mut merged: Vec<QpTerm> = Vec::new();
        for t in expanded {
            match merged.last_mut() {
                Some(last) if last.atoms == t.atoms => last.coef += t.coef,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coef.cmp0() != std::cmp::Ordering::Equal);
        self.terms = merged;
    }

    /// Weight census: Some(w) if every eventual atom carries weight `w`.
    pub fn uniform_weight(&self) -> Option<Weight> {
        let mut seen: Option<Weight> = None;
        for t in &self.terms {
            for a in &t.atoms {
                if let QpAtom::Eventual { weight, .. } = a {
                    match seen {
                        None => seen = Some(*weight),
                        Some(w) if w == *weight => {}
                        _ => return None,
                    }
                }
            }
        }
        seen.or(Some(Weight::Plain))
    }

    pub fn expect_weight(&self, w: Weight, what: &str) -> Result<(), QpError> {
        for t in &self.terms {
            for a in &t.atoms {
                if let QpAtom::Eventual { weight, .. } = a {
                    if *weight != w {
                        return Err(QpError::WrongKind {
                            expected: what.to_string(),
                            found: format!("{weight:?}"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Degree map: `max over terms of (sum of eventual degrees - #singletons)`.
    /// Defined on the canonical form; `None` for the zero function.
    pub fn degree(&self) -> Option<i64> {
        self.terms
            .iter()
            .map(|t| {
                let mut d: i64 = 0;
                for a in &t.atoms {
                    match a {
                        QpAtom::Singleton { .. } => d -= 1,
                        QpAtom::Eventual { degree, .. } => d += *degree as i64,
                    }
                }
                d
            })
            .max()
    }

    /// Pure substitution `g(x) -> g(e x)`, rewriting atoms under `x -> -x`
    /// per flipped variable. Defined for any atom mix. This is the paper's
    /// involution on false quasi-polynomials; see [`Self::involution_full`]
    /// and [`Self::involution_partial`] for the other two kinds.
    pub fn reflect(&self, e: &[i32]) -> QuasiPoly {
        assert_eq!(e.len(), self.nvars);
        let mut result: Vec<QpTerm> = Vec::new();
        for t in &self.terms {
            // Each variable expands to a small list of (coef, atom) options.
            let per_var: Vec<Vec<(Rat, QpAtom)>> = t
                .atoms
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    if e[i] == 1 {
                        vec![(rat_int(1), a.clone())]
                    } else {
                        reflect_atom(a)
                    }
                })
                .collect();
            let mut idx = vec![0usize; self.nvars];
            loop {
                let mut coef = t.coef.clone();
                let mut atoms = Vec::with_capacity(self.nvars);
                for i in 0..self.nvars {
                    let (c, a) = &per_var[i][idx[i]];
                    coef *= c;
                    atoms.push(a.clone());
                }
                result.push(QpTerm { coef, atoms });
                let mut carry = true;
                for i in 0..self.nvars {
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
        QuasiPoly::from_terms(self.nvars, result)
    }
}

impl QuasiPoly {
    /// The involution on false quasi-polynomials: `g(x) -> g(e x)`.
    pub fn involution_false(&self, e: &[i32]) -> QuasiPoly {
        self.reflect(e)
    }

    /// The involution on full quasi-polynomials: `g(x) -> (prod e_i) g(e x)`.
    pub fn involution_full(&self, e: &[i32]) -> QuasiPoly {
        let sgn: i64 = e.iter().map(|&x| x as i64).product();
        self.reflect(e).scale(&Rat::from(sgn))
    }

    /// The involution on partial quasi-polynomials (the basis rule
    /// `1_{a+NZ_{>=0}}(x) -> -1_{a+NZ_{<=-1}}(-x)`), implemented by
    /// conjugating the cyclotomic-side involution with `coe`.
    pub fn involution_partial(&self, e: &[i32]) -> Result<QuasiPoly, crate::quasipoly::QpError> {
        let g = crate::quasipoly::CycRatFn::coe_inverse(self)?;
        g.involution(e).coe()
    }
}

impl QpAtom {
    fn lift_checked(&self, new_period: u32) -> Vec<QpAtom> {
        match self {
            QpAtom::Singleton { .. } => vec![self.clone()],
            QpAtom::Eventual { period, .. } => {
                debug_assert!(new_period % period == 0);
                self.lift(new_period)
            }
        }
    }
}

/// Atom product in one variable; `None` if the supports are disjoint.
/// The i32 scale handles the occasional sign from weight algebra (none today,
/// kept for singleton-vs-eventual evaluation which returns a rational).
fn mul_atoms(a: &QpAtom, b: &QpAtom) -> Option<(i64, QpAtom)> {
    match (a, b) {
        (QpAtom::Singleton { v: v1 }, QpAtom::Singleton { v: v2 }) => {
            if v1 == v2 {
                Some((1, a.clone()))
            } else {
                None
            }
        }
        (QpAtom::Singleton { v }, ev @ QpAtom::Eventual { .. })
        | (ev @ QpAtom::Eventual { .. }, QpAtom::Singleton { v }) => {
            let val = ev.eval(*v);
            if val.cmp0() == std::cmp::Ordering::Equal {
                return None;
            }
            // val is integral only when degree > 0; use exactness via i64 when
            // possible, otherwise fall back to keeping the rational factor.
            // Weight/indicator values are +/-1 times v^degree, always integer.
            let vi = val
                .numer()
                .to_i64()
                .expect("atom value exceeds i64 range");
            debug_assert_eq!(*val.denom(), 1);
            Some((vi, QpAtom::Singleton { v: *v }))
        }
        (
            QpAtom::Eventual {
                c: c1,
                period: p1,
                degree: d1,
                weight: w1,
            },
            QpAtom::Eventual {
                c: c2,
                period: p2,
                degree: d2,
                weight: w2,
            },
        ) => {
            let l = num_lcm(*p1 as u64, *p2 as u64) as u32;
            // CRT: find c mod l with c = c1 mod p1, c = c2 mod p2.
            let mut c = None;
            let mut x = *c1 as u64;
            while x < l as u64 {
                if x % *p2 as u64 == *c2 as u64 {
                    c = Some(x as u32);
                    break;
                }
                x += *p1 as u64;
            }
            let c = c?;
            let weight = match (w1, w2) {
                (Weight::Plain, w) | (w, Weight::Plain) => *w,
                (Weight::Half, _) | (_, Weight::Half) => Weight::Half,
                (Weight::Sgn, Weight::Sgn) => Weight::Plain,
            };
            Some((
                1,
                QpAtom::Eventual {
                    c,
                    period: l,
                    degree: d1 + d2,
                    weight,
                },
            ))
        }
    }
}

/// Rewrite an atom under `x -> -x` as a small sum of atoms in `x`.
fn reflect_atom(a: &QpAtom) -> Vec<(Rat, QpAtom)> {
    match a {
        QpAtom::Singleton { v } => vec![(rat_int(1), QpAtom::Singleton { v: -v })],
        QpAtom::Eventual {
            c,
            period,
            degree,
            weight,
        } => {
            let sign = if degree % 2 == 0 { 1i64 } else { -1 };
            let cr = (period - c) % period; // -x = c mod p  <=>  x = -c mod p
            let base = |w: Weight| QpAtom::Eventual {
                c: cr,
                period: *period,
                degree: *degree,
                weight: w,
            };
            let at_zero_allowed = *c == 0;
            match weight {
                // 1 at -x: unchanged support class, sign from x^d.
                Weight::Plain => vec![(rat_int(sign), base(Weight::Plain))],
                // [-x >= 0] = 1 - [x >= 0] + [x = 0]
                Weight::Half => {
                    let mut out = vec![
                        (rat_int(sign), base(Weight::Plain)),
                        (rat_int(-sign), base(Weight::Half)),
                    ];
                    if at_zero_allowed && *degree == 0 {
                        out.push((rat_int(1), QpAtom::Singleton { v: 0 }));
                    }
                    out
                }
                // sgn(-x) = -sgn(x) + 2 [x = 0]
                Weight::Sgn => {
                    let mut out = vec![(rat_int(-sign), base(Weight::Sgn))];
                    if at_zero_allowed && *degree == 0 {
                        out.push((rat_int(2), QpAtom::Singleton { v: 0 }));
                    }
                    out
                }
            }
        }
    }
}

fn num_lcm(a: u64, b: u64) -> u64 {
    fn gcd(mut a: u64, mut b: u64) -> u64 {
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        a
    }
    if a == 0 || b == 0 {
        return a.max(b);
    }
    a / gcd(a, b) * b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    #[test]
    fn eval_and_canonical_merge() {
        // [x >= 0] 1_{1+2Z}(x) written two ways must compare equal.
        let a = QuasiPoly::atom_univariate(1, 0, 1, 2, 0, Weight::Half);
        let b1 = QuasiPoly::atom_univariate(1, 0, 1, 4, 0, Weight::Half);
        let b2 = QuasiPoly::atom_univariate(1, 0, 3, 4, 0, Weight::Half);
        let b = b1.add(&b2);
        assert_eq!(a, b);
        for x in -9..=9 {
            assert_eq!(
                a.eval(&[x]),
                if x >= 0 && x.rem_euclid(2) == 1 {
                    rat(1, 1)
                } else {
                    rat(0, 1)
                }
            );
        }
    }

    #[test]
    fn sgn_times_sgn_is_plain() {
        let s = QuasiPoly::atom_univariate(1, 0, 0, 1, 0, Weight::Sgn);
        let p = s.mul(&s);
        assert_eq!(p, QuasiPoly::one(1));
    }

    #[test]
    fn reflect_sgn_pointwise() {
        let s = QuasiPoly::atom_univariate(1, 0, 0, 1, 1, Weight::Sgn); // sgn(x) x
        let r = s.reflect(&[-1]); // should be sgn(-x)(-x) = sgn-adjusted
        for x in -7..=7 {
            assert_eq!(r.eval(&[x]), s.eval(&[-x]));
        }
        let h = QuasiPoly::atom_univariate(1, 0, 2, 3, 0, Weight::Half);
        let rh = h.reflect(&[-1]);
        for x in -9..=9 {
            assert_eq!(rh.eval(&[x]), h.eval(&[-x]));
        }
    }

    #[test]
    fn degree_examples() {
        // 1_{a+NZ}(x) x^2 has degree 2.
        let g = QuasiPoly::atom_univariate(1, 0, 1, 3, 2, Weight::Plain);
        assert_eq!(g.degree(), Some(2));
        // A singleton indicator in one variable has degree -1.
        let s = QuasiPoly::singleton(&[4]);
        assert_eq!(s.degree(), Some(-1));
    }
}
