//! WRT invariants, GPPV q-series, twisted sums, the grouped false-theta
//! representation, and the radial limit verification harness.

pub mod lattice;

use crate::numeric::{rat_int, BigComplex, Ctx, Int, Rat, RatModZ};
use crate::plumbing::{
    cocycle_classes, reduced_matrix, ChainKind, CocycleClass, LinkingData, PlumbingGraph,
    SpinCClass,
};
use crate::quasipoly::CycRatFn;
use crate::ratmat::RatMat;
use lattice::enumerate_ellipsoid;
use rayon::prelude::*;
use rug::Float;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InvariantError {
    #[error("level must be at least 2, got {0}")]
    LevelTooSmall(u32),
    #[error("linking matrix is not negative definite")]
    NotNegativeDefinite,
    #[error("cutoff too small: no series terms survive")]
    CutoffTooSmall,
    #[error("no vertices of degree >= 3")]
    EmptyVeeSet,
    #[error("series truncation dominates the requested tolerance (tail bound {0})")]
    TruncationDominates(f64),
    #[error(transparent)]
    Plumbing(#[from] crate::plumbing::PlumbingError),
    #[error(transparent)]
    QuasiPoly(#[from] crate::quasipoly::QpError),
}

// ---------------------------------------------------------------------------
// F coefficients
// ---------------------------------------------------------------------------

/// The vertex factor `F_v(z) = (z - z^{-1})^{2 - deg}` as a cyclotomic
/// rational function of one variable.
pub fn vertex_factor(deg: usize) -> CycRatFn {
    if deg <= 2 {
        // Laurent polynomial (z - 1/z)^{2-deg}
        let n = 2 - deg;
        let mut acc = CycRatFn::zero(1);
        for i in 0..=n {
            let c = crate::numeric::binomial_int(n as i64, i as u32);
            let sign = if (n - i) % 2 == 1 { -1 } else { 1 };
            let e = 2 * i as i64 - n as i64;
            acc = acc.add(&CycRatFn::monomial(&[e]).scale(&Rat::from(c * sign)));
        }
        acc
    } else {
        // (z - 1/z)^{-n} = (-1)^n z^n/(1-z^2)^n, n = deg - 2
        let n = (deg - 2) as u32;
        let sign = if n % 2 == 1 { -1 } else { 1 };
        CycRatFn::cyclo_univariate_mult(1, 0, n as i64, 2, n).scale(&rat_int(sign))
    }
}

/// Closed form for `F_{v,l}`, the principal-value integral
/// `PV (1/2pi) int F_v(z) z^{l} dz/z`, i.e. the tilde-coefficient of `F_v`
/// at `-l`. Satisfies `F_{v,-l} = (-1)^{deg} F_{v,l}`, so products over a
/// graph (total degree even) are symmetric under `l -> -l`.
pub fn f_coeff(deg: usize, l: i64) -> Rat {
    match deg {
        0 => match l {
            0 => rat_int(-2),
            2 | -2 => rat_int(1),
            _ => Rat::new(),
        },
        1 => {
            if l == 1 || l == -1 {
                Rat::from(-l)
            } else {
                Rat::new()
            }
        }
        2 => {
            if l == 0 {
                rat_int(1)
            } else {
                Rat::new()
            }
        }
        d => {
            let la = l.abs();
            let base = d as i64 - 2;
            if la < base || (la - base) % 2 != 0 {
                return Rat::new();
            }
            let m = ((la - base) / 2) as u32;
            let sgn_pow = if l < 0 && d % 2 == 1 { -1 } else { 1 };
            Rat::from(crate::numeric::binomial_int(
                m as i64 + d as i64 - 3,
                (d - 3) as u32,
            )) * Rat::from((sgn_pow, 2))
        }
    }
}

// ---------------------------------------------------------------------------
// q-expansion series
// ---------------------------------------------------------------------------

/// A sparse truncated series in `q` with rational exponents.
#[derive(Clone, Debug)]
pub struct QExpSeries {
    /// Base exponent.
    pub delta: Rat,
    /// Offset (>= 0) to coefficient. All exponents below `delta + cutoff`
    /// are complete (the enumeration certificate).
    pub terms: BTreeMap<Rat, SeriesCoef>,
    pub cutoff: Rat,
}

#[derive(Clone, Debug)]
pub enum SeriesCoef {
    Exact(Rat),
    Num(BigComplex),
}

impl SeriesCoef {
    pub fn to_cx(&self, ctx: &Ctx) -> BigComplex {
        match self {
            SeriesCoef::Exact(r) => ctx.complex_from_rat(r),
            SeriesCoef::Num(z) => z.clone(),
        }
    }

    pub fn as_exact(&self) -> Option<&Rat> {
        match self {
            SeriesCoef::Exact(r) => Some(r),
            SeriesCoef::Num(_) => None,
        }
    }
}

impl QExpSeries {
    fn add_exact(&mut self, offset: Rat, c: Rat) {
        if c.cmp0() == std::cmp::Ordering::Equal {
            return;
        }
        match self.terms.entry(offset) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(SeriesCoef::Exact(c));
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let remove = match e.get_mut() {
                    SeriesCoef::Exact(r) => {
                        *r += c;
                        r.cmp0() == std::cmp::Ordering::Equal
                    }
                    SeriesCoef::Num(_) => unreachable!("mixed coefficient modes"),
                };
                if remove {
                    e.remove();
                }
            }
        }
    }

    fn add_num(&mut self, offset: Rat, c: BigComplex, ctx: &Ctx) {
        match self.terms.entry(offset) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(SeriesCoef::Num(c));
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let cur = e.get().to_cx(ctx);
                *e.get_mut() = SeriesCoef::Num(cur + c);
            }
        }
    }

    /// Evaluate at `tau` in the upper half plane: `sum c q^{delta + offset}`.
    pub fn eval(&self, tau: &BigComplex, ctx: &Ctx) -> BigComplex {
        let mut acc = ctx.complex_zero();
        for (off, c) in &self.terms {
            let e = self.delta.clone() + off;
            acc += c.to_cx(ctx) * ctx.q_pow_rat(tau, &e);
        }
        acc
    }

    /// Crude geometric bound on the dropped tail at `tau`: largest retained
    /// coefficient magnitude times `|q|^{delta+cutoff} / (1 - |q|^{1/den})`,
    /// with `den` the lcm of exponent denominators.
    pub fn tail_bound(&self, tau: &BigComplex, ctx: &Ctx) -> Float {
        let mut den = Int::from(1);
        for off in self.terms.keys() {
            den = den.lcm(off.denom());
        }
        den = den.lcm(self.delta.denom());
        let mut max_c = Float::new(ctx.prec());
        for c in self.terms.values() {
            let a = match c {
                SeriesCoef::Exact(r) => ctx.float_from_rat(r).abs(),
                SeriesCoef::Num(z) => z.abs(),
            };
            if a > max_c {
                max_c = a;
            }
        }
        // |q|^x = exp(-2 pi Im(tau) x)
        let two_pi_im = ctx.pi() * 2u32 * tau.im().clone();
        let cut = self.delta.clone() + &self.cutoff;
        let q_cut = (-two_pi_im.clone() * ctx.float_from_rat(&cut)).exp();
        let gap = Float::with_val(ctx.prec(), 1)
            - (-two_pi_im / Float::with_val(ctx.prec(), &den)).exp();
        max_c * q_cut / gap
    }

    /// Number of stored terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// JSON export: `{ "delta": "p/q", "cutoff": "...", "terms": [[exp, coef], ...] }`.
    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(off, c)| match c {
                SeriesCoef::Exact(r) => serde_json::json!([
                    off.to_string(),
                    r.numer().to_string(),
                    r.denom().to_string()
                ]),
                SeriesCoef::Num(z) => serde_json::json!([
                    off.to_string(),
                    z.re().to_f64(),
                    z.im().to_f64()
                ]),
            })
            .collect();
        serde_json::json!({
            "delta": self.delta.to_string(),
            "cutoff": self.cutoff.to_string(),
            "terms": terms,
        })
    }

    /// Plain-text aligned table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# delta = {}\n", self.delta));
        out.push_str(&format!("# exponent offsets complete below {}\n", self.cutoff));
        for (off, c) in &self.terms {
            let e = self.delta.clone() + off;
            match c {
                SeriesCoef::Exact(r) => out.push_str(&format!("{:>12}  {}\n", e.to_string(), r)),
                SeriesCoef::Num(z) => {
                    out.push_str(&format!("{:>12}  {}\n", e.to_string(), z.to_decimal_string(20)))
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// WRT invariants
// ---------------------------------------------------------------------------

/// A WRT invariant value at one level.
#[derive(Clone, Debug)]
pub struct WrtValue {
    pub k: u32,
    pub value: BigComplex,
    pub precision: u32,
}

/// The SU(2) WRT invariant of the plumbed manifold, normalized so that
/// `Z_k(S^3) = 1`, evaluated by contracting the sum over
/// `mu in (Z \ kZ)^V / 2kZ^V` along the tree (messages of length 2k per
/// vertex), which is exact up to floating rounding.
pub fn wrt(graph: &PlumbingGraph, k: u32, ctx: &Ctx) -> Result<WrtValue, InvariantError> {
    if k < 2 {
        return Err(InvariantError::LevelTooSmall(k));
    }
    let ld = crate::plumbing::linking(graph)?;
    let sum = wrt_sum_tree(&ld, k, ctx);
    let value = wrt_prefactor(&ld, k, ctx) * sum;
    Ok(WrtValue {
        k,
        value,
        precision: ctx.prec(),
    })
}

fn wrt_prefactor(ld: &LinkingData, k: u32, ctx: &Ctx) -> BigComplex {
    let n = ld.ids.len() as i64;
    let k64 = k as i64;
    // zeta_8^{-sgn(W)} zeta_{4k}^{-sum (w_v + 3)} / (2 sqrt(2k)^{|V|} (zeta_2k - zeta_2k^{-1}))
    let sig = ld.signature;
    let mut pre = ctx.root_of_unity_i64(-sig, 8);
    let wsum: i64 = ld
        .ids
        .iter()
        .map(|&id| ld.graph.weight(id) + 3)
        .sum();
    pre = pre * ctx.root_of_unity_i64(-wsum, 4 * k64);
    let sqrt2k = ctx.float(2.0 * k as f64).sqrt();
    let mut denom_f = Float::with_val(ctx.prec(), 2);
    for _ in 0..n {
        denom_f *= &sqrt2k;
    }
    let zeta = ctx.root_of_unity_i64(1, 2 * k64) - ctx.root_of_unity_i64(-1, 2 * k64);
    pre.div_float(&denom_f) * zeta.recip()
}

/// Per-vertex value tables: `val_v(mu) = zeta_{4k}^{w_v mu^2} F_v(zeta_{2k}^mu)`
/// for `mu in [0, 2k)`, zero at `mu = 0, k`.
fn wrt_vertex_table(ld: &LinkingData, vi: usize, k: u32, ctx: &Ctx) -> Vec<BigComplex> {
    let two_k = 2 * k as i64;
    let id = ld.ids[vi];
    let w = ld.graph.weight(id);
    let deg = ld.degrees[vi] as i64;
    (0..two_k)
        .map(|mu| {
            if mu % k as i64 == 0 {
                return ctx.complex_zero();
            }
            let phase = ctx.root_of_unity_i64((w * mu * mu).rem_euclid(4 * k as i64), 4 * k as i64);
            let z = ctx.root_of_unity_i64(mu, two_k);
            let f = (z.clone() - z.recip()).powi(2 - deg);
            phase * f
        })
        .collect()
}

/// Tree contraction of the full mu-sum (fast path).
fn wrt_sum_tree(ld: &LinkingData, k: u32, ctx: &Ctx) -> BigComplex {
    let n = ld.ids.len();
    let two_k = 2 * k as i64;
    // children lists from an arbitrary root (index 0)
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut order = Vec::new();
    let mut visited = vec![false; n];
    let mut stack = vec![0usize];
    visited[0] = true;
    let nbrs: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            ld.graph
                .neighbors(ld.ids[i])
                .into_iter()
                .map(|id| ld.index_of(id))
                .collect()
        })
        .collect();
    while let Some(v) = stack.pop() {
        order.push(v);
        for &c in &nbrs[v] {
            if !visited[c] {
                visited[c] = true;
                children[v].push(c);
                stack.push(c);
            }
        }
    }
    // zeta_{2k} power table
    let zeta: Vec<BigComplex> = (0..two_k)
        .map(|j| ctx.root_of_unity_i64(j, two_k))
        .collect();
    // postorder messages
    let mut msgs: Vec<Option<Vec<BigComplex>>> = vec![None; n];
    for &v in order.iter().rev() {
        let table = wrt_vertex_table(ld, v, k, ctx);
        // weighted value at each mu: table * prod child messages
        let vals: Vec<BigComplex> = (0..two_k as usize)
            .into_par_iter()
            .map(|mu| {
                let mut acc = table[mu].clone();
                for &c in &children[v] {
                    acc = acc * msgs[c].as_ref().unwrap()[mu].clone();
                }
                acc
            })
            .collect();
        if v == 0 {
            // root: plain sum
            let mut acc = ctx.complex_zero();
            for x in vals {
                acc += x;
            }
            return acc;
        }
        // message to parent: m(j) = sum_mu vals[mu] zeta^{mu j}
        let msg: Vec<BigComplex> = (0..two_k as usize)
            .into_par_iter()
            .map(|j| {
                let mut acc = ctx.complex_zero();
                for (mu, x) in vals.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    let e = (mu as i64 * j as i64).rem_euclid(two_k);
                    acc += x.clone() * zeta[e as usize].clone();
                }
                acc
            })
            .collect();
        msgs[v] = Some(msg);
    }
    unreachable!("root handled in loop")
}

/// Brute-force evaluation of the same finite sum over the full mu-grid.
/// Exponentially slower; used as an independent oracle in tests.
pub fn wrt_naive(graph: &PlumbingGraph, k: u32, ctx: &Ctx) -> Result<WrtValue, InvariantError> {
    if k < 2 {
        return Err(InvariantError::LevelTooSmall(k));
    }
    let ld = crate::plumbing::linking(graph)?;
    let n = ld.ids.len();
    let two_k = 2 * k as i64;
    let four_k = 4 * k as i64;
    let tables: Vec<Vec<BigComplex>> = (0..n)
        .map(|vi| {
            // F_v(zeta^mu) only; the full quadratic phase is assembled per term
            let id = ld.ids[vi];
            let deg = ld.degrees[vi] as i64;
            let _ = id;
            (0..two_k)
                .map(|mu| {
                    if mu % k as i64 == 0 {
                        return ctx.complex_zero();
                    }
                    let z = ctx.root_of_unity_i64(mu, two_k);
                    (z.clone() - z.recip()).powi(2 - deg)
                })
                .collect()
        })
        .collect();
    let zeta4k: Vec<BigComplex> = (0..four_k)
        .map(|j| ctx.root_of_unity_i64(j, four_k))
        .collect();
    let weights: Vec<i64> = ld.ids.iter().map(|&id| ld.graph.weight(id)).collect();
    let edges: Vec<(usize, usize)> = ld
        .graph
        .edges
        .iter()
        .map(|&(a, b)| (ld.index_of(a), ld.index_of(b)))
        .collect();
    // iterate the grid
    let valid: Vec<i64> = (0..two_k).filter(|&m| m % k as i64 != 0).collect();
    let mut acc = ctx.complex_zero();
    let mut idx = vec![0usize; n];
    loop {
        let mu: Vec<i64> = idx.iter().map(|&i| valid[i]).collect();
        // exponent of zeta_{4k}: sum w mu^2 + 2 sum_{edges} mu_u mu_v
        let mut e: i64 = 0;
        for i in 0..n {
            e = (e + weights[i].rem_euclid(four_k) * ((mu[i] * mu[i]).rem_euclid(four_k)))
                .rem_euclid(four_k);
        }
        for &(u, v) in &edges {
            e = (e + 2 * mu[u] * mu[v]).rem_euclid(four_k);
        }
        let mut term = zeta4k[e as usize].clone();
        for i in 0..n {
            term = term * tables[i][mu[i] as usize].clone();
        }
        acc += term;
        let mut carry = true;
        for i in 0..n {
            if !carry {
                break;
            }
            idx[i] += 1;
            if idx[i] < valid.len() {
                carry = false;
            } else {
                idx[i] = 0;
            }
        }
        if carry {
            break;
        }
    }
    let value = wrt_prefactor(&ld, k, ctx) * acc;
    Ok(WrtValue {
        k,
        value,
        precision: ctx.prec(),
    })
}

// ---------------------------------------------------------------------------
// GPPV series
// ---------------------------------------------------------------------------

/// `Delta = -(3|V| + tr W)/4`.
pub fn gppv_delta(ld: &LinkingData) -> Rat {
    let n = ld.ids.len() as i64;
    let tr: i64 = ld.ids.iter().map(|&id| ld.graph.weight(id)).sum();
    Rat::from((-(3 * n + tr), 4))
}

/// The GPPV invariant for one Spin^c class, with exact rational coefficients:
/// `q^Delta sum_{l in 2W(Z^V) + b, F_l != 0} F_l q^{-l^T W^{-1} l / 4}`
/// through exponent offsets `<= cutoff`.
pub fn gppv_series(
    graph: &PlumbingGraph,
    b: &SpinCClass,
    cutoff: &Rat,
) -> Result<QExpSeries, InvariantError> {
    let ld = crate::plumbing::linking(graph)?;
    if !ld.negative_definite {
        return Err(InvariantError::NotNegativeDefinite);
    }
    if cutoff.cmp0() != std::cmp::Ordering::Greater {
        return Err(InvariantError::CutoffTooSmall);
    }
    let n = ld.ids.len();
    let delta = gppv_delta(&ld);
    // l = b + 2Wz; exponent E(l) = -l^T W^{-1} l / 4 = (z+c)^T (-W) (z+c),
    // c = W^{-1} b / 2.
    let b_rat: Vec<Rat> = b.rep.iter().map(|x| Rat::from(x.clone())).collect();
    let c: Vec<Rat> = ld
        .w_inv
        .mul_vec(&b_rat)
        .into_iter()
        .map(|x| x / Rat::from(2))
        .collect();
    let q_form = ld.w.scale(&rat_int(-1));
    let mut series = QExpSeries {
        delta,
        terms: BTreeMap::new(),
        cutoff: cutoff.clone(),
    };
    let degrees = ld.degrees.clone();
    let points = enumerate_ellipsoid(&q_form, &c, cutoff);
    for (z, e) in points {
        // l = b + 2Wz
        let l: Vec<i64> = (0..n)
            .map(|i| {
                let mut acc = Rat::from(b.rep[i].clone());
                for j in 0..n {
                    acc += ld.w[(i, j)].clone() * Rat::from(2 * z[j]);
                }
                debug_assert_eq!(*acc.denom(), 1);
                acc.numer().to_i64().expect("l fits i64")
            })
            .collect();
        let mut coef = rat_int(1);
        for i in 0..n {
            coef *= f_coeff(degrees[i], l[i]);
            if coef.cmp0() == std::cmp::Ordering::Equal {
                break;
            }
        }
        if coef.cmp0() != std::cmp::Ordering::Equal {
            series.add_exact(e, coef);
        }
    }
    if series.is_empty() {
        return Err(InvariantError::CutoffTooSmall);
    }
    Ok(series)
}

/// Twisted sum over all Spin^c classes with phases `e(alpha^T l)`:
/// `q^Delta sum_{l in delta + 2Z^V} e(alpha^T l) F_l q^{-l^T W^{-1} l/4}`.
pub fn gppv_twisted(
    graph: &PlumbingGraph,
    alpha: &CocycleClass,
    cutoff: &Rat,
    ctx: &Ctx,
) -> Result<QExpSeries, InvariantError> {
    let ld = crate::plumbing::linking(graph)?;
    if !ld.negative_definite {
        return Err(InvariantError::NotNegativeDefinite);
    }
    if cutoff.cmp0() != std::cmp::Ordering::Greater {
        return Err(InvariantError::CutoffTooSmall);
    }
    let n = ld.ids.len();
    let delta = gppv_delta(&ld);
    // l = delta_vec + 2u: E = (u + delta/2)^T (-W^{-1}) (u + delta/2)
    let shift: Vec<Rat> = ld
        .degrees
        .iter()
        .map(|&d| Rat::from((d as i64, 2)))
        .collect();
    let q_form = ld.w_inv.scale(&rat_int(-1));
    let mut series = QExpSeries {
        delta,
        terms: BTreeMap::new(),
        cutoff: cutoff.clone(),
    };
    let points = enumerate_ellipsoid(&q_form, &shift, cutoff);
    for (u, e) in points {
        let l: Vec<i64> = (0..n).map(|i| ld.degrees[i] as i64 + 2 * u[i]).collect();
        let mut coef = rat_int(1);
        for i in 0..n {
            coef *= f_coeff(ld.degrees[i], l[i]);
            if coef.cmp0() == std::cmp::Ordering::Equal {
                break;
            }
        }
        if coef.cmp0() == std::cmp::Ordering::Equal {
            continue;
        }
        // phase e(alpha^T l)
        let mut phase = Rat::new();
        for i in 0..n {
            phase += alpha.rep[i].clone() * Rat::from(l[i]);
        }
        let phase = RatModZ::new(phase);
        if phase.is_zero() {
            series.add_exact(e, coef);
        } else {
            let c = ctx.complex_from_rat(&coef) * ctx.e_modz(&phase);
            series.add_num(e, c, ctx);
        }
    }
    if series.is_empty() {
        return Err(InvariantError::CutoffTooSmall);
    }
    Ok(series)
}

/// The grouped (false theta) representation of the twisted GPPV series:
/// builds the per-vertex factors
/// `F_v^{vee,(alpha)}(z) = F_v(e(alpha_v) z^{P_v}) prod_beta F_{leaf}(e(alpha_leaf) z^{P_v/p_beta})`
/// and sums `coe_tilde[F^vee](n) q^{Delta_vee + Q_vee(n/2P)}` over the
/// integer lattice. Agrees with [`gppv_twisted`] termwise (exactly when all
/// phases vanish).
pub fn gppv_grouped(
    graph: &PlumbingGraph,
    alpha: &CocycleClass,
    cutoff: &Rat,
    ctx: &Ctx,
) -> Result<QExpSeries, InvariantError> {
    let ld = crate::plumbing::linking(graph)?;
    if !ld.negative_definite {
        return Err(InvariantError::NotNegativeDefinite);
    }
    let rm = reduced_matrix(&ld)?;
    let r = rm.vee_ids.len();
    let delta_vee = gppv_delta(&ld) + &rm.delta_shift;

    // Build F^vee as a product of univariate factors, one per Vee vertex.
    let mut f_vee = CycRatFn::one(r);
    let mut phased = false;
    for (vi, &v) in rm.vee_ids.iter().enumerate() {
        let pv = rm.p_lcm[vi].to_u32().expect("P_v fits u32");
        let alpha_v = RatModZ::new(alpha.rep[ld.index_of(v)].clone());
        if !alpha_v.is_zero() {
            phased = true;
        }
        let deg = ld.degrees[ld.index_of(v)];
        let center = embed_univariate(&vertex_factor(deg), r, vi)
            .compose_scale_power(vi, &alpha_v, pv);
        f_vee = f_vee.mul(&center)?;
        for c in rm
            .chains
            .iter()
            .filter(|c| c.origin == v && c.kind == ChainKind::Branch)
        {
            let leaf = c.terminal;
            let alpha_leaf = RatModZ::new(alpha.rep[ld.index_of(leaf)].clone());
            if !alpha_leaf.is_zero() {
                phased = true;
            }
            let p_abs = c.p.numer().clone().abs().to_u32().unwrap();
            let power = pv / p_abs;
            // F_leaf(e(a) z^{P/p}) with p < 0 uses F(x^{-1}) = -F(x) for the
            // degree-1 factor z - 1/z.
            let mut leaf_f = embed_univariate(&vertex_factor(1), r, vi);
            let mut a = alpha_leaf.clone();
            if c.p.cmp0() == std::cmp::Ordering::Less {
                leaf_f = leaf_f.neg();
                a = a.neg();
            }
            let leaf_f = leaf_f.compose_scale_power(vi, &a, power);
            f_vee = f_vee.mul(&leaf_f)?;
        }
    }

    // Q_vee(n/2P) = n^T M n with M = P^{-1}(-(W_vee)^{-1})P^{-1} / 4.
    let w_vee_inv = rm.w_vee.inverse().expect("reduced matrix invertible");
    let m = RatMat::from_fn(r, r, |i, j| {
        -w_vee_inv[(i, j)].clone()
            / (Rat::from(rm.p_lcm[i].clone()) * Rat::from(rm.p_lcm[j].clone()) * Rat::from(4))
    });
    let mut series = QExpSeries {
        delta: delta_vee,
        terms: BTreeMap::new(),
        cutoff: cutoff.clone(),
    };
    let shift = vec![Rat::new(); r];
    let exact_tilde = if phased {
        None
    } else {
        Some(f_vee.coe_tilde()?)
    };
    let points = enumerate_ellipsoid(&m, &shift, cutoff);
    for (nvec, e) in points {
        match &exact_tilde {
            Some(gt) => {
                let c = gt.eval(&nvec);
                series.add_exact(e, c);
            }
            None => {
                let c = f_vee.coe_tilde_point_cx(&nvec, ctx);
                if c.abs() > ctx.eps(24) {
                    series.add_num(e, c, ctx);
                }
            }
        }
    }
    if series.is_empty() {
        return Err(InvariantError::CutoffTooSmall);
    }
    Ok(series)
}

fn embed_univariate(f: &CycRatFn, nvars: usize, var: usize) -> CycRatFn {
    use crate::quasipoly::{CrfFactor, CrfTerm};
    let terms = f
        .terms()
        .iter()
        .map(|t| {
            let mut factors = vec![CrfFactor::one(); nvars];
            factors[var] = t.factors[0].clone();
            CrfTerm {
                coef: t.coef.clone(),
                phase: t.phase.clone(),
                factors,
            }
        })
        .collect();
    CycRatFn::from_terms(nvars, terms)
}

// ---------------------------------------------------------------------------
// Radial limit check
// ---------------------------------------------------------------------------

/// Report of the radial limit verification at one level.
#[derive(Clone, Debug)]
pub struct RadialLimitReport {
    pub k: u32,
    /// `(t, combined series value)` along the ray `tau = 1/k + i t`.
    pub samples: Vec<(f64, BigComplex)>,
    /// Richardson extrapolant in sqrt(t) at t = 0.
    pub extrapolated: BigComplex,
    pub wrt_value: BigComplex,
    pub residual: f64,
    /// Geometric tail bound of the truncated series at the largest |q|.
    pub tail_bound: f64,
}

/// Evaluate the radial limit combination
/// `(2 (zeta_2k - zeta_2k^{-1}) sqrt|det W|)^{-1} sum_alpha e(-k alpha^T W alpha) Zhat^(alpha)(q)`
/// along `tau = 1/k + i t`, extrapolate `t -> 0` by Richardson in sqrt(t),
/// and compare with the WRT invariant.
pub fn radial_limit_check(
    graph: &PlumbingGraph,
    k: u32,
    cutoff: &Rat,
    t_grid: &[f64],
    tol: f64,
    ctx: &Ctx,
) -> Result<RadialLimitReport, InvariantError> {
    let ld = crate::plumbing::linking(graph)?;
    if !ld.negative_definite {
        return Err(InvariantError::NotNegativeDefinite);
    }
    let alphas = cocycle_classes(&ld);
    let mut weighted: Vec<(BigComplex, QExpSeries)> = Vec::new();
    for a in &alphas {
        let series = gppv_twisted(graph, a, cutoff, ctx)?;
        // e(-k alpha^T W alpha)
        let av = &a.rep;
        let wa = ld.w.mul_vec(av);
        let mut q = Rat::new();
        for (x, y) in av.iter().zip(&wa) {
            q += x.clone() * y;
        }
        let phase = RatModZ::new(-Rat::from(k) * q);
        weighted.push((ctx.e_modz(&phase), series));
    }
    let sqrt_det = ctx
        .float_from_rat(&ld.det.clone().abs())
        .sqrt();
    let zeta = ctx.root_of_unity_i64(1, 2 * k as i64) - ctx.root_of_unity_i64(-1, 2 * k as i64);
    let norm = (zeta.mul_float(&(sqrt_det * 2u32))).recip();

    let mut samples = Vec::new();
    let mut tail_worst: f64 = 0.0;
    for &t in t_grid {
        let tau = BigComplex::new(
            ctx.float(1.0) / ctx.float(k as f64),
            ctx.float(t),
        );
        let mut acc = ctx.complex_zero();
        for (w, s) in &weighted {
            acc += w.clone() * s.eval(&tau, ctx);
            let tb = s.tail_bound(&tau, ctx).to_f64();
            if tb > tail_worst {
                tail_worst = tb;
            }
        }
        samples.push((t, norm.clone() * acc));
    }
    if tail_worst > tol {
        return Err(InvariantError::TruncationDominates(tail_worst));
    }
    let extrapolated = richardson_sqrt(&samples, ctx);
    let wrt_value = wrt(graph, k, ctx)?.value;
    let residual = (extrapolated.clone() - wrt_value.clone()).abs_f64();
    Ok(RadialLimitReport {
        k,
        samples,
        extrapolated,
        wrt_value,
        residual,
        tail_bound: tail_worst,
    })
}

/// Fit `f(t) = c0 + c1 sqrt(t) + ... + cm sqrt(t)^m` through the samples and
/// return `c0` (solving the Vandermonde system in the working precision).
fn richardson_sqrt(samples: &[(f64, BigComplex)], ctx: &Ctx) -> BigComplex {
    let m = samples.len();
    // Vandermonde in x = sqrt(t)
    let mut a: Vec<Vec<BigComplex>> = Vec::with_capacity(m);
    let mut rhs: Vec<BigComplex> = Vec::with_capacity(m);
    for (t, v) in samples {
        let x = ctx.float(*t).sqrt();
        let mut row = Vec::with_capacity(m);
        let mut p = ctx.complex_one();
        for _ in 0..m {
            row.push(p.clone());
            p = p.mul_float(&x);
        }
        a.push(row);
        rhs.push(v.clone());
    }
    // Gaussian elimination with partial (magnitude) pivoting
    let n = m;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| {
                a[i][col]
                    .abs()
                    .partial_cmp(&a[j][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        a.swap(col, piv);
        rhs.swap(col, piv);
        let inv = a[col][col].clone().recip();
        for r in col + 1..n {
            let f = a[r][col].clone() * inv.clone();
            for c in col..n {
                let s = f.clone() * a[col][c].clone();
                a[r][c] -= s;
            }
            let s = f * rhs[col].clone();
            rhs[r] -= s;
        }
    }
    let mut sol = vec![ctx.complex_zero(); n];
    for r in (0..n).rev() {
        let mut acc = rhs[r].clone();
        for c in r + 1..n {
            acc -= a[r][c].clone() * sol[c].clone();
        }
        sol[r] = acc * a[r][r].clone().recip();
    }
    sol[0].clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    #[test]
    fn f_coeff_closed_form_examples() {
        assert_eq!(f_coeff(1, 1), rat_int(-1));
        assert_eq!(f_coeff(2, 0), rat_int(1));
        assert_eq!(f_coeff(3, 1), rat(1, 2)); // m = 0 case
        assert_eq!(f_coeff(3, 2), Rat::new()); // parity
        assert_eq!(f_coeff(0, 0), rat_int(-2));
    }

    #[test]
    fn f_coeff_matches_coe_tilde() {
        // F_{v,l} extracts the coefficient of z^{-l}, so it equals the
        // tilde-coefficient of F_v evaluated at -l.
        for deg in 0..=6usize {
            let f = vertex_factor(deg);
            let ft = f.coe_tilde().unwrap();
            for l in -9..=9i64 {
                assert_eq!(ft.eval(&[-l]), f_coeff(deg, l), "deg = {deg}, l = {l}");
            }
        }
    }

    #[test]
    fn f_symmetry() {
        // Per vertex: F_{v,-l} = (-1)^deg F_{v,l}; over any graph the product
        // F_l is symmetric because the degree sum is even.
        for deg in 0..=6usize {
            for l in -9..=9i64 {
                let sign = if deg % 2 == 1 { -1 } else { 1 };
                assert_eq!(
                    f_coeff(deg, -l),
                    f_coeff(deg, l) * Rat::from(sign),
                    "deg = {deg}"
                );
            }
        }
        // product symmetry on a concrete graph (E8 degrees: 1,1,1,2,2,2,2,3... )
        let degs = [1usize, 2, 3, 4, 1, 1, 2, 1];
        for l0 in -3..=3i64 {
            for l1 in -3..=3i64 {
                let l = [l0, l1, l0 + l1, l0 - l1, l1, l0, 2 * l0, l1 + 1];
                let prod = |sgn: i64| -> Rat {
                    let mut p = rat_int(1);
                    for (d, li) in degs.iter().zip(&l) {
                        p *= f_coeff(*d, sgn * li);
                    }
                    p
                };
                assert_eq!(prod(1), prod(-1));
            }
        }
    }

    #[test]
    fn wrt_s3_is_one() {
        let ctx = Ctx::new(128);
        let g = PlumbingGraph::single(-1);
        for k in 3..=8 {
            let v = wrt(&g, k, &ctx).unwrap();
            let err = v.value.sub_f64(1.0, 0.0).abs_f64();
            assert!(err < 1e-30, "k = {k}, err = {err}");
        }
    }

    #[test]
    fn wrt_orientation_conjugates() {
        // Orientation reversal conjugates the mu-sum termwise. The printed
        // prefactor is not orientation-covariant (the zeta_{4k}^{-(w+3)} and
        // zeta_{2k} - zeta_{2k}^{-1} factors pick up the framing phase), so
        // the sharp relation for a single vertex w = +/-1 is
        //   Z_k(+1) = -zeta_{4k}^{-6} conj(Z_k(-1)).
        let ctx = Ctx::new(128);
        for k in [3i64, 4, 5, 7] {
            let plus = wrt(&PlumbingGraph::single(1), k as u32, &ctx)
                .unwrap()
                .value;
            let minus = wrt(&PlumbingGraph::single(-1), k as u32, &ctx)
                .unwrap()
                .value;
            let ratio = -ctx.root_of_unity_i64(-6, 4 * k);
            assert!(
                (plus - ratio * minus.conj()).abs_f64() < 1e-30,
                "k = {k}"
            );
        }
    }

    #[test]
    fn wrt_tree_matches_naive_small() {
        let ctx = Ctx::new(128);
        let g = PlumbingGraph::star(-2, &[vec![-3], vec![-2], vec![-4, -1]]);
        for k in [2u32, 3, 5] {
            let fast = wrt(&g, k, &ctx).unwrap().value;
            let slow = wrt_naive(&g, k, &ctx).unwrap().value;
            assert!(
                (fast.clone() - slow).abs_f64() < 1e-28,
                "k = {k}: {fast}"
            );
        }
    }

    #[test]
    fn gppv_single_vertex() {
        let g = PlumbingGraph::single(-1);
        let ld = crate::plumbing::linking(&g).unwrap();
        assert_eq!(gppv_delta(&ld), rat(-1, 2));
        let b = crate::plumbing::spin_c_classes(&ld).into_iter().next().unwrap();
        let s = gppv_series(&g, &b, &rat(10, 1)).unwrap();
        // l runs over even integers; F has support {0, +-2} for degree 0:
        // offsets E = l^2/4 at l = 0 (coef -2) and l = +-2 (coef 1 each).
        assert_eq!(s.terms.len(), 2);
        assert_eq!(s.terms.get(&Rat::new()).unwrap().as_exact(), Some(&rat_int(-2)));
        assert_eq!(s.terms.get(&rat_int(1)).unwrap().as_exact(), Some(&rat_int(2)));
    }

    #[test]
    fn gppv_coefficients_are_half_integers() {
        let g = PlumbingGraph::e8();
        let ld = crate::plumbing::linking(&g).unwrap();
        let b = crate::plumbing::spin_c_classes(&ld).into_iter().next().unwrap();
        let s = gppv_series(&g, &b, &rat(12, 1)).unwrap();
        assert!(!s.is_empty());
        for c in s.terms.values() {
            let r = c.as_exact().unwrap();
            let doubled = r.clone() * Rat::from(2);
            assert_eq!(*doubled.denom(), 1, "coefficient not in (1/2)Z: {r}");
        }
    }

    #[test]
    fn twisted_with_zero_alpha_is_sum_over_spin_c() {
        let ctx = Ctx::new(128);
        let g = PlumbingGraph::single(-3);
        let ld = crate::plumbing::linking(&g).unwrap();
        let cutoff = rat(8, 1);
        let zero = CocycleClass::zero(1);
        let tw = gppv_twisted(&g, &zero, &cutoff, &ctx).unwrap();
        // sum the per-class series
        let mut total: BTreeMap<Rat, Rat> = BTreeMap::new();
        for b in crate::plumbing::spin_c_classes(&ld) {
            match gppv_series(&g, &b, &cutoff) {
                Ok(s) => {
                    for (e, c) in &s.terms {
                        *total.entry(e.clone()).or_default() += c.as_exact().unwrap().clone();
                    }
                }
                Err(InvariantError::CutoffTooSmall) => {}
                Err(e) => panic!("{e}"),
            }
        }
        total.retain(|_, c| c.cmp0() != std::cmp::Ordering::Equal);
        let tw_exact: BTreeMap<Rat, Rat> = tw
            .terms
            .iter()
            .map(|(e, c)| (e.clone(), c.as_exact().unwrap().clone()))
            .collect();
        assert_eq!(tw_exact, total);
    }
}
