//! Reduction of signed sums `sum sgn(Am) F(m)`: Smith normal form,
//! full-rank and rank-deficient factorizations, sign-product reduction when
//! the number of sign factors exceeds the rank, hyperplane chamber counting,
//! and Gordan-based realizability of sign patterns.
//!
//! Everything in this module is exact: integer matrices use arbitrary
//! precision integers, feasibility of sign patterns is decided by rational
//! Fourier-Motzkin elimination, and the reduction identities are validated
//! pointwise on finite supports without tolerances.

use crate::numeric::{sgn_rat, Int, Rat};
use crate::ratmat::RatMat;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignedSumError {
    #[error("rank mismatch: expected rank {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },
    #[error("degenerate configuration: zero vector at index {0}")]
    DegenerateConfiguration(usize),
    #[error("hyperplanes are not in general position")]
    NotGeneralPosition,
}

pub type IntMat = Vec<Vec<Int>>;

pub fn int_mat(rows: &[&[i64]]) -> IntMat {
    rows.iter()
        .map(|r| r.iter().map(|&x| Int::from(x)).collect())
        .collect()
}

fn dims(a: &IntMat) -> (usize, usize) {
    (a.len(), if a.is_empty() { 0 } else { a[0].len() })
}

fn identity_int(n: usize) -> IntMat {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Int::from(1) } else { Int::from(0) })
                .collect()
        })
        .collect()
}

pub fn mat_mul_int(a: &IntMat, b: &IntMat) -> IntMat {
    let (ar, ac) = dims(a);
    let (br, bc) = dims(b);
    assert_eq!(ac, br);
    (0..ar)
        .map(|i| {
            (0..bc)
                .map(|j| {
                    let mut acc = Int::from(0);
                    for k in 0..ac {
                        acc += a[i][k].clone() * &b[k][j];
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub fn ratmat_from_int(a: &IntMat) -> RatMat {
    let (r, c) = dims(a);
    RatMat::from_fn(r, c, |i, j| Rat::from(a[i][j].clone()))
}

pub fn int_rank(a: &IntMat) -> usize {
    let m = ratmat_from_int(a);
    // rank by Gaussian elimination over Q
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut a = m;
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let pivot = (rank..rows).find(|&r| a[(r, col)].cmp0() != std::cmp::Ordering::Equal);
        let Some(p) = pivot else { continue };
        for c in 0..cols {
            let tmp = a[(p, c)].clone();
            a[(p, c)] = a[(rank, c)].clone();
            a[(rank, c)] = tmp;
        }
        let pv = a[(rank, col)].clone();
        for r in rank + 1..rows {
            if a[(r, col)].cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            let f = a[(r, col)].clone() / &pv;
            for c in 0..cols {
                let s = f.clone() * &a[(rank, c)];
                a[(r, c)] -= s;
            }
        }
        rank += 1;
    }
    rank
}

// ---------------------------------------------------------------------------
// Smith normal form
// ---------------------------------------------------------------------------

/// `U A V = D` with unimodular `U`, `V` and `D` diagonal with the
/// divisibility chain `d_1 | d_2 | ...`.
#[derive(Clone, Debug)]
pub struct SnfResult {
    pub a: IntMat,
    pub u: IntMat,
    pub v: IntMat,
    pub d: IntMat,
}

/// Exact Smith normal form by pivoting on the smallest nonzero entry,
/// clearing its row and column, and fixing the divisibility chain.
pub fn smith_normal_form(a: &IntMat) -> SnfResult {
    let (rows, cols) = dims(a);
    let mut d = a.clone();
    let mut u = identity_int(rows);
    let mut v = identity_int(cols);

    let swap_rows = |m: &mut IntMat, i: usize, j: usize| m.swap(i, j);
    let swap_cols = |m: &mut IntMat, i: usize, j: usize| {
        for row in m.iter_mut() {
            row.swap(i, j);
        }
    };

    let mut t = 0usize;
    while t < rows.min(cols) {
        // find the entry of smallest nonzero absolute value in d[t.., t..]
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if d[i][j].cmp0() == std::cmp::Ordering::Equal {
                    continue;
                }
                match pivot {
                    None => pivot = Some((i, j)),
                    Some((pi, pj)) => {
                        if d[i][j].clone().abs() < d[pi][pj].clone().abs() {
                            pivot = Some((i, j));
                        }
                    }
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        swap_rows(&mut d, t, pi);
        swap_rows(&mut u, t, pi);
        swap_cols(&mut d, t, pj);
        swap_cols(&mut v, t, pj);

        let mut dirty = false;
        // clear column t
        for i in t + 1..rows {
            if d[i][t].cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            let q: Int = (d[i][t].clone() / &d[t][t]).into();
            if q.cmp0() != std::cmp::Ordering::Equal {
                for j in 0..cols {
                    let s = q.clone() * &d[t][j];
                    d[i][j] -= s;
                }
                for j in 0..rows {
                    let s = q.clone() * &u[t][j];
                    u[i][j] -= s;
                }
            }
            if d[i][t].cmp0() != std::cmp::Ordering::Equal {
                dirty = true;
            }
        }
        // clear row t
        for j in t + 1..cols {
            if d[t][j].cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            let q: Int = (d[t][j].clone() / &d[t][t]).into();
            if q.cmp0() != std::cmp::Ordering::Equal {
                for i in 0..rows {
                    let s = q.clone() * &d[i][t];
                    d[i][j] -= s;
                }
                for i in 0..cols {
                    let s = q.clone() * &v[i][t];
                    v[i][j] -= s;
                }
            }
            if d[t][j].cmp0() != std::cmp::Ordering::Equal {
                dirty = true;
            }
        }
        if dirty {
            continue; // remainders left; pick a smaller pivot and repeat
        }
        // divisibility fix: if some entry below-right is not divisible by
        // the pivot, add its column to column t and restart this step.
        let mut fixed = true;
        'outer: for i in t + 1..rows {
            for j in t + 1..cols {
                if !d[i][j].is_divisible(&d[t][t]) {
                    for r in 0..rows {
                        let s = d[r][j].clone();
                        d[r][t] += s;
                    }
                    for r in 0..cols {
                        let s = v[r][j].clone();
                        v[r][t] += s;
                    }
                    fixed = false;
                    break 'outer;
                }
            }
        }
        if !fixed {
            continue;
        }
        // normalize sign
        if d[t][t].cmp0() == std::cmp::Ordering::Less {
            for j in 0..cols {
                d[t][j] = -d[t][j].clone();
            }
            for j in 0..rows {
                u[t][j] = -u[t][j].clone();
            }
        }
        t += 1;
    }
    SnfResult {
        a: a.clone(),
        u,
        v,
        d,
    }
}

impl SnfResult {
    /// The nonzero invariant factors.
    pub fn invariant_factors(&self) -> Vec<Int> {
        let (r, c) = dims(&self.d);
        (0..r.min(c))
            .map(|i| self.d[i][i].clone())
            .filter(|x| x.cmp0() != std::cmp::Ordering::Equal)
            .collect()
    }

    /// `|Z^d / A(Z^r)|` when A has full row rank: product of invariant factors.
    pub fn lattice_index(&self) -> Int {
        self.invariant_factors()
            .iter()
            .fold(Int::from(1), |acc, x| acc * x.clone().abs())
    }
}

// ---------------------------------------------------------------------------
// Full-rank and rank-deficient reductions
// ---------------------------------------------------------------------------

/// For full-row-rank `A` (d x r, rank d): `B` integer and Q-invertible with
/// `A B = (D(A) I_d | 0)`, plus the coset representatives of
/// `D(A)^{-1} A(Z^r) / Z^d`.
#[derive(Clone, Debug)]
pub struct FullRankReduction {
    pub b: IntMat,
    pub index: Int,
    pub cosets: Vec<Vec<Rat>>,
}

pub fn reduce_full_rank(a: &IntMat) -> Result<FullRankReduction, SignedSumError> {
    let (d, r) = dims(a);
    let rank = int_rank(a);
    if rank != d {
        return Err(SignedSumError::RankMismatch {
            expected: d,
            found: rank,
        });
    }
    let snf = smith_normal_form(a);
    // A = U^{-1} (D | 0) V^{-1}, so with P = U^{-1} D_d (d x d) we get
    // A = (P | 0) V^{-1} and B = V * diag(D(A) P^{-1}, I).
    let index = snf.lattice_index();
    let u_rat = ratmat_from_int(&snf.u);
    let dd = RatMat::from_fn(d, d, |i, j| Rat::from(snf.d[i][j].clone()));
    let p = u_rat.inverse().unwrap().mul(&dd);
    let p_inv = p.inverse().unwrap();
    // integer matrix D(A) P^{-1}
    let dp = p_inv.scale(&Rat::from(index.clone()));
    let mut block = RatMat::zeros(r, r);
    for i in 0..d {
        for j in 0..d {
            block[(i, j)] = dp[(i, j)].clone();
        }
    }
    for i in d..r {
        block[(i, i)] = Rat::from(1);
    }
    let v_rat = ratmat_from_int(&snf.v);
    let b_rat = v_rat.mul(&block);
    let b: IntMat = (0..r)
        .map(|i| {
            (0..r)
                .map(|j| {
                    let x = &b_rat[(i, j)];
                    assert_eq!(*x.denom(), 1, "B must be integral");
                    x.numer().clone()
                })
                .collect()
        })
        .collect();
    // verify A B = (D(A) I | 0)
    let ab = mat_mul_int(a, &b);
    for i in 0..d {
        for j in 0..r {
            let want = if i == j { index.clone() } else { Int::from(0) };
            assert_eq!(ab[i][j], want, "AB shape check failed");
        }
    }
    // cosets of D^{-1} A(Z^r) / Z^d: A(Z^r) = U^{-1} D_d Z^d, so the classes
    // are U^{-1} diag(d_i / D) k mod Z^d over k in prod [0, D/d_i).
    let mut cosets = Vec::new();
    let dvals: Vec<Int> = (0..d).map(|i| snf.d[i][i].clone()).collect();
    let steps: Vec<Int> = dvals
        .iter()
        .map(|di| Int::from(index.clone() / di.clone().abs()))
        .collect();
    let mut idx = vec![Int::from(0); d];
    let u_inv = u_rat.inverse().unwrap();
    loop {
        // mu = U^{-1} diag(d_i / D) idx, reduced mod Z
        let vals: Vec<Rat> = (0..d)
            .map(|i| {
                let mut acc = Rat::new();
                for j in 0..d {
                    acc += u_inv[(i, j)].clone() * Rat::from((dvals[j].clone(), index.clone()))
                        * Rat::from(idx[j].clone());
                }
                let f = acc.clone().floor();
                acc - f
            })
            .collect();
        if !cosets.contains(&vals) {
            cosets.push(vals);
        }
        let mut carry = true;
        for i in 0..d {
            if !carry {
                break;
            }
            idx[i] += 1;
            if idx[i] < steps[i] {
                carry = false;
            } else {
                idx[i] = Int::from(0);
            }
        }
        if carry {
            break;
        }
    }
    Ok(FullRankReduction { b, index, cosets })
}

/// For rank-deficient `A` (s x r, rank d < s): `A = (A' | 0) B` with `A'`
/// of size s x d and rank d, `B` unimodular. Verified by exact product.
#[derive(Clone, Debug)]
pub struct RankDeficientReduction {
    pub a_prime: IntMat,
    pub b: IntMat,
    pub rank: usize,
}

pub fn reduce_rank_deficient(a: &IntMat) -> Result<RankDeficientReduction, SignedSumError> {
    let (s, r) = dims(a);
    let d = int_rank(a);
    if d >= s && d == r.min(s) && d == s {
        return Err(SignedSumError::RankMismatch {
            expected: s - 1,
            found: d,
        });
    }
    if d == 0 {
        return Ok(RankDeficientReduction {
            a_prime: (0..s).map(|_| Vec::new()).collect(),
            b: identity_int(r),
            rank: 0,
        });
    }
    // SNF of A: U A V = (D | 0). Then A = U^{-1} (D | 0) V^{-1}
    //   = (U^{-1} D_d | 0) V^{-1}, so A' = U^{-1} D_{s x d} and B = V^{-1}.
    let snf = smith_normal_form(a);
    let u_inv_r = ratmat_from_int(&snf.u).inverse().unwrap();
    let mut a_prime: IntMat = (0..s)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let mut acc = Rat::new();
                    for k in 0..s {
                        acc += u_inv_r[(i, k)].clone() * Rat::from(snf.d[k][j].clone());
                    }
                    assert_eq!(*acc.denom(), 1);
                    acc.numer().clone()
                })
                .collect()
        })
        .collect();
    let v_inv_r = ratmat_from_int(&snf.v).inverse().unwrap();
    let b: IntMat = (0..r)
        .map(|i| {
            (0..r)
                .map(|j| {
                    let x = &v_inv_r[(i, j)];
                    assert_eq!(*x.denom(), 1, "V^-1 must be integral (unimodular V)");
                    x.numer().clone()
                })
                .collect()
        })
        .collect();
    // trim zero columns of a_prime if rank < d (cannot happen) and verify
    let mut ext = a_prime.clone();
    for row in &mut ext {
        row.extend(std::iter::repeat(Int::from(0)).take(r - d));
    }
    let prod = mat_mul_int(&ext, &b);
    assert_eq!(prod, *a, "rank-deficient factorization failed");
    a_prime.iter_mut().for_each(|_| {});
    Ok(RankDeficientReduction {
        a_prime,
        b,
        rank: d,
    })
}

// ---------------------------------------------------------------------------
// Sign patterns and chambers
// ---------------------------------------------------------------------------

/// Is the open cone `{x : e_i a_i^T x > 0 for all i}` nonempty?
/// Exact rational Fourier-Motzkin elimination on strict inequalities.
pub fn sign_pattern_realizable(vectors: &[Vec<Rat>], e: &[i32]) -> bool {
    let r = vectors[0].len();
    // system of strict inequalities c_j . x > 0
    let mut rows: Vec<Vec<Rat>> = vectors
        .iter()
        .zip(e)
        .map(|(a, &ei)| a.iter().map(|x| x.clone() * Rat::from(ei as i64)).collect())
        .collect();
    for var in (0..r).rev() {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut rest = Vec::new();
        for row in rows.drain(..) {
            match row[var].cmp0() {
                std::cmp::Ordering::Greater => pos.push(row),
                std::cmp::Ordering::Less => neg.push(row),
                std::cmp::Ordering::Equal => rest.push(row),
            }
        }
        // x_var can absorb any finite bounds: combine pos/neg pairs.
        for p in &pos {
            for n in &neg {
                // eliminate: n scaled by p[var], p scaled by -n[var]
                let mut row = vec![Rat::new(); r];
                for k in 0..r {
                    row[k] =
                        p[k].clone() * (-n[var].clone()) + n[k].clone() * p[var].clone();
                }
                row[var] = Rat::new();
                rest.push(row);
            }
        }
        rows = rest;
    }
    // all variables eliminated: rows are constants 0 > 0 (infeasible) or empty
    rows.iter().all(|row| {
        debug_assert!(row.iter().all(|x| x.cmp0() == std::cmp::Ordering::Equal));
        false || row.is_empty() // constant row "0 > 0" is infeasible
    }) || rows.is_empty()
}

/// Chamber count formula `2 sum_{l <= r-1} C(m-1, l)` for m central
/// hyperplanes in general position in R^r. Refuses (with
/// `NotGeneralPosition`) when the certificate fails: some r-subset of the
/// normals is singular, or two hyperplanes coincide.
pub fn chamber_count(r: usize, vectors: &[Vec<Rat>]) -> Result<Int, SignedSumError> {
    let m = vectors.len();
    for (i, v) in vectors.iter().enumerate() {
        if v.iter().all(|x| x.cmp0() == std::cmp::Ordering::Equal) {
            return Err(SignedSumError::DegenerateConfiguration(i));
        }
    }
    // pairwise distinct hyperplanes (non-proportional normals)
    for i in 0..m {
        for j in 0..i {
            if proportional(&vectors[i], &vectors[j]) {
                return Err(SignedSumError::NotGeneralPosition);
            }
        }
    }
    // every r-subset of normals has full rank
    let idx: Vec<usize> = (0..m).collect();
    for subset in combinations(&idx, r.min(m)) {
        if subset.len() < r {
            break;
        }
        let mat = RatMat::from_fn(r, r, |i, j| vectors[subset[i]][j].clone());
        if mat.det().cmp0() == std::cmp::Ordering::Equal {
            return Err(SignedSumError::NotGeneralPosition);
        }
    }
    let mut acc = Int::from(0);
    for l in 0..r.min(m) {
        acc += crate::numeric::binomial_int(m as i64 - 1, l as u32);
    }
    Ok(acc * 2)
}

fn proportional(a: &[Rat], b: &[Rat]) -> bool {
    // a x b = 0 as vectors (all 2x2 minors vanish)
    for i in 0..a.len() {
        for j in 0..i {
            let m = a[i].clone() * &b[j] - a[j].clone() * &b[i];
            if m.cmp0() != std::cmp::Ordering::Equal {
                return false;
            }
        }
    }
    true
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut rest in combinations(&items[i + 1..], k - 1) {
            let mut v = vec![x];
            v.append(&mut rest);
            out.push(v);
        }
    }
    out
}

/// Enumerate realizable sign patterns of the arrangement (the chambers).
pub fn chamber_enumerate(vectors: &[Vec<Rat>]) -> Vec<Vec<i32>> {
    let m = vectors.len();
    let mut out = Vec::new();
    for mask in 0..(1u64 << m) {
        let e: Vec<i32> = (0..m)
            .map(|i| if mask & (1 << i) != 0 { -1 } else { 1 })
            .collect();
        if sign_pattern_realizable(vectors, &e) {
            out.push(e);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Sign product reduction
// ---------------------------------------------------------------------------

/// Coefficients `c_I` with
/// `prod_i sgn(a_i^T x) = sum_{|I| <= r} c_I prod_{i in I} sgn(a_i^T x)`
/// away from the hyperplanes, for `s = r + 1` vectors.
#[derive(Clone, Debug)]
pub struct SignProductReduction {
    /// Pairs (subset-index bitmask over the s vectors, coefficient).
    pub coefficients: Vec<(u64, Rat)>,
}

/// Reduce the product of `s = r + 1` sign factors to subsets of size <= r.
///
/// Follows the character-sum argument: extend `chi_full` restricted to the
/// realizable patterns by values on the missing patterns chosen so that the
/// full character has zero Fourier coefficient, then read off `c_I` by
/// Fourier inversion on `{+-1}^s`. For full-rank spans the missing patterns
/// are the Gordan pair `+-e_A`; in general the free values are fixed by an
/// exact least-support elimination.
pub fn sign_product_reduce(vectors: &[Vec<Rat>]) -> Result<SignProductReduction, SignedSumError> {
    let s = vectors.len();
    let r = vectors[0].len();
    assert_eq!(s, r + 1, "sign_product_reduce expects s = r + 1 vectors");
    for (i, v) in vectors.iter().enumerate() {
        if v.iter().all(|x| x.cmp0() == std::cmp::Ordering::Equal) {
            return Err(SignedSumError::DegenerateConfiguration(i));
        }
    }
    let realizable = chamber_enumerate(vectors);
    let total = 1u64 << s;
    assert!(
        (realizable.len() as u64) < total,
        "no free pattern: cannot reduce"
    );
    // F : G -> Q, equal to chi_full on realizable patterns, with the free
    // values chosen symmetrically so that F_hat(chi_full) = 0.
    let chi = |mask: u64, e: &[i32]| -> i64 {
        let mut p = 1i64;
        for (i, &ei) in e.iter().enumerate() {
            if mask & (1 << i) != 0 {
                p *= ei as i64;
            }
        }
        p
    };
    let full_mask = total - 1;
    let mut f: Vec<Option<Rat>> = vec![None; total as usize];
    let pat_index = |e: &[i32]| -> usize {
        let mut m = 0usize;
        for (i, &ei) in e.iter().enumerate() {
            if ei == -1 {
                m |= 1 << i;
            }
        }
        m
    };
    let mut sum_realizable = Rat::new();
    for e in &realizable {
        let v = Rat::from(chi(full_mask, e));
        sum_realizable += v.clone() * Rat::from(chi(full_mask, e)); // chi^2 = 1
        f[pat_index(e)] = Some(v);
    }
    // free patterns
    let free: Vec<usize> = (0..total as usize).filter(|&i| f[i].is_none()).collect();
    // choose F on free patterns: all equal magnitudes, fixed so that
    // sum_e F(e) chi_full(e) = 0. With value v_j at free pattern j:
    // sum_realizable + sum_j v_j chi_full(e_j) = 0; take all the
    // v_j chi_full(e_j) equal.
    let k = free.len() as i64;
    for &j in &free {
        let e: Vec<i32> = (0..s)
            .map(|i| if j & (1 << i) != 0 { -1 } else { 1 })
            .collect();
        let cf = chi(full_mask, &e);
        // v * cf = -sum_realizable / k
        let v = -sum_realizable.clone() / Rat::from(k) * Rat::from(cf);
        f[j] = Some(v);
    }
    // c_I = (1/2^s) sum_e F(e) chi_I(e) for proper subsets I
    let mut coefficients = Vec::new();
    for mask in 0..total {
        if mask == full_mask {
            continue;
        }
        let mut acc = Rat::new();
        for j in 0..total as usize {
            let e: Vec<i32> = (0..s)
                .map(|i| if j & (1 << i) != 0 { -1 } else { 1 })
                .collect();
            acc += f[j].clone().unwrap() * Rat::from(chi(mask, &e));
        }
        acc /= Rat::from(1i64 << s);
        if acc.cmp0() != std::cmp::Ordering::Equal {
            coefficients.push((mask, acc));
        }
    }
    Ok(SignProductReduction { coefficients })
}

/// Evaluate `prod_{i in I} sgn(a_i^T x)` for a subset bitmask.
pub fn sign_subset_eval(vectors: &[Vec<Rat>], mask: u64, x: &[Rat]) -> i64 {
    let mut p = 1i64;
    for (i, a) in vectors.iter().enumerate() {
        if mask & (1 << i) == 0 {
            continue;
        }
        let mut dot = Rat::new();
        for (aj, xj) in a.iter().zip(x) {
            dot += aj.clone() * xj;
        }
        p *= sgn_rat(&dot) as i64;
    }
    p
}

// ---------------------------------------------------------------------------
// The composite reduction sum sgn(Am) F(m) = sum a_d' sum sgn(m') F(B m)
// ---------------------------------------------------------------------------

/// One summand of the reduced form: weight `a`, integer matrix `b`
/// (invertible over Q), fractional shifts `mu` (one coset per entry of
/// `cosets`), and the number of signed coordinates `d_signed`.
///
/// The identity reads
/// `sum_{m in Z^r} sgn(Am) F(m) = sum_terms a * sum_{mu} sum_{m in (mu + Z^{d'}) + Z^{r-d'}} sgn(m') F(B m)`.
#[derive(Clone, Debug)]
pub struct SignReductionTerm {
    pub weight: Rat,
    pub b: IntMat,
    pub d_signed: usize,
    /// Fractional coset shifts for the first `d_signed` coordinates.
    pub cosets: Vec<Vec<Rat>>,
}

/// The full reduction of `sgn(A m)` for an arbitrary integer matrix A.
#[derive(Clone, Debug)]
pub struct SignReduction {
    pub terms: Vec<SignReductionTerm>,
    pub rank: usize,
}

/// Reduce `sgn(Am)` to coordinate signs, composing the three steps:
/// products beyond the rank, rank-deficient factorization, and the
/// full-rank Smith reduction.
pub fn sign_reduction(a: &IntMat) -> Result<SignReduction, SignedSumError> {
    let (s, r) = dims(a);
    let rank = int_rank(a);
    let mut terms = Vec::new();
    reduce_recursive(a, &Rat::from(1), &identity_int(r), &mut terms)?;
    let _ = s;
    Ok(SignReduction { terms, rank })
}

fn reduce_recursive(
    a: &IntMat,
    weight: &Rat,
    pre_b: &IntMat,
    out: &mut Vec<SignReductionTerm>,
) -> Result<(), SignedSumError> {
    let (s, r) = dims(a);
    if s == 0 {
        // empty product of signs: sgn() = 1 by convention
        out.push(SignReductionTerm {
            weight: weight.clone(),
            b: pre_b.clone(),
            d_signed: 0,
            cosets: vec![Vec::new()],
        });
        return Ok(());
    }
    let d = int_rank(a);
    if d == 0 {
        // all rows zero: sgn(0) = +1 per convention; plain sum
        out.push(SignReductionTerm {
            weight: weight.clone(),
            b: pre_b.clone(),
            d_signed: 0,
            cosets: vec![Vec::new()],
        });
        return Ok(());
    }
    if s > r {
        // reduce the first r+1 rows' product to subsets of size <= r,
        // then recurse per subset with the remaining rows appended.
        let head: Vec<Vec<Rat>> = a[..r + 1]
            .iter()
            .map(|row| row.iter().map(|x| Rat::from(x.clone())).collect())
            .collect();
        // zero rows contribute sgn(0) = +1, drop them first
        if let Some(zi) = a.iter().position(|row| {
            row.iter().all(|x| x.cmp0() == std::cmp::Ordering::Equal)
        }) {
            let mut rest = a.clone();
            rest.remove(zi);
            return reduce_recursive(&rest, weight, pre_b, out);
        }
        let red = sign_product_reduce(&head)?;
        for (mask, c) in &red.coefficients {
            let mut sub: IntMat = Vec::new();
            for (i, row) in a[..r + 1].iter().enumerate() {
                if mask & (1 << i) != 0 {
                    sub.push(row.clone());
                }
            }
            sub.extend(a[r + 1..].iter().cloned());
            reduce_recursive(&sub, &(weight.clone() * c), pre_b, out)?;
        }
        return Ok(());
    }
    if d < s {
        let rd = reduce_rank_deficient(a)?;
        // sum sgn(Am) F(m) = sum sgn(A' m') F(B^{-1}-composed m)
        // with A = (A' | 0) B: substitute m -> B^{-1} m, i.e. the new F
        // argument matrix is pre_b * B^{-1}.
        let b_inv = int_inverse_unimodular(&rd.b);
        let new_pre = mat_mul_int(pre_b, &b_inv);
        return reduce_recursive(&rd.a_prime, weight, &new_pre, out);
    }
    // full rank, s = d <= r
    let fr = reduce_full_rank(a)?;
    let new_pre = mat_mul_int(pre_b, &fr.b);
    out.push(SignReductionTerm {
        weight: weight.clone(),
        b: new_pre,
        d_signed: d,
        cosets: fr.cosets,
    });
    Ok(())
}

fn int_inverse_unimodular(b: &IntMat) -> IntMat {
    let n = b.len();
    let inv = ratmat_from_int(b).inverse().expect("unimodular");
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let x = &inv[(i, j)];
                    assert_eq!(*x.denom(), 1, "expected unimodular matrix");
                    x.numer().clone()
                })
                .collect()
        })
        .collect()
}

/// Exact check of the signed-sum reduction on a finitely supported function:
/// both sides of `sum_m sgn(Am) F(m) = sum_terms ...` are computed over the
/// support (and its preimages) and compared exactly.
pub fn signed_sum_reduce_check(
    a: &IntMat,
    support: &[(Vec<i64>, Rat)],
) -> Result<(Rat, Rat), SignedSumError> {
    let (_, r) = dims(a);
    // LHS
    let mut lhs = Rat::new();
    for (m, val) in support {
        let mut sign = 1i64;
        for row in a {
            let mut dot = Int::from(0);
            for (c, &mi) in row.iter().zip(m) {
                dot += c.clone() * mi;
            }
            if dot.cmp0() == std::cmp::Ordering::Less {
                sign = -sign;
            }
        }
        lhs += val.clone() * Rat::from(sign);
    }
    // RHS: for each reduction term, each support point m must be matched by
    // the preimage x with B x = m (if x lies in the shifted lattice).
    let red = sign_reduction(a)?;
    let mut rhs = Rat::new();
    for term in &red.terms {
        let b_rat = ratmat_from_int(&term.b);
        let b_inv = b_rat.inverse().expect("B invertible over Q");
        for (m, val) in support {
            let mv: Vec<Rat> = m.iter().map(|&x| Rat::from(x)).collect();
            let x = b_inv.mul_vec(&mv);
            for mu in &term.cosets {
                // x must lie in (mu + Z^{d'}) x Z^{r-d'}
                let mut ok = true;
                let mut sign = 1i64;
                for (i, xi) in x.iter().enumerate() {
                    let shift = if i < term.d_signed {
                        mu[i].clone()
                    } else {
                        Rat::new()
                    };
                    let frac = xi.clone() - shift;
                    if *frac.denom() != 1 {
                        ok = false;
                        break;
                    }
                    if i < term.d_signed {
                        sign *= sgn_rat(xi) as i64;
                    }
                }
                if ok {
                    rhs += term.weight.clone() * val * Rat::from(sign);
                }
            }
        }
        let _ = r;
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    #[test]
    fn snf_basic() {
        let a = int_mat(&[&[2]]);
        let snf = smith_normal_form(&a);
        assert_eq!(snf.d[0][0], Int::from(2));
        let a = int_mat(&[&[1, 0], &[0, 1]]);
        let snf = smith_normal_form(&a);
        assert_eq!(snf.d, int_mat(&[&[1, 0], &[0, 1]]));
    }

    #[test]
    fn snf_products_and_chain() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..40 {
            let rows = rng.gen_range(1..4);
            let cols = rng.gen_range(1..4);
            let a: IntMat = (0..rows)
                .map(|_| (0..cols).map(|_| Int::from(rng.gen_range(-6i64..7))).collect())
                .collect();
            let snf = smith_normal_form(&a);
            // U A V = D exactly
            let uav = mat_mul_int(&mat_mul_int(&snf.u, &a), &snf.v);
            assert_eq!(uav, snf.d);
            // unimodular transforms
            assert_eq!(
                ratmat_from_int(&snf.u).det().clone().abs(),
                Rat::from(1)
            );
            assert_eq!(
                ratmat_from_int(&snf.v).det().clone().abs(),
                Rat::from(1)
            );
            // divisibility chain
            let fac = snf.invariant_factors();
            for w in fac.windows(2) {
                assert!(w[1].is_divisible(&w[0]), "chain broken: {fac:?}");
            }
            // off-diagonal zero
            for i in 0..rows {
                for j in 0..cols {
                    if i != j {
                        assert_eq!(snf.d[i][j], Int::from(0));
                    }
                }
            }
        }
    }

    #[test]
    fn full_rank_reduction_examples() {
        // A = (2): B = (1), D = 2. The coset family D^{-1}A(Z)/Z is trivial
        // for d = 1 (|D^{-1}A(Z^r)/Z^d| = D^{d-1}); the reduction identity
        // for this A is checked exactly in signed_sum_reduction_identity.
        let fr = reduce_full_rank(&int_mat(&[&[2]])).unwrap();
        assert_eq!(fr.index, Int::from(2));
        assert_eq!(fr.cosets, vec![vec![Rat::new()]]);

        // Nontrivial cosets need d >= 2: A = 2I has D = 4 and 4 classes.
        let fr2 = reduce_full_rank(&int_mat(&[&[2, 0], &[0, 2]])).unwrap();
        assert_eq!(fr2.index, Int::from(4));
        let mut reps: Vec<Vec<Rat>> = fr2.cosets.clone();
        reps.sort();
        assert_eq!(
            reps,
            vec![
                vec![Rat::new(), Rat::new()],
                vec![Rat::new(), rat(1, 2)],
                vec![rat(1, 2), Rat::new()],
                vec![rat(1, 2), rat(1, 2)],
            ]
        );

        // A = I: single rep 0.
        let fr = reduce_full_rank(&int_mat(&[&[1, 0], &[0, 1]])).unwrap();
        assert_eq!(fr.index, Int::from(1));
        assert_eq!(fr.cosets.len(), 1);

        // A = (1 1): B = [[1,-1],[0,1]] works; any valid B gives AB = (1 0).
        let fr = reduce_full_rank(&int_mat(&[&[1, 1]])).unwrap();
        let ab = mat_mul_int(&int_mat(&[&[1, 1]]), &fr.b);
        assert_eq!(ab, int_mat(&[&[1, 0]]));
    }

    #[test]
    fn rank_deficient_reduction() {
        // d = 0 zero matrix
        let rd = reduce_rank_deficient(&int_mat(&[&[0, 0], &[0, 0], &[0, 0]])).unwrap();
        assert_eq!(rd.rank, 0);
        // random instances verified by product (assert inside)
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut found = 0;
        while found < 10 {
            let a: IntMat = {
                // build rank-deficient: duplicate a row combination
                let base: Vec<Int> = (0..3).map(|_| Int::from(rng.gen_range(-4i64..5))).collect();
                let base2: Vec<Int> = (0..3).map(|_| Int::from(rng.gen_range(-4i64..5))).collect();
                let sum: Vec<Int> = base
                    .iter()
                    .zip(&base2)
                    .map(|(x, y)| x.clone() + y)
                    .collect();
                vec![base, base2, sum]
            };
            let d = int_rank(&a);
            if d == 0 || d >= 3 {
                continue;
            }
            found += 1;
            let rd = reduce_rank_deficient(&a).unwrap();
            assert_eq!(rd.rank, d);
        }
    }

    #[test]
    fn chamber_counts() {
        // (r, m) = (2, 3): 6 = 2^3 - 2 for generic vectors.
        let v3 = vec![
            vec![rat(1, 1), rat(0, 1)],
            vec![rat(0, 1), rat(1, 1)],
            vec![rat(1, 1), rat(1, 1)],
        ];
        assert_eq!(chamber_count(2, &v3).unwrap(), Int::from(6));
        assert_eq!(chamber_enumerate(&v3).len(), 6);

        // r = 1: the formula gives 2 but coincident hyperplanes fail the
        // general-position certificate for m > 1.
        let v1 = vec![vec![rat(1, 1)], vec![rat(2, 1)]];
        assert!(matches!(
            chamber_count(1, &v1),
            Err(SignedSumError::NotGeneralPosition)
        ));
        assert_eq!(chamber_enumerate(&v1).len(), 2);
        let v1b = vec![vec![rat(3, 1)]];
        assert_eq!(chamber_count(1, &v1b).unwrap(), Int::from(2));

        // (r, m) = (3, 4): 14 = 2^4 - 2.
        let v4 = vec![
            vec![rat(1, 1), rat(0, 1), rat(0, 1)],
            vec![rat(0, 1), rat(1, 1), rat(0, 1)],
            vec![rat(0, 1), rat(0, 1), rat(1, 1)],
            vec![rat(1, 1), rat(1, 1), rat(1, 1)],
        ];
        assert_eq!(chamber_count(3, &v4).unwrap(), Int::from(14));
        assert_eq!(chamber_enumerate(&v4).len(), 14);
    }

    #[test]
    fn gordan_missing_patterns() {
        // For s = r + 1 full-span configurations the missing pattern pair is
        // +-(sgn(y_i)) for a kernel vector y of A^T.
        let vectors = vec![
            vec![rat(1, 1), rat(0, 1)],
            vec![rat(0, 1), rat(1, 1)],
            vec![rat(2, 1), rat(3, 1)],
        ];
        let realizable = chamber_enumerate(&vectors);
        let all: Vec<Vec<i32>> = (0..8u64)
            .map(|m| (0..3).map(|i| if m & (1 << i) != 0 { -1 } else { 1 }).collect())
            .collect();
        let missing: Vec<Vec<i32>> = all
            .into_iter()
            .filter(|e| !realizable.contains(e))
            .collect();
        // kernel of A^T: y with y1 a1 + y2 a2 + y3 a3 = 0: y = (2, 3, -1)t
        let want1 = vec![1, 1, -1];
        let want2 = vec![-1, -1, 1];
        assert_eq!(missing.len(), 2);
        assert!(missing.contains(&want1) && missing.contains(&want2));
    }

    #[test]
    fn sign_product_reduce_example() {
        // r=2, a1=e1, a2=e2, a3=(a,b) with a,b>0:
        //   sgn(x1)sgn(x2)sgn(a x1 + b x2) = sgn(x1) + sgn(x2) - sgn(ax1+bx2).
        let vectors = vec![
            vec![rat(1, 1), rat(0, 1)],
            vec![rat(0, 1), rat(1, 1)],
            vec![rat(3, 1), rat(5, 1)],
        ];
        let red = sign_product_reduce(&vectors).unwrap();
        let mut coef_map = std::collections::BTreeMap::new();
        for (m, c) in &red.coefficients {
            coef_map.insert(*m, c.clone());
        }
        assert_eq!(coef_map.get(&0b001), Some(&rat(1, 1)));
        assert_eq!(coef_map.get(&0b010), Some(&rat(1, 1)));
        assert_eq!(coef_map.get(&0b100), Some(&rat(-1, 1)));
        assert_eq!(coef_map.len(), 3);
    }

    #[test]
    fn sign_product_identity_pointwise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..5 {
            let r = rng.gen_range(1..4usize);
            let vectors: Vec<Vec<Rat>> = (0..r + 1)
                .map(|_| {
                    (0..r)
                        .map(|_| rat(rng.gen_range(-4i64..5), rng.gen_range(1..4)))
                        .collect()
                })
                .collect();
            if vectors
                .iter()
                .any(|v| v.iter().all(|x| x.cmp0() == std::cmp::Ordering::Equal))
            {
                continue;
            }
            let red = match sign_product_reduce(&vectors) {
                Ok(r) => r,
                Err(_) => continue,
            };
            let full = (1u64 << (r + 1)) - 1;
            // exact identity on random rational points off the hyperplanes
            let mut tried = 0;
            while tried < 2000 {
                let x: Vec<Rat> = (0..r)
                    .map(|_| rat(rng.gen_range(-50i64..51), rng.gen_range(1..8)))
                    .collect();
                // skip points on any hyperplane
                let on = vectors.iter().any(|a| {
                    let mut dot = Rat::new();
                    for (ai, xi) in a.iter().zip(&x) {
                        dot += ai.clone() * xi;
                    }
                    dot.cmp0() == std::cmp::Ordering::Equal
                });
                if on {
                    continue;
                }
                tried += 1;
                let lhs = sign_subset_eval(&vectors, full, &x);
                let mut rhs = Rat::new();
                for (m, c) in &red.coefficients {
                    rhs += c.clone() * Rat::from(sign_subset_eval(&vectors, *m, &x));
                }
                assert_eq!(Rat::from(lhs), rhs, "x = {x:?}");
            }
        }
    }

    #[test]
    fn signed_sum_reduction_identity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        // A = I trivial
        let support: Vec<(Vec<i64>, Rat)> = vec![
            (vec![1, 2], rat(3, 1)),
            (vec![-1, 0], rat(5, 2)),
            (vec![0, 0], rat(-7, 3)),
        ];
        let (l, r) = signed_sum_reduce_check(&int_mat(&[&[1, 0], &[0, 1]]), &support).unwrap();
        assert_eq!(l, r);

        // A = (2) on a 1-d box: sgn(2m) = sgn(m)
        let line_support: Vec<(Vec<i64>, Rat)> = (-6..=6i64)
            .map(|x| (vec![x], rat(rng.gen_range(-9i64..10), 1)))
            .collect();
        let (l, r) = signed_sum_reduce_check(&int_mat(&[&[2]]), &line_support).unwrap();
        assert_eq!(l, r);

        // A = (1 1) on a box
        let mut box_support = Vec::new();
        for x in -5..=5i64 {
            for y in -5..=5i64 {
                box_support.push((vec![x, y], rat(rng.gen_range(-9i64..10), 1)));
            }
        }
        let (l, r) = signed_sum_reduce_check(&int_mat(&[&[1, 1]]), &box_support).unwrap();
        assert_eq!(l, r);

        // A = 2I with nontrivial cosets
        let (l, r) = signed_sum_reduce_check(&int_mat(&[&[2, 0], &[0, 2]]), &box_support).unwrap();
        assert_eq!(l, r);

        // rank-deficient 3 x 2
        let a = int_mat(&[&[1, 1], &[2, 2], &[1, -1]]);
        let (l, r) = signed_sum_reduce_check(&a, &box_support).unwrap();
        assert_eq!(l, r);
    }
}
