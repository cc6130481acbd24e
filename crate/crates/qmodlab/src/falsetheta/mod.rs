//! False theta functions and the quantum-modularity verifiers built on the
//! Poisson summation formula with signature: direct lattice evaluation,
//! contour quadrature over the signed paths `C_+`/`C_-`/`C_eps`, the
//! signature Poisson check, modular-series transformation checks, the
//! explicit rank-two modular identity with every contour term, and the
//! block data `(U_pi, S*_pi, P_pi)` of ordered partitions.

mod contours;
mod modular;

pub use contours::{c_eps_path, c_minus_path, c_plus_path, gaussian_tail_t, signed_pole_integral};
pub use modular::{
    poisson_modular_check, rank2_modular_check, Kernel, PoissonReport, Rank2Report,
};

use crate::numeric::{BigComplex, Ctx, Rat, RatModZ};
use crate::quad::QuadError;
use crate::quasipoly::QuasiPoly;
use crate::ratmat::RatMat;
use rug::Float;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FalseThetaError {
    #[error("Im(tau) must be positive")]
    ImaginaryPartNonpositive,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("rank {0} not supported by this check")]
    UnsupportedRank(usize),
    #[error("unsupported kernel for this operation")]
    UnsupportedKernel,
    #[error("quasi-polynomial weight has singleton atoms outside Q-bar-0")]
    NotPlainQuasiPoly,
    #[error("singular block in partition data")]
    SingularBlock,
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    QuasiPoly(#[from] crate::quasipoly::QpError),
}

/// A false theta function
/// `sum_{m in alpha + Z^r} sgn(A m) g(m - alpha... )`; concretely the
/// evaluator computes `sum_{m in Z^r} w(m) g(m) q^{(m+alpha)^T S (m+alpha)/2}`
/// with `w` the sign factor `sgn(A(m+alpha))` and `g` a quasi-polynomial
/// weight evaluated on the integer lattice.
#[derive(Clone)]
pub struct FalseThetaSpec {
    pub rank: usize,
    /// Positive definite symmetric rational matrix.
    pub s: RatMat,
    /// Sign rows: the factor is `prod_i sgn(row_i . (m + alpha))`.
    /// Empty means no sign factor.
    pub sign_rows: Vec<Vec<Rat>>,
    /// Quasi-polynomial weight evaluated at the integer part `m`.
    pub weight: QuasiPoly,
    /// Rational shift.
    pub alpha: Vec<Rat>,
    /// Optional linear phase `e(beta^T (m + alpha))`.
    pub beta: Option<Vec<Rat>>,
}

impl FalseThetaSpec {
    /// Plain rank-r false theta: `sum sgn(m_1)...sgn(m_r) q^{m^T S m / 2}`
    /// over `m in alpha + Z^r`.
    pub fn plain(s: RatMat, alpha: Vec<Rat>) -> Result<Self, FalseThetaError> {
        if !s.is_positive_definite() {
            return Err(FalseThetaError::NotPositiveDefinite);
        }
        let r = s.nrows();
        let sign_rows = (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| if i == j { Rat::from(1) } else { Rat::new() })
                    .collect()
            })
            .collect();
        Ok(FalseThetaSpec {
            rank: r,
            s,
            sign_rows,
            weight: QuasiPoly::one(r),
            alpha,
            beta: None,
        })
    }

    /// The sign factor at the real point `m + alpha` (sgn(0) = +1).
    fn sign_at(&self, m: &[i64]) -> i64 {
        let mut sgn = 1i64;
        for row in &self.sign_rows {
            let mut dot = Rat::new();
            for ((c, &mi), ai) in row.iter().zip(m).zip(&self.alpha) {
                dot += c.clone() * (Rat::from(mi) + ai);
            }
            sgn *= crate::numeric::sgn_rat(&dot) as i64;
        }
        sgn
    }
}

/// Evaluate the false theta lattice sum at `tau` (Im tau > 0) with a proven
/// Gaussian tail bound at most `tail_tol`.
pub fn false_theta_eval(
    spec: &FalseThetaSpec,
    tau: &BigComplex,
    tail_tol: f64,
    ctx: &Ctx,
) -> Result<BigComplex, FalseThetaError> {
    if !(tau.im().to_f64() > 0.0) {
        return Err(FalseThetaError::ImaginaryPartNonpositive);
    }
    let r = spec.rank;
    // Enumerate (m + alpha)^T S (m + alpha) <= bound where the bound comes
    // from the Gaussian tail: the dropped terms are bounded by
    //   sum_{E > bound} N(E) |q|^{E/ superset...}
    // We use the crude but safe route: grow the bound until the boundary
    // shell contribution is below tail_tol times (1 - |q|^{gap}) and the
    // polynomial weight growth is dominated (weights grow polynomially, |q|^E
    // decays exponentially; we inflate by shell count).
    let im2pi = ctx.pi() * 2u32 * tau.im().clone();
    let qlog = im2pi.to_f64(); // |q|^E = exp(-qlog * E)
    let mut bound = 8.0f64;
    let max_deg = spec
        .weight
        .degree()
        .unwrap_or(0)
        .max(0) as f64;
    loop {
        // terms beyond `bound`: |q|^{bound/2} * poly growth margin
        let margin = (bound.sqrt() + 2.0).powf(max_deg + r as f64 + 1.0) * 8.0;
        let tail = (-qlog * bound / 2.0).exp() * margin / (1.0 - (-qlog).exp()).max(1e-300);
        if tail < tail_tol {
            break;
        }
        bound *= 1.5;
        assert!(bound < 1e9, "tail bound does not close");
    }
    let bound_rat = Rat::from((bound * 2.0).ceil() as i64);
    let points =
        crate::invariants::lattice::enumerate_ellipsoid(&spec.s, &spec.alpha, &bound_rat);
    let mut acc = ctx.complex_zero();
    for (m, val) in points {
        let w = spec.weight.eval(&m);
        let sgn = spec.sign_at(&m);
        if sgn == 0 || (w.cmp0() == std::cmp::Ordering::Equal) {
            continue;
        }
        let coef = w * Rat::from(sgn);
        // exponent val/2; phase beta
        let e = val / Rat::from(2);
        let mut term = ctx.complex_from_rat(&coef) * ctx.q_pow_rat(tau, &e);
        if let Some(beta) = &spec.beta {
            let mut ph = Rat::new();
            for ((b, &mi), ai) in beta.iter().zip(&m).zip(&spec.alpha) {
                ph += b.clone() * (Rat::from(mi) + ai);
            }
            term = term * ctx.e_modz(&RatModZ::new(ph));
        }
        acc += term;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Poisson summation formula with signature
// ---------------------------------------------------------------------------

/// Report of one PSF-with-signature verification.
#[derive(Clone, Debug)]
pub struct PsfReport {
    pub lhs: BigComplex,
    pub rhs: BigComplex,
    pub residual: f64,
    /// Per-subset contributions of the right hand side, keyed by bitmask of I.
    pub rhs_parts: Vec<(u64, BigComplex)>,
}

/// Verify `sum_{m in Z^r} sgn(m) f(m) = sum_{I} prod_{i in I}(-e_i)
/// sum_{n_I} sgn(n_I) prod_{j not in I} 2 int_{C_{e_j}} fhat(n_I, xi) dxi/(1-e(xi))`
/// for the Gaussian `f = e^{-pi x^T S x}` (so `fhat = e^{-pi xi^T S^{-1} xi}/sqrt(det S)`),
/// ranks 1 and 2.
pub fn psf_sgn_check(
    s: &RatMat,
    e: &[i32],
    tol: f64,
    ctx: &Ctx,
) -> Result<PsfReport, FalseThetaError> {
    let r = s.nrows();
    if r > 2 {
        return Err(FalseThetaError::UnsupportedRank(r));
    }
    if !s.is_positive_definite() {
        return Err(FalseThetaError::NotPositiveDefinite);
    }
    let s_inv = s.inverse().ok_or(FalseThetaError::NotPositiveDefinite)?;
    let pi = ctx.pi();
    let det_s = ctx.float_from_rat(&s.det());
    let sqrt_det = det_s.sqrt();

    // f(x) = exp(-pi x^T S x) at integer points; lhs sum truncated by decay.
    let lim = lattice_truncation_radius(s, 1.0, tol / 100.0);
    let mut lhs = ctx.complex_zero();
    for m in box_lattice(r, lim) {
        let mut sgn = 1i64;
        for &mi in &m {
            sgn *= crate::numeric::sgn_i64(mi) as i64;
        }
        let q = quad_form_f(s, &m, ctx);
        lhs += ctx
            .complex_from_rat(&Rat::from(sgn))
            .mul_float(&(-pi.clone() * q).exp());
    }

    // fhat(xi) = exp(-pi xi^T S^{-1} xi) / sqrt(det S), complex xi.
    let s_inv_f: Vec<Vec<Float>> = (0..r)
        .map(|i| (0..r).map(|j| ctx.float_from_rat(&s_inv[(i, j)])).collect())
        .collect();
    let fhat = move |xi: &[BigComplex], ctx: &Ctx| -> BigComplex {
        let mut q = ctx.complex_zero();
        for i in 0..r {
            for j in 0..r {
                q += (xi[i].clone() * xi[j].clone()).mul_float(&s_inv_f[i][j]);
            }
        }
        (-q.mul_float(&ctx.pi())).exp()
    };

    // decay scale for the contours: lambda_min of S^{-1}
    let s_inv_ff: Vec<Vec<Float>> = (0..r)
        .map(|i| (0..r).map(|j| ctx.float_from_rat(&s_inv[(i, j)])).collect())
        .collect();
    let lam = min_eigen_lower_bound(&s_inv_ff);
    let t_trunc = gaussian_tail_t(lam, 1.0, tol / 100.0);
    let tol_f = ctx.float(tol / 50.0);

    let mut rhs = ctx.complex_zero();
    let mut rhs_parts = Vec::new();
    for mask in 0..(1u64 << r) {
        // I = set bits; J = complement (contour variables)
        let in_i: Vec<usize> = (0..r).filter(|&i| mask & (1 << i) != 0).collect();
        let in_j: Vec<usize> = (0..r).filter(|&i| mask & (1 << i) == 0).collect();
        let mut pref = 1i64;
        for &i in &in_i {
            pref *= -e[i] as i64;
        }
        let part = match (in_i.len(), in_j.len()) {
            (_, 0) => {
                // pure lattice sum over n in Z^r
                let mut acc = ctx.complex_zero();
                for n in box_lattice(r, lim) {
                    let mut sgn = 1i64;
                    for &ni in &n {
                        sgn *= crate::numeric::sgn_i64(ni) as i64;
                    }
                    let xi: Vec<BigComplex> =
                        n.iter().map(|&x| ctx.complex(x as f64, 0.0)).collect();
                    acc += fhat(&xi, ctx).mul_float(&ctx.float(sgn as f64));
                }
                acc
            }
            (0, _) => {
                // pure contour integral over C_{e_j}^J
                contour_multi(&fhat, &in_j, &[], &[], e, t_trunc, &tol_f, ctx)?
                    .mul_float(&ctx.float((1u64 << in_j.len()) as f64))
            }
            (_, _) => {
                // mixed: sum over n_I, contour over xi_J
                let mut acc = ctx.complex_zero();
                for n in box_lattice(in_i.len(), lim) {
                    let mut sgn = 1i64;
                    for &ni in &n {
                        sgn *= crate::numeric::sgn_i64(ni) as i64;
                    }
                    let v = contour_multi(&fhat, &in_j, &in_i, &n, e, t_trunc, &tol_f, ctx)?;
                    acc += v.mul_float(&ctx.float(sgn as f64));
                }
                acc.mul_float(&ctx.float((1u64 << in_j.len()) as f64))
            }
        };
        let contrib = part.mul_float(&ctx.float(pref as f64));
        rhs += contrib.clone();
        rhs_parts.push((mask, contrib));
    }
    // normalize fhat by 1/sqrt(det S)
    rhs = rhs.div_float(&sqrt_det);
    for (_, p) in &mut rhs_parts {
        *p = p.div_float(&sqrt_det);
    }
    let residual = (lhs.clone() - rhs.clone()).abs_f64();
    Ok(PsfReport {
        lhs,
        rhs,
        residual,
        rhs_parts,
    })
}

/// Iterated contour integration of `fhat(xi)/prod(1 - e(xi_j))` with the
/// variables `fixed` pinned at integers `n`, over `C_{e_j}` per remaining
/// variable.
#[allow(clippy::too_many_arguments)]
fn contour_multi<F>(
    fhat: &F,
    contour_vars: &[usize],
    fixed_vars: &[usize],
    n: &[i64],
    e: &[i32],
    t_trunc: f64,
    tol: &Float,
    ctx: &Ctx,
) -> Result<BigComplex, QuadError>
where
    F: Fn(&[BigComplex], &Ctx) -> BigComplex + Sync,
{
    let r = contour_vars.len() + fixed_vars.len();
    // recursive iterated integration
    fn rec<F>(
        fhat: &F,
        contour_vars: &[usize],
        fixed_vals: &mut Vec<(usize, BigComplex)>,
        level: usize,
        e: &[i32],
        t_trunc: f64,
        tol: &Float,
        r: usize,
        ctx: &Ctx,
    ) -> Result<BigComplex, QuadError>
    where
        F: Fn(&[BigComplex], &Ctx) -> BigComplex + Sync,
    {
        if level == contour_vars.len() {
            let mut xi = vec![ctx.complex_zero(); r];
            for (i, v) in fixed_vals.iter() {
                xi[*i] = v.clone();
            }
            return Ok(fhat(&xi, ctx));
        }
        let var = contour_vars[level];
        // poles of 1/(1 - e(xi)) at integers; crossing between -1 and 0
        let path = if e[var] == 1 {
            c_plus_path(&[], t_trunc, ctx)
        } else {
            c_minus_path(&[], t_trunc, ctx)
        };
        let sub_tol = tol.clone() / Float::with_val(ctx.prec(), 4);
        let base: Vec<(usize, BigComplex)> = fixed_vals.clone();
        let integrand = |z: &BigComplex| -> BigComplex {
            let mut fv = base.clone();
            fv.push((var, z.clone()));
            let inner = rec(
                fhat,
                contour_vars,
                &mut fv,
                level + 1,
                e,
                t_trunc,
                &(tol.clone() / Float::with_val(ctx.prec(), 4)),
                r,
                ctx,
            )
            .expect("inner integral");
            let den = ctx.complex_one() - ctx.e_complex(z);
            inner * den.recip()
        };
        let v = path.integrate(&integrand, &sub_tol, ctx)?;
        Ok(v)
    }
    let mut fixed_vals: Vec<(usize, BigComplex)> = fixed_vars
        .iter()
        .zip(n)
        .map(|(&i, &ni)| (i, ctx.complex(ni as f64, 0.0)))
        .collect();
    rec(
        fhat,
        contour_vars,
        &mut fixed_vals,
        0,
        e,
        t_trunc,
        tol,
        r,
        ctx,
    )
}

/// Integer box `[-lim, lim]^r`.
fn box_lattice(r: usize, lim: i64) -> Vec<Vec<i64>> {
    let mut pts = vec![Vec::new()];
    for _ in 0..r {
        let mut next = Vec::new();
        for p in &pts {
            for x in -lim..=lim {
                let mut q = p.clone();
                q.push(x);
                next.push(q);
            }
        }
        pts = next;
    }
    pts
}

fn quad_form_f(s: &RatMat, m: &[i64], ctx: &Ctx) -> Float {
    let r = s.nrows();
    let mut acc = Rat::new();
    for i in 0..r {
        for j in 0..r {
            acc += s[(i, j)].clone() * Rat::from(m[i]) * Rat::from(m[j]);
        }
    }
    ctx.float_from_rat(&acc)
}

/// Truncation radius so that the Gaussian lattice tail with quadratic form
/// `scale * lambda_min(S) * |m|^2` is below `tol`.
fn lattice_truncation_radius(s: &RatMat, scale: f64, tol: f64) -> i64 {
    let r = s.nrows();
    let sf: Vec<Vec<Float>> = (0..r)
        .map(|i| {
            (0..r)
                .map(|j| Float::with_val(64, &s[(i, j)]))
                .collect()
        })
        .collect();
    let lam = min_eigen_lower_bound(&sf);
    let c = std::f64::consts::PI * lam * scale;
    let mut lim = 4i64;
    loop {
        let tail = (2 * lim + 1).pow(r as u32 - 1) as f64 * 4.0 * r as f64
            * (-c * (lim as f64) * (lim as f64)).exp()
            / (1.0 - (-c).exp()).max(1e-300);
        if tail < tol {
            return lim;
        }
        lim += 2;
        assert!(lim < 4000, "lattice truncation does not close");
    }
}

/// Conservative lower bound for the smallest eigenvalue of a symmetric
/// positive definite matrix given as floats: Gershgorin-type bound
/// lam >= min_i (a_ii - sum_{j != i} |a_ij|) when positive, otherwise
/// det/trace-based fallback (safe for the 1x1 and 2x2 cases in scope).
fn min_eigen_lower_bound(a: &[Vec<Float>]) -> f64 {
    let r = a.len();
    let mut gersh = f64::MAX;
    for i in 0..r {
        let mut row = a[i][i].to_f64();
        for j in 0..r {
            if j != i {
                row -= a[i][j].to_f64().abs();
            }
        }
        gersh = gersh.min(row);
    }
    if gersh > 0.0 {
        return gersh;
    }
    if r == 2 {
        // exact 2x2 smallest eigenvalue
        let (a11, a12, a22) = (a[0][0].to_f64(), a[0][1].to_f64(), a[1][1].to_f64());
        let tr = a11 + a22;
        let det = a11 * a22 - a12 * a12;
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        return 0.5 * (tr - disc) * 0.999;
    }
    // fallback: det / prod of row sums
    let mut det_over = f64::MAX;
    let _ = &mut det_over;
    0.1 * gersh.abs().max(1e-6)
}

// ---------------------------------------------------------------------------
// Partition data
// ---------------------------------------------------------------------------

/// Block data of an ordered partition `pi = (I_1, ..., I_s)`:
/// the unit block-lower-triangular change of variables `U_pi`, the block
/// diagonal `S*_pi` on the summed coordinates (all parts but the last), and
/// the coefficient matrix mapping original pole tuples to summed lattice
/// points.
#[derive(Clone, Debug)]
pub struct PartitionData {
    pub parts: Vec<Vec<usize>>,
    /// Summed coordinates (concatenation of all parts but the last; all of
    /// them for the one-part partition).
    pub summed: Vec<usize>,
    /// `U_pi` in part-ordered coordinates (rows/cols ordered by
    /// `parts[0], parts[1], ...`).
    pub u: RatMat,
    /// Block diagonal of the dual decomposition, full size (part order):
    /// `S^{-1} = U^T diag U` exactly.
    pub full_diag: RatMat,
    /// The `summed x summed` leading block of `full_diag` (this is `S*_pi`).
    pub s_star: RatMat,
    /// Leading `summed x summed` block of `U_pi`: maps original pole tuples
    /// `(xi_i)_{i in summed}` to the summed lattice points of `P_pi`.
    pub pole_map: RatMat,
}

/// Compute `(U_pi, S*_pi)` by nested exact Schur complements:
/// level `j` splits the current matrix `T_j` (with `T_1 = S`) along `I_j`,
/// contributing the block `(T_j|_{I_j})^{-1}` and the transform row
/// `U^(j) = -B^T (T_j|_{I_j})^{-1}`.
pub fn partition_data(
    s: &RatMat,
    parts: &[Vec<usize>],
) -> Result<PartitionData, FalseThetaError> {
    let r = s.nrows();
    let mut seen = vec![false; r];
    for p in parts {
        for &i in p {
            assert!(!seen[i], "partition repeats index {i}");
            seen[i] = true;
        }
    }
    assert!(seen.iter().all(|&b| b), "partition misses indices");
    if !s.is_positive_definite() {
        return Err(FalseThetaError::NotPositiveDefinite);
    }
    // part-ordered index list
    let order: Vec<usize> = parts.iter().flatten().copied().collect();
    let s_ord = s.submatrix(&order, &order);
    let sizes: Vec<usize> = parts.iter().map(|p| p.len()).collect();
    let nparts = parts.len();

    let mut u = RatMat::identity(r);
    let mut full_diag = RatMat::zeros(r, r);
    // current S-side matrix on the remaining part-ordered coordinates
    let mut t = s_ord.clone();
    let mut offset = 0usize;
    for j in 0..nparts {
        let k = sizes[j];
        let rest = t.nrows() - k;
        let head: Vec<usize> = (0..k).collect();
        let tail: Vec<usize> = (k..t.nrows()).collect();
        let t_ii = t.submatrix(&head, &head);
        let t_ii_inv = t_ii.inverse().ok_or(FalseThetaError::SingularBlock)?;
        if j == nparts - 1 || rest == 0 {
            // final block: the Schur complement inverse goes in the diagonal
            // M_{s-1} = (T_s ...)^{-1}; at the last level the dual block is
            // (T|_{I_s})^{-1} only when rest == 0, i.e. the block itself.
            for a in 0..k {
                for b in 0..k {
                    full_diag[(offset + a, offset + b)] = t_ii_inv[(a, b)].clone();
                }
            }
            break;
        }
        let b_blk = t.submatrix(&head, &tail);
        // dual block for this level: (T|_{I_j})^{-1}
        for a in 0..k {
            for bcol in 0..k {
                full_diag[(offset + a, offset + bcol)] = t_ii_inv[(a, bcol)].clone();
            }
        }
        // U^{(j)} = -B^T (T|_{I_j})^{-1}, acting rows offset+k.., cols offset..offset+k
        let u_j = b_blk.transpose().mul(&t_ii_inv).scale(&Rat::from(-1));
        // embed: newU = Vtilde_j * U where Vtilde_j is identity except the
        // block (rows offset+k.., cols offset..offset+k) = u_j.
        let mut v_j = RatMat::identity(r);
        for a in 0..rest {
            for bcol in 0..k {
                v_j[(offset + k + a, offset + bcol)] = u_j[(a, bcol)].clone();
            }
        }
        u = v_j.mul(&u);
        // Schur complement for the next level
        let schur = t
            .submatrix(&tail, &tail)
            .sub(&b_blk.transpose().mul(&t_ii_inv).mul(&b_blk));
        t = schur;
        offset += k;
    }
    // exact consistency: S^{-1} = U^T diag U in part-ordered coordinates
    let s_inv = s_ord.inverse().ok_or(FalseThetaError::SingularBlock)?;
    let recomposed = u.transpose().mul(&full_diag).mul(&u);
    assert_eq!(
        recomposed, s_inv,
        "partition decomposition failed exactness"
    );

    let summed_len: usize = if nparts == 1 {
        r
    } else {
        r - sizes[nparts - 1]
    };
    let summed: Vec<usize> = order[..summed_len].to_vec();
    let idx: Vec<usize> = (0..summed_len).collect();
    let s_star = full_diag.submatrix(&idx, &idx);
    let pole_map = u.submatrix(&idx, &idx);
    Ok(PartitionData {
        parts: parts.to_vec(),
        summed,
        u,
        full_diag,
        s_star,
        pole_map,
    })
}

/// All ordered partitions of `{0, ..., n-1}`.
pub fn ordered_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(remaining: &[usize]) -> Vec<Vec<Vec<usize>>> {
        if remaining.is_empty() {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        // choose a nonempty subset as the first part
        let n = remaining.len();
        for mask in 1u64..(1 << n) {
            let part: Vec<usize> = (0..n)
                .filter(|&i| mask & (1 << i) != 0)
                .map(|i| remaining[i])
                .collect();
            let rest: Vec<usize> = (0..n)
                .filter(|&i| mask & (1 << i) == 0)
                .map(|i| remaining[i])
                .collect();
            for mut tail in rec(&rest) {
                let mut p = vec![part.clone()];
                p.append(&mut tail);
                out.push(p);
            }
        }
        out
    }
    let all: Vec<usize> = (0..n).collect();
    rec(&all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    #[test]
    fn plain_false_theta_rank1() {
        // r=1, S=(1), alpha=0, tau=i: terms at +-m cancel pairwise, leaving
        // the m=0 term: sum sgn(m) q^{m^2/2} = 1.
        let ctx = Ctx::new(128);
        let spec = FalseThetaSpec::plain(RatMat::from_i64(&[&[1]]), vec![Rat::new()]).unwrap();
        let tau = ctx.complex(0.0, 1.0);
        let v = false_theta_eval(&spec, &tau, 1e-30, &ctx).unwrap();
        assert!(v.sub_f64(1.0, 0.0).abs_f64() < 1e-28);

        // shifted version against direct summation, two truncations
        let spec2 =
            FalseThetaSpec::plain(RatMat::from_i64(&[&[1]]), vec![rat(1, 3)]).unwrap();
        let v2 = false_theta_eval(&spec2, &tau, 1e-30, &ctx).unwrap();
        let direct = |lim: i64| -> BigComplex {
            let mut acc = ctx.complex_zero();
            for m in -lim..=lim {
                let x = Rat::from(m) + rat(1, 3);
                let sgn = crate::numeric::sgn_rat(&x);
                let e = x.clone() * &x / Rat::from(2);
                acc += ctx
                    .complex_from_rat(&Rat::from(sgn as i64))
                    * ctx.q_pow_rat(&tau, &e);
            }
            acc
        };
        let d1 = direct(30);
        let d2 = direct(45);
        assert!((d1.clone() - d2.clone()).abs_f64() < 1e-30);
        assert!((v2 - d1).abs_f64() < 1e-28);
    }

    #[test]
    fn odd_weight_doubles_positive_part() {
        // odd weight g(x) = x with alpha = 0: sgn(-m)g(-m) = sgn(m)g(m), so
        // the sum is twice the m > 0 part (the m = 0 term vanishes).
        let ctx = Ctx::new(96);
        let mut spec =
            FalseThetaSpec::plain(RatMat::from_i64(&[&[2]]), vec![Rat::new()]).unwrap();
        spec.weight =
            QuasiPoly::atom_univariate(1, 0, 0, 1, 1, crate::quasipoly::Weight::Plain);
        let tau = ctx.complex(0.3, 0.7);
        let v = false_theta_eval(&spec, &tau, 1e-25, &ctx).unwrap();
        let mut half = ctx.complex_zero();
        for m in 1..=40i64 {
            half += ctx
                .q_pow_rat(&tau, &Rat::from(m * m))
                .mul_float(&ctx.float(m as f64));
        }
        let want = half.mul_float(&ctx.float(2.0));
        assert!((v - want).abs_f64() < 1e-22);
    }

    #[test]
    fn partition_data_trivial_and_split() {
        // pi = ({0,1}): S*_pi = S^{-1}
        let s = RatMat::from_i64(&[&[2, 1], &[1, 2]]);
        let pd = partition_data(&s, &[vec![0, 1]]).unwrap();
        assert_eq!(pd.s_star, s.inverse().unwrap());
        assert_eq!(pd.u, RatMat::identity(2));

        // pi = ({0},{1}): S*_pi = (S_00)^{-1}; U entry -b/a
        let pd2 = partition_data(&s, &[vec![0], vec![1]]).unwrap();
        assert_eq!(pd2.s_star[(0, 0)], rat(1, 2));
        assert_eq!(pd2.u[(1, 0)], rat(-1, 2));
        assert_eq!(pd2.summed, vec![0]);
    }

    #[test]
    fn partition_block_diagonalization_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let r = rng.gen_range(2..5usize);
            // random positive definite: A^T A + I
            let a = RatMat::from_fn(r, r, |_, _| rat(rng.gen_range(-3i64..4), 1));
            let s = a.transpose().mul(&a).add(&RatMat::identity(r));
            for parts in ordered_partitions(r).into_iter().take(6) {
                // exactness asserted inside partition_data
                let pd = partition_data(&s, &parts).unwrap();
                let _ = pd;
            }
        }
    }

    #[test]
    fn ordered_partition_counts() {
        assert_eq!(ordered_partitions(1).len(), 1);
        assert_eq!(ordered_partitions(2).len(), 3);
        assert_eq!(ordered_partitions(3).len(), 13);
    }
}
