//! Modular-series transformation checks: the Poisson route for full
//! quasi-polynomial weights (Gaussian and sech kernels) and the explicit
//! rank-two false theta identity with all contour terms.

use crate::falsetheta::contours::{c_plus_path, gaussian_tail_t, signed_pole_integral};
use crate::falsetheta::{false_theta_eval, FalseThetaError, FalseThetaSpec};
use crate::numeric::{BigComplex, Ctx, Rat, RatModZ};
use crate::quasipoly::{QpAtom, QuasiPoly};
use crate::ratmat::RatMat;
use rug::Float;
use std::collections::BTreeMap;

/// Kernel choices for [`poisson_modular_check`].
pub enum Kernel {
    /// `gamma(tau; x) = q^{x^T S x / 2}` for positive definite rational S.
    Gaussian(RatMat),
    /// `gamma(tau; x) = 2/(q^{x/2} + q^{-x/2})` (rank 1). With weight 1 this
    /// is the Eisenstein series of weight 2 and level 4 at `tau/2`, so the
    /// check verifies `E_2^{(4)}(tau/2) = (i/tau) E_2^{(4)}(-1/(2 tau))`.
    Sech,
}

#[derive(Clone, Debug)]
pub struct PoissonReport {
    pub lhs: BigComplex,
    pub rhs: BigComplex,
    pub residual: f64,
}

/// Decompose a full quasi-polynomial into residue classes modulo one common
/// period: class -> polynomial (map from exponent vector to coefficient).
fn residue_classes(
    g: &QuasiPoly,
) -> Result<(u32, BTreeMap<Vec<u32>, BTreeMap<Vec<u32>, Rat>>), FalseThetaError> {
    g.expect_weight(crate::quasipoly::Weight::Plain, "full")
        .map_err(FalseThetaError::QuasiPoly)?;
    let r = g.nvars();
    let mut n = 1u32;
    for t in g.terms() {
        for a in &t.atoms {
            match a {
                QpAtom::Eventual { period, .. } => n = lcm_u32(n, *period),
                QpAtom::Singleton { .. } => return Err(FalseThetaError::NotPlainQuasiPoly),
            }
        }
    }
    let mut classes: BTreeMap<Vec<u32>, BTreeMap<Vec<u32>, Rat>> = BTreeMap::new();
    for t in g.terms() {
        // expand each variable's residue to classes mod n
        let expansions: Vec<Vec<u32>> = t
            .atoms
            .iter()
            .map(|a| match a {
                QpAtom::Eventual { c, period, .. } => {
                    (0..n / period).map(|j| c + j * period).collect()
                }
                _ => unreachable!(),
            })
            .collect();
        let degrees: Vec<u32> = t
            .atoms
            .iter()
            .map(|a| match a {
                QpAtom::Eventual { degree, .. } => *degree,
                _ => unreachable!(),
            })
            .collect();
        let mut idx = vec![0usize; r];
        loop {
            let class: Vec<u32> = (0..r).map(|i| expansions[i][idx[i]]).collect();
            *classes
                .entry(class)
                .or_default()
                .entry(degrees.clone())
                .or_default() += t.coef.clone();
            let mut carry = true;
            for i in 0..r {
                if !carry {
                    break;
                }
                idx[i] += 1;
                if idx[i] < expansions[i].len() {
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
    Ok((n, classes))
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

/// Multivariate polynomial with complex coefficients (for the derivative
/// closure `P(-(1/2 pi i) d/dxi) [poly x Gaussian]`).
#[derive(Clone)]
struct CxPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, BigComplex>,
}

impl CxPoly {
    fn constant(nvars: usize, c: BigComplex) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![0; nvars], c);
        CxPoly { nvars, terms }
    }

    fn add_term(&mut self, exp: Vec<u32>, c: BigComplex) {
        match self.terms.entry(exp) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = e.get().clone() + c;
                *e.get_mut() = v;
            }
        }
    }

    fn deriv(&self, var: usize, ctx: &Ctx) -> CxPoly {
        let mut out = CxPoly {
            nvars: self.nvars,
            terms: BTreeMap::new(),
        };
        for (exp, c) in &self.terms {
            if exp[var] == 0 {
                continue;
            }
            let mut e2 = exp.clone();
            e2[var] -= 1;
            out.add_term(e2, c.clone().mul_float(&ctx.float(exp[var] as f64)));
        }
        out
    }

    /// multiply by the linear form `sum coefs_j xi_j`
    fn mul_linear(&self, coefs: &[BigComplex]) -> CxPoly {
        let mut out = CxPoly {
            nvars: self.nvars,
            terms: BTreeMap::new(),
        };
        for (exp, c) in &self.terms {
            for (j, lc) in coefs.iter().enumerate() {
                if lc.is_zero() {
                    continue;
                }
                let mut e2 = exp.clone();
                e2[j] += 1;
                out.add_term(e2, c.clone() * lc.clone());
            }
        }
        out
    }

    fn eval(&self, xi: &[BigComplex], ctx: &Ctx) -> BigComplex {
        let mut acc = ctx.complex_zero();
        for (exp, c) in &self.terms {
            let mut v = c.clone();
            for (i, &ei) in exp.iter().enumerate() {
                for _ in 0..ei {
                    v = v * xi[i].clone();
                }
            }
            acc += v;
        }
        acc
    }
}

/// Verify the modular transformation of the modular series
/// `Phi[g, gamma](tau) = sum_{n in P} T_{g,N} gammahat(tau; n)`:
/// direct summation against the pole-sum of the transformed kernel.
pub fn poisson_modular_check(
    g: &QuasiPoly,
    kernel: &Kernel,
    tau: &BigComplex,
    tol: f64,
    ctx: &Ctx,
) -> Result<PoissonReport, FalseThetaError> {
    if !(tau.im().to_f64() > 0.0) {
        return Err(FalseThetaError::ImaginaryPartNonpositive);
    }
    let r = g.nvars();
    let (n_period, classes) = residue_classes(g)?;

    // --- LHS: direct summation ---
    let lhs = match kernel {
        Kernel::Gaussian(s) => {
            if s.nrows() != r || !s.is_positive_definite() {
                return Err(FalseThetaError::NotPositiveDefinite);
            }
            let lim = super::lattice_truncation_radius(s, tau.im().to_f64(), tol / 100.0);
            let mut acc = ctx.complex_zero();
            for m in super::box_lattice(r, lim) {
                let w = g.eval(&m);
                if w.cmp0() == std::cmp::Ordering::Equal {
                    continue;
                }
                let mut qf = Rat::new();
                for i in 0..r {
                    for j in 0..r {
                        qf += s[(i, j)].clone() * Rat::from(m[i]) * Rat::from(m[j]);
                    }
                }
                acc += ctx.complex_from_rat(&w) * ctx.q_pow_rat(tau, &(qf / Rat::from(2)));
            }
            acc
        }
        Kernel::Sech => {
            if r != 1 {
                return Err(FalseThetaError::UnsupportedRank(r));
            }
            // 2/(q^{m/2} + q^{-m/2}) decays like 2 q^{|m|/2}
            let decay = ctx.pi().to_f64() * tau.im().to_f64(); // -ln|q^{1/2}|
            let lim = ((-(tol / 100.0).ln() + 3.0) / decay).ceil() as i64 + 2;
            let mut acc = ctx.complex_zero();
            for m in -lim..=lim {
                let w = g.eval(&[m]);
                if w.cmp0() == std::cmp::Ordering::Equal {
                    continue;
                }
                let qh = ctx.q_pow_rat(tau, &Rat::from((m, 2)));
                let den = qh.clone() + qh.recip();
                acc += ctx.complex_from_rat(&w).mul_float(&ctx.float(2.0)) * den.recip();
            }
            acc
        }
    };

    // --- RHS: sum over poles n in (1/N) Z^r of T_{g,N} gammahat(tau; n) ---
    let rhs = match kernel {
        Kernel::Gaussian(s) => {
            let s_inv = s.inverse().unwrap();
            let det_s = ctx.float_from_rat(&s.det());
            // gammahat(xi) = (i/tau)^{r/2} det(S)^{-1/2} qtilde^{xi^T S^-1 xi/2}
            let i_over_tau = BigComplex::i(ctx.prec()) * tau.clone().recip();
            let mut pref = ctx.complex_one();
            for _ in 0..r {
                pref = pref * i_over_tau.sqrt();
            }
            pref = pref.div_float(&det_s.sqrt());
            // decay of qtilde^{n S^-1 n/2} in n: Im(-1/tau) lambda_min(S^-1) pi
            let im_minus = (BigComplex::from_f64(-1.0, 0.0, ctx.prec()) * tau.clone().recip())
                .im()
                .to_f64();
            let s_inv_f: Vec<Vec<Float>> = (0..r)
                .map(|i| {
                    (0..r)
                        .map(|j| ctx.float_from_rat(&s_inv[(i, j)]))
                        .collect()
                })
                .collect();
            let lam = super::min_eigen_lower_bound(&s_inv_f);
            let c0 = std::f64::consts::PI * im_minus * lam / (n_period as f64 * n_period as f64);
            let mut lim = 4i64;
            while (2 * lim + 1).pow(r as u32 - 1) as f64 * 6.0 * (-c0 * (lim * lim) as f64).exp()
                / (1.0 - (-c0).exp()).max(1e-300)
                > tol / 100.0
            {
                lim += 2;
                assert!(lim < 100_000, "pole sum truncation does not close");
            }
            // For each class a: operator P_a(-(1/2pi i) d) applied to the
            // Gaussian kernel: closure poly x kernel.
            let n_rat = Rat::from(n_period);
            let mut acc = ctx.complex_zero();
            for j in super::box_lattice(r, lim) {
                // n = j / N
                let n_pt: Vec<Rat> = j.iter().map(|&x| Rat::from(x) / &n_rat).collect();
                // kernel value qtilde^{n^T S^-1 n / 2}
                let mut qf = Rat::new();
                for ii in 0..r {
                    for jj in 0..r {
                        qf += s_inv[(ii, jj)].clone() * &n_pt[ii] * &n_pt[jj];
                    }
                }
                let minus_inv_tau = -tau.clone().recip();
                let kval = ctx.q_pow_rat(&minus_inv_tau, &(qf / Rat::from(2)));
                // S^-1 n as complex vector (for the derivative closure)
                let xi_cx: Vec<BigComplex> =
                    n_pt.iter().map(|x| ctx.complex_from_rat(x)).collect();
                let mut class_sum = ctx.complex_zero();
                for (class, poly) in &classes {
                    // e(a^T n)
                    let mut ph = Rat::new();
                    for (ai, ni) in class.iter().zip(&n_pt) {
                        ph += Rat::from(*ai) * ni;
                    }
                    let phase = ctx.e_modz(&RatModZ::new(ph));
                    // build the operator polynomial applied to the kernel:
                    // start from constant 1, apply op per monomial degree.
                    let mut term_sum = ctx.complex_zero();
                    for (mono, coef) in poly {
                        let mut opoly = CxPoly::constant(r, ctx.complex_one());
                        for (var, &d) in mono.iter().enumerate() {
                            for _ in 0..d {
                                opoly = apply_op(&opoly, var, &s_inv, tau, ctx);
                            }
                        }
                        term_sum +=
                            ctx.complex_from_rat(coef) * opoly.eval(&xi_cx, ctx);
                    }
                    class_sum += phase * term_sum;
                }
                acc += class_sum * kval;
            }
            let nr_inv = ctx.float(1.0)
                / ctx.float((n_period as f64).powi(r as i32));
            acc.mul_float(&nr_inv) * pref
        }
        Kernel::Sech => {
            // gammahat(tau; xi) = (i/tau) * 2/(qtilde^{xi/2} + qtilde^{-xi/2});
            // constant classes only.
            for poly in classes.values() {
                for mono in poly.keys() {
                    if mono.iter().any(|&d| d > 0) {
                        return Err(FalseThetaError::UnsupportedKernel);
                    }
                }
            }
            let i_over_tau = BigComplex::i(ctx.prec()) * tau.clone().recip();
            let minus_inv_tau = -tau.clone().recip();
            let im_minus = minus_inv_tau.im().to_f64();
            let decay = std::f64::consts::PI * im_minus / n_period as f64;
            let lim = ((-(tol / 100.0).ln() + 3.0) / decay).ceil() as i64 + 2;
            let n_rat = Rat::from(n_period);
            let mut acc = ctx.complex_zero();
            for j in -lim..=lim {
                let n_pt = Rat::from(j) / &n_rat;
                let qh = ctx.q_pow_rat(&minus_inv_tau, &(n_pt.clone() / Rat::from(2)));
                let kval = (qh.clone() + qh.recip()).recip().mul_float(&ctx.float(2.0));
                let mut class_sum = ctx.complex_zero();
                for (class, poly) in &classes {
                    let ph = Rat::from(class[0]) * &n_pt;
                    let phase = ctx.e_modz(&RatModZ::new(ph));
                    let c0 = poly.get(&vec![0u32]).cloned().unwrap_or_default();
                    class_sum += phase * ctx.complex_from_rat(&c0);
                }
                acc += class_sum * kval;
            }
            acc.mul_float(&ctx.float(1.0 / n_period as f64)) * i_over_tau
        }
    };

    let residual = (lhs.clone() - rhs.clone()).abs_f64();
    Ok(PoissonReport { lhs, rhs, residual })
}

/// One derivative step of the closure: `(-1/2 pi i) d/dxi_var [p K] = [(-1/2 pi i) dp + p (1/tau)(S^{-1} xi)_var] K`
/// for `K = qtilde^{xi^T S^{-1} xi / 2}` with `qtilde = e(-1/tau)`.
fn apply_op(p: &CxPoly, var: usize, s_inv: &RatMat, tau: &BigComplex, ctx: &Ctx) -> CxPoly {
    let r = p.nvars;
    let inv_2pii = BigComplex::new(Float::new(ctx.prec()), ctx.pi() * 2u32).recip();
    let d = p.deriv(var, ctx);
    let mut out = CxPoly {
        nvars: r,
        terms: BTreeMap::new(),
    };
    for (exp, c) in &d.terms {
        out.add_term(exp.clone(), -(c.clone() * inv_2pii.clone()));
    }
    // + p * (1/tau) (S^{-1} xi)_var
    let inv_tau = tau.clone().recip();
    let lin: Vec<BigComplex> = (0..r)
        .map(|j| ctx.complex_from_rat(&s_inv[(var, j)]) * inv_tau.clone())
        .collect();
    for (exp, c) in p.mul_linear(&lin).terms {
        out.add_term(exp, c);
    }
    out
}

// ---------------------------------------------------------------------------
// Rank-two modular identity
// ---------------------------------------------------------------------------

/// Per-term report of the rank-two false theta modular identity.
#[derive(Clone, Debug)]
pub struct Rank2Report {
    pub lhs: BigComplex,
    pub theta_star: BigComplex,
    /// `(i, nu, Theta_{i,nu}, theta_{i,nu}, Omega_{i,nu})`.
    pub cross_terms: Vec<(usize, Rat, BigComplex, BigComplex, BigComplex)>,
    pub omega: BigComplex,
    pub rhs: BigComplex,
    pub residual: f64,
}

/// Verify the explicit rank-two identity
/// `(i/tau) sqrt(D) Theta~(-1/tau) = Theta~* - sum_{i,nu}(Theta~_{i,nu} +
/// theta~_{i,nu} Omega_{i,nu}) + Omega` for an integer positive definite
/// 2x2 matrix `S` and rational shift `alpha` (reduced mod Z^2), reporting
/// every term. (The subset terms of the signature Poisson formula carry
/// `prod_{i in I}(-e_i)`, so the single-contour groups enter with a minus;
/// this is pinned numerically by the diagonal case, where the identity
/// factors into two exact rank-one identities.)
pub fn rank2_modular_check(
    s_int: [[i64; 2]; 2],
    alpha: [Rat; 2],
    tau: &BigComplex,
    tol: f64,
    ctx: &Ctx,
) -> Result<Rank2Report, FalseThetaError> {
    if !(tau.im().to_f64() > 0.0) {
        return Err(FalseThetaError::ImaginaryPartNonpositive);
    }
    let s = RatMat::from_i64(&[&[s_int[0][0], s_int[0][1]], &[s_int[1][0], s_int[1][1]]]);
    if !s.is_positive_definite() {
        return Err(FalseThetaError::NotPositiveDefinite);
    }
    let (a, b, c) = (s_int[0][0], s_int[0][1], s_int[1][1]);
    let d_det = a * c - b * b;
    // reduce alpha mod Z^2 (the identity assumes alpha in [0,1)^2)
    let alpha: Vec<Rat> = alpha
        .iter()
        .map(|x| {
            let f = x.clone().floor();
            x.clone() - f
        })
        .collect();
    let s_inv = s.inverse().unwrap();

    // ---- LHS: (i/tau) sqrt(D) Theta~(-1/tau) ----
    let minus_inv_tau = -tau.clone().recip();
    let spec = FalseThetaSpec::plain(s.clone(), alpha.clone())?;
    let lhs_theta = false_theta_eval(&spec, &minus_inv_tau, tol / 100.0, ctx)?;
    let i_over_tau = BigComplex::i(ctx.prec()) * tau.clone().recip();
    let lhs = i_over_tau
        * lhs_theta.mul_float(&ctx.float(d_det as f64).sqrt());

    // ---- Theta~*: dual lattice sum ----
    let theta_star = {
        let lim = super::lattice_truncation_radius(&s_inv, tau.im().to_f64(), tol / 100.0);
        let mut acc = ctx.complex_zero();
        for n in super::box_lattice(2, lim) {
            let sgn = crate::numeric::sgn_i64(n[0]) * crate::numeric::sgn_i64(n[1]);
            let mut qf = Rat::new();
            for i in 0..2 {
                for j in 0..2 {
                    qf += s_inv[(i, j)].clone() * Rat::from(n[i]) * Rat::from(n[j]);
                }
            }
            let mut ph = Rat::new();
            for i in 0..2 {
                ph += alpha[i].clone() * Rat::from(n[i]);
            }
            acc += ctx
                .complex_from_rat(&Rat::from(sgn as i64))
                * ctx.e_modz(&RatModZ::new(ph))
                * ctx.q_pow_rat(tau, &(qf / Rat::from(2)));
        }
        acc
    };

    // ---- cross terms, i = 1 and i = 2 ----
    let mut cross_terms = Vec::new();
    let qtol = tol / 200.0;
    for axis in 1..=2usize {
        let (m_diag, phase_coef, other_alpha) = if axis == 1 {
            (
                a,
                Rat::from(a) * &alpha[0] + Rat::from(b) * &alpha[1],
                alpha[1].clone(),
            )
        } else {
            (
                c,
                Rat::from(b) * &alpha[0] + Rat::from(c) * &alpha[1],
                alpha[0].clone(),
            )
        };
        for jnum in 0..m_diag {
            let nu = Rat::from((jnum, m_diag));
            // theta~_{axis,nu} = sum_{m in nu+Z} sgn(m) e(phase_coef m) q^{m_diag m^2/2}
            let theta_small = {
                let decay =
                    std::f64::consts::PI * tau.im().to_f64() * m_diag as f64;
                let lim = ((-(qtol).ln() / decay).sqrt().ceil() as i64) + 3;
                let mut acc = ctx.complex_zero();
                for k in -lim..=lim {
                    let m = nu.clone() + Rat::from(k);
                    let sgn = crate::numeric::sgn_rat(&m);
                    let e = Rat::from(m_diag) * m.clone() * &m / Rat::from(2);
                    let ph = phase_coef.clone() * &m;
                    acc += ctx
                        .complex_from_rat(&Rat::from(sgn as i64))
                        * ctx.e_modz(&RatModZ::new(ph))
                        * ctx.q_pow_rat(tau, &e);
                }
                acc
            };
            // Omega_{axis,nu} = 2 int_{C_+} e(alpha_other xi) q^{m_diag xi^2/(2D)} dxi / (1 - e(xi + b nu))
            let omega_small = {
                // poles at xi in -b nu + Z
                let shift = Rat::from(b) * &nu;
                let shift_frac = {
                    let f = shift.clone().floor();
                    (shift.clone() - f).to_f64()
                };
                let poles: Vec<f64> = (-6..=6)
                    .map(|k| -shift_frac + k as f64)
                    .collect();
                let gamma = std::f64::consts::PI
                    * tau.im().to_f64()
                    * (m_diag as f64 / d_det as f64);
                // prefactor bound on tails: |e(alpha xi)| along Im = eps plus
                // 1/(1-e) bounded; take 8 as a safe constant
                let t_trunc = gaussian_tail_t(gamma, 8.0, qtol);
                let path = c_plus_path(&poles, t_trunc, ctx);
                let coef = Rat::from((m_diag, 2 * d_det));
                let coef_f = ctx.float_from_rat(&coef);
                let oa = ctx.float_from_rat(&other_alpha);
                let g = |z: &BigComplex| -> BigComplex {
                    let z2 = (z.clone() * z.clone()).mul_float(&coef_f);
                    let inner = tau.clone() * z2 + z.clone().mul_float(&oa);
                    ctx.e_complex(&inner)
                };
                let shift_cx = ctx.complex_from_rat(&shift);
                signed_pole_integral(&g, &path, &shift_cx, &ctx.float(qtol), ctx)?
            };
            // Theta~_{axis,nu}: the residues swept when the substituted
            // contour C_+ - bm is deformed back to the pole-adapted C_+:
            //   sum_{m in nu+Z} sum_{p in -b nu + Z}
            //     sgn(m) (sgn(p + b m) - sgn(p))
            //     e(phase_coef m + alpha_other p) q^{m_diag(m^2 + p^2/D)/2}
            // (pinned against the brute-force I_axis in the unit tests).
            let theta_big = if b == 0 {
                ctx.complex_zero()
            } else {
                let decay_m = std::f64::consts::PI * tau.im().to_f64() * m_diag as f64;
                let decay_n = decay_m / d_det as f64;
                let lim_m = ((-(qtol).ln() / decay_m).sqrt().ceil() as i64) + 3;
                let lim_n = ((-(qtol).ln() / decay_n).sqrt().ceil() as i64)
                    + 3
                    + b.abs() * lim_m;
                let mut acc = ctx.complex_zero();
                for km in -lim_m..=lim_m {
                    let m = nu.clone() + Rat::from(km);
                    let sgn_m = crate::numeric::sgn_rat(&m) as i64;
                    for kn in -lim_n..=lim_n {
                        let p = -Rat::from(b) * &nu + Rat::from(kn);
                        let shifted = p.clone() + Rat::from(b) * &m;
                        let sdiff =
                            crate::numeric::sgn_rat(&shifted) - crate::numeric::sgn_rat(&p);
                        if sdiff == 0 {
                            continue;
                        }
                        let e = Rat::from(m_diag)
                            * (m.clone() * &m + p.clone() * &p / Rat::from(d_det))
                            / Rat::from(2);
                        let ph = phase_coef.clone() * &m + other_alpha.clone() * &p;
                        acc += ctx
                            .complex_from_rat(&Rat::from(sgn_m * sdiff as i64))
                            * ctx.e_modz(&RatModZ::new(ph))
                            * ctx.q_pow_rat(tau, &e);
                    }
                }
                acc
            };
            cross_terms.push((axis, nu, theta_big, theta_small, omega_small));
        }
    }

    // ---- Omega: double contour integral over C_+^2 ----
    let omega = {
        let s_inv_f: Vec<Vec<Float>> = (0..2)
            .map(|i| {
                (0..2)
                    .map(|j| ctx.float_from_rat(&s_inv[(i, j)]))
                    .collect()
            })
            .collect();
        let lam = super::min_eigen_lower_bound(&s_inv_f);
        let gamma = std::f64::consts::PI * tau.im().to_f64() * lam;
        let t_trunc = gaussian_tail_t(gamma, 16.0, qtol);
        let alpha_f: Vec<Float> = alpha.iter().map(|x| ctx.float_from_rat(x)).collect();
        let outer_path = c_plus_path(&[], t_trunc, ctx);
        let tol_f = ctx.float(qtol);
        let inner_tol = ctx.float(qtol / 4.0);
        let integrand_outer = |z1: &BigComplex| -> BigComplex {
            let inner_path = c_plus_path(&[], t_trunc, ctx);
            let f_inner = |z2: &BigComplex| -> BigComplex {
                // e(alpha . xi) q^{xi S^-1 xi / 2} / prod (1 - e(xi_i))
                let mut q = ctx.complex_zero();
                let xi = [z1.clone(), z2.clone()];
                for i in 0..2 {
                    for j in 0..2 {
                        q += (xi[i].clone() * xi[j].clone()).mul_float(&s_inv_f[i][j]);
                    }
                }
                let lin = z1.clone().mul_float(&alpha_f[0]) + z2.clone().mul_float(&alpha_f[1]);
                let arg = tau.clone() * q.mul_2exp(-1) + lin;
                let den1 = ctx.complex_one() - ctx.e_complex(z1);
                let den2 = ctx.complex_one() - ctx.e_complex(z2);
                ctx.e_complex(&arg) * den1.recip() * den2.recip()
            };
            inner_path
                .integrate(&f_inner, &inner_tol, ctx)
                .expect("inner contour")
        };
        outer_path
            .integrate(&integrand_outer, &tol_f, ctx)?
            .mul_float(&ctx.float(4.0))
    };

    let mut rhs = theta_star.clone() + omega.clone();
    for (_, _, big, small, om) in &cross_terms {
        rhs -= big.clone() + small.clone() * om.clone();
    }
    let residual = (lhs.clone() - rhs.clone()).abs_f64();
    Ok(Rank2Report {
        lhs,
        theta_star,
        cross_terms,
        omega,
        rhs,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;
    use crate::quasipoly::Weight;

    #[test]
    fn classical_theta_transformation() {
        // g = 1, Gaussian S = (1): residual of the classical Poisson identity.
        let ctx = Ctx::new(160);
        let g = QuasiPoly::one(1);
        let tau = ctx.complex(0.2, 0.8);
        let rep = poisson_modular_check(&g, &Kernel::Gaussian(RatMat::from_i64(&[&[1]])), &tau, 1e-14, &ctx)
            .unwrap();
        assert!(rep.residual < 1e-13, "residual {}", rep.residual);
    }

    #[test]
    fn periodic_class_transformation() {
        // g = 1_{1+3Z}(x), Gaussian kernel.
        let ctx = Ctx::new(160);
        let g = QuasiPoly::atom_univariate(1, 0, 1, 3, 0, Weight::Plain);
        let tau = ctx.complex(0.0, 0.6);
        let rep = poisson_modular_check(&g, &Kernel::Gaussian(RatMat::from_i64(&[&[1]])), &tau, 1e-12, &ctx)
            .unwrap();
        assert!(rep.residual < 1e-11, "residual {}", rep.residual);
    }

    #[test]
    fn polynomial_weight_transformation() {
        // g = x^2 1_{1+2Z}(x): exercises the derivative closure.
        let ctx = Ctx::new(160);
        let g = QuasiPoly::atom_univariate(1, 0, 1, 2, 2, Weight::Plain);
        let tau = ctx.complex(0.1, 0.9);
        let rep = poisson_modular_check(&g, &Kernel::Gaussian(RatMat::from_i64(&[&[1]])), &tau, 1e-11, &ctx)
            .unwrap();
        assert!(rep.residual < 1e-10, "residual {}", rep.residual);
    }

    #[test]
    fn sech_kernel_eisenstein_level4() {
        // E_2^{(4)}(tau/2) = (i/tau) E_2^{(4)}(-1/(2 tau)) at tau = i/3.
        let ctx = Ctx::new(160);
        let g = QuasiPoly::one(1);
        let tau = ctx.complex(0.0, 1.0 / 3.0);
        let rep = poisson_modular_check(&g, &Kernel::Sech, &tau, 1e-12, &ctx).unwrap();
        assert!(rep.residual < 1e-10, "residual {}", rep.residual);
    }

    #[test]
    fn rank2_diagonal_cross_terms_vanish() {
        // diagonal S: all Theta~_{i,nu} vanish because sgn(n) - sgn(n) = 0.
        let ctx = Ctx::new(128);
        let tau = ctx.complex(0.1, 0.7);
        let rep = rank2_modular_check(
            [[2, 0], [0, 2]],
            [rat(1, 3), rat(1, 5)],
            &tau,
            1e-8,
            &ctx,
        )
        .unwrap();
        for (_, _, big, _, _) in &rep.cross_terms {
            assert!(big.abs_f64() < 1e-20);
        }
        assert!(rep.residual < 1e-8, "residual {}", rep.residual);
    }
}
