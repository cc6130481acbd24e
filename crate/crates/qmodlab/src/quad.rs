//! Adaptive complex-line quadrature at arbitrary precision.
//!
//! Gauss-Legendre nodes are generated at the working precision by Newton
//! iteration on Legendre polynomials and cached per (order, precision).
//! Error estimation pairs an n-point rule with a 2n-point rule on each
//! panel; panels split until the difference meets the requested tolerance.

use crate::numeric::{BigComplex, Ctx};
use rug::Float;
use std::collections::HashMap;
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("adaptive budget exhausted: estimated error {est:.3e} > tol {tol:.3e}")]
    NoConvergence { est: f64, tol: f64 },
    #[error("integration path runs within {dist:.3e} of a pole")]
    PoleOnPath { dist: f64 },
}

/// Gauss-Legendre rule on [-1, 1]: nodes (positive half; symmetric) and
/// weights at a given precision.
#[derive(Clone)]
struct GlRule {
    nodes: Vec<Float>,
    weights: Vec<Float>,
}

static RULE_CACHE: Mutex<Option<HashMap<(usize, u32), GlRule>>> = Mutex::new(None);

fn legendre_value_deriv(n: usize, x: &Float, prec: u32) -> (Float, Float) {
    // recurrence: (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}
    let mut p0 = Float::with_val(prec, 1);
    let mut p1 = x.clone();
    if n == 0 {
        return (p0, Float::new(prec));
    }
    for k in 1..n {
        let p2 = (Float::with_val(prec, 2 * k as u32 + 1) * x * &p1
            - Float::with_val(prec, k as u32) * &p0)
            / Float::with_val(prec, k as u32 + 1);
        p0 = p1;
        p1 = p2;
    }
    // P'_n(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
    let num = Float::with_val(prec, n as u32) * (x.clone() * &p1 - &p0);
    let den = x.clone() * x - 1u32;
    (p1.clone(), num / den)
}

fn gl_rule(n: usize, prec: u32) -> GlRule {
    {
        let cache = RULE_CACHE.lock().unwrap();
        if let Some(map) = cache.as_ref() {
            if let Some(r) = map.get(&(n, prec)) {
                return r.clone();
            }
        }
    }
    let work = prec + 16;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let pi = Float::with_val(work, rug::float::Constant::Pi);
    for i in 0..n {
        // initial guess: cos(pi (i + 3/4)/(n + 1/2))
        let arg = pi.clone() * (Float::with_val(work, i as u32) + Float::with_val(work, 0.75))
            / (Float::with_val(work, n as u32) + Float::with_val(work, 0.5));
        let mut x = arg.cos();
        // Newton iterations; quadratic convergence, ~log2(prec) steps
        let iters = (32 - (work.leading_zeros())) as usize + 6;
        for _ in 0..iters {
            let (p, dp) = legendre_value_deriv(n, &x, work);
            x -= p / dp;
        }
        let (_, dp) = legendre_value_deriv(n, &x, work);
        let w = Float::with_val(work, 2)
            / ((Float::with_val(work, 1) - x.clone() * &x) * dp.clone() * dp);
        nodes.push(Float::with_val(prec, &x));
        weights.push(Float::with_val(prec, &w));
    }
    let rule = GlRule { nodes, weights };
    let mut cache = RULE_CACHE.lock().unwrap();
    cache
        .get_or_insert_with(HashMap::new)
        .insert((n, prec), rule.clone());
    rule
}

/// One smooth parametrized piece of an integration path: `z(s)` for
/// `s in [0, 1]` with derivative `dz(s)`.
pub trait PathPiece: Sync {
    fn z(&self, s: &Float, ctx: &Ctx) -> BigComplex;
    fn dz(&self, s: &Float, ctx: &Ctx) -> BigComplex;
}

/// Straight segment from `a` to `b`.
pub struct Segment {
    pub a: BigComplex,
    pub b: BigComplex,
}

impl PathPiece for Segment {
    fn z(&self, s: &Float, _ctx: &Ctx) -> BigComplex {
        self.a.clone() + (self.b.clone() - self.a.clone()).mul_float(s)
    }
    fn dz(&self, _s: &Float, _ctx: &Ctx) -> BigComplex {
        self.b.clone() - self.a.clone()
    }
}

/// Circular arc `center + radius e^{i((1-s) th0 + s th1)}`.
pub struct Arc {
    pub center: BigComplex,
    pub radius: Float,
    pub th0: Float,
    pub th1: Float,
}

impl PathPiece for Arc {
    fn z(&self, s: &Float, ctx: &Ctx) -> BigComplex {
        let th = self.th0.clone() + (self.th1.clone() - &self.th0) * s;
        let (sin, cos) = th.sin_cos(Float::new(ctx.prec()));
        self.center.clone() + BigComplex::new(cos * &self.radius, sin * &self.radius)
    }
    fn dz(&self, s: &Float, ctx: &Ctx) -> BigComplex {
        let dth = self.th1.clone() - &self.th0;
        let th = self.th0.clone() + dth.clone() * s;
        let (sin, cos) = th.sin_cos(Float::new(ctx.prec()));
        BigComplex::new(cos * &self.radius, sin * &self.radius)
            .mul_i()
            .mul_float(&dth)
    }
}

fn gl_integrate<F>(
    f: &F,
    piece: &dyn PathPiece,
    s0: &Float,
    s1: &Float,
    n: usize,
    ctx: &Ctx,
) -> BigComplex
where
    F: Fn(&BigComplex) -> BigComplex,
{
    let rule = gl_rule(n, ctx.prec());
    let half = (s1.clone() - s0) / 2u32;
    let mid = (s0.clone() + s1) / 2u32;
    let mut acc = ctx.complex_zero();
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let s = mid.clone() + half.clone() * x;
        let z = piece.z(&s, ctx);
        let dz = piece.dz(&s, ctx);
        acc += f(&z) * dz.mul_float(w);
    }
    acc.mul_float(&half)
}

/// Adaptive integration of `f` along one path piece to absolute tolerance
/// `tol`, by 15/30-point Gauss-Legendre pairs with bisection.
pub fn integrate_piece<F>(
    f: &F,
    piece: &dyn PathPiece,
    tol: &Float,
    ctx: &Ctx,
) -> Result<BigComplex, QuadError>
where
    F: Fn(&BigComplex) -> BigComplex,
{
    struct Panel {
        s0: Float,
        s1: Float,
        coarse: BigComplex,
        depth: u32,
    }
    let zero = Float::new(ctx.prec());
    let one = Float::with_val(ctx.prec(), 1);
    let coarse0 = gl_integrate(f, piece, &zero, &one, 15, ctx);
    let mut stack = vec![Panel {
        s0: zero,
        s1: one,
        coarse: coarse0,
        depth: 0,
    }];
    let mut total = ctx.complex_zero();
    let mut err_acc = Float::new(ctx.prec());
    while let Some(p) = stack.pop() {
        let fine = gl_integrate(f, piece, &p.s0, &p.s1, 30, ctx);
        let err = (fine.clone() - p.coarse.clone()).abs();
        // local tolerance scaled by panel length
        let frac = p.s1.clone() - &p.s0;
        let local_tol = tol.clone() * frac;
        if err <= local_tol || p.depth >= 40 {
            if p.depth >= 40 && err > local_tol {
                return Err(QuadError::NoConvergence {
                    est: err.to_f64(),
                    tol: tol.to_f64(),
                });
            }
            total += fine;
            err_acc += err;
            continue;
        }
        let mid = (p.s0.clone() + &p.s1) / 2u32;
        let left = gl_integrate(f, piece, &p.s0, &mid, 15, ctx);
        let right = gl_integrate(f, piece, &mid, &p.s1, 15, ctx);
        stack.push(Panel {
            s0: p.s0,
            s1: mid.clone(),
            coarse: left,
            depth: p.depth + 1,
        });
        stack.push(Panel {
            s0: mid,
            s1: p.s1,
            coarse: right,
            depth: p.depth + 1,
        });
    }
    Ok(total)
}

/// A parametrized integration path made of smooth pieces.
pub struct Path {
    pub pieces: Vec<Box<dyn PathPiece>>,
}

impl Path {
    pub fn integrate<F>(&self, f: &F, tol: &Float, ctx: &Ctx) -> Result<BigComplex, QuadError>
    where
        F: Fn(&BigComplex) -> BigComplex,
    {
        let mut acc = ctx.complex_zero();
        let per_piece = tol.clone() / Float::with_val(ctx.prec(), self.pieces.len() as u32);
        for p in &self.pieces {
            acc += integrate_piece(f, p.as_ref(), &per_piece, ctx)?;
        }
        Ok(acc)
    }

    /// Minimum distance from the path to any of the given points, sampled
    /// densely along each piece (poles are real in our applications, so a
    /// sampling check at 128 points per piece is a sound certificate up to
    /// the sampling density; callers choose geometry so poles stay clear).
    pub fn min_distance_to(&self, points: &[BigComplex], ctx: &Ctx) -> Float {
        let mut best: Option<Float> = None;
        for piece in &self.pieces {
            for i in 0..=128u32 {
                let s = Float::with_val(ctx.prec(), i) / Float::with_val(ctx.prec(), 128);
                let z = piece.z(&s, ctx);
                for p in points {
                    let d = (z.clone() - p.clone()).abs();
                    best = Some(match best {
                        None => d,
                        Some(b) => {
                            if d < b {
                                d
                            } else {
                                b
                            }
                        }
                    });
                }
            }
        }
        best.unwrap_or_else(|| Float::with_val(ctx.prec(), 1e300))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_rule_integrates_polynomials() {
        let ctx = Ctx::new(128);
        // int_{-1}^{1} x^8 dx = 2/9 with a 15-point rule (exact to degree 29)
        let seg = Segment {
            a: ctx.complex(-1.0, 0.0),
            b: ctx.complex(1.0, 0.0),
        };
        let f = |z: &BigComplex| z.powi(8);
        let v = gl_integrate(&f, &seg, &ctx.float(0.0), &ctx.float(1.0), 15, &ctx);
        let want = ctx.float(2.0) / ctx.float(9.0);
        assert!((v.re().clone() - want).abs() < ctx.eps(24));
    }

    #[test]
    fn adaptive_gaussian_integral() {
        // int_R e^{-pi x^2} dx = 1, truncated at |x| = 8 (tail < 1e-80).
        let ctx = Ctx::new(160);
        let path = Path {
            pieces: vec![Box::new(Segment {
                a: ctx.complex(-8.0, 0.0),
                b: ctx.complex(8.0, 0.0),
            })],
        };
        let pi = ctx.pi();
        let f = move |z: &BigComplex| {
            let z2 = z.clone() * z.clone();
            (-z2.mul_float(&pi)).exp()
        };
        let tol = ctx.float(1e-40);
        let v = path.integrate(&f, &tol, &ctx).unwrap();
        assert!(v.sub_f64(1.0, 0.0).abs_f64() < 1e-38);
    }

    #[test]
    fn arc_plus_segments_close_contour() {
        // Cauchy: integral of 1/z around a closed square-ish path around 0
        // equals 2 pi i; built from 4 segments.
        let ctx = Ctx::new(128);
        let c = [
            ctx.complex(1.0, -1.0),
            ctx.complex(1.0, 1.0),
            ctx.complex(-1.0, 1.0),
            ctx.complex(-1.0, -1.0),
        ];
        let mut pieces: Vec<Box<dyn PathPiece>> = Vec::new();
        for i in 0..4 {
            pieces.push(Box::new(Segment {
                a: c[i].clone(),
                b: c[(i + 1) % 4].clone(),
            }));
        }
        let path = Path { pieces };
        let f = |z: &BigComplex| z.recip();
        let tol = ctx.float(1e-30);
        let v = path.integrate(&f, &tol, &ctx).unwrap();
        let want = BigComplex::new(ctx.float(0.0), ctx.pi() * 2u32);
        assert!((v - want).abs_f64() < 1e-28);
    }

    #[test]
    fn arc_parametrization() {
        // full circle of radius 2 around i: integral of dz equals 0,
        // integral of 1/(z - i) equals 2 pi i.
        let ctx = Ctx::new(128);
        let arc = Arc {
            center: ctx.complex(0.0, 1.0),
            radius: ctx.float(2.0),
            th0: ctx.float(0.0),
            th1: ctx.pi() * 2u32,
        };
        let path = Path {
            pieces: vec![Box::new(arc)],
        };
        let center = ctx.complex(0.0, 1.0);
        let f = move |z: &BigComplex| (z.clone() - center.clone()).recip();
        let tol = ctx.float(1e-30);
        let v = path.integrate(&f, &tol, &ctx).unwrap();
        let want = BigComplex::new(ctx.float(0.0), ctx.pi() * 2u32);
        assert!((v - want).abs_f64() < 1e-28);
    }
}
