//! The signed integration paths `C_+`, `C_-` and the rotated path `C_eps`.
//!
//! `C_+` runs from `-infinity - i eps` to `+infinity + i eps`, crossing the
//! real axis once, strictly between the largest negative pole and 0; poles
//! `>= 0` lie below the path and poles `< 0` above it. `C_-` is its mirror
//! image. `C_eps(theta)` replaces the horizontal tails by rays at angles
//! `pi + theta` and `theta` joined by an arc of radius `rho` above the
//! origin; it is the path used to continue the Gaussian contour integrals
//! in `tau` off the upper half plane.

use crate::numeric::{BigComplex, Ctx};
use crate::quad::{Arc, Path, Segment};
use rug::Float;

/// Crossing point and height for a signed path avoiding the given real
/// poles: crossing strictly between the largest pole < 0 and 0.
fn crossing_geometry(poles: &[f64]) -> (f64, f64) {
    let below = poles
        .iter()
        .copied()
        .filter(|&p| p < -1e-12)
        .fold(-1.0f64, f64::max);
    let c = below / 2.0;
    // keep clear of both the pole below and 0
    let gap = (-c).min(c - below);
    let eps = (gap / 2.0).min(0.25);
    (c, eps)
}

/// `C_+` truncated at `|Re| = t`: three straight segments.
pub fn c_plus_path(poles: &[f64], t: f64, ctx: &Ctx) -> Path {
    let (c, eps) = crossing_geometry(poles);
    Path {
        pieces: vec![
            Box::new(Segment {
                a: ctx.complex(-t, -eps),
                b: ctx.complex(c, -eps),
            }),
            Box::new(Segment {
                a: ctx.complex(c, -eps),
                b: ctx.complex(c, eps),
            }),
            Box::new(Segment {
                a: ctx.complex(c, eps),
                b: ctx.complex(t, eps),
            }),
        ],
    }
}

/// `C_-` truncated at `|Re| = t` (mirror image of `C_+`).
pub fn c_minus_path(poles: &[f64], t: f64, ctx: &Ctx) -> Path {
    let (c, eps) = crossing_geometry(poles);
    Path {
        pieces: vec![
            Box::new(Segment {
                a: ctx.complex(-t, eps),
                b: ctx.complex(c, eps),
            }),
            Box::new(Segment {
                a: ctx.complex(c, eps),
                b: ctx.complex(c, -eps),
            }),
            Box::new(Segment {
                a: ctx.complex(c, -eps),
                b: ctx.complex(t, -eps),
            }),
        ],
    }
}

/// Rotated path `C_eps(theta)`: incoming ray at angle `pi + theta` down to
/// radius `rho`, an arc passing above the origin, outgoing ray at angle
/// `theta`, truncated at radius `t`.
///
/// Angles and ray directions are computed at the working precision so that
/// the ray endpoints coincide with the arc endpoints exactly (up to one
/// rounding); junction gaps would otherwise contribute O(gap) errors to the
/// contour integral.
pub fn c_eps_path(theta: f64, rho: f64, t: f64, ctx: &Ctx) -> Path {
    let prec = ctx.prec();
    let th = ctx.float(theta);
    let (sin_th, cos_th) = th.clone().sin_cos(Float::new(prec));
    let dir_out = BigComplex::new(cos_th, sin_th);
    let dir_in = -dir_out.clone();
    let th0 = ctx.pi() + &th;
    Path {
        pieces: vec![
            Box::new(Segment {
                a: dir_in.mul_float(&ctx.float(t)),
                b: dir_in.mul_float(&ctx.float(rho)),
            }),
            Box::new(Arc {
                center: ctx.complex_zero(),
                radius: ctx.float(rho),
                th0,
                th1: th,
            }),
            Box::new(Segment {
                a: dir_out.mul_float(&ctx.float(rho)),
                b: dir_out.mul_float(&ctx.float(t)),
            }),
        ],
    }
}

/// Truncation radius `T` such that `M exp(-gamma T^2) / (2 gamma T) < tol`:
/// the tail bound of a Gaussian-decaying contour integrand with decay rate
/// `gamma` and prefactor bound `M`.
pub fn gaussian_tail_t(gamma: f64, m: f64, tol: f64) -> f64 {
    assert!(gamma > 0.0, "decay certificate requires gamma > 0");
    let mut t = 2.0f64;
    loop {
        let tail = m * (-gamma * t * t).exp() / (2.0 * gamma * t);
        if tail < tol {
            return t;
        }
        t += 0.5;
        assert!(t < 1e4, "tail certificate does not close");
    }
}

/// `2 int_{path} g(xi) dxi / (1 - e(xi + shift))` with an absolute tolerance.
pub fn signed_pole_integral<G>(
    g: &G,
    path: &Path,
    shift: &BigComplex,
    tol: &Float,
    ctx: &Ctx,
) -> Result<BigComplex, crate::quad::QuadError>
where
    G: Fn(&BigComplex) -> BigComplex,
{
    let f = |z: &BigComplex| {
        let den = ctx.complex_one() - ctx.e_complex(&(z.clone() + shift.clone()));
        g(z) * den.recip()
    };
    Ok(path.integrate(&f, tol, ctx)?.mul_float(&ctx.float(2.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Ctx;

    /// int_{C_+} e^{-pi xi^2}/(1 - e(xi)) dxi against the residue-shifted
    /// real-line value: along R + i eps the integrand has no poles, and
    /// C_+ differs from R + i eps by the residue at 0:
    ///   int_{C_+} = int_{R + i eps} + 2 pi i Res_{xi=0} (pole passes from
    ///   above the line to below the path).
    #[test]
    fn c_plus_vs_shifted_line() {
        let ctx = Ctx::new(128);
        let pi = ctx.pi();
        let g = move |z: &BigComplex| {
            let z2 = z.clone() * z.clone();
            (-z2.mul_float(&pi)).exp()
        };
        let t = gaussian_tail_t(std::f64::consts::PI, 2.0, 1e-32);
        let path = c_plus_path(&[], t, &ctx);
        let tol = ctx.float(1e-30);
        let f = |z: &BigComplex| {
            let den = ctx.complex_one() - ctx.e_complex(z);
            g(z) * den.recip()
        };
        let on_cplus = path.integrate(&f, &tol, &ctx).unwrap();
        // shifted line R + i*0.3
        let line = Path {
            pieces: vec![Box::new(crate::quad::Segment {
                a: ctx.complex(-t, 0.3),
                b: ctx.complex(t, 0.3),
            })],
        };
        let on_line = line.integrate(&f, &tol, &ctx).unwrap();
        // Both paths pass above the poles at n >= 0. At negative integers
        // the line passes above while C_+ passes below, and
        // (above) - (below) = -2 pi i Res, with
        // Res_{xi=n}[g/(1 - e)] = -g(n)/(2 pi i):
        //   int_{C_+} = int_{line} + 2 pi i sum_{n<0} Res = int_{line} - sum_{n<0} g(n).
        let mut shift = ctx.complex_zero();
        let mut n = -1i64;
        loop {
            let val = g(&ctx.complex(n as f64, 0.0));
            if val.abs_f64() < 1e-36 {
                break;
            }
            shift += val;
            n -= 1;
        }
        let want = on_line - shift;
        assert!(
            (on_cplus.clone() - want.clone()).abs_f64() < 1e-27,
            "got {on_cplus}, want {want}"
        );
    }

    /// Cauchy: results for eps and eps/2 crossings agree.
    #[test]
    fn shift_invariance() {
        let ctx = Ctx::new(128);
        let pi = ctx.pi();
        let f = |z: &BigComplex| {
            let z2 = z.clone() * z.clone();
            let den = ctx.complex_one() - ctx.e_complex(z);
            (-z2.mul_float(&pi)).exp() * den.recip()
        };
        let t = 7.0;
        let tol = ctx.float(1e-30);
        // same geometry, different synthetic pole hints to vary (c, eps)
        let p1 = c_plus_path(&[], t, &ctx);
        let p2 = c_plus_path(&[-0.5], t, &ctx);
        let v1 = p1.integrate(&f, &tol, &ctx).unwrap();
        let v2 = p2.integrate(&f, &tol, &ctx).unwrap();
        assert!((v1 - v2).abs_f64() < 1e-27);
    }

    /// Analytic continuation consistency: the Gaussian contour integral at
    /// tau = i over C_+ equals the same integral over C_eps(angle), per the
    /// holomorphic continuation of both in tau.
    #[test]
    fn c_plus_vs_c_eps() {
        let ctx = Ctx::new(128);
        let tau = ctx.complex(0.0, 1.0);
        let q_half = move |z: &BigComplex, ctx: &Ctx| -> BigComplex {
            // q^{xi^2/2}
            let z2 = z.clone() * z.clone();
            ctx.e_complex(&(tau.clone() * z2.mul_2exp(-1)))
        };
        let f = |z: &BigComplex| {
            let den = ctx.complex_one() - ctx.e_complex(z);
            q_half(z, &ctx) * den.recip()
        };
        let t = 8.0;
        let tol = ctx.float(1e-28);
        let a = c_plus_path(&[], t, &ctx).integrate(&f, &tol, &ctx).unwrap();
        let b = c_eps_path(0.25, 0.4, t * 1.3, &ctx)
            .integrate(&f, &tol, &ctx)
            .unwrap();
        assert!((a - b).abs_f64() < 1e-24);
    }
}
