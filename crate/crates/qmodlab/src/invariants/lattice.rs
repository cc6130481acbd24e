//! Exact lattice point enumeration inside ellipsoids of positive definite
//! rational quadratic forms (a Fincke-Pohst walk with certified bounds).
//!
//! Given a positive definite symmetric rational `Q`, a rational shift `c`,
//! and a bound `C`, enumerates every `z in Z^r` with
//! `(z + c)^T Q (z + c) <= C`. The form is LDL-decomposed exactly; at each
//! level the admissible coordinate range is an interval whose integer
//! endpoints are found by exact rational comparisons, so the enumeration is
//! complete by construction (the completeness certificate of the q-series).

use crate::numeric::Rat;
use crate::ratmat::RatMat;

/// Exact LDL decomposition of a positive definite matrix:
/// `Q = L D L^T` with unit lower triangular `L` and positive diagonal `D`,
/// so `x^T Q x = sum_i d_i (x_i + sum_{j>i} L_{ji}... )`.
struct Ldl {
    d: Vec<Rat>,
    /// `l[i][j]` for `j < i`: the multiplier L_{i,j}.
    l: Vec<Vec<Rat>>,
}

fn ldl(q: &RatMat) -> Ldl {
    let n = q.nrows();
    let mut a = q.clone();
    let mut d = Vec::with_capacity(n);
    let mut l = vec![vec![Rat::new(); n]; n];
    for i in 0..n {
        let di = a[(i, i)].clone();
        assert!(
            di.cmp0() == std::cmp::Ordering::Greater,
            "form not positive definite"
        );
        for j in i..n {
            l[j][i] = a[(j, i)].clone() / &di;
        }
        for r in i + 1..n {
            for c in i + 1..=r {
                let s = l[r][i].clone() * &a[(i, c)];
                a[(r, c)] -= s.clone();
                if r != c {
                    let v = a[(r, c)].clone();
                    a[(c, r)] = v;
                }
            }
        }
        d.push(di);
    }
    Ldl { d, l }
}

/// All integer points `z` with `(z + c)^T Q (z + c) <= bound`, together with
/// the exact form value. `Q` must be positive definite.
pub fn enumerate_ellipsoid(q: &RatMat, c: &[Rat], bound: &Rat) -> Vec<(Vec<i64>, Rat)> {
    let n = q.nrows();
    assert_eq!(c.len(), n);
    if bound.cmp0() == std::cmp::Ordering::Less {
        return Vec::new();
    }
    let dec = ldl(q);
    // Standard FP recursion from the last coordinate down: with y = L^T(z+c),
    // the form is sum d_i y_i^2 and y_i = (z_i + c_i) + sum_{j>i} L_{ji}(z_j + c_j).
    let mut out = Vec::new();
    let mut z = vec![0i64; n];
    walk(
        &dec,
        c,
        bound,
        n,
        &mut z,
        &Rat::new(),
        &mut out,
    );
    out
}

fn walk(
    dec: &Ldl,
    c: &[Rat],
    remaining: &Rat,
    level: usize,
    z: &mut Vec<i64>,
    _acc: &Rat,
    out: &mut Vec<(Vec<i64>, Rat)>,
) {
    let n = c.len();
    if level == 0 {
        // compute the exact value: sum_i d_i y_i^2 (recomputed once per point)
        let mut val = Rat::new();
        for i in 0..n {
            let mut y = Rat::from(z[i]) + &c[i];
            for j in i + 1..n {
                y += dec.l[j][i].clone() * (Rat::from(z[j]) + &c[j]);
            }
            val += dec.d[i].clone() * y.clone() * y;
        }
        out.push((z.clone(), val));
        return;
    }
    let i = level - 1;
    // u = c_i + sum_{j>i} L_{ji} (z_j + c_j); admissible z_i satisfy
    // d_i (z_i + u)^2 <= remaining.
    let mut u = c[i].clone();
    for j in i + 1..n {
        u += dec.l[j][i].clone() * (Rat::from(z[j]) + &c[j]);
    }
    let ok = |zi: i64| -> Option<Rat> {
        let y = Rat::from(zi) + &u;
        let v = dec.d[i].clone() * y.clone() * y;
        if v <= *remaining {
            Some(v)
        } else {
            None
        }
    };
    // center of the interval
    let center = {
        let negu = -u.clone();
        let f = negu.clone().floor();
        let frac = negu - &f;
        let fi = f.numer().to_i64().expect("center fits i64");
        if frac > crate::numeric::rat(1, 2) {
            fi + 1
        } else {
            fi
        }
    };
    // If the nearest integer fails, the whole interval is empty (its length
    // is < 1 on each side of the failing nearest point).
    if ok(center).is_none() {
        return;
    }
    let mut zi = center;
    while let Some(v) = ok(zi) {
        z[i] = zi;
        let rem = remaining.clone() - v;
        walk(dec, c, &rem, i, z, &Rat::new(), out);
        zi += 1;
    }
    zi = center - 1;
    while let Some(v) = ok(zi) {
        z[i] = zi;
        let rem = remaining.clone() - v;
        walk(dec, c, &rem, i, z, &Rat::new(), out);
        zi -= 1;
    }
    z[i] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{rat, rat_int};

    #[test]
    fn counts_match_brute_force() {
        // Q = [[2,1],[1,2]], shift (1/3, -1/5), bound 20
        let q = RatMat::from_i64(&[&[2, 1], &[1, 2]]);
        let c = vec![rat(1, 3), rat(-1, 5)];
        let bound = rat_int(20);
        let pts = enumerate_ellipsoid(&q, &c, &bound);
        let mut brute = Vec::new();
        for x in -20..=20i64 {
            for y in -20..=20i64 {
                let vx = Rat::from(x) + &c[0];
                let vy = Rat::from(y) + &c[1];
                let val = Rat::from(2) * vx.clone() * &vx
                    + Rat::from(2) * vx.clone() * &vy
                    + Rat::from(2) * vy.clone() * &vy;
                if val <= bound {
                    brute.push((vec![x, y], val));
                }
            }
        }
        assert_eq!(pts.len(), brute.len());
        let mut a: Vec<_> = pts.iter().map(|(z, _)| z.clone()).collect();
        let mut b: Vec<_> = brute.iter().map(|(z, _)| z.clone()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        // exact values agree
        for (z, v) in &pts {
            let bv = brute.iter().find(|(bz, _)| bz == z).unwrap();
            assert_eq!(*v, bv.1);
        }
    }

    #[test]
    fn empty_when_bound_too_small() {
        let q = RatMat::from_i64(&[&[1]]);
        let c = vec![rat(1, 2)];
        let pts = enumerate_ellipsoid(&q, &c, &rat(1, 5));
        assert!(pts.is_empty());
        // both z = 0 and z = -1 land exactly on the boundary (1/2)^2 = 1/4
        let pts2 = enumerate_ellipsoid(&q, &c, &rat(1, 4));
        assert_eq!(pts2.len(), 2);
    }
}
