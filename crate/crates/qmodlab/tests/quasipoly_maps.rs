//! Oracle tests for the coefficient maps between cyclotomic rational
//! functions and quasi-polynomials: expansion examples, averaging
//! identities, round trips, involution commutation, and the degree/order
//! identity. Everything here is exact.

use qmodlab::numeric::{rat, rat_int, Rat};
use qmodlab::quasipoly::{CycRatFn, QuasiPoly, Weight};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn box_points(r: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut pts = vec![Vec::new()];
    for _ in 0..r {
        let mut next = Vec::new();
        for p in &pts {
            for x in -radius..=radius {
                let mut q = p.clone();
                q.push(x);
                next.push(q);
            }
        }
        pts = next;
    }
    pts
}

fn random_crf(rng: &mut ChaCha8Rng, r: usize) -> CycRatFn {
    let nterms = rng.gen_range(1..=3);
    let mut acc = CycRatFn::zero(r);
    for _ in 0..nterms {
        let coef = rat(rng.gen_range(-5i64..=5).max(1), rng.gen_range(1..=3));
        let mut term = CycRatFn::one(r).scale(&coef);
        for v in 0..r {
            let f = if rng.gen_bool(0.3) {
                CycRatFn::monomial(
                    &(0..r)
                        .map(|i| if i == v { rng.gen_range(-4..=4) } else { 0 })
                        .collect::<Vec<_>>(),
                )
            } else {
                let n = rng.gen_range(1..=3);
                let a = rng.gen_range(-4..=5);
                let mult = if rng.gen_bool(0.25) { 2 } else { 1 };
                CycRatFn::cyclo_univariate_mult(r, v, a, n, mult)
            };
            term = term.mul(&f).unwrap();
        }
        acc = acc.add(&term);
    }
    acc
}

#[test]
fn coe_geometric_examples() {
    // z/(1-z): coefficient of z^3 is 1.
    let g = CycRatFn::cyclo_univariate(1, 0, 1, 1);
    assert_eq!(g.coe_point(&[3]).unwrap(), rat_int(1));
    assert_eq!(g.coe_point(&[0]).unwrap(), rat_int(0));

    // 1/(1-z)^2: coefficient of z^4 is 5, matching the brute-force Cauchy
    // product of two geometric series.
    let g2 = CycRatFn::cyclo_univariate_mult(1, 0, 0, 1, 2);
    let brute: i64 = (0..=4).map(|_| 1i64).sum(); // sum_{i+j=4} 1 = 5
    assert_eq!(g2.coe_point(&[4]).unwrap(), Rat::from(brute));
    assert_eq!(brute, 5);

    // z^2/(1-z^3): support 2 + 3Z_{>=0}.
    let g3 = CycRatFn::cyclo_univariate(1, 0, 2, 3);
    assert_eq!(g3.coe_point(&[5]).unwrap(), rat_int(1));
    assert_eq!(g3.coe_point(&[4]).unwrap(), rat_int(0));
}

#[test]
fn coe_tilde_basis_example() {
    // G = z/(1-z^2) -> (1/2) sgn(x-1) 1_{1+2Z}(x), false kind.
    let g = CycRatFn::cyclo_univariate(1, 0, 1, 2);
    let gt = g.coe_tilde().unwrap();
    for x in -9..=9i64 {
        let want = if x.rem_euclid(2) == 1 {
            if x >= 1 {
                rat(1, 2)
            } else {
                rat(-1, 2)
            }
        } else {
            Rat::new()
        };
        assert_eq!(gt.eval(&[x]), want, "x = {x}");
    }
}

#[test]
fn coe_maps_of_constant_one() {
    // G = 1: singleton at 0 under both coe and coe_tilde.
    let g = CycRatFn::one(1);
    let c = g.coe().unwrap();
    let t = g.coe_tilde().unwrap();
    let s = QuasiPoly::singleton(&[0]);
    assert_eq!(c, s);
    assert_eq!(t, s);
}

#[test]
fn coe_bar_of_zd_derivative() {
    // G = (z d/dz)[z/(1 - z^2)] -> full kind (1/2) x 1_{1+2Z}(x),
    // cross-checked against the pointwise averaging (principal value) oracle
    // 2^{-1} sum_e coe[iota_e G](e x).
    let base = QuasiPoly::atom_univariate(1, 0, 1, 2, 1, Weight::Half);
    // (z d/dz) of z/(1-z^2) corresponds to x * coe, so invert that:
    let g = CycRatFn::coe_inverse(&base).unwrap();
    let gb = g.coe_bar().unwrap();
    for x in -9..=9i64 {
        let want = if x.rem_euclid(2) == 1 {
            rat(1, 2) * Rat::from(x)
        } else {
            Rat::new()
        };
        assert_eq!(gb.eval(&[x]), want, "x = {x}");
        // averaging oracle
        let plus = g.coe_point(&[x]).unwrap();
        let minus = g.involution(&[-1]).coe_point(&[-x]).unwrap();
        assert_eq!((plus - minus) / rat_int(2), want);
    }
}

#[test]
fn involution_basis_rules() {
    // iota_-(z^a/(1-z^N)) = -z^{N-a}/(1-z^N).
    let g = CycRatFn::cyclo_univariate(1, 0, 2, 5);
    let gi = g.involution(&[-1]);
    let want = CycRatFn::cyclo_univariate(1, 0, 3, 5).neg();
    assert!(gi.eq_as_function(&want).unwrap());
    // iota_+ is the identity.
    let gp = g.involution(&[1]);
    assert!(gp.eq_as_function(&g).unwrap());
}

#[test]
fn involution_commutes_with_coe_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for r in 1..=2usize {
        for _ in 0..8 {
            let g = random_crf(&mut rng, r);
            for mask in 0..(1u32 << r) {
                let e: Vec<i32> = (0..r)
                    .map(|i| if mask & (1 << i) != 0 { -1 } else { 1 })
                    .collect();
                let ge = g.involution(&e);
                // coe(iota_e G) = iota_e coe(G) (and same for bar/tilde),
                // checked pointwise on a box.
                let lhs_c = ge.coe().unwrap();
                let rhs_c = g.coe().unwrap().involution_partial(&e).unwrap();
                assert_eq!(lhs_c, rhs_c);
                let lhs_b = ge.coe_bar().unwrap();
                let rhs_b = g.coe_bar().unwrap().involution_full(&e);
                assert_eq!(lhs_b, rhs_b);
                let lhs_t = ge.coe_tilde().unwrap();
                let rhs_t = g.coe_tilde().unwrap().involution_false(&e);
                assert_eq!(lhs_t, rhs_t);
            }
        }
    }
}

#[test]
fn averaging_identities_pointwise() {
    // coe_bar[G](x) = 2^{-r} sum_e (prod e) coe[iota_e G](ex), and the
    // sgn-free variant for coe_tilde, pointwise on boxes of radius 10.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for r in 1..=3usize {
        let radius = if r == 3 { 4 } else { 10 };
        for _ in 0..4 {
            let g = random_crf(&mut rng, r);
            let bar = g.coe_bar().unwrap();
            let tilde = g.coe_tilde().unwrap();
            for pt in box_points(r, radius) {
                let mut acc_bar = Rat::new();
                let mut acc_tilde = Rat::new();
                for mask in 0..(1u32 << r) {
                    let e: Vec<i32> = (0..r)
                        .map(|i| if mask & (1 << i) != 0 { -1 } else { 1 })
                        .collect();
                    let sgn: i64 = e.iter().map(|&x| x as i64).product();
                    let ept: Vec<i64> = (0..r).map(|i| e[i] as i64 * pt[i]).collect();
                    let v = g.involution(&e).coe_point(&ept).unwrap();
                    acc_bar += v.clone() * Rat::from(sgn);
                    acc_tilde += v;
                }
                let scale = Rat::from((1, 1i64 << r));
                assert_eq!(bar.eval(&pt), acc_bar * &scale, "bar at {pt:?}");
                assert_eq!(tilde.eval(&pt), acc_tilde * &scale, "tilde at {pt:?}");
            }
        }
    }
}

#[test]
fn coe_roundtrip_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for r in 1..=2usize {
        for _ in 0..10 {
            let g = random_crf(&mut rng, r);
            let q = g.coe().unwrap();
            let back = CycRatFn::coe_inverse(&q).unwrap();
            assert!(back.eq_as_function(&g).unwrap());
        }
    }
}

#[test]
fn coe_tilde_inverse_examples() {
    // (1/2) sgn(x) 1_Z(x)  ->  1/(1-z), checked pointwise on [-9, 9].
    // (With the sgn(0) = +1 convention, sgn(0)/2 = 1/2 forces the value 1/2
    // at zero, and coe_tilde[1/(1-z)] matches it exactly; z/(1-z) - 1/2
    // would take the value -1 there.)
    let half_sgn = QuasiPoly::atom_univariate(1, 0, 0, 1, 0, Weight::Sgn).scale(&rat(1, 2));
    let g = CycRatFn::coe_tilde_inverse(&half_sgn).unwrap();
    let want = CycRatFn::cyclo_univariate(1, 0, 0, 1);
    assert!(g.eq_as_function(&want).unwrap());
    let gt = g.coe_tilde().unwrap();
    for x in -9..=9i64 {
        assert_eq!(gt.eval(&[x]), half_sgn.eval(&[x]));
    }

    // Finite support {0 -> 1}: G = 1.
    let s = QuasiPoly::singleton(&[0]);
    let g1 = CycRatFn::coe_tilde_inverse(&s).unwrap();
    assert!(g1.eq_as_function(&CycRatFn::one(1)).unwrap());
}

#[test]
fn coe_tilde_roundtrip_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for r in 1..=2usize {
        for _ in 0..15 {
            let g = random_crf(&mut rng, r);
            let gt = g.coe_tilde().unwrap();
            let back = CycRatFn::coe_tilde_inverse(&gt).unwrap();
            // Round trip as functions on z: tilde maps are isomorphisms, so
            // coe_tilde(back) must equal gt exactly (and back must equal g).
            assert_eq!(back.coe_tilde().unwrap(), gt);
            assert!(back.eq_as_function(&g).unwrap());
        }
    }
}

#[test]
fn degree_and_order_at_one() {
    // deg(1_{a+NZ}(x) x^2) = 2; singleton has degree -1.
    let g = QuasiPoly::atom_univariate(1, 0, 1, 3, 2, Weight::Plain);
    assert_eq!(g.degree(), Some(2));
    assert_eq!(QuasiPoly::singleton(&[0]).degree(), Some(-1));

    // ord_{z=1} G(z,...,z) + deg coe_tilde(G) + r = 0 on random inputs.
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    for r in 1..=2usize {
        for _ in 0..10 {
            let g = random_crf(&mut rng, r);
            let Some(ord) = g.ord_at_one().unwrap() else {
                continue;
            };
            let deg = match g.coe_tilde().unwrap().degree() {
                Some(d) => d,
                None => continue,
            };
            assert_eq!(ord + deg + r as i64, 0, "r = {r}");
        }
    }
}
