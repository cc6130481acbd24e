//! Cyclotomic rational functions and (partial/full/false) quasi-polynomials.
//!
//! A cyclotomic rational function is a Q-linear combination of products of
//! univariate building blocks `z^a` and `z^a / (1 - e(rho) z^N)^m` (the phase
//! `rho` is kept symbolic and only becomes a complex number at evaluation
//! time). Its Laurent coefficients in `|z_i| < 1` form a partial
//! quasi-polynomial; averaging over the `2^r` sign involutions produces the
//! full and false variants. The three coefficient maps `coe`, `coe_bar`,
//! `coe_tilde` are isomorphisms onto those spaces, and both directions are
//! implemented exactly.
//!
//! Quasi-polynomials are stored as sums of products of per-variable atoms:
//! singletons `1_{v}(x)` and "eventual" atoms `w(x) x^d 1_{c + LZ}(x)` with
//! weight `w` one of `1`, `[x >= 0]`, `sgn(x)` (the paper's full / partial /
//! false flavors). Canonical form lifts all periods in one variable to their
//! lcm and merges like terms, which makes equality decidable.

mod crf;
mod laurent;
mod qp;

pub use crf::{CrfFactor, CrfTerm, CycRatFn};
pub use laurent::LaurentMulti;
pub use qp::{QpAtom, QpTerm, QuasiPoly, Weight};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QpError {
    #[error("operation requires a phase-free cyclotomic rational function")]
    PhasedFactor,
    #[error("product mixes different denominator phases in one variable")]
    UnsupportedProduct,
    #[error("expected a {expected} quasi-polynomial, found mixed or {found} atoms")]
    WrongKind { expected: String, found: String },
    #[error("variable count mismatch: {0} vs {1}")]
    VarMismatch(usize, usize),
    #[error("Laurent order {requested} exceeds supported bound {bound} for multiplicity-{mult} factor")]
    OrderBound {
        requested: u32,
        bound: u32,
        mult: u32,
    },
}
