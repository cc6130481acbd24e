//! Quantum invariants of negative definite plumbed 3-manifolds and the
//! quantum-modularity machinery behind them.
//!
//! The crate is organized around a symbolic core and a set of numerical
//! verification kernels:
//!
//! - [`numeric`]: exact rationals, configurable-precision complex arithmetic,
//!   Bernoulli polynomials, roots of unity, and the complex error function.
//! - [`quasipoly`]: cyclotomic rational functions, (partial/false)
//!   quasi-polynomials, the three coefficient maps and their inverses,
//!   involutions, degree, and Laurent expansion at `z = e^t`.
//! - [`plumbing`]: plumbing graphs, Neumann moves, linking matrices,
//!   branch/trunk combinatorics, the reduced matrix on high-degree vertices,
//!   and Spin^c / cocycle coset enumeration.
//! - [`invariants`]: WRT invariants as finite root-of-unity sums, GPPV
//!   q-series (definitional, twisted, and grouped pipelines), and the radial
//!   limit verification harness.
//! - [`falsetheta`]: false theta evaluation, adaptive contour quadrature,
//!   the Poisson summation formula with signature, modular-series checks,
//!   and the explicit rank-two modular identity with all contour terms.
//! - [`asymptotics`]: Euler-Maclaurin expansions via Hadamard products,
//!   signed-sum variants, stationary phase for Gaussian kernels, asymptotic
//!   coefficients of false theta functions, and exact Chern-Simons spectra.
//! - [`signedsum`]: Smith normal form, reduction of `sgn(Am)` to coordinate
//!   signs, sign-product reduction beyond the rank, chamber counting, and
//!   Gordan-based realizability.
//! - [`special`]: Eisenstein series identities (even weight, odd-weight gap)
//!   and Zwegers-type indefinite theta transformations with error-function
//!   completions and numerical Eichler integrals.
//! - [`report`]: run configuration and the JSON report schema shared by the
//!   CLI and the runnable examples.
//!
//! Most numerical routines take a [`numeric::Ctx`] fixing the working
//! precision in bits; exact routines return [`numeric::Rat`] and never round.

pub mod asymptotics;
pub mod falsetheta;
pub mod invariants;
pub mod numeric;
pub mod plumbing;
pub mod quad;
pub mod quasipoly;
pub mod ratmat;
pub mod report;
pub mod signedsum;
pub mod special;

pub use numeric::{BigComplex, Ctx, Rat, RatModZ};
