//! Solvers for truncated complex moment problems whose moment matrix
//! carries a column dependence relation.
//!
//! A doubly indexed sequence `γ = {γ_ij}` is a *moment sequence* when
//! some positive Borel measure `μ` on the complex plane satisfies
//! `γ_ij = ∫ conj(z)^i z^j dμ` for every pair of indices. When a finite
//! initial block of data comes with a polynomial relation
//! `z^d = Σ a_lk conj(z)^l z^k` (total degree of the right side below
//! `d`), the whole sequence is generated recursively and the existence
//! question reduces to finitely many positivity and membership tests.
//! This crate implements that reduction end to end:
//!
//! * [`poly`] — bivariate polynomials in `z` and `conj(z)`, degree-lex
//!   indexing, and division by a characteristic pair `(P, conj(P))`;
//! * [`rdis`] — recursively generated doubly indexed sequences and
//!   their Riesz functional;
//! * [`moment`] — moment matrices, Hermitian positivity reports, and
//!   flat-extension rank tests;
//! * [`analysis`] — zero sets of harmonic cubics `z³ + az + b·conj(z)`,
//!   companion-matrix root finding, Lagrange interpolation, and the
//!   truncation level `ξ` that certifies positivity of the full matrix;
//! * [`solver`] — decision procedures that return an explicit finitely
//!   atomic representing measure together with a verification residual,
//!   or a named certificate of infeasibility.
//!
//! The parallel sweeps in [`analysis`] and [`solver`] use rayon when the
//! `parallel` feature (on by default) is enabled and fall back to
//! sequential loops otherwise.

pub mod analysis;
pub mod error;
pub mod moment;
pub(crate) mod par;
pub mod poly;
pub mod rdis;
pub mod solver;
pub mod tol;

pub use error::{Error, Result};
pub use tol::Tolerances;

/// Complex scalar used throughout: IEEE 754 double precision components.
pub type C64 = num_complex::Complex64;
