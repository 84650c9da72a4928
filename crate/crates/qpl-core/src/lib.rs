//! Desk-scale numerical toolkit for the distribution of primes of the form
//! n⁴ + k.
//!
//! The crate computes, exactly where the objects are exact and to controlled
//! floating-point tolerance where they are not:
//!
//! * Chebyshev-weighted counts Σ_{n≤x} Λ(n⁴+k) and their singular-series
//!   predictions 𝔖(k)·x ([`moments`], [`singular`]);
//! * the local solution counts n_p of n⁴+k ≡ 0 (mod p), by direct counting
//!   and through quartic Dirichlet characters ([`residues`]);
//! * the circle-method machinery: exponential sums S₁, S₂, Gauss and
//!   Ramanujan sums, the complete sum Σ(q), major/minor arc geometry, and
//!   the exact T+E decompositions of S₁ and S₂ ([`expsums`]);
//! * numerical exercisers for the supporting inequalities (Weyl,
//!   Pólya–Vinogradov, duality, Bessel, Gallagher, the quartic large
//!   sieve) ([`lemma_lab`]).
//!
//! Everything is deterministic: summation orders are fixed, accumulation is
//! compensated, random suites are seeded, and parallel sweeps merge in index
//! order, so identical inputs give bit-identical outputs at any thread count.

pub mod arith;
pub mod error;
pub mod expsums;
pub mod lemma_lab;
pub mod moments;
pub mod residues;
pub mod singular;
pub mod summation;

pub use error::QplError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, QplError>;
