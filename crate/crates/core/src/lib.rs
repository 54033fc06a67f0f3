//! Quasi-Monte Carlo time-splitting for the linear Schrödinger equation with a
//! truncated Gaussian random potential on the periodic interval `[-π, π)`.
//!
//! A sample solve draws `ξ ∈ R^m`, builds `V(ξ, x) = v₀(x) + Σ λ_j ξ_j v_j(x)`,
//! propagates `ψ` with a Fourier split-step scheme and evaluates an
//! observable. Expectations over `ξ` are estimated with randomly shifted
//! rank-1 lattice rules (or plain Monte Carlo) in [`harness`].

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod lattice;
pub mod normal;
pub mod observables;
pub mod potential;
pub mod quadrature;
pub mod spectral;
pub mod splitting;
pub mod sum;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use observables::{ObservableField, ObservableKind};
pub use potential::{build_cosine_potential, KLPotential};
pub use spectral::{TorusGrid, WaveField};
pub use splitting::{lie_scheme, strang_scheme, SplittingScheme};
