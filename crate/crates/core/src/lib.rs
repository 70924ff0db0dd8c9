//! Perelman entropies, second variations and central densities of Ricci solitons.
//!
//! The crate is organised around the quantities it computes:
//!
//! | Module | Computes |
//! |--------|----------|
//! | [`catalog`] | closed-form central densities Θ of shrinkers, ν = ln Θ, the decay order |
//! | [`geometry`] | warped-sphere, 2-torus and product-of-spheres metrics with curvature, Laplacian, quadrature, tensor calculus |
//! | [`entropy`] | λ(g) as the ground state of −4Δ + R, the 𝒲 functional and ν(g) |
//! | [`variation`] | second variations of λ and ν, the Jacobi operator N, stability reports, finite-difference Hessian checks |
//! | [`flow`] | Ricci flow of products of spheres and the restricted entropy along it |
//! | [`reduced`] | soliton identities, reduced volume, ℒ-geodesic reduced distance, Θ = e^ν consistency |
//!
//! Conventions: Δ = div grad (nonpositive spectrum); positive Einstein metrics are
//! normalized by Rc = g/2τ with τ = 1/2(n−1), so the unit round sphere is the reference.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod config;
pub mod entropy;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod linalg;
pub mod reduced;
pub mod variation;

pub use error::{Error, Result};
