//! Riemannian conjugate gradient on the generalized Stiefel manifold
//! `St_M(n,p) = {X : XᵀMX = I_p}` equipped with the metric `⟨U,V⟩ = tr(UᵀMV)`.
//!
//! The crate provides
//!
//! - the manifold geometry ([`manifold`]): inner products, tangent projection,
//!   Riemannian gradients, feasibility checks and M-orthonormalization;
//! - the Cayley-transform retraction and its two vector transports
//!   ([`cayley`]), each with a dense path and a low-rank path evaluated via the
//!   Sherman–Morrison–Woodbury identity;
//! - Cholesky-QR and polar retractions used as baselines ([`baseline`]);
//! - products of generalized Stiefel manifolds ([`product`]);
//! - the non-monotone modified-PRP conjugate gradient solver ([`solver`]);
//! - the generalized eigenvalue and canonical correlation benchmark problems
//!   together with their closed-form oracles ([`problems`]).
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled; the only thing the feature adds is wall-clock timing in
//! [`solver::solve`].

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]
// `!(a > b)` is used on purpose so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod baseline;
pub mod cayley;
mod dense;
pub mod error;
pub mod manifold;
pub mod problems;
pub mod product;
pub mod solver;

pub use nalgebra::DMatrix;

pub use error::{Error, Result};
pub use manifold::{ManifoldPoint, MetricContext, PointId, TangentVector};
pub use product::{ProductManifold, ProductPoint, ProductStep, ProductTangent, Retraction, Transport};
pub use solver::{solve, Problem, SolveResult, SolverParams, Variant};

/// Dense real matrix used throughout the crate.
pub type Mat = DMatrix<f64>;
