//! Eigenvalue absorption into the essential spectrum for analytic
//! self-adjoint families `A(t) = A₀ + tA₁ + …`.
//!
//! The crate computes numerical ranges and essential numerical ranges,
//! tracks eigenvalue branches below the essential spectrum, estimates the
//! slopes with which they are absorbed and compares those slopes with the
//! spectrum of the kernel compression `P A₁ P`. Structured
//! diagonal-plus-rank-one families have a secular-equation path that stays
//! accurate in regimes where dense eigensolvers cannot resolve the branches.

pub mod linalg;
pub mod model;
pub mod numeric;
pub mod sampling;
pub mod secular;
pub mod numrange;
pub mod perturbation;
pub mod casebook;
pub mod document;
pub mod verify;
pub mod cli;
