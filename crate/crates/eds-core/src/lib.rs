//! Symbolic toolkit for exterior differential systems in the calculus of
//! variations: contact and jet geometry, Poincare-Cartan forms,
//! Euler-Lagrange systems, conservation laws, the inverse problem for
//! Monge-Ampere equations, generalized symmetries, and the classical
//! surface-theory computations (Weingarten systems, K = -1 surfaces,
//! sine-Gordon, Backlund transformations).
//!
//! Every nontrivial verdict produced by the high-level modules carries a
//! transcript so the claim can be re-checked mechanically.

pub mod forms;
pub mod geometry;
pub mod inverse;
pub mod jets;
pub mod scalar;
pub mod symplectic;
pub mod variational;

pub use forms::{CoframeSpace, Form, SpaceBuilder, VectorField};
pub use scalar::{Expr, Rat, TriState, Verdict, ZeroPolicy};
