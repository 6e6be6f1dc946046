//! Exterior calculus over an abstract coframe.
//!
//! A [`CoframeSpace`] fixes a basis of 1-forms together with the structure
//! equations (the exterior derivative of each basis form) and the
//! differentials of the coordinate scalars. Coefficients live in the scalar
//! kernel, so the same machinery serves coordinate charts, adapted contact
//! coframes, and orthonormal frame bundles.
//!
//! [`Form`] is a degree-graded sum of blades with expression coefficients;
//! wedge, exterior derivative, interior product, Lie derivative, pullback,
//! and reduction modulo a Pfaffian system are all exact. Zero decisions on
//! coefficients reuse the scalar kernel's exact-then-numeric procedure and
//! surface per-coefficient transcripts.

mod form;
mod linalg;
mod map;
mod space;
mod vector;

pub use form::{Blade, Form, FormVerdict};
pub use linalg::{express_in, ideal_membership, solve_linear};
pub use map::CoframeMap;
pub use space::{CoframeSpace, FormError, SpaceBuilder};
pub use vector::VectorField;
