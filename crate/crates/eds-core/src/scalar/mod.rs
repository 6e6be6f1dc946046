//! Exact scalar expressions.
//!
//! The central type is [`Expr`]: a rational-linear combination of monomials,
//! each monomial a product of [`Atom`]s raised to rational powers. Every
//! constructor renormalizes, so an `Expr` is always in canonical form and
//! structural equality decides equality modulo the rewrite set below.
//!
//! Canonical rewrites (fixed, applied by construction):
//! - rational arithmetic is exact; like monomials collect; zero terms drop;
//! - `tan u -> sin u / cos u`; even powers `cos^2 u -> 1 - sin^2 u`
//!   (so `sin^2 + cos^2 -> 1`);
//! - `sin 2u -> 2 sin u cos u`, `cos 2u -> 1 - 2 sin^2 u` whenever the
//!   argument has all-even integer coefficients;
//! - `sin`/`cos`/`atan` of an exactly negated argument use parity;
//!   special values at rational multiples of pi with denominator 1,2,3,4,6;
//! - `sin(atan t) -> t (1+t^2)^(-1/2)`, `cos(atan t) -> (1+t^2)^(-1/2)`;
//! - hyperbolics normalize to exponentials (`sinh`, `cosh`, `tanh`, `sech`),
//!   which subsumes `tanh^2 -> 1 - sech^2`;
//! - `exp a * exp b -> exp(a+b)`, `exp(q log u) -> u^q`, `log exp u -> u`;
//! - `sqrt u -> u^(1/2)`; rational powers distribute over products and
//!   extract monomial content, under the convention that symbols range over
//!   domains where the bases of fractional powers are positive.
//!
//! Out of scope by design: integration, radical denesting, Groebner-style
//! polynomial ideal arithmetic, user-supplied rewrite rules.

mod atom;
mod expr;
mod numeric;
mod parse;
mod print;
mod tree;
mod zero;

pub use atom::{Atom, Builtin, DerivRule, FnSym, FnRef};
pub use expr::{rat_i, rat_q, Expr, Monomial, Rat};
pub use numeric::{approx_f64, NumEnv, NumError, NumValue};
pub use parse::{parse_expr, ParseError, SymbolTable};
pub use print::latex_expr;
pub use tree::{subst1, SyntaxTree};
pub use zero::{
    decide_zero, is_zero_default, Assumptions, SampleReport, SampleSpec, Transcript, TriState,
    Verdict, ZeroPolicy,
};

/// Convenience: parse with the builtin symbol table, panicking on error.
/// Intended for literals in code and tests.
pub fn expr(src: &str) -> Expr {
    parse_expr(src, &SymbolTable::default()).unwrap_or_else(|e| panic!("parse `{src}`: {e}"))
}
