use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use super::expr::Expr;

/// Function heads that survive canonicalization. `tan`, `sqrt` and the
/// hyperbolics are accepted by the parser but rewritten away.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Builtin {
    Sin,
    Cos,
    Exp,
    Log,
    Atan,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Sin => "sin",
            Builtin::Cos => "cos",
            Builtin::Exp => "exp",
            Builtin::Log => "log",
            Builtin::Atan => "atan",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Some(match name {
            "sin" => Builtin::Sin,
            "cos" => Builtin::Cos,
            "exp" => Builtin::Exp,
            "log" => Builtin::Log,
            "atan" => Builtin::Atan,
            _ => None?,
        })
    }
}

/// How an opaque function symbol differentiates.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum DerivRule {
    /// d/ds f(s) is the symbol named `f'` (then `f''`, ...), created on
    /// demand with the same rule, so chains close under repeated
    /// differentiation. Multi-argument symbols use `f_d1`, `f_d2`, ...
    Auto,
    /// Per-slot derivative symbol names; each target is itself `Auto`.
    Symbols(Vec<String>),
}

/// An opaque scalar function symbol. Identity is (name, arity); the
/// derivative rule rides along and must be used consistently per problem.
#[derive(Clone, Debug)]
pub struct FnSym {
    pub name: String,
    pub arity: usize,
    pub deriv: DerivRule,
}

pub type FnRef = Arc<FnSym>;

impl FnSym {
    pub fn new(name: impl Into<String>, arity: usize) -> FnRef {
        Arc::new(FnSym { name: name.into(), arity, deriv: DerivRule::Auto })
    }

    pub fn with_derivs(name: impl Into<String>, arity: usize, targets: Vec<String>) -> FnRef {
        assert_eq!(targets.len(), arity, "one derivative target per slot");
        Arc::new(FnSym { name: name.into(), arity, deriv: DerivRule::Symbols(targets) })
    }

    /// The symbol for the derivative in slot `i`.
    pub fn deriv_symbol(&self, i: usize) -> FnRef {
        assert!(i < self.arity);
        match &self.deriv {
            DerivRule::Auto => {
                let name = if self.arity == 1 {
                    format!("{}'", self.name)
                } else {
                    format!("{}_d{}", self.name, i + 1)
                };
                FnSym::new(name, self.arity)
            }
            DerivRule::Symbols(t) => FnSym::new(t[i].clone(), self.arity),
        }
    }
}

impl PartialEq for FnSym {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.arity == other.arity
    }
}
impl Eq for FnSym {}
impl PartialOrd for FnSym {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for FnSym {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.name, self.arity).cmp(&(&other.name, other.arity))
    }
}
impl std::hash::Hash for FnSym {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.name.hash(state);
        self.arity.hash(state);
    }
}

/// An irreducible multiplicative base.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Atom {
    /// A named symbol: coordinate or parameter. Charts decide which.
    Sym(String),
    /// The circle constant.
    Pi,
    /// Application of a builtin to canonical arguments.
    App(Builtin, Vec<Expr>),
    /// Application of an opaque user symbol.
    UserApp(FnRef, Vec<Expr>),
    /// A composite base carried under a non-expandable power: either a sum
    /// of at least two monomials (content-extracted) or a positive rational
    /// constant with no exact root. Exponent lives in the enclosing monomial.
    Poly(Box<Expr>),
}

impl Atom {
    pub fn sym(name: impl Into<String>) -> Atom {
        Atom::Sym(name.into())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        super::print::fmt_atom(self, f)
    }
}
