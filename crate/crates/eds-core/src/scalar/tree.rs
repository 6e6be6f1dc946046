use std::collections::BTreeMap;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::atom::{Atom, Builtin, FnSym};
use super::expr::{rat_q, Expr, Rat};
use super::parse::SymbolTable;

/// Plain expression tree: the parse target and the JSON form. Conversion to
/// [`Expr`] canonicalizes; conversion back gives a stable tree of the
/// canonical form.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntaxTree {
    /// Rational literal, e.g. `"3"` or `"-3/2"`.
    Num(String),
    Sym(String),
    Pi,
    Add(Vec<SyntaxTree>),
    Mul(Vec<SyntaxTree>),
    Neg(Box<SyntaxTree>),
    Div(Box<SyntaxTree>, Box<SyntaxTree>),
    /// Base and rational exponent.
    Pow(Box<SyntaxTree>, String),
    /// Function application by name (builtin or table-resolved).
    App(String, Vec<SyntaxTree>),
    /// Opaque user function with its per-slot derivative symbol names
    /// (`None` means the auto chain `f'`, `f''`, ...).
    UserApp { name: String, deriv: Option<Vec<String>>, args: Vec<SyntaxTree> },
}

fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    match s.parse::<Rat>() {
        Ok(r) => Ok(r),
        Err(_) => Err(format!("bad rational literal `{s}`")),
    }
}

impl SyntaxTree {
    pub fn num_i(n: i64) -> SyntaxTree {
        SyntaxTree::Num(n.to_string())
    }

    /// Canonicalize into an [`Expr`]. Unknown function names become opaque
    /// symbols with the auto derivative chain unless the table has an entry.
    pub fn to_expr(&self, table: &SymbolTable) -> Result<Expr, String> {
        Ok(match self {
            SyntaxTree::Num(s) => Expr::from_rat(parse_rat(s)?),
            SyntaxTree::Sym(s) => Expr::sym(s.clone()),
            SyntaxTree::Pi => Expr::pi(),
            SyntaxTree::Add(ts) => {
                let mut acc = Expr::zero();
                for t in ts {
                    acc = acc.add(&t.to_expr(table)?);
                }
                acc
            }
            SyntaxTree::Mul(ts) => {
                let mut acc = Expr::one();
                for t in ts {
                    acc = acc.mul(&t.to_expr(table)?);
                }
                acc
            }
            SyntaxTree::Neg(t) => t.to_expr(table)?.neg(),
            SyntaxTree::Div(a, b) => {
                let d = b.to_expr(table)?;
                if d.is_zero_expr() {
                    return Err("division by zero".into());
                }
                a.to_expr(table)?.div(&d)
            }
            SyntaxTree::Pow(b, e) => {
                let base = b.to_expr(table)?;
                let exp = parse_rat(e)?;
                if base.is_zero_expr() && !exp.is_positive() {
                    return Err("zero base with non-positive exponent".into());
                }
                base.pow_rat(&exp)
            }
            SyntaxTree::App(name, args) => {
                let xs: Result<Vec<Expr>, String> =
                    args.iter().map(|t| t.to_expr(table)).collect();
                apply_named(name, xs?, table)?
            }
            SyntaxTree::UserApp { name, deriv, args } => {
                let xs: Result<Vec<Expr>, String> =
                    args.iter().map(|t| t.to_expr(table)).collect();
                let xs = xs?;
                let f = match deriv {
                    None => FnSym::new(name.clone(), xs.len()),
                    Some(d) => FnSym::with_derivs(name.clone(), xs.len(), d.clone()),
                };
                Expr::user_app(f, xs)
            }
        })
    }

    /// Stable tree of a canonical expression (used for JSON output).
    pub fn from_expr(e: &Expr) -> SyntaxTree {
        let mut terms: Vec<SyntaxTree> = Vec::new();
        for (m, c) in e.terms() {
            let mut factors: Vec<SyntaxTree> = Vec::new();
            if !c.is_one() || m.is_unit() {
                factors.push(SyntaxTree::Num(c.to_string()));
            }
            for (a, p) in m.iter() {
                let base = match a {
                    Atom::Sym(s) => SyntaxTree::Sym(s.clone()),
                    Atom::Pi => SyntaxTree::Pi,
                    Atom::App(b, args) => SyntaxTree::App(
                        b.name().to_string(),
                        args.iter().map(SyntaxTree::from_expr).collect(),
                    ),
                    Atom::UserApp(f, args) => SyntaxTree::UserApp {
                        name: f.name.clone(),
                        deriv: match &f.deriv {
                            super::atom::DerivRule::Auto => None,
                            super::atom::DerivRule::Symbols(v) => Some(v.clone()),
                        },
                        args: args.iter().map(SyntaxTree::from_expr).collect(),
                    },
                    Atom::Poly(inner) => SyntaxTree::from_expr(inner),
                };
                if p.is_one() {
                    factors.push(base);
                } else {
                    factors.push(SyntaxTree::Pow(Box::new(base), p.to_string()));
                }
            }
            terms.push(match factors.len() {
                1 => factors.pop().unwrap(),
                _ => SyntaxTree::Mul(factors),
            });
        }
        match terms.len() {
            0 => SyntaxTree::num_i(0),
            1 => terms.pop().unwrap(),
            _ => SyntaxTree::Add(terms),
        }
    }
}

/// Resolve a function by name: builtins (including the rewritten heads
/// `tan`, `sqrt`, `sinh`, `cosh`, `tanh`, `sech`) or a table entry, else an
/// auto-derivative opaque symbol.
pub(crate) fn apply_named(
    name: &str,
    args: Vec<Expr>,
    table: &SymbolTable,
) -> Result<Expr, String> {
    let unary = |args: &[Expr]| -> Result<Expr, String> {
        if args.len() != 1 {
            return Err(format!("`{name}` takes one argument"));
        }
        Ok(args[0].clone())
    };
    if let Some(b) = Builtin::from_name(name) {
        let u = unary(&args)?;
        return Ok(Expr::app(b, vec![u]));
    }
    match name {
        "sqrt" => {
            let u = unary(&args)?;
            Ok(u.pow_rat(&rat_q(1, 2)))
        }
        "tan" => {
            let u = unary(&args)?;
            Ok(Expr::sin(&u).div(&Expr::cos(&u)))
        }
        "sinh" => {
            let u = unary(&args)?;
            Ok(Expr::exp(&u).sub(&Expr::exp(&u.neg())).scale(&rat_q(1, 2)))
        }
        "cosh" => {
            let u = unary(&args)?;
            Ok(Expr::exp(&u).add(&Expr::exp(&u.neg())).scale(&rat_q(1, 2)))
        }
        "tanh" => {
            let u = unary(&args)?;
            let e2 = Expr::exp(&u.scale_i(2));
            Ok(e2.sub(&Expr::one()).div(&e2.add(&Expr::one())))
        }
        "sech" => {
            let u = unary(&args)?;
            Ok(Expr::from_int(2)
                .div(&Expr::exp(&u).add(&Expr::exp(&u.neg()))))
        }
        _ => {
            let f = table
                .function(name)
                .unwrap_or_else(|| FnSym::new(name.to_string(), args.len()));
            if f.arity != args.len() {
                return Err(format!(
                    "`{name}` expects {} argument(s), got {}",
                    f.arity,
                    args.len()
                ));
            }
            Ok(Expr::user_app(f, args))
        }
    }
}

impl Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SyntaxTree::from_expr(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Expr, D::Error> {
        let t = SyntaxTree::deserialize(d)?;
        t.to_expr(&SymbolTable::default()).map_err(serde::de::Error::custom)
    }
}

/// Substitution helper usable in maps: name -> expr.
pub fn subst1(e: &Expr, var: &str, val: &Expr) -> Expr {
    let mut m = BTreeMap::new();
    m.insert(var.to_string(), val.clone());
    e.subst(&m)
}
