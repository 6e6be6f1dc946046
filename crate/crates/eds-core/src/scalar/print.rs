use std::fmt;

use num_traits::{One, Signed};

use super::atom::{Atom, Builtin};
use super::expr::{Expr, Monomial, Rat};

fn is_int(r: &Rat) -> bool {
    r.is_integer()
}

fn fmt_rat(r: &Rat) -> String {
    r.to_string()
}

pub(crate) fn fmt_atom(a: &Atom, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match a {
        Atom::Sym(s) => write!(f, "{s}"),
        Atom::Pi => write!(f, "pi"),
        Atom::App(b, args) => {
            write!(f, "{}(", b.name())?;
            for (i, e) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, ")")
        }
        Atom::UserApp(fun, args) => {
            write!(f, "{}(", fun.name)?;
            for (i, e) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, ")")
        }
        Atom::Poly(e) => write!(f, "({e})"),
    }
}

fn push_power(out: &mut String, a: &Atom, p: &Rat) {
    use fmt::Write;
    if p.is_one() {
        let _ = write!(out, "{a}");
        return;
    }
    if *p == Rat::new(1.into(), 2.into()) {
        match a {
            Atom::Poly(e) => {
                let _ = write!(out, "sqrt({e})");
            }
            _ => {
                let _ = write!(out, "sqrt({a})");
            }
        }
        return;
    }
    let _ = write!(out, "{a}");
    if is_int(p) && p.is_positive() {
        let _ = write!(out, "^{}", fmt_rat(p));
    } else {
        let _ = write!(out, "^({})", fmt_rat(p));
    }
}

fn fmt_monomial(m: &Monomial) -> String {
    let mut out = String::new();
    for (i, (a, p)) in m.iter().enumerate() {
        if i > 0 {
            out.push('*');
        }
        push_power(&mut out, a, p);
    }
    out
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero_expr() {
            return write!(f, "0");
        }
        // Largest monomial first; deterministic because the term map is ordered.
        for (i, (m, c)) in self.terms().rev().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_unit() {
                write!(f, "{}", fmt_rat(&mag))?;
            } else if mag.is_one() {
                write!(f, "{}", fmt_monomial(m))?;
            } else {
                write!(f, "{}*{}", fmt_rat(&mag), fmt_monomial(m))?;
            }
        }
        Ok(())
    }
}

fn latex_atom(a: &Atom) -> String {
    match a {
        Atom::Sym(s) => latex_name(s),
        Atom::Pi => "\\pi".to_string(),
        Atom::App(b, args) => {
            let head = match b {
                Builtin::Sin => "\\sin",
                Builtin::Cos => "\\cos",
                Builtin::Exp => "\\exp",
                Builtin::Log => "\\log",
                Builtin::Atan => "\\arctan",
            };
            let xs: Vec<String> = args.iter().map(latex_expr).collect();
            format!("{head}\\left({}\\right)", xs.join(", "))
        }
        Atom::UserApp(fun, args) => {
            let xs: Vec<String> = args.iter().map(latex_expr).collect();
            format!("{}\\left({}\\right)", latex_name(&fun.name), xs.join(", "))
        }
        Atom::Poly(e) => format!("\\left({}\\right)", latex_expr(e)),
    }
}

/// `p11` -> `p_{11}`, `x2` -> `x_{2}`, names with trailing primes kept.
fn latex_name(s: &str) -> String {
    let primes: String = s.chars().rev().take_while(|&c| c == '\'').collect();
    let stem = &s[..s.len() - primes.len()];
    let head: String = stem.chars().take_while(|c| !c.is_ascii_digit()).collect();
    let tail = &stem[head.len()..];
    let mut out = head;
    if !tail.is_empty() {
        out = format!("{out}_{{{tail}}}");
    }
    out.push_str(&primes);
    out
}

fn latex_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.to_string()
    } else {
        let sign = if r.is_negative() { "-" } else { "" };
        let a = r.abs();
        format!("{sign}\\tfrac{{{}}}{{{}}}", a.numer(), a.denom())
    }
}

/// Render a canonical expression as LaTeX source.
pub fn latex_expr(e: &Expr) -> String {
    if e.is_zero_expr() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (m, c)) in e.terms().rev().enumerate() {
        let neg = c.is_negative();
        let mag = c.abs();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mut factors: Vec<String> = Vec::new();
        if m.is_unit() || !mag.is_one() {
            factors.push(latex_rat(&mag));
        }
        for (a, p) in m.iter() {
            if p.is_one() {
                factors.push(latex_atom(a));
            } else if *p == Rat::new(1.into(), 2.into()) {
                let inner = match a {
                    Atom::Poly(inner) => latex_expr(inner),
                    _ => latex_atom(a),
                };
                factors.push(format!("\\sqrt{{{inner}}}"));
            } else {
                factors.push(format!("{}^{{{}}}", latex_atom(a), fmt_rat(p)));
            }
        }
        out.push_str(&factors.join(" "));
    }
    out
}
