use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::atom::{Atom, Builtin, FnRef};

pub type Rat = num_rational::BigRational;

pub fn rat_i(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_q(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

fn rat_pow_int(c: &Rat, k: i64) -> Rat {
    assert!(k.unsigned_abs() < 1_000_000, "exponent out of range");
    let mut acc = Rat::one();
    let base = if k < 0 {
        assert!(!c.is_zero(), "zero to a negative power");
        c.recip()
    } else {
        c.clone()
    };
    for _ in 0..k.unsigned_abs() {
        acc *= &base;
    }
    acc
}

/// Exact `n^(1/b)` for a nonnegative integer, if it exists.
fn exact_root(n: &BigInt, b: u64) -> Option<BigInt> {
    assert!(!n.is_negative());
    let r = n.nth_root(b as u32);
    if num_traits::pow::pow(r.clone(), b as usize) == *n {
        Some(r)
    } else {
        None
    }
}

/// A product of atoms raised to nonzero rational powers.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Monomial(pub(crate) BTreeMap<Atom, Rat>);

impl Monomial {
    pub fn unit() -> Monomial {
        Monomial(BTreeMap::new())
    }

    pub fn atom(a: Atom) -> Monomial {
        let mut m = BTreeMap::new();
        m.insert(a, Rat::one());
        Monomial(m)
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Atom, &Rat)> {
        self.0.iter()
    }

    /// Exponent of `a` in this monomial (0 when absent).
    pub fn exponent(&self, a: &Atom) -> Rat {
        self.0.get(a).cloned().unwrap_or_else(Rat::zero)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (a, e) in &other.0 {
            let entry = out.entry(a.clone()).or_insert_with(Rat::zero);
            *entry += e;
            if entry.is_zero() {
                out.remove(a);
            }
        }
        Monomial(out)
    }
}

/// Canonical scalar expression: a rational-linear combination of monomials.
/// All constructors renormalize; structural equality is equality modulo the
/// module-level rewrite set.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Expr(pub(crate) BTreeMap<Monomial, Rat>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Expr {
    pub fn zero() -> Expr {
        Expr(BTreeMap::new())
    }

    pub fn one() -> Expr {
        Expr::from_rat(Rat::one())
    }

    pub fn from_int(n: i64) -> Expr {
        Expr::from_rat(rat_i(n))
    }

    pub fn from_rat(c: Rat) -> Expr {
        let mut t = BTreeMap::new();
        if !c.is_zero() {
            t.insert(Monomial::unit(), c);
        }
        Expr(t)
    }

    pub fn sym(name: impl Into<String>) -> Expr {
        Expr::from_atom(Atom::Sym(name.into()))
    }

    pub fn pi() -> Expr {
        Expr::from_atom(Atom::Pi)
    }

    pub fn from_atom(a: Atom) -> Expr {
        let mut e = Expr::zero();
        push_mono(&mut e, Monomial::atom(a), Rat::one());
        e
    }

    pub fn is_zero_expr(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> std::collections::btree_map::Iter<'_, Monomial, Rat> {
        self.0.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.0.len()
    }

    /// The whole expression as a rational constant, if it is one.
    pub fn as_rat(&self) -> Option<Rat> {
        if self.0.is_empty() {
            return Some(Rat::zero());
        }
        if self.0.len() == 1 {
            let (m, c) = self.0.iter().next().unwrap();
            if m.is_unit() {
                return Some(c.clone());
            }
        }
        None
    }

    /// The single (monomial, coefficient) pair, if there is exactly one.
    pub fn as_single(&self) -> Option<(&Monomial, &Rat)> {
        if self.0.len() == 1 {
            self.0.iter().next()
        } else {
            None
        }
    }

    pub fn add(&self, other: &Expr) -> Expr {
        let mut out = self.0.clone();
        for (m, c) in &other.0 {
            let entry = out.entry(m.clone()).or_insert_with(Rat::zero);
            *entry += c;
            if entry.is_zero() {
                out.remove(m);
            }
        }
        Expr(out)
    }

    pub fn neg(&self) -> Expr {
        Expr(self.0.iter().map(|(m, c)| (m.clone(), -c.clone())).collect())
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rat) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr(self.0.iter().map(|(m, k)| (m.clone(), k * c)).collect())
    }

    pub fn scale_i(&self, c: i64) -> Expr {
        self.scale(&rat_i(c))
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        let mut out = Expr::zero();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &other.0 {
                push_mono(&mut out, m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn div(&self, other: &Expr) -> Expr {
        self.mul(&other.pow_rat(&rat_i(-1)))
    }

    pub fn recip(&self) -> Expr {
        self.pow_rat(&rat_i(-1))
    }

    pub fn pow_i(&self, k: i64) -> Expr {
        self.pow_rat(&rat_i(k))
    }

    /// Raise to a rational power. Fractional powers distribute over monomial
    /// factors (positive-base convention); composite bases become `Poly`
    /// atoms after content extraction.
    pub fn pow_rat(&self, q: &Rat) -> Expr {
        if q.is_zero() {
            return Expr::one();
        }
        if q.is_one() {
            return self.clone();
        }
        if self.0.is_empty() {
            assert!(q.is_positive(), "zero expression to a non-positive power");
            return Expr::zero();
        }
        if let Some((m, c)) = self.as_single() {
            let mut out = rat_pow(c, q);
            for (a, e) in m.iter() {
                out = out.mul(&atom_pow(a, &(e * q)));
            }
            return out;
        }
        // Composite base.
        if q.is_integer() {
            let k = q.to_integer();
            let k64: i64 = i64::try_from(&k).expect("exponent out of range");
            if k64 > 0 {
                return self.pow_usize(k64 as usize);
            }
            // Negative integer power of a composite: content out, Poly atom.
            let (content, poly) = extract_content_fix(self, true);
            let out = content.pow_rat(q);
            if poly.num_terms() <= 1 {
                // extraction collapsed the base
                return out.mul(&poly.pow_rat(q));
            }
            return out.mul(&Expr::from_atom_pow(Atom::Poly(Box::new(poly)), q.clone()));
        }
        let (content, poly) = extract_content_fix(self, false);
        let out = content.pow_rat(q);
        if poly.num_terms() <= 1 {
            return out.mul(&poly.pow_rat(q));
        }
        out.mul(&Expr::from_atom_pow(Atom::Poly(Box::new(poly)), q.clone()))
    }

    fn pow_usize(&self, k: usize) -> Expr {
        let mut acc = Expr::one();
        let mut base = self.clone();
        let mut k = k;
        loop {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k == 0 {
                break;
            }
            base = base.mul(&base);
        }
        acc
    }

    fn from_atom_pow(a: Atom, q: Rat) -> Expr {
        let mut e = Expr::zero();
        let mut m = BTreeMap::new();
        if !q.is_zero() {
            m.insert(a, q);
        }
        push_mono(&mut e, Monomial(m), Rat::one());
        e
    }

    /// Apply a builtin function, firing the canonical rewrites.
    pub fn app(b: Builtin, args: Vec<Expr>) -> Expr {
        apply_builtin(b, args)
    }

    pub fn user_app(f: FnRef, args: Vec<Expr>) -> Expr {
        assert_eq!(f.arity, args.len(), "arity mismatch for {}", f.name);
        Expr::from_atom(Atom::UserApp(f, args))
    }

    pub fn sin(u: &Expr) -> Expr {
        Expr::app(Builtin::Sin, vec![u.clone()])
    }
    pub fn cos(u: &Expr) -> Expr {
        Expr::app(Builtin::Cos, vec![u.clone()])
    }
    pub fn exp(u: &Expr) -> Expr {
        Expr::app(Builtin::Exp, vec![u.clone()])
    }
    pub fn log(u: &Expr) -> Expr {
        Expr::app(Builtin::Log, vec![u.clone()])
    }
    pub fn atan(u: &Expr) -> Expr {
        Expr::app(Builtin::Atan, vec![u.clone()])
    }
    pub fn sqrt(u: &Expr) -> Expr {
        u.pow_rat(&rat_q(1, 2))
    }

    /// Partial derivative with respect to the named symbol.
    pub fn diff(&self, var: &str) -> Expr {
        let mut out = Expr::zero();
        for (m, c) in &self.0 {
            // Product rule across the atoms of the monomial.
            for (a, e) in m.iter() {
                let da = atom_diff(a, var);
                if da.is_zero_expr() {
                    continue;
                }
                // c * e * a^(e-1) * da * (rest of monomial)
                let mut rest = Expr::from_rat(c * e);
                let em1 = e - Rat::one();
                rest = rest.mul(&atom_pow(a, &em1));
                for (a2, e2) in m.iter() {
                    if a2 != a {
                        rest = rest.mul(&atom_pow(a2, e2));
                    }
                }
                out = out.add(&rest.mul(&da));
            }
        }
        out
    }

    /// Antiderivative with respect to the named symbol, when every monomial
    /// depends on it only through a bare power of the symbol itself (no
    /// occurrence inside function arguments or composite bases, and no
    /// exponent -1).  The result is re-differentiated as a final check.
    pub fn antidiff(&self, var: &str) -> Option<Expr> {
        let target = Atom::sym(var);
        let mut out = Expr::zero();
        for (m, c) in &self.0 {
            let mut k = Rat::zero();
            let mut rest = Expr::from_rat(c.clone());
            for (a, e) in m.iter() {
                if *a == target {
                    k = e.clone();
                    continue;
                }
                let mut hidden = BTreeSet::new();
                match a {
                    Atom::Sym(_) | Atom::Pi => {}
                    Atom::App(_, args) | Atom::UserApp(_, args) => {
                        for x in args {
                            x.collect_symbols(&mut hidden);
                        }
                    }
                    Atom::Poly(p) => p.collect_symbols(&mut hidden),
                }
                if hidden.contains(var) {
                    return None;
                }
                rest = rest.mul(&atom_pow(a, e));
            }
            let kp1 = k + Rat::one();
            if kp1.is_zero() {
                return None;
            }
            let term = rest
                .mul(&Expr::sym(var).pow_rat(&kp1))
                .mul(&Expr::from_rat(kp1.recip()));
            out = out.add(&term);
        }
        if out.diff(var).sub(self).cleared().is_zero_expr() {
            Some(out)
        } else {
            None
        }
    }

    /// Substitute symbols by expressions, renormalizing.
    pub fn subst(&self, map: &BTreeMap<String, Expr>) -> Expr {
        if map.is_empty() {
            return self.clone();
        }
        let mut out = Expr::zero();
        for (m, c) in &self.0 {
            let mut term = Expr::from_rat(c.clone());
            for (a, e) in m.iter() {
                term = term.mul(&subst_atom(a, e, map));
            }
            out = out.add(&term);
        }
        out
    }

    /// All named symbols occurring anywhere, including inside function
    /// arguments and composite bases.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    pub(crate) fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        for (m, _) in &self.0 {
            for (a, _) in m.iter() {
                match a {
                    Atom::Sym(s) => {
                        out.insert(s.clone());
                    }
                    Atom::Pi => {}
                    Atom::App(_, args) => {
                        for x in args {
                            x.collect_symbols(out);
                        }
                    }
                    Atom::UserApp(_, args) => {
                        for x in args {
                            x.collect_symbols(out);
                        }
                    }
                    Atom::Poly(e) => e.collect_symbols(out),
                }
            }
        }
    }

    /// Names of opaque user function symbols occurring anywhere.
    pub fn user_fns(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_user_fns(&mut out);
        out
    }

    pub(crate) fn collect_user_fns(&self, out: &mut BTreeSet<String>) {
        for (m, _) in &self.0 {
            for (a, _) in m.iter() {
                match a {
                    Atom::UserApp(f, args) => {
                        out.insert(f.name.clone());
                        for x in args {
                            x.collect_user_fns(out);
                        }
                    }
                    Atom::App(_, args) => {
                        for x in args {
                            x.collect_user_fns(out);
                        }
                    }
                    Atom::Poly(e) => e.collect_user_fns(out),
                    _ => {}
                }
            }
        }
    }

    /// Evaluate exactly over the rationals, when every atom admits it.
    pub fn eval_rat(&self, map: &BTreeMap<String, Rat>) -> Option<Rat> {
        let mut acc = Rat::zero();
        for (m, c) in &self.0 {
            let mut term = c.clone();
            for (a, e) in m.iter() {
                let base = match a {
                    Atom::Sym(s) => map.get(s)?.clone(),
                    Atom::Poly(p) => p.eval_rat(map)?,
                    _ => return None,
                };
                if e.is_integer() {
                    let k: i64 = i64::try_from(&e.to_integer()).ok()?;
                    if base.is_zero() && k < 0 {
                        return None;
                    }
                    term *= rat_pow_int(&base, k);
                } else {
                    let r = rat_root(&base, e)?;
                    term *= r;
                }
            }
            acc += term;
        }
        Some(acc)
    }

    /// Total degree of a monomial counting only the listed symbols, for the
    /// callers that need graded orders on jet coordinates.
    /// Multiply out every atom carrying a negative exponent somewhere, so
    /// sums over a common denominator collapse structurally. Vanishing is
    /// preserved: the multipliers are not identically zero. Used by the
    /// exact phase of zero decisions; capped in case expansion reveals new
    /// denominators.
    pub fn cleared(&self) -> Expr {
        let mut cur = self.clone();
        for _ in 0..4 {
            if cur.0.len() < 2 {
                return cur;
            }
            let mut mult: BTreeMap<Atom, Rat> = BTreeMap::new();
            for m in cur.0.keys() {
                for (a, p) in m.iter() {
                    if p.is_negative() {
                        let k = -p.clone();
                        let e = mult.entry(a.clone()).or_insert_with(Rat::zero);
                        if k > *e {
                            *e = k;
                        }
                    }
                }
            }
            if mult.is_empty() {
                return cur;
            }
            // Shift exponents monomial-by-monomial so inverse atoms cancel
            // by exponent arithmetic before positive powers expand.
            let mut next = Expr::zero();
            for (m, c) in &cur.0 {
                let mut m2 = m.0.clone();
                for (a, k) in &mult {
                    let e = m2.entry(a.clone()).or_insert_with(Rat::zero);
                    *e += k;
                    if e.is_zero() {
                        m2.remove(a);
                    }
                }
                push_mono(&mut next, Monomial(m2), c.clone());
            }
            cur = next;
        }
        cur
    }

    pub fn degree_in(&self, syms: &BTreeSet<String>) -> Option<Rat> {
        self.0
            .keys()
            .map(|m| {
                m.iter()
                    .filter_map(|(a, e)| match a {
                        Atom::Sym(s) if syms.contains(s) => Some(e.clone()),
                        _ => None,
                    })
                    .fold(Rat::zero(), |x, y| x + y)
            })
            .max()
    }
}

fn rat_root(base: &Rat, e: &Rat) -> Option<Rat> {
    // base^e exactly, for fractional e.
    let b = u64::try_from(e.denom().magnitude().clone()).ok()?;
    if base.is_negative() && b % 2 == 0 {
        return None;
    }
    let sign = if base.is_negative() { -1 } else { 1 };
    let n = exact_root(&base.numer().abs(), b)?;
    let d = exact_root(&base.denom().abs(), b)?;
    let root = Rat::new(n * BigInt::from(sign), d);
    let k: i64 = i64::try_from(&e.numer().clone()).ok()?;
    Some(rat_pow_int(&root, k))
}

/// c^q as a canonical expression; inexact roots park in constant `Poly` atoms.
pub(crate) fn rat_pow(c: &Rat, q: &Rat) -> Expr {
    if c.is_zero() {
        assert!(q.is_positive(), "zero to a non-positive power");
        return Expr::zero();
    }
    if q.is_integer() {
        let k: i64 = i64::try_from(&q.to_integer()).expect("exponent out of range");
        return Expr::from_rat(rat_pow_int(c, k));
    }
    if let Some(r) = rat_root(c, q) {
        return Expr::from_rat(r);
    }
    if c.is_negative() {
        let b = u64::try_from(q.denom().magnitude().clone()).unwrap_or(0);
        if b % 2 == 1 {
            let k: i64 = i64::try_from(&q.numer().clone()).expect("exponent out of range");
            let sign = if k % 2 == 0 { Rat::one() } else { -Rat::one() };
            return rat_pow(&-c.clone(), q).scale(&sign);
        }
        // Formal object; numeric evaluation will reject it.
        return Expr::from_atom_pow(Atom::Poly(Box::new(Expr::from_rat(c.clone()))), q.clone());
    }
    // Split into integer numerator and denominator parts, extracting what
    // roots exist (e.g. (4/3)^(1/2) -> 2 * 3^(-1/2)).
    let mut out = Expr::one();
    for (n, dir) in [(c.numer().abs(), 1i64), (c.denom().abs(), -1i64)] {
        if n.is_one() {
            continue;
        }
        let qq = q * rat_i(dir);
        let b = u64::try_from(qq.denom().magnitude().clone()).unwrap();
        match exact_root(&n, b) {
            Some(r) => {
                let k: i64 = i64::try_from(&qq.numer().clone()).expect("exponent out of range");
                out = out.mul(&Expr::from_rat(rat_pow_int(&Rat::from_integer(r), k)));
            }
            None => {
                out = out.mul(&Expr::from_atom_pow(
                    Atom::Poly(Box::new(Expr::from_rat(Rat::from_integer(n)))),
                    qq,
                ));
            }
        }
    }
    out
}

/// a^e for a single atom (e may be any rational; zero gives 1).
fn atom_pow(a: &Atom, e: &Rat) -> Expr {
    if e.is_zero() {
        return Expr::one();
    }
    match a {
        Atom::Poly(inner) => inner.pow_rat(e),
        _ => Expr::from_atom_pow(a.clone(), e.clone()),
    }
}

fn subst_atom(a: &Atom, e: &Rat, map: &BTreeMap<String, Expr>) -> Expr {
    match a {
        Atom::Sym(s) => match map.get(s) {
            Some(img) => img.pow_rat(e),
            None => Expr::from_atom_pow(a.clone(), e.clone()),
        },
        Atom::Pi => Expr::from_atom_pow(a.clone(), e.clone()),
        Atom::App(b, args) => {
            let args2: Vec<Expr> = args.iter().map(|x| x.subst(map)).collect();
            Expr::app(*b, args2).pow_rat(e)
        }
        Atom::UserApp(f, args) => {
            let args2: Vec<Expr> = args.iter().map(|x| x.subst(map)).collect();
            Expr::user_app(f.clone(), args2).pow_rat(e)
        }
        Atom::Poly(inner) => inner.subst(map).pow_rat(e),
    }
}

fn atom_diff(a: &Atom, var: &str) -> Expr {
    match a {
        Atom::Sym(s) => {
            if s == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Atom::Pi => Expr::zero(),
        Atom::Poly(e) => e.diff(var),
        Atom::App(b, args) => {
            let u = &args[0];
            let du = u.diff(var);
            if du.is_zero_expr() {
                return Expr::zero();
            }
            let fd = match b {
                Builtin::Sin => Expr::cos(u),
                Builtin::Cos => Expr::sin(u).neg(),
                Builtin::Exp => Expr::exp(u),
                Builtin::Log => u.recip(),
                Builtin::Atan => Expr::one().add(&u.mul(u)).recip(),
            };
            fd.mul(&du)
        }
        Atom::UserApp(f, args) => {
            let mut out = Expr::zero();
            for (i, u) in args.iter().enumerate() {
                let du = u.diff(var);
                if du.is_zero_expr() {
                    continue;
                }
                let fd = Expr::user_app(f.deriv_symbol(i), args.clone());
                out = out.add(&fd.mul(&du));
            }
            out
        }
    }
}

/// Insert `c * m` into `acc`, firing monomial-level rewrites first.
pub(crate) fn push_mono(acc: &mut Expr, m: Monomial, c: Rat) {
    if c.is_zero() {
        return;
    }
    let mut m = m;
    m.0.retain(|_, e| !e.is_zero());

    // Merge exponentials: exp(a)^j * exp(b)^k -> exp(ja + kb).
    let exps: Vec<Atom> = m
        .0
        .keys()
        .filter(|a| matches!(a, Atom::App(Builtin::Exp, _)))
        .cloned()
        .collect();
    let needs_merge = exps.len() > 1
        || exps
            .first()
            .map(|a| !m.0[a].is_one())
            .unwrap_or(false);
    if needs_merge {
        let mut total = Expr::zero();
        for a in &exps {
            let e = m.0.remove(a).unwrap();
            if let Atom::App(Builtin::Exp, args) = a {
                total = total.add(&args[0].scale(&e));
            }
        }
        let rest = Expr(BTreeMap::from([(m, c)]));
        let merged = rest.mul(&Expr::exp(&total));
        for (m2, c2) in merged.0 {
            push_mono_normalized(acc, m2, c2);
        }
        return;
    }

    // Fold parked constant bases (e.g. 5^(-1/2)) whose exponent gained an
    // integral part back into the coefficient, keeping the rest in (-1, 1).
    let constpoly = m.0.iter().find_map(|(a, e)| {
        if let Atom::Poly(p) = a {
            if let Some(r) = p.as_rat() {
                if !e.trunc().is_zero() {
                    return Some((a.clone(), e.clone(), r));
                }
            }
        }
        None
    });
    if let Some((a, e, r)) = constpoly {
        m.0.remove(&a);
        let int_part = e.trunc();
        let frac = &e - &int_part;
        let k: i64 = i64::try_from(&int_part.to_integer()).expect("exponent fits i64");
        let c2 = c * rat_pow_int(&r, k);
        if !frac.is_zero() {
            m.0.insert(a, frac);
        }
        push_mono(acc, m, c2);
        return;
    }

    // Keep -1 as the only negative integer exponent on composite bases:
    // P^k for k <= -2 becomes (P^|k|)^(-1) with the power expanded, so both
    // the quotient-rule and divide-then-invert routes agree.
    let deepinv = m.0.iter().find_map(|(a, e)| {
        if let Atom::Poly(_) = a {
            if e.is_integer() && *e <= rat_i(-2) {
                return Some((a.clone(), e.clone()));
            }
        }
        None
    });
    if let Some((a, e)) = deepinv {
        m.0.remove(&a);
        let inner = if let Atom::Poly(p) = a { *p } else { unreachable!() };
        let k = i64::try_from(&(-e.to_integer())).expect("exponent fits i64") as usize;
        let factor = inner.pow_usize(k).pow_rat(&rat_i(-1));
        let rest = Expr(BTreeMap::from([(m, c)]));
        let merged = rest.mul(&factor);
        for (m2, c2) in merged.0 {
            push_mono(acc, m2, c2);
        }
        return;
    }

    // Expand composite bases raised to positive integer powers.
    let expandable = m.0.iter().find_map(|(a, e)| {
        if let Atom::Poly(_) = a {
            if e.is_integer() && e.is_positive() {
                return Some(a.clone());
            }
        }
        None
    });
    if let Some(a) = expandable {
        let e = m.0.remove(&a).unwrap();
        let inner = if let Atom::Poly(p) = a { *p } else { unreachable!() };
        let rest = Expr(BTreeMap::from([(m, c)]));
        let merged = rest.mul(&inner.pow_rat(&e));
        for (m2, c2) in merged.0 {
            push_mono(acc, m2, c2);
        }
        return;
    }

    // cos^k -> (1 - sin^2)^(k/2 floor) cos^(k mod 2) for integer k >= 2.
    let cospow = m.0.iter().find_map(|(a, e)| {
        if let Atom::App(Builtin::Cos, _) = a {
            if e.is_integer() && *e >= rat_i(2) {
                return Some((a.clone(), e.clone()));
            }
        }
        None
    });
    if let Some((a, e)) = cospow {
        m.0.remove(&a);
        let u = if let Atom::App(Builtin::Cos, args) = &a {
            args[0].clone()
        } else {
            unreachable!()
        };
        let k: i64 = i64::try_from(&e.to_integer()).unwrap();
        let half = k / 2;
        let parity = k % 2;
        let sin2 = Expr::sin(&u).pow_i(2);
        let mut factor = Expr::one().sub(&sin2).pow_i(half);
        if parity == 1 {
            factor = factor.mul(&Expr::from_atom(a));
        }
        let rest = Expr(BTreeMap::from([(m, c)]));
        let merged = rest.mul(&factor);
        for (m2, c2) in merged.0 {
            push_mono(acc, m2, c2);
        }
        return;
    }

    push_mono_normalized(acc, m, c);
}

fn push_mono_normalized(acc: &mut Expr, mut m: Monomial, c: Rat) {
    m.0.retain(|_, e| !e.is_zero());
    // A single exponential with unit exponent may still need the exp/log
    // rewrite or dropping exp(0).
    if let Some(Atom::App(Builtin::Exp, args)) = m
        .0
        .keys()
        .find(|a| matches!(a, Atom::App(Builtin::Exp, _)))
        .cloned()
        .as_ref()
    {
        let arg = &args[0];
        if arg.is_zero_expr() {
            let a = Atom::App(Builtin::Exp, args.clone());
            m.0.remove(&a);
            let rest = Expr(BTreeMap::from([(m, c)]));
            for (m2, c2) in rest.0 {
                push_mono_normalized(acc, m2, c2);
            }
            return;
        }
        if let Some((inner_m, q)) = arg.as_single() {
            if inner_m.0.len() == 1 {
                if let (Atom::App(Builtin::Log, largs), e) = inner_m.0.iter().next().unwrap() {
                    if e.is_one() {
                        // exp(q log u) -> u^q
                        let a = Atom::App(Builtin::Exp, args.clone());
                        let outer = m.0.remove(&a).unwrap();
                        let u = largs[0].clone();
                        let rest = Expr(BTreeMap::from([(m, c)]));
                        let merged = rest.mul(&u.pow_rat(&(q * outer)));
                        for (m2, c2) in merged.0 {
                            push_mono(acc, m2, c2);
                        }
                        return;
                    }
                }
            }
        }
    }
    let entry = acc.0.entry(m.clone()).or_insert_with(Rat::zero);
    *entry += c;
    if entry.is_zero() {
        acc.0.remove(&m);
    }
}

/// Split a composite expression into (content, primitive part). `signed`
/// permits extracting -1 (valid only under integer powers).
/// Run content extraction to a fixpoint: term rebuilds can collapse
/// monomials and expose new shared factors.
fn extract_content_fix(e: &Expr, signed: bool) -> (Expr, Expr) {
    let (mut content, mut prim) = extract_content(e, signed);
    for _ in 0..4 {
        if prim.0.len() < 2 {
            break;
        }
        let (c2, p2) = extract_content(&prim, signed);
        if c2 == Expr::one() {
            break;
        }
        content = content.mul(&c2);
        prim = p2;
    }
    (content, prim)
}

fn extract_content(e: &Expr, signed: bool) -> (Expr, Expr) {
    assert!(e.0.len() >= 2);
    // Rational gcd of the coefficients.
    let mut num_gcd = BigInt::zero();
    let mut den_lcm = BigInt::one();
    for c in e.0.values() {
        num_gcd = num_gcd.gcd(&c.numer().abs());
        den_lcm = den_lcm.lcm(&c.denom().abs());
    }
    let mut content_rat = Rat::new(num_gcd, den_lcm);

    // Common atom powers: extract min exponent per atom over every monomial
    // (absent counts 0), skipping exponentials, which normalize by argument
    // shift below.
    let mut atoms: BTreeSet<Atom> = BTreeSet::new();
    for m in e.0.keys() {
        for (a, _) in m.iter() {
            if !matches!(a, Atom::App(Builtin::Exp, _)) {
                atoms.insert(a.clone());
            }
        }
    }
    let mut mins: BTreeMap<Atom, Rat> = BTreeMap::new();
    for a in atoms {
        let min = e.0.keys().map(|m| m.exponent(&a)).min().expect("nonempty");
        if !min.is_zero() {
            mins.insert(a, min);
        }
    }

    // Exponential shift: factor exp(mean of the arguments).
    let mut arg_sum = Expr::zero();
    let mut has_exp = false;
    for m in e.0.keys() {
        for (a, _) in m.iter() {
            if let Atom::App(Builtin::Exp, args) = a {
                arg_sum = arg_sum.add(&args[0]);
                has_exp = true;
            }
        }
    }
    let shift = if has_exp {
        arg_sum.scale(&Rat::new(BigInt::one(), BigInt::from(e.0.len() as i64)))
    } else {
        Expr::zero()
    };

    // Primitive part: divide each term, rebuilding through the monomial
    // normalizer so shifted exponents re-trigger expansion rules.
    let mut prim = Expr::zero();
    for (m, c) in &e.0 {
        let mut term = Expr::from_rat(c / &content_rat);
        for (a, p) in m.iter() {
            let p2 = p - &mins.get(a).cloned().unwrap_or_else(Rat::zero);
            if !p2.is_zero() {
                term = term.mul(&Expr::from_atom_pow(a.clone(), p2));
            }
        }
        // extracted atoms absent from this monomial appear inverted
        for (a, min) in &mins {
            if m.exponent(a).is_zero() {
                term = term.mul(&Expr::from_atom_pow(a.clone(), -min.clone()));
            }
        }
        if !shift.is_zero_expr() {
            term = term.mul(&Expr::exp(&shift.neg()));
        }
        prim = prim.add(&term);
    }

    // Sign normalization reads the FINAL primitive's lead coefficient, so a
    // second extraction is the identity. Only integer powers may flip signs.
    if signed && lead_is_negative(&prim) {
        content_rat = -content_rat;
        prim = prim.neg();
    }

    let mut content = Expr::from_rat(content_rat);
    for (a, p) in &mins {
        content = content.mul(&Expr::from_atom_pow(a.clone(), p.clone()));
    }
    if !shift.is_zero_expr() {
        content = content.mul(&Expr::exp(&shift));
    }
    (content, prim)
}

/// Builtin application with the canonical rewrites.
fn apply_builtin(b: Builtin, mut args: Vec<Expr>) -> Expr {
    assert_eq!(args.len(), 1, "builtins are unary");
    let arg = args.pop().unwrap();
    match b {
        Builtin::Exp => {
            if arg.is_zero_expr() {
                return Expr::one();
            }
            Expr::from_atom(Atom::App(Builtin::Exp, vec![arg]))
        }
        Builtin::Log => {
            if arg == Expr::one() {
                return Expr::zero();
            }
            if let Some((m, c)) = arg.as_single() {
                if c.is_one() && m.0.len() == 1 {
                    if let (Atom::App(Builtin::Exp, inner), e) = m.0.iter().next().unwrap() {
                        if e.is_one() {
                            return inner[0].clone();
                        }
                    }
                }
            }
            Expr::from_atom(Atom::App(Builtin::Log, vec![arg]))
        }
        Builtin::Atan => {
            if arg.is_zero_expr() {
                return Expr::zero();
            }
            if arg == Expr::one() {
                return Expr::pi().scale(&rat_q(1, 4));
            }
            if lead_is_negative(&arg) {
                return Expr::atan(&arg.neg()).neg();
            }
            Expr::from_atom(Atom::App(Builtin::Atan, vec![arg]))
        }
        Builtin::Sin | Builtin::Cos => sin_cos(b, arg),
    }
}

fn lead_is_negative(e: &Expr) -> bool {
    e.0.iter().next_back().map(|(_, c)| c.is_negative()).unwrap_or(false)
}

fn sin_cos(b: Builtin, arg: Expr) -> Expr {
    let is_sin = b == Builtin::Sin;
    if arg.is_zero_expr() {
        return if is_sin { Expr::zero() } else { Expr::one() };
    }
    // Parity.
    if lead_is_negative(&arg) {
        let flipped = sin_cos(b, arg.neg());
        return if is_sin { flipped.neg() } else { flipped };
    }
    // Rational multiple of pi.
    if let Some((m, c)) = arg.as_single() {
        if m.0.len() == 1 {
            if let (Atom::Pi, e) = m.0.iter().next().unwrap() {
                if e.is_one() {
                    if let Some(v) = sin_cos_pi(is_sin, c) {
                        return v;
                    }
                    // Reduce the angle mod 2*pi even when no table entry fits.
                    let two = rat_i(2);
                    let reduced = c - (c / &two).floor() * &two;
                    if reduced != *c {
                        return sin_cos_raw(b, Expr::pi().scale(&reduced));
                    }
                }
            }
        }
    }
    // sin/cos of atan.
    if let Some((m, c)) = arg.as_single() {
        if c.is_one() && m.0.len() == 1 {
            if let (Atom::App(Builtin::Atan, targs), e) = m.0.iter().next().unwrap() {
                if e.is_one() {
                    let t = &targs[0];
                    let root = Expr::one().add(&t.mul(t)).pow_rat(&rat_q(-1, 2));
                    return if is_sin { t.mul(&root) } else { root };
                }
            }
        }
    }
    // Double angle when every coefficient is an even integer.
    let all_even = arg
        .0
        .values()
        .all(|c| c.is_integer() && c.numer().is_even());
    if all_even {
        let h = arg.scale(&rat_q(1, 2));
        let (s, c) = (Expr::sin(&h), Expr::cos(&h));
        return if is_sin {
            s.mul(&c).scale_i(2)
        } else {
            Expr::one().sub(&s.mul(&s).scale_i(2))
        };
    }
    sin_cos_raw(b, arg)
}

fn sin_cos_raw(b: Builtin, arg: Expr) -> Expr {
    Expr::from_atom(Atom::App(b, vec![arg]))
}

/// Exact sin/cos at c*pi for denominators 1, 2, 3, 4, 6.
fn sin_cos_pi(is_sin: bool, c: &Rat) -> Option<Expr> {
    let two = rat_i(2);
    let c = c - (c / &two).floor() * &two; // into [0, 2)
    let q: i64 = i64::try_from(&c.denom().clone()).ok()?;
    let p: i64 = i64::try_from(&c.numer().clone()).ok()?;
    let half = |n: i64| Expr::from_rat(rat_q(n, 2));
    let r3h = |s: i64| Expr::from_rat(rat_q(s, 2)).mul(&rat_pow(&rat_i(3), &rat_q(1, 2)));
    let r2h = |s: i64| Expr::from_rat(rat_q(s, 2)).mul(&rat_pow(&rat_i(2), &rat_q(1, 2)));
    let (s, co): (Expr, Expr) = match q {
        1 => (Expr::zero(), if p % 2 == 0 { Expr::one() } else { Expr::from_int(-1) }),
        2 => match p % 4 {
            1 => (Expr::one(), Expr::zero()),
            3 => (Expr::from_int(-1), Expr::zero()),
            _ => return None,
        },
        3 => match p % 6 {
            1 => (r3h(1), half(1)),
            2 => (r3h(1), half(-1)),
            4 => (r3h(-1), half(-1)),
            5 => (r3h(-1), half(1)),
            _ => return None,
        },
        4 => match p % 8 {
            1 => (r2h(1), r2h(1)),
            3 => (r2h(1), r2h(-1)),
            5 => (r2h(-1), r2h(-1)),
            7 => (r2h(-1), r2h(1)),
            _ => return None,
        },
        6 => match p % 12 {
            1 => (half(1), r3h(1)),
            5 => (half(1), r3h(-1)),
            7 => (half(-1), r3h(-1)),
            11 => (half(-1), r3h(1)),
            _ => return None,
        },
        _ => return None,
    };
    Some(if is_sin { s } else { co })
}

impl std::ops::Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::add(self, rhs)
    }
}
impl std::ops::Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}
impl std::ops::Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::mul(self, rhs)
    }
}
impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |a, b| a.add(&b))
    }
}
