use std::collections::BTreeMap;

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use super::atom::{Atom, Builtin};
use super::expr::{Expr, Rat};

pub type NumValue = BigFloat;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NumError {
    MissingSymbol(String),
    /// Expression contains an opaque user function; no numeric model exists.
    OpaqueFunction(String),
    /// Evaluation left the real domain (log of a non-positive value, zero
    /// divisor, fractional power of a negative base with even root, ...).
    Domain(String),
}

impl std::fmt::Display for NumError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NumError::MissingSymbol(s) => write!(f, "no value bound for `{s}`"),
            NumError::OpaqueFunction(s) => write!(f, "opaque function `{s}`"),
            NumError::Domain(s) => write!(f, "domain error: {s}"),
        }
    }
}

impl std::error::Error for NumError {}

/// Arbitrary-precision evaluation context.
pub struct NumEnv {
    pub prec_bits: usize,
    pub digits: usize,
    rm: RoundingMode,
    cc: Consts,
}

impl NumEnv {
    /// Working precision from a decimal digit request, with guard bits.
    pub fn with_digits(digits: usize) -> Self {
        let bits = ((digits as f64) * std::f64::consts::LOG2_10).ceil() as usize + 32;
        NumEnv { prec_bits: bits, digits, rm: RoundingMode::ToEven, cc: Consts::new().expect("constants cache") }
    }

    pub fn from_f64(&self, v: f64) -> BigFloat {
        BigFloat::from_f64(v, self.prec_bits)
    }

    pub fn from_bigint(&self, n: &BigInt) -> BigFloat {
        let (sign, digits) = n.to_u64_digits();
        let wp = self.prec_bits.max(64 * digits.len() + 32);
        // 2^64 is exactly representable
        let base = BigFloat::from_f64(18446744073709551616.0, wp);
        let mut acc = BigFloat::from_i64(0, wp);
        for limb in digits.iter().rev() {
            acc = acc.mul(&base, wp, self.rm).add(&BigFloat::from_u64(*limb, wp), wp, self.rm);
        }
        if sign == num_bigint::Sign::Minus {
            acc = acc.neg();
        }
        acc
    }

    pub fn from_rat(&self, r: &Rat) -> BigFloat {
        let n = self.from_bigint(r.numer());
        let d = self.from_bigint(r.denom());
        n.div(&d, self.prec_bits, self.rm)
    }

    pub fn pi(&mut self) -> BigFloat {
        self.cc.pi(self.prec_bits, self.rm)
    }

    fn check(&self, v: BigFloat, what: &str) -> Result<BigFloat, NumError> {
        if v.is_nan() || v.is_inf() {
            Err(NumError::Domain(format!("{what} is not finite")))
        } else {
            Ok(v)
        }
    }

    fn powi(&mut self, base: &BigFloat, mut k: i64) -> Result<BigFloat, NumError> {
        let p = self.prec_bits;
        let rm = self.rm;
        let neg = k < 0;
        if neg {
            k = -k;
        }
        let mut acc = BigFloat::from_i64(1, p);
        let mut sq = base.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&sq, p, rm);
            }
            sq = sq.mul(&sq, p, rm);
            k >>= 1;
        }
        if neg {
            if base.is_zero() {
                return Err(NumError::Domain("negative power of zero".into()));
            }
            acc = BigFloat::from_i64(1, p).div(&acc, p, rm);
        }
        self.check(acc, "integer power")
    }

    fn pow_rat(&mut self, base: &BigFloat, e: &Rat) -> Result<BigFloat, NumError> {
        if e.is_integer() {
            let k = e.numer().to_i64().ok_or_else(|| NumError::Domain("huge exponent".into()))?;
            return self.powi(base, k);
        }
        let p = self.prec_bits;
        let rm = self.rm;
        if base.is_zero() {
            return if e.is_positive() {
                Ok(BigFloat::from_i64(0, p))
            } else {
                Err(NumError::Domain("non-positive fractional power of zero".into()))
            };
        }
        if base.sign() == Some(Sign::Neg) {
            // real branch exists only for odd roots
            let denom_odd = !(e.denom() % BigInt::from(2)).is_zero();
            if !denom_odd {
                return Err(NumError::Domain("even root of negative value".into()));
            }
            let mag = self.pow_rat(&base.abs(), e)?;
            let numer_odd = !(e.numer() % BigInt::from(2)).is_zero();
            return Ok(if numer_odd { mag.neg() } else { mag });
        }
        let ebf = self.from_rat(e);
        let v = base.pow(&ebf, p, rm, &mut self.cc);
        self.check(v, "power")
    }

    fn eval_atom(
        &mut self,
        a: &Atom,
        vals: &BTreeMap<String, BigFloat>,
    ) -> Result<BigFloat, NumError> {
        let p = self.prec_bits;
        let rm = self.rm;
        match a {
            Atom::Sym(s) => {
                vals.get(s).cloned().ok_or_else(|| NumError::MissingSymbol(s.clone()))
            }
            Atom::Pi => Ok(self.pi()),
            Atom::App(b, args) => {
                let u = self.eval(&args[0], vals)?;
                let v = match b {
                    Builtin::Sin => u.sin(p, rm, &mut self.cc),
                    Builtin::Cos => u.cos(p, rm, &mut self.cc),
                    Builtin::Exp => u.exp(p, rm, &mut self.cc),
                    Builtin::Log => {
                        if u.sign() != Some(Sign::Pos) || u.is_zero() {
                            return Err(NumError::Domain("log of non-positive value".into()));
                        }
                        u.ln(p, rm, &mut self.cc)
                    }
                    Builtin::Atan => u.atan(p, rm, &mut self.cc),
                };
                self.check(v, b.name())
            }
            Atom::UserApp(f, _) => Err(NumError::OpaqueFunction(f.name.clone())),
            Atom::Poly(e) => self.eval(e, vals),
        }
    }

    /// Evaluate the whole expression.
    pub fn eval(
        &mut self,
        e: &Expr,
        vals: &BTreeMap<String, BigFloat>,
    ) -> Result<BigFloat, NumError> {
        let p = self.prec_bits;
        let rm = self.rm;
        let mut acc = BigFloat::from_i64(0, p);
        for (m, c) in e.terms() {
            let t = self.eval_term(m.iter(), c, vals)?;
            acc = acc.add(&t, p, rm);
        }
        self.check(acc, "sum")
    }

    /// Evaluate a single monomial with its coefficient.
    pub fn eval_term<'a, I>(
        &mut self,
        factors: I,
        coeff: &Rat,
        vals: &BTreeMap<String, BigFloat>,
    ) -> Result<BigFloat, NumError>
    where
        I: Iterator<Item = (&'a Atom, &'a Rat)>,
    {
        let p = self.prec_bits;
        let rm = self.rm;
        let mut acc = self.from_rat(coeff);
        for (a, k) in factors {
            let base = self.eval_atom(a, vals)?;
            let powed = self.pow_rat(&base, k)?;
            acc = acc.mul(&powed, p, rm);
        }
        self.check(acc, "product")
    }
}

/// Lossy readout for reporting; exact comparisons stay in `BigFloat`.
pub fn approx_f64(v: &BigFloat) -> f64 {
    format!("{v}").parse::<f64>().unwrap_or(f64::NAN)
}
