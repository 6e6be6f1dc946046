use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::ser::{SerializeSeq, SerializeStruct};
use serde::Serialize;

use crate::scalar::{
    decide_zero, Assumptions, Expr, Rat, SampleSpec, TriState, Verdict, ZeroPolicy,
};

use super::space::{CoframeSpace, FormError, RawTerms};
use super::vector::VectorField;

/// Strictly increasing basis indices.
pub type Blade = Vec<u8>;

/// Sort a blade into increasing order. Returns the sign of the permutation,
/// or `None` if an index repeats (the term is zero).
pub(crate) fn sort_blade(blade: &[u8]) -> Option<(Blade, i32)> {
    let mut v = blade.to_vec();
    let mut sign = 1;
    // insertion sort, counting swaps
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    for w in v.windows(2) {
        if w[0] == w[1] {
            return None;
        }
    }
    Some((v, sign))
}

/// Merge two increasing blades, counting the inversions of the shuffle.
fn merge_blades(a: &[u8], b: &[u8]) -> Option<(Blade, i32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut sign = 1;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            return None;
        }
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            // b[j] jumps over the remaining elements of a
            if (a.len() - i) % 2 == 1 {
                sign = -sign;
            }
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some((out, sign))
}

/// A differential form of homogeneous degree with expression coefficients.
#[derive(Clone)]
pub struct Form {
    space: Arc<CoframeSpace>,
    degree: usize,
    terms: BTreeMap<Blade, Expr>,
}

impl Form {
    pub(crate) fn from_raw(space: Arc<CoframeSpace>, degree: usize, raw: RawTerms) -> Form {
        let mut terms: BTreeMap<Blade, Expr> = BTreeMap::new();
        for (blade, c) in raw {
            debug_assert_eq!(blade.len(), degree);
            let slot = terms.entry(blade).or_insert_with(Expr::zero);
            *slot = slot.add(&c);
        }
        terms.retain(|_, c| !c.is_zero_expr());
        Form { space, degree, terms }
    }

    /// Single-term form coeff * e_blade; the blade is sorted with sign.
    pub fn monomial(space: Arc<CoframeSpace>, blade: &[u8], coeff: Expr) -> Form {
        let degree = blade.len();
        match sort_blade(blade) {
            None => Form { space, degree, terms: BTreeMap::new() },
            Some((sorted, sign)) => {
                let c = if sign < 0 { coeff.neg() } else { coeff };
                Form::from_raw(space, degree, vec![(sorted, c)])
            }
        }
    }

    pub fn space(&self) -> &Arc<CoframeSpace> {
        &self.space
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Blade, &Expr)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Coefficient of the blade named by `names` (signed by their order).
    pub fn coefficient(&self, names: &[&str]) -> Expr {
        let mut blade = Vec::with_capacity(names.len());
        for n in names {
            match self.space.basis_index(n) {
                Some(i) => blade.push(i),
                None => panic!("no basis 1-form `{n}` on {}", self.space.name),
            }
        }
        let Some((sorted, sign)) = sort_blade(&blade) else {
            return Expr::zero();
        };
        let c = self.terms.get(&sorted).cloned().unwrap_or_else(Expr::zero);
        if sign < 0 {
            c.neg()
        } else {
            c
        }
    }

    /// The unique coefficient of a 0-form.
    pub fn as_scalar(&self) -> Option<Expr> {
        if self.degree != 0 {
            return None;
        }
        Some(self.terms.get(&Vec::new()).cloned().unwrap_or_else(Expr::zero))
    }

    fn same_space(&self, other: &Form) {
        assert!(
            Arc::ptr_eq(&self.space, &other.space),
            "forms live on different spaces ({} vs {})",
            self.space.name,
            other.space.name
        );
    }

    pub fn add(&self, other: &Form) -> Form {
        self.same_space(other);
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
        let mut terms = self.terms.clone();
        for (b, c) in &other.terms {
            let slot = terms.entry(b.clone()).or_insert_with(Expr::zero);
            *slot = slot.add(c);
        }
        terms.retain(|_, c| !c.is_zero_expr());
        Form { space: self.space.clone(), degree: self.degree, terms }
    }

    pub fn neg(&self) -> Form {
        self.scale(&Expr::from_int(-1))
    }

    pub fn sub(&self, other: &Form) -> Form {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Expr) -> Form {
        let mut terms = BTreeMap::new();
        for (b, coeff) in &self.terms {
            let c2 = coeff.mul(c);
            if !c2.is_zero_expr() {
                terms.insert(b.clone(), c2);
            }
        }
        Form { space: self.space.clone(), degree: self.degree, terms }
    }

    pub fn scale_rat(&self, c: &Rat) -> Form {
        self.scale(&Expr::from_rat(c.clone()))
    }

    /// Rebuild with every coefficient passed through `f`; zero results are pruned.
    pub fn map_coefficients(&self, f: impl Fn(&Expr) -> Expr) -> Form {
        let mut terms = BTreeMap::new();
        for (b, coeff) in &self.terms {
            let c2 = f(coeff);
            if !c2.is_zero_expr() {
                terms.insert(b.clone(), c2);
            }
        }
        Form { space: self.space.clone(), degree: self.degree, terms }
    }

    pub fn scale_i(&self, c: i64) -> Form {
        self.scale(&Expr::from_int(c))
    }

    pub fn wedge(&self, other: &Form) -> Form {
        self.same_space(other);
        let degree = self.degree + other.degree;
        let mut terms: BTreeMap<Blade, Expr> = BTreeMap::new();
        if degree <= self.space.dim() {
            for (ba, ca) in &self.terms {
                for (bb, cb) in &other.terms {
                    if let Some((blade, sign)) = merge_blades(ba, bb) {
                        let mut c = ca.mul(cb);
                        if sign < 0 {
                            c = c.neg();
                        }
                        let slot = terms.entry(blade).or_insert_with(Expr::zero);
                        *slot = slot.add(&c);
                    }
                }
            }
            terms.retain(|_, c| !c.is_zero_expr());
        }
        Form { space: self.space.clone(), degree, terms }
    }

    /// Differential of a scalar through the registered coordinates.
    pub fn d_of_expr(space: &Arc<CoframeSpace>, e: &Expr) -> Form {
        let mut out = space.zero(1);
        for s in e.symbols() {
            if let Some(ds) = space.d_scalar(&s) {
                let de = e.diff(&s);
                if !de.is_zero_expr() {
                    out = out.add(&ds.scale(&de));
                }
            }
        }
        out
    }

    /// Exterior derivative.
    pub fn d(&self) -> Form {
        let mut out = self.space.zero(self.degree + 1);
        for (blade, c) in &self.terms {
            // dc ^ blade
            let dc = Form::d_of_expr(&self.space, c);
            if dc.num_terms() > 0 {
                let rest = Form::from_raw(self.space.clone(), self.degree, vec![(blade.clone(), Expr::one())]);
                out = out.add(&dc.wedge(&rest));
            }
            // c * sum_j (-1)^(j-1) d(e_ij) ^ (blade minus ij)
            for (j, &ij) in blade.iter().enumerate() {
                let de = self.space.d_basis(ij);
                if de.num_terms() == 0 {
                    continue;
                }
                let mut rest_blade = blade.clone();
                rest_blade.remove(j);
                let rest = Form::from_raw(
                    self.space.clone(),
                    self.degree - 1,
                    vec![(rest_blade, Expr::one())],
                );
                let mut piece = de.wedge(&rest).scale(c);
                if j % 2 == 1 {
                    piece = piece.neg();
                }
                out = out.add(&piece);
            }
        }
        out
    }

    /// Interior product with a vector field.
    pub fn contract(&self, v: &VectorField) -> Form {
        assert!(
            Arc::ptr_eq(&self.space, v.space()),
            "vector field lives on a different space"
        );
        if self.degree == 0 {
            return self.space.zero(0);
        }
        let mut out = self.space.zero(self.degree - 1);
        for (blade, c) in &self.terms {
            for (j, &ij) in blade.iter().enumerate() {
                let pair = v.pairing(ij);
                if pair.is_zero_expr() {
                    continue;
                }
                let mut rest = blade.clone();
                rest.remove(j);
                let mut coeff = c.mul(pair);
                if j % 2 == 1 {
                    coeff = coeff.neg();
                }
                out = out.add(&Form::from_raw(
                    self.space.clone(),
                    self.degree - 1,
                    vec![(rest, coeff)],
                ));
            }
        }
        out
    }

    /// Lie derivative via Cartan's formula L_v = d(v _| .) + v _| d(.).
    pub fn lie(&self, v: &VectorField) -> Form {
        if self.degree == 0 {
            return self.d().contract(v);
        }
        self.contract(v).d().add(&self.d().contract(v))
    }

    /// Substitute some basis 1-forms by arbitrary 1-forms (index -> form).
    pub fn substitute_basis(&self, repl: &BTreeMap<u8, Form>) -> Form {
        let mut out = self.space.zero(self.degree);
        for (blade, c) in &self.terms {
            let mut acc = self.space.scalar(c.clone());
            for &i in blade {
                let factor = match repl.get(&i) {
                    Some(f) => f.clone(),
                    None => Form::from_raw(self.space.clone(), 1, vec![(vec![i], Expr::one())]),
                };
                acc = acc.wedge(&factor);
            }
            out = out.add(&acc);
        }
        out
    }

    /// Reduce modulo the Pfaffian system spanned by `gens` (1-forms): solve
    /// each generator for a pivot basis form and substitute it away, i.e.
    /// restrict to the subbundle where the generators vanish.
    pub fn reduce_mod_pfaffian(&self, gens: &[Form]) -> Result<Form, FormError> {
        let mut repl: BTreeMap<u8, Form> = BTreeMap::new();
        for g in gens {
            self.same_space(g);
            assert_eq!(g.degree(), 1, "Pfaffian generators must be 1-forms");
            // express the generator in terms of not-yet-pivoted basis forms
            let g_red = g.substitute_basis(&repl);
            // pivot: prefer a constant coefficient, else any formally
            // invertible (single-monomial) one
            let mut pivot: Option<(u8, Expr)> = None;
            for (blade, c) in &g_red.terms {
                if repl.contains_key(&blade[0]) {
                    continue;
                }
                if c.as_rat().is_some() {
                    pivot = Some((blade[0], c.clone()));
                    break;
                }
                if pivot.is_none() && c.cleared().num_terms() == 1 {
                    pivot = Some((blade[0], c.clone()));
                }
            }
            let Some((p, cp)) = pivot else {
                return Err(FormError(format!(
                    "no invertible pivot found in Pfaffian generator {g_red}"
                )));
            };
            // e_p = -(1/c_p) * (g_red - c_p e_p)
            let mut rest = g_red.clone();
            rest = rest.sub(&Form::from_raw(
                self.space.clone(),
                1,
                vec![(vec![p], cp.clone())],
            ));
            let r = rest.scale(&cp.recip().neg());
            // keep the map triangular: eliminate p from existing entries
            let single = BTreeMap::from([(p, r.clone())]);
            for v in repl.values_mut() {
                *v = v.substitute_basis(&single);
            }
            repl.insert(p, r);
        }
        Ok(self.substitute_basis(&repl))
    }

    /// Exact zero test: every coefficient clears to the empty sum.
    pub fn is_zero_exact(&self) -> bool {
        self.terms.values().all(|c| c.cleared().is_zero_expr())
    }

    /// Tri-state zero decision, coefficient by coefficient.
    pub fn decide_zero(
        &self,
        policy: ZeroPolicy,
        spec: &SampleSpec,
        assume: &Assumptions,
    ) -> FormVerdict {
        let mut coefficients = Vec::new();
        let mut verdict = Verdict::Zero;
        for (blade, c) in &self.terms {
            let t = decide_zero(c, policy, spec, assume);
            match t.verdict {
                Verdict::Zero => {}
                Verdict::NonZero => verdict = Verdict::NonZero,
                Verdict::Unknown => {
                    if verdict == Verdict::Zero {
                        verdict = Verdict::Unknown;
                    }
                }
            }
            coefficients.push((self.blade_name(blade), t));
        }
        FormVerdict { verdict, coefficients }
    }

    pub fn blade_name(&self, blade: &Blade) -> String {
        if blade.is_empty() {
            return "1".to_string();
        }
        blade
            .iter()
            .map(|&i| self.space.basis_name(i))
            .collect::<Vec<_>>()
            .join("^")
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (blade, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            let cs = format!("{c}");
            let needs_parens = c.num_terms() > 1;
            if blade.is_empty() {
                write!(f, "{cs}")?;
            } else if cs == "1" {
                write!(f, "{}", self.blade_name(blade))?;
            } else if cs == "-1" {
                write!(f, "-{}", self.blade_name(blade))?;
            } else if needs_parens {
                write!(f, "({cs})*{}", self.blade_name(blade))?;
            } else {
                write!(f, "{cs}*{}", self.blade_name(blade))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Form[{} deg {}]({self})", self.space.name, self.degree)
    }
}

impl Serialize for Form {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Term<'a>(&'a Form, &'a Blade, &'a Expr);
        impl Serialize for Term<'_> {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut t = s.serialize_struct("term", 2)?;
                let names: Vec<&str> =
                    self.1.iter().map(|&i| self.0.space().basis_name(i)).collect();
                t.serialize_field("blade", &names)?;
                t.serialize_field("coeff", self.2)?;
                t.end()
            }
        }
        struct Terms<'a>(&'a Form);
        impl Serialize for Terms<'_> {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut seq = s.serialize_seq(Some(self.0.num_terms()))?;
                for (b, c) in self.0.terms() {
                    seq.serialize_element(&Term(self.0, b, c))?;
                }
                seq.end()
            }
        }
        let mut st = s.serialize_struct("form", 3)?;
        st.serialize_field("space", &self.space.name)?;
        st.serialize_field("degree", &self.degree)?;
        st.serialize_field("terms", &Terms(self))?;
        st.end()
    }
}

/// Aggregated zero decision for a form, with one transcript per blade.
#[derive(Clone, Debug, Serialize)]
pub struct FormVerdict {
    pub verdict: Verdict,
    pub coefficients: Vec<(String, TriState)>,
}

impl FormVerdict {
    pub fn is_zero(&self) -> bool {
        self.verdict == Verdict::Zero
    }
}
