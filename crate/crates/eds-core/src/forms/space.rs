use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::scalar::Expr;

use super::form::{Blade, Form};

#[derive(Clone, Debug)]
pub struct FormError(pub String);

impl fmt::Display for FormError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for FormError {}

pub(crate) type RawTerms = Vec<(Blade, Expr)>;

/// A space presented by a coframe: named basis 1-forms, their exterior
/// derivatives, and the differentials of the coordinate scalars. Symbols
/// without a registered differential are constants.
pub struct CoframeSpace {
    pub name: String,
    basis: Vec<String>,
    index: BTreeMap<String, u8>,
    structure_raw: Vec<RawTerms>,
    coord_diff_raw: BTreeMap<String, RawTerms>,
}

impl fmt::Debug for CoframeSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoframeSpace({}, basis {:?})", self.name, self.basis)
    }
}

impl CoframeSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis_names(&self) -> &[String] {
        &self.basis
    }

    pub fn basis_name(&self, i: u8) -> &str {
        &self.basis[i as usize]
    }

    pub fn basis_index(&self, name: &str) -> Option<u8> {
        self.index.get(name).copied()
    }

    pub fn coordinates(&self) -> impl Iterator<Item = &String> {
        self.coord_diff_raw.keys()
    }

    pub fn has_coordinate(&self, name: &str) -> bool {
        self.coord_diff_raw.contains_key(name)
    }

    /// d of the i-th basis 1-form.
    pub fn d_basis(self: &Arc<Self>, i: u8) -> Form {
        Form::from_raw(self.clone(), 2, self.structure_raw[i as usize].clone())
    }

    /// d of a coordinate scalar; `None` for unregistered (constant) symbols.
    pub fn d_scalar(self: &Arc<Self>, name: &str) -> Option<Form> {
        self.coord_diff_raw
            .get(name)
            .map(|raw| Form::from_raw(self.clone(), 1, raw.clone()))
    }

    pub fn basis_form(self: &Arc<Self>, name: &str) -> Form {
        let i = self
            .basis_index(name)
            .unwrap_or_else(|| panic!("no basis 1-form `{name}` on {}", self.name));
        Form::from_raw(self.clone(), 1, vec![(vec![i], Expr::one())])
    }

    pub fn scalar(self: &Arc<Self>, e: Expr) -> Form {
        Form::from_raw(self.clone(), 0, vec![(Vec::new(), e)])
    }

    pub fn zero(self: &Arc<Self>, degree: usize) -> Form {
        Form::from_raw(self.clone(), degree, Vec::new())
    }

    /// Top-degree volume blade e_0 ^ ... ^ e_{n-1}.
    pub fn volume(self: &Arc<Self>) -> Form {
        let blade: Blade = (0..self.dim() as u8).collect();
        Form::from_raw(self.clone(), self.dim(), vec![(blade, Expr::one())])
    }
}

/// Incremental construction: declare the basis, then the nonzero structure
/// equations and coordinate differentials, then `build()` (which checks
/// d^2 = 0 on everything).
pub struct SpaceBuilder {
    name: String,
    basis: Vec<String>,
    structure: BTreeMap<String, Vec<(Vec<String>, Expr)>>,
    coords: BTreeMap<String, Vec<(Vec<String>, Expr)>>,
}

impl SpaceBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        SpaceBuilder {
            name: name.into(),
            basis: Vec::new(),
            structure: BTreeMap::new(),
            coords: BTreeMap::new(),
        }
    }

    pub fn basis<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.basis.extend(names.into_iter().map(Into::into));
        self
    }

    /// Declare d(basis form `of`) = sum of coeff * (a ^ b) terms.
    pub fn d(mut self, of: &str, terms: Vec<(Vec<&str>, Expr)>) -> Self {
        let entry = self.structure.entry(of.to_string()).or_default();
        for (names, c) in terms {
            entry.push((names.into_iter().map(String::from).collect(), c));
        }
        self
    }

    /// Declare d(scalar `name`) = sum of coeff * basis 1-form terms.
    pub fn scalar(mut self, name: &str, terms: Vec<(&str, Expr)>) -> Self {
        let entry = self.coords.entry(name.to_string()).or_default();
        for (b, c) in terms {
            entry.push((vec![b.to_string()], c));
        }
        self
    }

    fn resolve(
        index: &BTreeMap<String, u8>,
        terms: &[(Vec<String>, Expr)],
        what: &str,
    ) -> Result<RawTerms, FormError> {
        let mut raw: BTreeMap<Blade, Expr> = BTreeMap::new();
        for (names, c) in terms {
            let mut blade: Vec<u8> = Vec::with_capacity(names.len());
            for n in names {
                let i = index
                    .get(n)
                    .copied()
                    .ok_or_else(|| FormError(format!("{what}: unknown basis form `{n}`")))?;
                blade.push(i);
            }
            // sort with sign
            let (sorted, sign) = super::form::sort_blade(&blade)
                .ok_or_else(|| FormError(format!("{what}: repeated basis form in term")))?;
            let c = if sign < 0 { c.neg() } else { c.clone() };
            let slot = raw.entry(sorted).or_insert_with(Expr::zero);
            *slot = slot.add(&c);
        }
        raw.retain(|_, c| !c.is_zero_expr());
        Ok(raw.into_iter().collect())
    }

    pub fn build(self) -> Result<Arc<CoframeSpace>, FormError> {
        if self.basis.len() > 64 {
            return Err(FormError("coframe dimension cap is 64".into()));
        }
        let mut index = BTreeMap::new();
        for (i, n) in self.basis.iter().enumerate() {
            if index.insert(n.clone(), i as u8).is_some() {
                return Err(FormError(format!("duplicate basis form `{n}`")));
            }
        }
        for of in self.structure.keys() {
            if !index.contains_key(of) {
                return Err(FormError(format!("structure equation for unknown form `{of}`")));
            }
        }
        let mut structure_raw = vec![Vec::new(); self.basis.len()];
        for (of, terms) in &self.structure {
            let raw = Self::resolve(&index, terms, &format!("d({of})"))?;
            structure_raw[index[of] as usize] = raw;
        }
        let mut coord_diff_raw = BTreeMap::new();
        for (name, terms) in &self.coords {
            let raw = Self::resolve(&index, terms, &format!("d({name})"))?;
            coord_diff_raw.insert(name.clone(), raw);
        }
        let space = Arc::new(CoframeSpace {
            name: self.name,
            basis: self.basis,
            index,
            structure_raw,
            coord_diff_raw,
        });

        // d^2 = 0 on the basis and on every coordinate scalar.
        for i in 0..space.dim() as u8 {
            let dd = space.d_basis(i).d();
            if !dd.is_zero_exact() {
                return Err(FormError(format!(
                    "d^2({}) = {} is not 0",
                    space.basis_name(i),
                    dd
                )));
            }
        }
        let names: Vec<String> = space.coord_diff_raw.keys().cloned().collect();
        for name in names {
            let dd = space.d_scalar(&name).unwrap().d();
            if !dd.is_zero_exact() {
                return Err(FormError(format!("d^2({name}) = {dd} is not 0")));
            }
        }
        Ok(space)
    }
}
