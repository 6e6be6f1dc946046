//! Jet charts for maps R^n -> R^s: derivative coordinates, contact systems,
//! total derivatives, prolongation, equation loci, and jet graphs of
//! sections.
//!
//! Coordinates are plain symbols with a fixed naming scheme. For one
//! dependent variable they are z, p1, p12, ...; for several, z1, z2, ...,
//! p1_12, p2_112, .... Multi-indices are stored sorted, so mixed partials
//! are identified under permutation. Independent coordinates may carry a
//! metric sign (+1 or -1) consumed by the wave catalogs.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use itertools::Itertools;

use crate::forms::{CoframeMap, CoframeSpace, Form, FormError, SpaceBuilder};
use crate::scalar::Expr;

/// What a symbol means on a chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JetCoord {
    /// Independent coordinate x^i (position).
    X(usize),
    /// Dependent coordinate z^alpha (position).
    Z(usize),
    /// Derivative coordinate p^alpha_I (dependent position, sorted index
    /// positions; the length may exceed the chart order).
    P(usize, Vec<usize>),
}

#[derive(Clone)]
pub struct JetChart {
    x_names: Vec<String>,
    z_names: Vec<String>,
    order: usize,
    first_index: usize,
    signs: Vec<i64>,
    space: Arc<CoframeSpace>,
    base: Arc<CoframeSpace>,
}

impl JetChart {
    /// Standard chart: x1..xn, z (or z1..zs), derivative coordinates up to
    /// `order`.
    pub fn new(n: usize, s: usize, order: usize) -> Result<JetChart, FormError> {
        let x: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        let z: Vec<String> = if s == 1 {
            vec!["z".to_string()]
        } else {
            (1..=s).map(|a| format!("z{a}")).collect()
        };
        let xr: Vec<&str> = x.iter().map(|s| s.as_str()).collect();
        let zr: Vec<&str> = z.iter().map(|s| s.as_str()).collect();
        JetChart::with_names(&xr, &zr, order, 1, None)
    }

    /// Fully explicit chart. `first_index` is the display digit of the first
    /// independent coordinate (0 for time-first Lorentz charts); `signs`
    /// gives one metric sign per independent coordinate.
    pub fn with_names(
        x_names: &[&str],
        z_names: &[&str],
        order: usize,
        first_index: usize,
        signs: Option<Vec<i64>>,
    ) -> Result<JetChart, FormError> {
        let n = x_names.len();
        let s = z_names.len();
        if n == 0 || s == 0 {
            return Err(FormError("a jet chart needs at least one coordinate each way".into()));
        }
        if order == 0 {
            return Err(FormError("jet chart order must be at least 1".into()));
        }
        if first_index + n > 10 {
            return Err(FormError("index digits must stay in 0..9".into()));
        }
        let signs = signs.unwrap_or_else(|| vec![1; n]);
        if signs.len() != n || signs.iter().any(|s| *s != 1 && *s != -1) {
            return Err(FormError("signature needs one sign (+1/-1) per coordinate".into()));
        }
        let mut chart = JetChart {
            x_names: x_names.iter().map(|s| s.to_string()).collect(),
            z_names: z_names.iter().map(|s| s.to_string()).collect(),
            order,
            first_index,
            signs,
            // placeholder, rebuilt below
            space: SpaceBuilder::new("tmp").basis(["e"]).build()?,
            base: SpaceBuilder::new("tmp").basis(["e"]).build()?,
        };
        chart.space = chart.build_space()?;
        chart.base = chart.build_base()?;
        Ok(chart)
    }

    fn build_space(&self) -> Result<Arc<CoframeSpace>, FormError> {
        let n = self.n();
        let s = self.s();
        let mut b = SpaceBuilder::new(format!("J{}(R{n},R{s})", self.order));
        let mut basis: Vec<String> = self.x_names.iter().map(|x| format!("d{x}")).collect();
        for len in 0..self.order {
            for idx in self.multi_indices(len) {
                for a in 0..s {
                    basis.push(self.theta_name(a, &idx));
                }
            }
        }
        for idx in self.multi_indices(self.order) {
            for a in 0..s {
                basis.push(format!("d{}", self.p_name(a, &idx)));
            }
        }
        b = b.basis(basis.iter().map(|s| s.as_str()));

        // d(theta^a_I) = -sum_j theta^a_{Ij} ^ dx^j (top differentials at the
        // last level)
        for len in 0..self.order {
            for idx in self.multi_indices(len) {
                for a in 0..s {
                    let name = self.theta_name(a, &idx);
                    let mut terms = Vec::new();
                    for j in 0..n {
                        let mut up = idx.clone();
                        up.push(j);
                        up.sort_unstable();
                        let upper = if len + 1 < self.order {
                            self.theta_name(a, &up)
                        } else {
                            format!("d{}", self.p_name(a, &up))
                        };
                        terms.push((vec![upper, format!("d{}", self.x_names[j])], Expr::from_int(-1)));
                    }
                    let terms_ref: Vec<(Vec<&str>, Expr)> = terms
                        .iter()
                        .map(|(v, c)| (v.iter().map(|s| s.as_str()).collect(), c.clone()))
                        .collect();
                    b = b.d(&name, terms_ref);
                }
            }
        }

        // coordinate differentials
        for (i, x) in self.x_names.iter().enumerate() {
            b = b.scalar(x, vec![(&format!("d{}", self.x_names[i]), Expr::one())]);
        }
        for a in 0..s {
            for len in 0..=self.order {
                for idx in self.multi_indices(len) {
                    let coord = self.p_name(a, &idx);
                    if len == self.order {
                        b = b.scalar(&coord, vec![(&format!("d{coord}"), Expr::one())]);
                    } else {
                        let mut terms: Vec<(String, Expr)> =
                            vec![(self.theta_name(a, &idx), Expr::one())];
                        for j in 0..n {
                            let mut up = idx.clone();
                            up.push(j);
                            up.sort_unstable();
                            terms.push((
                                format!("d{}", self.x_names[j]),
                                Expr::sym(self.p_name(a, &up)),
                            ));
                        }
                        let terms_ref: Vec<(&str, Expr)> =
                            terms.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
                        b = b.scalar(&coord, terms_ref);
                    }
                }
            }
        }
        b.build()
    }

    fn build_base(&self) -> Result<Arc<CoframeSpace>, FormError> {
        let mut b = SpaceBuilder::new(format!("R{}", self.n()));
        let basis: Vec<String> = self.x_names.iter().map(|x| format!("d{x}")).collect();
        b = b.basis(basis.iter().map(|s| s.as_str()));
        for x in &self.x_names {
            b = b.scalar(x, vec![(&format!("d{x}"), Expr::one())]);
        }
        b.build()
    }

    pub fn n(&self) -> usize {
        self.x_names.len()
    }

    pub fn s(&self) -> usize {
        self.z_names.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn x_name(&self, i: usize) -> &str {
        &self.x_names[i]
    }

    pub fn z_name(&self, a: usize) -> &str {
        &self.z_names[a]
    }

    pub fn sign(&self, i: usize) -> i64 {
        self.signs[i]
    }

    /// The full jet-space coframe (dx, theta levels, top dp).
    pub fn space(&self) -> &Arc<CoframeSpace> {
        &self.space
    }

    /// The base chart (dx only).
    pub fn base(&self) -> &Arc<CoframeSpace> {
        &self.base
    }

    fn digits(&self, idx: &[usize]) -> String {
        idx.iter()
            .map(|&i| char::from_digit((self.first_index + i) as u32, 10).unwrap())
            .collect()
    }

    /// Coordinate name for p^a_I; |I| = 0 gives the dependent coordinate.
    pub fn p_name(&self, a: usize, idx: &[usize]) -> String {
        debug_assert!(idx.windows(2).all(|w| w[0] <= w[1]));
        if idx.is_empty() {
            return self.z_names[a].clone();
        }
        if self.s() == 1 {
            format!("p{}", self.digits(idx))
        } else {
            format!("p{}_{}", a + 1, self.digits(idx))
        }
    }

    /// Basis name of the contact form theta^a_I (|I| < order).
    pub fn theta_name(&self, a: usize, idx: &[usize]) -> String {
        let head = if self.s() == 1 {
            "theta".to_string()
        } else {
            format!("theta{}", a + 1)
        };
        if idx.is_empty() {
            head
        } else {
            format!("{head}_{}", self.digits(idx))
        }
    }

    /// Sorted multi-indices of the given length over 0..n.
    pub fn multi_indices(&self, len: usize) -> Vec<Vec<usize>> {
        if len == 0 {
            return vec![Vec::new()];
        }
        (0..self.n()).combinations_with_replacement(len).collect()
    }

    /// Interpret a symbol as a chart coordinate.
    pub fn parse_coord(&self, sym: &str) -> Option<JetCoord> {
        if let Some(i) = self.x_names.iter().position(|x| x == sym) {
            return Some(JetCoord::X(i));
        }
        if let Some(a) = self.z_names.iter().position(|z| z == sym) {
            return Some(JetCoord::Z(a));
        }
        let rest = sym.strip_prefix('p')?;
        let (a, digits) = if self.s() == 1 {
            (0, rest)
        } else {
            let (head, tail) = rest.split_once('_')?;
            let a: usize = head.parse().ok()?;
            if a == 0 || a > self.s() {
                return None;
            }
            (a - 1, tail)
        };
        if digits.is_empty() {
            return None;
        }
        let mut idx = Vec::with_capacity(digits.len());
        for ch in digits.chars() {
            let d = ch.to_digit(10)? as usize;
            if d < self.first_index || d >= self.first_index + self.n() {
                return None;
            }
            idx.push(d - self.first_index);
        }
        if idx.windows(2).any(|w| w[0] > w[1]) {
            return None; // only sorted spellings are coordinates
        }
        Some(JetCoord::P(a, idx))
    }

    /// Highest derivative order among the coordinates of an expression.
    pub fn order_of(&self, e: &Expr) -> usize {
        e.symbols()
            .iter()
            .filter_map(|s| match self.parse_coord(s) {
                Some(JetCoord::P(_, idx)) => Some(idx.len()),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Total derivative D_i. The result may involve coordinates one order
    /// above the input's.
    pub fn total_derivative(&self, i: usize, e: &Expr) -> Expr {
        assert!(i < self.n());
        let mut out = Expr::zero();
        for sym in e.symbols() {
            let Some(coord) = self.parse_coord(&sym) else { continue };
            let de = e.diff(&sym);
            if de.is_zero_expr() {
                continue;
            }
            let vel = match coord {
                JetCoord::X(j) => {
                    if j == i {
                        Expr::one()
                    } else {
                        continue;
                    }
                }
                JetCoord::Z(a) => Expr::sym(self.p_name(a, &[i])),
                JetCoord::P(a, mut idx) => {
                    idx.push(i);
                    idx.sort_unstable();
                    Expr::sym(self.p_name(a, &idx))
                }
            };
            out = out.add(&de.mul(&vel));
        }
        out
    }

    /// D_I for a multi-index (applied left to right).
    pub fn total_derivative_multi(&self, idx: &[usize], e: &Expr) -> Expr {
        let mut out = e.clone();
        for &i in idx {
            out = self.total_derivative(i, &out);
        }
        out
    }

    /// Generators theta^a_I, |I| < order, of the contact system.
    pub fn contact_forms(&self) -> Vec<Form> {
        let mut out = Vec::new();
        for len in 0..self.order {
            for idx in self.multi_indices(len) {
                for a in 0..self.s() {
                    out.push(self.space.basis_form(&self.theta_name(a, &idx)));
                }
            }
        }
        out
    }

    /// The lowest contact form theta^a.
    pub fn theta(&self, a: usize) -> Form {
        self.space.basis_form(&self.theta_name(a, &[]))
    }

    pub fn dx(&self, i: usize) -> Form {
        self.space.basis_form(&format!("d{}", self.x_names[i]))
    }

    /// Base volume dx^1 ^ ... ^ dx^n on the jet space.
    pub fn dx_volume(&self) -> Form {
        let mut out = self.space.scalar(Expr::one());
        for i in 0..self.n() {
            out = out.wedge(&self.dx(i));
        }
        out
    }

    /// (n-1)-form dx_(i) with dx^i ^ dx_(i) = dx (no sum).
    pub fn dx_hook(&self, i: usize) -> Form {
        let mut out = self.space.scalar(if i % 2 == 0 {
            Expr::one()
        } else {
            Expr::from_int(-1)
        });
        for j in 0..self.n() {
            if j != i {
                out = out.wedge(&self.dx(j));
            }
        }
        out
    }

    /// Same chart one order higher.
    pub fn prolong(&self) -> Result<JetChart, FormError> {
        let xr: Vec<&str> = self.x_names.iter().map(|s| s.as_str()).collect();
        let zr: Vec<&str> = self.z_names.iter().map(|s| s.as_str()).collect();
        JetChart::with_names(&xr, &zr, self.order + 1, self.first_index, Some(self.signs.clone()))
    }

    /// Pullback along the projection (this chart) -> `lower`; lifts forms
    /// from the lower chart to this one.
    pub fn projection_to(&self, lower: &JetChart) -> Result<CoframeMap, FormError> {
        if lower.order >= self.order
            || lower.x_names != self.x_names
            || lower.z_names != self.z_names
        {
            return Err(FormError("projection target must be a lower prolongation of the same chart".into()));
        }
        let mut images: Vec<(String, Form)> = Vec::new();
        for name in lower.space.basis_names() {
            let image = if self.space.basis_index(name).is_some() {
                self.space.basis_form(name)
            } else {
                // a top differential of the lower chart: dp^a_I with
                // |I| = lower.order, which here is theta^a_I + p^a_{Ij} dx^j
                let coord = name.strip_prefix('d').ok_or_else(|| {
                    FormError(format!("unexpected basis form `{name}`"))
                })?;
                self.space
                    .d_scalar(coord)
                    .ok_or_else(|| FormError(format!("no differential for `{coord}`")))?
            };
            images.push((name.clone(), image));
        }
        let image_refs: Vec<(&str, Form)> =
            images.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
        CoframeMap::new(self.space.clone(), lower.space.clone(), image_refs, Vec::new())
    }

    /// Jet graph of explicit functions z^a(x).
    pub fn section(&self, z: Vec<Expr>) -> Result<Section, FormError> {
        Section::new(self.clone(), z)
    }
}

/// A section given by expressions z^a(x); derivative coordinates come from
/// literal differentiation.
pub struct Section {
    chart: JetChart,
    z: Vec<Expr>,
}

impl Section {
    pub fn new(chart: JetChart, z: Vec<Expr>) -> Result<Section, FormError> {
        if z.len() != chart.s() {
            return Err(FormError("one expression per dependent coordinate".into()));
        }
        for e in &z {
            for sym in e.symbols() {
                match chart.parse_coord(&sym) {
                    None | Some(JetCoord::X(_)) => {}
                    _ => {
                        return Err(FormError(format!(
                            "section expressions may only use base coordinates, found `{sym}`"
                        )))
                    }
                }
            }
        }
        Ok(Section { chart, z })
    }

    pub fn chart(&self) -> &JetChart {
        &self.chart
    }

    /// p^a_I of the graph: the literal partial derivative of z^a(x).
    pub fn jet(&self, a: usize, idx: &[usize]) -> Expr {
        let mut out = self.z[a].clone();
        for &i in idx {
            out = out.diff(self.chart.x_name(i));
        }
        out
    }

    /// Substitute the graph into a scalar on the jet chart (any order).
    pub fn residual(&self, e: &Expr) -> Expr {
        let mut map = BTreeMap::new();
        for sym in e.symbols() {
            match self.chart.parse_coord(&sym) {
                Some(JetCoord::Z(a)) => {
                    map.insert(sym, self.z[a].clone());
                }
                Some(JetCoord::P(a, idx)) => {
                    let val = self.jet(a, &idx);
                    map.insert(sym, val);
                }
                _ => {}
            }
        }
        e.subst(&map)
    }

    /// The graph inclusion as a pullback map base -> jet space.
    pub fn graph_map(&self) -> Result<CoframeMap, FormError> {
        let chart = &self.chart;
        let base = chart.base().clone();
        let mut basis_images: Vec<(String, Form)> = Vec::new();
        let mut scalar_images: Vec<(String, Expr)> = Vec::new();
        for name in chart.space().basis_names() {
            let image = if base.basis_index(name).is_some() {
                base.basis_form(name)
            } else if name.starts_with("theta") {
                base.zero(1)
            } else {
                // top differential d(p^a_I)
                let coord = name.strip_prefix('d').unwrap();
                let Some(JetCoord::P(a, idx)) = chart.parse_coord(coord) else {
                    return Err(FormError(format!("unexpected basis form `{name}`")));
                };
                Form::d_of_expr(&base, &self.jet(a, &idx))
            };
            basis_images.push((name.clone(), image));
        }
        for a in 0..chart.s() {
            for len in 0..=chart.order() {
                for idx in chart.multi_indices(len) {
                    scalar_images.push((chart.p_name(a, &idx), self.jet(a, &idx)));
                }
            }
        }
        let b: Vec<(&str, Form)> =
            basis_images.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
        let s: Vec<(&str, Expr)> =
            scalar_images.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
        CoframeMap::new(base, chart.space().clone(), b, s)
    }

    /// Pull a form on the jet space back to the base along the graph.
    pub fn pull(&self, f: &Form) -> Result<Form, FormError> {
        Ok(self.graph_map()?.pullback(f))
    }
}

/// A PDE locus with its prolonged relations solved for distinguished top
/// coordinates, as a triangular substitution table.
pub struct EquationLocus {
    chart: JetChart,
    equations: Vec<Expr>,
    work_order: usize,
    subs: BTreeMap<String, Expr>,
}

impl EquationLocus {
    /// Prolong each equation by total derivatives up to `work_order` and
    /// solve every relation for its graded-lex-maximal linearly occurring
    /// coordinate.
    pub fn new(chart: &JetChart, equations: &[Expr], work_order: usize) -> Result<EquationLocus, FormError> {
        let mut subs: BTreeMap<String, Expr> = BTreeMap::new();
        for e in equations {
            let base_order = chart.order_of(e);
            if base_order > work_order {
                return Err(FormError("working order below the equation's own order".into()));
            }
            for len in 0..=(work_order - base_order) {
                for idx in chart.multi_indices(len) {
                    let rel = chart.total_derivative_multi(&idx, e);
                    let rel = fix_subst(&rel, &subs)?;
                    if rel.cleared().is_zero_expr() {
                        continue; // already implied
                    }
                    let (name, sol) = solve_linear_coordinate(chart, &rel)?;
                    let sol = fix_subst(&sol, &subs)?;
                    // keep the table inter-reduced
                    let single = BTreeMap::from([(name.clone(), sol.clone())]);
                    for v in subs.values_mut() {
                        if v.symbols().contains(&name) {
                            *v = v.subst(&single);
                        }
                    }
                    subs.insert(name, sol);
                }
            }
        }
        Ok(EquationLocus {
            chart: chart.clone(),
            equations: equations.to_vec(),
            work_order,
            subs,
        })
    }

    pub fn chart(&self) -> &JetChart {
        &self.chart
    }

    pub fn equations(&self) -> &[Expr] {
        &self.equations
    }

    pub fn work_order(&self) -> usize {
        self.work_order
    }

    pub fn substitutions(&self) -> &BTreeMap<String, Expr> {
        &self.subs
    }

    /// Restrict a scalar to the locus: substitute the solved coordinates to
    /// a fixed point and check the remaining coordinates are in range.
    pub fn restrict(&self, e: &Expr) -> Result<Expr, FormError> {
        let out = fix_subst(e, &self.subs)?;
        for sym in out.symbols() {
            if let Some(JetCoord::P(_, idx)) = self.chart.parse_coord(&sym) {
                if idx.len() > self.work_order {
                    return Err(FormError(format!(
                        "coordinate `{sym}` exceeds the locus working order {}",
                        self.work_order
                    )));
                }
            }
        }
        Ok(out)
    }

    /// Coefficient-wise restriction of a form.
    pub fn restrict_form(&self, f: &Form) -> Result<Form, FormError> {
        let mut out = f.space().zero(f.degree());
        for (blade, c) in f.terms() {
            out = out.add(&Form::monomial(f.space().clone(), blade, self.restrict(c)?));
        }
        Ok(out)
    }
}

/// Substitute a table to a fixed point (the table is triangular, so this
/// terminates; the cap catches accidental cycles).
fn fix_subst(e: &Expr, subs: &BTreeMap<String, Expr>) -> Result<Expr, FormError> {
    let mut cur = e.clone();
    for _ in 0..=subs.len() + 1 {
        if cur.symbols().iter().all(|s| !subs.contains_key(s)) {
            return Ok(cur);
        }
        cur = cur.subst(subs);
    }
    Err(FormError("substitution did not reach a fixed point".into()))
}

/// Pick the graded-lex-largest derivative coordinate occurring linearly with
/// a coefficient free of it, and solve.
fn solve_linear_coordinate(chart: &JetChart, rel: &Expr) -> Result<(String, Expr), FormError> {
    let mut candidates: Vec<(usize, String)> = Vec::new();
    for sym in rel.symbols() {
        if let Some(JetCoord::P(_, idx)) = chart.parse_coord(&sym) {
            candidates.push((idx.len(), sym));
        }
    }
    candidates.sort();
    for (_, name) in candidates.into_iter().rev() {
        let a = rel.diff(&name);
        if a.is_zero_expr() || a.symbols().contains(&name) {
            continue;
        }
        let mut zero_map = BTreeMap::new();
        zero_map.insert(name.clone(), Expr::zero());
        let b = rel.subst(&zero_map);
        // exact linearity: rel = a * name + b
        let recon = a.mul(&Expr::sym(name.clone())).add(&b);
        if !rel.sub(&recon).cleared().is_zero_expr() {
            continue;
        }
        if a.cleared().is_zero_expr() {
            continue;
        }
        let sol = b.neg().mul(&a.recip());
        return Ok((name, sol));
    }
    Err(FormError(format!(
        "no linearly solvable coordinate in relation {rel}"
    )))
}

/// Convenience: symbols of an expression that are coordinates of the chart.
pub fn chart_symbols(chart: &JetChart, e: &Expr) -> BTreeSet<String> {
    e.symbols()
        .into_iter()
        .filter(|s| chart.parse_coord(s).is_some())
        .collect()
}
