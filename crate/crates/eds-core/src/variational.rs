//! Poincare-Cartan forms and Euler-Lagrange systems for first-order
//! functionals on jet charts.
//!
//! For a scalar density L on an order-1 chart with contact form theta, the
//! differential of L dx splits as theta ^ alpha + dtheta ^ beta; we keep the
//! beta with no theta component.  The lifted Lagrangian
//!
//!   lambda = L dx - theta ^ beta = L dx + theta ^ sum_i L_{p_i} dx_(i)
//!
//! satisfies d(lambda) = theta ^ psi with psi free of theta, and psi is
//! automatically primitive modulo the contact ideal.
//!
//! With several dependent variables the analogous lift is only unique after
//! symmetrization: the coefficient tensors of dp^a_i ^ theta^A ^ w_(I) in
//! d(lambda) must have no fully skew part in (a,i) against (A,I).  The
//! skew parts are killed level by level with contact-quadratic and higher
//! corrections, each solved from a square linear system.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use itertools::Itertools;
use num_traits::Signed;

use crate::forms::{express_in, solve_linear, Form, FormError, VectorField};
use crate::jets::{JetChart, JetCoord, Section};
use crate::scalar::{rat_q, Assumptions, Expr, SampleSpec, TriState, Verdict, ZeroPolicy};
use crate::symplectic::SymplecticModel;

fn err(msg: impl Into<String>) -> FormError {
    FormError(msg.into())
}

/// Accept only densities in the order-1 coordinates of the chart; symbols
/// that parse as deeper jet coordinates are rejected, anything else is a
/// free parameter.
fn first_order_density(chart: &JetChart, density: &Expr) -> Result<(), FormError> {
    if chart.order() != 1 {
        return Err(err("classical densities live on an order-1 chart"));
    }
    let probe = chart.prolong()?.prolong()?;
    for s in density.symbols() {
        if let Some(JetCoord::P(_, idx)) = probe.parse_coord(&s) {
            if idx.len() > 1 {
                return Err(err(format!("density depends on higher coordinate `{s}`")));
            }
        }
    }
    Ok(())
}

fn exact_zero(e: &Expr) -> bool {
    e.cleared().is_zero_expr()
}

/// A first-order functional: an n-form on a jet chart, with its classical
/// presentation L dx when one is known.
#[derive(Clone)]
pub struct Lagrangian {
    chart: JetChart,
    form: Form,
    density: Option<Expr>,
}

impl Lagrangian {
    /// L dx for a density in the chart coordinates (x, z^a, p^a_i).
    pub fn classical(chart: &JetChart, density: Expr) -> Result<Lagrangian, FormError> {
        first_order_density(chart, &density)?;
        let form = chart.dx_volume().scale(&density);
        Ok(Lagrangian { chart: chart.clone(), form, density: Some(density) })
    }

    /// Wrap an arbitrary n-form on the chart; no classical presentation.
    pub fn from_form(chart: &JetChart, form: Form) -> Result<Lagrangian, FormError> {
        if !Arc::ptr_eq(form.space(), chart.space()) {
            return Err(err("form lives on a different space than the chart"));
        }
        if form.degree() != chart.n() {
            return Err(err("a Lagrangian must have the base degree"));
        }
        Ok(Lagrangian { chart: chart.clone(), form, density: None })
    }

    pub fn chart(&self) -> &JetChart {
        &self.chart
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn density(&self) -> Option<&Expr> {
        self.density.as_ref()
    }
}

/// The closed (n+1)-form d(lambda) of a lifted first-order functional,
/// factored through the contact forms.
#[derive(Clone)]
pub struct PoincareCartanForm {
    chart: JetChart,
    density: Expr,
    lambda: Form,
    pi: Form,
    thetas: Vec<Form>,
    psis: Vec<Form>,
    beta: Option<Form>,
    corrections: Vec<Form>,
}

impl PoincareCartanForm {
    pub fn chart(&self) -> &JetChart {
        &self.chart
    }

    pub fn density(&self) -> &Expr {
        &self.density
    }

    /// The lifted Lagrangian with d(lambda) = pi.
    pub fn lambda(&self) -> &Form {
        &self.lambda
    }

    pub fn pi(&self) -> &Form {
        &self.pi
    }

    pub fn thetas(&self) -> &[Form] {
        &self.thetas
    }

    /// Factors with pi = sum_a theta^a ^ psi_a, exactly.
    pub fn psis(&self) -> &[Form] {
        &self.psis
    }

    /// Scalar case only: psi with pi = theta ^ psi and psi free of theta.
    pub fn psi(&self) -> &Form {
        &self.psis[0]
    }

    /// Scalar case: the theta-free (n-1)-form with d(L dx) = theta ^ alpha + dtheta ^ beta.
    pub fn beta(&self) -> Option<&Form> {
        self.beta.as_ref()
    }

    /// Contact-quadratic and higher correction terms added to the naive
    /// lift, one per level (several dependent variables only).
    pub fn corrections(&self) -> &[Form] {
        &self.corrections
    }

    /// Alternations of the level-l coefficient tensor of the lift's
    /// exterior derivative.  All zero for the symmetrized lift.
    pub fn symmetry_defects(&self, level: usize) -> Vec<Expr> {
        skew_parts(&self.chart, &self.pi, level)
    }

    /// Momentum Hessian over the composite index (a, i): the principal
    /// symbol data of the Euler-Lagrange operator.
    pub fn hessian(&self) -> Vec<Vec<Expr>> {
        let n = self.chart.n();
        let s = self.chart.s();
        let mut names = Vec::new();
        for a in 0..s {
            for i in 0..n {
                names.push(self.chart.p_name(a, &[i]));
            }
        }
        names
            .iter()
            .map(|u| names.iter().map(|v| self.density.diff(u).diff(v)).collect())
            .collect()
    }
}

/// Solve target = g ^ xi for xi of the given degree supported away from the
/// excluded basis indices.  Exact; verified by reconstruction.
fn solve_wedge_factor(
    target: &Form,
    g: &Form,
    deg: usize,
    excluded: &BTreeSet<u8>,
) -> Option<Form> {
    let space = target.space().clone();
    let allowed: Vec<u8> = (0..space.dim() as u8).filter(|i| !excluded.contains(i)).collect();
    let mut blades: Vec<Vec<u8>> = Vec::new();
    let mut cands = Vec::new();
    for c in allowed.iter().copied().combinations(deg) {
        cands.push(g.wedge(&Form::monomial(space.clone(), &c, Expr::one())));
        blades.push(c);
    }
    let coeffs = express_in(target, &cands)?;
    let mut out = space.zero(deg);
    for (c, b) in coeffs.iter().zip(&blades) {
        if !c.is_zero_expr() {
            out = out.add(&Form::monomial(space.clone(), b, c.clone()));
        }
    }
    Some(out)
}

/// Classical Poincare-Cartan form of a scalar first-order density.
///
/// Returns the unique lift with d(lambda) = theta ^ psi; closedness, the
/// contact-ideal membership of pi, and primitivity of psi are all checked
/// exactly during construction.
pub fn pc_form_classical(chart: &JetChart, density: &Expr) -> Result<PoincareCartanForm, FormError> {
    if chart.s() != 1 {
        return Err(err("several dependent variables: use betounes_form"));
    }
    first_order_density(chart, density)?;
    let theta = chart.theta(0);
    let tidx = chart
        .space()
        .basis_index(&chart.theta_name(0, &[]))
        .expect("contact form is a basis form");

    // beta, from the dtheta-wedge part of d(L dx), theta-free representative
    let dlam0 = chart.dx_volume().scale(density).d();
    let rest = dlam0.reduce_mod_pfaffian(&[theta.clone()])?;
    let excl: BTreeSet<u8> = [tidx].into_iter().collect();
    let beta = solve_wedge_factor(&rest, &theta.d(), chart.n() - 1, &excl)
        .ok_or_else(|| err("no dtheta ^ beta factorization of d(L dx)"))?;

    let lambda = chart.dx_volume().scale(density).sub(&theta.wedge(&beta));
    let pi = lambda.d();
    if !pi.d().is_zero_exact() {
        return Err(err("produced form is not closed"));
    }
    if !theta.wedge(&pi).is_zero_exact() {
        return Err(err("produced form is not a multiple of theta"));
    }
    let dual = VectorField::from_pairs(chart.space().clone(), &[(chart.theta_name(0, &[]).as_str(), Expr::one())]);
    let psi = pi.contract(&dual);
    if !pi.sub(&theta.wedge(&psi)).is_zero_exact() {
        return Err(err("contact factorization failed"));
    }
    let model = SymplecticModel::from_contact(&theta)?;
    if !model.is_primitive_exact(&psi)? {
        return Err(err("psi is not primitive"));
    }
    Ok(PoincareCartanForm {
        chart: chart.clone(),
        density: density.clone(),
        lambda,
        pi,
        thetas: vec![theta],
        psis: vec![psi],
        beta: Some(beta),
        corrections: Vec::new(),
    })
}

/// The lift L dx + theta^a ^ L_{p^a_i} dx_(i); its differential lies in the
/// ideal of the contact forms (checked exactly).
pub fn admissible_lift(lag: &Lagrangian) -> Result<Lagrangian, FormError> {
    let chart = lag.chart();
    let density = lag
        .density()
        .cloned()
        .ok_or_else(|| err("admissible lift needs a classical presentation"))?;
    let mut form = chart.dx_volume().scale(&density);
    for a in 0..chart.s() {
        for i in 0..chart.n() {
            let lp = density.diff(&chart.p_name(a, &[i]));
            if !lp.is_zero_expr() {
                form = form.add(&chart.theta(a).wedge(&chart.dx_hook(i).scale(&lp)));
            }
        }
    }
    let thetas: Vec<Form> = (0..chart.s()).map(|a| chart.theta(a)).collect();
    if !form.d().reduce_mod_pfaffian(&thetas)?.is_zero_exact() {
        return Err(err("lift is not admissible"));
    }
    Ok(Lagrangian { chart: chart.clone(), form, density: Some(density) })
}

fn increasing_tuples(limit: usize, len: usize) -> Vec<Vec<usize>> {
    (0..limit).combinations(len).collect()
}

/// Parity of the permutation (it, complement of it) of 0..n; both halves
/// increasing.
fn hook_sign(n: usize, it: &[usize]) -> i64 {
    let mut seq: Vec<usize> = it.to_vec();
    seq.extend((0..n).filter(|j| !it.contains(j)));
    let mut inv = 0usize;
    for a in 0..seq.len() {
        for b in a + 1..seq.len() {
            if seq[a] > seq[b] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

/// w_(I): the (n-k)-form with dx^{i_1} ^ ... ^ dx^{i_k} ^ w_(I) = dx for an
/// increasing tuple I.
fn dx_hook_multi(chart: &JetChart, it: &[usize]) -> Form {
    let mut out = chart.space().scalar(Expr::from_int(hook_sign(chart.n(), it)));
    for j in 0..chart.n() {
        if !it.contains(&j) {
            out = out.wedge(&chart.dx(j));
        }
    }
    out
}

fn theta_wedge(chart: &JetChart, at: &[usize]) -> Form {
    let mut out = chart.space().scalar(Expr::one());
    for &a in at {
        out = out.wedge(&chart.theta(a));
    }
    out
}

/// Coefficient H of dp^a_i ^ theta^{at} ^ w_(it) in pi, for increasing at, it.
fn h_coeff(chart: &JetChart, pi: &Form, a: usize, i: usize, at: &[usize], it: &[usize]) -> Expr {
    let mut names: Vec<String> = vec![format!("d{}", chart.p_name(a, &[i]))];
    for &b in at {
        names.push(chart.theta_name(b, &[]));
    }
    for j in 0..chart.n() {
        if !it.contains(&j) {
            names.push(format!("d{}", chart.x_name(j)));
        }
    }
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let c = pi.coefficient(&refs);
    if hook_sign(chart.n(), it) < 0 {
        c.neg()
    } else {
        c
    }
}

/// Fully skew parts of the level-l coefficient tensor of pi: one expression
/// per increasing pair (A, I) with |A| = |I| = l+1; all must vanish for a
/// symmetric form.
fn skew_parts(chart: &JetChart, pi: &Form, l: usize) -> Vec<Expr> {
    let mut out = Vec::new();
    for at in increasing_tuples(chart.s(), l + 1) {
        for it in increasing_tuples(chart.n(), l + 1) {
            let mut tau = Expr::zero();
            for (r, &i) in it.iter().enumerate() {
                let irest: Vec<usize> =
                    it.iter().enumerate().filter(|(q, _)| *q != r).map(|(_, &v)| v).collect();
                for (t, &a) in at.iter().enumerate() {
                    let arest: Vec<usize> =
                        at.iter().enumerate().filter(|(q, _)| *q != t).map(|(_, &v)| v).collect();
                    let h = h_coeff(chart, pi, a, i, &arest, &irest);
                    tau = if (r + t) % 2 == 0 { tau.add(&h) } else { tau.sub(&h) };
                }
            }
            out.push(tau);
        }
    }
    out
}

/// Split pi = sum_a theta^a ^ psi_a using the contact-degree weighting
/// psi_a = sum_k (1/k) v_a . pi_k; exact, verified by reassembly.
fn factor_through_contact(chart: &JetChart, pi: &Form) -> Result<Vec<Form>, FormError> {
    let space = chart.space().clone();
    let s = chart.s();
    let tset: BTreeSet<u8> = (0..s)
        .map(|a| space.basis_index(&chart.theta_name(a, &[])).expect("contact basis form"))
        .collect();
    let mut weighted = space.zero(pi.degree());
    for (blade, c) in pi.terms() {
        let k = blade.iter().filter(|i| tset.contains(i)).count();
        if k == 0 {
            return Err(err("form does not lie in the contact ideal"));
        }
        weighted = weighted.add(&Form::monomial(
            space.clone(),
            blade,
            c.mul(&Expr::from_rat(rat_q(1, k as i64))),
        ));
    }
    let mut psis = Vec::new();
    let mut reassembled = space.zero(pi.degree());
    for a in 0..s {
        let dual = VectorField::from_pairs(
            space.clone(),
            &[(chart.theta_name(a, &[]).as_str(), Expr::one())],
        );
        let psi = weighted.contract(&dual);
        reassembled = reassembled.add(&chart.theta(a).wedge(&psi));
        psis.push(psi);
    }
    if !reassembled.sub(pi).is_zero_exact() {
        return Err(err("contact factorization failed to reassemble"));
    }
    Ok(psis)
}

/// The symmetrized lift and its differential (Poincare-Cartan form) for a
/// functional in several dependent variables.
///
/// Follows the inductive construction: starting from the admissible lift,
/// at each level the unique contact-power correction killing the fully
/// skew part of the coefficient tensor is solved from a square linear
/// system.  The final form is certified symmetric at every level.
pub fn betounes_form(lag: &Lagrangian) -> Result<PoincareCartanForm, FormError> {
    let chart = lag.chart();
    let n = chart.n();
    let s = chart.s();
    if n * s > 12 {
        return Err(err("chart too large for the symmetrized lift (n*s > 12)"));
    }
    let density = lag
        .density()
        .cloned()
        .ok_or_else(|| err("symmetrized lift needs a classical presentation"))?;
    if s == 1 {
        return pc_form_classical(chart, &density);
    }

    let mut lambda = admissible_lift(lag)?.form().clone();
    let kmax = n.min(s);
    let mut corrections = Vec::new();
    for l in 1..kmax {
        let asubs = increasing_tuples(s, l + 1);
        let isubs = increasing_tuples(n, l + 1);
        let mut names = Vec::new();
        let mut corr = chart.space().zero(n);
        for (ai, at) in asubs.iter().enumerate() {
            for (ii, it) in isubs.iter().enumerate() {
                let nm = format!("__lift{}_{}_{}", l + 1, ai, ii);
                corr = corr
                    .add(&theta_wedge(chart, at).wedge(&dx_hook_multi(chart, it)).scale(&Expr::sym(&nm)));
                names.push(nm);
            }
        }
        // the unknown coefficients enter the level-l skew parts linearly,
        // through the structure equations only
        let trial = lambda.add(&corr).d();
        let eqs = skew_parts(chart, &trial, l);
        let zero_map: BTreeMap<String, Expr> =
            names.iter().map(|nm| (nm.clone(), Expr::zero())).collect();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for eq in &eqs {
            rows.push(names.iter().map(|nm| eq.diff(nm)).collect::<Vec<_>>());
            rhs.push(eq.subst(&zero_map).neg());
        }
        let sol = solve_linear(&rows, &rhs)
            .ok_or_else(|| err(format!("no symmetrizing correction at level {}", l + 1)))?;
        let smap: BTreeMap<String, Expr> = names.iter().cloned().zip(sol).collect();
        let fixed = corr.map_coefficients(|c| c.subst(&smap));
        lambda = lambda.add(&fixed);
        corrections.push(fixed);
    }

    let pi = lambda.d();
    for l in 1..kmax {
        if skew_parts(chart, &pi, l).iter().any(|t| !exact_zero(t)) {
            return Err(err(format!("level-{l} coefficient tensor kept a skew part")));
        }
    }
    let thetas: Vec<Form> = (0..s).map(|a| chart.theta(a)).collect();
    if !pi.reduce_mod_pfaffian(&thetas)?.is_zero_exact() {
        return Err(err("produced form is not in the contact ideal"));
    }
    if !pi.d().is_zero_exact() {
        return Err(err("produced form is not closed"));
    }
    let psis = factor_through_contact(chart, &pi)?;
    Ok(PoincareCartanForm {
        chart: chart.clone(),
        density,
        lambda,
        pi,
        thetas,
        psis,
        beta: None,
        corrections,
    })
}

/// One Euler-Lagrange expression on the order-2 chart.  `expr` is `raw`
/// normalized so that the leading second-order coordinate enters with a
/// positive leading coefficient.
#[derive(Clone)]
pub struct ElEquation {
    chart: JetChart,
    raw: Expr,
    expr: Expr,
    flipped: bool,
}

impl ElEquation {
    /// The order-2 chart the expression lives on.
    pub fn chart(&self) -> &JetChart {
        &self.chart
    }

    /// L_{z^a} - sum_i D_i L_{p^a_i}, unnormalized.
    pub fn raw(&self) -> &Expr {
        &self.raw
    }

    /// Sign-normalized equation (the displayed form).
    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn flipped(&self) -> bool {
        self.flipped
    }
}

fn normalize_leading(chart: &JetChart, e: &Expr) -> (Expr, bool) {
    let mut best: Option<(usize, Vec<usize>, usize, String)> = None;
    for sym in e.symbols() {
        if let Some(JetCoord::P(a, idx)) = chart.parse_coord(&sym) {
            let key = (idx.len(), idx, a, sym);
            if best.as_ref().map_or(true, |b| (&b.0, &b.1, &b.2) < (&key.0, &key.1, &key.2)) {
                best = Some(key);
            }
        }
    }
    let Some((_, _, _, name)) = best else {
        return (e.clone(), false);
    };
    let mut kill = BTreeMap::new();
    kill.insert(name, Expr::zero());
    let part = e.sub(&e.subst(&kill));
    if let Some((_, c)) = part.terms().next_back() {
        if c.is_negative() {
            return (e.neg(), true);
        }
    }
    (e.clone(), false)
}

/// Euler-Lagrange expressions L_{z^a} - sum_i D_i(L_{p^a_i}) on the order-2
/// prolongation, one per dependent variable.  In the scalar case the result
/// is consistency-checked against the contact factor of the
/// Poincare-Cartan form restricted through the projection.
pub fn el_equations(chart: &JetChart, density: &Expr) -> Result<Vec<ElEquation>, FormError> {
    first_order_density(chart, density)?;
    let chart2 = chart.prolong()?;
    let mut out = Vec::new();
    for a in 0..chart.s() {
        let mut raw = density.diff(chart.z_name(a));
        for i in 0..chart.n() {
            raw = raw.sub(&chart2.total_derivative(i, &density.diff(&chart.p_name(a, &[i]))));
        }
        let (expr, flipped) = normalize_leading(&chart2, &raw);
        out.push(ElEquation { chart: chart2.clone(), raw, expr, flipped });
    }
    if chart.s() == 1 {
        let pc = pc_form_classical(chart, density)?;
        let proj = chart2.projection_to(chart)?;
        let red = proj.pullback(pc.psi()).reduce_mod_pfaffian(&chart2.contact_forms())?;
        let names: Vec<String> = (0..chart.n()).map(|i| format!("d{}", chart.x_name(i))).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let got = red.coefficient(&refs);
        if !exact_zero(&got.sub(&out[0].raw)) {
            return Err(err("equation does not match the contact factor of the lift"));
        }
    }
    Ok(out)
}

/// Scalar-case Euler-Lagrange expression.
pub fn el_equation(chart: &JetChart, density: &Expr) -> Result<ElEquation, FormError> {
    if chart.s() != 1 {
        return Err(err("several dependent variables: use el_equations"));
    }
    Ok(el_equations(chart, density)?.pop().expect("one equation"))
}

/// An exact presentation f = sum_a theta^a ^ u_a + dtheta^a ^ v_a + psi_a ^ w_a.
#[derive(Clone)]
pub struct IdealCombination {
    pub theta_parts: Vec<Form>,
    pub dtheta_parts: Vec<Form>,
    pub psi_parts: Vec<Form>,
}

impl IdealCombination {
    /// Re-wedge the parts against the system generators.
    pub fn reassemble(&self, sys: &EulerLagrangeSystem) -> Form {
        let chart = sys.pc.chart();
        let mut out = chart.space().zero(self.degree(sys));
        for a in 0..chart.s() {
            out = out.add(&chart.theta(a).wedge(&self.theta_parts[a]));
            out = out.add(&chart.theta(a).d().wedge(&self.dtheta_parts[a]));
            out = out.add(&sys.pc.psis()[a].wedge(&self.psi_parts[a]));
        }
        out
    }

    fn degree(&self, sys: &EulerLagrangeSystem) -> usize {
        self.theta_parts
            .first()
            .map(|f| f.degree() + 1)
            .unwrap_or(sys.pc.chart().n() + 1)
    }
}

/// Membership decision for a form against the Euler-Lagrange ideal.
pub struct IdealMembership {
    pub member: TriState,
    pub combination: Option<IdealCombination>,
}

/// The exterior differential system {theta^a, dtheta^a, psi_a} of a
/// first-order functional.
///
/// `closure` certifies that each d(psi_a) lies in the algebraic ideal, so
/// the system is differentially closed; in the scalar case the certificate
/// always exists and construction fails if it cannot be produced.
pub struct EulerLagrangeSystem {
    pc: PoincareCartanForm,
    model: Option<SymplecticModel>,
    closure: Vec<Option<IdealCombination>>,
    equations: Vec<ElEquation>,
}

impl EulerLagrangeSystem {
    pub fn pc(&self) -> &PoincareCartanForm {
        &self.pc
    }

    pub fn chart(&self) -> &JetChart {
        self.pc.chart()
    }

    /// Generators (theta^a, dtheta^a, psi_a), flattened.
    pub fn generators(&self) -> Vec<Form> {
        let chart = self.pc.chart();
        let mut out = Vec::new();
        for a in 0..chart.s() {
            out.push(chart.theta(a));
        }
        for a in 0..chart.s() {
            out.push(chart.theta(a).d());
        }
        out.extend(self.pc.psis().iter().cloned());
        out
    }

    /// Euler-Lagrange expressions on the order-2 chart.
    pub fn equations(&self) -> &[ElEquation] {
        &self.equations
    }

    /// Closure certificates for d(psi_a), when exact ones were found.
    pub fn closure(&self) -> &[Option<IdealCombination>] {
        &self.closure
    }

    fn exact_membership(&self, f: &Form) -> Option<IdealCombination> {
        let chart = self.pc.chart();
        let space = chart.space().clone();
        let s = chart.s();
        let n = chart.n();
        let d = f.degree();
        let dim = space.dim() as u8;
        let mut cands: Vec<Form> = Vec::new();
        // tag = (generator kind, a, blade)
        let mut tags: Vec<(usize, usize, Vec<u8>)> = Vec::new();
        let push_all = |kind: usize, a: usize, g: &Form, deg: usize, cands: &mut Vec<Form>, tags: &mut Vec<(usize, usize, Vec<u8>)>| {
            if g.degree() > d {
                return;
            }
            for b in (0..dim).combinations(deg) {
                let w = g.wedge(&Form::monomial(space.clone(), &b, Expr::one()));
                if w.num_terms() > 0 {
                    cands.push(w);
                    tags.push((kind, a, b));
                }
            }
        };
        for a in 0..s {
            if d >= 1 {
                push_all(0, a, &chart.theta(a), d - 1, &mut cands, &mut tags);
            }
            if d >= 2 {
                push_all(1, a, &chart.theta(a).d(), d - 2, &mut cands, &mut tags);
            }
            if d >= n {
                push_all(2, a, &self.pc.psis()[a], d - n, &mut cands, &mut tags);
            }
        }
        let coeffs = express_in(f, &cands)?;
        let mut comb = IdealCombination {
            theta_parts: vec![space.zero(d.saturating_sub(1)); s],
            dtheta_parts: vec![space.zero(d.saturating_sub(2)); s],
            psi_parts: vec![space.zero(d.saturating_sub(n)); s],
        };
        for ((kind, a, blade), c) in tags.into_iter().zip(coeffs) {
            if c.is_zero_expr() {
                continue;
            }
            let part = Form::monomial(space.clone(), &blade, c);
            let slot = match kind {
                0 => &mut comb.theta_parts[a],
                1 => &mut comb.dtheta_parts[a],
                _ => &mut comb.psi_parts[a],
            };
            *slot = slot.add(&part);
        }
        Some(comb)
    }

    /// Decide membership of f in the algebraic ideal generated by
    /// {theta^a, dtheta^a, psi_a}.
    ///
    /// An exact linear solve is attempted first.  For scalar systems and
    /// base-degree forms the decision is completed through the primitive
    /// part: modulo theta, f lies in the ideal iff its primitive part is a
    /// multiple of psi, and the multiplier is forced blade by blade.
    pub fn membership(
        &self,
        f: &Form,
        policy: ZeroPolicy,
        spec: &SampleSpec,
        assume: &Assumptions,
    ) -> Result<IdealMembership, FormError> {
        if let Some(comb) = self.exact_membership(f) {
            return Ok(IdealMembership {
                member: TriState::exact(Verdict::Zero, policy, "exact ideal combination found"),
                combination: Some(comb),
            });
        }
        let chart = self.pc.chart();
        if chart.s() == 1 && f.degree() == chart.n() {
            let model = self.model.as_ref().expect("scalar system keeps its model");
            let theta = chart.theta(0);
            let fbar = f.reduce_mod_pfaffian(&[theta])?;
            let prim = model.lepage_decompose(&fbar)?.components[0].clone();
            let psi = self.pc.psi();
            if psi.is_zero_exact() {
                let v = prim.decide_zero(policy, spec, assume);
                return Ok(IdealMembership {
                    member: TriState::exact(v.verdict, policy, "trivial functional: membership is the contact reduction"),
                    combination: None,
                });
            }
            // multiplier forced by the first usable blade of psi
            let mut pivot: Option<(Vec<u8>, Expr)> = None;
            for (b, c) in psi.terms() {
                if c.as_rat().is_some() {
                    pivot = Some((b.clone(), c.clone()));
                    break;
                }
                if pivot.is_none() && !exact_zero(c) {
                    pivot = Some((b.clone(), c.clone()));
                }
            }
            let (pb, pc_coeff) = pivot.expect("nonzero psi has a nonzero blade");
            let names: Vec<&str> = pb.iter().map(|i| chart.space().basis_name(*i)).collect();
            let ratio = prim.coefficient(&names).mul(&pc_coeff.recip());
            let residual = prim.sub(&psi.scale(&ratio));
            let v = residual.decide_zero(policy, spec, assume);
            let mut member =
                TriState::exact(v.verdict, policy, "primitive part compared against the forced psi-multiple");
            member.transcript.notes =
                v.coefficients.iter().map(|(b, t)| format!("{b}: {:?}", t.verdict)).collect();
            return Ok(IdealMembership { member, combination: None });
        }
        Ok(IdealMembership {
            member: TriState::exact(Verdict::Unknown, policy, "no exact combination found"),
            combination: None,
        })
    }
}

/// Assemble the Euler-Lagrange system of a Poincare-Cartan form, with a
/// differential-closure certificate for each psi_a.
pub fn el_system(pc: PoincareCartanForm) -> Result<EulerLagrangeSystem, FormError> {
    let chart = pc.chart().clone();
    let equations = el_equations(&chart, pc.density())?;
    let model = if chart.s() == 1 {
        Some(SymplecticModel::from_contact(&chart.theta(0))?)
    } else {
        None
    };
    let mut sys = EulerLagrangeSystem { pc, model, closure: Vec::new(), equations };
    let mut closure = Vec::new();
    for a in 0..chart.s() {
        let dpsi = sys.pc.psis()[a].d();
        let comb = sys.exact_membership(&dpsi);
        if comb.is_none() && chart.s() == 1 {
            return Err(err("closure certificate for d(psi) not found"));
        }
        closure.push(comb);
    }
    sys.closure = closure;
    Ok(sys)
}

/// Stationarity decision for a section against an Euler-Lagrange system:
/// the pulled-back psi_a, one residual per dependent variable.
pub struct StationaryReport {
    pub residuals: Vec<Expr>,
    pub verdict: TriState,
}

pub fn check_stationary(
    section: &Section,
    sys: &EulerLagrangeSystem,
    policy: ZeroPolicy,
    spec: &SampleSpec,
    assume: &Assumptions,
) -> Result<StationaryReport, FormError> {
    let chart = sys.chart();
    if !Arc::ptr_eq(section.chart().space(), chart.space()) {
        return Err(err("section and system live on different charts"));
    }
    let names: Vec<String> = (0..chart.n()).map(|i| format!("d{}", chart.x_name(i))).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let mut residuals = Vec::new();
    let mut verdict = Verdict::Zero;
    let mut notes = Vec::new();
    for a in 0..chart.s() {
        let pulled = section.pull(&sys.pc.psis()[a])?;
        let r = pulled.coefficient(&refs);
        let t = crate::scalar::decide_zero(&r, policy, spec, assume);
        match t.verdict {
            Verdict::Zero => {}
            Verdict::NonZero => verdict = Verdict::NonZero,
            Verdict::Unknown => {
                if verdict == Verdict::Zero {
                    verdict = Verdict::Unknown;
                }
            }
        }
        notes.push(format!("component {a}: {:?}", t.verdict));
        residuals.push(r);
    }
    let mut member = TriState::exact(verdict, policy, "pulled-back psi residuals");
    member.transcript.notes = notes;
    Ok(StationaryReport { residuals, verdict: member })
}
