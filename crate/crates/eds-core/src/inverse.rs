//! The local inverse problem: when is a Monge-Ampere system the
//! Euler-Lagrange system of some functional?
//!
//! A Monge-Ampere system on a contact coframe is generated by the contact
//! form theta, its derivative, and one more n-form psi, stored here in its
//! primitive normalization.  The system is locally Euler-Lagrange exactly
//! when d(Xi) = phi ^ Xi for Xi = theta ^ psi and some 1-form phi with
//! d(phi) in the contact ideal; the beta-correction phi - beta theta is then
//! closed, and a potential u with du = phi - beta theta rescales Xi to the
//! closed form e^{-u} Xi.
//!
//! On contact 5-manifolds the systems fall into three pointwise classes by
//! the sign of mu in psi ^ psi = mu (dtheta)^2 mod theta.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Signed;
use serde::Serialize;

use crate::forms::{express_in, CoframeSpace, Form, FormError, FormVerdict};
use crate::jets::JetChart;
use crate::scalar::{
    approx_f64, decide_zero, Assumptions, Expr, NumEnv, SampleSpec, Transcript, Verdict,
    ZeroPolicy,
};
use crate::symplectic::SymplecticModel;

fn err(msg: impl Into<String>) -> FormError {
    FormError(msg.into())
}

/// A contact coframe with one extra generator of base degree: the ideal
/// {theta, dtheta, psi}.  The generator is stored primitive-normalized, so
/// theta ^ psi is canonical for the system.
pub struct MongeAmpereSystem {
    space: Arc<CoframeSpace>,
    theta: Form,
    psi: Form,
    model: SymplecticModel,
    chart: Option<JetChart>,
}

impl MongeAmpereSystem {
    pub fn new(theta: Form, psi: Form) -> Result<Self, FormError> {
        MongeAmpereSystem::build(theta, psi, None)
    }

    /// The system {theta, dtheta, psi} on a scalar order-1 jet chart; the
    /// chart coordinates enable potential reconstruction.
    pub fn on_chart(chart: &JetChart, psi: Form) -> Result<Self, FormError> {
        if chart.s() != 1 || chart.order() != 1 {
            return Err(err("contact charts have one dependent variable and order 1"));
        }
        MongeAmpereSystem::build(chart.theta(0), psi, Some(chart.clone()))
    }

    fn build(theta: Form, psi: Form, chart: Option<JetChart>) -> Result<Self, FormError> {
        let space = theta.space().clone();
        if !Arc::ptr_eq(&space, psi.space()) {
            return Err(err("generator lives on a different space than the contact form"));
        }
        let model = SymplecticModel::from_contact(&theta)?;
        let n = model.n();
        if psi.degree() != n {
            return Err(err(format!("the generator must have degree n = {n}")));
        }
        if theta.wedge(&model.power(n)).is_zero_exact() {
            return Err(err("theta ^ (dtheta)^n vanishes: not a contact form"));
        }
        let psi = model.primitive_normalize(&psi)?;
        if psi.is_zero_exact() {
            return Err(err("the generator lies in the contact ideal"));
        }
        Ok(MongeAmpereSystem { space, theta, psi, model, chart })
    }

    pub fn space(&self) -> &Arc<CoframeSpace> {
        &self.space
    }

    pub fn theta(&self) -> &Form {
        &self.theta
    }

    /// The primitive-normalized generator.
    pub fn psi(&self) -> &Form {
        &self.psi
    }

    pub fn model(&self) -> &SymplecticModel {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.model.n()
    }

    /// Algebraic generators of the differential ideal.
    pub fn generators(&self) -> [Form; 3] {
        [self.theta.clone(), self.theta.d(), self.psi.clone()]
    }

    /// The candidate closed form theta ^ psi.
    pub fn xi(&self) -> Form {
        self.theta.wedge(&self.psi)
    }

    /// Index of the contact direction, when theta is a single basis covector
    /// with a constant coefficient.
    fn theta_direction(&self) -> Option<(u8, Expr)> {
        let mut it = self.theta.terms();
        let (blade, c) = it.next()?;
        if it.next().is_some() || blade.len() != 1 || c.as_rat().is_none() {
            return None;
        }
        Some((blade[0], c.clone()))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InverseVerdict {
    LocallyEulerLagrange,
    NotEulerLagrange,
    Unknown,
}

/// Outcome of the inverse test with every object needed to re-check it:
/// d(Xi) = phi ^ Xi, d(phi_closed) = 0, and d(e^{-u} Xi) = 0 when the
/// potential u exists in the expression class.
#[derive(Clone, Serialize)]
pub struct InverseCertificate {
    pub verdict: InverseVerdict,
    pub phi: Option<Form>,
    pub phi_closed: Option<Form>,
    pub potential: Option<Expr>,
    pub closed_form: Option<Form>,
    pub closure_test: Option<FormVerdict>,
    pub notes: Vec<String>,
}

impl InverseCertificate {
    fn negative(note: impl Into<String>) -> Self {
        InverseCertificate {
            verdict: InverseVerdict::NotEulerLagrange,
            phi: None,
            phi_closed: None,
            potential: None,
            closed_form: None,
            closure_test: None,
            notes: vec![note.into()],
        }
    }

    /// Re-check every identity stored in a positive certificate.
    pub fn reverify(&self, ma: &MongeAmpereSystem) -> bool {
        let xi = ma.xi();
        if let Some(phi) = &self.phi {
            if !xi.d().sub(&phi.wedge(&xi)).is_zero_exact() {
                return false;
            }
        }
        if let Some(pc) = &self.phi_closed {
            if !xi.d().sub(&pc.wedge(&xi)).is_zero_exact() {
                return false;
            }
        }
        if let (Some(u), Some(closed)) = (&self.potential, &self.closed_form) {
            let scaled = xi.scale(&Expr::exp(&u.mul(&Expr::from_int(-1))));
            if !closed.sub(&scaled).is_zero_exact() || !closed.d().is_zero_exact() {
                return false;
            }
        }
        true
    }
}

/// Decide whether the system is locally Euler-Lagrange.
///
/// Solves d(Xi) = phi ^ Xi for the coframe coefficients of phi (taking the
/// representative with no component along theta), writes d(phi) = theta ^
/// alpha + beta dtheta, and zero-tests d(phi - beta theta).  Either linear
/// solve failing is a proof that no phi exists.
pub fn is_euler_lagrange(
    ma: &MongeAmpereSystem,
    policy: ZeroPolicy,
    spec: &SampleSpec,
    assume: &Assumptions,
) -> Result<InverseCertificate, FormError> {
    if ma.n() < 2 {
        return Err(err("the inverse test needs n >= 2"));
    }
    let space = ma.space().clone();
    let xi = ma.xi();
    let dxi = xi.d();
    if dxi.is_zero_exact() {
        let mut cert = InverseCertificate {
            verdict: InverseVerdict::LocallyEulerLagrange,
            phi: Some(space.zero(1)),
            phi_closed: Some(space.zero(1)),
            potential: Some(Expr::zero()),
            closed_form: Some(xi),
            closure_test: None,
            notes: vec!["theta ^ psi is already closed".into()],
        };
        cert.notes.push("phi = 0".into());
        return Ok(cert);
    }

    // phi's coefficients from d(Xi) = phi ^ Xi, blade by blade
    let mut dirs: Vec<u8> = Vec::new();
    let mut cands: Vec<Form> = Vec::new();
    for k in 0..space.dim() as u8 {
        let e = Form::monomial(space.clone(), &[k], Expr::one());
        let w = e.wedge(&xi);
        if !w.is_zero_exact() {
            dirs.push(k);
            cands.push(w);
        }
    }
    let Some(coeffs) = express_in(&dxi, &cands) else {
        return Ok(InverseCertificate::negative(
            "the linear system d(Xi) = phi ^ Xi has no solution",
        ));
    };
    let mut phi = space.zero(1);
    for (c, k) in coeffs.iter().zip(&dirs) {
        phi = phi.add(&Form::monomial(space.clone(), &[*k], c.clone()));
    }
    if let Some((t, tc)) = ma.theta_direction() {
        let component = phi.coefficient(&[space.basis_name(t)]);
        phi = phi.sub(&ma.theta().scale(&component.div(&tc)));
    }

    // d(phi) must lie in the contact ideal: theta ^ alpha + beta dtheta
    let dphi = phi.d();
    let mut cands2: Vec<Form> = Vec::new();
    for k in 0..space.dim() as u8 {
        let e = Form::monomial(space.clone(), &[k], Expr::one());
        let w = ma.theta().wedge(&e);
        if !w.is_zero_exact() {
            cands2.push(w);
        }
    }
    cands2.push(ma.theta().d());
    let Some(coeffs2) = express_in(&dphi, &cands2) else {
        return Ok(InverseCertificate::negative(
            "d(phi) does not lie in the contact ideal",
        ));
    };
    let beta = coeffs2.last().expect("dtheta coefficient").clone();
    let phi_closed = phi.sub(&ma.theta().scale(&beta));
    let closure = phi_closed.d().decide_zero(policy, spec, assume);
    let verdict = match closure.verdict {
        Verdict::Zero => InverseVerdict::LocallyEulerLagrange,
        Verdict::Unknown => InverseVerdict::Unknown,
        Verdict::NonZero => InverseVerdict::NotEulerLagrange,
    };
    let mut cert = InverseCertificate {
        verdict,
        phi: Some(phi),
        phi_closed: Some(phi_closed.clone()),
        potential: None,
        closed_form: None,
        closure_test: Some(closure),
        notes: Vec::new(),
    };
    if verdict != InverseVerdict::LocallyEulerLagrange {
        return Ok(cert);
    }

    match potential_on_chart(ma, &phi_closed) {
        Some(u) => {
            let closed = xi.scale(&Expr::exp(&u.mul(&Expr::from_int(-1))));
            if closed.d().is_zero_exact() {
                cert.potential = Some(u);
                cert.closed_form = Some(closed);
            } else {
                cert.notes.push("potential candidate failed the final recheck".into());
            }
        }
        None => {
            cert.notes.push("locally Euler-Lagrange; potential not in closed form".into());
        }
    }
    Ok(cert)
}

/// Staircase a potential u with du = phi on a jet chart, within the class
/// of expressions with power-rule antiderivatives.
fn potential_on_chart(ma: &MongeAmpereSystem, phi: &Form) -> Option<Expr> {
    let chart = ma.chart.as_ref()?;
    let n = chart.n();

    // coefficients on the coordinate differentials dx^i, dz, dp_i
    let f_theta = phi.coefficient(&[&chart.theta_name(0, &[])]);
    let mut coords: Vec<(String, Expr)> = Vec::new();
    for i in 0..n {
        let c = phi.coefficient(&[&format!("d{}", chart.x_name(i))]);
        let p = Expr::sym(chart.p_name(0, &[i]));
        coords.push((chart.x_name(i).to_string(), c.sub(&f_theta.mul(&p))));
    }
    coords.push((chart.z_name(0).to_string(), f_theta));
    for i in 0..n {
        let c = phi.coefficient(&[&format!("d{}", chart.p_name(0, &[i]))]);
        coords.push((chart.p_name(0, &[i]), c));
    }

    let mut u = Expr::zero();
    let mut rem: BTreeMap<String, Expr> =
        coords.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    for (y, _) in &coords {
        let g = rem.get(y).cloned().unwrap_or_else(Expr::zero);
        if g.is_zero_expr() {
            continue;
        }
        let f = g.antidiff(y)?;
        for (y2, c) in rem.iter_mut() {
            *c = c.sub(&f.diff(y2));
        }
        u = u.add(&f);
        if !rem[y].cleared().is_zero_expr() {
            return None;
        }
    }
    if rem.values().all(|c| c.cleared().is_zero_expr()) {
        Some(u)
    } else {
        None
    }
}

/// Report from the quasi-linear test: the equation Laplacian(z) = f is
/// contact-equivalent to an Euler-Lagrange equation exactly when
/// f = (1/2) b_z |p|^2 + sum_i b_{x^i} p_i + a.
#[derive(Clone, Serialize)]
pub struct PoissonElReport {
    pub verdict: Verdict,
    /// Name of the first failed closure condition, when one fails.
    pub failed: Option<String>,
    /// The recovered pair (b, a), when the class membership is certain and
    /// the antiderivatives exist in the expression class.
    pub decomposition: Option<(Expr, Expr)>,
    pub transcripts: Vec<(String, Transcript)>,
}

/// Test whether Laplacian(z) = f(x, z, p) is an Euler-Lagrange equation,
/// via closedness of sum_i f_{p_i} dx^i + c theta with c = f_{p_1 p_1}.
/// Coordinates are named x1..xn, z, p1..pn.
pub fn poisson_el_test(
    f: &Expr,
    n: usize,
    policy: ZeroPolicy,
    spec: &SampleSpec,
    assume: &Assumptions,
) -> Result<PoissonElReport, FormError> {
    if n < 2 {
        return Err(err("the inverse test needs n >= 2"));
    }
    let chart = JetChart::new(n, 1, 1)?;
    let x = |i: usize| chart.x_name(i).to_string();
    let p = |i: usize| chart.p_name(0, &[i]);
    let z = chart.z_name(0);
    let c = f.diff(&p(0)).diff(&p(0));

    let mut conditions: Vec<(String, Expr)> = Vec::new();
    for j in 0..n {
        conditions.push((format!("c independent of {}", p(j)), c.diff(&p(j))));
    }
    for i in 0..n {
        for j in 0..n {
            let mut t = f.diff(&p(i)).diff(&p(j));
            if i == j {
                t = t.sub(&c);
            }
            t = t.sub(&c.diff(&p(j)).mul(&Expr::sym(p(i))));
            conditions.push((format!("quadratic diagonal in ({}, {})", p(i), p(j)), t));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let t = f
                .diff(&p(i))
                .diff(&x(j))
                .sub(&f.diff(&p(j)).diff(&x(i)))
                .sub(&c.diff(&x(j)).mul(&Expr::sym(p(i))))
                .add(&c.diff(&x(i)).mul(&Expr::sym(p(j))));
            conditions.push((format!("drift curl in ({}, {})", x(i), x(j)), t));
        }
    }
    for i in 0..n {
        let t = f
            .diff(&p(i))
            .diff(z)
            .sub(&c.diff(&x(i)))
            .sub(&c.diff(z).mul(&Expr::sym(p(i))));
        conditions.push((format!("potential compatibility in {}", x(i)), t));
    }

    let mut verdict = Verdict::Zero;
    let mut failed = None;
    let mut transcripts = Vec::new();
    for (name, t) in &conditions {
        let r = decide_zero(t, policy, spec, assume);
        match r.verdict {
            Verdict::Zero => {}
            Verdict::NonZero => {
                if failed.is_none() {
                    failed = Some(name.clone());
                }
                verdict = Verdict::NonZero;
            }
            Verdict::Unknown => {
                if verdict == Verdict::Zero {
                    verdict = Verdict::Unknown;
                }
            }
        }
        transcripts.push((name.clone(), r.transcript));
        if verdict == Verdict::NonZero {
            break;
        }
    }

    let decomposition = if verdict == Verdict::Zero {
        recover_poisson_pair(f, &c, &chart)
    } else {
        None
    };
    Ok(PoissonElReport { verdict, failed, decomposition, transcripts })
}

/// Rebuild b and a from a density that passed the closure conditions:
/// b_z = c and b_{x^i} = f_{p_i}(x, z, 0), then a = f(x, z, 0).
fn recover_poisson_pair(f: &Expr, c: &Expr, chart: &JetChart) -> Option<(Expr, Expr)> {
    let n = chart.n();
    let zero_p: BTreeMap<String, Expr> =
        (0..n).map(|i| (chart.p_name(0, &[i]), Expr::zero())).collect();
    let a = f.subst(&zero_p);
    let b0 = c.subst(&zero_p).antidiff(chart.z_name(0))?;
    // the leftover drift is z-free and curl-free; staircase it in the x's
    let mut h: Vec<Expr> = Vec::new();
    for i in 0..n {
        let e = f.diff(&chart.p_name(0, &[i])).subst(&zero_p);
        let d = e.sub(&b0.diff(chart.x_name(i)));
        if d.diff(chart.z_name(0)).cleared().is_zero_expr() {
            h.push(d);
        } else {
            return None;
        }
    }
    let mut big_h = Expr::zero();
    for i in 0..n {
        let g = h[i].sub(&big_h.diff(chart.x_name(i)));
        big_h = big_h.add(&g.antidiff(chart.x_name(i))?);
    }
    let b = b0.add(&big_h);

    // reassemble and confirm the class membership exactly
    let mut back = a.clone();
    for i in 0..n {
        let pi = Expr::sym(chart.p_name(0, &[i]));
        back = back.add(&b.diff(chart.x_name(i)).mul(&pi));
        back = back.add(&b.diff(chart.z_name(0)).mul(&pi).mul(&pi).mul(&Expr::from_rat(
            crate::scalar::rat_q(1, 2),
        )));
    }
    if f.sub(&back).cleared().is_zero_expr() {
        Some((b, a))
    } else {
        None
    }
}

/// Report from the multiplicative separability test for det(Hessian(z)) = g.
#[derive(Clone, Serialize)]
pub struct DetHessianElReport {
    pub verdict: Verdict,
    pub failed: Option<String>,
    pub transcripts: Vec<(String, Transcript)>,
}

/// Test whether det(Hessian(z)) = g(x, z, p) is an Euler-Lagrange equation:
/// equivalent to g = g0(x, z) g1(p, z - sum_i p_i x^i), detected through
/// closedness of sum_i (g_{p_i}/g) dp_i + c theta.  Coordinates are named
/// x1..xn, z, p1..pn.
pub fn det_hessian_el_test(
    g: &Expr,
    n: usize,
    policy: ZeroPolicy,
    spec: &SampleSpec,
    assume: &Assumptions,
) -> Result<DetHessianElReport, FormError> {
    if n < 2 {
        return Err(err("the inverse test needs n >= 2"));
    }
    if decide_zero(g, policy, spec, assume).verdict == Verdict::Zero {
        return Err(err("vanishing right-hand side"));
    }
    let chart = JetChart::new(n, 1, 1)?;
    let x = |i: usize| chart.x_name(i).to_string();
    let p = |i: usize| chart.p_name(0, &[i]);
    let z = chart.z_name(0);
    let ginv = g.recip();
    let uu: Vec<Expr> = (0..n).map(|i| g.diff(&p(i)).mul(&ginv)).collect();
    let zz = g.diff(z).mul(&ginv);
    let c = uu[0].diff(&x(0)).add(&zz.diff(&p(0)).mul(&Expr::sym(p(0)))).mul(&Expr::from_int(-1));

    let mut conditions: Vec<(String, Expr)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let t = uu[i].diff(&x(j)).add(&zz.diff(&p(i)).mul(&Expr::sym(p(j))));
            conditions.push((format!("mixed log-derivative in ({}, {})", p(i), x(j)), t));
        }
    }
    for i in 1..n {
        let t = uu[i].diff(&x(i)).add(&zz.diff(&p(i)).mul(&Expr::sym(p(i)))).add(&c);
        conditions.push((format!("diagonal log-derivative in {}", p(i)), t));
    }
    for i in 0..n {
        conditions.push((
            format!("scale compatibility in {}", p(i)),
            c.diff(&p(i)).sub(&zz.diff(&p(i))),
        ));
    }
    for j in 0..n {
        conditions.push((
            format!("scale closedness in {}", x(j)),
            c.diff(&x(j)).add(&c.diff(z).mul(&Expr::sym(p(j)))),
        ));
    }

    let mut verdict = Verdict::Zero;
    let mut failed = None;
    let mut transcripts = Vec::new();
    for (name, t) in &conditions {
        let r = decide_zero(&t.cleared(), policy, spec, assume);
        match r.verdict {
            Verdict::Zero => {}
            Verdict::NonZero => {
                if failed.is_none() {
                    failed = Some(name.clone());
                }
                verdict = Verdict::NonZero;
            }
            Verdict::Unknown => {
                if verdict == Verdict::Zero {
                    verdict = Verdict::Unknown;
                }
            }
        }
        transcripts.push((name.clone(), r.transcript));
        if verdict == Verdict::NonZero {
            break;
        }
    }
    Ok(DetHessianElReport { verdict, failed, transcripts })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MaClass {
    Hyperbolic,
    Parabolic,
    Elliptic,
}

/// Pointwise class of a system on a contact 5-manifold, with the multiplier
/// mu from psi ^ psi = mu (dtheta)^2 mod theta that decided it.
#[derive(Clone, Serialize)]
pub struct MaClassification {
    pub class: MaClass,
    pub mu: Expr,
    pub notes: Vec<String>,
}

/// Classify a system with n = 2 as hyperbolic, parabolic, or elliptic by the
/// sign of mu.  Named parameters are treated as generic (nonvanishing).
pub fn ma_classify(
    ma: &MongeAmpereSystem,
    policy: ZeroPolicy,
    spec: &SampleSpec,
    assume: &Assumptions,
) -> Result<MaClassification, FormError> {
    if ma.n() != 2 {
        return Err(err("the pointwise classification needs n = 2"));
    }
    let square = ma.psi().wedge(ma.psi());
    let dtheta2 = ma.model().power(2);
    let coeffs = express_in(&square, std::slice::from_ref(&dtheta2))
        .ok_or_else(|| err("psi ^ psi is not a multiple of (dtheta)^2 on the subbundle"))?;
    let mu = coeffs[0].clone();

    let zero = decide_zero(&mu, policy, spec, assume);
    if zero.verdict == Verdict::Zero {
        return Ok(MaClassification {
            class: MaClass::Parabolic,
            mu,
            notes: vec!["psi ^ psi vanishes".into()],
        });
    }
    if zero.verdict == Verdict::Unknown {
        return Err(err("sign of mu undecidable under the stated assumptions"));
    }
    let (positive, mut notes) = decide_positivity(&mu, spec, assume)
        .ok_or_else(|| err("sign of mu undecidable under the stated assumptions"))?;
    let class = if positive { MaClass::Elliptic } else { MaClass::Hyperbolic };
    notes.insert(0, format!("mu = {mu}"));
    Ok(MaClassification { class, mu, notes })
}

/// Sign of a provably nonzero expression: exact for constants and for sums
/// of uniformly signed even-power monomials, sampled numerically otherwise.
/// `Some(true)` means positive.
fn decide_positivity(
    e: &Expr,
    spec: &SampleSpec,
    assume: &Assumptions,
) -> Option<(bool, Vec<String>)> {
    use num_integer::Integer;

    if let Some(r) = e.as_rat() {
        return Some((r.is_positive(), vec!["constant sign".into()]));
    }

    let mut structural = true;
    let mut sign: Option<bool> = None;
    'terms: for (m, c) in e.terms() {
        for (_, k) in m.iter() {
            if !k.is_integer() || k.numer().is_odd() {
                structural = false;
                break 'terms;
            }
        }
        let this = c.is_positive();
        if *sign.get_or_insert(this) != this {
            structural = false;
            break;
        }
    }
    if structural {
        if let Some(s) = sign {
            return Some((s, vec!["uniformly signed even-power monomials".into()]));
        }
    }

    // numeric: every sample point must carry the same decisive sign
    use rand::{Rng, SeedableRng};
    if !e.user_fns().is_empty() {
        return None;
    }
    let syms: Vec<String> = e.symbols().into_iter().collect();
    let mut env = NumEnv::with_digits(spec.digits);
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(spec.seed);
    let mut sign: Option<bool> = None;
    for _ in 0..spec.points {
        let mut attempt = 0usize;
        loop {
            let mut vals = BTreeMap::new();
            for s in &syms {
                let (lo, hi) = if let Some(&(lo, hi)) = assume.ranges.get(s) {
                    (lo, hi)
                } else if assume.positive.contains(s) {
                    (0.3, 2.3)
                } else {
                    (-1.15, 1.2)
                };
                let t: f64 = rng.gen_range(lo..hi);
                vals.insert(s.clone(), env.from_f64(t));
            }
            match env.eval(e, &vals) {
                Ok(v) => {
                    let approx = approx_f64(&v);
                    if !approx.is_finite() || approx.abs() < 1e-12 {
                        return None;
                    }
                    let this = approx > 0.0;
                    if *sign.get_or_insert(this) != this {
                        return None;
                    }
                    break;
                }
                Err(_) => {
                    attempt += 1;
                    if attempt > spec.retries {
                        return None;
                    }
                }
            }
        }
    }
    sign.map(|s| {
        (s, vec![format!(
            "consistent sign at {} sample points, {} digits",
            spec.points, spec.digits
        )])
    })
}
