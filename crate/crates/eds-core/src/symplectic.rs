//! Symplectic linear algebra on a coframe: Lefschetz powers, primitive
//! forms, the Hodge-Lepage decomposition, and the primitive normalization of
//! degree-n generators modulo a contact form.
//!
//! The model singles out 2n basis directions carrying a nondegenerate 2-form
//! `Theta`; every operation first discards blades that leave that subbundle
//! (for a contact coframe this is reduction modulo the contact form). All
//! solves are exact linear algebra with expression coefficients on the
//! monomial basis, which stays small (at most C(2n, n) with n <= 4 in
//! practice).

use std::collections::BTreeSet;
use std::sync::Arc;

use itertools::Itertools;
use serde::Serialize;

use crate::forms::{express_in, Blade, CoframeSpace, Form, FormError, FormVerdict};
use crate::scalar::{Assumptions, Expr, SampleSpec, ZeroPolicy};

/// A 2n-dimensional symplectic subbundle of a coframe space.
pub struct SymplecticModel {
    space: Arc<CoframeSpace>,
    theta: Form,
    sub: Vec<u8>,
    n: usize,
}

impl SymplecticModel {
    /// Build a model from an explicit nondegenerate 2-form supported on the
    /// basis directions `sub`.
    pub fn new(space: Arc<CoframeSpace>, theta: Form, sub: Vec<u8>) -> Result<Self, FormError> {
        if sub.len() % 2 != 0 || sub.is_empty() {
            return Err(FormError("symplectic rank must be even and positive".into()));
        }
        let n = sub.len() / 2;
        let model = SymplecticModel { space, theta, sub, n };
        let theta_red = model.reduce(&model.theta);
        if !theta_red.sub(&model.theta).is_zero_exact() {
            return Err(FormError(
                "the symplectic form must be supported on the chosen subbundle".into(),
            ));
        }
        let top = model.power(model.n);
        if top.is_zero_exact() {
            return Err(FormError("degenerate symplectic form: Theta^n = 0".into()));
        }
        Ok(model)
    }

    /// Derive the model from a contact form:`Theta` is d(theta) restricted to
    /// the subbundle where theta vanishes, and the symplectic directions are
    /// read off from its support.
    pub fn from_contact(theta: &Form) -> Result<Self, FormError> {
        let space = theta.space().clone();
        let dtheta = theta.d().reduce_mod_pfaffian(std::slice::from_ref(theta))?;
        let mut support: BTreeSet<u8> = BTreeSet::new();
        for (blade, _) in dtheta.terms() {
            support.extend(blade.iter().copied());
        }
        let sub: Vec<u8> = support.into_iter().collect();
        SymplecticModel::new(space, dtheta, sub)
    }

    pub fn space(&self) -> &Arc<CoframeSpace> {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta(&self) -> &Form {
        &self.theta
    }

    pub fn symplectic_basis(&self) -> &[u8] {
        &self.sub
    }

    /// Drop every blade that leaves the symplectic subbundle.
    pub fn reduce(&self, f: &Form) -> Form {
        let keep: BTreeSet<u8> = self.sub.iter().copied().collect();
        let mut out = self.space.zero(f.degree());
        for (blade, c) in f.terms() {
            if blade.iter().all(|i| keep.contains(i)) {
                out = out.add(&Form::monomial(self.space.clone(), blade, c.clone()));
            }
        }
        out
    }

    /// Theta^k (k-fold wedge power).
    pub fn power(&self, k: usize) -> Form {
        let mut out = self.space.scalar(Expr::one());
        for _ in 0..k {
            out = out.wedge(&self.theta);
        }
        out
    }

    /// The Lefschetz operator Theta^k ^ f for deg f = n - k.
    pub fn lefschetz_power(&self, k: usize, f: &Form) -> Result<Form, FormError> {
        if k > self.n || f.degree() + k != self.n {
            return Err(FormError(format!(
                "lefschetz_power wants deg f = n - k, got deg {} with k = {k}, n = {}",
                f.degree(),
                self.n
            )));
        }
        Ok(self.power(k).wedge(&self.reduce(f)))
    }

    /// Rank of (Theta^k ^ .) : Lambda^{n-k} -> Lambda^{n+k} on the blade
    /// basis of the subbundle. Full rank equals C(2n, n-k).
    pub fn lefschetz_rank(&self, k: usize) -> usize {
        assert!(k <= self.n);
        let domain = self.blades_of_degree(self.n - k);
        let codomain = self.blades_of_degree(self.n + k);
        let pow = self.power(k);
        // matrix: one row per codomain blade, one column per domain blade
        let mut rows: Vec<Vec<Expr>> = vec![vec![Expr::zero(); domain.len()]; codomain.len()];
        for (col, b) in domain.iter().enumerate() {
            let image = pow.wedge(&self.blade_form(b));
            for (blade, c) in image.terms() {
                if let Ok(row) = codomain.binary_search(blade) {
                    rows[row][col] = c.clone();
                }
            }
        }
        rank_of(&mut rows)
    }

    /// Zero-test Theta^{k+1} ^ f where deg f = n - k.
    pub fn is_primitive(
        &self,
        f: &Form,
        policy: ZeroPolicy,
        spec: &SampleSpec,
        assume: &Assumptions,
    ) -> Result<FormVerdict, FormError> {
        let obstruction = self.primitivity_obstruction(f)?;
        Ok(obstruction.decide_zero(policy, spec, assume))
    }

    pub fn is_primitive_exact(&self, f: &Form) -> Result<bool, FormError> {
        Ok(self.primitivity_obstruction(f)?.is_zero_exact())
    }

    /// Theta^{k+1} ^ f, the form whose vanishing defines primitivity.
    pub fn primitivity_obstruction(&self, f: &Form) -> Result<Form, FormError> {
        let d = f.degree();
        if d > self.n {
            return Err(FormError(format!(
                "primitivity is defined for degree <= n = {}, got {d}",
                self.n
            )));
        }
        let k = self.n - d;
        Ok(self.power(k + 1).wedge(&self.reduce(f)))
    }

    /// Hodge-Lepage decomposition f = sum_i Theta^i ^ xi_i with primitive
    /// components xi_i, each verified exactly, and exact reassembly.
    pub fn lepage_decompose(&self, f: &Form) -> Result<LepageDecomposition, FormError> {
        let input = self.reduce(f);
        if input.degree() > self.n {
            return Err(FormError(format!(
                "lepage_decompose wants degree <= n = {}, got {}",
                self.n,
                input.degree()
            )));
        }
        let mut components = Vec::new();
        let mut cur = input.clone();
        loop {
            let d = cur.degree();
            let k = self.n - d;
            let obstruction = self.power(k + 1).wedge(&cur);
            if obstruction.is_zero_exact() {
                components.push(cur);
                break;
            }
            // solve Theta^{k+2} ^ eta = Theta^{k+1} ^ cur for eta of degree d-2
            if d < 2 {
                return Err(FormError(
                    "internal error: low-degree form failed the primitivity test".into(),
                ));
            }
            let candidates = self.blades_of_degree(d - 2);
            let pow = self.power(k + 2);
            let parts: Vec<Form> = candidates
                .iter()
                .map(|b| pow.wedge(&self.blade_form(b)))
                .collect();
            let coeffs = express_in(&obstruction, &parts).ok_or_else(|| {
                FormError("internal error: Lepage trace system had no solution".into())
            })?;
            let mut eta = self.space.zero(d - 2);
            for (c, b) in coeffs.iter().zip(&candidates) {
                eta = eta.add(&self.blade_form(b).scale(c));
            }
            let xi0 = cur.sub(&self.theta.wedge(&eta));
            components.push(xi0);
            cur = eta;
        }
        // xi_i sits at Theta-power i in the order produced above
        let decomp = LepageDecomposition { input, components };
        if !decomp.reassemble(self).sub(&decomp.input).is_zero_exact() {
            return Err(FormError("internal error: Lepage reassembly mismatch".into()));
        }
        for xi in &decomp.components {
            if !self.is_primitive_exact(xi)? {
                return Err(FormError("internal error: Lepage component not primitive".into()));
            }
        }
        Ok(decomp)
    }

    /// Replace a degree-n generator by its primitive part: the unique form
    /// congruent to psi modulo contact multiples and multiples of Theta that
    /// satisfies Theta ^ psi' = 0 on the subbundle.
    pub fn primitive_normalize(&self, psi: &Form) -> Result<Form, FormError> {
        if psi.degree() != self.n {
            return Err(FormError(format!(
                "primitive_normalize wants degree n = {}, got {}",
                self.n,
                psi.degree()
            )));
        }
        Ok(self.lepage_decompose(psi)?.components[0].clone())
    }

    fn blades_of_degree(&self, d: usize) -> Vec<Blade> {
        if d == 0 {
            return vec![Vec::new()];
        }
        self.sub
            .iter()
            .copied()
            .combinations(d)
            .collect()
    }

    fn blade_form(&self, blade: &Blade) -> Form {
        Form::monomial(self.space.clone(), blade, Expr::one())
    }
}

/// f = sum_i Theta^i ^ components[i], components primitive.
#[derive(Clone, Serialize)]
pub struct LepageDecomposition {
    pub input: Form,
    pub components: Vec<Form>,
}

impl LepageDecomposition {
    pub fn reassemble(&self, model: &SymplecticModel) -> Form {
        let mut out = model.space().zero(self.input.degree());
        for (i, xi) in self.components.iter().enumerate() {
            out = out.add(&model.power(i).wedge(xi));
        }
        out
    }
}

/// Row rank by Gaussian elimination with formally invertible pivots.
fn rank_of(rows: &mut [Vec<Expr>]) -> usize {
    let m = rows.len();
    let n = if m == 0 { 0 } else { rows[0].len() };
    let mut rank = 0;
    for col in 0..n {
        let mut pivot = None;
        for (r, row) in rows.iter().enumerate().skip(rank) {
            if !row[col].cleared().is_zero_expr() {
                pivot = Some(r);
                break;
            }
        }
        let Some(r) = pivot else { continue };
        rows.swap(rank, r);
        let inv = rows[rank][col].recip();
        for e in rows[rank].iter_mut() {
            if !e.is_zero_expr() {
                *e = e.mul(&inv);
            }
        }
        for r2 in rank + 1..m {
            if rows[r2][col].is_zero_expr() {
                continue;
            }
            let f = rows[r2][col].clone();
            for c2 in 0..n {
                let delta = rows[rank][c2].mul(&f);
                rows[r2][c2] = rows[r2][c2].sub(&delta);
                if rows[r2][c2].cleared().is_zero_expr() {
                    rows[r2][c2] = Expr::zero();
                }
            }
        }
        rank += 1;
        if rank == m {
            break;
        }
    }
    rank
}
