use std::collections::BTreeMap;
use std::sync::Arc;

use crate::scalar::Expr;

use super::form::Form;
use super::space::{CoframeSpace, FormError};

/// A smooth map between coframed spaces, described by what it pulls back:
/// each target basis 1-form goes to a 1-form on the source, each target
/// scalar to a source expression. Symbols without an image are treated as
/// shared constants.
#[derive(Clone)]
pub struct CoframeMap {
    source: Arc<CoframeSpace>,
    target: Arc<CoframeSpace>,
    basis_images: Vec<Form>,
    scalar_images: BTreeMap<String, Expr>,
}

impl CoframeMap {
    pub fn new(
        source: Arc<CoframeSpace>,
        target: Arc<CoframeSpace>,
        basis_images: Vec<(&str, Form)>,
        scalar_images: Vec<(&str, Expr)>,
    ) -> Result<CoframeMap, FormError> {
        let mut images = vec![None; target.dim()];
        for (name, f) in basis_images {
            let i = target
                .basis_index(name)
                .ok_or_else(|| FormError(format!("no basis 1-form `{name}` on {}", target.name)))?;
            if !Arc::ptr_eq(f.space(), &source) {
                return Err(FormError(format!("image of `{name}` does not live on the source")));
            }
            if f.degree() != 1 {
                return Err(FormError(format!("image of `{name}` must be a 1-form")));
            }
            images[i as usize] = Some(f);
        }
        let basis_images = images
            .into_iter()
            .enumerate()
            .map(|(i, f)| {
                f.ok_or_else(|| {
                    FormError(format!("missing image for basis 1-form `{}`", target.basis_name(i as u8)))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let scalar_images = scalar_images
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        Ok(CoframeMap { source, target, basis_images, scalar_images })
    }

    pub fn source(&self) -> &Arc<CoframeSpace> {
        &self.source
    }

    pub fn target(&self) -> &Arc<CoframeSpace> {
        &self.target
    }

    pub fn pull_expr(&self, e: &Expr) -> Expr {
        e.subst(&self.scalar_images)
    }

    pub fn pullback(&self, form: &Form) -> Form {
        assert!(
            Arc::ptr_eq(form.space(), &self.target),
            "pullback expects a form on the target space"
        );
        let mut out = self.source.zero(form.degree());
        for (blade, c) in form.terms() {
            let mut acc = self.source.scalar(self.pull_expr(c));
            for &i in blade {
                acc = acc.wedge(&self.basis_images[i as usize]);
            }
            out = out.add(&acc);
        }
        out
    }

    /// Defect forms pullback(d x) - d(pullback x), for every basis 1-form and
    /// every mapped scalar with a registered differential. All zero exactly
    /// when the map data is consistent with d.
    pub fn d_commutation_defects(&self) -> Vec<(String, Form)> {
        let mut out = Vec::new();
        for i in 0..self.target.dim() {
            let name = self.target.basis_name(i as u8);
            let e = self.target.basis_form(name);
            let defect = self.pullback(&e.d()).sub(&self.pullback(&e).d());
            out.push((name.to_string(), defect));
        }
        for name in self.scalar_images.keys() {
            if let Some(dx) = self.target.d_scalar(name) {
                let image = self.scalar_images[name].clone();
                let defect = self
                    .pullback(&dx)
                    .sub(&Form::d_of_expr(&self.source, &image));
                out.push((name.clone(), defect));
            }
        }
        out
    }

    /// Strict structural check: every d-commutation defect clears to zero.
    pub fn verify(&self) -> Result<(), FormError> {
        for (name, defect) in self.d_commutation_defects() {
            if !defect.is_zero_exact() {
                return Err(FormError(format!(
                    "pullback does not commute with d on `{name}`: defect {defect}"
                )));
            }
        }
        Ok(())
    }
}
