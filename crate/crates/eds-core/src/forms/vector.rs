use std::fmt;
use std::sync::Arc;

use crate::scalar::Expr;

use super::space::CoframeSpace;

/// A vector field given by its pairings with the coframe: v = sum_i <v, e_i> E_i
/// where (E_i) is the frame dual to the basis 1-forms.
#[derive(Clone)]
pub struct VectorField {
    space: Arc<CoframeSpace>,
    pairings: Vec<Expr>,
}

impl VectorField {
    pub fn new(space: Arc<CoframeSpace>, pairings: Vec<Expr>) -> VectorField {
        assert_eq!(
            pairings.len(),
            space.dim(),
            "vector field needs one pairing per basis 1-form"
        );
        VectorField { space, pairings }
    }

    /// Build from (basis name, pairing) pairs; omitted entries are zero.
    pub fn from_pairs(space: Arc<CoframeSpace>, pairs: &[(&str, Expr)]) -> VectorField {
        let mut pairings = vec![Expr::zero(); space.dim()];
        for (name, e) in pairs {
            let i = space
                .basis_index(name)
                .unwrap_or_else(|| panic!("no basis 1-form `{name}` on {}", space.name));
            pairings[i as usize] = pairings[i as usize].add(e);
        }
        VectorField { space, pairings }
    }

    pub fn space(&self) -> &Arc<CoframeSpace> {
        &self.space
    }

    pub fn pairing(&self, i: u8) -> &Expr {
        &self.pairings[i as usize]
    }

    pub fn pairings(&self) -> &[Expr] {
        &self.pairings
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        assert!(Arc::ptr_eq(&self.space, &other.space));
        let pairings = self
            .pairings
            .iter()
            .zip(&other.pairings)
            .map(|(a, b)| a.add(b))
            .collect();
        VectorField { space: self.space.clone(), pairings }
    }

    pub fn scale(&self, c: &Expr) -> VectorField {
        let pairings = self.pairings.iter().map(|a| a.mul(c)).collect();
        VectorField { space: self.space.clone(), pairings }
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, p) in self.pairings.iter().enumerate() {
            if p.is_zero_expr() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({p})*D[{}]", self.space.basis_name(i as u8))?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}
