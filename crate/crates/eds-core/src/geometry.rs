//! Moving-frame models for Euclidean hypersurface geometry.
//!
//! The base object is the adapted-frame coframe over oriented hypersurfaces
//! of E^{n+1}: tautological forms om1..omn and th (the normal component),
//! connection forms pi_i = <de_0, e_i> and om_i_j = <de_j, e_i>.  Scalars
//! for the position vector and for constant ambient vectors are carried
//! with their structure-induced differentials, so translation, rotation and
//! dilation fields can be written down and differentiated exactly.

use std::sync::Arc;

use crate::forms::{CoframeSpace, Form, FormError, SpaceBuilder, VectorField};
use crate::scalar::Expr;

/// Coframe of the unit-sphere bundle of E^{n+1}, the contact manifold of
/// oriented hypersurface elements.
///
/// Basis: om1..omn (tangent tautological), th (normal tautological),
/// pi1..pin (shape connection), om{i}_{j} for i < j (tangent rotation).
/// Structure equations are the flat ambient ones; d^2 = 0 is checked at
/// build time.
///
/// Scalar families, all components against the moving frame (index 0 is the
/// normal direction):
///   X0..Xn  position <x, e_a>;
///   A0..An, U0..Un, V0..Vn  three constant ambient vectors <c, e_a>.
pub struct EuclideanFrame {
    n: usize,
    space: Arc<CoframeSpace>,
}

fn om(i: usize) -> String {
    format!("om{i}")
}

fn pi(i: usize) -> String {
    format!("pi{i}")
}

fn conn(i: usize, j: usize) -> (String, i64) {
    if i < j {
        (format!("om{i}_{j}"), 1)
    } else {
        (format!("om{j}_{i}"), -1)
    }
}

impl EuclideanFrame {
    pub fn new(n: usize) -> Result<EuclideanFrame, FormError> {
        if n < 2 || n > 8 {
            return Err(FormError("hypersurface dimension must be in 2..=8".into()));
        }
        let mut names: Vec<String> = (1..=n).map(om).collect();
        names.push("th".into());
        names.extend((1..=n).map(pi));
        for i in 1..=n {
            for j in (i + 1)..=n {
                names.push(conn(i, j).0);
            }
        }
        let mut b = SpaceBuilder::new(format!("Frames(E{})", n + 1));
        b = b.basis(names.iter().map(|s| s.as_str()));

        // d th = -sum pi_i ^ om^i
        let th_terms: Vec<(Vec<String>, i64)> =
            (1..=n).map(|i| (vec![pi(i), om(i)], -1)).collect();
        b = push_d(b, "th", th_terms);

        // d om^i = pi_i ^ th - sum_j om^i_j ^ om^j
        for i in 1..=n {
            let mut terms = vec![(vec![pi(i), "th".to_string()], 1)];
            for j in 1..=n {
                if j != i {
                    let (c, s) = conn(i, j);
                    terms.push((vec![c, om(j)], -s));
                }
            }
            b = push_d(b, &om(i), terms);
        }

        // d pi_i = -sum_j pi_j ^ om^j_i
        for i in 1..=n {
            let mut terms = Vec::new();
            for j in 1..=n {
                if j != i {
                    let (c, s) = conn(j, i);
                    terms.push((vec![pi(j), c], -s));
                }
            }
            b = push_d(b, &pi(i), terms);
        }

        // d om^i_j = pi_i ^ pi_j - sum_k om^i_k ^ om^k_j
        for i in 1..=n {
            for j in (i + 1)..=n {
                let mut terms = vec![(vec![pi(i), pi(j)], 1)];
                for k in 1..=n {
                    if k != i && k != j {
                        let (c1, s1) = conn(i, k);
                        let (c2, s2) = conn(k, j);
                        terms.push((vec![c1, c2], -s1 * s2));
                    }
                }
                b = push_d(b, &conn(i, j).0, terms);
            }
        }

        // position: dX_a = <dx, e_a> + <x, de_a>
        b = b.scalar(
            "X0",
            std::iter::once(("th".to_string(), Expr::one()))
                .chain((1..=n).map(|i| (pi(i), Expr::sym(format!("X{i}")).neg())))
                .collect::<Vec<_>>()
                .iter()
                .map(|(s, e)| (s.as_str(), e.clone()))
                .collect(),
        );
        for i in 1..=n {
            let mut terms: Vec<(String, Expr)> = vec![
                (om(i), Expr::one()),
                (pi(i), Expr::sym("X0")),
            ];
            for j in 1..=n {
                if j != i {
                    let (c, s) = conn(j, i);
                    terms.push((c, Expr::sym(format!("X{j}")).scale_i(s)));
                }
            }
            let name = format!("X{i}");
            b = b.scalar(&name, terms.iter().map(|(s, e)| (s.as_str(), e.clone())).collect());
        }

        // constant vectors: dC_a = <c, de_a>
        for fam in ["A", "U", "V"] {
            let zero_terms: Vec<(String, Expr)> =
                (1..=n).map(|i| (pi(i), Expr::sym(format!("{fam}{i}")).neg())).collect();
            b = b.scalar(
                &format!("{fam}0"),
                zero_terms.iter().map(|(s, e)| (s.as_str(), e.clone())).collect(),
            );
            for i in 1..=n {
                let mut terms: Vec<(String, Expr)> = vec![(pi(i), Expr::sym(format!("{fam}0")))];
                for j in 1..=n {
                    if j != i {
                        let (c, s) = conn(j, i);
                        terms.push((c, Expr::sym(format!("{fam}{j}")).scale_i(s)));
                    }
                }
                let name = format!("{fam}{i}");
                b = b.scalar(&name, terms.iter().map(|(s, e)| (s.as_str(), e.clone())).collect());
            }
        }

        Ok(EuclideanFrame { n, space: b.build()? })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn space(&self) -> &Arc<CoframeSpace> {
        &self.space
    }

    /// Tangent tautological form om^i, i in 1..=n.
    pub fn omega(&self, i: usize) -> Form {
        self.space.basis_form(&om(i))
    }

    pub fn theta(&self) -> Form {
        self.space.basis_form("th")
    }

    pub fn pi(&self, i: usize) -> Form {
        self.space.basis_form(&pi(i))
    }

    /// Connection form om^i_j for any i != j (antisymmetric).
    pub fn connection(&self, i: usize, j: usize) -> Form {
        let (c, s) = conn(i, j);
        self.space.basis_form(&c).scale_i(s)
    }

    /// Induced hypersurface volume om^1 ^ ... ^ om^n.
    pub fn area(&self) -> Form {
        let mut out = self.space.scalar(Expr::one());
        for i in 1..=self.n {
            out = out.wedge(&self.omega(i));
        }
        out
    }

    /// (n-1)-form om_(i) with om^i ^ om_(i) = area (no sum).
    pub fn area_hook(&self, i: usize) -> Form {
        let mut out = self.space.scalar(if i % 2 == 1 { Expr::one() } else { Expr::from_int(-1) });
        for j in 1..=self.n {
            if j != i {
                out = out.wedge(&self.omega(j));
            }
        }
        out
    }

    /// Ambient volume along the hypersurface element: th ^ area.
    pub fn ambient_volume(&self) -> Form {
        self.theta().wedge(&self.area())
    }

    /// Euler-Lagrange form of the area functional: d(area) = th ^ psi.
    pub fn psi_minimal(&self) -> Form {
        let mut out = self.space.zero(self.n);
        for i in 1..=self.n {
            out = out.sub(&self.pi(i).wedge(&self.area_hook(i)));
        }
        out
    }

    /// Euler-Lagrange form of the H-weighted functional: psi_minimal + H area.
    pub fn psi_cmc(&self, h: &Expr) -> Form {
        self.psi_minimal().add(&self.area().scale(h))
    }

    /// Position component <x, e_a>, a in 0..=n.
    pub fn position(&self, a: usize) -> Expr {
        Expr::sym(format!("X{a}"))
    }

    /// Component <c, e_a> of the named constant family (A, U or V).
    pub fn constant(&self, family: char, a: usize) -> Expr {
        Expr::sym(format!("{family}{a}"))
    }

    /// Lift of the translation flow by the constant vector A.  Semibasic
    /// pairings only: the frame part of the flow is trivial.
    pub fn translation_field(&self) -> VectorField {
        let mut pairs: Vec<(String, Expr)> = vec![("th".into(), self.constant('A', 0))];
        for i in 1..=self.n {
            pairs.push((om(i), self.constant('A', i)));
        }
        self.field(pairs)
    }

    /// Lift of the rotation flow exp(t(UV^T - VU^T)); connection pairings
    /// carry the frame rotation.
    pub fn rotation_field(&self) -> VectorField {
        let dot = |f: char| -> Expr {
            let mut s = Expr::zero();
            for b in 0..=self.n {
                s = s.add(&self.constant(f, b).mul(&self.position(b)));
            }
            s
        };
        let (ux, vx) = (dot('U'), dot('V'));
        let w = |a: usize| -> Expr {
            ux.mul(&self.constant('V', a)).sub(&vx.mul(&self.constant('U', a)))
        };
        let rot = |a: usize, b: usize| -> Expr {
            self.constant('U', a)
                .mul(&self.constant('V', b))
                .sub(&self.constant('V', a).mul(&self.constant('U', b)))
        };
        let mut pairs: Vec<(String, Expr)> = vec![("th".into(), w(0))];
        for i in 1..=self.n {
            pairs.push((om(i), w(i)));
            pairs.push((pi(i), rot(0, i)));
        }
        for i in 1..=self.n {
            for j in (i + 1)..=self.n {
                pairs.push((conn(i, j).0, rot(i, j)));
            }
        }
        self.field(pairs)
    }

    /// Lift of the dilation flow x -> e^t x.
    pub fn dilation_field(&self) -> VectorField {
        let mut pairs: Vec<(String, Expr)> = vec![("th".into(), self.position(0))];
        for i in 1..=self.n {
            pairs.push((om(i), self.position(i)));
        }
        self.field(pairs)
    }

    fn field(&self, pairs: Vec<(String, Expr)>) -> VectorField {
        let borrowed: Vec<(&str, Expr)> =
            pairs.iter().map(|(s, e)| (s.as_str(), e.clone())).collect();
        VectorField::from_pairs(self.space.clone(), &borrowed)
    }
}

fn push_d(b: SpaceBuilder, of: &str, terms: Vec<(Vec<String>, i64)>) -> SpaceBuilder {
    let t: Vec<(Vec<&str>, Expr)> = terms
        .iter()
        .map(|(names, c)| (names.iter().map(|s| s.as_str()).collect(), Expr::from_int(*c)))
        .collect();
    b.d(of, t)
}
