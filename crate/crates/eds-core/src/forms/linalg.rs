use std::collections::BTreeSet;

use itertools::Itertools;
use std::sync::Arc;

use crate::scalar::Expr;

use super::form::{Blade, Form};

/// Solve A x = b over expression coefficients by Gauss-Jordan elimination.
///
/// Pivots are chosen by formal invertibility (constants first, then single
/// monomials, then any coefficient that does not clear to zero). Free
/// variables are set to zero. Returns `None` when a leftover row is not
/// provably consistent; callers that need soundness against disguised zero
/// pivots must verify the solution by substitution.
pub fn solve_linear(a: &[Vec<Expr>], b: &[Expr]) -> Option<Vec<Expr>> {
    let m = a.len();
    assert_eq!(m, b.len());
    let n = if m == 0 { 0 } else { a[0].len() };
    let mut rows: Vec<Vec<Expr>> = a
        .iter()
        .zip(b)
        .map(|(r, rhs)| {
            assert_eq!(r.len(), n);
            let mut v = r.clone();
            v.push(rhs.clone());
            v
        })
        .collect();

    let mut pivot_of_col: Vec<Option<usize>> = vec![None; n];
    let mut rank = 0usize;
    for col in 0..n {
        if rank == m {
            break;
        }
        let mut best: Option<(usize, u8)> = None; // (row, tier)
        for (r, row) in rows.iter().enumerate().skip(rank) {
            let c = row[col].cleared();
            if c.is_zero_expr() {
                continue;
            }
            let tier = if c.as_rat().is_some() {
                0
            } else if c.num_terms() == 1 {
                1
            } else {
                2
            };
            match best {
                Some((_, t)) if t <= tier => {}
                _ => best = Some((r, tier)),
            }
            if tier == 0 {
                break;
            }
        }
        let Some((r, _)) = best else { continue };
        rows.swap(rank, r);
        let inv = rows[rank][col].recip();
        for e in rows[rank].iter_mut() {
            if !e.is_zero_expr() {
                *e = e.mul(&inv);
            }
        }
        rows[rank][col] = Expr::one();
        for r2 in 0..m {
            if r2 == rank || rows[r2][col].is_zero_expr() {
                continue;
            }
            let f = rows[r2][col].clone();
            for c2 in 0..=n {
                let delta = rows[rank][c2].mul(&f);
                rows[r2][c2] = rows[r2][c2].sub(&delta);
                if rows[r2][c2].cleared().is_zero_expr() {
                    rows[r2][c2] = Expr::zero();
                }
            }
        }
        pivot_of_col[col] = Some(rank);
        rank += 1;
    }

    // consistency of the remaining rows
    for row in rows.iter().skip(rank) {
        if !row[n].cleared().is_zero_expr() {
            return None;
        }
    }

    let mut x = vec![Expr::zero(); n];
    for (col, p) in pivot_of_col.iter().enumerate() {
        if let Some(r) = p {
            x[col] = rows[*r][n].clone();
        }
    }
    Some(x)
}

/// Write `target` as a combination of `parts` with expression coefficients.
///
/// The coefficient system is solved blade by blade and the candidate is
/// verified by substitution, so a `Some` answer is exact.
pub fn express_in(target: &Form, parts: &[Form]) -> Option<Vec<Expr>> {
    if parts.is_empty() {
        return if target.is_zero_exact() { Some(Vec::new()) } else { None };
    }
    let space = target.space();
    for p in parts {
        assert!(Arc::ptr_eq(space, p.space()), "express_in across spaces");
        assert_eq!(p.degree(), target.degree(), "express_in degree mismatch");
    }
    let mut blades: BTreeSet<Blade> = BTreeSet::new();
    for (b, _) in target.terms() {
        blades.insert(b.clone());
    }
    for p in parts {
        for (b, _) in p.terms() {
            blades.insert(b.clone());
        }
    }
    let mut a = Vec::with_capacity(blades.len());
    let mut rhs = Vec::with_capacity(blades.len());
    for blade in &blades {
        let names: Vec<&str> = blade.iter().map(|&i| space.basis_name(i)).collect();
        let row: Vec<Expr> = parts.iter().map(|p| p.coefficient(&names)).collect();
        a.push(row);
        rhs.push(target.coefficient(&names));
    }
    let x = solve_linear(&a, &rhs)?;
    let mut recon = space.zero(target.degree());
    for (c, p) in x.iter().zip(parts) {
        recon = recon.add(&p.scale(c));
    }
    if recon.sub(target).is_zero_exact() {
        Some(x)
    } else {
        None
    }
}

/// Write `target` as sum_k g_k ^ c_k over the given ideal generators, the
/// form coefficients c_k drawn from all complementary basis blades.
///
/// The candidate set spans the degree slice of the algebraic ideal, so over
/// the coefficient field a `None` is a genuine non-membership, not a search
/// failure. A `Some` answer is exact (reconstructed and compared).
pub fn ideal_membership(target: &Form, gens: &[Form]) -> Option<Vec<Form>> {
    let space = target.space().clone();
    let d = target.degree();
    let dim = space.dim() as u8;
    let mut cands: Vec<Form> = Vec::new();
    let mut tags: Vec<(usize, Vec<u8>)> = Vec::new();
    for (k, g) in gens.iter().enumerate() {
        assert!(Arc::ptr_eq(g.space(), &space), "ideal_membership across spaces");
        if g.degree() > d || g.num_terms() == 0 {
            continue;
        }
        for b in (0..dim).combinations(d - g.degree()) {
            let w = g.wedge(&Form::monomial(space.clone(), &b, Expr::one()));
            if w.num_terms() > 0 {
                cands.push(w);
                tags.push((k, b));
            }
        }
    }
    let coeffs = express_in(target, &cands)?;
    let mut parts: Vec<Form> = gens
        .iter()
        .map(|g| space.zero(d.saturating_sub(g.degree())))
        .collect();
    for ((k, blade), c) in tags.into_iter().zip(coeffs) {
        if !c.is_zero_expr() {
            parts[k] = parts[k].add(&Form::monomial(space.clone(), &blade, c));
        }
    }
    Some(parts)
}
