//! Property tests pitting the canonical engine against naive tree-level
//! oracles: a recursive differentiator and a direct big-float evaluator.
//! Canonicalization must be idempotent, commute with differentiation, and
//! preserve numeric value.

use std::collections::BTreeMap;

use astro_float::{BigFloat, Consts, RoundingMode};
use eds_core::scalar::{NumEnv, SymbolTable, SyntaxTree};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const SYMS: [&str; 3] = ["x", "y", "z"];

fn gen_tree(rng: &mut StdRng, depth: usize) -> SyntaxTree {
    if depth == 0 {
        return match rng.gen_range(0..4) {
            0 => SyntaxTree::Num(rng.gen_range(-6i64..7).to_string()),
            1 => SyntaxTree::Num(format!("{}/{}", rng.gen_range(-5i64..6), rng.gen_range(1i64..5))),
            _ => SyntaxTree::Sym(SYMS[rng.gen_range(0..SYMS.len())].to_string()),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..12) {
        0 | 1 => SyntaxTree::Add(vec![gen_tree(rng, d), gen_tree(rng, d)]),
        2 | 3 => SyntaxTree::Mul(vec![gen_tree(rng, d), gen_tree(rng, d)]),
        4 => SyntaxTree::Neg(Box::new(gen_tree(rng, d))),
        5 => SyntaxTree::Div(Box::new(gen_tree(rng, d)), Box::new(gen_tree(rng, d))),
        6 => {
            let q = ["-2", "-1", "2", "3", "1/2"][rng.gen_range(0..5)];
            SyntaxTree::Pow(Box::new(gen_tree(rng, d)), q.to_string())
        }
        7 => SyntaxTree::App("sin".into(), vec![gen_tree(rng, d)]),
        8 => SyntaxTree::App("cos".into(), vec![gen_tree(rng, d)]),
        9 => SyntaxTree::App("exp".into(), vec![gen_tree(rng, d)]),
        10 => SyntaxTree::App("atan".into(), vec![gen_tree(rng, d)]),
        _ => SyntaxTree::App(
            "log".into(),
            vec![SyntaxTree::Add(vec![
                SyntaxTree::Num("1".into()),
                SyntaxTree::Pow(Box::new(gen_tree(rng, d)), "2".into()),
            ])],
        ),
    }
}

/// Naive recursive differentiator over raw trees.
fn d_tree(t: &SyntaxTree, v: &str) -> SyntaxTree {
    use SyntaxTree::*;
    match t {
        Num(_) | Pi => Num("0".into()),
        Sym(s) => Num(if s == v { "1" } else { "0" }.into()),
        Add(ts) => Add(ts.iter().map(|u| d_tree(u, v)).collect()),
        Neg(u) => Neg(Box::new(d_tree(u, v))),
        Mul(ts) => {
            assert_eq!(ts.len(), 2);
            let (a, b) = (&ts[0], &ts[1]);
            Add(vec![
                Mul(vec![d_tree(a, v), b.clone()]),
                Mul(vec![a.clone(), d_tree(b, v)]),
            ])
        }
        Div(a, b) => Div(
            Box::new(Add(vec![
                Mul(vec![d_tree(a, v), (**b).clone()]),
                Neg(Box::new(Mul(vec![(**a).clone(), d_tree(b, v)]))),
            ])),
            Box::new(Pow(b.clone(), "2".into())),
        ),
        Pow(b, q) => {
            // q * b^(q-1) * b'
            let qr: f64 = if q.contains('/') {
                let mut it = q.splitn(2, '/');
                let p: f64 = it.next().unwrap().parse().unwrap();
                let d: f64 = it.next().unwrap().parse().unwrap();
                p / d
            } else {
                q.parse().unwrap()
            };
            let qm1 = if q.contains('/') {
                // only 1/2 occurs fractionally in generated trees
                assert_eq!(q, "1/2");
                "-1/2".to_string()
            } else {
                format!("{}", qr as i64 - 1)
            };
            Mul(vec![
                Num(q.clone()),
                Pow(b.clone(), qm1),
                d_tree(b, v),
            ])
        }
        App(name, args) => {
            let u = &args[0];
            let du = d_tree(u, v);
            let outer = match name.as_str() {
                "sin" => App("cos".into(), vec![u.clone()]),
                "cos" => Neg(Box::new(App("sin".into(), vec![u.clone()]))),
                "exp" => App("exp".into(), vec![u.clone()]),
                "log" => Pow(Box::new(u.clone()), "-1".into()),
                "atan" => Pow(
                    Box::new(Add(vec![Num("1".into()), Pow(Box::new(u.clone()), "2".into())])),
                    "-1".into(),
                ),
                other => App(format!("{other}'"), vec![u.clone()]),
            };
            Mul(vec![outer, du])
        }
        UserApp { .. } => unreachable!("generator emits App only"),
    }
}

/// Naive big-float evaluator over raw trees. Returns None on domain trouble.
fn eval_tree(
    t: &SyntaxTree,
    vals: &BTreeMap<String, BigFloat>,
    p: usize,
    cc: &mut Consts,
) -> Option<BigFloat> {
    use SyntaxTree::*;
    let rm = RoundingMode::ToEven;
    Some(match t {
        Num(s) => {
            if let Some((a, b)) = s.split_once('/') {
                let a: i64 = a.parse().ok()?;
                let b: i64 = b.parse().ok()?;
                BigFloat::from_i64(a, p).div(&BigFloat::from_i64(b, p), p, rm)
            } else {
                BigFloat::from_i64(s.parse().ok()?, p)
            }
        }
        Pi => cc.pi(p, rm),
        Sym(s) => vals.get(s)?.clone(),
        Add(ts) => {
            let mut acc = BigFloat::from_i64(0, p);
            for u in ts {
                acc = acc.add(&eval_tree(u, vals, p, cc)?, p, rm);
            }
            acc
        }
        Mul(ts) => {
            let mut acc = BigFloat::from_i64(1, p);
            for u in ts {
                acc = acc.mul(&eval_tree(u, vals, p, cc)?, p, rm);
            }
            acc
        }
        Neg(u) => eval_tree(u, vals, p, cc)?.neg(),
        Div(a, b) => {
            let den = eval_tree(b, vals, p, cc)?;
            if den.abs() < tiny(p) {
                return None;
            }
            eval_tree(a, vals, p, cc)?.div(&den, p, rm)
        }
        Pow(b, q) => {
            let base = eval_tree(b, vals, p, cc)?;
            match q.as_str() {
                "2" => base.mul(&base, p, rm),
                "3" => base.mul(&base, p, rm).mul(&base, p, rm),
                "-1" => {
                    if base.abs() < tiny(p) {
                        return None;
                    }
                    BigFloat::from_i64(1, p).div(&base, p, rm)
                }
                "-2" => {
                    if base.abs() < tiny(p) {
                        return None;
                    }
                    let sq = base.mul(&base, p, rm);
                    BigFloat::from_i64(1, p).div(&sq, p, rm)
                }
                "-1/2" => {
                    if base.sign() != Some(astro_float::Sign::Pos) || base.abs() < tiny(p) {
                        return None;
                    }
                    BigFloat::from_i64(1, p).div(&base.sqrt(p, rm), p, rm)
                }
                "1/2" => {
                    if base.sign() == Some(astro_float::Sign::Neg) {
                        return None;
                    }
                    base.sqrt(p, rm)
                }
                _ => return None,
            }
        }
        App(name, args) => {
            let u = eval_tree(&args[0], vals, p, cc)?;
            match name.as_str() {
                "sin" => u.sin(p, rm, cc),
                "cos" => u.cos(p, rm, cc),
                "exp" => {
                    // keep magnitudes sane
                    if u.abs() > BigFloat::from_i64(80, p) {
                        return None;
                    }
                    u.exp(p, rm, cc)
                }
                "atan" => u.atan(p, rm, cc),
                "log" => {
                    if u.sign() != Some(astro_float::Sign::Pos) || u.is_zero() {
                        return None;
                    }
                    u.ln(p, rm, cc)
                }
                _ => return None,
            }
        }
        UserApp { .. } => return None,
    })
}

fn tiny(p: usize) -> BigFloat {
    BigFloat::from_f64(1e-12, p)
}

fn close(a: &BigFloat, b: &BigFloat, p: usize) -> bool {
    let rm = RoundingMode::ToEven;
    let diff = a.sub(b, p, rm).abs();
    let scale = {
        let m = if a.abs() > b.abs() { a.abs() } else { b.abs() };
        if m < BigFloat::from_i64(1, p) {
            BigFloat::from_i64(1, p)
        } else {
            m
        }
    };
    diff.div(&scale, p, rm) < BigFloat::from_f64(1e-40, p)
}

#[test]
fn canonicalization_is_idempotent() {
    let table = SymbolTable::new();
    let mut rng = StdRng::seed_from_u64(42);
    let mut checked = 0;
    while checked < 400 {
        let t = gen_tree(&mut rng, 4);
        let Ok(e) = t.to_expr(&table) else { continue };
        let back = SyntaxTree::from_expr(&e);
        let e2 = back.to_expr(&table).expect("canonical tree re-canonicalizes");
        assert_eq!(e2, e, "round trip changed {t:?}");
        checked += 1;
    }
}

#[test]
fn differentiation_matches_naive_oracle() {
    let table = SymbolTable::new();
    let mut rng = StdRng::seed_from_u64(43);
    let mut checked = 0;
    while checked < 400 {
        let t = gen_tree(&mut rng, 4);
        let Ok(e) = t.to_expr(&table) else { continue };
        let dt = d_tree(&t, "x");
        let Ok(oracle) = dt.to_expr(&table) else { continue };
        let mine = e.diff("x");
        assert!(
            mine.sub(&oracle).cleared().is_zero_expr(),
            "derivative mismatch on {t:?}:\n  engine {mine}\n  oracle {oracle}"
        );
        checked += 1;
    }
}

#[test]
fn canonicalization_preserves_value() {
    let table = SymbolTable::new();
    let mut rng = StdRng::seed_from_u64(44);
    let p = 192usize;
    let mut cc = Consts::new().unwrap();
    let mut env = NumEnv::with_digits(50);
    let mut checked = 0;
    while checked < 250 {
        let t = gen_tree(&mut rng, 4);
        let Ok(e) = t.to_expr(&table) else { continue };
        // positive sample window matches the engine's principal-branch power rules
        let mut vals = BTreeMap::new();
        for s in SYMS {
            let v = 0.3 + rng.gen::<f64>() * 1.4;
            vals.insert(s.to_string(), BigFloat::from_f64(v, p));
        }
        let Some(naive) = eval_tree(&t, &vals, p, &mut cc) else { continue };
        let Ok(engine) = env.eval(&e, &vals) else { continue };
        assert!(
            close(&naive, &engine, p),
            "value changed under canonicalization of {t:?}\n  naive  {naive}\n  engine {engine}\n  expr {e}"
        );
        checked += 1;
    }
}

#[test]
fn derivative_matches_difference_quotient() {
    // spot numeric check of the symbolic derivative on a fixed expression,
    // with the step built exactly in rational arithmetic
    use eds_core::scalar::{rat_i, rat_q, Rat};
    let e = eds_core::scalar::expr("sin(x^2)*exp(x) + atan(x)/x");
    let d = e.diff("x");
    let p = 300usize;
    let mut env = NumEnv::with_digits(80);
    let x0 = rat_q(7, 10);
    let h: Rat = rat_i(1) / Rat::from_integer(num_bigint::BigInt::from(10u64).pow(25u32));
    let at = |x: &Rat, env: &mut NumEnv| {
        let mut vals = BTreeMap::new();
        vals.insert("x".to_string(), env.from_rat(x));
        env.eval(&e, &vals).unwrap()
    };
    let rm = RoundingMode::ToEven;
    let f1 = at(&(x0.clone() + h.clone()), &mut env);
    let f0 = at(&(x0.clone() - h.clone()), &mut env);
    let two_h = env.from_rat(&(h.clone() + h.clone()));
    let quot = f1.sub(&f0, p, rm).div(&two_h, p, rm);
    let mut vals = BTreeMap::new();
    vals.insert("x".to_string(), env.from_rat(&x0));
    let sym = env.eval(&d, &vals).unwrap();
    let err = quot.sub(&sym, p, rm).abs();
    assert!(err < env.from_f64(1e-20), "difference quotient err {err}");
}
